//! Morse indices: negative directions of the second variation
//! `Q(psi) = int |grad psi|^2 + 2 int |K| e^u psi^2 - oint h e^{u/2} psi^2`
//! measured against the H^1 inner product.

use crate::domain::{DomainSpec, Mesh};
use crate::energy::{assemble, Problem, StateField};
use crate::error::{Error, Result};
use crate::exact::{disk_eigenfunction, HalfPlaneProfile};
use crate::fields::{CurvatureSpec, Field};
use crate::linalg::{dot, smallest_eigenpairs, CsrMatrix, EigOptions, Ldlt};
use serde::Serialize;
use std::sync::Arc;

pub const DEFAULT_TOL_EIG: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct Truncation {
    pub domain: DomainSpec,
    pub radius: f64,
    /// `"dirichlet"` on the artificial arc, `"natural"` otherwise.
    pub boundary_condition: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    /// Negative inertia of `Q + threshold * B`: the number of eigenvalues below `-threshold`.
    pub negative_count: usize,
    /// Smallest generalized eigenvalues, ascending; may be fewer than `negative_count`.
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Nodal values per dof (zero on removed Dirichlet dofs).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvectors: Option<Vec<Vec<f64>>>,
    /// Threshold `tol_eig * max |mu|` actually used.
    pub threshold: f64,
    pub n_dofs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Truncation>,
}

/// Smallest `k` eigenvalues of the pencil `(q, b)`; the negative count comes from the
/// inertia of `q + threshold * b` (Sylvester), so it is exact even when it exceeds `k`.
pub fn pencil_spectrum(q: &CsrMatrix, b: &CsrMatrix, k: usize, tol_eig: f64, keep_vectors: bool) -> Result<SpectrumReport> {
    let n = q.dim();
    if n == 0 {
        return Err(Error::Eigensolver("empty eigenproblem".into()));
    }
    let k = k.max(1).min(n);
    let pairs = smallest_eigenpairs(q, b, k, EigOptions::default())?;
    let scale = pairs.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = tol_eig * scale.max(f64::MIN_POSITIVE);
    let below = pairs.values.iter().filter(|&&v| v < -threshold).count();
    let inertia = Ldlt::factor(&q.linear_combination(1.0, b, threshold))?.inertia();
    if below != inertia.negative.min(k) {
        return Err(Error::Eigensolver(format!(
            "eigenvalue count {below} disagrees with inertia {} at threshold {threshold:.3e}",
            inertia.negative
        )));
    }
    Ok(SpectrumReport {
        negative_count: inertia.negative,
        eigenvalues: pairs.values,
        residuals: pairs.residuals,
        eigenvectors: keep_vectors.then_some(pairs.vectors),
        threshold,
        n_dofs: n,
        truncation: None,
    })
}

/// Morse index of `I_eps` at `u` with respect to the H^1 product.
pub fn morse_index(problem: &Problem, u: &StateField, eps: f64, k: usize, tol_eig: f64) -> Result<SpectrumReport> {
    let q = problem.hessian(u, eps)?;
    pencil_spectrum(&q, &problem.ops.h1, k, tol_eig, true)
}

/// Negative inertia of the Hessian of `I_eps`, without eigenvalues.
pub fn hessian_negative_count(problem: &Problem, u: &StateField, eps: f64, shift: f64) -> Result<usize> {
    let q = problem.hessian(u, eps)?;
    Ok(Ldlt::factor(&q.linear_combination(1.0, &problem.ops.h1, shift))?.inertia().negative)
}

fn b_correlation(b: &CsrMatrix, x: &[f64], y: &[f64]) -> f64 {
    let bx = b.mul_vec(x);
    let by = b.mul_vec(y);
    dot(x, &by).abs() / (dot(x, &bx) * dot(y, &by)).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct DiskFormReport {
    pub d0: f64,
    pub radius: f64,
    /// Spectrum at the requested level.
    pub spectrum: SpectrumReport,
    /// Eigenvalues one level coarser.
    pub coarse_eigenvalues: Vec<f64>,
    /// Richardson extrapolation `(4 mu_L - mu_{L-1}) / 3` of the eigenvalues.
    pub extrapolated_eigenvalues: Vec<f64>,
    /// Count of extrapolated eigenvalues below `-tol_eig * max |mu|`.
    pub index: usize,
    /// H^1 correlation of the lowest eigenvector of `Q_R psi = mu sqrt(rho(R)) psi|_{dD}`
    /// with `gamma = (1 + |x|^2) / (1 - |x|^2)`.
    pub first_correlation: f64,
    /// Lowest eigenvalue of that boundary pencil; `1 / D0 - D0` in the continuum.
    pub boundary_eigenvalue: f64,
    /// `|Q_R(f)| / |f|_{H^1}^2` for `f = x_i / (1 - |x|^2)`.
    pub kernel_residuals: [f64; 2],
    /// The same ratio extrapolated from `level - 1`.
    pub kernel_extrapolated: [f64; 2],
}

/// `R = D0 - sqrt(D0^2 - 1)`.
pub fn disk_radius(d0: f64) -> Result<f64> {
    if !(d0 > 1.0 && d0.is_finite()) {
        return Err(Error::Precondition(format!("D0 must exceed 1, got {d0}")));
    }
    Ok(d0 - (d0 * d0 - 1.0).sqrt())
}

fn rho(s2: f64) -> f64 {
    4.0 / (1.0 - s2).powi(2)
}

struct DiskForm {
    q: CsrMatrix,
    b: CsrMatrix,
    /// `sqrt(rho(R))`-weighted boundary mass.
    wb: Vec<f64>,
    xs: Vec<[f64; 2]>,
}

fn disk_form(d0: f64, radius: f64, level: u32) -> Result<DiskForm> {
    let mesh = DomainSpec::disk(radius, level).build_mesh()?;
    let ops = assemble(&mesh)?;
    let xs = mesh.dof_coords();
    let sr = rho(radius * radius).sqrt();
    let wb: Vec<f64> = ops.boundary_mass[0].iter().map(|m| sr * m).collect();
    let diag: Vec<f64> = (0..mesh.n_dofs)
        .map(|i| {
            let x = xs[i];
            2.0 * ops.mass[i] * rho(x[0] * x[0] + x[1] * x[1]) - d0 * wb[i]
        })
        .collect();
    Ok(DiskForm { q: ops.stiffness.add_diagonal(&diag), b: ops.h1, wb, xs })
}

/// Lowest eigenpair of `Q psi = mu W psi` with `W` the (singular) boundary weight,
/// by inverse iteration shifted below the Rayleigh quotient of `start`.
fn lowest_boundary_pair(q: &CsrMatrix, w: &[f64], start: &[f64]) -> Result<(f64, Vec<f64>)> {
    let wq = |x: &[f64]| x.iter().zip(w).map(|(a, b)| a * a * b).sum::<f64>();
    let ray = q.quadratic_form(start) / wq(start);
    let mut sigma = ray - 1.0 - ray.abs();
    let f = loop {
        let shifted = q.add_diagonal(&w.iter().map(|x| -sigma * x).collect::<Vec<_>>());
        let f = Ldlt::factor(&shifted)?;
        if f.is_positive_definite() {
            break f;
        }
        sigma = 2.0 * sigma - 1.0;
        if sigma < -1e12 {
            return Err(Error::Eigensolver("boundary pencil shift not found".into()));
        }
    };
    let mut x = start.to_vec();
    let mut mu = ray;
    for _ in 0..500 {
        let wx: Vec<f64> = x.iter().zip(w).map(|(a, b)| a * b).collect();
        let mut y = f.solve(&wx);
        let nrm = wq(&y).sqrt();
        y.iter_mut().for_each(|v| *v /= nrm);
        let mu_new = q.quadratic_form(&y);
        x = y;
        if (mu_new - mu).abs() <= 1e-14 * mu_new.abs().max(1.0) {
            return Ok((mu_new, x));
        }
        mu = mu_new;
    }
    Ok((mu, x))
}

/// Index of `Q_R(psi) = int |grad psi|^2 + 2 int rho psi^2 - D0 oint sqrt(rho(R)) psi^2` on `D_R`.
///
/// The form has a two-dimensional kernel whose discrete eigenvalues are `O(h^2)` of
/// either sign, so the index is counted on eigenvalues extrapolated from `level - 1`.
pub fn disk_form_index(d0: f64, level: u32, k: usize, tol_eig: f64) -> Result<DiskFormReport> {
    if level == 0 {
        return Err(Error::Precondition("disk form index needs level >= 1".into()));
    }
    let radius = disk_radius(d0)?;
    let fine = disk_form(d0, radius, level)?;
    let coarse = disk_form(d0, radius, level - 1)?;
    let mut spectrum = pencil_spectrum(&fine.q, &fine.b, k, tol_eig, true)?;
    let coarse_eigenvalues = pencil_spectrum(&coarse.q, &coarse.b, spectrum.eigenvalues.len(), tol_eig, false)?.eigenvalues;
    let extrapolated_eigenvalues: Vec<f64> =
        spectrum.eigenvalues.iter().zip(&coarse_eigenvalues).map(|(f, c)| (4.0 * f - c) / 3.0).collect();
    let scale = extrapolated_eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let index = extrapolated_eigenvalues.iter().filter(|&&v| v < -tol_eig * scale).count();
    spectrum.truncation =
        Some(Truncation { domain: DomainSpec::disk(radius, level), radius, boundary_condition: "natural".into() });
    let gamma: Vec<f64> = fine.xs.iter().map(|&x| disk_eigenfunction(x)).collect::<Result<_>>()?;
    let (boundary_eigenvalue, first) = lowest_boundary_pair(&fine.q, &fine.wb, &gamma)?;
    let first_correlation = b_correlation(&fine.b, &first, &gamma);
    let kernel = |form: &DiskForm, i: usize| {
        let f: Vec<f64> = form.xs.iter().map(|x| x[i] / (1.0 - x[0] * x[0] - x[1] * x[1])).collect();
        form.q.quadratic_form(&f) / form.b.quadratic_form(&f)
    };
    let mut kernel_residuals = [0.0; 2];
    let mut kernel_extrapolated = [0.0; 2];
    for i in 0..2 {
        let (f, c) = (kernel(&fine, i), kernel(&coarse, i));
        kernel_residuals[i] = f.abs();
        kernel_extrapolated[i] = ((4.0 * f - c) / 3.0).abs();
    }
    Ok(DiskFormReport {
        d0,
        radius,
        spectrum,
        coarse_eigenvalues,
        extrapolated_eigenvalues,
        index,
        first_correlation,
        boundary_eigenvalue,
        kernel_residuals,
        kernel_extrapolated,
    })
}

/// Half-disk mesh used for profile truncations; graded towards the origin.
pub fn profile_domain(profile: &HalfPlaneProfile, radius: f64, level: u32) -> DomainSpec {
    match profile {
        HalfPlaneProfile::RescaledLimit { .. } => {
            let n = ((radius / 2.5).ceil() as usize).max(2);
            DomainSpec::half_disk(radius, level).with_base(n, 1)
        }
        _ => DomainSpec::graded_half_disk(radius, 1.0, level),
    }
}

/// The profile as a state on a half-disk with `K = -1`, `h = D0` on the flat side.
pub fn profile_problem(profile: &HalfPlaneProfile, mesh: Arc<Mesh>) -> Result<(Problem, StateField)> {
    let spec = CurvatureSpec::new(Field::Const(-1.0), vec![Field::Const(profile.d0()), Field::Const(0.0)], 0.0)
        .with_h_bg(vec![Field::Const(0.0), Field::Const(0.0)]);
    let problem = Problem::new(mesh.clone(), spec)?;
    let values = mesh
        .dof_coords()
        .iter()
        .map(|x| profile.eval(x[0], x[1].max(0.0)))
        .collect::<Result<Vec<f64>>>()?;
    Ok((problem, StateField::new(values)))
}

/// Index of the profile's form on `HalfDisk(R)` with zero Dirichlet data on the arc.
pub fn halfplane_profile_index(profile: &HalfPlaneProfile, radius: f64, level: u32, k: usize, tol_eig: f64) -> Result<SpectrumReport> {
    halfplane_profile_index_on(profile, profile_domain(profile, radius, level), k, tol_eig)
}

pub fn halfplane_profile_index_on(profile: &HalfPlaneProfile, domain: DomainSpec, k: usize, tol_eig: f64) -> Result<SpectrumReport> {
    let radius = match domain.kind {
        crate::domain::DomainKind::HalfDisk { radius, .. } => radius,
        _ => return Err(Error::Precondition("profile truncations live on half-disks".into())),
    };
    let mesh = Arc::new(domain.build_mesh()?);
    let (problem, v) = profile_problem(profile, mesh.clone())?;
    let q = problem.hessian_form(&v)?;
    let on_arc = mesh.component_index(1);
    let keep: Vec<usize> = (0..mesh.n_dofs).filter(|&i| on_arc[i].is_none()).collect();
    let qk = q.submatrix(&keep);
    let bk = problem.ops.h1.submatrix(&keep);
    let mut report = pencil_spectrum(&qk, &bk, k, tol_eig, true)?;
    if let Some(vecs) = report.eigenvectors.as_mut() {
        for vec in vecs.iter_mut() {
            let mut full = vec![0.0; mesh.n_dofs];
            for (j, &i) in keep.iter().enumerate() {
                full[i] = vec[j];
            }
            *vec = full;
        }
    }
    report.truncation = Some(Truncation { domain, radius, boundary_condition: "dirichlet".into() });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonpositive_h_gives_index_zero() {
        let mesh = Arc::new(DomainSpec::annulus(0.5, 1).build_mesh().unwrap());
        let p = Problem::new(mesh.clone(), CurvatureSpec::constant(-1.0, &[-0.5, -0.2], 0.0)).unwrap();
        let u = StateField::interpolate(&mesh, |x| x[0] - 0.3 * x[1]);
        let r = morse_index(&p, &u, 0.0, 4, DEFAULT_TOL_EIG).unwrap();
        assert_eq!(r.negative_count, 0);
        assert!(r.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn disk_radius_matches_closed_form() {
        assert!((disk_radius(2.0).unwrap() - (2.0 - 3f64.sqrt())).abs() < 1e-15);
        assert!(disk_radius(1.0).is_err());
    }
}
