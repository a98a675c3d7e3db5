//! Discrete functional
//!
//! `I(u) = int (|grad u|^2 / 2 + 2 K~ u + 2 |K| e^u) - 4 oint h e^{u/2} + 2 oint h~ u`
//!
//! on P1 elements, its derivatives, the perturbed functional `I + eps J` with
//! `J(u) = int (|grad u|^2 + e^u - u)`, and the Gauss-Bonnet defect.
//!
//! Exponential terms use the vertex rule on triangles and the trapezoid rule on
//! boundary edges, so the Hessian is the exact derivative of the gradient.

use crate::domain::Mesh;
use crate::error::{Error, Result};
use crate::fields::{CurvatureSpec, FieldPoint};
use crate::linalg::{CsrMatrix, TripletBuilder};
use serde::Serialize;
use std::sync::Arc;

/// Exponents above this are clamped and reported as overflow.
pub const EXP_CLAMP: f64 = 700.0;

fn exp_clamped(u: f64, overflow: &mut bool) -> f64 {
    if u > EXP_CLAMP {
        *overflow = true;
        EXP_CLAMP.exp()
    } else {
        u.exp()
    }
}

/// Nodal values of the conformal factor, one per degree of freedom.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateField {
    pub values: Vec<f64>,
}

impl StateField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(mesh: &Mesh, c: f64) -> Self {
        Self { values: vec![c; mesh.n_dofs] }
    }

    pub fn interpolate<F: Fn([f64; 2]) -> f64>(mesh: &Mesh, f: F) -> Self {
        Self { values: mesh.dof_coords().into_iter().map(f).collect() }
    }

    /// Values on every mesh vertex (periodic images repeat their source).
    pub fn vertex_values(&self, mesh: &Mesh) -> Vec<f64> {
        mesh.dof.iter().map(|&d| self.values[d]).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn add_constant(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| v + c).collect() }
    }
}

/// Mesh-dependent operators.
#[derive(Debug, Clone)]
pub struct Operators {
    /// `int grad phi_i . grad phi_j`
    pub stiffness: CsrMatrix,
    /// Lumped interior mass `int phi_i`.
    pub mass: Vec<f64>,
    /// Lumped boundary mass `oint_{C_c} phi_i`, one vector per component.
    pub boundary_mass: Vec<Vec<f64>>,
    /// `stiffness + diag(mass)`: Gram matrix of the H^1 inner product.
    pub h1: CsrMatrix,
    /// Per-triangle gradients of the three hat functions.
    pub grads: Vec<[[f64; 2]; 3]>,
}

pub fn assemble(mesh: &Mesh) -> Result<Operators> {
    let n = mesh.n_dofs;
    let mut t = TripletBuilder::new(n);
    let mut mass = vec![0.0; n];
    let mut grads = Vec::with_capacity(mesh.triangles.len());
    for (ti, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.triangle_area(ti);
        if !(area > 1e-300) {
            return Err(Error::InvalidDomain(format!("degenerate triangle {ti}")));
        }
        let p = tri.map(|v| mesh.vertices[v]);
        let mut g = [[0.0; 2]; 3];
        for k in 0..3 {
            let a = p[(k + 1) % 3];
            let b = p[(k + 2) % 3];
            g[k] = [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)];
        }
        let d = tri.map(|v| mesh.dof[v]);
        for i in 0..3 {
            mass[d[i]] += area / 3.0;
            for j in 0..3 {
                t.add(d[i], d[j], area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]));
            }
        }
        grads.push(g);
    }
    let stiffness = t.build();
    let mut boundary_mass = vec![vec![0.0; n]; mesh.components.len()];
    for e in &mesh.boundary_edges {
        let len = mesh.edge_length(e);
        for &v in &e.v {
            boundary_mass[e.component][mesh.dof[v]] += 0.5 * len;
        }
    }
    let h1 = stiffness.add_diagonal(&mass);
    Ok(Operators { stiffness, mass, boundary_mass, h1, grads })
}

/// Curvature data sampled on the degrees of freedom.
#[derive(Debug, Clone)]
pub struct Coefficients {
    /// `|K|` at each dof.
    pub k_abs: Vec<f64>,
    /// `h` per component per dof (zero off the component).
    pub h: Vec<Vec<f64>>,
    pub h_bg: Vec<Vec<f64>>,
    pub k_bg: f64,
}

pub fn sample_coefficients(mesh: &Mesh, spec: &CurvatureSpec) -> Result<Coefficients> {
    spec.validate_for(&mesh.spec)?;
    let coords = mesh.dof_coords();
    let k_abs = coords
        .iter()
        .map(|&x| spec.k_at(x).map(|k| -k))
        .collect::<Result<Vec<f64>>>()?;
    let mut h = vec![vec![0.0; mesh.n_dofs]; mesh.components.len()];
    let mut h_bg = h.clone();
    for (c, comp) in mesh.components.iter().enumerate() {
        for (&v, &s) in comp.vertices.iter().zip(&comp.s) {
            let p = mesh.boundary_point(c, s);
            let d = mesh.dof[v];
            h[c][d] = spec.h_at(&p)?;
            h_bg[c][d] = spec.h_bg_at(&p)?;
        }
    }
    Ok(Coefficients { k_abs, h, h_bg, k_bg: spec.k_bg })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    /// `1/2 int |grad u|^2`
    pub dirichlet: f64,
    /// `2 int K~ u + 2 oint h~ u`
    pub linear: f64,
    /// `2 int |K| e^u`
    pub area: f64,
    /// `4 oint h e^{u/2}`
    pub boundary: f64,
    /// `J(u)`; zero when `eps = 0`.
    pub j: f64,
    pub eps: f64,
    /// `dirichlet + linear + area - boundary + eps * j`
    pub total: f64,
    /// `int K~ + oint h~`
    pub chi_gen: f64,
    /// Some exponent exceeded the clamp.
    pub overflow: bool,
}

/// A mesh, its operators and sampled curvature data.
#[derive(Debug, Clone)]
pub struct Problem {
    pub mesh: Arc<Mesh>,
    pub ops: Arc<Operators>,
    pub spec: CurvatureSpec,
    pub coef: Coefficients,
}

impl Problem {
    pub fn new(mesh: Arc<Mesh>, spec: CurvatureSpec) -> Result<Self> {
        let ops = Arc::new(assemble(&mesh)?);
        let coef = sample_coefficients(&mesh, &spec)?;
        Ok(Self { mesh, ops, spec, coef })
    }

    pub fn from_mesh(mesh: Mesh, spec: CurvatureSpec) -> Result<Self> {
        Self::new(Arc::new(mesh), spec)
    }

    /// Same mesh and operators, different data.
    pub fn with_spec(&self, spec: CurvatureSpec) -> Result<Self> {
        let coef = sample_coefficients(&self.mesh, &spec)?;
        Ok(Self { mesh: self.mesh.clone(), ops: self.ops.clone(), spec, coef })
    }

    pub fn n(&self) -> usize {
        self.mesh.n_dofs
    }

    fn check(&self, u: &StateField) -> Result<()> {
        if u.len() != self.n() {
            return Err(Error::Precondition(format!("state has {} values, mesh has {} dofs", u.len(), self.n())));
        }
        if !u.is_finite() {
            return Err(Error::Precondition("state has non-finite values".into()));
        }
        Ok(())
    }

    /// `sum_c oint_{C_c} h_c e^{u/2} phi_i` per dof, lumped.
    fn boundary_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.n()];
        for (bm, h) in self.ops.boundary_mass.iter().zip(&self.coef.h) {
            for i in 0..w.len() {
                w[i] += bm[i] * h[i];
            }
        }
        w
    }

    fn bg_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.n()];
        for (bm, h) in self.ops.boundary_mass.iter().zip(&self.coef.h_bg) {
            for i in 0..w.len() {
                w[i] += bm[i] * h[i];
            }
        }
        w
    }

    pub fn energy(&self, u: &StateField, eps: f64) -> Result<EnergyBreakdown> {
        self.check(u)?;
        let ops = &*self.ops;
        let mut overflow = false;
        let su = ops.stiffness.mul_vec(&u.values);
        let grad2: f64 = su.iter().zip(&u.values).map(|(a, b)| a * b).sum();
        let dirichlet = 0.5 * grad2;
        let hw = self.boundary_weights();
        let bw = self.bg_weights();
        let (mut linear, mut area, mut boundary, mut eu_int, mut u_int) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..self.n() {
            let ui = u.values[i];
            let e = exp_clamped(ui, &mut overflow);
            let eh = exp_clamped(0.5 * ui, &mut overflow);
            linear += 2.0 * self.coef.k_bg * ops.mass[i] * ui + 2.0 * bw[i] * ui;
            area += 2.0 * ops.mass[i] * self.coef.k_abs[i] * e;
            boundary += 4.0 * hw[i] * eh;
            eu_int += ops.mass[i] * e;
            u_int += ops.mass[i] * ui;
        }
        let j = if eps != 0.0 { grad2 + eu_int - u_int } else { 0.0 };
        let total = dirichlet + linear + area - boundary + eps * j;
        let chi_gen = self.coef.k_bg * ops.mass.iter().sum::<f64>() + bw.iter().sum::<f64>();
        Ok(EnergyBreakdown { dirichlet, linear, area, boundary, j, eps, total, chi_gen, overflow })
    }

    /// Dual residual `<I_eps'(u), phi_i>`.
    pub fn gradient(&self, u: &StateField, eps: f64) -> Result<Vec<f64>> {
        self.check(u)?;
        let ops = &*self.ops;
        let mut overflow = false;
        let mut r = ops.stiffness.mul_vec(&u.values);
        let hw = self.boundary_weights();
        let bw = self.bg_weights();
        for i in 0..self.n() {
            let e = exp_clamped(u.values[i], &mut overflow);
            let eh = exp_clamped(0.5 * u.values[i], &mut overflow);
            let m = ops.mass[i];
            r[i] *= 1.0 + 2.0 * eps;
            r[i] += 2.0 * self.coef.k_bg * m + 2.0 * m * self.coef.k_abs[i] * e - 2.0 * hw[i] * eh + 2.0 * bw[i];
            r[i] += eps * m * (e - 1.0);
        }
        Ok(r)
    }

    pub fn residual_norm(&self, u: &StateField, eps: f64) -> Result<f64> {
        Ok(crate::linalg::norm2(&self.gradient(u, eps)?))
    }

    /// Hessian of `I_eps` at `u`.
    pub fn hessian(&self, u: &StateField, eps: f64) -> Result<CsrMatrix> {
        self.check(u)?;
        let ops = &*self.ops;
        let mut overflow = false;
        let hw = self.boundary_weights();
        let d: Vec<f64> = (0..self.n())
            .map(|i| {
                let e = exp_clamped(u.values[i], &mut overflow);
                let eh = exp_clamped(0.5 * u.values[i], &mut overflow);
                let m = ops.mass[i];
                2.0 * m * self.coef.k_abs[i] * e - hw[i] * eh + eps * m * e
            })
            .collect();
        Ok(ops.stiffness.scale(1.0 + 2.0 * eps).add_diagonal(&d))
    }

    /// `Q(psi) = int |grad psi|^2 + 2 int |K| e^u psi^2 - oint h e^{u/2} psi^2`.
    pub fn hessian_form(&self, u: &StateField) -> Result<CsrMatrix> {
        self.hessian(u, 0.0)
    }

    /// `int K e^u + oint h e^{u/2} - (int K~ + oint h~)`.
    pub fn gauss_bonnet_residual(&self, u: &StateField) -> Result<f64> {
        let e = self.energy(u, 0.0)?;
        Ok(-0.5 * e.area + 0.25 * e.boundary - e.chi_gen)
    }

    /// `4 oint h e^{u/2} / (1/2 int |grad u|^2 + 2 int |K| e^u)`.
    pub fn trace_ratio(&self, u: &StateField) -> Result<f64> {
        let e = self.energy(u, 0.0)?;
        let den = e.dirichlet + e.area;
        if !(den > 0.0) {
            return Err(Error::Precondition("trace ratio denominator vanishes".into()));
        }
        Ok(e.boundary / den)
    }

    /// `oint e^{u/2}` over the whole boundary.
    pub fn boundary_exp_integral(&self, u: &StateField) -> f64 {
        let mut s = 0.0;
        for bm in &self.ops.boundary_mass {
            for (w, v) in bm.iter().zip(&u.values) {
                s += w * (0.5 * v.min(EXP_CLAMP)).exp();
            }
        }
        s
    }

    /// `K` as a field value at an interior point (used by diagnostics).
    pub fn k_at(&self, x: [f64; 2]) -> Result<f64> {
        self.spec.k.eval(&FieldPoint::interior(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use crate::fields::{perturb, Field};
    use std::f64::consts::{PI, TAU};

    fn cyl(h: f64) -> Problem {
        let mesh = DomainSpec::cylinder(1.0, 2).build_mesh().unwrap();
        Problem::from_mesh(mesh, CurvatureSpec::constant(-1.0, &[h, h], 0.0)).unwrap()
    }

    #[test]
    fn assembled_operators() {
        let p = cyl(0.0);
        let ones = vec![1.0; p.n()];
        assert!(p.ops.stiffness.mul_vec(&ones).iter().all(|v| v.abs() < 1e-12));
        assert!(p.ops.stiffness.max_asymmetry() < 1e-14);
        assert!((p.ops.mass.iter().sum::<f64>() - TAU).abs() < 1e-12);
        let ann = DomainSpec::annulus(0.5, 3).build_mesh().unwrap();
        let ops = assemble(&ann).unwrap();
        let h = ann.mesh_size();
        assert!((ops.boundary_mass[0].iter().sum::<f64>() - TAU).abs() < h * h);
    }

    #[test]
    fn constant_state_energies() {
        let u0 = StateField::constant(&cyl(0.0).mesh, 0.0);
        let e = cyl(0.0).energy(&u0, 0.0).unwrap();
        assert!((e.total - 4.0 * PI).abs() < 1e-12);
        let e = cyl(1.0).energy(&u0, 0.0).unwrap();
        assert!((e.total + 12.0 * PI).abs() < 1e-12);
        let c = 2f64.ln() * 2.0;
        let e = cyl(1.0).energy(&u0.add_constant(c), 0.0).unwrap();
        assert!((e.total + 16.0 * PI).abs() < 1e-11);
        assert!((e.dirichlet + e.linear + e.area - e.boundary - e.total).abs() < 1e-12);
        let gb = cyl(0.0).gauss_bonnet_residual(&u0).unwrap();
        assert!((gb + TAU).abs() < 1e-12);
    }

    #[test]
    fn gradient_pairing_with_one_is_gauss_bonnet() {
        let p = Problem::from_mesh(
            DomainSpec::annulus(0.5, 1).build_mesh().unwrap(),
            CurvatureSpec::new(Field::expr("-1 - 0.2*x").unwrap(), vec![Field::expr("0.3*cos(s)").unwrap(), (-0.4).into()], 0.0),
        )
        .unwrap();
        let u = StateField::interpolate(&p.mesh, |x| x[0] * x[1] + 0.3);
        let g = p.gradient(&u, 0.0).unwrap();
        let gb = p.gauss_bonnet_residual(&u).unwrap();
        assert!((g.iter().sum::<f64>() + 2.0 * gb).abs() < 1e-12);
    }

    #[test]
    fn perturbed_functional_identity() {
        let p = Problem::from_mesh(
            DomainSpec::annulus(0.5, 1).build_mesh().unwrap(),
            CurvatureSpec::new(Field::expr("-1 - 0.2*y").unwrap(), vec![2.0.into(), (-3.0).into()], 0.0),
        )
        .unwrap();
        let eps = 0.05;
        let q = p.with_spec(perturb(&p.spec, eps).unwrap()).unwrap();
        let u = StateField::interpolate(&p.mesh, |x| 0.5 * x[0] - x[1] * x[1]);
        let lhs = p.energy(&u, eps).unwrap().total;
        let rhs = (1.0 + 2.0 * eps) * q.energy(&u, 0.0).unwrap().total;
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
        let g1 = p.gradient(&u, eps).unwrap();
        let g2 = q.gradient(&u, 0.0).unwrap();
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - (1.0 + 2.0 * eps) * b).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_ratio_decays_for_large_constants() {
        let p = cyl(1.0);
        let c = 8.0;
        let r = p.trace_ratio(&StateField::constant(&p.mesh, c)).unwrap();
        let predicted = 2.0 * (1.0 * 2.0 * TAU / TAU) * (-c / 2.0f64).exp();
        assert!((r - predicted).abs() < 1e-12);
        assert_eq!(cyl(0.0).trace_ratio(&StateField::constant(&p.mesh, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn overflow_is_flagged_not_fatal() {
        let p = cyl(1.0);
        let e = p.energy(&StateField::constant(&p.mesh, 800.0), 0.0).unwrap();
        assert!(e.overflow);
        assert!(e.total.is_finite());
    }
}
