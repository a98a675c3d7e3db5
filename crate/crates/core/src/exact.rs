//! Closed-form solutions: half-plane profiles, annulus families, the rescaled
//! blow-up limit and the radial eigenfunction of the hyperbolic disk form.
//!
//! Half-plane coordinates are `(s, t)` with `t >= 0` the inward direction; the
//! problem there is `-Lap v = 2 K0 e^v`, `-v_t = 2 h0 e^{v/2}` on `t = 0`.

use crate::domain::{DomainKind, Mesh};
use crate::energy::{Problem, StateField};
use crate::error::{Error, Result};
use crate::fields::CurvatureSpec;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

fn check_k0(k0: f64) -> Result<()> {
    if !(k0 < 0.0) {
        return Err(Error::Precondition(format!("K0 must be negative, got {k0}")));
    }
    Ok(())
}

/// One-dimensional profile `v = 2 log(lambda / (1 + lambda t)) - log|K0|` (`D0 = 1`).
pub fn eval_one_d(lambda: f64, k0: f64, s: f64, t: f64) -> Result<f64> {
    check_k0(k0)?;
    let _ = s;
    if t < 0.0 {
        return Err(Error::Precondition(format!("t = {t} lies outside the half-plane")));
    }
    if !(lambda > 0.0) {
        return Err(Error::Precondition("lambda must be positive".into()));
    }
    Ok(2.0 * (lambda / (1.0 + lambda * t)).ln() - (-k0).ln())
}

/// Bubble `v = 2 log(2 lambda / ((s - s0)^2 + (t + t0)^2 - lambda^2)) - log|K0|`, `t0 = D0 lambda`.
pub fn eval_bubble(lambda: f64, s0: f64, k0: f64, h0: f64, s: f64, t: f64) -> Result<f64> {
    check_k0(k0)?;
    let d0 = h0 / (-k0).sqrt();
    if !(d0 > 1.0) {
        return Err(Error::Precondition(format!("bubbles need D0 > 1, got {d0}")));
    }
    if !(lambda > 0.0) {
        return Err(Error::Precondition("lambda must be positive".into()));
    }
    let t0 = d0 * lambda;
    let den = (s - s0).powi(2) + (t + t0).powi(2) - lambda * lambda;
    if !(den > 0.0) {
        return Err(Error::Precondition(format!("point ({s}, {t}) is outside the bubble's domain")));
    }
    Ok(2.0 * (2.0 * lambda / den).ln() - (-k0).ln())
}

/// `(int |K0| e^v, oint h0 e^{v/2}) = (beta, beta + 2 pi)`, independent of `lambda`.
pub fn bubble_masses(lambda: f64, k0: f64, h0: f64) -> Result<(f64, f64)> {
    let _ = lambda;
    check_k0(k0)?;
    let disc = h0 * h0 + k0;
    if !(disc > 0.0) || h0 <= 0.0 {
        return Err(Error::Precondition(format!("h0^2 + K0 = {disc} <= 0: the profile has infinite mass")));
    }
    let beta = TAU * (h0 / disc.sqrt() - 1.0);
    Ok((beta, beta + TAU))
}

/// Solutions on the half-plane used for the index computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HalfPlaneProfile {
    OneD { lambda: f64 },
    Bubble { lambda: f64, s0: f64, h0: f64 },
    /// The limit `v = 2 log(e^{-t} / (h1 + e^{-t} cos s))` of the rescaled gamma family.
    RescaledLimit { h1: f64 },
}

impl HalfPlaneProfile {
    /// `D0` of the profile for `K0 = -1`.
    pub fn d0(&self) -> f64 {
        match *self {
            HalfPlaneProfile::OneD { .. } => 1.0,
            HalfPlaneProfile::Bubble { h0, .. } => h0,
            HalfPlaneProfile::RescaledLimit { h1 } => h1,
        }
    }

    /// Value at `(s, t)` for `K0 = -1`.
    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        match *self {
            HalfPlaneProfile::OneD { lambda } => eval_one_d(lambda, -1.0, s, t),
            HalfPlaneProfile::Bubble { lambda, s0, h0 } => eval_bubble(lambda, s0, -1.0, h0, s, t),
            HalfPlaneProfile::RescaledLimit { h1 } => eval_rescaled_limit(h1, s, t),
        }
    }
}

/// The pair `(h1, h2)` solved by a closed-form annulus solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnulusCurvatures {
    pub h1: f64,
    pub h2: f64,
}

fn check_radius(r: f64, rho: f64) -> Result<()> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Precondition(format!("inner radius {r} not in (0, 1)")));
    }
    if rho < r * (1.0 - 1e-12) || rho > 1.0 + 1e-12 {
        return Err(Error::Precondition(format!("|x| = {rho} outside [{r}, 1]")));
    }
    Ok(())
}

/// `lambda` must avoid `[0, -2 log r]`.
pub fn log_family_admissible(lambda: f64, r: f64) -> bool {
    lambda.is_finite() && (lambda < 0.0 || lambda > -2.0 * r.ln())
}

/// `u = log(4 / (|x|^2 (lambda + 2 log|x|)^2))` with `K = -1`.
pub fn eval_annulus_log(lambda: f64, r: f64, x: [f64; 2]) -> Result<(f64, AnnulusCurvatures)> {
    let rho = x[0].hypot(x[1]);
    check_radius(r, rho)?;
    if !log_family_admissible(lambda, r) {
        return Err(Error::Precondition(format!("lambda = {lambda} lies in [0, -2 log r]")));
    }
    let q = lambda + 2.0 * rho.ln();
    let u = (4.0 / (rho * rho * q * q)).ln();
    let curv = if lambda < 0.0 { AnnulusCurvatures { h1: 1.0, h2: -1.0 } } else { AnnulusCurvatures { h1: -1.0, h2: 1.0 } };
    Ok((u, curv))
}

/// `u_gamma(z) = 2 log(gamma |z|^{gamma-1} / (h1 + Re z^gamma))`, `h2 = -h1 r^{-gamma}`.
pub fn eval_annulus_gamma(gamma: u32, h1: f64, r: f64, z: [f64; 2]) -> Result<(f64, AnnulusCurvatures)> {
    let rho = z[0].hypot(z[1]);
    check_radius(r, rho)?;
    if !(h1 > 1.0) {
        return Err(Error::Precondition(format!("h1 = {h1} must exceed 1")));
    }
    if gamma == 0 {
        return Err(Error::Precondition("gamma must be a positive integer".into()));
    }
    let g = gamma as f64;
    let th = z[1].atan2(z[0]);
    let re = rho.powf(g) * (g * th).cos();
    let u = 2.0 * (g * rho.powf(g - 1.0) / (h1 + re)).ln();
    Ok((u, AnnulusCurvatures { h1, h2: -h1 * r.powf(-g) }))
}

/// `v(s, t) = 2 log(e^{-t} / (h1 + e^{-t} cos s))`.
pub fn eval_rescaled_limit(h1: f64, s: f64, t: f64) -> Result<f64> {
    if !(h1 > 1.0) {
        return Err(Error::Precondition(format!("h1 = {h1} must exceed 1")));
    }
    if t < 0.0 {
        return Err(Error::Precondition(format!("t = {t} lies outside the half-plane")));
    }
    let e = (-t).exp();
    Ok(2.0 * (e / (h1 + e * s.cos())).ln())
}

/// `v_gamma(s, t) = u_gamma(1 - (t + i s) / gamma) - 2 log gamma`.
pub fn eval_rescaled_gamma(gamma: u32, h1: f64, s: f64, t: f64) -> Result<f64> {
    if !(h1 > 1.0) || gamma == 0 {
        return Err(Error::Precondition(format!("need h1 > 1 and gamma >= 1, got h1 = {h1}, gamma = {gamma}")));
    }
    let g = gamma as f64;
    let z = [1.0 - t / g, -s / g];
    let rho = z[0].hypot(z[1]);
    let th = z[1].atan2(z[0]);
    let re = rho.powf(g) * (g * th).cos();
    Ok(2.0 * (g * rho.powf(g - 1.0) / (h1 + re)).ln() - 2.0 * g.ln())
}

/// `(1 + |x|^2) / (1 - |x|^2)`, which satisfies `-Lap psi + 2 rho psi = 0` for `rho = 4 / (1 - |x|^2)^2`.
pub fn disk_eigenfunction(x: [f64; 2]) -> Result<f64> {
    let q = x[0] * x[0] + x[1] * x[1];
    if q >= 1.0 {
        return Err(Error::Precondition(format!("|x|^2 = {q} >= 1")));
    }
    Ok((1.0 + q) / (1.0 - q))
}

/// Closed-form families on the annulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnnulusFamily {
    Log { lambda: f64 },
    Gamma { gamma: u32, h1: f64 },
}

impl AnnulusFamily {
    pub fn eval(&self, r: f64, x: [f64; 2]) -> Result<(f64, AnnulusCurvatures)> {
        match *self {
            AnnulusFamily::Log { lambda } => eval_annulus_log(lambda, r, x),
            AnnulusFamily::Gamma { gamma, h1 } => eval_annulus_gamma(gamma, h1, r, x),
        }
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            AnnulusFamily::Log { lambda } => lambda,
            AnnulusFamily::Gamma { gamma, .. } => gamma as f64,
        }
    }

    /// Data (`K = -1`, `K~ = 0`, constant `h_i`) and the interpolated exact state on `mesh`.
    pub fn problem(&self, mesh: std::sync::Arc<Mesh>) -> Result<(Problem, StateField)> {
        let r = match mesh.spec.kind {
            DomainKind::Annulus { inner_radius } => inner_radius,
            _ => return Err(Error::Precondition("annulus families need an annulus mesh".into())),
        };
        let (_, c) = self.eval(r, [1.0, 0.0])?;
        let spec = CurvatureSpec::constant(-1.0, &[c.h1, c.h2], 0.0);
        let mut values = Vec::with_capacity(mesh.n_dofs);
        for x in mesh.dof_coords() {
            values.push(self.eval(r, x)?.0);
        }
        Ok((Problem::new(mesh, spec)?, StateField::new(values)))
    }
}

impl AnnulusFamily {
    /// The exact state rotated by `alpha` about the origin, interpolated on `mesh`.
    pub fn rotated_state(&self, mesh: &Mesh, alpha: f64) -> Result<StateField> {
        let r = match mesh.spec.kind {
            DomainKind::Annulus { inner_radius } => inner_radius,
            _ => return Err(Error::Precondition("annulus families need an annulus mesh".into())),
        };
        let (s, c) = (-alpha).sin_cos();
        let values = mesh
            .dof_coords()
            .iter()
            .map(|x| self.eval(r, [c * x[0] - s * x[1], s * x[0] + c * x[1]]).map(|v| v.0))
            .collect::<Result<_>>()?;
        Ok(StateField::new(values))
    }
}

/// One row of a family sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyRow {
    pub parameter: f64,
    pub sup_u: f64,
    pub inf_u: f64,
    pub area_mass: f64,
    pub boundary_mass: Vec<f64>,
    pub gb_residual: f64,
}

/// Evaluates each family member on the mesh and tabulates masses and defects.
pub fn sweep_family(members: &[AnnulusFamily], mesh: std::sync::Arc<Mesh>) -> Result<Vec<FamilyRow>> {
    members
        .iter()
        .map(|f| {
            let (p, u) = f.problem(mesh.clone())?;
            let area_mass: f64 = (0..p.n()).map(|i| p.ops.mass[i] * p.coef.k_abs[i] * u.values[i].exp()).sum();
            let boundary_mass = p
                .ops
                .boundary_mass
                .iter()
                .zip(&p.coef.h)
                .map(|(bm, h)| (0..p.n()).map(|i| bm[i] * h[i] * (0.5 * u.values[i]).exp()).sum())
                .collect();
            Ok(FamilyRow {
                parameter: f.parameter(),
                sup_u: u.max(),
                inf_u: u.min(),
                area_mass,
                boundary_mass,
                gb_residual: p.gauss_bonnet_residual(&u)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointwise_values() {
        assert_eq!(eval_one_d(1.0, -1.0, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(eval_one_d(1.0, -1.0, 5.0, 0.0).unwrap(), 0.0);
        assert!(eval_one_d(1.0, -1.0, 0.0, -0.1).is_err());
        let v = eval_bubble(1.0, 0.0, -1.0, 2f64.sqrt(), 0.0, 0.0).unwrap();
        assert!((v - 2.0 * 2f64.ln()).abs() < 1e-14);
        let a = eval_bubble(1.0, 0.3, -1.0, 1.5, 0.3 + 0.7, 0.2).unwrap();
        let b = eval_bubble(1.0, 0.3, -1.0, 1.5, 0.3 - 0.7, 0.2).unwrap();
        assert_eq!(a, b);
        assert!(eval_bubble(1.0, 0.0, -1.0, 1.0, 0.0, 0.0).is_err());
        assert!(eval_annulus_log(-2.0, 0.5, [1.0, 0.0]).unwrap().0.abs() < 1e-15);
        assert!(eval_annulus_log(0.5, 0.5, [1.0, 0.0]).is_err());
        let (u, c) = eval_annulus_gamma(1, 2.0, 0.5, [1.0, 0.0]).unwrap();
        assert!((u - 2.0 * (1.0f64 / 3.0).ln()).abs() < 1e-15);
        assert_eq!(c.h2, -4.0);
        assert_eq!(eval_annulus_gamma(2, 2.0, 0.5, [0.7, 0.0]).unwrap().1.h2, -8.0);
        assert!(eval_annulus_gamma(2, 1.0, 0.5, [0.7, 0.0]).is_err());
        assert!((eval_rescaled_limit(2.0, 0.0, 0.0).unwrap() - 2.0 * (1.0f64 / 3.0).ln()).abs() < 1e-15);
        assert_eq!(disk_eigenfunction([0.0, 0.0]).unwrap(), 1.0);
        assert!((disk_eigenfunction([0.3, 0.4]).unwrap() - 5.0 / 3.0).abs() < 1e-15);
        assert!(disk_eigenfunction([1.0, 0.0]).is_err());
    }

    #[test]
    fn bubble_mass_formula() {
        let (b, m) = bubble_masses(1.0, -1.0, 2f64.sqrt()).unwrap();
        assert!((b - TAU * (2f64.sqrt() - 1.0)).abs() < 1e-14);
        assert!((m - TAU * 2f64.sqrt()).abs() < 1e-14);
        for l in [0.5, 1.0, 2.0] {
            assert_eq!(bubble_masses(l, -1.0, 2f64.sqrt()).unwrap(), (b, m));
        }
        let (b, m) = bubble_masses(1.0, -1.0, 1e6).unwrap();
        assert!(b > 0.0 && b < 1e-10 && (m - TAU).abs() < 1e-10);
        assert!(bubble_masses(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn gamma_family_blows_up_on_the_outer_circle() {
        let sup = |g: u32| (0..720).map(|k| eval_annulus_gamma(g, 2.0, 0.5, [(k as f64 * TAU / 720.0).cos(), (k as f64 * TAU / 720.0).sin()]).unwrap().0).fold(f64::MIN, f64::max);
        let inf_inner = |g: u32| (0..720).map(|k| eval_annulus_gamma(g, 2.0, 0.5, [0.5 * (k as f64 * TAU / 720.0).cos(), 0.5 * (k as f64 * TAU / 720.0).sin()]).unwrap().0).fold(f64::MAX, f64::min);
        assert!(sup(4) < sup(8) && sup(8) < sup(16));
        assert!(inf_inner(4) > inf_inner(8) && inf_inner(8) > inf_inner(16));
    }

    #[test]
    fn rescaled_gamma_converges_to_limit() {
        let err = |g: u32| {
            let mut e = 0.0f64;
            for i in 0..=20 {
                for j in 0..=10 {
                    let (s, t) = (-3.0 + 0.3 * i as f64, 0.2 * j as f64);
                    e = e.max((eval_rescaled_gamma(g, 2.0, s, t).unwrap() - eval_rescaled_limit(2.0, s, t).unwrap()).abs());
                }
            }
            e
        };
        assert!(err(64) < err(16) && err(256) < err(64) && err(4096) < 0.01, "{} {}", err(256), err(4096));
        let a = eval_rescaled_limit(2.0, 0.4, 0.3).unwrap();
        assert!((a - eval_rescaled_limit(2.0, 0.4 + TAU, 0.3).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn disk_eigenfunction_solves_the_linearized_equation() {
        // -Lap psi + 2 rho psi with rho = 4/(1-|x|^2)^2, five-point stencil
        let h = 1e-3;
        for x in [[0.1, 0.2], [0.5, -0.3], [-0.6, 0.1]] {
            let f = |p: [f64; 2]| disk_eigenfunction(p).unwrap();
            let lap = (f([x[0] + h, x[1]]) + f([x[0] - h, x[1]]) + f([x[0], x[1] + h]) + f([x[0], x[1] - h]) - 4.0 * f(x)) / (h * h);
            let q = x[0] * x[0] + x[1] * x[1];
            let rho = 4.0 / (1.0 - q).powi(2);
            assert!((-lap + 2.0 * rho * f(x)).abs() < 1e-4 * rho);
        }
    }
}
