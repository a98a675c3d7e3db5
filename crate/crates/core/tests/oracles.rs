//! Checks against values computed here without the library's own formulas:
//! a finite-difference boundary value solver, closed-form integrals and
//! constant-state calculus.

use prescribed_curvature::diagnostics::{pohozaev_residual, FluxMode, Identity};
use prescribed_curvature::domain::DomainSpec;
use prescribed_curvature::energy::{Problem, StateField};
use prescribed_curvature::exact::{bubble_masses, HalfPlaneProfile};
use prescribed_curvature::fields::CurvatureSpec;
use prescribed_curvature::solve::{minimize, SolveOptions};
use prescribed_curvature::spectral::{halfplane_profile_index, profile_problem, DEFAULT_TOL_EIG};
use std::f64::consts::{PI, SQRT_2, TAU};
use std::sync::Arc;

/// `u'' = 2 k_bg - 2 k e^u` on `[0, 1]` with `-u'(0) = u'(1) = 2 h e^{u/2}`,
/// second-order finite differences with ghost nodes, Newton with a tridiagonal solve.
fn bvp_oracle(k_bg: f64, k: f64, h: f64, n: usize) -> Vec<f64> {
    let dx = 1.0 / n as f64;
    let mut u = vec![0.0f64; n + 1];
    for _ in 0..50 {
        let (mut a, mut b, mut c, mut r) = (vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1]);
        for i in 0..=n {
            let e = u[i].exp();
            // ghost node u_{-1} = u_1 + 2 dx g(u_0) (and symmetric at the far end)
            let (left, right, extra, dextra) = if i == 0 {
                (0.0, 2.0, 2.0 * dx * 2.0 * h * (0.5 * u[0]).exp(), 2.0 * dx * h * (0.5 * u[0]).exp())
            } else if i == n {
                (2.0, 0.0, 2.0 * dx * 2.0 * h * (0.5 * u[n]).exp(), 2.0 * dx * h * (0.5 * u[n]).exp())
            } else {
                (1.0, 1.0, 0.0, 0.0)
            };
            let um = if i > 0 { u[i - 1] } else { 0.0 };
            let up = if i < n { u[i + 1] } else { 0.0 };
            r[i] = (left * um + right * up + extra - 2.0 * u[i]) / (dx * dx) - (2.0 * k_bg - 2.0 * k * e);
            a[i] = left / (dx * dx);
            c[i] = right / (dx * dx);
            b[i] = (dextra - 2.0) / (dx * dx) + 2.0 * k * e;
        }
        // Thomas algorithm for J d = -r
        let mut cp = vec![0.0; n + 1];
        let mut dp = vec![0.0; n + 1];
        cp[0] = c[0] / b[0];
        dp[0] = -r[0] / b[0];
        for i in 1..=n {
            let m = b[i] - a[i] * cp[i - 1];
            cp[i] = c[i] / m;
            dp[i] = (-r[i] - a[i] * dp[i - 1]) / m;
        }
        let mut d = vec![0.0; n + 1];
        d[n] = dp[n];
        for i in (0..n).rev() {
            d[i] = dp[i] - cp[i] * d[i + 1];
        }
        let step = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..=n {
            u[i] += d[i];
        }
        if step < 1e-13 {
            break;
        }
    }
    u
}

#[test]
fn cylinder_minimizer_matches_finite_difference_profile() {
    let n = 4096;
    let ode = bvp_oracle(-1.0, -1.0, 0.5, n);
    // frozen from the oracle: the profile is symmetric with boundary value 1.398721
    assert!((ode[0] - ode[n]).abs() < 1e-10);
    assert!((ode[0] - 1.398721).abs() < 1e-5, "u(0) = {}", ode[0]);
    let p = Problem::from_mesh(
        DomainSpec::cylinder(1.0, 2).with_base(4, 128).build_mesh().unwrap(),
        CurvatureSpec::constant(-1.0, &[0.5, 0.5], -1.0),
    )
    .unwrap();
    let r = minimize(&p, 0.0, &StateField::constant(&p.mesh, 0.0), &SolveOptions::default()).unwrap();
    assert!(r.converged);
    let err = p
        .mesh
        .dof_coords()
        .iter()
        .zip(&r.state.values)
        .map(|(x, u)| {
            let t = x[1] * n as f64;
            let i = (t.floor() as usize).min(n - 1);
            let w = t - i as f64;
            (u - ((1.0 - w) * ode[i] + w * ode[i + 1])).abs()
        })
        .fold(0.0, f64::max);
    assert!(err < 1e-5, "max deviation {err:.3e}");
    let gb = p.gauss_bonnet_residual(&r.state).unwrap();
    assert!(gb.abs() < 10.0 * SolveOptions::default().tol, "GB {gb:.3e}, residual {:.3e}", r.residual_norm);
}

#[test]
fn constant_states_follow_one_dimensional_calculus() {
    // cylinder of length 1: area 2 pi, boundary length 4 pi, K = -1, h = 1
    let p = Problem::from_mesh(DomainSpec::cylinder(1.0, 1).build_mesh().unwrap(), CurvatureSpec::constant(-1.0, &[1.0, 1.0], 0.0)).unwrap();
    for c in [-1.0, 0.0, 2f64.ln() * 2.0, 3.0] {
        let e = p.energy(&StateField::constant(&p.mesh, c), 0.0).unwrap().total;
        let exact = 4.0 * PI * f64::exp(c) - 16.0 * PI * f64::exp(0.5 * c);
        assert!((e - exact).abs() < 1e-10 * exact.abs().max(1.0), "c = {c}: {e} vs {exact}");
    }
    let opt = p.energy(&StateField::constant(&p.mesh, 4f64.ln()), 0.0).unwrap().total;
    assert!((opt + 16.0 * PI).abs() < 1e-10);
}

#[test]
fn pohozaev_constant_state_residual_vanishes() {
    let mesh = DomainSpec::annulus(0.5, 2).build_mesh().unwrap();
    let area = mesh.area();
    let p = Problem::from_mesh(mesh, CurvatureSpec::constant(-1.0, &[0.0, 0.0], 0.0)).unwrap();
    // u = 0 is not critical, so the normal derivative is taken from the (zero) gradient;
    // both sides then equal -8 |Sigma_h| on the polygonal domain
    let r = pohozaev_residual(&p, &StateField::constant(&p.mesh, 0.0), &Identity, FluxMode::Gradient).unwrap();
    assert!(r.residual.abs() < 1e-10, "{}", r.residual);
    assert!((r.interior + 8.0 * area).abs() < 1e-10);
    assert!((r.interior + 8.0 * PI * 0.75).abs() < 0.05);
}

/// `int_{t > 0} 4 lambda^2 / (s^2 + (t + t0)^2 - lambda^2)^2`, reduced to one dimension
/// by `int ds / (s^2 + a^2)^2 = pi / (2 a^3)` and integrated by Simpson's rule.
fn bubble_area_oracle(lambda: f64, d0: f64) -> f64 {
    let t0 = d0 * lambda;
    // substitute t = tan(phi) to cover [0, inf)
    let n = 200_000;
    let f = |phi: f64| {
        let t = phi.tan();
        let a2 = (t + t0).powi(2) - lambda * lambda;
        4.0 * lambda * lambda * PI / (2.0 * a2.powf(1.5)) / phi.cos().powi(2)
    };
    let (lo, hi) = (0.0, 0.5 * PI - 1e-9);
    let hstep = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * hstep);
    }
    s * hstep / 3.0
}

#[test]
fn bubble_mass_matches_direct_integration() {
    let beta = bubble_area_oracle(1.0, SQRT_2);
    assert!((beta - 2.602580).abs() < 1e-5, "{beta}");
    assert!((bubble_area_oracle(0.3, SQRT_2) - beta).abs() < 1e-6);
    let (b, bh) = bubble_masses(1.0, -1.0, SQRT_2).unwrap();
    assert!((b - beta).abs() < 1e-5);
    assert!((bh - beta - TAU).abs() < 1e-5);
}

#[test]
fn bubble_mass_concentrates_near_the_origin() {
    let profile = HalfPlaneProfile::Bubble { lambda: 0.1, s0: 0.0, h0: SQRT_2 };
    let mesh = Arc::new(DomainSpec::graded_half_disk(10.0, 1.0, 6).build_mesh().unwrap());
    let (p, u) = profile_problem(&profile, mesh).unwrap();
    let (mut near, mut total) = (0.0, 0.0);
    for (i, x) in p.mesh.dof_coords().iter().enumerate() {
        let m = p.ops.mass[i] * p.coef.k_abs[i] * u.values[i].exp();
        total += m;
        if x[0].hypot(x[1]) < 1.0 {
            near += m;
        }
    }
    assert!(near / total >= 0.95, "{}", near / total);
}

#[test]
fn dirichlet_truncations_have_monotone_index() {
    let profile = HalfPlaneProfile::Bubble { lambda: 1.0, s0: 0.0, h0: SQRT_2 };
    let counts: Vec<usize> =
        [2.0, 5.0, 10.0, 20.0].iter().map(|&r| halfplane_profile_index(&profile, r, 3, 3, DEFAULT_TOL_EIG).unwrap().negative_count).collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
    assert_eq!(*counts.last().unwrap(), 1);
}

#[test]
fn flipped_boundary_sign_breaks_gauss_bonnet() {
    // mutation check: the identity must detect a sign error in the boundary term
    let p = Problem::from_mesh(
        DomainSpec::cylinder(1.0, 0).with_base(4, 32).build_mesh().unwrap(),
        CurvatureSpec::constant(-1.0, &[0.5, 0.3], 0.0),
    )
    .unwrap();
    let r = minimize(&p, 0.0, &StateField::constant(&p.mesh, 0.0), &SolveOptions::default()).unwrap();
    let e = p.energy(&r.state, 0.0).unwrap();
    let good = -0.5 * e.area + 0.25 * e.boundary - e.chi_gen;
    let flipped = -0.5 * e.area - 0.25 * e.boundary - e.chi_gen;
    assert!(good.abs() < 1e-8);
    assert!((good - p.gauss_bonnet_residual(&r.state).unwrap()).abs() < 1e-14);
    assert!(flipped.abs() > 1.0, "{flipped}");
}
