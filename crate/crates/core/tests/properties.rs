use prescribed_curvature::diagnostics::{blowup_monitor, cauchy_riemann_residual, holomorphic_field, mass_measures, MonitorOptions, TrigPoly};
use prescribed_curvature::domain::{tangential_derivative, DomainSpec, Mesh};
use prescribed_curvature::energy::{Problem, StateField};
use prescribed_curvature::exact::{bubble_masses, AnnulusFamily};
use prescribed_curvature::fields::{eval_d, perturb, regime_classify, CurvatureSpec, Field, RegimeKind};
use prescribed_curvature::linalg::dot;
use prescribed_curvature::solve::{minimize, SolveOptions};
use prescribed_curvature::spectral::{pencil_spectrum, DEFAULT_TOL_EIG};
use proptest::prelude::*;
use std::sync::{Arc, OnceLock};

fn annulus() -> Arc<Mesh> {
    static M: OnceLock<Arc<Mesh>> = OnceLock::new();
    M.get_or_init(|| Arc::new(DomainSpec::annulus(0.5, 1).build_mesh().unwrap())).clone()
}

fn cylinder() -> Arc<Mesh> {
    static M: OnceLock<Arc<Mesh>> = OnceLock::new();
    M.get_or_init(|| Arc::new(DomainSpec::cylinder(1.0, 0).with_base(4, 16).build_mesh().unwrap())).clone()
}

/// A smooth state `a + b x + c y + d sin(2 theta)` on the mesh.
fn state(mesh: &Mesh, a: f64, b: f64, c: f64, d: f64) -> StateField {
    StateField::interpolate(mesh, |x| a + b * x[0] + c * x[1] + d * (2.0 * x[1].atan2(x[0])).sin())
}

fn coeffs() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -0.5..0.5f64)
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn d_is_scale_invariant(c in 0.1..10.0f64, k in -3.0..-0.2f64, h in -2.0..2.0f64, s in 0.0..6.28f64) {
        let spec = CurvatureSpec::new(Field::expr(&format!("{k} - 0.1 * cos(theta)")).unwrap(), vec![Field::expr(&format!("{h} + 0.3 * sin(s)")).unwrap(), Field::Const(h)], 0.0);
        let scaled = CurvatureSpec::new(spec.k.affine(c * c, 0.0), spec.h.iter().map(|f| f.affine(c, 0.0)).collect(), 0.0);
        let domain = DomainSpec::annulus(0.5, 0);
        for comp in 0..2 {
            let p = domain.boundary_point(comp, s * domain.component_range(comp).1 / 6.28);
            let (a, b) = (eval_d(&spec, &p).unwrap(), eval_d(&scaled, &p).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn translation_changes_energy_by_the_closed_form(cf in coeffs(), c in -2.0..2.0f64, h1 in -2.0..2.0f64, kb in -1.0..0.0f64) {
        // the annulus carries boundary curvature h~ = (1, -2), so the shift picks up 2 c oint h~
        let p = Problem::new(annulus(), CurvatureSpec::constant(-1.0, &[h1, -0.5], kb)).unwrap();
        let u = state(&p.mesh, cf.0, cf.1, cf.2, cf.3);
        let e0 = p.energy(&u, 0.0).unwrap();
        let e1 = p.energy(&u.add_constant(c), 0.0).unwrap();
        let m = &p.ops.mass;
        let area: f64 = m.iter().sum();
        let k_exp: f64 = (0..p.n()).map(|i| m[i] * p.coef.k_abs[i] * u.values[i].exp()).sum();
        let (mut h_exp, mut h_bg) = (0.0, 0.0);
        for (c_, bm) in p.ops.boundary_mass.iter().enumerate() {
            for i in 0..p.n() {
                h_exp += bm[i] * p.coef.h[c_][i] * (0.5 * u.values[i]).exp();
                h_bg += bm[i] * p.coef.h_bg[c_][i];
            }
        }
        let predicted = 2.0 * c * kb * area + 2.0 * c * h_bg + 2.0 * (c.exp() - 1.0) * k_exp - 4.0 * ((0.5 * c).exp() - 1.0) * h_exp;
        let diff = e1.total - e0.total;
        prop_assert!((diff - predicted).abs() <= 1e-10 * (1.0 + predicted.abs()), "{diff} vs {predicted}");
    }

    #[test]
    fn nonpositive_h_gives_a_convex_functional(cf in coeffs(), h1 in -2.0..0.0f64, h2 in -2.0..0.0f64) {
        let p = Problem::new(annulus(), CurvatureSpec::constant(-1.0, &[h1, h2], 0.0)).unwrap();
        let u = state(&p.mesh, cf.0, cf.1, cf.2, cf.3);
        let q = p.hessian_form(&u).unwrap();
        let s = pencil_spectrum(&q, &p.ops.h1, 1, DEFAULT_TOL_EIG, false).unwrap();
        prop_assert!(s.eigenvalues[0] >= -1e-10);
        prop_assert_eq!(s.negative_count, 0);
    }

    #[test]
    fn gradient_matches_central_differences(cf in coeffs(), psi in coeffs()) {
        let p = Problem::new(annulus(), CurvatureSpec::constant(-1.0, &[2.0, -3.0], 0.0)).unwrap();
        let u = state(&p.mesh, cf.0, cf.1, cf.2, cf.3);
        let dir = state(&p.mesh, psi.0, psi.1, psi.2, psi.3 + 0.7);
        let g = dot(&p.gradient(&u, 0.0).unwrap(), &dir.values);
        let fd = |t: f64| {
            let plus = StateField::new(u.values.iter().zip(&dir.values).map(|(a, b)| a + t * b).collect());
            let minus = StateField::new(u.values.iter().zip(&dir.values).map(|(a, b)| a - t * b).collect());
            (p.energy(&plus, 0.0).unwrap().total - p.energy(&minus, 0.0).unwrap().total) / (2.0 * t)
        };
        let (e1, e2) = ((fd(0.02) - g).abs(), (fd(0.01) - g).abs());
        prop_assert!(e2 < 1e-9 || (e1 / e2).log2() > 1.9, "errors {e1:.3e} {e2:.3e}");
    }

    #[test]
    fn perturbation_by_zero_is_the_identity(cf in coeffs(), h1 in -2.0..2.0f64) {
        let spec = CurvatureSpec::constant(-1.0, &[h1, 0.5], -0.5);
        let p = Problem::new(cylinder(), spec.clone()).unwrap();
        let q = p.with_spec(perturb(&spec, 0.0).unwrap()).unwrap();
        let u = state(&p.mesh, cf.0, cf.1, cf.2, cf.3);
        prop_assert_eq!(p.energy(&u, 0.0).unwrap().total, q.energy(&u, 0.0).unwrap().total);
    }

    #[test]
    fn negative_background_data_classify_as_thm1(kb in -2.0..-0.05f64, h1 in -0.99..0.99f64, h2 in -0.99..0.99f64, k in 1.0..3.0f64) {
        let spec = CurvatureSpec::constant(-k, &[h1, h2], kb);
        let r = regime_classify(&spec, &cylinder()).unwrap();
        prop_assert_eq!(r.kind, RegimeKind::Thm1);
    }

    #[test]
    fn bubble_masses_do_not_depend_on_lambda(lambda in 0.01..100.0f64, h0 in 1.01..5.0f64) {
        let (a, b) = bubble_masses(lambda, -1.0, h0).unwrap();
        let (a1, b1) = bubble_masses(1.0, -1.0, h0).unwrap();
        prop_assert!((a - a1).abs() < 1e-12 && (b - b1).abs() < 1e-12);
    }

    #[test]
    fn holomorphic_fields_satisfy_cauchy_riemann(a in prop::collection::vec(-1.0..1.0f64, 1..4), b in prop::collection::vec(-1.0..1.0f64, 0..3),
                                                 rho in 0.5..1.0f64, th in 0.0..6.28f64, w in (-5.0..5.0f64, -5.0..5.0f64)) {
        let f = holomorphic_field(&annulus(), &TrigPoly { a, b }).unwrap();
        let r = cauchy_riemann_residual(&f, [rho * th.cos(), rho * th.sin()], [w.0, w.1]);
        prop_assert!(r.abs() < 1e-10, "{r}");
    }

    #[test]
    fn normalized_mass_densities_sum_to_one(cf in coeffs(), h1 in 0.5..3.0f64) {
        let p = Problem::new(annulus(), CurvatureSpec::constant(-1.0, &[h1, -1.0], 0.0)).unwrap();
        let u = state(&p.mesh, cf.0, cf.1, cf.2, cf.3);
        let m = mass_measures(&p, &u).unwrap();
        prop_assert!((m.interior_density.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(m.interior_mass.iter().all(|v| *v >= 0.0));
        if let Some(bd) = &m.boundary_density {
            prop_assert!((bd.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tangential_derivative_annihilates_constants(c in -10.0..10.0f64) {
        let mesh = annulus();
        for comp in 0..mesh.components.len() {
            let f = vec![c; mesh.components[comp].vertices.len()];
            let d = tangential_derivative(&mesh, comp, &f).unwrap();
            prop_assert!(d.iter().all(|v| v.abs() < 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(config(6))]

    #[test]
    fn minimization_steps_decrease_energy(cf in coeffs(), h1 in 0.1..0.9f64) {
        let p = Problem::new(cylinder(), CurvatureSpec::constant(-1.0, &[h1, 0.3], -1.0)).unwrap();
        let r = minimize(&p, 0.0, &state(&p.mesh, cf.0, cf.1, cf.2, cf.3), &SolveOptions::default()).unwrap();
        prop_assert!(r.converged);
        let e: Vec<f64> = r.line_search_trace.iter().map(|s| s.energy).collect();
        prop_assert!(e.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{e:?}");
    }

    #[test]
    fn nonpositive_h_solutions_are_unique(a in coeffs(), b in coeffs()) {
        let p = Problem::new(cylinder(), CurvatureSpec::constant(-1.0, &[-0.5, -0.2], -1.0)).unwrap();
        let opts = SolveOptions::default();
        let u = minimize(&p, 0.0, &state(&p.mesh, a.0, a.1, a.2, a.3), &opts).unwrap();
        let v = minimize(&p, 0.0, &state(&p.mesh, b.0 + 1.0, b.1, b.2, b.3), &opts).unwrap();
        let d = u.state.values.iter().zip(&v.state.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(d < 1e-7, "{d:.3e}");
    }

    #[test]
    fn blowup_candidates_have_d_at_least_one(g0 in 2u32..5, steps in 2usize..4) {
        let mesh = Arc::new(DomainSpec::annulus(0.5, 3).build_mesh().unwrap());
        let members: Vec<_> = (0..steps).map(|k| AnnulusFamily::Gamma { gamma: g0 << k, h1: 2.0 }.problem(mesh.clone()).unwrap()).collect();
        let d = blowup_monitor(&members, &MonitorOptions::default()).unwrap();
        prop_assert!(d.blowing_up);
        prop_assert!(d.flag_d_ge_1);
        prop_assert!(d.candidates.iter().all(|c| c.d_min >= 1.0 - 1e-6));
    }
}
