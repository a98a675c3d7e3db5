// Pohozaev residuals of exact solutions under mesh refinement, for the radial
// field `F = x` and a holomorphic field `F = i z f(z)`.

use prescribed_curvature::acceptance::orders;
use prescribed_curvature::diagnostics::{holomorphic_field, pohozaev_residual, FluxMode, Identity, TrigPoly};
use prescribed_curvature::domain::DomainSpec;
use prescribed_curvature::exact::AnnulusFamily;
use std::sync::Arc;

pub fn run_example() -> prescribed_curvature::Result<(Vec<f64>, Vec<f64>)> {
    let fam = AnnulusFamily::Gamma { gamma: 1, h1: 2.0 };
    let f = TrigPoly { a: vec![0.0, 1.0], b: vec![] };
    let (mut radial, mut hol) = (Vec::new(), Vec::new());
    for level in 1..=3 {
        let mesh = Arc::new(DomainSpec::annulus(0.5, level).build_mesh()?);
        let (p, _) = fam.problem(mesh.clone())?;
        let u = fam.rotated_state(&mesh, std::f64::consts::FRAC_PI_4)?;
        radial.push(pohozaev_residual(&p, &u, &Identity, FluxMode::Weak)?.residual);
        hol.push(pohozaev_residual(&p, &u, &holomorphic_field(&mesh, &f)?, FluxMode::Weak)?.residual);
    }
    for (name, r) in [("F = x", &radial), ("holomorphic", &hol)] {
        let s: Vec<String> = r.iter().map(|v| format!("{v:.3e}")).collect();
        println!("{name}: residuals [{}], orders {:.2?}", s.join(", "), orders(r));
    }
    Ok((orders(&radial), orders(&hol)))
}

fn main() -> prescribed_curvature::Result<()> {
    run_example().map(|_| ())
}
