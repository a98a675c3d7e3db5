// Energy of concentrating test functions `log(4 mu^2 / (mu^2 |x - q|^2 - 1)^2)`
// at a boundary point with `D > 1`: the energy is unbounded below.

use prescribed_curvature::diagnostics::testfunction_energy_curve;
use prescribed_curvature::domain::DomainSpec;
use prescribed_curvature::fields::CurvatureSpec;

pub fn run_example() -> prescribed_curvature::Result<Vec<f64>> {
    let domain = DomainSpec::annulus(0.5, 0);
    let spec = CurvatureSpec::constant(-1.0, &[2.0, -3.0], 0.0);
    let p = domain.boundary_point(0, 0.0);
    let q2 = 0.1;
    let mus: Vec<f64> = (0..6).map(|k| (1.0 + (2.0 * 0.5f64.powi(k)).powi(2)).sqrt() / q2).collect();
    let rows = testfunction_energy_curve(&spec, &domain, &p, q2, &mus, 0.5)?;
    for r in &rows {
        println!(
            "mu = {:9.3}: Dirichlet {:9.3}, area {:8.3}, boundary {:8.3}, I = {:9.3}",
            r.mu, r.dirichlet, r.area, r.boundary, r.energy
        );
    }
    Ok(rows.iter().map(|r| r.energy).collect())
}

fn main() -> prescribed_curvature::Result<()> {
    run_example().map(|_| ())
}
