// Global minimizer on the cylinder `S^1 x [0, 1]` with `K = K~ = -1` and
// constant `h = 0.5`, compared against the one-dimensional shooting solution.

use prescribed_curvature::acceptance::ShootingOracle;
use prescribed_curvature::domain::DomainSpec;
use prescribed_curvature::energy::{Problem, StateField};
use prescribed_curvature::fields::{regime_classify, CurvatureSpec};
use prescribed_curvature::solve::{minimize, SolveOptions};
use prescribed_curvature::spectral::{morse_index, DEFAULT_TOL_EIG};

pub fn run_example() -> prescribed_curvature::Result<f64> {
    let domain = DomainSpec::cylinder(1.0, 1).with_base(4, 64);
    let spec = CurvatureSpec::constant(-1.0, &[0.5, 0.5], -1.0);
    let p = Problem::from_mesh(domain.build_mesh()?, spec)?;
    println!("regime: {:?}", regime_classify(&p.spec, &p.mesh)?.kind);

    let r = minimize(&p, 0.0, &StateField::constant(&p.mesh, 0.0), &SolveOptions::default())?;
    println!("converged {} after {} iterations, I = {:.8}, |grad| = {:.2e}", r.converged, r.iterations, r.energy.total, r.residual_norm);

    let oracle = ShootingOracle::new(-1.0, -1.0, 0.5, 1.0, 4000)?;
    let err = p
        .mesh
        .dof_coords()
        .iter()
        .zip(&r.state.values)
        .map(|(x, u)| (u - oracle.eval(x[1])).abs())
        .fold(0.0, f64::max);
    let index = morse_index(&p, &r.state, 0.0, 3, DEFAULT_TOL_EIG)?;
    println!("max |u - u_ode| = {err:.3e}, Morse index {}", index.negative_count);
    Ok(err)
}

fn main() -> prescribed_curvature::Result<()> {
    run_example().map(|_| ())
}
