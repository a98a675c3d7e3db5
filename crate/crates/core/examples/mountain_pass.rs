// Saddle point of `I_eps` on the annulus with `h = (2, -3)`: local minimum near
// constants, a concentrated test function with lower energy, the mountain pass
// between them, then continuation as `eps` decreases.

use prescribed_curvature::acceptance::saddle_problem;
use prescribed_curvature::solve::{continuation, saddle_search, EndpointOptions, SolveOptions};

pub fn run_example() -> prescribed_curvature::Result<Vec<f64>> {
    let p = saddle_problem(3)?;
    let point = p.mesh.boundary_point(0, 0.0);
    let eo = EndpointOptions::default();
    let opts = SolveOptions { eps_schedule: vec![0.05, 0.02, 0.01], ..Default::default() };

    let s = saddle_search(&p, 0.05, &point, &eo, &opts)?;
    let mp = &s.mountain_pass;
    println!(
        "I(u0) = {:.4}, I(u1) = {:.4}, saddle I = {:.4}, index {:?}, barrier margin {:?}",
        s.u0.energy.total, s.u1.energy, mp.solve.energy.total, mp.solve.index, mp.barrier.margin
    );

    let c = continuation(&p, &opts, |eps| Ok(saddle_search(&p, eps, &point, &eo, &opts)?.mountain_pass.solve))?;
    for step in &c.steps {
        println!("eps = {:.3}: sup u = {:.5}, index {:?}, GB defect {:.1e}", step.eps, step.sup_u, step.report.index, step.gb_residual);
    }
    println!("{}", c.verdict);
    Ok(c.steps.iter().map(|s| s.sup_u).collect())
}

fn main() -> prescribed_curvature::Result<()> {
    run_example().map(|_| ())
}
