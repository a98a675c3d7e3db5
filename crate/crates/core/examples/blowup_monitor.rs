// Blow-up diagnostics for two closed-form families: `u_gamma` concentrates at
// `gamma` points where `D = 2`; the log family spreads over the whole outer circle.

use prescribed_curvature::diagnostics::{blowup_monitor, MonitorOptions};
use prescribed_curvature::domain::DomainSpec;
use prescribed_curvature::energy::{Problem, StateField};
use prescribed_curvature::exact::AnnulusFamily;
use std::sync::Arc;

pub fn run_example() -> prescribed_curvature::Result<(usize, usize)> {
    let mesh = Arc::new(DomainSpec::annulus(0.5, 3).build_mesh()?);
    let opts = MonitorOptions::default();

    let gamma: Vec<(Problem, StateField)> =
        [4, 8, 16].iter().map(|&g| AnnulusFamily::Gamma { gamma: g, h1: 2.0 }.problem(mesh.clone())).collect::<Result<_, _>>()?;
    let g = blowup_monitor(&gamma, &opts)?;
    println!(
        "gamma: blowing up {}, {} candidates, D = {:?}, concentration {:.4}",
        g.blowing_up,
        g.candidates.len(),
        g.candidates.iter().map(|c| c.d_min).collect::<Vec<_>>(),
        g.concentration_fraction
    );

    let log: Vec<(Problem, StateField)> =
        [-1.0, -0.3, -0.1, -0.03].iter().map(|&l| AnnulusFamily::Log { lambda: l }.problem(mesh.clone())).collect::<Result<_, _>>()?;
    let l = blowup_monitor(&log, &opts)?;
    println!(
        "log: blowing up {}, {} candidate(s), covers outer circle {}, TV distance {:?}",
        l.blowing_up,
        l.candidates.len(),
        l.candidates.first().is_some_and(|c| c.covers_component),
        l.tv_distance
    );
    Ok((g.candidates.len(), l.candidates.len()))
}

fn main() -> prescribed_curvature::Result<()> {
    run_example().map(|_| ())
}
