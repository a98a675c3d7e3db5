// Which existence result applies to a given set of curvature data.

use prescribed_curvature::domain::DomainSpec;
use prescribed_curvature::fields::{regime_classify, CurvatureSpec, Field, RegimeKind};

pub fn run_example() -> prescribed_curvature::Result<Vec<RegimeKind>> {
    let cylinder = DomainSpec::cylinder(1.0, 0).with_base(4, 32).build_mesh()?;
    let annulus = DomainSpec::annulus(0.5, 2).build_mesh()?;
    let variable = CurvatureSpec::new(
        Field::expr("-1 - 0.5 * sin(x) ^ 2")?,
        vec![Field::expr("0.5 + 0.2 * cos(s)")?, Field::Const(0.3)],
        -1.0,
    );
    let cases = [
        ("cylinder, K~ = -1, h = 0.5", CurvatureSpec::constant(-1.0, &[0.5, 0.5], -1.0), &cylinder),
        ("cylinder, K~ = 0, h = (0.5, 0.3)", CurvatureSpec::constant(-1.0, &[0.5, 0.3], 0.0), &cylinder),
        ("cylinder, variable K and h", variable, &cylinder),
        ("annulus, h = (2, -3)", CurvatureSpec::constant(-1.0, &[2.0, -3.0], 0.0), &annulus),
        ("annulus, h = (2, 3)", CurvatureSpec::constant(-1.0, &[2.0, 3.0], 0.0), &annulus),
    ];
    let mut kinds = Vec::new();
    for (name, spec, mesh) in cases {
        let r = regime_classify(&spec, mesh)?;
        println!("{name}: {:?}, max D = {:.3}, oint h = {:.3} ({})", r.kind, r.max_d, r.boundary_h_integral, r.reason);
        kinds.push(r.kind);
    }
    Ok(kinds)
}

fn main() -> prescribed_curvature::Result<()> {
    run_example().map(|_| ())
}
