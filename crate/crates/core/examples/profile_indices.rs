// Morse indices of half-plane profiles on truncated half-disks: the
// one-dimensional solutions are stable, the bubble has index one.

use prescribed_curvature::exact::HalfPlaneProfile;
use prescribed_curvature::spectral::{halfplane_profile_index, DEFAULT_TOL_EIG};

pub fn run_example() -> prescribed_curvature::Result<Vec<usize>> {
    let profiles = [
        ("one-d", HalfPlaneProfile::OneD { lambda: 1.0 }),
        ("bubble", HalfPlaneProfile::Bubble { lambda: 1.0, s0: 0.0, h0: 2f64.sqrt() }),
    ];
    let mut out = Vec::new();
    for (name, p) in profiles {
        for r in [10.0, 50.0] {
            let s = halfplane_profile_index(&p, r, 3, 4, DEFAULT_TOL_EIG)?;
            println!("{name}, R = {r}: index {}, lowest {:?}", s.negative_count, &s.eigenvalues[..2]);
            out.push(s.negative_count);
        }
    }
    Ok(out)
}

fn main() -> prescribed_curvature::Result<()> {
    run_example().map(|_| ())
}
