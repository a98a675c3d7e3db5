// The quadratic form of the boundary bubble pulled back to a disk: index one,
// a two-dimensional kernel spanned by `x_i / (1 - |x|^2)`.

use prescribed_curvature::spectral::{disk_form_index, DEFAULT_TOL_EIG};

pub fn run_example() -> prescribed_curvature::Result<Vec<usize>> {
    let mut idx = Vec::new();
    for d0 in [1.2, 2.0] {
        let r = disk_form_index(d0, 4, 4, DEFAULT_TOL_EIG)?;
        println!(
            "D0 = {d0}: R = {:.4}, index {}, extrapolated {:?}, correlation {:.6}, boundary eigenvalue {:.4} (1/D0 - D0 = {:.4})",
            r.radius,
            r.index,
            r.extrapolated_eigenvalues,
            r.first_correlation,
            r.boundary_eigenvalue,
            1.0 / d0 - d0
        );
        idx.push(r.index);
    }
    Ok(idx)
}

fn main() -> prescribed_curvature::Result<()> {
    run_example().map(|_| ())
}
