// Runs the acceptance battery; pass `--quick` for coarser meshes.

use prescribed_curvature::acceptance::verify_suite;

pub fn run_example(quick: bool) -> usize {
    let results = verify_suite(quick);
    for r in &results {
        println!("{r}");
    }
    results.iter().filter(|r| !r.passed).count()
}

fn main() {
    let quick = std::env::args().any(|a| a == "--quick");
    std::process::exit(if run_example(quick) == 0 { 0 } else { 1 });
}
