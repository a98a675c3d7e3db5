//! One line per acceptance criterion; exits non-zero if any fails.
//! `PCURV_QUICK=1` runs the coarse battery.

use prescribed_curvature::acceptance::{run_criterion, CRITERIA};
use prescribed_curvature::run::{parallel_map, threads_from_env};

fn main() {
    let quick = std::env::var("PCURV_QUICK").is_ok_and(|v| v == "1");
    let ids: Vec<u32> = CRITERIA.iter().map(|c| c.0).collect();
    let results = parallel_map(&ids, threads_from_env(), |&id| run_criterion(id, quick));
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
