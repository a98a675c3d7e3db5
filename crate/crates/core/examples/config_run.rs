// Drives the same pipeline as `pcurv` from an in-memory TOML config.

use prescribed_curvature::config::{ExperimentConfig, Mode};
use prescribed_curvature::run::{run, RunOptions, Status};

const CONFIG: &str = r#"
[domain]
kind = "cylinder"
length = 1.0
level = 0
base = [4, 32]

[curvature]
k = "-1 - 0.5 * sin(x) ^ 2"
h = ["0.5 + 0.2 * cos(s)", "0.3"]
k_bg = -1.0

[solve]
method = "minimize"
"#;

pub fn run_example() -> prescribed_curvature::Result<Status> {
    let cfg = ExperimentConfig::parse(CONFIG)?;
    let out = std::env::temp_dir().join(format!("pcurv-config-run-{}", std::process::id()));
    let r = run(Mode::Solve, &cfg, &RunOptions { out: Some(out.clone()), ..Default::default() })?;
    for l in &r.lines {
        println!("{l}");
    }
    println!("wrote {:?} to {}", r.artifacts, out.display());
    std::fs::remove_dir_all(&out)?;
    Ok(r.status)
}

fn main() -> prescribed_curvature::Result<()> {
    run_example().map(|_| ())
}
