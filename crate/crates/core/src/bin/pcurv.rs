use clap::{Parser, ValueEnum};
use prescribed_curvature::config::Mode;
use prescribed_curvature::run::{exit_code, run_file, RunOptions};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Solve,
    Classify,
    Spectrum,
    ExactSweep,
    Blowup,
    Pohozaev,
    Testfn,
    Verify,
}

impl From<Cmd> for Mode {
    fn from(c: Cmd) -> Mode {
        match c {
            Cmd::Solve => Mode::Solve,
            Cmd::Classify => Mode::Classify,
            Cmd::Spectrum => Mode::Spectrum,
            Cmd::ExactSweep => Mode::ExactSweep,
            Cmd::Blowup => Mode::Blowup,
            Cmd::Pohozaev => Mode::Pohozaev,
            Cmd::Testfn => Mode::Testfn,
            Cmd::Verify => Mode::Verify,
        }
    }
}

/// Prescribed Gaussian and geodesic curvature on flat surfaces with boundary.
#[derive(Debug, Parser)]
#[command(name = "pcurv", version)]
struct Args {
    mode: Cmd,
    /// TOML experiment file; `verify` runs without one.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Coarser meshes and a shorter battery.
    #[arg(long)]
    quick: bool,
}

fn main() {
    let args = Args::parse();
    let mode: Mode = args.mode.into();
    let opts = RunOptions { out: args.out, quick: args.quick, threads: None };
    let result = match &args.config {
        Some(path) => run_file(mode, path, &opts),
        None if matches!(mode, Mode::Verify) => prescribed_curvature::run::run(mode, &Default::default(), &opts),
        None => Err(prescribed_curvature::Error::Config(format!("--config is required for {}", mode.name()))),
    };
    match &result {
        Ok(o) => {
            for l in &o.lines {
                println!("{l}");
            }
            println!("artifacts in {}", o.out_dir.display());
        }
        Err(e) => eprintln!("error: {e}"),
    }
    std::process::exit(exit_code(&result));
}
