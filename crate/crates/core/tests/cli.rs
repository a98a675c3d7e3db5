use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("pcurv-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn pcurv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcurv")).args(args).env("PCURV_THREADS", "2").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn classify_reports_thm1() {
    let out = scratch("classify");
    let cfg = configs().join("classify_variable.toml");
    let o = pcurv(&["classify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("regime: Thm1"));
    assert!(out.join("regime.json").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn gamma_sweep_csv_has_increasing_sup() {
    let out = scratch("sweep");
    let cfg = configs().join("gamma_sweep.toml");
    let o = pcurv(&["exact-sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(out.join("sweep.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(&headers[1], "sup_u");
    let sups: Vec<f64> = rdr.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(sups.len(), 5);
    assert!(sups.windows(2).all(|w| w[1] > w[0]), "{sups:?}");
}

#[test]
fn malformed_expression_exits_with_config_error() {
    let dir = scratch("bad-expr");
    let text = std::fs::read_to_string(configs().join("flat_cylinder.toml")).unwrap().replace("k = \"-1\"", "k = \"-1 +* x\"");
    let cfg = dir.join("bad.toml");
    std::fs::write(&cfg, text).unwrap();
    let o = pcurv(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("curvature.k"), "{}", stderr(&o));
}

#[test]
fn missing_section_names_the_key() {
    let dir = scratch("missing");
    let cfg = dir.join("missing.toml");
    std::fs::write(&cfg, "[domain]\nkind = \"annulus\"\ninner_radius = 0.5\n").unwrap();
    let o = pcurv(&["testfn", "--config", cfg.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("[curvature]"), "{}", stderr(&o));
}

#[test]
fn unconverged_solve_exits_with_two() {
    let dir = scratch("noconv");
    let text = std::fs::read_to_string(configs().join("flat_cylinder.toml")).unwrap().replace("[solve]", "[solver]\nmax_iter = 1\n\n[solve]");
    let cfg = dir.join("noconv.toml");
    std::fs::write(&cfg, text).unwrap();
    let o = pcurv(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}{}", stdout(&o), stderr(&o));
    assert!(dir.join("out/report.json").exists());
}

#[test]
fn repeated_runs_write_identical_artifacts() {
    let cfg = configs().join("flat_cylinder.toml");
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    for d in [&a, &b] {
        let o = pcurv(&["solve", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    let files: Vec<String> = manifest["artifacts"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    assert!(files.iter().any(|f| f == "state.csv") && files.iter().any(|f| f == "mesh/vertices.dat"));
    for f in files.iter().chain(std::iter::once(&"manifest.json".to_string())) {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn shipped_configs_validate() {
    use prescribed_curvature::config::ExperimentConfig;
    let mut n = 0;
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::load(&path).unwrap();
            let mode = cfg.mode.expect("shipped configs name their mode");
            cfg.validate(mode).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 8);
}
