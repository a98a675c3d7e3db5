//! Experiment runner behind `pcurv`: one function per mode, each writing its
//! artifacts (JSON, CSV, gnuplot-ready `.dat` plus a plot script) and a manifest.

use crate::acceptance::{self, CriterionResult};
use crate::config::{ExperimentConfig, FamilyConfig, FamilyKind, FieldConfig, Mode, SolveMethod, SpectrumConfig};
use crate::diagnostics::{blowup_monitor, holomorphic_field, pohozaev_residual, testfunction_energy_curve, Identity, VectorField};
use crate::domain::{DomainKind, DomainSpec, Mesh};
use crate::energy::{Problem, StateField};
use crate::error::{Error, Result};
use crate::fields::{regime_classify, Field, FieldPoint};
use crate::solve::{continuation, find_critical, minimize, saddle_search, SolveReport};
use crate::spectral::{disk_form_index, halfplane_profile_index, morse_index, profile_problem};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// How a run ended; maps to the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    NotConverged,
    Failed,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub mode: Mode,
    pub status: Status,
    pub out_dir: PathBuf,
    pub artifacts: Vec<String>,
    /// Human-readable lines printed by the binary.
    pub lines: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub quick: bool,
    /// Worker threads for independent jobs; `PCURV_THREADS` when `None`.
    pub threads: Option<usize>,
}

/// Process exit code for a finished run or an error.
pub fn exit_code(r: &Result<RunOutcome>) -> i32 {
    match r {
        Ok(o) => match o.status {
            Status::Ok => 0,
            Status::NotConverged => 2,
            Status::Failed => 1,
        },
        Err(e) => error_code(e),
    }
}

pub fn error_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Expression { .. } | Error::InvalidField(_) | Error::InvalidDomain(_) => 3,
        Error::NotConverged(_) => 2,
        _ => 1,
    }
}

pub fn threads_from_env() -> usize {
    std::env::var("PCURV_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `f` on every item with up to `threads` workers; results keep input order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = threads.clamp(1, items.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut out: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let slots = std::sync::Mutex::new(&mut out);
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    out.into_iter().map(|r| r.unwrap()).collect()
}

struct Writer {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), artifacts: Vec::new() })
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, v: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(v)?;
        std::fs::write(self.dir.join(name), text + "\n")?;
        self.artifacts.push(name.into());
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let mut w = csv::Writer::from_path(self.dir.join(name))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r.iter().map(|v| format!("{v:.12e}")))?;
        }
        w.flush()?;
        self.artifacts.push(name.into());
        Ok(())
    }

    /// Whitespace-separated columns with a `#` header, for gnuplot.
    fn dat(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let mut s = format!("# {}\n", header.join(" "));
        for r in rows {
            let line: Vec<String> = r.iter().map(|v| format!("{v:.10e}")).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        std::fs::write(self.dir.join(name), s)?;
        self.artifacts.push(name.into());
        Ok(())
    }

    fn plot(&mut self, name: &str, body: &str) -> Result<()> {
        let png = name.trim_end_matches(".gp");
        let s = format!("set terminal pngcairo size 900,650\nset output '{png}.png'\nset grid\n{body}\n");
        std::fs::write(self.dir.join(name), s)?;
        self.artifacts.push(name.into());
        Ok(())
    }
}

fn eval_expr(src: &str, key: &str) -> Result<Field> {
    crate::config::parse_field(key, src)
}

fn interpolate(mesh: &Mesh, f: &Field) -> Result<StateField> {
    let values = mesh.dof_coords().iter().map(|&x| f.eval(&FieldPoint::interior(x))).collect::<Result<Vec<_>>>()?;
    Ok(StateField::new(values))
}

fn quick_level(d: DomainSpec, quick: bool) -> DomainSpec {
    if quick {
        d.with_level(d.level.saturating_sub(1))
    } else {
        d
    }
}

fn state_rows(mesh: &Mesh, u: &StateField) -> Vec<Vec<f64>> {
    mesh.dof_coords().iter().zip(&u.values).map(|(x, v)| vec![x[0], x[1], *v]).collect()
}

const STATE_PLOT: &str = "set xlabel 'x'\nset ylabel 'y'\nset view map\nsplot 'state.dat' using 1:2:3 with points pointtype 7 pointsize 0.5 palette title 'u'";

/// Loads `path`, runs `mode` and writes artifacts under the output directory.
pub fn run_file(mode: Mode, path: &Path, opts: &RunOptions) -> Result<RunOutcome> {
    let cfg = ExperimentConfig::load(path)?;
    run(mode, &cfg, opts)
}

pub fn run(mode: Mode, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome> {
    if let Some(m) = cfg.mode {
        if m != mode {
            return Err(Error::Config(format!("mode: config is for {} but {} was requested", m.name(), mode.name())));
        }
    }
    cfg.validate(mode)?;
    let out_dir = opts
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(mode.name()));
    let mut w = Writer::new(&out_dir)?;
    let mut lines = Vec::new();
    let status = match mode {
        Mode::Solve => solve(cfg, opts, &mut w, &mut lines)?,
        Mode::Classify => classify(cfg, opts, &mut w, &mut lines)?,
        Mode::Spectrum => spectrum(cfg, opts, &mut w, &mut lines)?,
        Mode::ExactSweep => sweep(cfg, opts, &mut w, &mut lines)?,
        Mode::Blowup => blowup(cfg, opts, &mut w, &mut lines)?,
        Mode::Pohozaev => pohozaev(cfg, opts, &mut w, &mut lines)?,
        Mode::Testfn => testfn(cfg, &mut w, &mut lines)?,
        Mode::Verify => verify(opts, &mut w, &mut lines)?,
    };
    let manifest = json!({
        "mode": mode.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "quick": opts.quick,
        "status": status,
        "seed": cfg.seed,
        "acceptance_seed": acceptance::SEED,
        "tolerances": {
            "solver_tol": cfg.solver.tol,
            "tol_eig": crate::spectral::DEFAULT_TOL_EIG,
            "blowup_threshold": cfg.solver.blowup_threshold,
        },
        "config": cfg,
        "artifacts": w.artifacts,
    });
    w.json("manifest.json", &manifest)?;
    Ok(RunOutcome { mode, status, out_dir, artifacts: w.artifacts, lines })
}

fn problem(cfg: &ExperimentConfig, quick: bool) -> Result<Problem> {
    let d = quick_level(cfg.domain()?, quick);
    Problem::from_mesh(d.build_mesh()?, cfg.curvature()?)
}

fn write_solve(w: &mut Writer, p: &Problem, r: &SolveReport) -> Result<()> {
    for name in p.mesh.write_tables(&w.dir.join("mesh"))? {
        w.artifacts.push(format!("mesh/{name}"));
    }
    let rows = state_rows(&p.mesh, &r.state);
    w.csv("state.csv", &["x", "y", "u"], &rows)?;
    w.dat("state.dat", &["x", "y", "u"], &rows)?;
    w.plot("state.gp", STATE_PLOT)?;
    let trace: Vec<Vec<f64>> =
        r.line_search_trace.iter().map(|t| vec![t.iteration as f64, t.alpha, t.energy, t.residual, t.shift]).collect();
    w.csv("trace.csv", &["iteration", "alpha", "energy", "residual", "shift"], &trace)
}

fn solve_summary(lines: &mut Vec<String>, r: &SolveReport) {
    lines.push(format!(
        "{:?}: converged {}, I = {:.10}, residual {:.3e}, iterations {}, index {:?}, sup u {:.6}",
        r.method,
        r.converged,
        r.energy.total,
        r.residual_norm,
        r.iterations,
        r.index,
        r.state.max()
    ));
}

fn solve(cfg: &ExperimentConfig, opts: &RunOptions, w: &mut Writer, lines: &mut Vec<String>) -> Result<Status> {
    let sc = cfg.solve.as_ref().unwrap();
    let p = problem(cfg, opts.quick)?;
    let regime = regime_classify(&p.spec, &p.mesh)?;
    lines.push(format!("regime: {:?} ({})", regime.kind, regime.reason));
    let point = sc.point.map(|q| p.mesh.boundary_point(q.component, q.s));
    let (report, extra) = match sc.method {
        SolveMethod::Minimize | SolveMethod::Newton => {
            let init = interpolate(&p.mesh, &eval_expr(&sc.init, "solve.init")?)?;
            let r = if sc.method == SolveMethod::Minimize {
                minimize(&p, sc.eps, &init, &cfg.solver)?
            } else {
                find_critical(&p, sc.eps, &init, &cfg.solver)?
            };
            (r, Value::Null)
        }
        SolveMethod::MountainPass => {
            let s = saddle_search(&p, sc.eps, &point.unwrap(), &cfg.endpoints, &cfg.solver)?;
            let path = &s.mountain_pass.path;
            let rows: Vec<Vec<f64>> =
                (0..path.points.len()).map(|j| vec![j as f64, path.energies[j], path.boundary_exp[j]]).collect();
            w.csv("path.csv", &["point", "energy", "boundary_exp"], &rows)?;
            w.dat("path.dat", &["point", "energy", "boundary_exp"], &rows)?;
            w.plot("path.gp", "set xlabel 'path point'\nset ylabel 'I_eps'\nplot 'path.dat' using 1:2 with linespoints title 'energy along path'")?;
            lines.push(format!(
                "endpoints: I(u0) = {:.6}, I(u1) = {:.6} (a = {:.3e}); barrier margin {:?}",
                s.u0.energy.total, s.u1.energy, s.u1.a, s.mountain_pass.barrier.margin
            ));
            let extra = json!({
                "u0_energy": s.u0.energy.total,
                "u1": { "a": s.u1.a, "mu": s.u1.mu, "energy": s.u1.energy, "boundary_exp": s.u1.boundary_exp, "tried": s.u1.tried },
                "barrier": s.mountain_pass.barrier,
                "max_energy_trace": s.mountain_pass.max_energy_trace,
            });
            (s.mountain_pass.solve, extra)
        }
        SolveMethod::Continuation => {
            let q = point.unwrap();
            let c = continuation(&p, &cfg.solver, |eps| {
                Ok(saddle_search(&p, eps, &q, &cfg.endpoints, &cfg.solver)?.mountain_pass.solve)
            })?;
            let rows: Vec<Vec<f64>> = c
                .steps
                .iter()
                .map(|s| vec![s.eps, s.sup_u, s.area_mass, s.gb_residual, s.report.energy.total, s.report.residual_norm])
                .collect();
            let header = ["eps", "sup_u", "area_mass", "gb_residual", "energy", "residual"];
            w.csv("continuation.csv", &header, &rows)?;
            w.dat("continuation.dat", &header, &rows)?;
            w.plot("continuation.gp", "set logscale x\nset xlabel 'eps'\nset ylabel 'sup u'\nplot 'continuation.dat' using 1:2 with linespoints title 'sup u'")?;
            for s in &c.steps {
                lines.push(format!("eps {:.4}: sup u {:.6}, index {:?}, warm {}", s.eps, s.sup_u, s.report.index, s.warm_started));
            }
            lines.push(format!("verdict: {}", c.verdict));
            let last = c.steps.last().ok_or_else(|| Error::NotConverged("empty continuation".into()))?.report.clone();
            let mut r = last;
            r.converged = r.converged && !c.blowup;
            let extra = json!({
                "verdict": c.verdict,
                "blowup": c.blowup,
                "steps": c.steps.iter().map(|s| json!({
                    "eps": s.eps, "sup_u": s.sup_u, "area_mass": s.area_mass, "boundary_mass": s.boundary_mass,
                    "gb_residual": s.gb_residual, "chi_gen": s.chi_gen, "warm_started": s.warm_started,
                    "index": s.report.index, "converged": s.report.converged,
                })).collect::<Vec<_>>(),
            });
            (r, extra)
        }
    };
    solve_summary(lines, &report);
    let spec = if report.state.is_finite() { Some(morse_index(&p, &report.state, sc.eps, sc.k, crate::spectral::DEFAULT_TOL_EIG)?) } else { None };
    if let Some(s) = &spec {
        lines.push(format!("Morse index {}, lowest eigenvalues {:?}", s.negative_count, s.eigenvalues));
    }
    write_solve(w, &p, &report)?;
    let gb = p.gauss_bonnet_residual(&report.state)?;
    w.json(
        "report.json",
        &json!({
            "method": report.method,
            "eps": report.eps,
            "converged": report.converged,
            "blowup_flag": report.blowup_flag,
            "energy": report.energy,
            "residual_norm": report.residual_norm,
            "iterations": report.iterations,
            "index": report.index,
            "message": report.message,
            "sup_u": report.state.max(),
            "inf_u": report.state.min(),
            "gauss_bonnet_residual": gb,
            "spectrum": spec,
            "regime": regime,
            "details": extra,
        }),
    )?;
    Ok(if report.converged { Status::Ok } else { Status::NotConverged })
}

fn classify(cfg: &ExperimentConfig, opts: &RunOptions, w: &mut Writer, lines: &mut Vec<String>) -> Result<Status> {
    let d = quick_level(cfg.domain()?, opts.quick);
    let mesh = d.build_mesh()?;
    let regime = regime_classify(&cfg.curvature()?, &mesh)?;
    lines.push(format!("regime: {:?}", regime.kind));
    lines.push(format!("max D = {:.6} at {:?}, min D = {:.6}, oint h = {:.6}", regime.max_d, regime.argmax, regime.min_d, regime.boundary_h_integral));
    if let Some(c) = regime.annulus_case {
        lines.push(format!("annulus case: {c:?}"));
    }
    lines.push(regime.reason.clone());
    w.json("regime.json", &regime)?;
    Ok(Status::Ok)
}

fn spectrum(cfg: &ExperimentConfig, opts: &RunOptions, w: &mut Writer, lines: &mut Vec<String>) -> Result<Status> {
    let drop = |l: u32| if opts.quick { l.saturating_sub(1) } else { l };
    let mut eig_rows = Vec::new();
    let report = match cfg.spectrum.as_ref().unwrap() {
        SpectrumConfig::State { state, eps, k, tol_eig } => {
            let p = problem(cfg, opts.quick)?;
            let u = interpolate(&p.mesh, &eval_expr(state, "spectrum.state")?)?;
            let s = morse_index(&p, &u, *eps, *k, *tol_eig)?;
            lines.push(format!("Morse index {}, eigenvalues {:?}", s.negative_count, s.eigenvalues));
            eig_rows.extend(s.eigenvalues.iter().enumerate().map(|(i, m)| vec![0.0, i as f64, *m]));
            serde_json::to_value(&s)?
        }
        SpectrumConfig::DiskForm { d0, level, k, tol_eig } => {
            let mut all = Vec::new();
            for &d in d0 {
                let r = disk_form_index(d, drop(*level), *k, *tol_eig)?;
                lines.push(format!(
                    "D0 = {d}: R = {:.6}, index {}, extrapolated eigenvalues {:?}, correlation {:.6}, kernel {:.2e}",
                    r.radius,
                    r.index,
                    r.extrapolated_eigenvalues,
                    r.first_correlation,
                    r.kernel_extrapolated[0].max(r.kernel_extrapolated[1])
                ));
                eig_rows.extend(r.extrapolated_eigenvalues.iter().enumerate().map(|(i, m)| vec![d, i as f64, *m]));
                all.push(r);
            }
            serde_json::to_value(&all)?
        }
        SpectrumConfig::Profile { profile, radii, level, k, tol_eig } => {
            let mut all = Vec::new();
            for &r in radii {
                let s = halfplane_profile_index(profile, r, drop(*level), *k, *tol_eig)?;
                lines.push(format!("R = {r}: index {}, eigenvalues {:?}", s.negative_count, s.eigenvalues));
                eig_rows.extend(s.eigenvalues.iter().enumerate().map(|(i, m)| vec![r, i as f64, *m]));
                all.push(json!({ "radius": r, "spectrum": s }));
            }
            serde_json::to_value(&all)?
        }
    };
    w.json("spectrum.json", &report)?;
    w.csv("eigenvalues.csv", &["parameter", "i", "eigenvalue"], &eig_rows)?;
    w.dat("eigenvalues.dat", &["parameter", "i", "eigenvalue"], &eig_rows)?;
    w.plot("eigenvalues.gp", "set xlabel 'i'\nset ylabel 'eigenvalue'\nplot 'eigenvalues.dat' using 2:3 with points pointtype 7 title 'eigenvalues'")?;
    Ok(Status::Ok)
}

/// Problems and exact states for each member of a family.
fn family_states(fam: &FamilyConfig, domain: DomainSpec) -> Result<Vec<(Problem, StateField)>> {
    match fam.family {
        FamilyKind::Bubble => {
            if !matches!(domain.kind, DomainKind::HalfDisk { .. }) {
                return Err(Error::Config("domain: bubble families need kind = \"half-disk\"".into()));
            }
            let mesh = Arc::new(domain.build_mesh()?);
            fam.bubble_members().iter().map(|b| profile_problem(b, mesh.clone())).collect()
        }
        _ => {
            if !matches!(domain.kind, DomainKind::Annulus { .. }) {
                return Err(Error::Config("domain: annulus families need kind = \"annulus\"".into()));
            }
            let mesh = Arc::new(domain.build_mesh()?);
            fam.annulus_members()?.iter().map(|m| m.problem(mesh.clone())).collect()
        }
    }
}

fn sweep(cfg: &ExperimentConfig, opts: &RunOptions, w: &mut Writer, lines: &mut Vec<String>) -> Result<Status> {
    let fam = cfg.sweep.as_ref().unwrap();
    let states = family_states(fam, quick_level(cfg.domain()?, opts.quick))?;
    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    for (v, (p, u)) in fam.values.iter().zip(&states) {
        let (area, bnd) = crate::solve::masses(p, u);
        let gb = p.gauss_bonnet_residual(u)?;
        let res = p.residual_norm(u, 0.0)?;
        lines.push(format!("{v}: sup u {:.6}, inf u {:.6}, area mass {:.6}, GB defect {:.2e}, residual {:.2e}", u.max(), u.min(), area, gb, res));
        let mut r = vec![*v, u.max(), u.min(), area];
        r.extend(&bnd);
        r.extend([gb, res]);
        rows.push(r);
        json_rows.push(json!({ "parameter": v, "sup_u": u.max(), "inf_u": u.min(), "area_mass": area, "boundary_mass": bnd, "gb_residual": gb, "residual": res }));
    }
    let nb = states.first().map_or(0, |s| s.0.mesh.components.len());
    let mut header: Vec<String> = ["parameter", "sup_u", "inf_u", "area_mass"].map(String::from).to_vec();
    header.extend((0..nb).map(|c| format!("boundary_mass_{c}")));
    header.extend(["gb_residual", "residual"].map(String::from));
    let h: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    w.csv("sweep.csv", &h, &rows)?;
    w.dat("sweep.dat", &h, &rows)?;
    w.plot("sweep.gp", "set xlabel 'parameter'\nset ylabel 'sup u'\nplot 'sweep.dat' using 1:2 with linespoints title 'sup u'")?;
    w.json("sweep.json", &json_rows)?;
    Ok(Status::Ok)
}

fn blowup(cfg: &ExperimentConfig, opts: &RunOptions, w: &mut Writer, lines: &mut Vec<String>) -> Result<Status> {
    let bc = cfg.blowup.as_ref().unwrap();
    let states = family_states(&bc.family, quick_level(cfg.domain()?, opts.quick))?;
    let d = blowup_monitor(&states, &bc.monitor)?;
    lines.push(format!("blowing up: {}, bounded mass: {}, {} candidates", d.blowing_up, d.bounded_mass, d.candidates.len()));
    for c in &d.candidates {
        lines.push(format!(
            "candidate on component {} at s = {:.6}: D = {:.6}, D_tau max {:.2e}, covers component {}, gap {:?}",
            c.component, c.s, c.d_min, c.d_tau_max, c.covers_component, c.gap
        ));
    }
    lines.push(format!(
        "flags: D >= 1 {}, D_tau = 0 {}, interior vanishing {}, boundary only {}, quantization {:?}; concentration {:.4}, TV {:?}",
        d.flag_d_ge_1, d.flag_d_tau_zero, d.flag_interior_vanishing, d.flag_boundary_only, d.flag_quantization, d.concentration_fraction, d.tv_distance
    ));
    let rows: Vec<Vec<f64>> = d
        .candidates
        .iter()
        .map(|c| vec![c.component as f64, c.s, c.x, c.y, c.u, c.d_min, c.d_tau_max, c.radius, c.interior_fraction, c.boundary_fraction])
        .collect();
    w.csv("candidates.csv", &["component", "s", "x", "y", "u", "d_min", "d_tau_max", "radius", "interior_fraction", "boundary_fraction"], &rows)?;
    let members: Vec<Vec<f64>> = bc
        .family
        .values
        .iter()
        .zip(&d.members)
        .map(|(v, m)| vec![*v, m.sup_u, m.inf_u, m.interior_total, m.boundary_total, m.far_fraction])
        .collect();
    let header = ["parameter", "sup_u", "inf_u", "interior_total", "boundary_total", "far_fraction"];
    w.csv("members.csv", &header, &members)?;
    w.dat("members.dat", &header, &members)?;
    w.plot("members.gp", "set xlabel 'parameter'\nset ylabel 'sup u'\nplot 'members.dat' using 1:2 with linespoints title 'sup u'")?;
    w.json("blowup.json", &d)?;
    Ok(Status::Ok)
}

fn pohozaev(cfg: &ExperimentConfig, opts: &RunOptions, w: &mut Writer, lines: &mut Vec<String>) -> Result<Status> {
    let pc = cfg.pohozaev.as_ref().unwrap();
    let inner = match cfg.domain.map(|d| d.kind) {
        Some(DomainKind::Annulus { inner_radius }) => inner_radius,
        None => 0.5,
        Some(_) => return Err(Error::Config("domain: the Pohozaev check runs on annulus families".into())),
    };
    let fam = FamilyConfig { family: pc.family, values: vec![pc.value], h1: pc.h1, h0: std::f64::consts::SQRT_2 }.annulus_members()?[0];
    let levels: Vec<u32> = pc.levels.iter().map(|&l| if opts.quick { l.saturating_sub(1) } else { l }).collect();
    let mut rows = Vec::new();
    let mut residuals = Vec::new();
    for &l in &levels {
        let mesh = Arc::new(DomainSpec::annulus(inner, l).build_mesh()?);
        let field: Box<dyn VectorField> = match &pc.field {
            FieldConfig::Named(n) if n == "identity" => Box::new(Identity),
            FieldConfig::Named(n) => return Err(Error::Config(format!("pohozaev.field: unknown field {n:?}"))),
            FieldConfig::Trig(t) => Box::new(holomorphic_field(&mesh, t)?),
        };
        let (p, _) = fam.problem(mesh.clone())?;
        let u = fam.rotated_state(&mesh, pc.rotation)?;
        let r = pohozaev_residual(&p, &u, field.as_ref(), pc.flux)?;
        let h = mesh.mesh_size();
        lines.push(format!("level {l}: h = {h:.4e}, interior {:.6e}, boundary {:?}, residual {:.3e}", r.interior, r.boundary, r.residual));
        residuals.push(r.residual);
        rows.push(vec![l as f64, h, r.interior, r.boundary.iter().sum(), r.residual, r.relative]);
    }
    let orders = acceptance::orders(&residuals);
    lines.push(format!("observed orders {orders:?}"));
    let header = ["level", "h", "interior", "boundary", "residual", "relative"];
    w.csv("pohozaev.csv", &header, &rows)?;
    w.dat("pohozaev.dat", &header, &rows)?;
    w.plot("pohozaev.gp", "set logscale xy\nset xlabel 'h'\nset ylabel 'residual'\nplot 'pohozaev.dat' using 2:5 with linespoints title 'Pohozaev residual'")?;
    w.json("pohozaev.json", &json!({ "levels": levels, "residuals": residuals, "orders": orders }))?;
    Ok(Status::Ok)
}

fn testfn(cfg: &ExperimentConfig, w: &mut Writer, lines: &mut Vec<String>) -> Result<Status> {
    let tc = cfg.testfn.as_ref().unwrap();
    let d = cfg.domain()?;
    let p = d.boundary_point(tc.point.component, tc.point.s);
    let mus: Vec<f64> = tc.a.iter().map(|a| (1.0 + a * a).sqrt() / tc.q2).collect();
    let rows = testfunction_energy_curve(&cfg.curvature()?, &d, &p, tc.q2, &mus, tc.near)?;
    if let Some(l) = rows.last() {
        lines.push(format!(
            "a = {:.3e}: I = {:.6}, slopes: Dirichlet {:.4}, area {:.4}, boundary near {:.4}, energy {:.4}",
            l.a, l.energy, l.dirichlet_slope, l.area_slope, l.boundary_near_slope, l.energy_slope
        ));
    }
    let table: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| vec![r.mu, r.a, r.mu.ln(), r.dirichlet, r.area, r.boundary, r.boundary_near, r.energy])
        .collect();
    let header = ["mu", "a", "log_mu", "dirichlet", "area", "boundary", "boundary_near", "energy"];
    w.csv("testfn.csv", &header, &table)?;
    w.dat("testfn.dat", &header, &table)?;
    w.plot("testfn.gp", "set xlabel 'log mu'\nset ylabel 'I'\nplot 'testfn.dat' using 3:8 with linespoints title 'I(phi_mu)'")?;
    w.json("testfn.json", &rows)?;
    Ok(Status::Ok)
}

fn verify(opts: &RunOptions, w: &mut Writer, lines: &mut Vec<String>) -> Result<Status> {
    let ids: Vec<u32> = acceptance::CRITERIA.iter().map(|c| c.0).collect();
    let threads = opts.threads.unwrap_or_else(threads_from_env);
    let results: Vec<CriterionResult> = parallel_map(&ids, threads, |&id| acceptance::run_criterion(id, opts.quick));
    lines.extend(results.iter().map(|r| r.to_string()));
    let passed = results.iter().filter(|r| r.passed).count();
    lines.push(format!("{passed}/{} criteria passed", results.len()));
    let stable: Vec<Value> = results.iter().map(|r| json!({ "id": r.id, "name": r.name, "passed": r.passed, "detail": r.detail })).collect();
    w.json("verify.json", &stable)?;
    Ok(if passed == results.len() { Status::Ok } else { Status::Failed })
}
