//! TOML experiment configuration.

use crate::diagnostics::{FluxMode, MonitorOptions, TrigPoly};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::exact::{AnnulusFamily, HalfPlaneProfile};
use crate::fields::{CurvatureSpec, Field, FieldPoint};
use crate::solve::{EndpointOptions, SolveOptions};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    Classify,
    Spectrum,
    ExactSweep,
    Blowup,
    Pohozaev,
    Testfn,
    Verify,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::Classify => "classify",
            Mode::Spectrum => "spectrum",
            Mode::ExactSweep => "exact-sweep",
            Mode::Blowup => "blowup",
            Mode::Pohozaev => "pohozaev",
            Mode::Testfn => "testfn",
            Mode::Verify => "verify",
        }
    }
}

/// Curvature data as expressions in `x, y, r, theta, s`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureConfig {
    pub k: String,
    pub h: Vec<String>,
    #[serde(default)]
    pub k_bg: f64,
    #[serde(default)]
    pub h_bg: Option<Vec<String>>,
}

impl CurvatureConfig {
    pub fn build(&self) -> Result<CurvatureSpec> {
        let field = |key: &str, src: &str| parse_field(&format!("curvature.{key}"), src);
        let k = field("k", &self.k)?;
        let h = self.h.iter().enumerate().map(|(i, s)| field(&format!("h[{i}]"), s)).collect::<Result<Vec<_>>>()?;
        let mut spec = CurvatureSpec::new(k, h, self.k_bg);
        if let Some(hb) = &self.h_bg {
            spec = spec.with_h_bg(hb.iter().enumerate().map(|(i, s)| field(&format!("h_bg[{i}]"), s)).collect::<Result<_>>()?);
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    Minimize,
    Newton,
    MountainPass,
    Continuation,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    pub component: usize,
    pub s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub method: SolveMethod,
    /// Initial state as an expression; ignored by the mountain pass.
    #[serde(default = "zero")]
    pub init: String,
    #[serde(default)]
    pub eps: f64,
    /// Boundary point of the test-function endpoint (mountain pass, continuation).
    #[serde(default)]
    pub point: Option<PointConfig>,
    /// Eigenvalues reported at the solution.
    #[serde(default = "default_k")]
    pub k: usize,
}

/// Parses `src` and evaluates it once so that malformed operators are reported
/// against `key` before any mesh is built.
pub fn parse_field(key: &str, src: &str) -> Result<Field> {
    let wrap = |e: Error| Error::Config(format!("{key}: {e}"));
    let f = Field::expr(src).map_err(wrap)?;
    if let Field::Expr(e) = &f {
        e.eval(&FieldPoint { x: 0.5, y: 0.25, s: 0.5, component: Some(0) }).map_err(wrap)?;
    }
    Ok(f)
}

fn zero() -> String {
    "0".into()
}

fn default_k() -> usize {
    4
}

fn default_tol_eig() -> f64 {
    crate::spectral::DEFAULT_TOL_EIG
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpectrumConfig {
    /// Morse index of the Hessian of `I_eps` at a state given by an expression.
    State {
        state: String,
        #[serde(default)]
        eps: f64,
        #[serde(default = "default_k")]
        k: usize,
        #[serde(default = "default_tol_eig")]
        tol_eig: f64,
    },
    /// The disk form `Q_R` for each `D0`.
    DiskForm {
        d0: Vec<f64>,
        level: u32,
        #[serde(default = "default_k")]
        k: usize,
        #[serde(default = "default_tol_eig")]
        tol_eig: f64,
    },
    /// Half-plane profile truncated to `HalfDisk(R)` for each radius.
    Profile {
        profile: HalfPlaneProfile,
        radii: Vec<f64>,
        level: u32,
        #[serde(default = "default_k")]
        k: usize,
        #[serde(default = "default_tol_eig")]
        tol_eig: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Gamma,
    Log,
    /// Half-plane bubbles `v_lambda` on a half-disk.
    Bubble,
}

/// A one-parameter family of closed-form states.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub family: FamilyKind,
    pub values: Vec<f64>,
    #[serde(default = "two")]
    pub h1: f64,
    #[serde(default = "sqrt2")]
    pub h0: f64,
}

fn two() -> f64 {
    2.0
}

fn sqrt2() -> f64 {
    std::f64::consts::SQRT_2
}

impl FamilyConfig {
    pub fn annulus_members(&self) -> Result<Vec<AnnulusFamily>> {
        self.values
            .iter()
            .map(|&v| match self.family {
                FamilyKind::Gamma => {
                    if v < 1.0 || v.fract() != 0.0 {
                        return Err(Error::Config(format!("gamma must be a positive integer, got {v}")));
                    }
                    Ok(AnnulusFamily::Gamma { gamma: v as u32, h1: self.h1 })
                }
                FamilyKind::Log => Ok(AnnulusFamily::Log { lambda: v }),
                FamilyKind::Bubble => Err(Error::Config("bubble families live on half-disks".into())),
            })
            .collect()
    }

    pub fn bubble_members(&self) -> Vec<HalfPlaneProfile> {
        self.values.iter().map(|&l| HalfPlaneProfile::Bubble { lambda: l, s0: 0.0, h0: self.h0 }).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowupConfig {
    #[serde(flatten)]
    pub family: FamilyConfig,
    #[serde(default)]
    pub monitor: MonitorOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldConfig {
    Named(String),
    Trig(TrigPoly),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PohozaevConfig {
    pub family: FamilyKind,
    pub value: f64,
    #[serde(default = "two")]
    pub h1: f64,
    /// The exact state is rotated by this angle before interpolation.
    #[serde(default)]
    pub rotation: f64,
    pub levels: Vec<u32>,
    /// `"identity"` or trigonometric coefficients `{ a = [...], b = [...] }`.
    pub field: FieldConfig,
    #[serde(default = "weak")]
    pub flux: FluxMode,
}

fn weak() -> FluxMode {
    FluxMode::Weak
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestfnConfig {
    pub point: PointConfig,
    pub q2: f64,
    /// Values of `a = sqrt(mu^2 q2^2 - 1)`; `mu` follows.
    pub a: Vec<f64>,
    #[serde(default = "half")]
    pub near: f64,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub curvature: Option<CurvatureConfig>,
    #[serde(default)]
    pub solver: SolveOptions,
    #[serde(default)]
    pub endpoints: EndpointOptions,
    #[serde(default)]
    pub solve: Option<SolveConfig>,
    #[serde(default)]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default)]
    pub sweep: Option<FamilyConfig>,
    #[serde(default)]
    pub blowup: Option<BlowupConfig>,
    #[serde(default)]
    pub pohozaev: Option<PohozaevConfig>,
    #[serde(default)]
    pub testfn: Option<TestfnConfig>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn domain(&self) -> Result<DomainSpec> {
        let d = self.domain.ok_or_else(|| Error::Config("missing [domain]".into()))?;
        d.validate().map_err(|e| Error::Config(format!("domain: {e}")))?;
        Ok(d)
    }

    pub fn curvature(&self) -> Result<CurvatureSpec> {
        let spec = self.curvature.as_ref().ok_or_else(|| Error::Config("missing [curvature]".into()))?.build()?;
        if let Some(d) = &self.domain {
            spec.validate_for(d).map_err(|e| Error::Config(format!("curvature: {e}")))?;
        }
        Ok(spec)
    }

    /// Checks that the keys required by `mode` are present and parse.
    pub fn validate(&self, mode: Mode) -> Result<()> {
        let need = |present: bool, key: &str| {
            if present {
                Ok(())
            } else {
                Err(Error::Config(format!("mode {} needs [{key}]", mode.name())))
            }
        };
        match mode {
            Mode::Solve => {
                self.domain()?;
                self.curvature()?;
                need(self.solve.is_some(), "solve")?;
                let s = self.solve.as_ref().unwrap();
                parse_field("solve.init", &s.init)?;
                if matches!(s.method, SolveMethod::MountainPass | SolveMethod::Continuation) {
                    need(s.point.is_some(), "solve.point")?;
                }
            }
            Mode::Classify => {
                self.domain()?;
                self.curvature()?;
            }
            Mode::Spectrum => {
                need(self.spectrum.is_some(), "spectrum")?;
                if let Some(SpectrumConfig::State { state, .. }) = &self.spectrum {
                    self.domain()?;
                    self.curvature()?;
                    parse_field("spectrum.state", state)?;
                }
            }
            Mode::ExactSweep => {
                self.domain()?;
                need(self.sweep.is_some(), "sweep")?;
            }
            Mode::Blowup => {
                self.domain()?;
                need(self.blowup.is_some(), "blowup")?;
            }
            Mode::Pohozaev => need(self.pohozaev.is_some(), "pohozaev")?,
            Mode::Testfn => {
                self.domain()?;
                self.curvature()?;
                need(self.testfn.is_some(), "testfn")?;
            }
            Mode::Verify => {}
        }
        if !(self.solver.tol > 0.0) {
            return Err(Error::Config(format!("solver.tol must be positive, got {}", self.solver.tol)));
        }
        Ok(())
    }
}
