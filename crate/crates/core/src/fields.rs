//! Curvature data `K`, `h`, `K~`, `h~`, the ratio `D = h / sqrt|K|`, the
//! epsilon-perturbation used by the monotonicity trick, and regime classification.

use crate::domain::{tangential_derivative, BoundaryPoint, DomainKind, DomainSpec, Mesh};
use crate::error::{Error, Result};
use evalexpr::{ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node, Value};
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

/// Where a field is evaluated. Interior points carry `s = NaN`, `component = None`.
#[derive(Debug, Clone, Copy)]
pub struct FieldPoint {
    pub x: f64,
    pub y: f64,
    pub s: f64,
    pub component: Option<usize>,
}

impl FieldPoint {
    pub fn interior(x: [f64; 2]) -> Self {
        Self { x: x[0], y: x[1], s: f64::NAN, component: None }
    }

    pub fn boundary(p: &BoundaryPoint) -> Self {
        Self { x: p.position[0], y: p.position[1], s: p.s, component: Some(p.component) }
    }
}

const FUNCTIONS: [&str; 19] = [
    "sin", "cos", "tan", "asin", "acos", "atan", "atan2", "sinh", "cosh", "tanh", "exp", "ln", "log2", "log10",
    "sqrt", "abs", "hypot", "pow", "cbrt",
];
const VARIABLES: [&str; 5] = ["x", "y", "r", "theta", "s"];

/// A parsed closed-form expression in `x, y, r, theta, s`.
#[derive(Clone)]
pub struct FieldExpr {
    source: String,
    tree: Node<DefaultNumericTypes>,
}

impl fmt::Debug for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldExpr({:?})", self.source)
    }
}

/// Rewrites integer literals as floats, bare function names into the
/// `math::` namespace and `pi` into its value.
fn normalize(src: &str) -> String {
    let chars: Vec<char> = src.chars().collect();
    let mut out = String::with_capacity(src.len() + 16);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_ascii_alphabetic() || c == '_' {
            let st = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == ':') {
                i += 1;
            }
            let word: String = chars[st..i].iter().collect();
            if word == "pi" {
                out.push_str(&format!("{:.17}", std::f64::consts::PI));
            } else if FUNCTIONS.contains(&word.as_str()) {
                out.push_str("math::");
                out.push_str(&word);
            } else {
                out.push_str(&word);
            }
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let st = i;
            let mut float = false;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                float |= chars[i] == '.';
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                float = true;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let lit: String = chars[st..i].iter().collect();
            if lit.starts_with('.') {
                out.push('0');
            }
            out.push_str(&lit);
            if !float {
                out.push_str(".0");
            }
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}

impl FieldExpr {
    pub fn parse(source: &str) -> Result<Self> {
        let err = |m: String| Error::Expression { expr: source.to_string(), message: m };
        let tree = evalexpr::build_operator_tree::<DefaultNumericTypes>(&normalize(source)).map_err(|e| err(e.to_string()))?;
        for v in tree.iter_variable_identifiers() {
            if !VARIABLES.contains(&v) {
                return Err(err(format!("unknown variable `{v}` (allowed: x, y, r, theta, s)")));
            }
        }
        Ok(Self { source: source.to_string(), tree })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, p: &FieldPoint) -> Result<f64> {
        let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
        let r = p.x.hypot(p.y);
        let theta = p.y.atan2(p.x).rem_euclid(std::f64::consts::TAU);
        for (k, v) in [("x", p.x), ("y", p.y), ("r", r), ("theta", theta), ("s", p.s)] {
            ctx.set_value(k.into(), Value::Float(v)).expect("mutable context");
        }
        self.tree
            .eval_number_with_context(&ctx)
            .map_err(|e| Error::Expression { expr: self.source.clone(), message: e.to_string() })
    }
}

pub type FieldFn = Arc<dyn Fn(&FieldPoint) -> f64 + Send + Sync>;

/// A scalar datum: constant, closed-form expression, or Rust closure.
#[derive(Clone)]
pub enum Field {
    Const(f64),
    Expr(Arc<FieldExpr>),
    Func(FieldFn),
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Const(c) => write!(f, "Const({c})"),
            Field::Expr(e) => write!(f, "{e:?}"),
            Field::Func(_) => write!(f, "Func(..)"),
        }
    }
}

impl From<f64> for Field {
    fn from(c: f64) -> Self {
        Field::Const(c)
    }
}

impl Field {
    pub fn expr(source: &str) -> Result<Self> {
        let e = FieldExpr::parse(source)?;
        // plain numbers collapse to constants
        if e.tree.iter_variable_identifiers().next().is_none() {
            return Ok(Field::Const(e.eval(&FieldPoint::interior([0.0, 0.0]))?));
        }
        Ok(Field::Expr(Arc::new(e)))
    }

    pub fn func<F: Fn(&FieldPoint) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Field::Func(Arc::new(f))
    }

    pub fn eval(&self, p: &FieldPoint) -> Result<f64> {
        let v = match self {
            Field::Const(c) => *c,
            Field::Expr(e) => e.eval(p)?,
            Field::Func(f) => f(p),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidField(format!("non-finite value {v} at ({}, {})", p.x, p.y)))
        }
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Field::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// `a * self + b`
    pub fn affine(&self, a: f64, b: f64) -> Field {
        match self {
            Field::Const(c) => Field::Const(a * c + b),
            other => {
                let inner = other.clone();
                Field::func(move |p| a * inner.eval(p).unwrap_or(f64::NAN) + b)
            }
        }
    }
}

/// Problem data on a flat model domain.
#[derive(Debug, Clone)]
pub struct CurvatureSpec {
    /// Target Gaussian curvature (negative).
    pub k: Field,
    /// Target geodesic curvature, one field per boundary component.
    pub h: Vec<Field>,
    /// Constant background Gaussian curvature.
    pub k_bg: f64,
    /// Background geodesic curvature per component; `None` uses the curvature of the flat boundary.
    pub h_bg: Option<Vec<Field>>,
    /// Factor applied to the background geodesic curvature.
    pub h_bg_scale: f64,
}

impl CurvatureSpec {
    pub fn new(k: Field, h: Vec<Field>, k_bg: f64) -> Self {
        Self { k, h, k_bg, h_bg: None, h_bg_scale: 1.0 }
    }

    /// Constant data: `K`, one `h` per component.
    pub fn constant(k: f64, h: &[f64], k_bg: f64) -> Self {
        Self::new(Field::Const(k), h.iter().map(|&v| Field::Const(v)).collect(), k_bg)
    }

    pub fn with_h_bg(mut self, h_bg: Vec<Field>) -> Self {
        self.h_bg = Some(h_bg);
        self
    }

    pub fn validate_for(&self, domain: &DomainSpec) -> Result<()> {
        let n = domain.n_components();
        if self.h.len() != n {
            return Err(Error::InvalidField(format!("{} boundary fields given, domain has {n} components", self.h.len())));
        }
        if let Some(hb) = &self.h_bg {
            if hb.len() != n {
                return Err(Error::InvalidField(format!("{} background fields given, domain has {n}", hb.len())));
            }
        }
        if !self.k_bg.is_finite() {
            return Err(Error::InvalidField("K_bg must be finite".into()));
        }
        Ok(())
    }

    pub fn k_at(&self, x: [f64; 2]) -> Result<f64> {
        let k = self.k.eval(&FieldPoint::interior(x))?;
        if k >= 0.0 {
            return Err(Error::InvalidField(format!("K = {k} is not negative at ({}, {})", x[0], x[1])));
        }
        Ok(k)
    }

    pub fn h_at(&self, p: &BoundaryPoint) -> Result<f64> {
        self.h[p.component].eval(&FieldPoint::boundary(p))
    }

    pub fn h_bg_at(&self, p: &BoundaryPoint) -> Result<f64> {
        let v = match &self.h_bg {
            Some(v) => v[p.component].eval(&FieldPoint::boundary(p))?,
            None => p.curvature,
        };
        Ok(self.h_bg_scale * v)
    }
}

/// `D(p) = h(p) / sqrt|K(p)|`.
pub fn eval_d(spec: &CurvatureSpec, p: &BoundaryPoint) -> Result<f64> {
    let k = spec.k.eval(&FieldPoint::interior(p.position))?;
    if k >= 0.0 {
        return Err(Error::InvalidField(format!("K = {k} is not negative at boundary point s = {}", p.s)));
    }
    Ok(spec.h_at(p)? / (-k).sqrt())
}

/// `D` sampled on the vertices of boundary component `c`.
pub fn sample_d(spec: &CurvatureSpec, mesh: &Mesh, c: usize) -> Result<Vec<f64>> {
    mesh.components[c].s.iter().map(|&s| eval_d(spec, &mesh.boundary_point(c, s))).collect()
}

/// Tangential derivative of `D` on each boundary component.
pub fn eval_d_tau(spec: &CurvatureSpec, mesh: &Mesh) -> Result<Vec<Vec<f64>>> {
    (0..mesh.components.len())
        .map(|c| tangential_derivative(mesh, c, &sample_d(spec, mesh, c)?))
        .collect()
}

/// The perturbed data whose functional satisfies `I + eps J = (1 + 2 eps) I_eps`.
///
/// With nonzero background geodesic curvature the same rescaling is applied to `h~`.
pub fn perturb(spec: &CurvatureSpec, eps: f64) -> Result<CurvatureSpec> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidField(format!("perturbation parameter must be non-negative, got {eps}")));
    }
    if eps == 0.0 {
        return Ok(spec.clone());
    }
    let s = 1.0 / (1.0 + 2.0 * eps);
    Ok(CurvatureSpec {
        k: spec.k.affine(s, -0.5 * eps * s),
        h: spec.h.iter().map(|f| f.affine(s, 0.0)).collect(),
        k_bg: (spec.k_bg - 0.5 * eps) * s,
        h_bg: spec.h_bg.clone(),
        h_bg_scale: spec.h_bg_scale * s,
    })
}

/// Which existence regime the data fall into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegimeKind {
    /// `K~ < 0` and `D < 1` on the boundary: a global minimizer exists.
    Thm1,
    /// `K~ = 0`, `D < 1`, `oint h > 0`: a global minimizer exists.
    Thm2,
    /// `K~ = 0`, `D > 1` somewhere, `oint h < 0`, `D_tau != 0` on `{D = 1}`: a saddle exists.
    Thm3,
    Unclassified,
}

/// Constant-curvature annulus classification (`K = -1` normalized).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AnnulusCase {
    /// `D1 + D2 > 0` and both below 1.
    I,
    /// `D1 + D2 < 0` and some above 1.
    II,
    /// `(D1, D2) = (1, -1)` or `(-1, 1)`.
    III,
    /// No solution exists.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelCrossing {
    pub component: usize,
    pub s: f64,
    pub d_tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regime {
    pub kind: RegimeKind,
    pub max_d: f64,
    /// `(component, s)` of the maximum of `D` over boundary vertices.
    pub argmax: (usize, f64),
    pub min_d: f64,
    /// `oint h` in the normalized flat metric (cylinder metric `|dz|^2/|z|^2` on the annulus).
    pub boundary_h_integral: f64,
    pub crossings: Vec<LevelCrossing>,
    pub annulus_case: Option<AnnulusCase>,
    pub reason: String,
}

/// Additive offset `b` with `u_flat = u_normalized + b` (zero except on the annulus).
pub fn normalizing_offset(domain: &DomainSpec, x: [f64; 2]) -> f64 {
    match domain.kind {
        DomainKind::Annulus { .. } => -(x[0] * x[0] + x[1] * x[1]).ln(),
        _ => 0.0,
    }
}

const CLASSIFY_MARGIN: f64 = 1e-9;

pub fn regime_classify(spec: &CurvatureSpec, mesh: &Mesh) -> Result<Regime> {
    spec.validate_for(&mesh.spec)?;
    let mut max_d = f64::NEG_INFINITY;
    let mut min_d = f64::INFINITY;
    let mut argmax = (0, 0.0);
    let mut integral = 0.0;
    let mut crossings = Vec::new();
    let mut touch = false;
    let mut d_per_comp = Vec::new();
    for (c, comp) in mesh.components.iter().enumerate() {
        let d = sample_d(spec, mesh, c)?;
        for (&s, &v) in comp.s.iter().zip(&d) {
            if v > max_d {
                max_d = v;
                argmax = (c, s);
            }
            min_d = min_d.min(v);
        }
        let n = d.len();
        let pairs = if comp.closed { n } else { n - 1 };
        for k in 0..pairs {
            let (a, b) = (k, (k + 1) % n);
            let (fa, fb) = (d[a] - 1.0, d[b] - 1.0);
            if fa == 0.0 || fa * fb < 0.0 {
                let mut sb = comp.s[b];
                if sb < comp.s[a] {
                    sb += comp.length;
                }
                let t = if fa == fb { 0.0 } else { fa / (fa - fb) };
                let s = comp.s[a] + t * (sb - comp.s[a]);
                let ds = 1e-6 * comp.length;
                let dp = eval_d(spec, &mesh.boundary_point(c, s + ds))?;
                let dm = eval_d(spec, &mesh.boundary_point(c, s - ds))?;
                crossings.push(LevelCrossing { component: c, s, d_tau: (dp - dm) / (2.0 * ds) });
            }
        }
        // a local extremum grazing the level 1 also violates the transversality hypothesis
        for k in 0..n {
            if !comp.closed && (k == 0 || k == n - 1) {
                continue;
            }
            let (l, r) = (d[(k + n - 1) % n], d[(k + 1) % n]);
            let extremum = (d[k] >= l && d[k] >= r) || (d[k] <= l && d[k] <= r);
            if extremum && (d[k] - 1.0).abs() < 1e-6 {
                touch = true;
            }
        }
        let weight_sum: f64 = mesh
            .boundary_edges
            .iter()
            .filter(|e| e.component == c)
            .map(|e| {
                let len = mesh.edge_length(e);
                e.v.iter()
                    .zip(e.s)
                    .map(|(&v, s)| {
                        let p = mesh.boundary_point(c, s);
                        let w = (0.5 * normalizing_offset(&mesh.spec, mesh.vertices[v])).exp();
                        0.5 * len * w * spec.h_at(&p).unwrap_or(f64::NAN)
                    })
                    .sum::<f64>()
            })
            .sum();
        integral += weight_sum;
        d_per_comp.push(d);
    }
    if !integral.is_finite() {
        return Err(Error::InvalidField("boundary curvature is not finite".into()));
    }
    let annulus_case = annulus_case(spec, mesh, &d_per_comp);
    let kbg = spec.k_bg;
    let transversal = !touch && crossings.iter().all(|c| c.d_tau.abs() > 1e-6);
    let (kind, reason) = if kbg < 0.0 {
        if max_d < 1.0 - CLASSIFY_MARGIN {
            (RegimeKind::Thm1, "K_bg < 0 and D < 1 on the boundary".to_string())
        } else {
            (RegimeKind::Unclassified, format!("K_bg < 0 but max D = {max_d:.6} >= 1"))
        }
    } else if kbg.abs() <= 1e-12 {
        if max_d < 1.0 - CLASSIFY_MARGIN && integral > 0.0 {
            (RegimeKind::Thm2, format!("K_bg = 0, D < 1, boundary integral of h = {integral:.6} > 0"))
        } else if max_d > 1.0 + CLASSIFY_MARGIN && integral < 0.0 && transversal {
            (RegimeKind::Thm3, format!("K_bg = 0, max D = {max_d:.6} > 1, boundary integral of h = {integral:.6} < 0"))
        } else if max_d > 1.0 + CLASSIFY_MARGIN && integral < 0.0 {
            (RegimeKind::Unclassified, "D_tau vanishes on the level set {D = 1}".to_string())
        } else {
            (RegimeKind::Unclassified, format!("K_bg = 0 with max D = {max_d:.6}, boundary integral of h = {integral:.6}"))
        }
    } else {
        (RegimeKind::Unclassified, format!("K_bg = {kbg} > 0"))
    };
    Ok(Regime { kind, max_d, argmax, min_d, boundary_h_integral: integral, crossings, annulus_case, reason })
}

fn annulus_case(spec: &CurvatureSpec, mesh: &Mesh, d: &[Vec<f64>]) -> Option<AnnulusCase> {
    if !matches!(mesh.spec.kind, DomainKind::Annulus { .. }) || d.len() != 2 {
        return None;
    }
    let constant = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo <= 1e-12 * (1.0 + hi.abs())
    };
    let k_const = match &spec.k {
        Field::Const(_) => true,
        f => {
            let samples: Vec<f64> = mesh.vertices.iter().filter_map(|&x| f.eval(&FieldPoint::interior(x)).ok()).collect();
            constant(&samples)
        }
    };
    if !k_const || !constant(&d[0]) || !constant(&d[1]) {
        return None;
    }
    let (d1, d2) = (d[0][0], d[1][0]);
    let tol = 1e-9;
    Some(if d1 + d2 > 0.0 && d1 < 1.0 && d2 < 1.0 {
        AnnulusCase::I
    } else if d1 + d2 < 0.0 && (d1 > 1.0 || d2 > 1.0) {
        AnnulusCase::II
    } else if ((d1 - 1.0).abs() < tol && (d2 + 1.0).abs() < tol) || ((d1 + 1.0).abs() < tol && (d2 - 1.0).abs() < tol) {
        AnnulusCase::III
    } else {
        AnnulusCase::None
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expressions_use_float_arithmetic_and_math_names() {
        let f = Field::expr("1/2 + sin(pi/2) + 2*x").unwrap();
        let v = f.eval(&FieldPoint::interior([0.25, 0.0])).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
        assert_eq!(Field::expr("-3").unwrap().as_const(), Some(-3.0));
        assert!(Field::expr("z + 1").is_err());
        assert!(Field::expr("1 +").is_err());
        let g = Field::expr("2 + cos(s) + 1e-1*r").unwrap();
        let p = FieldPoint { x: 0.0, y: 1.0, s: 0.0, component: Some(0) };
        assert!((g.eval(&p).unwrap() - 3.1).abs() < 1e-15);
    }

    #[test]
    fn d_values_and_scale_invariance() {
        let dom = DomainSpec::annulus(0.5, 0);
        let p = dom.boundary_point(0, 0.3);
        assert_eq!(eval_d(&CurvatureSpec::constant(-4.0, &[2.0, 0.0], 0.0), &p).unwrap(), 1.0);
        assert_eq!(eval_d(&CurvatureSpec::constant(-1.0, &[0.0, 0.0], 0.0), &p).unwrap(), 0.0);
        let a = CurvatureSpec::new(Field::expr("-1 - x*x").unwrap(), vec![Field::expr("0.7 + sin(s)").unwrap(), 0.0.into()], 0.0);
        let c = 3.0;
        let b = CurvatureSpec::new(a.k.affine(c * c, 0.0), a.h.iter().map(|f| f.affine(c, 0.0)).collect(), 0.0);
        assert!((eval_d(&a, &p).unwrap() - eval_d(&b, &p).unwrap()).abs() < 1e-14);
        assert!(eval_d(&CurvatureSpec::constant(1.0, &[1.0, 1.0], 0.0), &p).is_err());
    }

    #[test]
    fn d_tau_of_cosine_data() {
        let mesh = DomainSpec::annulus(0.5, 2).build_mesh().unwrap();
        let spec = CurvatureSpec::new((-1.0).into(), vec![Field::expr("2 + cos(s)").unwrap(), 0.0.into()], 0.0);
        let dt = eval_d_tau(&spec, &mesh).unwrap();
        let ds = mesh.components[0].s[1];
        for (s, v) in mesh.components[0].s.iter().zip(&dt[0]) {
            assert!((v + s.sin()).abs() < ds * ds);
        }
        assert!(dt[1].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn perturbation_formulas() {
        let spec = CurvatureSpec::constant(-1.0, &[2.0, 0.0], 0.0);
        let p = perturb(&spec, 0.5).unwrap();
        assert_eq!(p.k.as_const(), Some(-0.625));
        assert_eq!(p.k_bg, -0.125);
        assert_eq!(p.h[0].as_const(), Some(1.0));
        assert!(perturb(&spec, -0.1).is_err());
        let id = perturb(&spec, 0.0).unwrap();
        assert_eq!(id.k.as_const(), Some(-1.0));
    }

    #[test]
    fn regime_examples() {
        let cyl = DomainSpec::cylinder(1.0, 1).build_mesh().unwrap();
        let r = regime_classify(&CurvatureSpec::constant(-1.0, &[0.5, 0.5], -1.0), &cyl).unwrap();
        assert_eq!(r.kind, RegimeKind::Thm1);
        let ann = DomainSpec::annulus(0.5, 1).build_mesh().unwrap();
        let r = regime_classify(&CurvatureSpec::constant(-1.0, &[0.5, 0.3], 0.0), &ann).unwrap();
        assert_eq!(r.kind, RegimeKind::Thm2);
        assert_eq!(r.annulus_case, Some(AnnulusCase::I));
        let r = regime_classify(&CurvatureSpec::constant(-1.0, &[2.0, -3.0], 0.0), &ann).unwrap();
        assert_eq!(r.kind, RegimeKind::Thm3, "{r:?}");
        assert!(r.crossings.is_empty());
        assert_eq!(r.annulus_case, Some(AnnulusCase::II));
        assert!((r.max_d - 2.0).abs() < 1e-15);
        // normalized integral: 2 pi (h1 + h2) up to quadrature error
        assert!((r.boundary_h_integral + std::f64::consts::TAU).abs() < 0.05);
    }
}
