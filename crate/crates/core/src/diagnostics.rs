//! Blow-up diagnostics: Pohozaev residuals, normalized mass measures, singular-set
//! localization for families of states, and the boundary test-function curve.

use crate::domain::{BoundaryPoint, DomainKind, DomainSpec, Mesh};
use crate::energy::{Problem, StateField};
use crate::error::{Error, Result};
use crate::fields::{eval_d, eval_d_tau, CurvatureSpec};
use crate::linalg::quad::{integrate_split, QuadOptions};
use nalgebra::Complex;
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

/// A smooth planar vector field with its Jacobian `DF[i][j] = d F_i / d x_j`.
pub trait VectorField {
    fn eval(&self, x: [f64; 2]) -> [f64; 2];
    fn jacobian(&self, x: [f64; 2]) -> [[f64; 2]; 2];

    fn divergence(&self, x: [f64; 2]) -> f64 {
        let j = self.jacobian(x);
        j[0][0] + j[1][1]
    }
}

/// `F(x) = x`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl VectorField for Identity {
    fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        x
    }
    fn jacobian(&self, _: [f64; 2]) -> [[f64; 2]; 2] {
        [[1.0, 0.0], [0.0, 1.0]]
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Constant(pub [f64; 2]);

impl VectorField for Constant {
    fn eval(&self, _: [f64; 2]) -> [f64; 2] {
        self.0
    }
    fn jacobian(&self, _: [f64; 2]) -> [[f64; 2]; 2] {
        [[0.0; 2]; 2]
    }
}

/// Real trigonometric polynomial `a[0] + sum_k a[k] cos(k t) + b[k-1] sin(k t)`.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct TrigPoly {
    pub a: Vec<f64>,
    #[serde(default)]
    pub b: Vec<f64>,
}

impl TrigPoly {
    pub fn degree(&self) -> usize {
        let da = self.a.iter().rposition(|&c| c != 0.0).unwrap_or(0);
        let db = self.b.iter().rposition(|&c| c != 0.0).map_or(0, |k| k + 1);
        da.max(db)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut v = self.a.first().copied().unwrap_or(0.0);
        for k in 1..=self.degree() {
            let (s, c) = (k as f64 * t).sin_cos();
            v += self.a.get(k).copied().unwrap_or(0.0) * c + self.b.get(k - 1).copied().unwrap_or(0.0) * s;
        }
        v
    }
}

/// `F(z) = i z G(z)` with `G` the Laurent extension of a trigonometric polynomial
/// off the unit circle.
#[derive(Debug, Clone)]
pub struct Holomorphic {
    a0: f64,
    /// `c_k = (a_k - i b_k) / 2`, `k >= 1`.
    c: Vec<Complex<f64>>,
}

impl Holomorphic {
    pub fn new(f: &TrigPoly) -> Self {
        let d = f.degree();
        let c = (1..=d)
            .map(|k| {
                let a = f.a.get(k).copied().unwrap_or(0.0);
                let b = f.b.get(k - 1).copied().unwrap_or(0.0);
                Complex::new(0.5 * a, -0.5 * b)
            })
            .collect();
        Self { a0: f.a.first().copied().unwrap_or(0.0), c }
    }

    fn g(&self, z: Complex<f64>) -> (Complex<f64>, Complex<f64>) {
        let mut g = Complex::new(self.a0, 0.0);
        let mut dg = Complex::new(0.0, 0.0);
        let zi = z.inv();
        for (j, c) in self.c.iter().enumerate() {
            let k = (j + 1) as i32;
            let kf = k as f64;
            let zk = z.powi(k);
            let zmk = zi.powi(k);
            g += c * zk + c.conj() * zmk;
            dg += c * kf * zk * zi - c.conj() * kf * zmk * zi;
        }
        (g, dg)
    }

    /// `F` and `F'` as complex numbers.
    pub fn complex(&self, x: [f64; 2]) -> (Complex<f64>, Complex<f64>) {
        let z = Complex::new(x[0], x[1]);
        let i = Complex::new(0.0, 1.0);
        let (g, dg) = self.g(z);
        (i * z * g, i * g + i * z * dg)
    }
}

impl VectorField for Holomorphic {
    fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        let (f, _) = self.complex(x);
        [f.re, f.im]
    }
    fn jacobian(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        let (_, d) = self.complex(x);
        [[d.re, -d.im], [d.im, d.re]]
    }
}

/// Holomorphic field on an annulus mesh; the degree must stay below a quarter of the
/// vertices on the outer circle.
pub fn holomorphic_field(mesh: &Mesh, f: &TrigPoly) -> Result<Holomorphic> {
    if !matches!(mesh.spec.kind, DomainKind::Annulus { .. }) {
        return Err(Error::Precondition("holomorphic fields are built on annulus meshes".into()));
    }
    if f.a.iter().chain(&f.b).any(|c| !c.is_finite()) {
        return Err(Error::InvalidField("non-finite trigonometric coefficient".into()));
    }
    let per_circle = mesh.components[0].vertices.len();
    let d = f.degree();
    if 4 * d >= per_circle {
        return Err(Error::Precondition(format!(
            "degree {d} aliases on a circle with {per_circle} vertices (need d < {})",
            per_circle as f64 / 4.0
        )));
    }
    Ok(Holomorphic::new(f))
}

/// `2 DF(w, w) - div F |w|^2`.
pub fn cauchy_riemann_residual(field: &dyn VectorField, x: [f64; 2], w: [f64; 2]) -> f64 {
    let j = field.jacobian(x);
    let dfww = w[0] * (j[0][0] * w[0] + j[0][1] * w[1]) + w[1] * (j[1][0] * w[0] + j[1][1] * w[1]);
    2.0 * dfww - (j[0][0] + j[1][1]) * (w[0] * w[0] + w[1] * w[1])
}

/// How the normal derivative on the boundary is recovered from a discrete state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FluxMode {
    /// From the residual of the interior equation tested against boundary hat functions.
    Weak,
    /// From the gradient of the triangle adjacent to each boundary edge.
    Gradient,
}

#[derive(Debug, Clone, Serialize)]
pub struct PohozaevReport {
    /// Boundary side per component.
    pub boundary: Vec<f64>,
    /// Interior side.
    pub interior: f64,
    pub residual: f64,
    /// `residual / max(|interior|, sum |boundary|, 1)`.
    pub relative: f64,
}

/// Both sides of the Pohozaev identity for `-Delta u + 2 K~ = 2 K e^u`:
///
/// `oint [4 K e^u F.nu + 2 (du/dnu) grad u . F - |grad u|^2 F.nu]`
/// `= int [4 K~ grad u . F + 4 e^u (grad K . F + K div F) + 2 DF(grad u, grad u) - div F |grad u|^2]`.
pub fn pohozaev_residual(problem: &Problem, u: &StateField, field: &dyn VectorField, mode: FluxMode) -> Result<PohozaevReport> {
    let mesh = &*problem.mesh;
    let ops = &*problem.ops;
    if u.len() != problem.n() || !u.is_finite() {
        return Err(Error::Precondition("state does not match the mesh or is not finite".into()));
    }
    let uv = &u.values;
    let k: Vec<f64> = problem.coef.k_abs.iter().map(|a| -a).collect();
    let kt = problem.coef.k_bg;

    let mut interior = 0.0;
    for (ti, tri) in mesh.triangles.iter().enumerate() {
        let g = &ops.grads[ti];
        let d = tri.map(|v| mesh.dof[v]);
        let mut gu = [0.0; 2];
        let mut gk = [0.0; 2];
        for j in 0..3 {
            for a in 0..2 {
                gu[a] += uv[d[j]] * g[j][a];
                gk[a] += k[d[j]] * g[j][a];
            }
        }
        let mut sum = 0.0;
        for j in 0..3 {
            let x = mesh.vertices[tri[j]];
            let f = field.eval(x);
            let div = field.divergence(x);
            let e = uv[d[j]].exp();
            sum += 4.0 * kt * (gu[0] * f[0] + gu[1] * f[1])
                + 4.0 * e * (gk[0] * f[0] + gk[1] * f[1] + k[d[j]] * div)
                + cauchy_riemann_residual(field, x, gu);
        }
        interior += mesh.triangle_area(ti) / 3.0 * sum;
    }

    let flux: Option<Vec<f64>> = match mode {
        FluxMode::Weak => {
            let su = ops.stiffness.mul_vec(uv);
            let mut bm = vec![0.0; problem.n()];
            for m in &ops.boundary_mass {
                for (t, v) in bm.iter_mut().zip(m) {
                    *t += v;
                }
            }
            Some(
                (0..problem.n())
                    .map(|i| {
                        if bm[i] > 0.0 {
                            (su[i] + 2.0 * kt * ops.mass[i] - 2.0 * k[i] * uv[i].exp() * ops.mass[i]) / bm[i]
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            )
        }
        FluxMode::Gradient => None,
    };
    let owner = if flux.is_none() { Some(edge_triangles(mesh)?) } else { None };

    let mut boundary = vec![0.0; mesh.components.len()];
    for (ei, e) in mesh.boundary_edges.iter().enumerate() {
        let len = mesh.edge_length(e);
        let nu = mesh.edge_normal(e);
        let a = mesh.vertices[e.v[0]];
        let b = mesh.vertices[e.v[1]];
        let tau = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
        let da = mesh.dof[e.v[0]];
        let db = mesh.dof[e.v[1]];
        let ut = (uv[db] - uv[da]) / len;
        let tri_grad = owner.as_ref().map(|o| {
            let ti = o[ei];
            let g = &ops.grads[ti];
            let mut gu = [0.0; 2];
            for (j, &v) in mesh.triangles[ti].iter().enumerate() {
                for c in 0..2 {
                    gu[c] += uv[mesh.dof[v]] * g[j][c];
                }
            }
            gu
        });
        let mut sum = 0.0;
        for (&v, &d) in e.v.iter().zip(&[da, db]) {
            let x = mesh.vertices[v];
            let gu = match (&flux, tri_grad) {
                (Some(fl), _) => [fl[d] * nu[0] + ut * tau[0], fl[d] * nu[1] + ut * tau[1]],
                (None, Some(g)) => g,
                _ => unreachable!(),
            };
            let dn = gu[0] * nu[0] + gu[1] * nu[1];
            let f = field.eval(x);
            let fn_ = f[0] * nu[0] + f[1] * nu[1];
            sum += 4.0 * k[d] * uv[d].exp() * fn_ + 2.0 * dn * (gu[0] * f[0] + gu[1] * f[1])
                - (gu[0] * gu[0] + gu[1] * gu[1]) * fn_;
        }
        boundary[e.component] += 0.5 * len * sum;
    }
    let lhs: f64 = boundary.iter().sum();
    let residual = (lhs - interior).abs();
    let scale = interior.abs().max(boundary.iter().map(|b| b.abs()).sum::<f64>()).max(1.0);
    Ok(PohozaevReport { boundary, interior, residual, relative: residual / scale })
}

fn edge_triangles(mesh: &Mesh) -> Result<Vec<usize>> {
    let mut map = HashMap::new();
    for (ti, t) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            map.insert((a.min(b), a.max(b)), ti);
        }
    }
    mesh.boundary_edges
        .iter()
        .map(|e| {
            let key = (e.v[0].min(e.v[1]), e.v[0].max(e.v[1]));
            map.get(&key).copied().ok_or_else(|| Error::InvalidDomain("boundary edge without a triangle".into()))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct MassMeasures {
    /// Per-triangle share of `int |K| e^u`.
    pub interior_density: Vec<f64>,
    /// Per-edge share of the positive part of `h e^{u/2}`; `None` when that part vanishes.
    pub boundary_density: Option<Vec<f64>>,
    pub interior_total: f64,
    /// `oint h e^{u/2}`.
    pub boundary_total: f64,
    pub boundary_positive_total: f64,
    /// Raw per-triangle and per-edge masses.
    pub interior_mass: Vec<f64>,
    pub boundary_mass: Vec<f64>,
}

pub fn mass_measures(problem: &Problem, u: &StateField) -> Result<MassMeasures> {
    let mesh = &*problem.mesh;
    if u.len() != problem.n() || !u.is_finite() {
        return Err(Error::Precondition("state does not match the mesh or is not finite".into()));
    }
    let uv = &u.values;
    let kab = &problem.coef.k_abs;
    let interior_mass: Vec<f64> = mesh
        .triangles
        .iter()
        .enumerate()
        .map(|(ti, t)| mesh.triangle_area(ti) / 3.0 * t.iter().map(|&v| kab[mesh.dof[v]] * uv[mesh.dof[v]].exp()).sum::<f64>())
        .collect();
    let boundary_mass: Vec<f64> = mesh
        .boundary_edges
        .iter()
        .map(|e| {
            let h = &problem.coef.h[e.component];
            0.5 * mesh.edge_length(e) * e.v.iter().map(|&v| h[mesh.dof[v]] * (0.5 * uv[mesh.dof[v]]).exp()).sum::<f64>()
        })
        .collect();
    let interior_total: f64 = interior_mass.iter().sum();
    if !(interior_total > 0.0) || !interior_total.is_finite() {
        return Err(Error::Precondition(format!("interior mass is {interior_total}")));
    }
    let boundary_total = boundary_mass.iter().sum();
    let boundary_positive_total: f64 = boundary_mass.iter().map(|m| m.max(0.0)).sum();
    let boundary_density = (boundary_positive_total > 0.0)
        .then(|| boundary_mass.iter().map(|m| m.max(0.0) / boundary_positive_total).collect());
    Ok(MassMeasures {
        interior_density: interior_mass.iter().map(|m| m / interior_total).collect(),
        boundary_density,
        interior_total,
        boundary_total,
        boundary_positive_total,
        interior_mass,
        boundary_mass,
    })
}

/// Windows used to locate singular points.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct MonitorOptions {
    /// Candidates satisfy `u > sup u - candidate_window`.
    pub candidate_window: f64,
    /// Optional absolute floor `u > floor`.
    pub floor: Option<f64>,
    /// The family blows up when `sup u` grows by more than this, or exceeds `blowup_sup`.
    pub growth_min: f64,
    pub blowup_sup: f64,
    /// Neighborhood radius in boundary edges.
    pub radius_edges: f64,
    /// Interior region: distance to the boundary above this.
    pub interior_distance: f64,
    /// `D_tau = 0` means `|D_tau| < d_tau_factor * h`.
    pub d_tau_factor: f64,
    /// Relative tolerance on the local mass gap `2 pi`.
    pub gap_tol: f64,
    /// Families whose interior mass varies by less than this factor count as bounded-mass.
    pub bounded_mass_ratio: f64,
}

impl Default for MonitorOptions {
    fn default() -> Self {
        Self {
            candidate_window: 2.0,
            floor: None,
            growth_min: 1.0,
            blowup_sup: 10.0,
            radius_edges: 5.0,
            interior_distance: 0.1,
            d_tau_factor: 10.0,
            gap_tol: 0.05,
            bounded_mass_ratio: 1.5,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MemberSummary {
    pub sup_u: f64,
    pub inf_u: f64,
    pub interior_total: f64,
    pub boundary_total: f64,
    /// Share of interior mass at distance above `interior_distance` from the boundary.
    pub far_fraction: f64,
    /// Largest normalized mass per unit area among those far triangles.
    pub far_max_density: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    pub component: usize,
    /// Arc length of the vertex with the largest `u` in the cluster.
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub d: f64,
    pub d_tau: f64,
    /// Extreme `D` and `|D_tau|` over the cluster.
    pub d_min: f64,
    pub d_tau_max: f64,
    pub n_vertices: usize,
    pub s_start: f64,
    pub s_end: f64,
    pub covers_component: bool,
    pub radius: f64,
    /// Normalized masses within `radius`.
    pub interior_fraction: f64,
    pub boundary_fraction: f64,
    /// Raw `oint h e^{u/2} - int |K| e^u` near the candidate (bounded-mass families).
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupDiagnostics {
    pub members: Vec<MemberSummary>,
    pub sup_u: f64,
    pub inf_u: f64,
    pub blowing_up: bool,
    pub bounded_mass: bool,
    pub candidates: Vec<Candidate>,
    /// Largest `u` at distance above `interior_distance` in the last state.
    pub interior_sup: f64,
    /// Share of interior mass within the candidate neighborhoods.
    pub concentration_fraction: f64,
    pub boundary_concentration_fraction: f64,
    /// Total variation between interior mass projected to the boundary and the boundary density.
    pub tv_distance: Option<f64>,
    pub flag_d_ge_1: bool,
    pub flag_d_tau_zero: bool,
    pub flag_interior_vanishing: bool,
    pub flag_boundary_only: bool,
    pub flag_quantization: Option<bool>,
}

fn member_summary(problem: &Problem, u: &StateField, m: &MassMeasures, opts: &MonitorOptions) -> MemberSummary {
    let mesh = &*problem.mesh;
    let mut far = 0.0;
    let mut far_max: f64 = 0.0;
    for (ti, t) in mesh.triangles.iter().enumerate() {
        let c = centroid(mesh, t);
        if mesh.spec.distance_to_boundary(c) > opts.interior_distance {
            far += m.interior_density[ti];
            far_max = far_max.max(m.interior_density[ti] / mesh.triangle_area(ti));
        }
    }
    MemberSummary {
        sup_u: u.max(),
        inf_u: u.min(),
        interior_total: m.interior_total,
        boundary_total: m.boundary_total,
        far_fraction: far,
        far_max_density: far_max,
    }
}

fn centroid(mesh: &Mesh, t: &[usize; 3]) -> [f64; 2] {
    let p = t.map(|v| mesh.vertices[v]);
    [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
}

/// Signed arc-length offset of `s` from `[lo, hi]` on a component; zero inside.
fn arc_offset(s: f64, lo: f64, hi: f64, closed: Option<f64>) -> f64 {
    match closed {
        Some(len) => {
            let width = (hi - lo).rem_euclid(len);
            let t = (s - lo).rem_euclid(len);
            if t <= width {
                0.0
            } else {
                (t - width).min(len - t)
            }
        }
        None => {
            if s < lo {
                lo - s
            } else if s > hi {
                s - hi
            } else {
                0.0
            }
        }
    }
}

/// Singular-set localization over a family ordered by increasing `sup u`.
pub fn blowup_monitor(states: &[(Problem, StateField)], opts: &MonitorOptions) -> Result<BlowupDiagnostics> {
    let (problem, u) = states.last().ok_or_else(|| Error::Precondition("empty family".into()))?;
    let mut members = Vec::with_capacity(states.len());
    let mut last_m = None;
    for (p, s) in states {
        let m = mass_measures(p, s)?;
        members.push(member_summary(p, s, &m, opts));
        last_m = Some(m);
    }
    let m = last_m.unwrap();
    let mesh = &*problem.mesh;
    let spec = &problem.spec;
    let sup_u = u.max();
    let inf_u = u.min();
    let growth = sup_u - members[0].sup_u;
    let blowing_up = growth > opts.growth_min || sup_u > opts.blowup_sup;
    let totals: Vec<f64> = members.iter().map(|s| s.interior_total).collect();
    let tmax = totals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tmin = totals.iter().cloned().fold(f64::INFINITY, f64::min);
    let bounded_mass = tmax < opts.bounded_mass_ratio * tmin;

    let h = mesh.mesh_size();
    let mut interior_sup = f64::NEG_INFINITY;
    for (v, x) in mesh.vertices.iter().enumerate() {
        if mesh.spec.distance_to_boundary(*x) > opts.interior_distance {
            interior_sup = interior_sup.max(u.values[mesh.dof[v]]);
        }
    }

    let mut candidates = Vec::new();
    if blowing_up {
        let thresh = (sup_u - opts.candidate_window).max(opts.floor.unwrap_or(f64::NEG_INFINITY));
        let d_tau = eval_d_tau(spec, mesh)?;
        for (c, comp) in mesh.components.iter().enumerate() {
            let n = comp.vertices.len();
            let hot: Vec<bool> = comp.vertices.iter().map(|&v| u.values[mesh.dof[v]] > thresh).collect();
            let d: Vec<f64> = comp.s.iter().map(|&s| eval_d(spec, &mesh.boundary_point(c, s))).collect::<Result<_>>()?;
            for run in runs(&hot, comp.closed) {
                let best = *run.iter().max_by(|&&a, &&b| u.values[mesh.dof[comp.vertices[a]]].total_cmp(&u.values[mesh.dof[comp.vertices[b]]])).unwrap();
                let v = comp.vertices[best];
                let x = mesh.vertices[v];
                let left = comp.s[(best + n - 1) % n];
                let right = comp.s[(best + 1) % n];
                let local_h = if comp.closed {
                    0.5 * ((comp.s[best] - left).rem_euclid(comp.length) + (right - comp.s[best]).rem_euclid(comp.length))
                } else {
                    let lo = if best > 0 { comp.s[best] - comp.s[best - 1] } else { comp.s[1] - comp.s[0] };
                    let hi = if best + 1 < n { comp.s[best + 1] - comp.s[best] } else { lo };
                    0.5 * (lo + hi)
                };
                candidates.push(Candidate {
                    component: c,
                    s: comp.s[best],
                    x: x[0],
                    y: x[1],
                    u: u.values[mesh.dof[v]],
                    d: d[best],
                    d_tau: d_tau[c][best],
                    d_min: run.iter().map(|&i| d[i]).fold(f64::INFINITY, f64::min),
                    d_tau_max: run.iter().map(|&i| d_tau[c][i].abs()).fold(0.0, f64::max),
                    n_vertices: run.len(),
                    s_start: comp.s[run[0]],
                    s_end: comp.s[*run.last().unwrap()],
                    covers_component: comp.closed && run.len() == n,
                    radius: opts.radius_edges * local_h,
                    interior_fraction: 0.0,
                    boundary_fraction: 0.0,
                    gap: None,
                });
            }
        }
    }

    // neighborhood masses
    let centroids: Vec<[f64; 2]> = mesh.triangles.iter().map(|t| centroid(mesh, t)).collect();
    let projections: Vec<(usize, f64, f64)> = centroids
        .iter()
        .map(|&c| {
            let (k, s) = mesh.spec.project_to_boundary(c);
            (k, s, mesh.spec.distance_to_boundary(c))
        })
        .collect();
    let edge_mid: Vec<(usize, f64)> = mesh.boundary_edges.iter().map(|e| (e.component, edge_mid_s(e))).collect();
    let near = |cand: &Candidate, comp: usize, s: f64, dist: f64, radius: f64| -> bool {
        if comp != cand.component || dist >= radius {
            return false;
        }
        let closed = mesh.components[comp].closed.then_some(mesh.components[comp].length);
        let off = arc_offset(s, cand.s_start, cand.s_end, closed);
        off * off + dist * dist < radius * radius
    };
    let mut in_any_t = vec![false; centroids.len()];
    let mut in_any_e = vec![false; edge_mid.len()];
    let bdens = m.boundary_density.clone();
    for cand in &mut candidates {
        let mut fi = 0.0;
        for (ti, &(k, s, dist)) in projections.iter().enumerate() {
            if near(cand, k, s, dist, cand.radius) {
                fi += m.interior_density[ti];
                in_any_t[ti] = true;
            }
        }
        let mut fb = 0.0;
        for (ei, &(k, s)) in edge_mid.iter().enumerate() {
            if near(cand, k, s, 0.0, cand.radius) {
                fb += bdens.as_ref().map_or(0.0, |b| b[ei]);
                in_any_e[ei] = true;
            }
        }
        cand.interior_fraction = fi;
        cand.boundary_fraction = fb;
    }

    if bounded_mass && !candidates.is_empty() {
        let pos: Vec<[f64; 2]> = candidates.iter().map(|c| [c.x, c.y]).collect();
        for (i, cand) in candidates.iter_mut().enumerate() {
            let nearest = pos
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, p)| (p[0] - pos[i][0]).hypot(p[1] - pos[i][1]))
                .fold(f64::INFINITY, f64::min);
            let r = 0.5 * nearest;
            let inside = |x: [f64; 2]| (x[0] - pos[i][0]).hypot(x[1] - pos[i][1]) < r;
            let mi: f64 = centroids.iter().zip(&m.interior_mass).filter(|(c, _)| inside(**c)).map(|(_, v)| v).sum();
            let mb: f64 = mesh
                .boundary_edges
                .iter()
                .zip(&m.boundary_mass)
                .filter(|(e, _)| {
                    let a = mesh.vertices[e.v[0]];
                    let b = mesh.vertices[e.v[1]];
                    inside([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])])
                })
                .map(|(_, v)| v)
                .sum();
            cand.gap = Some(mb - mi);
        }
    }

    let concentration_fraction = in_any_t.iter().zip(&m.interior_density).filter(|(f, _)| **f).map(|(_, v)| v).sum();
    let boundary_concentration_fraction = match &bdens {
        Some(b) => in_any_e.iter().zip(b).filter(|(f, _)| **f).map(|(_, v)| v).sum(),
        None => 0.0,
    };
    let tv_distance = match &bdens {
        Some(b) => Some(projected_tv(mesh, &m.interior_density, &projections, b)?),
        None => None,
    };

    let flag_d_ge_1 = candidates.iter().all(|c| c.d_min >= 1.0 - 1e-6);
    let flag_d_tau_zero = candidates.iter().all(|c| c.d_tau_max < opts.d_tau_factor * h);
    let flag_interior_vanishing =
        members.windows(2).all(|w| w[1].far_fraction <= w[0].far_fraction + 1e-3) || !blowing_up;
    let flag_boundary_only = !blowing_up || interior_sup < sup_u - opts.candidate_window;
    let flag_quantization = (bounded_mass && !candidates.is_empty()).then(|| {
        candidates.iter().all(|c| c.gap.is_some_and(|g| (g - TAU).abs() <= opts.gap_tol * TAU))
    });

    Ok(BlowupDiagnostics {
        members,
        sup_u,
        inf_u,
        blowing_up,
        bounded_mass,
        candidates,
        interior_sup,
        concentration_fraction,
        boundary_concentration_fraction,
        tv_distance,
        flag_d_ge_1,
        flag_d_tau_zero,
        flag_interior_vanishing,
        flag_boundary_only,
        flag_quantization,
    })
}

/// Maximal runs of `true`, as index lists; runs wrap on closed components.
fn runs(hot: &[bool], closed: bool) -> Vec<Vec<usize>> {
    let n = hot.len();
    if hot.iter().all(|&h| h) {
        return vec![(0..n).collect()];
    }
    let start = if closed { (0..n).find(|&i| !hot[i]).unwrap() } else { 0 };
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for k in 0..n {
        let i = (start + k) % n;
        if hot[i] {
            cur.push(i);
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn edge_mid_s(e: &crate::domain::BoundaryEdge) -> f64 {
    0.5 * (e.s[0] + e.s[1])
}

fn projected_tv(mesh: &Mesh, interior: &[f64], proj: &[(usize, f64, f64)], boundary: &[f64]) -> Result<f64> {
    // edge of component c starting at the k-th vertex
    let mut by_start: Vec<HashMap<usize, usize>> = vec![HashMap::new(); mesh.components.len()];
    let pos: Vec<HashMap<usize, usize>> =
        mesh.components.iter().map(|c| c.vertices.iter().enumerate().map(|(k, &v)| (v, k)).collect()).collect();
    for (ei, e) in mesh.boundary_edges.iter().enumerate() {
        let c = e.component;
        let n = mesh.components[c].vertices.len();
        let (ka, kb) = (pos[c][&e.v[0]], pos[c][&e.v[1]]);
        let k = if (ka + 1) % n == kb { ka } else { kb };
        by_start[c].insert(k, ei);
    }
    let mut projected = vec![0.0; boundary.len()];
    for (&w, &(c, s, _)) in interior.iter().zip(proj) {
        let comp = &mesh.components[c];
        let n = comp.vertices.len();
        let mut k = comp.s.partition_point(|&t| t <= s).saturating_sub(1);
        if !comp.closed {
            k = k.min(n - 2);
        }
        let ei = *by_start[c].get(&k).ok_or_else(|| Error::InvalidDomain("boundary edge lookup failed".into()))?;
        projected[ei] += w;
    }
    Ok(0.5 * projected.iter().zip(boundary).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// One row of the test-function energy curve.
#[derive(Debug, Clone, Serialize)]
pub struct TestfnRow {
    pub mu: f64,
    /// `sqrt(mu^2 q2^2 - 1)`.
    pub a: f64,
    /// `int |grad phi|^2`.
    pub dirichlet: f64,
    /// `int e^phi`.
    pub area: f64,
    /// `oint D e^{phi/2}`.
    pub boundary: f64,
    /// Same, restricted to boundary points within `near` of `p`.
    pub boundary_near: f64,
    pub min_d_near: f64,
    /// `2 K~ int phi~`.
    pub k_bg_term: f64,
    /// `2 oint h~ phi~`.
    pub h_bg_term: f64,
    /// `I(phi~)`.
    pub energy: f64,
    pub dirichlet_slope: f64,
    pub area_slope: f64,
    pub boundary_slope: f64,
    pub boundary_near_slope: f64,
    pub energy_slope: f64,
}

/// Ray segments `[r0, r1]` from `q` in direction `e` that lie in the domain.
fn ray_segments(domain: &DomainSpec, q: [f64; 2], e: [f64; 2]) -> Vec<(f64, f64)> {
    let mut cuts = vec![0.0];
    let mut circle = |rad: f64| {
        let b = q[0] * e[0] + q[1] * e[1];
        let c = q[0] * q[0] + q[1] * q[1] - rad * rad;
        let disc = b * b - c;
        if disc > 0.0 {
            let sq = disc.sqrt();
            for r in [-b - sq, -b + sq] {
                if r > 0.0 {
                    cuts.push(r);
                }
            }
        }
        rad + (q[0] * q[0] + q[1] * q[1]).sqrt()
    };
    let far = match domain.kind {
        DomainKind::Annulus { inner_radius } => {
            circle(inner_radius);
            circle(1.0)
        }
        DomainKind::Disk { radius } => circle(radius),
        DomainKind::HalfDisk { radius, .. } => {
            let f = circle(radius);
            if e[1] != 0.0 {
                let r = -q[1] / e[1];
                if r > 0.0 {
                    cuts.push(r);
                }
            }
            f
        }
        DomainKind::Cylinder { .. } => 0.0,
    };
    cuts.push(far);
    cuts.sort_by(f64::total_cmp);
    let inside = |x: [f64; 2]| -> bool {
        let rho = x[0].hypot(x[1]);
        match domain.kind {
            DomainKind::Annulus { inner_radius } => rho <= 1.0 && rho >= inner_radius,
            DomainKind::Disk { radius } => rho <= radius,
            DomainKind::HalfDisk { radius, .. } => rho <= radius && x[1] >= 0.0,
            DomainKind::Cylinder { .. } => false,
        }
    };
    let mut segs: Vec<(f64, f64)> = Vec::new();
    for w in cuts.windows(2) {
        if w[1] - w[0] <= 0.0 {
            continue;
        }
        let m = 0.5 * (w[0] + w[1]);
        if inside([q[0] + m * e[0], q[1] + m * e[1]]) {
            match segs.last_mut() {
                Some(last) if last.1 == w[0] => last.1 = w[1],
                _ => segs.push((w[0], w[1])),
            }
        }
    }
    segs
}

/// Continuum values of the energy terms of `phi~ = phi - log|K|` with
/// `phi(x) = log(4 mu^2 / (mu^2 |x - q|^2 - 1)^2)`, `q = p + q2 nu(p)`, for each `mu`.
///
/// Area integrals are exact along rays from `q` and adaptive in the angle; boundary
/// integrals are adaptive in arc length. `K` must be constant.
pub fn testfunction_energy_curve(
    spec: &CurvatureSpec,
    domain: &DomainSpec,
    p: &BoundaryPoint,
    q2: f64,
    mus: &[f64],
    near: f64,
) -> Result<Vec<TestfnRow>> {
    if matches!(domain.kind, DomainKind::Cylinder { .. }) {
        return Err(Error::Precondition("the test-function curve needs a bounded planar domain".into()));
    }
    spec.validate_for(domain)?;
    let k = spec
        .k
        .as_const()
        .ok_or_else(|| Error::Precondition("the test-function curve needs constant K".into()))?;
    if k >= 0.0 {
        return Err(Error::InvalidField(format!("K = {k} is not negative")));
    }
    if !(q2 > 0.0) {
        return Err(Error::Precondition(format!("q2 must be positive, got {q2}")));
    }
    if let Some(&bad) = mus.iter().find(|&&m| !(m * q2 > 1.0)) {
        return Err(Error::Precondition(format!("mu q2 = {} is not above 1", bad * q2)));
    }
    let lk = (-k).ln();
    let kt = spec.k_bg;
    let area_domain = domain.area();
    let q = [p.position[0] + q2 * p.normal[0], p.position[1] + q2 * p.normal[1]];
    let theta_p = (-p.normal[1]).atan2(-p.normal[0]).rem_euclid(TAU);
    let quad = QuadOptions { abs_tol: 1e-13, rel_tol: 1e-11, max_depth: 60 };

    // boundary data sampled once per component
    let ncomp = domain.n_components();
    let mut rows = Vec::with_capacity(mus.len());
    for &mu in mus {
        let a = (mu * mu * q2 * q2 - 1.0).sqrt();
        let m2 = mu * mu;
        let ray = |theta: f64, which: u8| -> f64 {
            let e = [theta.cos(), theta.sin()];
            ray_segments(domain, q, e)
                .iter()
                .map(|&(r0, r1)| {
                    let f = |r: f64| {
                        let w = m2 * r * r - 1.0;
                        match which {
                            0 => 8.0 * (w.ln() - 1.0 / w),
                            1 => -2.0 / w,
                            _ => (4.0 * m2).ln() * r * r / 2.0 - (w * w.ln() - w) / m2,
                        }
                    };
                    f(r1) - f(r0)
                })
                .sum()
        };
        let breaks: Vec<f64> = [-10.0, -3.0, -1.0, -0.3, 0.0, 0.3, 1.0, 3.0, 10.0]
            .iter()
            .map(|&t| theta_p + t * a)
            .filter(|t| (theta_p - PI..theta_p + PI).contains(t))
            .collect();
        let ang = |which: u8| integrate_split(|t| ray(t, which), theta_p - PI, theta_p + PI, &breaks, quad);
        let dirichlet = ang(0);
        let area = ang(1);
        let phi_int = ang(2);

        let mut boundary = 0.0;
        let mut boundary_near = 0.0;
        let mut min_d_near = f64::INFINITY;
        let mut h_bg_term = 0.0;
        for c in 0..ncomp {
            let (s0, s1) = domain.component_range(c);
            let probe = domain.boundary_point(c, s0);
            let phi = |x: [f64; 2]| {
                let w = m2 * ((x[0] - q[0]).powi(2) + (x[1] - q[1]).powi(2)) - 1.0;
                (4.0 * m2 / (w * w)).ln()
            };
            let dval = |s: f64| -> f64 { eval_d(spec, &domain.boundary_point(c, s)).unwrap_or(f64::NAN) };
            let mut bk = Vec::new();
            let mut window = None;
            if c == p.component {
                let span = if probe.curvature == 0.0 {
                    near
                } else {
                    let r = 1.0 / probe.curvature.abs();
                    2.0 * r * (near / (2.0 * r)).min(1.0).asin()
                };
                window = Some((p.s - span, p.s + span));
                for t in [-10.0, -3.0, -1.0, -0.3, 0.0, 0.3, 1.0, 3.0, 10.0] {
                    bk.push(p.s + t * a * q2);
                }
            }
            let closed = domain.component_closed(c);
            let (lo, hi) = if closed && c == p.component {
                (p.s - 0.5 * (s1 - s0), p.s + 0.5 * (s1 - s0))
            } else {
                (s0, s1)
            };
            let f_b = |s: f64| {
                let bp = domain.boundary_point(c, s);
                dval(s) * (0.5 * phi(bp.position)).exp()
            };
            boundary += integrate_split(f_b, lo, hi, &bk, quad);
            if let Some((w0, w1)) = window {
                let (w0, w1) = if closed { (w0, w1) } else { (w0.max(s0), w1.min(s1)) };
                boundary_near += integrate_split(f_b, w0, w1, &bk, quad);
                for i in 0..=200 {
                    min_d_near = min_d_near.min(dval(w0 + (w1 - w0) * i as f64 / 200.0));
                }
            }
            let hb = |s: f64| {
                let bp = domain.boundary_point(c, s);
                spec.h_bg_at(&bp).unwrap_or(f64::NAN) * (phi(bp.position) - lk)
            };
            h_bg_term += 2.0 * integrate_split(hb, lo, hi, &bk, quad);
        }
        if !boundary.is_finite() || !h_bg_term.is_finite() {
            return Err(Error::InvalidField("boundary data could not be evaluated".into()));
        }
        let k_bg_term = 2.0 * kt * (phi_int - lk * area_domain);
        let energy = 0.5 * dirichlet + k_bg_term + 2.0 * area - 4.0 * boundary + h_bg_term;
        rows.push(TestfnRow {
            mu,
            a,
            dirichlet,
            area,
            boundary,
            boundary_near,
            min_d_near,
            k_bg_term,
            h_bg_term,
            energy,
            dirichlet_slope: dirichlet * a,
            area_slope: area * a,
            boundary_slope: boundary * a,
            boundary_near_slope: boundary_near * a,
            energy_slope: energy * a,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runs_wrap_on_closed_components() {
        let hot = [true, false, false, true, true];
        assert_eq!(runs(&hot, true), vec![vec![3, 4, 0]]);
        assert_eq!(runs(&hot, false), vec![vec![0], vec![3, 4]]);
    }

    #[test]
    fn trig_degree_ignores_trailing_zeros() {
        let f = TrigPoly { a: vec![1.0, 0.0, 2.0, 0.0], b: vec![] };
        assert_eq!(f.degree(), 2);
        assert!((f.eval(0.3) - (1.0 + 2.0 * 0.6f64.cos())).abs() < 1e-15);
    }
}
