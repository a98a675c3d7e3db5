//! Flat model domains, their structured triangulations and boundary geometry.
//!
//! Every family is generated directly at level `k` so that level `k + 1` is the
//! uniform 4-split of level `k` with boundary midpoints on the true boundary.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainKind {
    /// `S^1 x [0, L]`, periodic in `x` with period `2 pi`.
    Cylinder { length: f64 },
    /// `{ r <= |x| <= 1 }`.
    Annulus { inner_radius: f64 },
    /// `{ |x| <= R, y >= 0 }`; optional grading `c` clusters nodes at the origin.
    HalfDisk {
        radius: f64,
        #[serde(default)]
        grading: Option<f64>,
    },
    /// `{ |x| <= R }`.
    Disk { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub kind: DomainKind,
    #[serde(default)]
    pub level: u32,
    /// Divisions of the level-0 grid: `[nx, ny]` for the cylinder, `[n_theta, n_r]`
    /// for the annulus, `[n, _]` hexagon subdivisions for disks.
    #[serde(default)]
    pub base: Option<[usize; 2]>,
}

impl DomainSpec {
    pub fn new(kind: DomainKind, level: u32) -> Self {
        Self { kind, level, base: None }
    }

    pub fn cylinder(length: f64, level: u32) -> Self {
        Self::new(DomainKind::Cylinder { length }, level)
    }

    pub fn annulus(inner_radius: f64, level: u32) -> Self {
        Self::new(DomainKind::Annulus { inner_radius }, level)
    }

    pub fn half_disk(radius: f64, level: u32) -> Self {
        Self::new(DomainKind::HalfDisk { radius, grading: None }, level)
    }

    pub fn graded_half_disk(radius: f64, grading: f64, level: u32) -> Self {
        Self::new(DomainKind::HalfDisk { radius, grading: Some(grading) }, level)
    }

    pub fn disk(radius: f64, level: u32) -> Self {
        Self::new(DomainKind::Disk { radius }, level)
    }

    pub fn with_base(mut self, a: usize, b: usize) -> Self {
        self.base = Some([a, b]);
        self
    }

    pub fn with_level(mut self, level: u32) -> Self {
        self.level = level;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidDomain(m));
        match self.kind {
            DomainKind::Cylinder { length } if !(length > 0.0 && length.is_finite()) => {
                return bad(format!("cylinder length must be positive, got {length}"))
            }
            DomainKind::Annulus { inner_radius: r } if !(r > 0.0 && r < 1.0) => {
                return bad(format!("annulus inner radius must lie in (0, 1), got {r}"))
            }
            DomainKind::HalfDisk { radius, grading } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return bad(format!("half-disk radius must be positive, got {radius}"));
                }
                if let Some(c) = grading {
                    if !(c > 0.0 && c.is_finite()) {
                        return bad(format!("grading scale must be positive, got {c}"));
                    }
                }
            }
            DomainKind::Disk { radius } if !(radius > 0.0 && radius.is_finite()) => {
                return bad(format!("disk radius must be positive, got {radius}"))
            }
            _ => {}
        }
        if self.level > 12 {
            return bad(format!("refinement level {} is too large", self.level));
        }
        if let Some([a, b]) = self.base {
            if a == 0 || b == 0 {
                return bad("base divisions must be positive".into());
            }
        }
        Ok(())
    }

    pub fn n_components(&self) -> usize {
        match self.kind {
            DomainKind::Disk { .. } => 1,
            _ => 2,
        }
    }

    pub fn area(&self) -> f64 {
        match self.kind {
            DomainKind::Cylinder { length } => TAU * length,
            DomainKind::Annulus { inner_radius: r } => PI * (1.0 - r * r),
            DomainKind::HalfDisk { radius, .. } => 0.5 * PI * radius * radius,
            DomainKind::Disk { radius } => PI * radius * radius,
        }
    }

    /// Boundary component labels in index order.
    pub fn component_labels(&self) -> Vec<&'static str> {
        match self.kind {
            DomainKind::Cylinder { .. } => vec!["bottom", "top"],
            DomainKind::Annulus { .. } => vec!["outer", "inner"],
            DomainKind::HalfDisk { .. } => vec!["flat", "arc"],
            DomainKind::Disk { .. } => vec!["circle"],
        }
    }

    pub fn component_closed(&self, c: usize) -> bool {
        !matches!(self.kind, DomainKind::HalfDisk { .. }) && c < self.n_components()
    }

    /// Parameter range `[s0, s1)` of a boundary component.
    pub fn component_range(&self, c: usize) -> (f64, f64) {
        match (self.kind, c) {
            (DomainKind::Cylinder { .. }, _) => (0.0, TAU),
            (DomainKind::Annulus { .. }, 0) => (0.0, TAU),
            (DomainKind::Annulus { inner_radius }, _) => (0.0, TAU * inner_radius),
            (DomainKind::HalfDisk { radius, .. }, 0) => (-radius, radius),
            (DomainKind::HalfDisk { radius, .. }, _) => (0.0, PI * radius),
            (DomainKind::Disk { radius }, _) => (0.0, TAU * radius),
        }
    }

    /// Exact boundary geometry at arc-length parameter `s` of component `c`.
    pub fn boundary_point(&self, c: usize, s: f64) -> BoundaryPoint {
        let circle = |rad: f64, theta: f64, outward: f64| {
            let (sn, cs) = theta.sin_cos();
            BoundaryPoint {
                component: c,
                s,
                position: [rad * cs, rad * sn],
                normal: [outward * cs, outward * sn],
                tangent: [-sn, cs],
                curvature: outward / rad,
            }
        };
        let line = |pos: [f64; 2], normal: [f64; 2]| BoundaryPoint {
            component: c,
            s,
            position: pos,
            normal,
            tangent: [1.0, 0.0],
            curvature: 0.0,
        };
        match (self.kind, c) {
            (DomainKind::Cylinder { .. }, 0) => line([s, 0.0], [0.0, -1.0]),
            (DomainKind::Cylinder { length }, _) => line([s, length], [0.0, 1.0]),
            (DomainKind::Annulus { .. }, 0) => circle(1.0, s, 1.0),
            (DomainKind::Annulus { inner_radius }, _) => circle(inner_radius, s / inner_radius, -1.0),
            (DomainKind::HalfDisk { .. }, 0) => line([s, 0.0], [0.0, -1.0]),
            (DomainKind::HalfDisk { radius, .. }, _) => circle(radius, s / radius, 1.0),
            (DomainKind::Disk { radius }, _) => circle(radius, s / radius, 1.0),
        }
    }

    /// Distance from an interior point to the boundary, in the flat model.
    pub fn distance_to_boundary(&self, x: [f64; 2]) -> f64 {
        let rho = x[0].hypot(x[1]);
        match self.kind {
            DomainKind::Cylinder { length } => x[1].min(length - x[1]),
            DomainKind::Annulus { inner_radius } => (1.0 - rho).min(rho - inner_radius),
            DomainKind::HalfDisk { radius, .. } => x[1].min(radius - rho),
            DomainKind::Disk { radius } => radius - rho,
        }
    }

    /// Nearest boundary point: component and parameter.
    pub fn project_to_boundary(&self, x: [f64; 2]) -> (usize, f64) {
        let rho = x[0].hypot(x[1]);
        let theta = x[1].atan2(x[0]).rem_euclid(TAU);
        match self.kind {
            DomainKind::Cylinder { length } => {
                let s = x[0].rem_euclid(TAU);
                if x[1] <= length - x[1] {
                    (0, s)
                } else {
                    (1, s)
                }
            }
            DomainKind::Annulus { inner_radius } => {
                if 1.0 - rho <= rho - inner_radius {
                    (0, theta)
                } else {
                    (1, inner_radius * theta)
                }
            }
            DomainKind::HalfDisk { radius, .. } => {
                if x[1] <= radius - rho {
                    (0, x[0])
                } else {
                    (1, radius * theta.min(PI))
                }
            }
            DomainKind::Disk { radius } => (0, radius * theta),
        }
    }

    fn base_divisions(&self) -> [usize; 2] {
        if let Some(b) = self.base {
            return b;
        }
        match self.kind {
            DomainKind::Cylinder { length } => [8, ((8.0 * length / TAU).round() as usize).max(1)],
            DomainKind::Annulus { inner_radius: r } => {
                [16, ((16.0 * (1.0 - r) / (PI * (1.0 + r))).round() as usize).max(1)]
            }
            _ => [2, 1],
        }
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        self.validate()?;
        let m = match self.kind {
            DomainKind::Cylinder { length } => build_cylinder(*self, length),
            DomainKind::Annulus { inner_radius } => build_annulus(*self, inner_radius),
            DomainKind::HalfDisk { radius, grading } => build_hex(*self, radius, grading, true),
            DomainKind::Disk { radius } => build_hex(*self, radius, None, false),
        };
        m.check_conformity()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub component: usize,
    pub s: f64,
    pub position: [f64; 2],
    /// Outward unit normal.
    pub normal: [f64; 2],
    /// Unit tangent in the direction of increasing `s`.
    pub tangent: [f64; 2],
    /// Geodesic curvature of the boundary curve in the flat metric.
    pub curvature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryComponent {
    pub label: String,
    pub closed: bool,
    /// Vertices ordered by increasing `s`; closed loops do not repeat the first vertex.
    pub vertices: Vec<usize>,
    pub s: Vec<f64>,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub v: [usize; 2],
    pub component: usize,
    pub s: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub spec: DomainSpec,
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub components: Vec<BoundaryComponent>,
    /// `(image, source)` vertex pairs identified by periodicity.
    pub periodic_pairs: Vec<(usize, usize)>,
    /// Degree of freedom of each vertex.
    pub dof: Vec<usize>,
    pub n_dofs: usize,
    /// Representative vertex of each degree of freedom.
    pub dof_vertex: Vec<usize>,
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn dof_coords(&self) -> Vec<[f64; 2]> {
        self.dof_vertex.iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Longest edge length.
    pub fn mesh_size(&self) -> f64 {
        let mut h = 0.0f64;
        for t in &self.triangles {
            for k in 0..3 {
                let a = self.vertices[t[k]];
                let b = self.vertices[t[(k + 1) % 3]];
                h = h.max((a[0] - b[0]).hypot(a[1] - b[1]));
            }
        }
        h
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        let a = self.vertices[e.v[0]];
        let b = self.vertices[e.v[1]];
        (a[0] - b[0]).hypot(a[1] - b[1])
    }

    /// Outward unit normal of the chord of a boundary edge.
    pub fn edge_normal(&self, e: &BoundaryEdge) -> [f64; 2] {
        let a = self.vertices[e.v[0]];
        let b = self.vertices[e.v[1]];
        let len = (a[0] - b[0]).hypot(a[1] - b[1]);
        let t = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
        let n = [t[1], -t[0]];
        let exact = self.spec.boundary_point(e.component, 0.5 * (e.s[0] + e.s[1])).normal;
        if n[0] * exact[0] + n[1] * exact[1] >= 0.0 {
            n
        } else {
            [-n[0], -n[1]]
        }
    }

    pub fn boundary_point(&self, c: usize, s: f64) -> BoundaryPoint {
        self.spec.boundary_point(c, s)
    }

    /// Plain-text tables, one row per entry:
    /// `vertices.dat` (index x y dof), `triangles.dat` (index v0 v1 v2),
    /// `boundary_edges.dat` (component v0 v1 s0 s1).
    pub fn write_tables(&self, dir: &std::path::Path) -> Result<Vec<String>> {
        use std::fmt::Write;
        std::fs::create_dir_all(dir)?;
        let mut v = String::from("# index x y dof\n");
        for (i, x) in self.vertices.iter().enumerate() {
            writeln!(v, "{i} {:.16e} {:.16e} {}", x[0], x[1], self.dof[i]).unwrap();
        }
        let mut t = String::from("# index v0 v1 v2\n");
        for (i, tri) in self.triangles.iter().enumerate() {
            writeln!(t, "{i} {} {} {}", tri[0], tri[1], tri[2]).unwrap();
        }
        let mut b = String::from("# component v0 v1 s0 s1\n");
        for e in &self.boundary_edges {
            writeln!(b, "{} {} {} {:.16e} {:.16e}", e.component, e.v[0], e.v[1], e.s[0], e.s[1]).unwrap();
        }
        let files = [("vertices.dat", v), ("triangles.dat", t), ("boundary_edges.dat", b)];
        for (name, text) in &files {
            std::fs::write(dir.join(name), text)?;
        }
        Ok(files.iter().map(|f| f.0.to_string()).collect())
    }

    /// True for vertices on some boundary component.
    pub fn boundary_flags(&self) -> Vec<bool> {
        let mut f = vec![false; self.n_dofs];
        for e in &self.boundary_edges {
            for &v in &e.v {
                f[self.dof[v]] = true;
            }
        }
        f
    }

    /// Component vertex position of each dof, if on component `c`.
    pub fn component_index(&self, c: usize) -> Vec<Option<usize>> {
        let mut idx = vec![None; self.n_dofs];
        for (k, &v) in self.components[c].vertices.iter().enumerate() {
            idx[self.dof[v]] = Some(k);
        }
        idx
    }

    /// Verifies orientation, edge sharing (modulo periodicity) and the boundary edge list.
    pub fn check_conformity(&self) -> Result<()> {
        use std::collections::HashMap;
        for t in 0..self.triangles.len() {
            if self.triangle_area(t) <= 0.0 {
                return Err(Error::InvalidDomain(format!("triangle {t} has non-positive area")));
            }
        }
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let a = self.dof[t[k]];
                let b = self.dof[t[(k + 1) % 3]];
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut bnd: HashMap<(usize, usize), usize> = HashMap::new();
        for e in &self.boundary_edges {
            let a = self.dof[e.v[0]];
            let b = self.dof[e.v[1]];
            *bnd.entry((a.min(b), a.max(b))).or_default() += 1;
        }
        for (edge, &c) in &count {
            let expected = if bnd.contains_key(edge) { 1 } else { 2 };
            if c != expected {
                return Err(Error::InvalidDomain(format!("edge {edge:?} shared by {c} triangles")));
            }
        }
        if bnd.values().any(|&c| c != 1) || bnd.keys().any(|e| !count.contains_key(e)) {
            return Err(Error::InvalidDomain("inconsistent boundary edge list".into()));
        }
        Ok(())
    }

    /// The next refinement level (uniform 4-split of this mesh).
    pub fn refine(&self) -> Result<Mesh> {
        self.spec.with_level(self.spec.level + 1).build_mesh()
    }
}

fn identity_dofs(n: usize) -> (Vec<usize>, usize, Vec<usize>) {
    ((0..n).collect(), n, (0..n).collect())
}

fn build_cylinder(spec: DomainSpec, length: f64) -> Mesh {
    let [bx, by] = spec.base_divisions();
    let f = 1usize << spec.level;
    let (nx, ny) = (bx * f, by * f);
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([TAU * i as f64 / nx as f64, length * j as f64 / ny as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mut dof = vec![0; vertices.len()];
    for j in 0..=ny {
        for i in 0..=nx {
            dof[id(i, j)] = j * nx + (i % nx);
        }
    }
    let n_dofs = nx * (ny + 1);
    let mut dof_vertex = vec![0; n_dofs];
    for j in 0..=ny {
        for i in 0..nx {
            dof_vertex[j * nx + i] = id(i, j);
        }
    }
    let periodic_pairs = (0..=ny).map(|j| (id(nx, j), id(0, j))).collect();
    let mut components = Vec::new();
    let mut boundary_edges = Vec::new();
    for (c, j) in [(0usize, 0usize), (1, ny)] {
        let verts: Vec<usize> = (0..nx).map(|i| id(i, j)).collect();
        let s: Vec<f64> = (0..nx).map(|i| vertices[id(i, j)][0]).collect();
        for i in 0..nx {
            boundary_edges.push(BoundaryEdge {
                v: [id(i, j), id(i + 1, j)],
                component: c,
                s: [vertices[id(i, j)][0], vertices[id(i + 1, j)][0]],
            });
        }
        components.push(BoundaryComponent {
            label: spec.component_labels()[c].into(),
            closed: true,
            vertices: verts,
            s,
            length: TAU,
        });
    }
    Mesh { spec, vertices, triangles, boundary_edges, components, periodic_pairs, dof, n_dofs, dof_vertex }
}

fn build_annulus(spec: DomainSpec, r: f64) -> Mesh {
    let [bt, br] = spec.base_divisions();
    let f = 1usize << spec.level;
    let (nt, nr) = (bt * f, br * f);
    let id = |i: usize, j: usize| j * nt + (i % nt);
    let mut vertices = Vec::with_capacity(nt * (nr + 1));
    for j in 0..=nr {
        let rho = r + (1.0 - r) * j as f64 / nr as f64;
        for i in 0..nt {
            let th = TAU * i as f64 / nt as f64;
            vertices.push([rho * th.cos(), rho * th.sin()]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nt * nr);
    for j in 0..nr {
        for i in 0..nt {
            let (a, b, c, d) = (id(i, j), id(i, j + 1), id(i + 1, j + 1), id(i + 1, j));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mut components = Vec::new();
    let mut boundary_edges = Vec::new();
    for (c, j, rad) in [(0usize, nr, 1.0), (1, 0usize, r)] {
        let s_of = |i: usize| rad * TAU * i as f64 / nt as f64;
        for i in 0..nt {
            boundary_edges.push(BoundaryEdge { v: [id(i, j), id(i + 1, j)], component: c, s: [s_of(i), s_of(i + 1)] });
        }
        components.push(BoundaryComponent {
            label: spec.component_labels()[c].into(),
            closed: true,
            vertices: (0..nt).map(|i| id(i, j)).collect(),
            s: (0..nt).map(s_of).collect(),
            length: rad * TAU,
        });
    }
    let (dof, n_dofs, dof_vertex) = identity_dofs(vertices.len());
    Mesh { spec, vertices, triangles, boundary_edges, components, periodic_pairs: vec![], dof, n_dofs, dof_vertex }
}

/// Hexagonal lattice in axial coordinates, mapped radially so that the hexagon
/// boundary lands on the circle of radius `radius`.
fn build_hex(spec: DomainSpec, radius: f64, grading: Option<f64>, half: bool) -> Mesh {
    let n = (spec.base_divisions()[0] << spec.level) as i64;
    let hexnorm = |a: i64, b: i64| a.abs().max(b.abs()).max((a + b).abs());
    let radial = |t: f64| match grading {
        Some(c) => c * (((1.0 + radius / c).ln() * t).exp() - 1.0),
        None => radius * t,
    };
    let b_min = if half { 0 } else { -n };
    let width = (2 * n + 1) as usize;
    let mut index = vec![usize::MAX; width * width];
    let slot = |a: i64, b: i64| ((b + n) as usize) * width + (a + n) as usize;
    let mut vertices = Vec::new();
    let mut lattice = Vec::new();
    for b in b_min..=n {
        for a in -n..=n {
            if hexnorm(a, b) > n {
                continue;
            }
            let xi = [(a as f64 + 0.5 * b as f64) / n as f64, (b as f64 * 3f64.sqrt() / 2.0) / n as f64];
            let len = xi[0].hypot(xi[1]);
            let p = if len == 0.0 {
                [0.0, 0.0]
            } else {
                let rho = radial(hexnorm(a, b) as f64 / n as f64);
                let mut p = [rho * xi[0] / len, rho * xi[1] / len];
                if b == 0 {
                    p[1] = 0.0;
                }
                p
            };
            index[slot(a, b)] = vertices.len();
            vertices.push(p);
            lattice.push((a, b));
        }
    }
    let get = |a: i64, b: i64| -> Option<usize> {
        if a < -n || a > n || b < b_min || b > n || hexnorm(a, b) > n {
            None
        } else {
            Some(index[slot(a, b)])
        }
    };
    let mut triangles = Vec::new();
    for b in b_min..n {
        for a in -n..n {
            if let (Some(p), Some(q), Some(r)) = (get(a, b), get(a + 1, b), get(a, b + 1)) {
                triangles.push([p, q, r]);
            }
            if let (Some(p), Some(q), Some(r)) = (get(a + 1, b), get(a + 1, b + 1), get(a, b + 1)) {
                triangles.push([p, q, r]);
            }
        }
    }
    let angle = |v: usize| {
        let p = vertices[v];
        p[1].atan2(p[0]).rem_euclid(TAU)
    };
    let mut rim: Vec<usize> = lattice
        .iter()
        .enumerate()
        .filter(|(_, &(a, b))| hexnorm(a, b) == n)
        .map(|(v, _)| v)
        .collect();
    let mut components = Vec::new();
    let mut boundary_edges = Vec::new();
    let labels = spec.component_labels();
    if half {
        let mut flat: Vec<usize> = lattice.iter().enumerate().filter(|(_, &(_, b))| b == 0).map(|(v, _)| v).collect();
        flat.sort_by(|&u, &v| vertices[u][0].total_cmp(&vertices[v][0]));
        let s: Vec<f64> = flat.iter().map(|&v| vertices[v][0]).collect();
        for k in 0..flat.len() - 1 {
            boundary_edges.push(BoundaryEdge { v: [flat[k], flat[k + 1]], component: 0, s: [s[k], s[k + 1]] });
        }
        components.push(BoundaryComponent { label: labels[0].into(), closed: false, vertices: flat, s, length: 2.0 * radius });
        // the corner at angle pi must sort last, not wrap to 0
        let ang = |v: usize| if vertices[v][0] < 0.0 && vertices[v][1] == 0.0 { PI } else { angle(v) };
        rim.sort_by(|&u, &v| ang(u).total_cmp(&ang(v)));
        let s: Vec<f64> = rim.iter().map(|&v| radius * ang(v)).collect();
        for k in 0..rim.len() - 1 {
            boundary_edges.push(BoundaryEdge { v: [rim[k], rim[k + 1]], component: 1, s: [s[k], s[k + 1]] });
        }
        components.push(BoundaryComponent { label: labels[1].into(), closed: false, vertices: rim, s, length: PI * radius });
    } else {
        rim.sort_by(|&u, &v| angle(u).total_cmp(&angle(v)));
        let s: Vec<f64> = rim.iter().map(|&v| radius * angle(v)).collect();
        let m = rim.len();
        for k in 0..m {
            let s1 = if k + 1 == m { TAU * radius } else { s[k + 1] };
            boundary_edges.push(BoundaryEdge { v: [rim[k], rim[(k + 1) % m]], component: 0, s: [s[k], s1] });
        }
        components.push(BoundaryComponent { label: labels[0].into(), closed: true, vertices: rim, s, length: TAU * radius });
    }
    let (dof, n_dofs, dof_vertex) = identity_dofs(vertices.len());
    Mesh { spec, vertices, triangles, boundary_edges, components, periodic_pairs: vec![], dof, n_dofs, dof_vertex }
}

/// Derivative with respect to arc length of a field sampled on the vertices of
/// one boundary component (second-order centered differences, one-sided at the
/// ends of open components).
pub fn tangential_derivative(mesh: &Mesh, component: usize, f: &[f64]) -> Result<Vec<f64>> {
    let comp = mesh
        .components
        .get(component)
        .ok_or_else(|| Error::InvalidField(format!("no boundary component {component}")))?;
    let n = comp.vertices.len();
    if f.len() != n {
        return Err(Error::InvalidField(format!("expected {n} boundary values, got {}", f.len())));
    }
    if n < 3 {
        return Err(Error::InvalidField("component has fewer than 3 vertices".into()));
    }
    let s = &comp.s;
    let lo = f.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    let mut out = vec![0.0; n];
    for i in 0..n {
        let (im, ip) = if comp.closed {
            ((i + n - 1) % n, (i + 1) % n)
        } else if i == 0 {
            (0, 1)
        } else if i == n - 1 {
            (n - 2, n - 1)
        } else {
            (i - 1, i + 1)
        };
        if !comp.closed && (i == 0 || i == n - 1) {
            // second-order one-sided stencil
            let (a, b, c) = if i == 0 { (0, 1, 2) } else { (n - 1, n - 2, n - 3) };
            let h1 = s[b] - s[a];
            let h2 = s[c] - s[a];
            out[i] = (h2 * h2 * (f[b] - f[a]) - h1 * h1 * (f[c] - f[a])) / (h1 * h2 * (h2 - h1));
            continue;
        }
        let mut h1 = s[i] - s[im];
        let mut h2 = s[ip] - s[i];
        if comp.closed {
            h1 = h1.rem_euclid(comp.length);
            h2 = h2.rem_euclid(comp.length);
        }
        let d2 = (f[ip] - f[i]) / h2 - (f[i] - f[im]) / h1;
        if range > 0.0 && (f[ip] - 2.0 * f[i] + f[im]).abs() > 0.5 * range && d2.abs() * h1.max(h2) > 0.5 * range {
            return Err(Error::InvalidField(format!(
                "boundary field is discontinuous near vertex {i} of component {component}"
            )));
        }
        out[i] = (h1 * h1 * (f[ip] - f[i]) + h2 * h2 * (f[i] - f[im])) / (h1 * h2 * (h1 + h2));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_specs(level: u32) -> Vec<DomainSpec> {
        vec![
            DomainSpec::cylinder(1.0, level),
            DomainSpec::annulus(0.5, level),
            DomainSpec::half_disk(3.0, level),
            DomainSpec::graded_half_disk(20.0, 1.0, level),
            DomainSpec::disk(0.4, level),
        ]
    }

    #[test]
    fn meshes_are_conforming_and_converge_in_area() {
        for spec in all_specs(3) {
            let m = spec.build_mesh().unwrap();
            let h = m.mesh_size();
            let rel = (m.area() - spec.area()).abs() / spec.area();
            assert!(rel <= 10.0 * h * h, "{spec:?}: rel area error {rel} vs h {h}");
        }
    }

    #[test]
    fn refinement_nests_vertices() {
        for spec in all_specs(1) {
            let c = spec.build_mesh().unwrap();
            let f = c.refine().unwrap();
            assert_eq!(f.triangles.len(), 4 * c.triangles.len());
            for p in &c.vertices {
                let hit = f.vertices.iter().any(|q| (p[0] - q[0]).abs() + (p[1] - q[1]).abs() < 1e-12);
                assert!(hit, "{spec:?}: coarse vertex {p:?} missing");
            }
        }
    }

    #[test]
    fn boundary_vertices_lie_on_the_boundary() {
        for spec in all_specs(2) {
            let m = spec.build_mesh().unwrap();
            for (c, comp) in m.components.iter().enumerate() {
                for (&v, &s) in comp.vertices.iter().zip(&comp.s) {
                    let p = spec.boundary_point(c, s).position;
                    let q = m.vertices[v];
                    assert!((p[0] - q[0]).abs() + (p[1] - q[1]).abs() < 1e-12, "{spec:?} comp {c}");
                }
            }
        }
    }

    #[test]
    fn cylinder_periodic_pairs_are_a_bijection() {
        let m = DomainSpec::cylinder(2.0, 2).build_mesh().unwrap();
        let mut sources: Vec<usize> = m.periodic_pairs.iter().map(|p| p.1).collect();
        sources.sort();
        sources.dedup();
        assert_eq!(sources.len(), m.periodic_pairs.len());
        for &(img, src) in &m.periodic_pairs {
            assert_eq!(m.dof[img], m.dof[src]);
            assert!((m.vertices[img][0] - m.vertices[src][0] - TAU).abs() < 1e-12);
        }
        assert_eq!(m.n_dofs + m.periodic_pairs.len(), m.n_vertices());
    }

    #[test]
    fn invalid_domains_are_rejected() {
        assert!(DomainSpec::annulus(1.0, 0).build_mesh().is_err());
        assert!(DomainSpec::cylinder(0.0, 0).build_mesh().is_err());
        assert!(DomainSpec::graded_half_disk(1.0, -1.0, 0).build_mesh().is_err());
    }

    #[test]
    fn tangential_derivative_of_sine_and_sawtooth() {
        let m = DomainSpec::annulus(0.5, 2).build_mesh().unwrap();
        let comp = &m.components[0];
        let f: Vec<f64> = comp.s.iter().map(|s| s.sin()).collect();
        let d = tangential_derivative(&m, 0, &f).unwrap();
        let h = comp.s[1] - comp.s[0];
        for (s, ds) in comp.s.iter().zip(&d) {
            assert!((ds - s.cos()).abs() < h * h);
        }
        let saw: Vec<f64> = comp.s.clone();
        assert!(tangential_derivative(&m, 0, &saw).is_err());
        assert!(tangential_derivative(&m, 0, &f[..2]).is_err());
    }
}
