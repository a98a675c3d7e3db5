//! Envelope LDL^T factorization without pivoting, reverse Cuthill-McKee ordered.
//!
//! Works for symmetric indefinite matrices whose leading minors stay away from
//! zero; Sylvester's law makes the pivot signs the inertia of the matrix.

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

#[derive(Debug, Clone)]
pub struct Ldlt {
    /// perm[new] = old
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    l: Vec<f64>,
    d: Vec<f64>,
    zero_tol: f64,
}

pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim();
    let (rp, ci) = a.pattern();
    let degree: Vec<usize> = (0..n).map(|i| rp[i + 1] - rp[i]).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| degree[i]);
    let bfs = |root: usize, visited: &mut Vec<bool>, out: &mut Vec<usize>| {
        let mut q = VecDeque::from([root]);
        visited[root] = true;
        let mut nbrs = Vec::new();
        while let Some(v) = q.pop_front() {
            out.push(v);
            nbrs.clear();
            nbrs.extend(ci[rp[v]..rp[v + 1]].iter().copied().filter(|&w| !visited[w]));
            nbrs.sort_by_key(|&w| degree[w]);
            for &w in &nbrs {
                if !visited[w] {
                    visited[w] = true;
                    q.push_back(w);
                }
            }
        }
    };
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral root: repeat BFS from the last level
        let mut root = seed;
        for _ in 0..4 {
            let mut tmp_vis = visited.clone();
            let mut lvl = Vec::new();
            bfs(root, &mut tmp_vis, &mut lvl);
            let last = *lvl.last().unwrap();
            if last == root {
                break;
            }
            root = last;
        }
        bfs(root, &mut visited, &mut order);
    }
    order.reverse();
    order
}

impl Ldlt {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old in 0..n {
            let i = inv[old];
            for (j_old, _) in a.row(old) {
                let j = inv[j_old];
                if j < first[i] {
                    first[i] = j;
                }
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i]);
        }
        let mut l = vec![0.0; start[n]];
        let mut d = vec![0.0; n];
        let mut diag_scale = 0.0f64;
        for old in 0..n {
            let i = inv[old];
            for (j_old, v) in a.row(old) {
                let j = inv[j_old];
                if j < i {
                    l[start[i] + j - first[i]] += v;
                } else if j == i {
                    d[i] += v;
                }
            }
            diag_scale = diag_scale.max(d[i].abs());
        }
        let zero_tol = 1e-14 * diag_scale.max(f64::MIN_POSITIVE);
        for i in 0..n {
            let fi = first[i];
            let si = start[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                if k0 < j {
                    let s: f64 = {
                        let gi = &l[si + k0 - fi..si + j - fi];
                        let lj = &l[start[j] + k0 - fj..start[j] + j - fj];
                        gi.iter().zip(lj).map(|(x, y)| x * y).sum()
                    };
                    l[si + j - fi] -= s;
                }
            }
            let mut di = d[i];
            for j in fi..i {
                let g = l[si + j - fi];
                let lij = g / d[j];
                l[si + j - fi] = lij;
                di -= g * lij;
            }
            if !di.is_finite() {
                return Err(Error::Factorization(format!("non-finite pivot at row {i}")));
            }
            if di.abs() <= zero_tol {
                di = if di < 0.0 { -zero_tol } else { zero_tol };
                if di == 0.0 {
                    return Err(Error::Factorization(format!("zero pivot at row {i}")));
                }
            }
            d[i] = di;
        }
        Ok(Self { perm, first, start, l, d, zero_tol })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn inertia(&self) -> Inertia {
        let mut r = Inertia { negative: 0, zero: 0, positive: 0 };
        for &p in &self.d {
            if p.abs() <= self.zero_tol * 1.0000001 {
                r.zero += 1;
            } else if p < 0.0 {
                r.negative += 1;
            } else {
                r.positive += 1;
            }
        }
        r
    }

    pub fn is_positive_definite(&self) -> bool {
        let i = self.inertia();
        i.negative == 0 && i.zero == 0
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.l[self.start[i]..self.start[i + 1]];
            let s: f64 = row.iter().zip(&y[fi..i]).map(|(a, b)| a * b).sum();
            y[i] -= s;
        }
        for i in 0..n {
            y[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let xi = y[i];
            let row = &self.l[self.start[i]..self.start[i + 1]];
            for (k, lik) in row.iter().enumerate() {
                y[fi + k] -= lik * xi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    pub fn envelope_size(&self) -> usize {
        self.l.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sparse::TripletBuilder;

    fn laplacian_1d(n: usize, shift: f64) -> CsrMatrix {
        let mut t = TripletBuilder::new(n);
        for i in 0..n {
            t.add(i, i, 2.0 + shift);
            if i + 1 < n {
                t.add(i, i + 1, -1.0);
                t.add(i + 1, i, -1.0);
            }
        }
        t.build()
    }

    #[test]
    fn solves_spd_system() {
        let a = laplacian_1d(50, 0.1);
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&x);
        let f = Ldlt::factor(&a).unwrap();
        assert!(f.is_positive_definite());
        let y = f.solve(&b);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn inertia_matches_dense_spectrum() {
        // eigenvalues of the path Laplacian are 2 - 2cos(k pi/(n+1)); shift makes some negative
        let n = 40;
        let shift = -0.5;
        let a = laplacian_1d(n, shift);
        let expected = (1..=n)
            .filter(|&k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos() + shift < 0.0)
            .count();
        let f = Ldlt::factor(&a).unwrap();
        assert_eq!(f.inertia().negative, expected);
        let x: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let y = f.solve(&a.mul_vec(&x));
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-8 * p.abs());
        }
    }
}
