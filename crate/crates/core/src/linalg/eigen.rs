//! Lowest eigenpairs of the symmetric pencil `A x = mu B x` with `B` positive definite.

use super::ldlt::Ldlt;
use super::sparse::{axpy, dot, CsrMatrix};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct EigOptions {
    /// Convergence threshold on `||A x - mu B x||_{B^-1} / max(1, |mu|)`.
    pub tol: f64,
    pub block: usize,
    pub max_dim: usize,
    pub max_restarts: usize,
    pub dense_limit: usize,
    pub seed: u64,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self { tol: 1e-9, block: 4, max_dim: 160, max_restarts: 30, dense_limit: 1200, seed: 0x5eed }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// B-orthonormal eigenvectors.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

pub fn smallest_eigenpairs(a: &CsrMatrix, b: &CsrMatrix, k: usize, opts: EigOptions) -> Result<EigenPairs> {
    let n = a.dim();
    if b.dim() != n {
        return Err(Error::Eigensolver("dimension mismatch".into()));
    }
    let k = k.min(n);
    if k == 0 {
        return Ok(EigenPairs { values: vec![], vectors: vec![], residuals: vec![] });
    }
    if n <= opts.dense_limit {
        dense(a, b, k)
    } else {
        krylov(a, b, k, opts)
    }
}

fn dense(a: &CsrMatrix, b: &CsrMatrix, k: usize) -> Result<EigenPairs> {
    let n = a.dim();
    let chol = b
        .to_dense()
        .cholesky()
        .ok_or_else(|| Error::Eigensolver("B is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Eigensolver("singular Cholesky factor".into()))?;
    let c = &linv * a.to_dense() * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lt_inv = linv.transpose();
    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    for &i in idx.iter().take(k) {
        values.push(eig.eigenvalues[i]);
        let y = &lt_inv * eig.eigenvectors.column(i);
        vectors.push(y.iter().copied().collect::<Vec<f64>>());
    }
    let residuals = residual_norms(a, b, None, &values, &vectors);
    Ok(EigenPairs { values, vectors, residuals })
}

fn residual_norms(a: &CsrMatrix, b: &CsrMatrix, bf: Option<&Ldlt>, values: &[f64], vectors: &[Vec<f64>]) -> Vec<f64> {
    values
        .iter()
        .zip(vectors)
        .map(|(&mu, x)| {
            let mut r = a.mul_vec(x);
            axpy(-mu, &b.mul_vec(x), &mut r);
            match bf {
                Some(f) => dot(&r, &f.solve(&r)).max(0.0).sqrt(),
                None => {
                    let d = b.diagonal();
                    r.iter().zip(&d).map(|(ri, di)| ri * ri / di).sum::<f64>().sqrt()
                }
            }
        })
        .collect()
}

struct Basis<'a> {
    b: &'a CsrMatrix,
    v: Vec<Vec<f64>>,
    av: Vec<Vec<f64>>,
}

impl<'a> Basis<'a> {
    /// B-orthogonalizes `w` against the basis (twice) and appends it; false if it deflates.
    fn push(&mut self, a: &CsrMatrix, mut w: Vec<f64>) -> bool {
        let norm0 = dot(&w, &self.b.mul_vec(&w)).max(0.0).sqrt();
        if norm0 == 0.0 || !norm0.is_finite() {
            return false;
        }
        for _ in 0..2 {
            let bw = self.b.mul_vec(&w);
            for vj in &self.v {
                let c = dot(vj, &bw);
                axpy(-c, vj, &mut w);
            }
        }
        let norm = dot(&w, &self.b.mul_vec(&w)).max(0.0).sqrt();
        if norm < 1e-8 * norm0 {
            return false;
        }
        w.iter_mut().for_each(|x| *x /= norm);
        self.av.push(a.mul_vec(&w));
        self.v.push(w);
        true
    }

    fn ritz(&self) -> (Vec<f64>, DMatrix<f64>) {
        let m = self.v.len();
        let mut h = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let x = 0.5 * (dot(&self.v[i], &self.av[j]) + dot(&self.v[j], &self.av[i]));
                h[(i, j)] = x;
                h[(j, i)] = x;
            }
        }
        let eig = SymmetricEigen::new(h);
        let mut idx: Vec<usize> = (0..m).collect();
        idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut y = DMatrix::zeros(m, m);
        for (c, &i) in idx.iter().enumerate() {
            y.set_column(c, &eig.eigenvectors.column(i));
        }
        (vals, y)
    }

    fn combine(&self, y: &DMatrix<f64>, col: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.v[0].len()];
        for (j, vj) in self.v.iter().enumerate() {
            axpy(y[(j, col)], vj, &mut x);
        }
        x
    }
}

fn krylov(a: &CsrMatrix, b: &CsrMatrix, k: usize, opts: EigOptions) -> Result<EigenPairs> {
    let n = a.dim();
    let bf = Ldlt::factor(b)?;
    if !bf.is_positive_definite() {
        return Err(Error::Eigensolver("B is not positive definite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let block = opts.block.max(1).max(k.min(8));
    let max_dim = opts.max_dim.max(3 * (k + block)).min(n);
    let mut start: Vec<Vec<f64>> = (0..block).map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect()).collect();
    let mut best: Option<EigenPairs> = None;
    for _restart in 0..opts.max_restarts {
        let mut basis = Basis { b, v: Vec::with_capacity(max_dim), av: Vec::with_capacity(max_dim) };
        let mut frontier: Vec<usize> = Vec::new();
        for w in start.drain(..) {
            if basis.push(a, w) {
                frontier.push(basis.v.len() - 1);
            }
        }
        let mut next_check = (2 * k + block).max(24);
        loop {
            if frontier.is_empty() {
                let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
                if basis.push(a, w) {
                    frontier.push(basis.v.len() - 1);
                }
            }
            let mut new_frontier = Vec::new();
            for &j in &frontier {
                if basis.v.len() >= max_dim {
                    break;
                }
                let w = bf.solve(&basis.av[j]);
                if basis.push(a, w) {
                    new_frontier.push(basis.v.len() - 1);
                }
            }
            frontier = new_frontier;
            let m = basis.v.len();
            if m >= next_check || m >= max_dim {
                next_check = m + 16;
                let (vals, y) = basis.ritz();
                let kk = k.min(m);
                let vectors: Vec<Vec<f64>> = (0..kk).map(|c| basis.combine(&y, c)).collect();
                let values: Vec<f64> = vals[..kk].to_vec();
                let residuals = residual_norms(a, b, Some(&bf), &values, &vectors);
                let converged = kk == k
                    && residuals.iter().zip(&values).all(|(r, mu)| *r <= opts.tol * mu.abs().max(1.0));
                let pairs = EigenPairs { values, vectors, residuals };
                if converged {
                    return Ok(pairs);
                }
                if m >= max_dim {
                    let keep = (k + block).min(m);
                    start = (0..keep).map(|c| basis.combine(&y, c)).collect();
                    best = Some(pairs);
                    break;
                }
            }
        }
    }
    let pairs = best.ok_or_else(|| Error::Eigensolver("no Ritz pairs".into()))?;
    let worst = pairs.residuals.iter().cloned().fold(0.0, f64::max);
    Err(Error::Eigensolver(format!("block Krylov did not converge: worst residual {worst:.3e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sparse::TripletBuilder;

    fn path(n: usize, shift: f64) -> (CsrMatrix, CsrMatrix) {
        let mut t = TripletBuilder::new(n);
        for i in 0..n {
            t.add(i, i, 2.0 + shift);
            if i + 1 < n {
                t.add(i, i + 1, -1.0);
                t.add(i + 1, i, -1.0);
            }
        }
        let a = t.build();
        let b = CsrMatrix::from_diagonal(&vec![1.0; n]).linear_combination(1.0, &a, 0.0);
        (a, b)
    }

    #[test]
    fn krylov_matches_dense() {
        let n = 900;
        let (lap, _) = path(n, 0.0);
        let mut pot = vec![1.0; n];
        for (i, v) in [(100, -2.0), (400, -1.0), (401, -1.0), (700, 0.3), (850, 0.5)] {
            pot[i] = v;
        }
        let a = lap.scale(0.05).add_diagonal(&pot);
        let b = lap.add_diagonal(&vec![1.0; n]);
        let d = smallest_eigenpairs(&a, &b, 5, EigOptions::default()).unwrap();
        let opts = EigOptions { dense_limit: 10, ..Default::default() };
        let k = smallest_eigenpairs(&a, &b, 5, opts).unwrap();
        for (x, y) in d.values.iter().zip(&k.values) {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
        assert!(d.values[0] < 0.0 && d.values[2] < 0.0);
    }
}
