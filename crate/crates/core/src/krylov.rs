//! Krylov-subspace machinery: Lanczos ground states with full
//! reorthogonalization and the Lanczos approximation of `exp(-i dt H) psi`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fockspace::SparseOperator;
use crate::linalg::{self, CMatrix, ZERO};
use crate::C64;

/// Anything that can act as a Hermitian matrix on a vector.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[C64], y: &mut [C64]);

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.dim()];
        self.apply_into(x, &mut y);
        y
    }
}

impl LinearOperator for SparseOperator {
    fn dim(&self) -> usize {
        SparseOperator::dim(self)
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        SparseOperator::apply_into(self, x, y)
    }
}

impl LinearOperator for CMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = (0..self.ncols()).map(|c| self[(r, c)] * x[c]).sum();
        }
    }
}

#[derive(Clone, Debug)]
pub struct LanczosConfig {
    pub max_iter: usize,
    /// Convergence threshold on `‖Hψ − Eψ‖`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        LanczosConfig { max_iter: 2000, tol: 1e-9, seed: 0x5eed }
    }
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub energy: f64,
    pub vector: Vec<C64>,
    pub residual: f64,
}

/// Remove the components along `locked` (assumed orthonormal), twice.
fn project_out(v: &mut [C64], locked: &[Vec<C64>]) {
    for _ in 0..2 {
        for q in locked {
            let c = linalg::inner(q, v);
            linalg::axpy(-c, q, v);
        }
    }
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |r, c| {
        if r == c {
            alpha[r]
        } else if r + 1 == c {
            beta[r]
        } else if c + 1 == r {
            beta[c]
        } else {
            0.0
        }
    });
    t.symmetric_eigen()
}

fn lowest_index(values: &nalgebra::DVector<f64>) -> usize {
    (0..values.len())
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0)
}

/// Lowest eigenpair of `op` restricted to the orthogonal complement of
/// `locked`.
fn lowest_in_complement(
    op: &dyn LinearOperator,
    locked: &[Vec<C64>],
    cfg: &LanczosConfig,
    rng: &mut ChaCha8Rng,
) -> Result<EigenPair> {
    let n = op.dim();
    let room = n - locked.len();
    let mut start: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    project_out(&mut start, locked);
    linalg::normalize(&mut start);

    let mut basis: Vec<Vec<C64>> = vec![start];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![ZERO; n];
    let mut last_residual = f64::INFINITY;
    let max_iter = cfg.max_iter.min(room);

    for j in 0..max_iter {
        op.apply_into(&basis[j], &mut w);
        let a = linalg::inner(&basis[j], &w).re;
        alpha.push(a);
        // full reorthogonalization against the Krylov basis and locked vectors
        for _ in 0..2 {
            for q in basis.iter().chain(locked) {
                let c = linalg::inner(q, &w);
                linalg::axpy(-c, q, &mut w);
            }
        }
        let b = linalg::norm(&w);
        let exhausted = b < 1e-13 || j + 1 == max_iter;
        let check = exhausted || (j + 1) % 10 == 0 || j + 1 <= 4;
        if check {
            let eig = tridiagonal(&alpha, &beta);
            let k = lowest_index(&eig.eigenvalues);
            let m = alpha.len();
            let estimate = (b * eig.eigenvectors[(m - 1, k)]).abs();
            if estimate < cfg.tol || exhausted {
                let mut vector = vec![ZERO; n];
                for (i, q) in basis.iter().enumerate() {
                    linalg::axpy(C64::new(eig.eigenvectors[(i, k)], 0.0), q, &mut vector);
                }
                project_out(&mut vector, locked);
                linalg::normalize(&mut vector);
                let energy = eig.eigenvalues[k];
                let hv = op.apply(&vector);
                let residual = hv
                    .iter()
                    .zip(&vector)
                    .map(|(h, v)| (h - v * energy).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                last_residual = residual;
                if residual < cfg.tol {
                    return Ok(EigenPair { energy, vector, residual });
                }
                if exhausted {
                    break;
                }
            }
        }
        beta.push(b);
        let next: Vec<C64> = w.iter().map(|z| z / b).collect();
        basis.push(next);
    }
    Err(Error::NoConvergence { what: "Lanczos", iterations: alpha.len(), residual: last_residual })
}

/// The `k` lowest eigenpairs of a Hermitian operator, ascending.
///
/// Each pair comes from a fresh Lanczos run in the complement of the
/// previously converged vectors, which resolves degenerate levels.
pub fn lowest_eigenpairs(
    op: &dyn LinearOperator,
    k: usize,
    cfg: &LanczosConfig,
) -> Result<Vec<EigenPair>> {
    let n = op.dim();
    if k > n {
        return Err(Error::InvalidParameter(format!("requested {k} eigenpairs of a {n}-dim operator")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pairs: Vec<EigenPair> = Vec::with_capacity(k);
    let mut locked: Vec<Vec<C64>> = Vec::with_capacity(k);
    for _ in 0..k {
        let pair = lowest_in_complement(op, &locked, cfg, &mut rng)?;
        locked.push(pair.vector.clone());
        pairs.push(pair);
    }
    pairs.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(pairs)
}

/// Settings for [`expm_krylov`].
#[derive(Clone, Debug)]
pub struct KrylovConfig {
    pub max_dim: usize,
    pub tol: f64,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        KrylovConfig { max_dim: 30, tol: 1e-12 }
    }
}

/// One Krylov step; returns the propagated vector and the a-posteriori error
/// estimate `|β_m [exp(-i dt T) e_1]_m|`.
fn krylov_once(op: &dyn LinearOperator, psi: &[C64], dt: f64, max_dim: usize) -> (Vec<C64>, f64) {
    let n = op.dim();
    let mut v0 = psi.to_vec();
    let psi_norm = linalg::normalize(&mut v0);
    if psi_norm == 0.0 {
        return (v0, 0.0);
    }
    let m_max = max_dim.min(n);
    let mut basis = vec![v0];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut w = vec![ZERO; n];
    let mut tail = 0.0;
    for j in 0..m_max {
        op.apply_into(&basis[j], &mut w);
        alpha.push(linalg::inner(&basis[j], &w).re);
        for _ in 0..2 {
            for q in &basis {
                let c = linalg::inner(q, &w);
                linalg::axpy(-c, q, &mut w);
            }
        }
        let b = linalg::norm(&w);
        if b < 1e-14 || j + 1 == m_max {
            tail = if b < 1e-14 { 0.0 } else { b };
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|z| z / b).collect());
    }
    let eig = tridiagonal(&alpha, &beta);
    let m = alpha.len();
    // c = S exp(-i dt Θ) S^T e_1
    let coeffs: Vec<C64> = (0..m)
        .map(|r| {
            (0..m)
                .map(|k| {
                    let s = eig.eigenvectors[(r, k)] * eig.eigenvectors[(0, k)];
                    C64::new(0.0, -eig.eigenvalues[k] * dt).exp() * s
                })
                .sum()
        })
        .collect();
    let mut out = vec![ZERO; n];
    for (c, q) in coeffs.iter().zip(&basis) {
        linalg::axpy(c * psi_norm, q, &mut out);
    }
    let err = tail * coeffs[m - 1].norm() * psi_norm;
    (out, err)
}

/// `exp(-i dt H) psi` by Lanczos projection, splitting `dt` when the error
/// estimate exceeds `cfg.tol`.
pub fn expm_krylov(op: &dyn LinearOperator, psi: &[C64], dt: f64, cfg: &KrylovConfig) -> Result<Vec<C64>> {
    if dt == 0.0 {
        return Ok(psi.to_vec());
    }
    let mut substeps = 1usize;
    loop {
        let h = dt / substeps as f64;
        let mut state = psi.to_vec();
        let mut worst: f64 = 0.0;
        for _ in 0..substeps {
            let (next, err) = krylov_once(op, &state, h, cfg.max_dim);
            worst = worst.max(err);
            if err > cfg.tol {
                break;
            }
            state = next;
        }
        if worst <= cfg.tol {
            return Ok(state);
        }
        if substeps >= 1 << 16 {
            return Err(Error::NoConvergence {
                what: "Krylov propagation",
                iterations: substeps,
                residual: worst,
            });
        }
        log::warn!(
            "Krylov error estimate {worst:.2e} above {:.1e} at dt = {h}; halving the step",
            cfg.tol
        );
        substeps *= 2;
    }
}
