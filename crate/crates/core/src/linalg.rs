//! Dense complex linear algebra: `nalgebra` storage, LAPACK Hermitian
//! eigensolver, and a few vector helpers shared by the propagators and
//! eigensolvers.

use nalgebra::DMatrix;

use crate::C64;

// links the system OpenBLAS that provides LAPACK
extern crate openblas_src;

pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Eigendecomposition of a Hermitian matrix with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(h: &CMatrix) -> Self {
        let n = h.nrows();
        // symmetrize against round-off before handing to the solver
        let mut vectors = (h + h.adjoint()) * C64::new(0.5, 0.0);
        let mut values = vec![0.0; n];
        if n > 0 {
            zheevd(&mut vectors, &mut values);
        }
        HermitianEigen { values, vectors }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `f(H)` for a scalar function of the eigenvalues.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for c in 0..n {
            let fc = f(self.values[c]);
            for r in 0..n {
                scaled[(r, c)] *= fc;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// `exp(-i t H)`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        self.map(|e| C64::new(0.0, -e * t).exp())
    }

    /// `exp(-i t H) psi` without forming the matrix.
    pub fn evolve(&self, t: f64, psi: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut coeffs = vec![ZERO; n];
        for (c, coeff) in coeffs.iter_mut().enumerate() {
            let mut acc = ZERO;
            for r in 0..n {
                acc += self.vectors[(r, c)].conj() * psi[r];
            }
            *coeff = acc * C64::new(0.0, -self.values[c] * t).exp();
        }
        (0..n)
            .map(|r| (0..n).map(|c| self.vectors[(r, c)] * coeffs[c]).sum())
            .collect()
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k).iter().copied().collect()
    }
}

/// LAPACK `zheevd`: eigenvalues ascending, `a` overwritten by eigenvectors.
fn zheevd(a: &mut CMatrix, w: &mut [f64]) {
    let n = a.nrows() as i32;
    let mut info = 0;
    let mut work = vec![ZERO; 1];
    let mut rwork = vec![0.0; 1];
    let mut iwork = vec![0; 1];
    unsafe {
        lapack::zheevd(b'V', b'U', n, a.as_mut_slice(), n, w, &mut work, -1, &mut rwork, -1, &mut iwork, -1, &mut info);
    }
    let lwork = work[0].re as usize;
    let lrwork = rwork[0] as usize;
    let liwork = iwork[0] as usize;
    work.resize(lwork.max(1), ZERO);
    rwork.resize(lrwork.max(1), 0.0);
    iwork.resize(liwork.max(1), 0);
    unsafe {
        lapack::zheevd(
            b'V',
            b'U',
            n,
            a.as_mut_slice(),
            n,
            w,
            &mut work,
            lwork as i32,
            &mut rwork,
            lrwork as i32,
            &mut iwork,
            liwork as i32,
            &mut info,
        );
    }
    assert!(info == 0, "zheevd failed with info = {info}");
}

/// `exp(-i t H)` for Hermitian `H`.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    HermitianEigen::new(h).propagator(t)
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn eigvalsh(h: &CMatrix) -> Vec<f64> {
    HermitianEigen::new(h).values
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    eigvalsh(&(m.adjoint() * m)).last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖U†U − I‖` in operator norm.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    op_norm(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

/// `max |A - A†|`.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    max_abs(&(a - a.adjoint()))
}

/// Sorted-multiset distance between two spectra.
pub fn spectrum_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn matvec(m: &CMatrix, x: &[C64]) -> Vec<C64> {
    let n = m.nrows();
    (0..n)
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)] * x[c]).sum())
        .collect()
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(a: &mut [C64]) -> f64 {
    let n = norm(a);
    if n > 0.0 {
        for z in a.iter_mut() {
            *z /= n;
        }
    }
    n
}

/// `y += alpha x`.
pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}
