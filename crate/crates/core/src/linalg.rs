//! Dense complex linear algebra shared by the rest of the crate.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. The Hermitian eigensolver is
//! nalgebra's `SymmetricEigen`; everything built on top of it (positive part,
//! square root, norms) lives here.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative threshold below which a negative eigenvalue is treated as roundoff
/// by [`psd_sqrt`].
pub const PSD_CLAMP_TOL: f64 = 1e-10;

/// Spectral decomposition `H = U diag(λ) U†` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U f(Λ) U†`.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.dim();
        let u = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for k in 0..n {
            let w = f(self.eigenvalues[k]);
            if w == 0.0 {
                continue;
            }
            let col = u.column(k);
            for j in 0..n {
                let cj = col[j].conj() * w;
                for i in 0..n {
                    out[(i, j)] += col[i] * cj;
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_eigenvalues(|x| x)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }
}

pub fn ensure_square(x: &ComplexMatrix) -> Result<usize> {
    if x.nrows() != x.ncols() || x.nrows() == 0 {
        return Err(Error::NotSquare { rows: x.nrows(), cols: x.ncols() });
    }
    Ok(x.nrows())
}

pub fn ensure_finite(x: &ComplexMatrix) -> Result<()> {
    if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn dagger(x: &ComplexMatrix) -> ComplexMatrix {
    x.adjoint()
}

/// `(X + X†) / 2`.
pub fn hermitian_part(x: &ComplexMatrix) -> ComplexMatrix {
    (x + x.adjoint()).scale(0.5)
}

/// Frobenius norm of the anti-Hermitian part, `‖X − X†‖_F`.
pub fn hermiticity_defect(x: &ComplexMatrix) -> f64 {
    frobenius_norm(&(x - x.adjoint()))
}

pub fn frobenius_norm(x: &ComplexMatrix) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// [`frobenius_norm`] that rejects NaN/Inf entries instead of propagating them.
pub fn checked_frobenius_norm(x: &ComplexMatrix) -> Result<f64> {
    ensure_finite(x)?;
    Ok(frobenius_norm(x))
}

pub fn trace(x: &ComplexMatrix) -> Complex64 {
    x.diagonal().iter().sum()
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The input is symmetrized before decomposition. Eigenvalues come out in
/// ascending order and each eigenvector is rotated so that its first
/// component of non-negligible modulus is real and positive.
pub fn hermitian_eig(h: &ComplexMatrix) -> Result<HermitianEig> {
    let n = ensure_square(h)?;
    ensure_finite(h)?;
    let sym = hermitian_part(h);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0).ok_or(Error::NoConvergence)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut values = DVector::zeros(n);
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        let mut col = eig.eigenvectors.column(src).into_owned();
        let norm = col.norm();
        if norm > 0.0 {
            col.unscale_mut(norm);
        }
        if let Some(pivot) = col.iter().find(|z| z.norm() > 1e-12).copied() {
            let phase = pivot.conj() / pivot.norm();
            col *= phase;
        }
        vectors.set_column(dst, &col);
    }
    Ok(HermitianEig { eigenvalues: values, eigenvectors: vectors })
}

pub fn min_eigenvalue(h: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eig(h)?.min_eigenvalue())
}

/// Closest positive semidefinite matrix in Frobenius norm: `(X + √(X†X)) / 2`,
/// i.e. `X` with its negative eigenvalues set to zero.
pub fn nearest_psd(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(x)?;
    if eig.min_eigenvalue() >= 0.0 {
        return Ok(hermitian_part(x));
    }
    Ok(hermitian_part(&eig.map_eigenvalues(|l| l.max(0.0))))
}

/// Hermitian square root of a positive semidefinite matrix.
///
/// Eigenvalues down to `-1e-10·‖P‖_F` are clamped to zero; anything more
/// negative is reported as [`Error::NotPsd`].
pub fn psd_sqrt(p: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(p)?;
    let floor = -PSD_CLAMP_TOL * frobenius_norm(p);
    let lmin = eig.min_eigenvalue();
    if lmin < floor {
        return Err(Error::NotPsd { eigenvalue: lmin });
    }
    Ok(hermitian_part(&eig.map_eigenvalues(|l| l.max(0.0).sqrt())))
}

/// Sum of singular values.
pub fn trace_norm(x: &ComplexMatrix) -> Result<f64> {
    ensure_square(x)?;
    ensure_finite(x)?;
    let svd = x.clone().try_svd(false, false, f64::EPSILON, 0).ok_or(Error::NoConvergence)?;
    Ok(svd.singular_values.sum())
}

/// Trace norm of a Hermitian matrix, `Σ|λ|`. Better conditioned than going
/// through `X†X` when the input is known to be Hermitian.
pub fn hermitian_trace_norm(x: &ComplexMatrix) -> Result<f64> {
    let eig = hermitian_eig(x)?;
    Ok(eig.eigenvalues.iter().map(|l| l.abs()).sum())
}

/// Kronecker product `A ⊗ B` with row index `(a, b) ↦ a·rows(B) + b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Build a complex matrix from real entries.
pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)))
}

pub fn diag_real(values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    let mut m = ComplexMatrix::zeros(n, n);
    for (k, &v) in values.iter().enumerate() {
        m[(k, k)] = Complex64::new(v, 0.0);
    }
    m
}
