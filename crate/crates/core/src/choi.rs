//! Choi operators `J(Φ) = Σ_nm Φ(E_nm) ⊗ E_nm` and the pointwise distance
//! between two dynamical maps.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{self, frobenius_norm, ComplexMatrix};
use crate::propagation::PropagatorMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiOperator {
    pub time: f64,
    /// N²×N², row index `a·N + n` for output index `a` and input index `n`.
    pub matrix: ComplexMatrix,
}

impl ChoiOperator {
    pub fn dim(&self) -> usize {
        (self.matrix.nrows() as f64).sqrt().round() as usize
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    /// `Tr₁ J = Σ_a J[(a,n),(a,m)] = Tr Φ(E_nm)`, the identity for
    /// trace-preserving maps.
    pub fn partial_trace_output(&self) -> ComplexMatrix {
        let n = self.dim();
        ComplexMatrix::from_fn(n, n, |r, c| (0..n).map(|a| self.matrix[(a * n + r, a * n + c)]).sum())
    }

    /// `‖Tr₁ J − 1‖_F`.
    pub fn trace_preservation_defect(&self) -> f64 {
        frobenius_norm(&(self.partial_trace_output() - linalg::identity(self.dim())))
    }
}

fn perfect_square_root(d: usize) -> Result<usize> {
    let n = (d as f64).sqrt().round() as usize;
    if n * n != d || n == 0 {
        return Err(Error::DimensionMismatch(format!("map dimension {d} is not a perfect square")));
    }
    Ok(n)
}

/// Choi operator of a map given as an N²×N² matrix on row-major `vec`.
pub fn choi_of_matrix(phi: &ComplexMatrix, time: f64) -> Result<ChoiOperator> {
    linalg::ensure_square(phi)?;
    let n = perfect_square_root(phi.nrows())?;
    // Φ(E_nm)[a,b] = Φ[(a,b),(n,m)] lands at J[(a,n),(b,m)]
    let matrix = ComplexMatrix::from_fn(n * n, n * n, |r, c| {
        let (a, nn) = (r / n, r % n);
        let (b, m) = (c / n, c % n);
        phi[(a * n + b, nn * n + m)]
    });
    Ok(ChoiOperator { time, matrix })
}

pub fn choi(phi: &PropagatorMatrix) -> Result<ChoiOperator> {
    choi_of_matrix(&phi.matrix, phi.time)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpCheck {
    pub is_cp: bool,
    pub min_eigenvalue: f64,
}

/// Completely positive iff `min eig J ≥ −tol·‖J‖_F`.
pub fn cp_check(j: &ChoiOperator, tol: f64) -> Result<CpCheck> {
    let min_eigenvalue = linalg::min_eigenvalue(&j.matrix)?;
    Ok(CpCheck { is_cp: min_eigenvalue >= -tol * frobenius_norm(&j.matrix), min_eigenvalue })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Norm {
    Frobenius,
    Trace,
}

impl Norm {
    pub const ALL: [Norm; 2] = [Norm::Frobenius, Norm::Trace];

    pub fn of(self, x: &ComplexMatrix) -> Result<f64> {
        match self {
            Norm::Frobenius => linalg::checked_frobenius_norm(x),
            Norm::Trace => linalg::trace_norm(x),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::Frobenius => "frobenius",
            Norm::Trace => "trace",
        })
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "frobenius" | "hilbert-schmidt" => Ok(Norm::Frobenius),
            "trace" => Ok(Norm::Trace),
            other => Err(Error::InvalidArgument(format!("unknown norm '{other}'"))),
        }
    }
}

const TIME_MATCH_RTOL: f64 = 1e-12;

/// `δ(t) = ‖J(Φ_t) − J(Φ^(e)_t)‖`.
pub fn delta(phi: &PropagatorMatrix, exact: &PropagatorMatrix, norm: Norm) -> Result<f64> {
    if (phi.time - exact.time).abs() > TIME_MATCH_RTOL * phi.time.abs().max(1.0) {
        return Err(Error::InvalidArgument(format!("maps at different times: {} and {}", phi.time, exact.time)));
    }
    if phi.matrix.shape() != exact.matrix.shape() {
        return Err(Error::DimensionMismatch(format!(
            "maps of shape {:?} and {:?}",
            phi.matrix.shape(),
            exact.matrix.shape()
        )));
    }
    let a = choi(phi)?;
    let b = choi(exact)?;
    norm.of(&(a.matrix - b.matrix))
}

/// `δ` on a shared grid.
pub fn delta_curve(maps: &[PropagatorMatrix], exact: &[PropagatorMatrix], norm: Norm) -> Result<Vec<f64>> {
    if maps.len() != exact.len() {
        return Err(Error::DimensionMismatch(format!("{} maps against {} exact maps", maps.len(), exact.len())));
    }
    maps.iter().zip(exact).map(|(p, e)| delta(p, e, norm)).collect()
}

/// Trapezoidal time average of `values` over `[times[0], t_end]`, using the
/// grid points up to `t_end`.
pub fn time_average(times: &[f64], values: &[f64], t_end: f64) -> Result<f64> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch("times and values differ in length".into()));
    }
    let k = times.iter().take_while(|&&t| t <= t_end * (1.0 + TIME_MATCH_RTOL)).count();
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least two grid points in [{}, {t_end}]",
            times.first().copied().unwrap_or(f64::NAN)
        )));
    }
    let mut integral = 0.0;
    for i in 1..k {
        integral += 0.5 * (values[i] + values[i - 1]) * (times[i] - times[i - 1]);
    }
    Ok(integral / (times[k - 1] - times[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eig, ONE};
    use crate::propagation::{unvectorize, vectorize};
    use num_complex::Complex64;

    fn map_from(n: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> ComplexMatrix {
        let d = n * n;
        let mut phi = ComplexMatrix::zeros(d, d);
        for j in 0..d {
            let mut e = ComplexMatrix::zeros(n, n);
            e[(j / n, j % n)] = ONE;
            phi.set_column(j, &vectorize(&f(&e)));
        }
        phi
    }

    #[test]
    fn identity_map() {
        for n in [2, 3] {
            let j = choi_of_matrix(&linalg::identity(n * n), 0.0).unwrap();
            let eig = hermitian_eig(&j.matrix).unwrap();
            assert!((eig.eigenvalues[n * n - 1] - n as f64).abs() < 1e-12);
            assert!(eig.eigenvalues.iter().take(n * n - 1).all(|l| l.abs() < 1e-12));
            assert!((j.trace() - n as f64).abs() < 1e-14);
            assert!(cp_check(&j, 1e-12).unwrap().is_cp);
            assert!(j.trace_preservation_defect() < 1e-15);
        }
    }

    #[test]
    fn transpose_map_is_not_cp() {
        let phi = map_from(2, |x| x.transpose());
        let j = choi_of_matrix(&phi, 0.0).unwrap();
        let check = cp_check(&j, 1e-12).unwrap();
        assert!(!check.is_cp);
        assert!((check.min_eigenvalue + 1.0).abs() < 1e-12);
    }

    #[test]
    fn depolarizing_map() {
        let n = 3;
        let phi = map_from(n, |x| linalg::identity(n) * (linalg::trace(x) / n as f64));
        let j = choi_of_matrix(&phi, 0.0).unwrap();
        let expected = linalg::identity(n * n) / Complex64::new(n as f64, 0.0);
        assert!(frobenius_norm(&(&j.matrix - expected)) < 1e-15);
        assert!((j.trace() - n as f64).abs() < 1e-14);
        assert!(j.trace_preservation_defect() < 1e-15);
    }

    #[test]
    fn block_layout_follows_kronecker_product() {
        // J = Σ Φ(E_nm) ⊗ E_nm, built literally
        let n = 2;
        let phi = map_from(n, |x| {
            let mut y = x.clone();
            y[(0, 1)] *= Complex64::new(0.3, 0.4);
            y[(1, 0)] *= Complex64::new(0.3, -0.4);
            y
        });
        let mut literal = ComplexMatrix::zeros(4, 4);
        for nn in 0..n {
            for m in 0..n {
                let mut e = ComplexMatrix::zeros(n, n);
                e[(nn, m)] = ONE;
                let out = unvectorize(phi.column(nn * n + m).as_slice(), n).unwrap();
                literal += linalg::kron(&out, &e);
            }
        }
        assert_eq!(choi_of_matrix(&phi, 0.0).unwrap().matrix, literal);
    }

    #[test]
    fn choi_is_linear() {
        let a = map_from(2, |x| x.transpose());
        let b = map_from(2, |x| x * Complex64::new(0.0, 2.0));
        let (s, t) = (Complex64::new(0.5, -1.0), Complex64::new(2.0, 0.25));
        let lhs = choi_of_matrix(&(&a * s + &b * t), 0.0).unwrap().matrix;
        let rhs = choi_of_matrix(&a, 0.0).unwrap().matrix * s + choi_of_matrix(&b, 0.0).unwrap().matrix * t;
        assert!(frobenius_norm(&(lhs - rhs)) < 1e-14);
    }

    #[test]
    fn delta_basics() {
        let id = PropagatorMatrix::identity(3, 0.0);
        for norm in Norm::ALL {
            assert_eq!(delta(&id, &id, norm).unwrap(), 0.0);
        }
        let other = PropagatorMatrix { matrix: map_from(3, |x| x.transpose()), ..id.clone() };
        let f = delta(&id, &other, Norm::Frobenius).unwrap();
        let tr = delta(&id, &other, Norm::Trace).unwrap();
        assert!(f > 0.0 && tr >= f);
        let later = PropagatorMatrix { time: 1.0, ..id.clone() };
        assert!(delta(&id, &later, Norm::Frobenius).is_err());
        let small = PropagatorMatrix::identity(2, 0.0);
        assert!(delta(&id, &small, Norm::Frobenius).is_err());
        assert!(choi_of_matrix(&ComplexMatrix::zeros(5, 5), 0.0).is_err());
    }

    #[test]
    fn norm_names() {
        for n in Norm::ALL {
            assert_eq!(n.to_string().parse::<Norm>().unwrap(), n);
        }
        assert!("spectral".parse::<Norm>().is_err());
    }

    #[test]
    fn time_average_trapezoid() {
        let t = [0.0, 0.5, 1.0, 1.5];
        let v = [0.0, 1.0, 2.0, 100.0];
        assert!((time_average(&t, &v, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(time_average(&t, &v, 0.2).is_err());
    }
}
