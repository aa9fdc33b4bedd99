//! Kossakowski-matrix regularization schemes.
//!
//! Every scheme maps the Redfield `χ` to a positive semidefinite matrix
//! (except [`Scheme::RedfieldRaw`], the unregularized baseline):
//!
//! - nearest-PSD: Frobenius projection onto the PSD cone, at any `t`;
//! - partial secular: entrywise `sinc((ω_j − ω_i)Δt/2)` damping of `χ` and of
//!   the Lamb-shift coefficients, with `Δt` given or searched automatically;
//! - secular: keep only entries with equal Bohr frequencies (`t = ∞` only);
//! - ULE: arithmetic mean of Γ values replaced by `2√J(ω_j)√J(ω_i)` (`t = ∞` only).

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, frobenius_norm, ComplexMatrix, ComplexVector, ZERO};
use crate::model::{BathSpec, SystemModel, Time};
use crate::redfield::{coupling_vectors, kossakowski, lamb_shift_from_coefficients, KossakowskiData};

/// Relative Bohr-frequency tolerance below which two frequencies count as equal.
pub const DEGENERACY_RTOL: f64 = 1e-9;
/// PSD tolerance used when the coarse-graining time is searched automatically.
pub const AUTO_PSD_TOL: f64 = 0.0;
const MAX_DOUBLINGS: usize = 200;
const MAX_BISECTIONS: usize = 60;
const BISECTION_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoarseGraining {
    Fixed(f64),
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    RedfieldRaw,
    NearestPsd,
    PartialSecular(CoarseGraining),
    Secular,
    Ule,
}

impl Scheme {
    /// The five generators compared in the V-system study, in plotting order.
    pub const STUDY: [Scheme; 5] = [
        Scheme::RedfieldRaw,
        Scheme::NearestPsd,
        Scheme::PartialSecular(CoarseGraining::Auto),
        Scheme::Secular,
        Scheme::Ule,
    ];

    /// The four regularized schemes.
    pub const REGULARIZED: [Scheme; 4] =
        [Scheme::NearestPsd, Scheme::PartialSecular(CoarseGraining::Auto), Scheme::Secular, Scheme::Ule];

    /// Whether the scheme follows `χ(t)` in time. The others are built from the
    /// Markov-limit `Γ(ω)` and yield time-independent generators.
    pub fn is_time_dependent(self) -> bool {
        matches!(self, Scheme::RedfieldRaw | Scheme::NearestPsd)
    }

    /// Whether the scheme guarantees a PSD Kossakowski matrix.
    pub fn is_psd(self) -> bool {
        !matches!(self, Scheme::RedfieldRaw)
    }

    /// Time at which a generator of this scheme is evaluated when the
    /// dynamics reaches `t`.
    pub fn generator_time(self, t: f64) -> Time {
        if self.is_time_dependent() {
            Time::Finite(t)
        } else {
            Time::Infinite
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::RedfieldRaw => f.write_str("redfield-raw"),
            Scheme::NearestPsd => f.write_str("nearest-psd"),
            Scheme::PartialSecular(CoarseGraining::Auto) => f.write_str("partial-secular:auto"),
            Scheme::PartialSecular(CoarseGraining::Fixed(dt)) => write!(f, "partial-secular:dt={dt}"),
            Scheme::Secular => f.write_str("secular"),
            Scheme::Ule => f.write_str("ule"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(format!("unknown scheme '{s}'"));
        match s {
            "redfield-raw" => return Ok(Scheme::RedfieldRaw),
            "nearest-psd" => return Ok(Scheme::NearestPsd),
            "secular" => return Ok(Scheme::Secular),
            "ule" => return Ok(Scheme::Ule),
            "partial-secular" => return Ok(Scheme::PartialSecular(CoarseGraining::Auto)),
            _ => {}
        }
        let arg = s.strip_prefix("partial-secular:").ok_or_else(bad)?;
        let value = arg.strip_prefix("dt=").unwrap_or(arg);
        if value == "auto" {
            return Ok(Scheme::PartialSecular(CoarseGraining::Auto));
        }
        let dt: f64 = value.parse().map_err(|_| bad())?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("coarse-graining time must be > 0, got {dt}")));
        }
        Ok(Scheme::PartialSecular(CoarseGraining::Fixed(dt)))
    }
}

/// Regularized Kossakowski data of `scheme` at time `t`.
pub fn apply(scheme: Scheme, model: &SystemModel, bath: &BathSpec, t: Time) -> Result<KossakowskiData> {
    match scheme {
        Scheme::RedfieldRaw => kossakowski(model, bath, t),
        Scheme::NearestPsd => {
            let mut data = kossakowski(model, bath, t)?;
            data.chi = linalg::nearest_psd(&data.chi)?;
            Ok(data)
        }
        Scheme::PartialSecular(cg) => {
            let data = kossakowski(model, bath, t)?;
            let dt = match cg {
                CoarseGraining::Fixed(dt) => dt,
                CoarseGraining::Auto => coarse_graining_time_for(&data, model, AUTO_PSD_TOL)?,
            };
            partial_secular(&data, dt, model)
        }
        Scheme::Secular => {
            require_markov(scheme, t)?;
            Ok(secular(&kossakowski(model, bath, t)?, model))
        }
        Scheme::Ule => {
            require_markov(scheme, t)?;
            ule(model, bath)
        }
    }
}

fn require_markov(scheme: Scheme, t: Time) -> Result<()> {
    if t.is_infinite() {
        Ok(())
    } else {
        Err(Error::TimeIndependentOnly { scheme: scheme.to_string() })
    }
}

pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

fn bohr_table(model: &SystemModel) -> Vec<f64> {
    (0..model.dim() * model.dim()).map(|i| model.bohr_frequency_of(i)).collect()
}

/// Coarse-grained (partial secular) generator:
/// `χ_ij → χ_ij sinc((ω_j − ω_i)Δt/2)`, and the same for the Lamb shift.
pub fn partial_secular(data: &KossakowskiData, dt: f64, model: &SystemModel) -> Result<KossakowskiData> {
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("coarse-graining time must be finite and >= 0, got {dt}")));
    }
    let w = bohr_table(model);
    let damp = |m: &ComplexMatrix| {
        ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
            let z = m[(i, j)];
            if z == ZERO {
                z
            } else {
                z * sinc((w[j] - w[i]) * dt / 2.0)
            }
        })
    };
    let chi = damp(&data.chi);
    let lamb = damp(&data.lamb_coefficients);
    let lamb_shift = lamb_shift_from_coefficients(&lamb, model.dim());
    Ok(KossakowskiData { time: data.time, chi, lamb_coefficients: lamb, lamb_shift })
}

fn degeneracy_tol(w: &[f64]) -> f64 {
    DEGENERACY_RTOL * w.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Secular generator `χ_ij δ(ω_i, ω_j)`. The Lamb shift is left as is.
pub fn secular(data: &KossakowskiData, model: &SystemModel) -> KossakowskiData {
    let w = bohr_table(model);
    let tol = degeneracy_tol(&w);
    let chi = ComplexMatrix::from_fn(data.chi.nrows(), data.chi.ncols(), |i, j| {
        if (w[i] - w[j]).abs() <= tol {
            data.chi[(i, j)]
        } else {
            ZERO
        }
    });
    KossakowskiData { chi, ..data.clone() }
}

fn is_psd(chi: &ComplexMatrix, psd_tol: f64) -> Result<(bool, f64)> {
    let lmin = linalg::min_eigenvalue(chi)?;
    Ok((lmin >= -psd_tol * frobenius_norm(chi), lmin))
}

/// Smallest coarse-graining time making `χ^(Δt)(t)` positive semidefinite.
pub fn auto_coarse_graining_time(model: &SystemModel, bath: &BathSpec, t: Time, psd_tol: f64) -> Result<f64> {
    let data = kossakowski(model, bath, t)?;
    coarse_graining_time_for(&data, model, psd_tol)
}

/// [`auto_coarse_graining_time`] on an already assembled generator.
///
/// Returns 0 when `χ` is PSD as is. Otherwise brackets by doubling from
/// `0.1 / max|ω_j − ω_i|` and bisects; the result is PSD and half of it is not
/// (provided the non-PSD set is an interval starting at 0).
pub fn coarse_graining_time_for(data: &KossakowskiData, model: &SystemModel, psd_tol: f64) -> Result<f64> {
    if !(psd_tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("psd tolerance must be >= 0, got {psd_tol}")));
    }
    if is_psd(&data.chi, psd_tol)?.0 {
        return Ok(0.0);
    }
    let (sec_ok, sec_min) = is_psd(&secular(data, model).chi, psd_tol)?;
    if !sec_ok {
        return Err(Error::SecularNotPsd { min_eigenvalue: sec_min });
    }

    let w = bohr_table(model);
    let tol = degeneracy_tol(&w);
    let mut max_gap = 0.0f64;
    for i in 0..data.chi.nrows() {
        for j in 0..data.chi.ncols() {
            let gap = (w[j] - w[i]).abs();
            if data.chi[(i, j)] != ZERO && gap > tol {
                max_gap = max_gap.max(gap);
            }
        }
    }
    if max_gap == 0.0 {
        return Err(Error::CoarseGraining("no off-resonant entries to suppress".into()));
    }

    let check = |dt: f64| -> Result<bool> { Ok(is_psd(&partial_secular(data, dt, model)?.chi, psd_tol)?.0) };
    let mut lo = 0.0;
    let mut hi = 0.1 / max_gap;
    let mut doublings = 0;
    while !check(hi)? {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::CoarseGraining("no PSD coarse-graining time found while bracketing".into()));
        }
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= BISECTION_RTOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if check(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Universal-Lindblad-equation generator at `t = ∞`:
/// `χ_ij = Σ_αβ 2[√J(ω_j)√J(ω_i)]_αβ A_{β,i} A*_{α,j}`, with the Redfield
/// Lamb shift `H_LS(∞)`.
pub fn ule(model: &SystemModel, bath: &BathSpec) -> Result<KossakowskiData> {
    let base = kossakowski(model, bath, Time::Infinite)?;
    let n = model.dim();
    let m = model.channels();
    let a = coupling_vectors(model);
    let active: Vec<usize> = (0..n * n).filter(|&i| (0..m).any(|alpha| a[(alpha, i)] != ZERO)).collect();

    // u_i = √J(ω_i) a_i, so that χ_ij = 2 u_j† u_i
    let mut cache: Vec<(f64, ComplexMatrix)> = Vec::new();
    let mut u = vec![ComplexVector::zeros(m); n * n];
    for &i in &active {
        let w = model.bohr_frequency_of(i);
        let root = match cache.iter().find(|(cw, _)| *cw == w) {
            Some((_, r)) => r.clone(),
            None => {
                let r = linalg::psd_sqrt(&bath.spectral_density_matrix(w)?)?;
                cache.push((w, r.clone()));
                r
            }
        };
        u[i] = root * a.column(i);
    }
    let dim = n * n;
    let mut chi = ComplexMatrix::zeros(dim, dim);
    for (pi, &i) in active.iter().enumerate() {
        for &j in &active[pi..] {
            let v = u[j].dotc(&u[i]) * 2.0;
            if i == j {
                chi[(i, i)] = Complex64::new(v.re, 0.0);
            } else {
                chi[(i, j)] = v;
                chi[(j, i)] = v.conj();
            }
        }
    }
    Ok(KossakowskiData { chi, ..base })
}
