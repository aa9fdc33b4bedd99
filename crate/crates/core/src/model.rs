//! Microscopic problem data: the system spectrum, its coupling operators, and
//! the bath correlation functions together with their half-sided Fourier
//! transforms `Γ_αβ(ω, t) = ∫₀ᵗ dτ c_αβ(τ) e^{iωτ}`.
//!
//! Units are ħ = 1; energies and rates share one frequency unit.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, ZERO};

/// A point on the time axis, with the Markov limit `t → ∞` kept as its own
/// state rather than a large float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Time {
    Finite(f64),
    Infinite,
}

impl Time {
    pub fn is_infinite(self) -> bool {
        matches!(self, Time::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Time::Finite(t) => Some(t),
            Time::Infinite => None,
        }
    }

    fn validate(self) -> Result<()> {
        match self {
            Time::Finite(t) if !(t >= 0.0) || !t.is_finite() => {
                Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")))
            }
            _ => Ok(()),
        }
    }
}

impl From<f64> for Time {
    fn from(t: f64) -> Self {
        if t == f64::INFINITY {
            Time::Infinite
        } else {
            Time::Finite(t)
        }
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Time::Finite(t) => write!(f, "{t}"),
            Time::Infinite => f.write_str("inf"),
        }
    }
}

/// System Hamiltonian `H_S = Σ_k ω_k E_kk` (in its eigenbasis) and the
/// system-side coupling operators `A_α` of `H_I = Σ_α A_α ⊗ B_α`.
#[derive(Debug, Clone)]
pub struct SystemModel {
    energies: Vec<f64>,
    couplings: Vec<ComplexMatrix>,
}

impl SystemModel {
    pub fn new(energies: Vec<f64>, couplings: Vec<ComplexMatrix>) -> Result<Self> {
        let n = energies.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("system dimension must be >= 2, got {n}")));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite);
        }
        if couplings.is_empty() {
            return Err(Error::InvalidArgument("at least one coupling operator is required".into()));
        }
        for (alpha, a) in couplings.iter().enumerate() {
            if a.nrows() != n || a.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "coupling {alpha} is {}x{}, expected {n}x{n}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            linalg::ensure_finite(a)?;
        }
        Ok(Self { energies, couplings })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn channels(&self) -> usize {
        self.couplings.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn couplings(&self) -> &[ComplexMatrix] {
        &self.couplings
    }

    /// `ω_kq = ω_q − ω_k`.
    pub fn bohr_frequency(&self, k: usize, q: usize) -> f64 {
        self.energies[q] - self.energies[k]
    }

    /// Bohr frequency of collective index `i = (k, q)`.
    pub fn bohr_frequency_of(&self, i: usize) -> f64 {
        let n = self.dim();
        self.bohr_frequency(i / n, i % n)
    }

    /// `A_{α,kq} = ⟨k|A_α|q⟩`.
    pub fn coupling_element(&self, alpha: usize, k: usize, q: usize) -> Complex64 {
        self.couplings[alpha][(k, q)]
    }

    /// Diagonal system Hamiltonian as a matrix.
    pub fn hamiltonian(&self) -> ComplexMatrix {
        linalg::diag_real(&self.energies)
    }

    /// Largest |ω_i − ω_j| over pairs of Bohr frequencies.
    pub fn max_bohr_gap(&self) -> f64 {
        let lo = self.energies.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        2.0 * (hi - lo)
    }
}

/// Lorentzian bath: `c_αβ(τ) = (γ_αβ μ/2) e^{−μ|τ|} e^{−iω₀τ}`.
#[derive(Debug, Clone)]
pub struct LorentzianBath {
    pub gamma: DMatrix<f64>,
    pub mu: f64,
    pub omega0: f64,
}

/// Correlation function sampled on a grid `0 = τ_0 < τ_1 < …`, one M×M
/// matrix per sample, linearly interpolated in between.
#[derive(Debug, Clone)]
pub struct TabulatedBath {
    pub tau: Vec<f64>,
    pub samples: Vec<ComplexMatrix>,
}

#[derive(Debug, Clone)]
pub enum BathSpec {
    Lorentzian(LorentzianBath),
    Tabulated(TabulatedBath),
}

/// Value of `Γ_αβ(ω, t) = J + iS`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaValue(pub Complex64);

impl GammaValue {
    pub fn value(self) -> Complex64 {
        self.0
    }

    /// Real part `J`.
    pub fn damping(self) -> f64 {
        self.0.re
    }

    /// Imaginary part `S`.
    pub fn shift(self) -> f64 {
        self.0.im
    }
}

impl From<GammaValue> for Complex64 {
    fn from(g: GammaValue) -> Self {
        g.0
    }
}

/// Relative tolerance of the adaptive quadrature used for tabulated baths.
pub const QUADRATURE_RTOL: f64 = 1e-9;
const QUADRATURE_MAX_DEPTH: u32 = 40;
/// A tabulated correlation counts as decayed if its last sample is this small
/// relative to its peak.
const DECAY_THRESHOLD: f64 = 1e-8;

impl BathSpec {
    pub fn lorentzian(gamma: DMatrix<f64>, mu: f64, omega0: f64) -> Result<Self> {
        if gamma.nrows() != gamma.ncols() || gamma.nrows() == 0 {
            return Err(Error::NotSquare { rows: gamma.nrows(), cols: gamma.ncols() });
        }
        if !(mu > 0.0) || !mu.is_finite() || !omega0.is_finite() {
            return Err(Error::InvalidArgument(format!("need mu > 0 and finite omega0, got mu={mu}, omega0={omega0}")));
        }
        if gamma.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite);
        }
        let asym = (&gamma - gamma.transpose()).norm();
        if asym > 1e-12 * gamma.norm().max(1.0) {
            return Err(Error::InvalidArgument("gamma must be symmetric".into()));
        }
        let gc = gamma.map(|g| Complex64::new(g, 0.0));
        let lmin = linalg::min_eigenvalue(&gc)?;
        if lmin < -1e-12 * gamma.norm().max(1.0) {
            return Err(Error::NotPsd { eigenvalue: lmin });
        }
        Ok(BathSpec::Lorentzian(LorentzianBath { gamma, mu, omega0 }))
    }

    /// Two-channel Lorentzian bath with the rank-one coupling matrix
    /// `γ = [[γ₁, √(γ₁γ₂)], [√(γ₁γ₂), γ₂]]`.
    pub fn lorentzian_rank_one(gamma1: f64, gamma2: f64, mu: f64, omega0: f64) -> Result<Self> {
        if gamma1 < 0.0 || gamma2 < 0.0 {
            return Err(Error::InvalidArgument("rates must be non-negative".into()));
        }
        let off = (gamma1 * gamma2).sqrt();
        Self::lorentzian(DMatrix::from_row_slice(2, 2, &[gamma1, off, off, gamma2]), mu, omega0)
    }

    pub fn tabulated(tau: Vec<f64>, samples: Vec<ComplexMatrix>) -> Result<Self> {
        if tau.len() < 2 || tau.len() != samples.len() {
            return Err(Error::InvalidArgument("tabulated bath needs >= 2 samples, one per grid point".into()));
        }
        if tau[0] != 0.0 {
            return Err(Error::InvalidArgument("tabulated grid must start at tau = 0".into()));
        }
        if tau.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("tabulated grid must be strictly increasing".into()));
        }
        let m = samples[0].nrows();
        for s in &samples {
            if s.nrows() != m || s.ncols() != m {
                return Err(Error::DimensionMismatch("all samples must share one M×M shape".into()));
            }
            linalg::ensure_finite(s)?;
        }
        Ok(BathSpec::Tabulated(TabulatedBath { tau, samples }))
    }

    pub fn channels(&self) -> usize {
        match self {
            BathSpec::Lorentzian(b) => b.gamma.nrows(),
            BathSpec::Tabulated(b) => b.samples[0].nrows(),
        }
    }

    fn check_indices(&self, alpha: usize, beta: usize) -> Result<()> {
        let m = self.channels();
        if alpha >= m || beta >= m {
            return Err(Error::IndexOutOfRange(format!("channel ({alpha}, {beta}) with M = {m}")));
        }
        Ok(())
    }

    /// `c_αβ(τ)` for `τ ≥ 0`.
    pub fn correlation(&self, alpha: usize, beta: usize, tau: f64) -> Result<Complex64> {
        self.check_indices(alpha, beta)?;
        if !(tau >= 0.0) {
            return Err(Error::InvalidArgument(format!("tau must be >= 0, got {tau}")));
        }
        match self {
            BathSpec::Lorentzian(b) => {
                let amp = b.gamma[(alpha, beta)] * b.mu / 2.0;
                Ok(Complex64::from_polar(amp * (-b.mu * tau).exp(), -b.omega0 * tau))
            }
            BathSpec::Tabulated(b) => b.interpolate(alpha, beta, tau),
        }
    }

    /// `Γ_αβ(ω, t)`; `t = ∞` is the second-Markov value.
    pub fn gamma_half_fourier(&self, alpha: usize, beta: usize, omega: f64, t: Time) -> Result<GammaValue> {
        self.check_indices(alpha, beta)?;
        t.validate()?;
        match self {
            BathSpec::Lorentzian(b) => Ok(GammaValue(b.gamma_entry(alpha, beta, omega, t))),
            BathSpec::Tabulated(b) => b.half_fourier(alpha, beta, omega, t).map(GammaValue),
        }
    }

    /// All M×M values `Γ_αβ(ω, t)` at once.
    pub fn gamma_matrix(&self, omega: f64, t: Time) -> Result<ComplexMatrix> {
        t.validate()?;
        let m = self.channels();
        match self {
            BathSpec::Lorentzian(b) => {
                let f = b.profile(omega, t);
                Ok(ComplexMatrix::from_fn(m, m, |a, c| f * (b.gamma[(a, c)] * b.mu / 2.0)))
            }
            BathSpec::Tabulated(b) => {
                let mut out = ComplexMatrix::zeros(m, m);
                for a in 0..m {
                    for c in 0..m {
                        out[(a, c)] = b.half_fourier(a, c, omega, t)?;
                    }
                }
                Ok(out)
            }
        }
    }

    /// Spectral density matrix `J(ω)` (real part of the Markov-limit Γ).
    pub fn spectral_density(&self, omega: f64) -> Result<DMatrix<f64>> {
        match self {
            BathSpec::Lorentzian(b) => {
                let d = omega - b.omega0;
                let shape = b.mu / (d * d + b.mu * b.mu);
                Ok(b.gamma.map(|g| g * b.mu / 2.0 * shape))
            }
            BathSpec::Tabulated(_) => Ok(self.spectral_density_matrix(omega)?.map(|z| z.re)),
        }
    }

    /// Hermitian spectral density `J_αβ(ω) = [Γ_αβ(ω) + Γ*_βα(ω)] / 2`.
    ///
    /// For the Lorentzian bath (real symmetric γ) this coincides with
    /// [`Self::spectral_density`].
    pub fn spectral_density_matrix(&self, omega: f64) -> Result<ComplexMatrix> {
        match self {
            BathSpec::Lorentzian(_) => Ok(self.spectral_density(omega)?.map(|x| Complex64::new(x, 0.0))),
            BathSpec::Tabulated(_) => {
                let g = self.gamma_matrix(omega, Time::Infinite)?;
                Ok(linalg::hermitian_part(&g))
            }
        }
    }
}

impl LorentzianBath {
    /// `(1 − e^{(iΔ−μ)t}) / (μ − iΔ)` with `Δ = ω − ω₀`, i.e. Γ per unit `γμ/2`.
    fn profile(&self, omega: f64, t: Time) -> Complex64 {
        let z = Complex64::new(-self.mu, omega - self.omega0);
        let denom = -z;
        match t {
            Time::Infinite => 1.0 / denom,
            Time::Finite(t) => -expm1(z * t) / denom,
        }
    }

    fn gamma_entry(&self, alpha: usize, beta: usize, omega: f64, t: Time) -> Complex64 {
        let g = self.gamma[(alpha, beta)] * self.mu / 2.0;
        if g == 0.0 {
            return ZERO;
        }
        self.profile(omega, t) * g
    }
}

/// `e^z − 1` without cancellation for small `|z|`.
fn expm1(z: Complex64) -> Complex64 {
    let (s, c) = z.im.sin_cos();
    let half = (z.im / 2.0).sin();
    let ea = z.re.exp();
    Complex64::new(z.re.exp_m1() * c - 2.0 * half * half, ea * s)
}

impl TabulatedBath {
    fn interpolate(&self, alpha: usize, beta: usize, tau: f64) -> Result<Complex64> {
        let last = *self.tau.last().unwrap();
        if tau > last {
            return Err(Error::OutsideGrid(tau));
        }
        let idx = match self.tau.partition_point(|&x| x <= tau) {
            0 => 0,
            p => (p - 1).min(self.tau.len() - 2),
        };
        let (t0, t1) = (self.tau[idx], self.tau[idx + 1]);
        let w = (tau - t0) / (t1 - t0);
        let c0 = self.samples[idx][(alpha, beta)];
        let c1 = self.samples[idx + 1][(alpha, beta)];
        Ok(c0 * (1.0 - w) + c1 * w)
    }

    fn decayed(&self) -> bool {
        let peak = self.samples.iter().map(|s| s.iter().map(|z| z.norm()).fold(0.0, f64::max)).fold(0.0, f64::max);
        let tail = self.samples.last().unwrap().iter().map(|z| z.norm()).fold(0.0, f64::max);
        tail <= DECAY_THRESHOLD * peak
    }

    fn half_fourier(&self, alpha: usize, beta: usize, omega: f64, t: Time) -> Result<Complex64> {
        let last = *self.tau.last().unwrap();
        let upper = match t {
            Time::Finite(t) if t > last => return Err(Error::OutsideGrid(t)),
            Time::Finite(t) => t,
            Time::Infinite if self.decayed() => last,
            Time::Infinite => return Err(Error::OutsideGrid(f64::INFINITY)),
        };
        if upper == 0.0 {
            return Ok(ZERO);
        }
        let f = |tau: f64| -> Complex64 {
            let c = self.interpolate(alpha, beta, tau).expect("tau inside grid");
            c * Complex64::from_polar(1.0, omega * tau)
        };
        let mut total = ZERO;
        for w in self.tau.windows(2) {
            let (a, b) = (w[0], w[1].min(upper));
            if a >= upper {
                break;
            }
            let scale = 0.5 * (b - a) * (f(a).norm() + f(b).norm());
            let eps = QUADRATURE_RTOL * scale.max(f64::MIN_POSITIVE);
            total += adaptive_simpson(&f, a, b, eps);
        }
        Ok(total)
    }
}

/// Adaptive Simpson quadrature of a complex integrand on `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, eps: f64) -> Complex64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (fa + fm * 4.0 + fb) * ((b - a) / 6.0);
    simpson_step(f, a, b, fa, fm, fb, whole, eps, QUADRATURE_MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    eps: f64,
    depth: u32,
) -> Complex64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (fa + flm * 4.0 + fm) * ((m - a) / 6.0);
    let right = (fm + frm * 4.0 + fb) * ((b - m) / 6.0);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
}
