//! Time-dependent Redfield generator in the `E_kq = |k⟩⟨q|` operator basis.
//!
//! With collective indices `i = (k, q)`, `j = (n, m)` the dissipator is
//! `Σ_ij χ_ij (E_i ρ E_j† − ½{E_j†E_i, ρ})` where
//!
//! ```text
//! χ_ij(t) = Σ_αβ [Γ_αβ(ω_i, t) + Γ*_βα(ω_j, t)] A_{β,i} A*_{α,j}
//! η_ij(t) = Σ_αβ [Γ_αβ(ω_i, t) − Γ*_βα(ω_j, t)] A_{β,i} A*_{α,j}
//! ```
//!
//! The Lamb shift is `H_LS = Σ_ij (η_ij / 2i) E_j† E_i`. `η` itself is
//! anti-Hermitian; we store the Hermitian coefficient matrix `η / 2i` so that
//! sinc damping and other entrywise regularizations act on it directly.
//!
//! For a single noise channel `χ = |A⟩⟨G| + |G⟩⟨A|` with `G_i = Γ_i A_i` has
//! rank at most two; its spectrum and positive part have closed forms
//! (see [`single_channel_spectrum`] and [`single_channel_regularized`]).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector, I, ZERO};
use crate::model::{BathSpec, SystemModel, Time};

/// `(k, q) ↦ k·N + q`.
pub fn collective_index(k: usize, q: usize, n: usize) -> Result<usize> {
    if k >= n || q >= n {
        return Err(Error::IndexOutOfRange(format!("({k}, {q}) with N = {n}")));
    }
    Ok(k * n + q)
}

/// Inverse of [`collective_index`].
pub fn inverse_index(i: usize, n: usize) -> Result<(usize, usize)> {
    if n == 0 || i >= n * n {
        return Err(Error::IndexOutOfRange(format!("{i} with N = {n}")));
    }
    Ok((i / n, i % n))
}

/// Kossakowski matrix and Lamb shift at one time.
#[derive(Debug, Clone)]
pub struct KossakowskiData {
    pub time: Time,
    /// N²×N² Hermitian `χ`.
    pub chi: ComplexMatrix,
    /// N²×N² Hermitian `η / 2i`.
    pub lamb_coefficients: ComplexMatrix,
    /// N×N Hermitian `H_LS`.
    pub lamb_shift: ComplexMatrix,
}

impl KossakowskiData {
    pub fn dim(&self) -> usize {
        self.lamb_shift.nrows()
    }

    /// Zero generator of system dimension `n`.
    pub fn zero(n: usize, time: Time) -> Self {
        Self {
            time,
            chi: ComplexMatrix::zeros(n * n, n * n),
            lamb_coefficients: ComplexMatrix::zeros(n * n, n * n),
            lamb_shift: ComplexMatrix::zeros(n, n),
        }
    }

    /// Replace the Lamb-shift coefficients and rebuild `H_LS`.
    pub fn with_lamb_coefficients(mut self, coefficients: ComplexMatrix) -> Self {
        self.lamb_shift = lamb_shift_from_coefficients(&coefficients, self.dim());
        self.lamb_coefficients = coefficients;
        self
    }
}

/// `H_LS = Σ_ij L_ij E_j† E_i`; since `E_j†E_i = δ_nk |m⟩⟨q|`,
/// `H_LS[m, q] = Σ_k L[(k,q), (k,m)]`.
pub fn lamb_shift_from_coefficients(coefficients: &ComplexMatrix, n: usize) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(n, n);
    for m in 0..n {
        for q in 0..n {
            let mut acc = ZERO;
            for k in 0..n {
                acc += coefficients[(k * n + q, k * n + m)];
            }
            h[(m, q)] = acc;
        }
    }
    h
}

/// Coupling coefficients `A_{α,i}` as an M×N² matrix.
pub fn coupling_vectors(model: &SystemModel) -> ComplexMatrix {
    let n = model.dim();
    let m = model.channels();
    ComplexMatrix::from_fn(m, n * n, |alpha, i| model.couplings()[alpha][(i / n, i % n)])
}

/// Assemble `χ(t)` and `H_LS(t)` from the microscopic data.
pub fn kossakowski(model: &SystemModel, bath: &BathSpec, t: Time) -> Result<KossakowskiData> {
    if model.channels() != bath.channels() {
        return Err(Error::ChannelMismatch { system: model.channels(), bath: bath.channels() });
    }
    let n = model.dim();
    let m = model.channels();
    let a = coupling_vectors(model);
    let active: Vec<usize> = (0..n * n).filter(|&i| (0..m).any(|alpha| a[(alpha, i)] != ZERO)).collect();

    // G_{α,i} = Σ_β Γ_αβ(ω_i, t) A_{β,i}
    let mut g = ComplexMatrix::zeros(m, n * n);
    let mut cache: Vec<(f64, ComplexMatrix)> = Vec::new();
    for &i in &active {
        let w = model.bohr_frequency_of(i);
        let gamma = match cache.iter().find(|(cw, _)| *cw == w) {
            Some((_, gm)) => gm.clone(),
            None => {
                let gm = bath.gamma_matrix(w, t)?;
                cache.push((w, gm.clone()));
                gm
            }
        };
        for alpha in 0..m {
            let mut acc = ZERO;
            for beta in 0..m {
                acc += gamma[(alpha, beta)] * a[(beta, i)];
            }
            g[(alpha, i)] = acc;
        }
    }

    let dim = n * n;
    let mut chi = ComplexMatrix::zeros(dim, dim);
    let mut lamb = ComplexMatrix::zeros(dim, dim);
    for (pi, &i) in active.iter().enumerate() {
        for &j in &active[pi..] {
            let mut plus = ZERO;
            let mut minus = ZERO;
            for alpha in 0..m {
                let x = g[(alpha, i)] * a[(alpha, j)].conj();
                let y = a[(alpha, i)] * g[(alpha, j)].conj();
                plus += x + y;
                minus += x - y;
            }
            // η / 2i
            let l = minus / (I * 2.0);
            if i == j {
                chi[(i, i)] = Complex64::new(plus.re, 0.0);
                lamb[(i, i)] = Complex64::new(l.re, 0.0);
            } else {
                chi[(i, j)] = plus;
                chi[(j, i)] = plus.conj();
                lamb[(i, j)] = l;
                lamb[(j, i)] = l.conj();
            }
        }
    }
    let lamb_shift = lamb_shift_from_coefficients(&lamb, n);
    Ok(KossakowskiData { time: t, chi, lamb_coefficients: lamb, lamb_shift })
}

/// `⟨x⟩` and `Var(x)` under the distribution `|A_i|² / ‖A‖²`.
pub fn weighted_moments(x: &[f64], a: &[Complex64]) -> Result<(f64, f64)> {
    if x.len() != a.len() {
        return Err(Error::DimensionMismatch(format!("{} values for {} weights", x.len(), a.len())));
    }
    let total: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        return Err(Error::InvalidArgument("coupling vector is identically zero".into()));
    }
    let mean = x.iter().zip(a).map(|(x, z)| x * z.norm_sqr()).sum::<f64>() / total;
    let var = x.iter().zip(a).map(|(x, z)| (x - mean).powi(2) * z.norm_sqr()).sum::<f64>() / total;
    Ok((mean, var))
}

/// Spectrum of the single-channel Kossakowski matrix.
#[derive(Debug, Clone)]
pub struct SingleChannelSpectrum {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub eigvec_plus: ComplexVector,
    pub eigvec_minus: ComplexVector,
    /// `‖A‖²`
    pub norm_sq: f64,
    /// `⟨J⟩`
    pub mean_j: f64,
    pub var_j: f64,
    pub var_s: f64,
    /// `𝒱(Γ) = √(⟨J⟩² + Var J + Var S)`
    pub spread: f64,
}

impl SingleChannelSpectrum {
    /// `λ± = ‖A‖² (⟨J⟩ ± 𝒱(Γ))`.
    pub fn lambdas_from_moments(&self) -> (f64, f64) {
        (self.norm_sq * (self.mean_j + self.spread), self.norm_sq * (self.mean_j - self.spread))
    }
}

/// Nonzero eigenpairs of `|A⟩⟨G| + |G⟩⟨A|` for arbitrary vectors.
#[derive(Debug, Clone)]
pub struct DyadicSpectrum {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub eigvec_plus: ComplexVector,
    pub eigvec_minus: ComplexVector,
}

/// Below this `sin²` of the angle between `|A⟩` and `|G⟩` the two are treated
/// as parallel.
const PARALLEL_TOL: f64 = 1e-14;

fn fix_phase(mut v: ComplexVector) -> ComplexVector {
    let norm = v.norm();
    if norm > 0.0 {
        v.unscale_mut(norm);
    }
    if let Some(p) = v.iter().find(|z| z.norm() > 1e-12).copied() {
        v *= p.conj() / p.norm();
    }
    v
}

/// Unit vector orthogonal to `a` (Gram–Schmidt on the basis vector where `a`
/// is smallest).
fn orthogonal_to(a: &ComplexVector) -> ComplexVector {
    let k = (0..a.len()).min_by(|&x, &y| a[x].norm().total_cmp(&a[y].norm())).unwrap_or(0);
    let mut e = ComplexVector::zeros(a.len());
    e[k] = Complex64::new(1.0, 0.0);
    let na = a.norm_squared();
    if na > 0.0 {
        let proj = a.dotc(&e) / na;
        e -= a * proj;
    }
    fix_phase(e)
}

/// `λ± = Re⟨G|A⟩ ± √(‖G‖²‖A‖² − Im²⟨G|A⟩)` with eigenvectors
/// `(λ − ⟨G|A⟩)|G⟩ + ‖G‖²|A⟩`.
pub fn dyadic_spectrum(a: &ComplexVector, g: &ComplexVector) -> Result<DyadicSpectrum> {
    if a.len() != g.len() {
        return Err(Error::DimensionMismatch("|A> and |G> differ in length".into()));
    }
    let na = a.norm_squared();
    if na == 0.0 {
        return Err(Error::InvalidArgument("coupling vector is identically zero".into()));
    }
    let ng = g.norm_squared();
    let ga = g.dotc(a); // ⟨G|A⟩
    let disc = (ng * na - ga.im * ga.im).max(0.0);
    let root = disc.sqrt();
    let lambda_plus = ga.re + root;
    let lambda_minus = ga.re - root;

    let parallel = ng == 0.0 || (ng * na - ga.norm_sqr()) <= PARALLEL_TOL * ng * na;
    if parallel {
        // |G⟩ = Γ|A⟩: rank one with eigenvector |A⟩ and eigenvalue 2ReΓ‖A‖²
        let unit_a = fix_phase(a.clone());
        let other = orthogonal_to(a);
        let lambda = 2.0 * ga.re;
        let (eigvec_plus, eigvec_minus) = if lambda >= 0.0 { (unit_a, other) } else { (other, unit_a) };
        return Ok(DyadicSpectrum {
            lambda_plus: lambda.max(0.0),
            lambda_minus: lambda.min(0.0),
            eigvec_plus,
            eigvec_minus,
        });
    }
    let vec_for = |lambda: f64| fix_phase(g * (Complex64::new(lambda, 0.0) - ga) + a * Complex64::new(ng, 0.0));
    Ok(DyadicSpectrum {
        lambda_plus,
        lambda_minus,
        eigvec_plus: vec_for(lambda_plus),
        eigvec_minus: vec_for(lambda_minus),
    })
}

/// `|A⟩⟨G| + |G⟩⟨A|`.
pub fn dyadic_chi(a: &ComplexVector, g: &ComplexVector) -> ComplexMatrix {
    a * g.adjoint() + g * a.adjoint()
}

/// Positive part `λ₊|+⟩⟨+|` of `|A⟩⟨G| + |G⟩⟨A|` from the eigenvector formula.
pub fn dyadic_positive_part(a: &ComplexVector, g: &ComplexVector) -> Result<ComplexMatrix> {
    let s = dyadic_spectrum(a, g)?;
    let v = &s.eigvec_plus;
    Ok(v * v.adjoint() * Complex64::new(s.lambda_plus.max(0.0), 0.0))
}

fn check_single_channel(a: &[Complex64], gamma: &[Complex64]) -> Result<()> {
    if a.len() != gamma.len() {
        return Err(Error::DimensionMismatch(format!("{} couplings for {} Γ values", a.len(), gamma.len())));
    }
    if a.iter().all(|z| *z == ZERO) {
        return Err(Error::InvalidArgument("coupling vector is identically zero".into()));
    }
    Ok(())
}

/// `χ_ij = (Γ_i + Γ_j*) A_i A_j*` for one noise channel.
pub fn single_channel_chi(a: &[Complex64], gamma: &[Complex64]) -> Result<ComplexMatrix> {
    check_single_channel(a, gamma)?;
    let n = a.len();
    Ok(ComplexMatrix::from_fn(n, n, |i, j| (gamma[i] + gamma[j].conj()) * a[i] * a[j].conj()))
}

struct Moments {
    norm_sq: f64,
    mean_j: f64,
    var_j: f64,
    mean_s: f64,
    var_s: f64,
}

impl Moments {
    fn new(a: &[Complex64], gamma: &[Complex64]) -> Result<Self> {
        let j: Vec<f64> = gamma.iter().map(|z| z.re).collect();
        let s: Vec<f64> = gamma.iter().map(|z| z.im).collect();
        let (mean_j, var_j) = weighted_moments(&j, a)?;
        let (mean_s, var_s) = weighted_moments(&s, a)?;
        Ok(Self { norm_sq: a.iter().map(|z| z.norm_sqr()).sum(), mean_j, var_j, mean_s, var_s })
    }

    fn spread(&self) -> f64 {
        (self.mean_j * self.mean_j + self.var_j + self.var_s).sqrt()
    }
}

/// Spectral data of the single-channel `χ` built from `A_i` and `Γ_i`.
pub fn single_channel_spectrum(a: &[Complex64], gamma: &[Complex64]) -> Result<SingleChannelSpectrum> {
    check_single_channel(a, gamma)?;
    let av = ComplexVector::from_column_slice(a);
    let gv = ComplexVector::from_iterator(a.len(), a.iter().zip(gamma).map(|(x, g)| x * g));
    let d = dyadic_spectrum(&av, &gv)?;
    let mom = Moments::new(a, gamma)?;
    Ok(SingleChannelSpectrum {
        lambda_plus: d.lambda_plus,
        lambda_minus: d.lambda_minus,
        eigvec_plus: d.eigvec_plus,
        eigvec_minus: d.eigvec_minus,
        norm_sq: mom.norm_sq,
        mean_j: mom.mean_j,
        var_j: mom.var_j,
        var_s: mom.var_s,
        spread: mom.spread(),
    })
}

/// Closed-form positive part of the single-channel `χ`:
///
/// ```text
/// χ⁺_ij = A_i A_j* / (2𝒱) · [Γ_i Γ_j* + ⟨J²⟩ + ⟨S²⟩ + (𝒱 + i⟨S⟩)Γ_i + (𝒱 − i⟨S⟩)Γ_j*]
/// ```
///
/// When `𝒱(Γ) = 0` the matrix `χ` itself vanishes and so does the result.
pub fn single_channel_regularized(a: &[Complex64], gamma: &[Complex64]) -> Result<ComplexMatrix> {
    check_single_channel(a, gamma)?;
    let mom = Moments::new(a, gamma)?;
    let n = a.len();
    let v = mom.spread();
    let scale = gamma.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if v <= 1e-300 || v <= 1e-15 * scale {
        return Ok(ComplexMatrix::zeros(n, n));
    }
    let second = mom.mean_j * mom.mean_j + mom.var_j + mom.mean_s * mom.mean_s + mom.var_s;
    let cp = Complex64::new(v, mom.mean_s);
    let cm = Complex64::new(v, -mom.mean_s);
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        let pref = a[i] * a[j].conj() / (2.0 * v);
        pref * (gamma[i] * gamma[j].conj() + second + cp * gamma[i] + cm * gamma[j].conj())
    }))
}
