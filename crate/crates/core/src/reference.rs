//! Exactly solvable reference dynamics and closed-form Kossakowski matrices.
//!
//! The V-system has levels `|0⟩, |1⟩, |2⟩` with energies `0, ω₁, ω₂`, couplings
//! `A_α = |0⟩⟨α|` and a Lorentzian vacuum bath with rank-one `γ`. With
//! `M = μ + iω₀` and `G = γμ/2` the excited amplitudes obey
//!
//! ```text
//! a(t) = Σ_j e^{r_j t} W⁽ʲ⁾ a(0),   Q(r_j) = r_j³ + h₁r_j² + h₂r_j + h₃ = 0,
//! ```
//!
//! and the reduced dynamics on all operators is the channel
//! `Φ(ρ) = VρV† + |0⟩⟨0| Tr[(P₁ − W†W)ρ]` with `V = 1 ⊕ W(t)`.

use nalgebra::{Matrix2, Matrix3, Vector2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, I, ONE, ZERO};
use crate::model::{BathSpec, SystemModel, Time};
use crate::propagation::ode::{self, OdeOptions};
use crate::propagation::PropagatorMatrix;
use crate::redfield::{lamb_shift_from_coefficients, KossakowskiData};

/// Roots closer than this (relative to the largest root) are treated as degenerate.
pub const ROOT_SEPARATION_RTOL: f64 = 1e-6;
/// The residues must sum to the identity within this tolerance; a larger defect
/// signals cancellation from nearly coincident roots.
pub const RESIDUE_SUM_TOL: f64 = 1e-9;
/// Tolerance of the amplitude-ODE oracle.
pub const ORACLE_TOL: f64 = 1e-12;
const NORMALIZATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VSystemParams {
    pub omega1: f64,
    pub omega2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub mu: f64,
    pub omega0: f64,
}

impl VSystemParams {
    /// Weakly detuned, broad bath: `ω₁=1, ω₂=2, ω₀=1.5, γ₁=γ₂=1, μ=4`.
    pub fn low_frequency() -> Self {
        Self { omega1: 1.0, omega2: 2.0, gamma1: 1.0, gamma2: 1.0, mu: 4.0, omega0: 1.5 }
    }

    /// Higher frequencies: `ω₁=10, ω₂=20, ω₀=15, γ₁=γ₂=1, μ=20`.
    pub fn high_frequency() -> Self {
        Self { omega1: 10.0, omega2: 20.0, gamma1: 1.0, gamma2: 1.0, mu: 20.0, omega0: 15.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.omega1, self.omega2, self.gamma1, self.gamma2, self.mu, self.omega0];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        if self.gamma1 < 0.0 || self.gamma2 < 0.0 {
            return Err(Error::InvalidArgument("rates must be non-negative".into()));
        }
        if !(self.mu > 0.0) {
            return Err(Error::InvalidArgument(format!("bath width must be positive, got {}", self.mu)));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<SystemModel> {
        self.validate()?;
        let unit = |alpha: usize| {
            let mut a = ComplexMatrix::zeros(3, 3);
            a[(0, alpha)] = ONE;
            a
        };
        SystemModel::new(vec![0.0, self.omega1, self.omega2], vec![unit(1), unit(2)])
    }

    pub fn bath(&self) -> Result<BathSpec> {
        self.validate()?;
        BathSpec::lorentzian_rank_one(self.gamma1, self.gamma2, self.mu, self.omega0)
    }

    /// `M = μ + iω₀`.
    pub fn m(&self) -> Complex64 {
        Complex64::new(self.mu, self.omega0)
    }

    /// `G_αβ = γ_αβ μ/2`.
    pub fn g(&self) -> Matrix2<f64> {
        let off = (self.gamma1 * self.gamma2).sqrt();
        Matrix2::new(self.gamma1, off, off, self.gamma2) * (self.mu / 2.0)
    }
}

/// `(h₁, h₂, h₃)` of `Q(s) = s³ + h₁s² + h₂s + h₃`.
pub fn cubic_coefficients(p: &VSystemParams) -> [Complex64; 3] {
    let m = p.m();
    let g = p.g();
    let (w1, w2) = (p.omega1, p.omega2);
    let h1 = m + I * (w1 + w2);
    let h2 = Complex64::new(g[(0, 0)] + g[(1, 1)] - w1 * w2, 0.0) + I * m * (w1 + w2);
    let h3 = -m * (w1 * w2) + I * (w1 * g[(1, 1)] + w2 * g[(0, 0)]);
    [h1, h2, h3]
}

fn cubic(h: &[Complex64; 3], s: Complex64) -> Complex64 {
    ((s + h[0]) * s + h[1]) * s + h[2]
}

fn cubic_derivative(h: &[Complex64; 3], s: Complex64) -> Complex64 {
    (s * 3.0 + h[0] * 2.0) * s + h[1]
}

/// Roots of the monic cubic as eigenvalues of its companion matrix, each
/// refined by a few Newton steps.
pub fn cubic_roots(h: &[Complex64; 3]) -> Result<[Complex64; 3]> {
    if h.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    #[rustfmt::skip]
    let companion = ComplexMatrix::from_row_slice(3, 3, &[
        -h[0], -h[1], -h[2],
        ONE,   ZERO,  ZERO,
        ZERO,  ONE,   ZERO,
    ]);
    let schur = nalgebra::linalg::Schur::try_new(companion, f64::EPSILON, 10_000).ok_or(Error::NoConvergence)?;
    let (_, t) = schur.unpack();
    let mut roots = [t[(0, 0)], t[(1, 1)], t[(2, 2)]];
    for r in &mut roots {
        for _ in 0..3 {
            let d = cubic_derivative(h, *r);
            if d == ZERO {
                break;
            }
            let step = cubic(h, *r) / d;
            let next = *r - step;
            if cubic(h, next).norm() < cubic(h, *r).norm() {
                *r = next;
            } else {
                break;
            }
        }
    }
    Ok(roots)
}

/// Roots from the radical (Cardano) formula, as an independent cross-check
/// of [`cubic_roots`].
pub fn cubic_roots_radical(h: &[Complex64; 3]) -> [Complex64; 3] {
    let (a, b, c) = (h[0], h[1], h[2]);
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = a * a * a * (2.0 / 27.0) - a * b / 3.0 + c;
    let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    let mut u3 = -q / 2.0 + disc;
    if u3.norm() < (-q / 2.0 - disc).norm() {
        u3 = -q / 2.0 - disc;
    }
    let xi = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let mut out = [ZERO; 3];
    if u3 == ZERO {
        return [-shift; 3];
    }
    let u = u3.powf(1.0 / 3.0);
    let mut uk = u;
    for o in &mut out {
        *o = uk - p / (uk * 3.0) - shift;
        uk *= xi;
    }
    out
}

/// `(a₁(t), a₂(t)) = Σ_j W⁽ʲ⁾ e^{r_j t} (a₁(0), a₂(0))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactAmplitudeSolution {
    pub params: VSystemParams,
    pub roots: [Complex64; 3],
    pub residues: [Matrix2<Complex64>; 3],
}

impl ExactAmplitudeSolution {
    pub fn new(params: &VSystemParams) -> Result<Self> {
        params.validate()?;
        let h = cubic_coefficients(params);
        let roots = cubic_roots(&h)?;
        let scale = roots.iter().fold(0.0f64, |m, r| m.max(r.norm()));
        let mut separation = f64::INFINITY;
        for i in 0..3 {
            for j in i + 1..3 {
                separation = separation.min((roots[i] - roots[j]).norm());
            }
        }
        if separation <= ROOT_SEPARATION_RTOL * scale {
            return Err(Error::DegenerateRoots { separation });
        }

        let m = params.m();
        let g = params.g().map(|x| Complex64::new(x, 0.0));
        let (w1, w2) = (params.omega1, params.omega2);
        let residues = roots.map(|r| {
            let dq = cubic_derivative(&h, r);
            Matrix2::new((r + I * w2) * (r + m) + g[(1, 1)], -g[(0, 1)], -g[(1, 0)], (r + I * w1) * (r + m) + g[(0, 0)])
                / dq
        });
        let sum = residues.iter().fold(Matrix2::<Complex64>::zeros(), |a, w| a + w) - Matrix2::identity();
        if !(sum.norm() <= RESIDUE_SUM_TOL) {
            return Err(Error::DegenerateRoots { separation });
        }
        Ok(Self { params: *params, roots, residues })
    }

    /// Amplitude transfer matrix `W(t)`. The residues sum to the identity, which
    /// is returned exactly at `t = 0`.
    pub fn transfer(&self, t: f64) -> Matrix2<Complex64> {
        if t == 0.0 {
            return Matrix2::identity();
        }
        self.roots.iter().zip(&self.residues).fold(Matrix2::zeros(), |acc, (r, w)| acc + w * (r * t).exp())
    }

    pub fn amplitudes(&self, a0: [Complex64; 2], t: f64) -> [Complex64; 2] {
        let a = self.transfer(t) * Vector2::new(a0[0], a0[1]);
        [a[0], a[1]]
    }

    /// Reduced state for `|ψ₀⟩ = a₀|0⟩ + a₁|1⟩ + a₂|2⟩`.
    pub fn density(&self, psi0: [Complex64; 3], t: f64) -> Result<ComplexMatrix> {
        let norm: f64 = psi0.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized(norm));
        }
        let [a1, a2] = self.amplitudes([psi0[1], psi0[2]], t);
        let a = [psi0[0], a1, a2];
        let mut rho = ComplexMatrix::from_fn(3, 3, |k, q| a[k] * a[q].conj());
        rho[(0, 0)] = Complex64::new(1.0 - a1.norm_sqr() - a2.norm_sqr(), 0.0);
        Ok(rho)
    }

    /// Exact dynamical map `Φ_{t,0}` in the row-major vectorization.
    pub fn channel(&self, t: f64) -> PropagatorMatrix {
        let w = self.transfer(t);
        let mut v = Matrix3::<Complex64>::zeros();
        v[(0, 0)] = ONE;
        v.fixed_view_mut::<2, 2>(1, 1).copy_from(&w);
        // D = P₁ − V†V, supported on span{|1⟩, |2⟩}
        let mut d = -(v.adjoint() * v);
        d[(0, 0)] += ONE;
        d[(1, 1)] += ONE;
        d[(2, 2)] += ONE;
        let mut phi = ComplexMatrix::zeros(9, 9);
        for k in 0..3 {
            for q in 0..3 {
                let col = 3 * k + q;
                // V E_kq V† = V[:,k] V[:,q]†
                for a in 0..3 {
                    for b in 0..3 {
                        phi[(3 * a + b, col)] = v[(a, k)] * v[(b, q)].conj();
                    }
                }
                // Tr[D E_kq] = D[q, k]
                phi[(0, col)] += d[(q, k)];
            }
        }
        PropagatorMatrix { start: 0.0, time: t, matrix: phi }
    }
}

pub fn exact_amplitudes(params: &VSystemParams, a0: [Complex64; 2], t: f64) -> Result<[Complex64; 2]> {
    Ok(ExactAmplitudeSolution::new(params)?.amplitudes(a0, t))
}

pub fn exact_density(params: &VSystemParams, psi0: [Complex64; 3], t: f64) -> Result<ComplexMatrix> {
    ExactAmplitudeSolution::new(params)?.density(psi0, t)
}

pub fn exact_channel(params: &VSystemParams, t: f64) -> Result<PropagatorMatrix> {
    Ok(ExactAmplitudeSolution::new(params)?.channel(t))
}

/// Amplitudes from direct integration of the memory equations, embedded as
/// the linear ODE system
///
/// ```text
/// ȧ_α = −iω_α a_α − Σ_β G_αβ z_β,    ż_β = a_β − M z_β,
/// ```
///
/// where `z_β(t) = ∫₀ᵗ e^{−M(t−τ)} a_β(τ) dτ` carries the exponential memory.
pub fn amplitude_oracle(
    params: &VSystemParams,
    a0: [Complex64; 2],
    t_grid: &[f64],
    tol: f64,
) -> Result<Vec<[Complex64; 2]>> {
    params.validate()?;
    let m = params.m();
    let g = params.g();
    let w = [params.omega1, params.omega2];
    let y0 = [a0[0], a0[1], ZERO, ZERO];
    let (ys, _) = ode::integrate(
        |_, y: &[Complex64], dy: &mut [Complex64]| -> Result<()> {
            for alpha in 0..2 {
                dy[alpha] = -I * w[alpha] * y[alpha] - y[2] * g[(alpha, 0)] - y[3] * g[(alpha, 1)];
                dy[2 + alpha] = y[alpha] - m * y[2 + alpha];
            }
            Ok(())
        },
        0.0,
        &y0,
        t_grid,
        &OdeOptions::with_tol(tol),
    )?;
    Ok(ys.into_iter().map(|y| [y[0], y[1]]).collect())
}

fn single_channel_gamma(bath: &BathSpec, omega: f64, t: Time) -> Result<Complex64> {
    if bath.channels() != 1 {
        return Err(Error::ChannelMismatch { system: 1, bath: bath.channels() });
    }
    Ok(bath.gamma_half_fourier(0, 0, omega, t)?.value())
}

/// Qubit `H = ω₁|1⟩⟨1|` with rotating-wave coupling `A = |0⟩⟨1|`.
pub fn qubit_model(omega1: f64) -> Result<SystemModel> {
    let mut a = ComplexMatrix::zeros(2, 2);
    a[(0, 1)] = ONE;
    SystemModel::new(vec![0.0, omega1], vec![a])
}

/// Qubit Kossakowski matrix: the only non-zero entry is
/// `χ_{01,01} = 2 Re Γ₁₁(ω₁, t)`.
pub fn qubit_kossakowski(omega1: f64, bath: &BathSpec, t: Time) -> Result<KossakowskiData> {
    let gamma = single_channel_gamma(bath, omega1, t)?;
    let mut data = KossakowskiData::zero(2, t);
    data.chi[(1, 1)] = Complex64::new(2.0 * gamma.re, 0.0);
    let mut lamb = ComplexMatrix::zeros(4, 4);
    lamb[(1, 1)] = Complex64::new(gamma.im, 0.0);
    Ok(data.with_lamb_coefficients(lamb))
}

/// Oscillator `H = ω_S a†a` truncated to `levels + 1` Fock states, coupled
/// through `A = a`.
pub fn oscillator_model(omega_s: f64, levels: usize) -> Result<SystemModel> {
    if levels < 1 {
        return Err(Error::InvalidArgument("oscillator needs at least one transition".into()));
    }
    let n = levels + 1;
    let mut a = ComplexMatrix::zeros(n, n);
    for k in 0..levels {
        a[(k, k + 1)] = Complex64::new(((k + 1) as f64).sqrt(), 0.0);
    }
    SystemModel::new((0..n).map(|k| k as f64 * omega_s).collect(), vec![a])
}

/// Truncated-oscillator Kossakowski matrix
/// `χ_{(k,k+1),(l,l+1)} = 2 Re Γ₁₁(ω_S, t) √(k+1) √(l+1)`, `k, l < levels`.
pub fn oscillator_kossakowski(omega_s: f64, bath: &BathSpec, t: Time, levels: usize) -> Result<KossakowskiData> {
    if levels < 1 {
        return Err(Error::InvalidArgument("oscillator needs at least one transition".into()));
    }
    let gamma = single_channel_gamma(bath, omega_s, t)?;
    let n = levels + 1;
    let mut data = KossakowskiData::zero(n, t);
    let mut lamb = ComplexMatrix::zeros(n * n, n * n);
    for k in 0..levels {
        for l in 0..levels {
            let w = (((k + 1) * (l + 1)) as f64).sqrt();
            let (i, j) = (k * n + k + 1, l * n + l + 1);
            data.chi[(i, j)] = Complex64::new(2.0 * gamma.re * w, 0.0);
            lamb[(i, j)] = Complex64::new(gamma.im * w, 0.0);
        }
    }
    data.lamb_shift = lamb_shift_from_coefficients(&lamb, n);
    data.lamb_coefficients = lamb;
    Ok(data)
}

/// The `levels × levels` block of an oscillator `χ` on the indices `(k, k+1)`.
pub fn oscillator_block(chi: &ComplexMatrix, levels: usize) -> ComplexMatrix {
    let n = levels + 1;
    ComplexMatrix::from_fn(levels, levels, |k, l| chi[(k * n + k + 1, l * n + l + 1)])
}

/// Largest singular value of a 2×2 matrix.
pub fn spectral_norm2(w: &Matrix2<Complex64>) -> f64 {
    let wd = ComplexMatrix::from_fn(2, 2, |i, j| w[(i, j)]);
    let g = linalg::dagger(&wd) * wd;
    linalg::hermitian_eig(&g).map(|e| e.eigenvalues[1].max(0.0).sqrt()).unwrap_or(f64::NAN)
}
