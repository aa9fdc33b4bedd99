//! Self-check registry run by `redreg validate`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use redreg_core::choi::{choi, choi_of_matrix};
use redreg_core::linalg::{frobenius_norm, hermitian_eig, min_eigenvalue, nearest_psd};
use redreg_core::propagation::{lgks_rhs, vsystem_rhs};
use redreg_core::redfield::{kossakowski, single_channel_chi, single_channel_regularized};
use redreg_core::reference::{
    amplitude_oracle, oscillator_kossakowski, oscillator_model, qubit_kossakowski, qubit_model, ExactAmplitudeSolution,
    ORACLE_TOL,
};
use redreg_core::regularizers;
use redreg_core::{BathSpec, Complex64, ComplexMatrix, PropagatorMatrix, Result, Scheme, Time, VSystemParams};

pub const DEFAULT_SEED: u64 = 0x7265_6472_6567;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    /// Worst observed error; `NaN` when the check itself could not run.
    pub measured: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.measured <= self.tolerance
    }
}

type CheckFn = fn(&mut ChaCha8Rng) -> Result<f64>;

/// `(name, tolerance, check)`; each check returns its worst error.
pub const REGISTRY: [(&str, f64, CheckFn); 12] = [
    ("qubit-oracle", 1e-12, qubit_oracle),
    ("oscillator-oracle", 1e-12, oscillator_oracle),
    ("oscillator-rank-one", 1e-12, oscillator_rank_one),
    ("bochner-lorentzian", 1e-12, bochner_lorentzian),
    ("bochner-tabulated", 1e-5, bochner_tabulated),
    ("dual-rhs", 1e-10, dual_rhs),
    ("exact-vs-oracle", 1e-6, exact_vs_oracle),
    ("nearest-psd-identity", 1e-12, nearest_psd_identity),
    ("single-channel-closed-form", 1e-10, single_channel_closed_form),
    ("scheme-psd", 1e-12, scheme_psd),
    ("choi-identity", 1e-12, choi_identity),
    ("exact-channel-tp", 1e-8, exact_channel_tp),
];

pub fn run_all(seed: u64, tolerance_scale: f64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    REGISTRY
        .iter()
        .map(|&(name, tol, f)| CheckResult {
            name,
            measured: f(&mut rng).unwrap_or(f64::NAN),
            tolerance: tol * tolerance_scale,
        })
        .collect()
}

pub fn report(results: &[CheckResult]) -> String {
    let mut s = format!("{:<28} {:>12} {:>12}  status\n", "check", "measured", "tolerance");
    for r in results {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        s.push_str(&format!("{:<28} {:>12.3e} {:>12.3e}  {status}\n", r.name, r.measured, r.tolerance));
    }
    let passed = results.iter().filter(|r| r.passed()).count();
    s.push_str(&format!("{passed}/{} checks passed\n", results.len()));
    s
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn single_bath() -> Result<BathSpec> {
    BathSpec::lorentzian(DMatrix::from_element(1, 1, 0.7), 3.0, 1.2)
}

const TIMES: [Time; 4] = [Time::Finite(0.3), Time::Finite(1.5), Time::Finite(7.0), Time::Infinite];

fn presets() -> [VSystemParams; 2] {
    [VSystemParams::low_frequency(), VSystemParams::high_frequency()]
}

fn qubit_oracle(_: &mut ChaCha8Rng) -> Result<f64> {
    let bath = single_bath()?;
    let mut worst: f64 = 0.0;
    for w in [0.5, 1.2, 4.0] {
        let model = qubit_model(w)?;
        for t in TIMES {
            let generic = kossakowski(&model, &bath, t)?;
            let oracle = qubit_kossakowski(w, &bath, t)?;
            worst = worst.max(frobenius_norm(&(&generic.chi - &oracle.chi)));
            worst = worst.max(frobenius_norm(&(&generic.lamb_shift - &oracle.lamb_shift)));
        }
    }
    Ok(worst)
}

fn oscillator_oracle(_: &mut ChaCha8Rng) -> Result<f64> {
    let bath = single_bath()?;
    let mut worst: f64 = 0.0;
    for levels in 1..=4 {
        let model = oscillator_model(0.8, levels)?;
        for t in TIMES {
            let generic = kossakowski(&model, &bath, t)?;
            let oracle = oscillator_kossakowski(0.8, &bath, t, levels)?;
            worst = worst.max(frobenius_norm(&(&generic.chi - &oracle.chi)));
        }
    }
    Ok(worst)
}

fn oscillator_rank_one(_: &mut ChaCha8Rng) -> Result<f64> {
    let bath = single_bath()?;
    let mut worst: f64 = 0.0;
    for levels in 1..=4 {
        let model = oscillator_model(0.8, levels)?;
        for t in TIMES {
            let chi = kossakowski(&model, &bath, t)?.chi;
            let mut ev: Vec<f64> = hermitian_eig(&chi)?.eigenvalues.iter().map(|l| l.abs()).collect();
            ev.sort_by(|a, b| b.total_cmp(a));
            worst = worst.max(ev[1] / ev[0]);
        }
    }
    Ok(worst)
}

/// Spectral density of a Lorentzian correlation is PSD at every frequency.
fn bochner_lorentzian(_: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in presets() {
        let bath = p.bath()?;
        for k in 0..=400 {
            let w = -50.0 + 0.25 * k as f64;
            let j = bath.spectral_density_matrix(w)?;
            let scale = frobenius_norm(&j).max(f64::MIN_POSITIVE);
            worst = worst.max((-min_eigenvalue(&j)? / scale).max(0.0));
        }
    }
    Ok(worst)
}

/// The same correlation sampled on a grid reproduces the closed-form `Γ(ω, t)`
/// and a non-negative spectral density.
fn bochner_tabulated(_: &mut ChaCha8Rng) -> Result<f64> {
    let closed = single_bath()?;
    let h = 2e-3;
    let tau: Vec<f64> = (0..=5000).map(|k| k as f64 * h).collect();
    let samples = tau
        .iter()
        .map(|&t| closed.correlation(0, 0, t).map(|v| ComplexMatrix::from_element(1, 1, v)))
        .collect::<Result<Vec<_>>>()?;
    let tab = BathSpec::tabulated(tau, samples)?;
    let mut worst: f64 = 0.0;
    for w in [-2.0, 0.0, 1.2, 3.5] {
        for t in [Time::Finite(0.5), Time::Finite(4.0)] {
            let a = closed.gamma_half_fourier(0, 0, w, t)?.value();
            let b = tab.gamma_half_fourier(0, 0, w, t)?.value();
            worst = worst.max((a - b).norm() / a.norm().max(1e-300));
        }
        worst = worst.max((-tab.spectral_density(w)?[(0, 0)]).max(0.0));
    }
    Ok(worst)
}

fn random_density(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let b = ComplexMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let p = &b * b.adjoint();
    let t = p.trace();
    p / t
}

/// Literal V-system component equations against the generic GKSL assembly.
fn dual_rhs(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in presets() {
        let model = p.model()?;
        let bath = p.bath()?;
        for t in [0.05, 0.7, 3.0, 12.0] {
            let rho = random_density(rng, 3);
            let a = vsystem_rhs(&rho, t, &p)?;
            let b = lgks_rhs(&rho, t, &model, &bath, Scheme::RedfieldRaw)?;
            worst = worst.max(frobenius_norm(&(&a - &b)) / frobenius_norm(&b).max(1.0));
        }
    }
    Ok(worst)
}

fn exact_vs_oracle(_: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in presets() {
        let sol = ExactAmplitudeSolution::new(&p)?;
        let grid: Vec<f64> = (0..=200).map(|k| 0.05 * k as f64).collect();
        for a0 in [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]] {
            let oracle = amplitude_oracle(&p, a0, &grid, ORACLE_TOL)?;
            for (t, o) in grid.iter().zip(&oracle) {
                let a = sol.amplitudes(a0, *t);
                worst = worst.max((a[0] - o[0]).norm()).max((a[1] - o[1]).norm());
            }
        }
    }
    Ok(worst)
}

fn nearest_psd_identity(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let n = 2 + k % 7;
        let x = ComplexMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let x = (&x + x.adjoint()) * c(0.5, 0.0);
        let p = nearest_psd(&x)?;
        let neg: f64 = hermitian_eig(&x)?.eigenvalues.iter().map(|l| l.min(0.0).powi(2)).sum::<f64>().sqrt();
        worst = worst.max((frobenius_norm(&(&x - &p)) - neg).abs()).max((-min_eigenvalue(&p)?).max(0.0));
    }
    Ok(worst)
}

fn single_channel_closed_form(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let len = [4, 9][k % 2];
        let mut draw = || -> Vec<Complex64> {
            (0..len).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
        };
        let (a, g) = (draw(), draw());
        let closed = single_channel_regularized(&a, &g)?;
        let path = nearest_psd(&single_channel_chi(&a, &g)?)?;
        worst = worst.max(frobenius_norm(&(&closed - &path)));
    }
    Ok(worst)
}

fn scheme_psd(_: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in presets() {
        let model = p.model()?;
        let bath = p.bath()?;
        for scheme in Scheme::REGULARIZED {
            let chi = regularizers::apply(scheme, &model, &bath, Time::Infinite)?.chi;
            worst = worst.max((-min_eigenvalue(&chi)? / frobenius_norm(&chi)).max(0.0));
        }
    }
    Ok(worst)
}

fn choi_identity(_: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 2..=4 {
        let j = choi(&PropagatorMatrix::identity(n, 0.0))?;
        let mut ev: Vec<f64> = hermitian_eig(&j.matrix)?.eigenvalues.iter().cloned().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        worst = worst.max((ev[0] - n as f64).abs());
        worst = ev[1..].iter().fold(worst, |m, l| m.max(l.abs()));
    }
    Ok(worst)
}

fn exact_channel_tp(_: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in presets() {
        let sol = ExactAmplitudeSolution::new(&p)?;
        for k in 0..=40 {
            let phi = sol.channel(0.25 * k as f64);
            let j = choi_of_matrix(&phi.matrix, phi.time)?;
            worst = worst.max(j.trace_preservation_defect()).max((-min_eigenvalue(&j.matrix)?).max(0.0));
        }
    }
    Ok(worst)
}
