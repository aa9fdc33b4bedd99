//! End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
//! run with `cargo test -p redreg-core --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use redreg_core::choi::{self, cp_check, delta, delta_curve, time_average};
use redreg_core::linalg::{frobenius_norm, hermitian_eig, hermiticity_defect, min_eigenvalue, nearest_psd, trace};
use redreg_core::propagation::{evolve, propagator, propagator_between};
use redreg_core::redfield::{kossakowski, single_channel_chi, single_channel_regularized, single_channel_spectrum};
use redreg_core::reference::{
    amplitude_oracle, exact_channel, oscillator_kossakowski, oscillator_model, qubit_kossakowski, qubit_model,
    ExactAmplitudeSolution, ORACLE_TOL,
};
use redreg_core::regularizers::{coarse_graining_time_for, partial_secular, secular, ule};
use redreg_core::{
    BathSpec, Complex64, ComplexMatrix, Norm, PropagatorMatrix, Scheme, SystemModel, Time, VSystemParams,
};

type Check = Result<String, String>;

struct Outcome {
    id: usize,
    name: &'static str,
    result: Check,
    elapsed: Duration,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn grid(t_end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
}

fn both() -> [(&'static str, VSystemParams); 2] {
    [("low_frequency", VSystemParams::low_frequency()), ("high_frequency", VSystemParams::high_frequency())]
}

fn psi0() -> [Complex64; 3] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [c(0.0, 0.0), c(s, 0.0), c(s, 0.0)]
}

fn rho0() -> ComplexMatrix {
    let p = psi0();
    ComplexMatrix::from_fn(3, 3, |k, q| p[k] * p[q].conj())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, limit: Duration) -> Result<(), String> {
    let e = start.elapsed();
    ensure(e < limit, || format!("runtime {e:.2?} exceeds {limit:?}"))
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let x = ComplexMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&x + x.adjoint()) * c(0.5, 0.0)
}

fn random_complex(rng: &mut ChaCha8Rng, len: usize) -> Vec<Complex64> {
    (0..len).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize, scale: f64) -> ComplexMatrix {
    let b = ComplexMatrix::from_fn(n, rank, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    &b * b.adjoint() * c(scale, 0.0)
}

// 1. Closed-form amplitudes against the ODE embedding.
fn criterion_1() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (_, p) in both() {
        let sol = ExactAmplitudeSolution::new(&p).map_err(e)?;
        let t_end = 10.0 / p.gamma1.min(p.gamma2);
        let ts = grid(t_end, 1000);
        for a0 in [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)], [c(0.6, 0.0), c(0.0, 0.8)]] {
            let oracle = amplitude_oracle(&p, a0, &ts, ORACLE_TOL).map_err(e)?;
            for (t, o) in ts.iter().zip(&oracle) {
                let a = sol.amplitudes(a0, *t);
                worst = worst.max((a[0] - o[0]).norm()).max((a[1] - o[1]).norm());
            }
        }
    }
    ensure(worst <= 1e-6, || format!("max |a - a_oracle| = {worst:.3e} > 1e-6"))?;
    within_budget(start, Duration::from_secs(5))?;
    Ok(format!("max |a - a_oracle| = {worst:.3e}"))
}

// 2. Structural invariants of ρ(t) along trajectories.
fn criterion_2() -> Check {
    let mut tr_max: f64 = 0.0;
    let mut herm_max: f64 = 0.0;
    let mut psd_min = f64::INFINITY;
    for (label, p) in both() {
        let model = p.model().map_err(e)?;
        let bath = p.bath().map_err(e)?;
        let ts = grid(10.0, 200);
        for scheme in Scheme::STUDY {
            let traj = evolve(&rho0(), &ts, &model, &bath, scheme, 1e-8).map_err(e)?;
            for (t, rho) in ts.iter().zip(&traj.states) {
                let tr = (trace(rho) - c(1.0, 0.0)).norm();
                let herm = frobenius_norm(&(rho - rho.adjoint()));
                tr_max = tr_max.max(tr);
                herm_max = herm_max.max(herm);
                ensure(tr <= 1e-8, || format!("{label} {scheme} t={t}: |Tr ρ - 1| = {tr:.3e}"))?;
                ensure(herm <= 1e-9, || format!("{label} {scheme} t={t}: ‖ρ-ρ†‖ = {herm:.3e}"))?;
                if scheme.is_psd() {
                    let m = min_eigenvalue(rho).map_err(e)?;
                    psd_min = psd_min.min(m);
                    ensure(m >= -1e-8, || format!("{label} {scheme} t={t}: min eig ρ = {m:.3e}"))?;
                }
            }
        }
    }
    Ok(format!("max |Tr ρ-1| = {tr_max:.2e}, max ‖ρ-ρ†‖ = {herm_max:.2e}, min eig (PSD schemes) = {psd_min:.2e}"))
}

// 3. Nearest-PSD projection and the single-channel closed form.
fn criterion_3() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let mut worst_identity: f64 = 0.0;
    let mut competitors = 0usize;
    for trial in 0..500 {
        let n = 2 + trial % 7;
        let x = random_hermitian(&mut rng, n);
        let p = nearest_psd(&x).map_err(e)?;
        let eig = hermitian_eig(&x).map_err(e)?;
        let neg: f64 = eig.eigenvalues.iter().map(|l| l.min(0.0).powi(2)).sum::<f64>().sqrt();
        let dist = frobenius_norm(&(&x - &p));
        worst_identity = worst_identity.max((dist - neg).abs());
        ensure((dist - neg).abs() <= 1e-12, || format!("trial {trial}: ‖X-χ⁺‖ = {dist}, √Σλ₋² = {neg}"))?;
        let pmin = min_eigenvalue(&p).map_err(e)?;
        ensure(pmin >= -1e-12, || format!("trial {trial}: min eig χ⁺ = {pmin:.3e}"))?;
        ensure(hermiticity_defect(&p) <= 1e-14, || format!("trial {trial}: χ⁺ not Hermitian"))?;
        // Global samples plus PSD perturbations of the projection itself.
        for k in 0..40 {
            let y = if k % 2 == 0 {
                let rank = 1 + k % n;
                let scale = rng.random_range(0.0..1.0);
                random_psd(&mut rng, n, rank, scale)
            } else {
                &p + random_psd(&mut rng, n, 1, 10f64.powi(-(1 + (k % 6) as i32)))
            };
            competitors += 1;
            let dy = frobenius_norm(&(&x - &y));
            ensure(dy >= dist - 1e-12, || format!("trial {trial}: competitor at {dy} beats χ⁺ at {dist}"))?;
        }
    }
    let mut worst_closed: f64 = 0.0;
    for trial in 0..200 {
        let len = [4, 9, 16][trial % 3];
        let a = random_complex(&mut rng, len);
        let g = random_complex(&mut rng, len);
        let closed = single_channel_regularized(&a, &g).map_err(e)?;
        let path = nearest_psd(&single_channel_chi(&a, &g).map_err(e)?).map_err(e)?;
        let diff = frobenius_norm(&(&closed - &path));
        worst_closed = worst_closed.max(diff);
        ensure(diff <= 1e-10, || format!("single-channel trial {trial}: closed form off by {diff:.3e}"))?;
    }
    within_budget(start, Duration::from_secs(10))?;
    Ok(format!(
        "Higham identity err {worst_identity:.2e}, {competitors} competitors beaten, closed form err {worst_closed:.2e}"
    ))
}

// 4. Single-channel eigenvalues.
fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let mut worst: f64 = 0.0;
    for trial in 0..300 {
        let len = [4, 9, 16][trial % 3];
        let a = random_complex(&mut rng, len);
        let mut g = random_complex(&mut rng, len);
        if trial % 25 == 0 {
            // Proportional case: a constant Γ leaves a single nonzero eigenvalue.
            let g0 = g[0];
            g.iter_mut().for_each(|x| *x = g0);
        }
        let chi = single_channel_chi(&a, &g).map_err(e)?;
        let eig = hermitian_eig(&chi).map_err(e)?;
        let hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let s = single_channel_spectrum(&a, &g).map_err(e)?;
        let (mp, mm) = s.lambdas_from_moments();
        let scale = 1.0f64.max(frobenius_norm(&chi));
        let errs = [
            (s.lambda_plus - hi.max(0.0)).abs(),
            (s.lambda_minus - lo.min(0.0)).abs(),
            (mp - s.lambda_plus).abs(),
            (mm - s.lambda_minus).abs(),
        ];
        let err = errs.iter().cloned().fold(0.0, f64::max) / scale;
        worst = worst.max(err);
        ensure(err <= 1e-10, || format!("trial {trial}: eigenvalue mismatch {errs:?}"))?;
        ensure(s.lambda_plus >= 0.0 && s.lambda_minus <= 0.0, || {
            format!("trial {trial}: λ₊ = {}, λ₋ = {}", s.lambda_plus, s.lambda_minus)
        })?;
    }
    Ok(format!("300 instances, max relative eigenvalue error {worst:.2e}, λ₊ ≥ 0 ≥ λ₋ throughout"))
}

fn min_gap(model: &SystemModel) -> f64 {
    let n = model.dim();
    let w: Vec<f64> = (0..n * n).map(|i| model.bohr_frequency_of(i)).collect();
    let mut gap = f64::INFINITY;
    for x in &w {
        for y in &w {
            let d = (x - y).abs();
            if d > 1e-9 {
                gap = gap.min(d);
            }
        }
    }
    gap
}

// 5. Limiting behaviour of the regularizers.
fn criterion_5() -> Check {
    let mut worst_small: f64 = 0.0;
    let mut worst_large: f64 = 0.0;
    let mut dts = Vec::new();
    for (label, p) in both() {
        let model = p.model().map_err(e)?;
        let bath = p.bath().map_err(e)?;
        let gap = min_gap(&model);
        for t in [Time::Finite(1.0), Time::Finite(5.0), Time::Infinite] {
            let raw = kossakowski(&model, &bath, t).map_err(e)?;
            let small = partial_secular(&raw, 1e-9 / model.max_bohr_gap(), &model).map_err(e)?;
            let d0 = frobenius_norm(&(&small.chi - &raw.chi));
            worst_small = worst_small.max(d0);
            ensure(d0 <= 1e-12, || format!("{label} t={t}: Δt→0 deviates by {d0:.3e}"))?;

            let large = partial_secular(&raw, 1e6 / gap, &model).map_err(e)?;
            let sec = secular(&raw, &model);
            let rel = frobenius_norm(&(&large.chi - &sec.chi)) / frobenius_norm(&raw.chi);
            worst_large = worst_large.max(rel);
            ensure(rel <= 1e-5, || format!("{label} t={t}: large-Δt residue {rel:.3e}"))?;

            let dt = coarse_graining_time_for(&raw, &model, 0.0).map_err(e)?;
            let at = min_eigenvalue(&partial_secular(&raw, dt, &model).map_err(e)?.chi).map_err(e)?;
            let half = min_eigenvalue(&partial_secular(&raw, dt / 2.0, &model).map_err(e)?.chi).map_err(e)?;
            ensure(at >= 0.0, || format!("{label} t={t}: auto Δt={dt} leaves min eig {at:.3e}"))?;
            ensure(half < 0.0, || format!("{label} t={t}: Δt/2 is already PSD (min eig {half:.3e})"))?;
            dts.push(format!("{label}/{t}:{dt:.4}"));
        }
        let u = ule(&model, &bath).map_err(e)?;
        let umin = min_eigenvalue(&u.chi).map_err(e)?;
        let scale = frobenius_norm(&u.chi);
        ensure(umin >= -1e-12 * scale, || format!("{label}: ULE min eig {umin:.3e}"))?;
    }
    Ok(format!("Δt→0 err {worst_small:.1e}, large-Δt rel err {worst_large:.1e}, auto Δt {}", dts.join(" ")))
}

fn single_bath() -> Result<BathSpec, String> {
    BathSpec::lorentzian(DMatrix::from_element(1, 1, 0.8), 4.0, 1.5).map_err(e)
}

// 6. Qubit and truncated-oscillator oracles.
fn criterion_6() -> Check {
    let bath = single_bath()?;
    let times = [Time::Finite(0.2), Time::Finite(1.7), Time::Finite(6.0), Time::Infinite];
    let omega1 = 1.3;
    let qubit = qubit_model(omega1).map_err(e)?;
    for t in times {
        let chi = kossakowski(&qubit, &bath, t).map_err(e)?.chi;
        let re = 2.0 * bath.gamma_half_fourier(0, 0, omega1, t).map_err(e)?.damping();
        let nonzero: Vec<(usize, usize)> =
            (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).filter(|&(i, j)| chi[(i, j)].norm() > 0.0).collect();
        ensure(nonzero == vec![(1, 1)], || format!("qubit t={t}: nonzero entries at {nonzero:?}"))?;
        ensure((chi[(1, 1)] - c(re, 0.0)).norm() <= 1e-12, || format!("qubit t={t}: χ₁₁ = {} vs {re}", chi[(1, 1)]))?;
        let oracle = qubit_kossakowski(omega1, &bath, t).map_err(e)?;
        ensure(frobenius_norm(&(&oracle.chi - &chi)) <= 1e-12, || format!("qubit t={t}: oracle mismatch"))?;
        if t.is_infinite() {
            let m = min_eigenvalue(&chi).map_err(e)?;
            ensure(m >= 0.0, || format!("qubit t=∞: min eig {m:.3e}"))?;
        }
    }
    let omega_s = 0.9;
    let mut worst: f64 = 0.0;
    for levels in 1..=5 {
        let model = oscillator_model(omega_s, levels).map_err(e)?;
        let n = levels + 1;
        for t in times {
            let chi = kossakowski(&model, &bath, t).map_err(e)?.chi;
            let re = 2.0 * bath.gamma_half_fourier(0, 0, omega_s, t).map_err(e)?.damping();
            let mut a = vec![c(0.0, 0.0); n * n];
            for k in 0..levels {
                a[k * n + k + 1] = c(((k + 1) as f64).sqrt(), 0.0);
            }
            let expected = ComplexMatrix::from_fn(n * n, n * n, |i, j| a[i] * a[j].conj() * re);
            let err = frobenius_norm(&(&chi - &expected))
                .max(frobenius_norm(&(&oscillator_kossakowski(omega_s, &bath, t, levels).map_err(e)?.chi - &chi)));
            worst = worst.max(err);
            ensure(err <= 1e-12, || format!("oscillator L={levels} t={t}: error {err:.3e}"))?;
            let eig = hermitian_eig(&chi).map_err(e)?;
            let nonzero = eig.eigenvalues.iter().filter(|l| l.abs() > 1e-12 * frobenius_norm(&chi)).count();
            ensure(nonzero == 1, || format!("oscillator L={levels} t={t}: rank {nonzero}"))?;
        }
    }
    Ok(format!("qubit single entry at 4 times, oscillator L=1..5 rank one, max err {worst:.1e}"))
}

// 7. Choi-operator machinery.
fn criterion_7() -> Check {
    for n in 2..=4 {
        let j = choi::choi(&PropagatorMatrix::identity(n, 0.0)).map_err(e)?;
        let eig = hermitian_eig(&j.matrix).map_err(e)?;
        let mut ev = eig.eigenvalues.iter().cloned().collect::<Vec<_>>();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        ensure((ev[0] - n as f64).abs() <= 1e-12 && ev[1..].iter().all(|l| l.abs() <= 1e-12), || {
            format!("identity Choi N={n}: eigenvalues {ev:?}")
        })?;
    }
    let mut worst_comp: f64 = 0.0;
    let mut worst_tp: f64 = 0.0;
    for (label, p) in both() {
        let model = p.model().map_err(e)?;
        let bath = p.bath().map_err(e)?;
        let exact0 = exact_channel(&p, 0.0).map_err(e)?;
        for scheme in Scheme::STUDY {
            let phi0 = propagator(&[0.0], &model, &bath, scheme, 1e-8).map_err(e)?;
            for norm in Norm::ALL {
                let d = delta(&phi0[0], &exact0, norm).map_err(e)?;
                ensure(d == 0.0, || format!("{label} {scheme}: δ(0) = {d:e} ({norm})"))?;
            }
            let (s, t) = (0.7, 2.3);
            let full = propagator(&[s, t], &model, &bath, scheme, 1e-10).map_err(e)?;
            let tail = propagator_between(s, &[t], &model, &bath, scheme, 1e-10).map_err(e)?;
            let composed = &tail[0].matrix * &full[0].matrix;
            let err = frobenius_norm(&(&composed - &full[1].matrix));
            worst_comp = worst_comp.max(err);
            ensure(err <= 1e-6, || format!("{label} {scheme}: composition error {err:.3e}"))?;
        }
        for t in grid(10.0, 40) {
            let j = choi::choi(&exact_channel(&p, t).map_err(e)?).map_err(e)?;
            let cp = cp_check(&j, 1e-8).map_err(e)?;
            ensure(cp.is_cp, || format!("{label} t={t}: exact Choi min eig {:.3e}", cp.min_eigenvalue))?;
            ensure((j.trace() - 3.0).abs() <= 1e-8, || format!("{label} t={t}: Tr J = {}", j.trace()))?;
            let tp = j.trace_preservation_defect();
            worst_tp = worst_tp.max(tp);
            ensure(tp <= 1e-8, || format!("{label} t={t}: ‖Tr₁J - I‖ = {tp:.3e}"))?;
        }
    }
    Ok(format!(
        "identity spectrum ok, δ(0)=0 for all schemes, TP defect {worst_tp:.1e}, composition err {worst_comp:.1e}"
    ))
}

// 8. Short-time ranking of the regularized schemes on the high-frequency set.
fn criterion_8() -> Check {
    let start = Instant::now();
    let p = VSystemParams::high_frequency();
    let model = p.model().map_err(e)?;
    let bath = p.bath().map_err(e)?;
    let t_end = 0.5;
    let ts = grid(t_end, 100);
    let exact: Vec<PropagatorMatrix> = ts.iter().map(|&t| exact_channel(&p, t)).collect::<Result<_, _>>().map_err(e)?;
    let mut lines = Vec::new();
    for norm in Norm::ALL {
        let mut scores = Vec::new();
        for scheme in Scheme::REGULARIZED {
            let maps = propagator(&ts, &model, &bath, scheme, 1e-9).map_err(e)?;
            let d = delta_curve(&maps, &exact, norm).map_err(e)?;
            scores.push((scheme, time_average(&ts, &d, t_end).map_err(e)?));
        }
        let best =
            scores.iter().cloned().fold((Scheme::RedfieldRaw, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        let table = scores.iter().map(|(s, v)| format!("{s}={v:.3e}")).collect::<Vec<_>>().join(" ");
        ensure(best.0 == Scheme::NearestPsd, || format!("{norm}: argmin is {} ({table})", best.0))?;
        let runner_up =
            scores.iter().filter(|(s, _)| *s != Scheme::NearestPsd).map(|x| x.1).fold(f64::INFINITY, f64::min);
        ensure(best.1 < runner_up, || format!("{norm}: tie ({table})"))?;
        lines.push(format!("{norm}: {table}"));
    }
    within_budget(start, Duration::from_secs(60))?;
    Ok(lines.join("; "))
}

/// Max pointwise |ρ_kq − ρ^exact_kq| over t ∈ [0, 10], recorded on the first
/// run (low-frequency set, ψ₀, tolerance 1e-8) with a 3% margin.
const LOW_FREQUENCY_GOLDEN: [(Scheme, f64); 4] = [
    (Scheme::NearestPsd, 5.20e-2),
    (Scheme::PartialSecular(redreg_core::CoarseGraining::Auto), 2.25e-1),
    (Scheme::Secular, 1.56e-1),
    (Scheme::Ule, 2.22e-1),
];

// 9. Low-frequency trajectories against the exact density matrix.
fn criterion_9() -> Check {
    let p = VSystemParams::low_frequency();
    let model = p.model().map_err(e)?;
    let bath = p.bath().map_err(e)?;
    let sol = ExactAmplitudeSolution::new(&p).map_err(e)?;
    let ts = grid(10.0, 100);
    let exact: Vec<ComplexMatrix> = ts.iter().map(|&t| sol.density(psi0(), t)).collect::<Result<_, _>>().map_err(e)?;
    let t_long = 40.0;
    let exact_long = sol.density(psi0(), t_long).map_err(e)?[(0, 0)].re;
    ensure(exact_long >= 0.9999, || format!("exact ρ₀₀({t_long}) = {exact_long}"))?;
    let mut lines = Vec::new();
    for (scheme, golden) in LOW_FREQUENCY_GOLDEN {
        let traj = evolve(&rho0(), &ts, &model, &bath, scheme, 1e-8).map_err(e)?;
        let dev = traj
            .states
            .iter()
            .zip(&exact)
            .map(|(r, x)| (r - x).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        ensure(dev <= golden, || format!("{scheme}: max deviation {dev:.4e} above golden {golden:.2e}"))?;
        let long = evolve(&rho0(), &[0.0, t_long], &model, &bath, scheme, 1e-8).map_err(e)?;
        let g = long.states[1][(0, 0)].re;
        ensure(g >= 0.9999, || format!("{scheme}: ρ₀₀({t_long}) = {g}"))?;
        lines.push(format!("{scheme} dev={dev:.3e} ρ₀₀({t_long})={g:.6}"));
    }
    Ok(lines.join("; "))
}

#[test]
fn acceptance() {
    let criteria: [(&'static str, fn() -> Check); 9] = [
        ("exact solution vs ODE oracle", criterion_1),
        ("GKSL structural invariants", criterion_2),
        ("nearest-PSD projection", criterion_3),
        ("single-channel spectrum", criterion_4),
        ("scheme limits", criterion_5),
        ("qubit and oscillator oracles", criterion_6),
        ("Choi machinery", criterion_7),
        ("short-time ranking (high-frequency set)", criterion_8),
        ("trajectory regression (low-frequency set)", criterion_9),
    ];
    let mut outcomes = Vec::new();
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = f();
        let o = Outcome { id: i + 1, name, result, elapsed: start.elapsed() };
        match &o.result {
            Ok(msg) => println!("criterion {} PASS [{}] ({:.2?}): {msg}", o.id, o.name, o.elapsed),
            Err(msg) => println!("criterion {} FAIL [{}] ({:.2?}): {msg}", o.id, o.name, o.elapsed),
        }
        outcomes.push(o);
    }
    let failed: Vec<usize> = outcomes.iter().filter(|o| o.result.is_err()).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
