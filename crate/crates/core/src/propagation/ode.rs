//! Dormand–Prince 5(4) with PI step-size control and the standard
//! fourth-order dense output, on complex state vectors.

use num_complex::Complex64;

use crate::error::Error;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Initial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, ..Self::default() }
    }
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-8, max_steps: 2_000_000, h_init: None }
    }
}

/// Counters from one integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

fn lin(out: &mut [Complex64], y: &[Complex64], h: f64, terms: &[(f64, &[Complex64])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, k) in terms {
            if *c != 0.0 {
                acc += k[i] * *c;
            }
        }
        *o = y[i] + acc * h;
    }
}

fn weighted_rms(v: &[Complex64], y0: &[Complex64], y1: &[Complex64], opts: &OdeOptions) -> f64 {
    let n = v.len().max(1) as f64;
    let s: f64 = v
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sk = opts.atol + opts.rtol * a.norm().max(b.norm());
            (e.norm() / sk).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

/// Integrate `y' = f(t, y)` from `(t0, y0)` and return the state at every
/// point of `t_out` (ascending, all `>= t0`).
///
/// `f` writes the derivative into its third argument and may fail; its
/// error type must absorb [`Error`] so integration failures (step-size
/// underflow, step budget) can be reported through it.
pub fn integrate<F, E>(
    mut f: F,
    t0: f64,
    y0: &[Complex64],
    t_out: &[f64],
    opts: &OdeOptions,
) -> Result<(Vec<Vec<Complex64>>, OdeStats), E>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]) -> Result<(), E>,
    E: From<Error>,
{
    if t_out.windows(2).any(|w| !(w[1] >= w[0])) || t_out.first().is_some_and(|&t| !(t >= t0)) {
        return Err(Error::InvalidArgument("output times must be ascending and start at or after t0".into()).into());
    }
    if !(opts.rtol > 0.0) || !(opts.atol > 0.0) {
        return Err(Error::InvalidArgument("tolerances must be positive".into()).into());
    }
    let n = y0.len();
    let mut stats = OdeStats::default();
    let mut out = Vec::with_capacity(t_out.len());
    let mut next = 0;
    while next < t_out.len() && t_out[next] == t0 {
        out.push(y0.to_vec());
        next += 1;
    }
    let Some(&t_end) = t_out.last() else { return Ok((out, stats)) };
    if next == t_out.len() {
        return Ok((out, stats));
    }

    let zero = Complex64::new(0.0, 0.0);
    let mut y = y0.to_vec();
    let mut k1 = vec![zero; n];
    let mut k2 = vec![zero; n];
    let mut k3 = vec![zero; n];
    let mut k4 = vec![zero; n];
    let mut k5 = vec![zero; n];
    let mut k6 = vec![zero; n];
    let mut k7 = vec![zero; n];
    let mut ytmp = vec![zero; n];
    let mut ynew = vec![zero; n];
    let mut err = vec![zero; n];
    let mut cont = vec![[zero; 5]; n];

    let mut t = t0;
    f(t, &y, &mut k1)?;
    stats.evaluations += 1;
    let h_max = t_end - t0;
    let mut h = match opts.h_init {
        Some(h) => h.min(h_max),
        None => {
            let h = initial_step(&mut f, t, &y, &k1, h_max, opts, &mut ytmp, &mut k2)?;
            stats.evaluations += 1;
            h
        }
    };
    let mut fac_old = 1e-4f64;
    let mut last_rejected = false;
    let expo = 0.2 - BETA * 0.75;

    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::TooManySteps { steps: opts.max_steps, t }.into());
        }
        if 0.1 * h.abs() <= t.abs().max(1.0) * f64::EPSILON {
            return Err(Error::StepSizeUnderflow { t }.into());
        }
        let last = t + 1.01 * h >= t_end;
        if last {
            h = t_end - t;
        }

        lin(&mut ytmp, &y, h, &[(A21, &k1)]);
        f(t + C2 * h, &ytmp, &mut k2)?;
        lin(&mut ytmp, &y, h, &[(A31, &k1), (A32, &k2)]);
        f(t + C3 * h, &ytmp, &mut k3)?;
        lin(&mut ytmp, &y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        f(t + C4 * h, &ytmp, &mut k4)?;
        lin(&mut ytmp, &y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        f(t + C5 * h, &ytmp, &mut k5)?;
        lin(&mut ytmp, &y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let t_new = if last { t_end } else { t + h };
        f(t_new, &ytmp, &mut k6)?;
        lin(&mut ynew, &y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        f(t_new, &ynew, &mut k7)?;
        stats.evaluations += 6;

        for i in 0..n {
            err[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
        }
        let e = weighted_rms(&err, &y, &ynew, opts);
        if !e.is_finite() {
            return Err(Error::NonFinite.into());
        }
        let fac11 = e.powf(expo);
        let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        let mut h_new = h / fac;

        if e <= 1.0 {
            fac_old = e.max(1e-4);
            stats.accepted += 1;
            for i in 0..n {
                let ydiff = ynew[i] - y[i];
                let bspl = k1[i] * h - ydiff;
                cont[i] = [
                    y[i],
                    ydiff,
                    bspl,
                    ydiff - k7[i] * h - bspl,
                    (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * h,
                ];
            }
            let t_old = t;
            t = t_new;
            while next < t_out.len() && (t_out[next] <= t || last) {
                let s = ((t_out[next] - t_old) / h).clamp(0.0, 1.0);
                let s1 = 1.0 - s;
                if s == 1.0 {
                    out.push(ynew.clone());
                } else {
                    out.push(cont.iter().map(|r| r[0] + (r[1] + (r[2] + (r[3] + r[4] * s1) * s) * s1) * s).collect());
                }
                next += 1;
            }
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            if last || next == t_out.len() {
                return Ok((out, stats));
            }
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
        } else {
            h_new = h / (1.0 / FAC_MIN).min(fac11 / SAFETY);
            stats.rejected += 1;
            last_rejected = true;
        }
        h = h_new.min(h_max);
    }
}

#[allow(clippy::too_many_arguments)]
fn initial_step<F, E>(
    f: &mut F,
    t: f64,
    y: &[Complex64],
    f0: &[Complex64],
    h_max: f64,
    opts: &OdeOptions,
    ytmp: &mut [Complex64],
    f1: &mut [Complex64],
) -> Result<f64, E>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]) -> Result<(), E>,
{
    let n = y.len().max(1) as f64;
    let sk: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.norm()).collect();
    let dnf = (f0.iter().zip(&sk).map(|(v, s)| (v.norm() / s).powi(2)).sum::<f64>() / n).sqrt();
    let dny = (y.iter().zip(&sk).map(|(v, s)| (v.norm() / s).powi(2)).sum::<f64>() / n).sqrt();
    let mut h = if dnf <= 1e-5 || dny <= 1e-5 { 1e-6 } else { 0.01 * dny / dnf };
    h = h.min(h_max);
    for i in 0..y.len() {
        ytmp[i] = y[i] + f0[i] * h;
    }
    f(t + h, ytmp, f1)?;
    let der2 = (f1.iter().zip(f0).zip(&sk).map(|((a, b), s)| ((a - b).norm() / s).powi(2)).sum::<f64>() / n).sqrt() / h;
    let der12 = der2.max(dnf);
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(0.2) };
    Ok((100.0 * h).min(h1).min(h_max))
}
