//! GKSL dynamics under a (regularized) Redfield generator.
//!
//! Density matrices are vectorized row-major, `vec(ρ)[k·N + q] = ρ_kq`,
//! matching the collective index of the Kossakowski matrix. A propagator is
//! the N²×N² matrix `Λ` with `vec(ρ(t)) = Λ vec(ρ(s))`; column `(k, q)` is
//! `vec(Λ(E_kq))`.

pub mod ode;

use std::borrow::Cow;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, ComplexVector, I, ZERO};
use crate::model::{BathSpec, SystemModel, Time};
use crate::redfield::{kossakowski, KossakowskiData};
use crate::reference::VSystemParams;
use crate::regularizers::{self, CoarseGraining, Scheme, AUTO_PSD_TOL};

pub use ode::{OdeOptions, OdeStats};

/// Tolerance for accepting an initial density matrix.
pub const STATE_TOL: f64 = 1e-10;

pub fn vectorize(rho: &ComplexMatrix) -> ComplexVector {
    let n = rho.nrows();
    ComplexVector::from_fn(n * rho.ncols(), |i, _| rho[(i / n, i % n)])
}

pub fn unvectorize(v: &[Complex64], n: usize) -> Result<ComplexMatrix> {
    if v.len() != n * n {
        return Err(Error::DimensionMismatch(format!("vector of length {} is not {n}x{n}", v.len())));
    }
    Ok(ComplexMatrix::from_row_slice(n, n, v))
}

/// `−i[H, ρ] + Σ_ij χ_ij (E_i ρ E_j† − ½{E_j†E_i, ρ})` with `H = H_S + H_LS`,
/// precomputed for repeated application.
#[derive(Debug, Clone)]
pub struct GeneratorTerms {
    n: usize,
    /// `−i(H − iK/2)` with `K = Σ_ij χ_ij E_j†E_i`, so the non-jump part is `Bρ + ρB†`.
    b: ComplexMatrix,
    /// Non-zero jump entries `(k, n, q, m, χ_(kq),(nm))`.
    jumps: Vec<(usize, usize, usize, usize, Complex64)>,
}

impl GeneratorTerms {
    pub fn new(model: &SystemModel, data: &KossakowskiData) -> Self {
        let n = model.dim();
        let mut k = ComplexMatrix::zeros(n, n);
        let mut jumps = Vec::new();
        for i in 0..n * n {
            for j in 0..n * n {
                let c = data.chi[(i, j)];
                if c == ZERO {
                    continue;
                }
                let (kk, q) = (i / n, i % n);
                let (nn, m) = (j / n, j % n);
                jumps.push((kk, nn, q, m, c));
                if kk == nn {
                    k[(m, q)] += c;
                }
            }
        }
        let h = model.hamiltonian() + &data.lamb_shift;
        let b = (h - k * Complex64::new(0.0, 0.5)) * (-I);
        Self { n, b, jumps }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `out = L(ρ)` on row-major slices of length N².
    pub fn apply_into(&self, rho: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        for a in 0..n {
            for c in 0..n {
                let mut acc = ZERO;
                for l in 0..n {
                    acc += self.b[(a, l)] * rho[l * n + c] + rho[a * n + l] * self.b[(c, l)].conj();
                }
                out[a * n + c] = acc;
            }
        }
        for &(k, nn, q, m, c) in &self.jumps {
            out[k * n + nn] += c * rho[q * n + m];
        }
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.nrows() != self.n || rho.ncols() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "state is {}x{}, generator acts on {}x{}",
                rho.nrows(),
                rho.ncols(),
                self.n,
                self.n
            )));
        }
        let v: Vec<Complex64> = vectorize(rho).iter().copied().collect();
        let mut out = vec![ZERO; v.len()];
        self.apply_into(&v, &mut out);
        unvectorize(&out, self.n)
    }

    /// Dense N²×N² superoperator in the row-major vectorization.
    pub fn superoperator(&self) -> ComplexMatrix {
        let d = self.n * self.n;
        let mut s = ComplexMatrix::zeros(d, d);
        let mut e = vec![ZERO; d];
        let mut out = vec![ZERO; d];
        for j in 0..d {
            e[j] = Complex64::new(1.0, 0.0);
            self.apply_into(&e, &mut out);
            s.set_column(j, &ComplexVector::from_column_slice(&out));
            e[j] = ZERO;
        }
        s
    }
}

/// Generator of one scheme for a given model and bath.
///
/// Time-independent schemes are assembled once from the Markov limit; for
/// the automatic partial-secular scheme the coarse-graining time is searched
/// once, at `t = ∞`.
#[derive(Debug, Clone)]
pub struct Generator<'a> {
    model: &'a SystemModel,
    bath: &'a BathSpec,
    scheme: Scheme,
    fixed: Option<GeneratorTerms>,
    coarse_graining_time: Option<f64>,
}

impl<'a> Generator<'a> {
    pub fn new(model: &'a SystemModel, bath: &'a BathSpec, scheme: Scheme) -> Result<Self> {
        if model.channels() != bath.channels() {
            return Err(Error::ChannelMismatch { system: model.channels(), bath: bath.channels() });
        }
        let mut coarse_graining_time = None;
        let fixed = if scheme.is_time_dependent() {
            None
        } else {
            let data = match scheme {
                Scheme::PartialSecular(cg) => {
                    let data = kossakowski(model, bath, Time::Infinite)?;
                    let dt = match cg {
                        CoarseGraining::Fixed(dt) => dt,
                        CoarseGraining::Auto => regularizers::coarse_graining_time_for(&data, model, AUTO_PSD_TOL)?,
                    };
                    coarse_graining_time = Some(dt);
                    regularizers::partial_secular(&data, dt, model)?
                }
                _ => regularizers::apply(scheme, model, bath, Time::Infinite)?,
            };
            Some(GeneratorTerms::new(model, &data))
        };
        Ok(Self { model, bath, scheme, fixed, coarse_graining_time })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn model(&self) -> &SystemModel {
        self.model
    }

    /// Coarse-graining time in use, for the partial-secular scheme.
    pub fn coarse_graining_time(&self) -> Option<f64> {
        self.coarse_graining_time
    }

    pub fn terms_at(&self, t: f64) -> Result<Cow<'_, GeneratorTerms>> {
        match &self.fixed {
            Some(terms) => Ok(Cow::Borrowed(terms)),
            None => {
                let data = regularizers::apply(self.scheme, self.model, self.bath, Time::Finite(t))?;
                Ok(Cow::Owned(GeneratorTerms::new(self.model, &data)))
            }
        }
    }

    pub fn rhs(&self, rho: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
        self.terms_at(t)?.apply(rho)
    }
}

/// `dρ/dt` at time `t` under `scheme`.
pub fn lgks_rhs(
    rho: &ComplexMatrix,
    t: f64,
    model: &SystemModel,
    bath: &BathSpec,
    scheme: Scheme,
) -> Result<ComplexMatrix> {
    Generator::new(model, bath, scheme)?.rhs(rho, t)
}

/// States on a time grid with per-point diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ComplexMatrix>,
    /// `|Tr ρ − 1|`.
    pub trace_deviation: Vec<f64>,
    /// Smallest eigenvalue of the Hermitian part of `ρ`.
    pub min_eigenvalue: Vec<f64>,
    pub coarse_graining_time: Option<f64>,
    pub stats: OdeStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Dynamical map from `start` to `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorMatrix {
    pub start: f64,
    pub time: f64,
    /// N²×N² matrix acting on row-major `vec(ρ)`.
    pub matrix: ComplexMatrix,
}

impl PropagatorMatrix {
    pub fn identity(n: usize, t: f64) -> Self {
        Self { start: t, time: t, matrix: linalg::identity(n * n) }
    }

    /// System dimension N.
    pub fn dim(&self) -> usize {
        (self.matrix.nrows() as f64).sqrt().round() as usize
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.dim();
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::DimensionMismatch(format!("map acts on {n}x{n}, got {}x{}", rho.nrows(), rho.ncols())));
        }
        let v = &self.matrix * vectorize(rho);
        unvectorize(v.as_slice(), n)
    }
}

fn validate_grid(start: f64, t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite);
    }
    if t_grid[0] < start || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(format!("time grid must be ascending and start at or after {start}")));
    }
    Ok(())
}

/// Check that `rho` is a density matrix of dimension `n` within [`STATE_TOL`].
pub fn validate_state(rho: &ComplexMatrix, n: usize) -> Result<()> {
    linalg::ensure_square(rho)?;
    linalg::ensure_finite(rho)?;
    if rho.nrows() != n {
        return Err(Error::DimensionMismatch(format!("state is {}x{}, system has N = {n}", rho.nrows(), rho.ncols())));
    }
    if linalg::hermiticity_defect(rho) > STATE_TOL {
        return Err(Error::InvalidArgument("initial state is not Hermitian".into()));
    }
    let tr = linalg::trace(rho).re;
    if (tr - 1.0).abs() > STATE_TOL {
        return Err(Error::NotNormalized(tr));
    }
    let lmin = linalg::min_eigenvalue(rho)?;
    if lmin < -STATE_TOL {
        return Err(Error::NotPsd { eigenvalue: lmin });
    }
    Ok(())
}

/// Integrate `ρ(0) = rho0` and sample at `t_grid` (ascending, `>= 0`).
/// `tol` is used as both the relative and absolute tolerance.
pub fn evolve(
    rho0: &ComplexMatrix,
    t_grid: &[f64],
    model: &SystemModel,
    bath: &BathSpec,
    scheme: Scheme,
    tol: f64,
) -> Result<Trajectory> {
    let generator = Generator::new(model, bath, scheme)?;
    evolve_with(&generator, rho0, t_grid, &OdeOptions::with_tol(tol))
}

pub fn evolve_with(
    generator: &Generator<'_>,
    rho0: &ComplexMatrix,
    t_grid: &[f64],
    opts: &OdeOptions,
) -> Result<Trajectory> {
    let n = generator.model().dim();
    validate_state(rho0, n)?;
    validate_grid(0.0, t_grid)?;
    let y0: Vec<Complex64> = vectorize(rho0).iter().copied().collect();
    let (ys, stats) = ode::integrate(
        |t, y: &[Complex64], dy: &mut [Complex64]| -> Result<()> {
            generator.terms_at(t)?.apply_into(y, dy);
            Ok(())
        },
        0.0,
        &y0,
        t_grid,
        opts,
    )?;
    let mut states = Vec::with_capacity(ys.len());
    let mut trace_deviation = Vec::with_capacity(ys.len());
    let mut min_eigenvalue = Vec::with_capacity(ys.len());
    for y in &ys {
        let rho = unvectorize(y, n)?;
        trace_deviation.push((linalg::trace(&rho) - Complex64::new(1.0, 0.0)).norm());
        min_eigenvalue.push(linalg::min_eigenvalue(&linalg::hermitian_part(&rho))?);
        states.push(rho);
    }
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
        trace_deviation,
        min_eigenvalue,
        coarse_graining_time: generator.coarse_graining_time(),
        stats,
    })
}

/// `Λ(t, 0)` for every `t` in `t_grid`.
pub fn propagator(
    t_grid: &[f64],
    model: &SystemModel,
    bath: &BathSpec,
    scheme: Scheme,
    tol: f64,
) -> Result<Vec<PropagatorMatrix>> {
    propagator_between(0.0, t_grid, model, bath, scheme, tol)
}

/// `Λ(t, s)` for every `t` in `t_grid` (all `>= s`), with `Λ(s, s) = 1`.
pub fn propagator_between(
    s: f64,
    t_grid: &[f64],
    model: &SystemModel,
    bath: &BathSpec,
    scheme: Scheme,
    tol: f64,
) -> Result<Vec<PropagatorMatrix>> {
    let generator = Generator::new(model, bath, scheme)?;
    propagator_with(&generator, s, t_grid, &OdeOptions::with_tol(tol))
}

pub fn propagator_with(
    generator: &Generator<'_>,
    s: f64,
    t_grid: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<PropagatorMatrix>> {
    if !s.is_finite() || s < 0.0 {
        return Err(Error::InvalidArgument(format!("start time must be finite and >= 0, got {s}")));
    }
    validate_grid(s, t_grid)?;
    let n = generator.model().dim();
    let d = n * n;
    // column j of Λ occupies y[j·d .. (j+1)·d]
    let mut y0 = vec![ZERO; d * d];
    for j in 0..d {
        y0[j * d + j] = Complex64::new(1.0, 0.0);
    }
    let (ys, _) = ode::integrate(
        |t, y: &[Complex64], dy: &mut [Complex64]| -> Result<()> {
            let terms = generator.terms_at(t)?;
            for (col, dcol) in y.chunks_exact(d).zip(dy.chunks_exact_mut(d)) {
                terms.apply_into(col, dcol);
            }
            Ok(())
        },
        s,
        &y0,
        t_grid,
        opts,
    )?;
    Ok(t_grid
        .iter()
        .zip(ys)
        .map(|(&t, y)| PropagatorMatrix { start: s, time: t, matrix: ComplexMatrix::from_column_slice(d, d, &y) })
        .collect())
}

/// Component form of the raw Redfield equation for the V-system, written
/// out independently of the generic assembler:
///
/// ```text
/// d_αβ = Γ_αβ(ω_β) + Γ*_βα(ω_α),   h_αβ = [Γ_αβ(ω_β) − Γ*_βα(ω_α)] / 2i,
/// φ_αβ = iδ_αβ ω_α + i h_αβ − d_αβ / 2.
/// ```
///
/// Only the upper triangle is computed; the lower one follows by Hermiticity,
/// so `rho` must be Hermitian.
pub fn vsystem_rhs(rho: &ComplexMatrix, t: f64, params: &VSystemParams) -> Result<ComplexMatrix> {
    if rho.nrows() != 3 || rho.ncols() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "V-system state must be 3x3, got {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let bath = params.bath()?;
    let w = [params.omega1, params.omega2];
    let time = Time::Finite(t);
    let mut gam = [[ZERO; 2]; 2]; // gam[a][b][k] = Γ_ab(ω_k)
    let mut gk = [[[ZERO; 2]; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for k in 0..2 {
                gk[a][b][k] = bath.gamma_half_fourier(a, b, w[k], time)?.value();
            }
        }
    }
    let mut d = [[ZERO; 2]; 2];
    let mut phi = [[ZERO; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            d[a][b] = gk[a][b][b] + gk[b][a][a].conj();
            gam[a][b] = (gk[a][b][b] - gk[b][a][a].conj()) / (I * 2.0);
            let delta = if a == b { I * w[a] } else { ZERO };
            phi[a][b] = delta + I * gam[a][b] - d[a][b] * 0.5;
        }
    }
    let r = |k: usize, q: usize| rho[(k, q)];
    let mut out = ComplexMatrix::zeros(3, 3);
    out[(0, 0)] = d[0][0] * r(1, 1) + d[1][0] * r(1, 2) + d[0][1] * r(2, 1) + d[1][1] * r(2, 2);
    out[(0, 1)] = phi[0][0] * r(0, 1) + phi[1][0] * r(0, 2);
    out[(0, 2)] = phi[0][1] * r(0, 1) + phi[1][1] * r(0, 2);
    out[(1, 1)] = -d[0][0] * r(1, 1) + phi[1][0] * r(1, 2) + phi[1][0].conj() * r(2, 1);
    out[(1, 2)] = phi[0][1] * r(1, 1) + (phi[0][0].conj() + phi[1][1]) * r(1, 2) + phi[1][0].conj() * r(2, 2);
    out[(2, 2)] = phi[0][1].conj() * r(1, 2) + phi[0][1] * r(2, 1) - d[1][1] * r(2, 2);
    for k in 0..3 {
        for q in 0..k {
            out[(k, q)] = out[(q, k)].conj();
        }
    }
    Ok(out)
}
