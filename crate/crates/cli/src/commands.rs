use std::fs;
use std::path::{Path, PathBuf};

use redreg_core::choi::{delta_curve, time_average};
use redreg_core::linalg;
use redreg_core::propagation::{evolve_with, propagator_with, Generator, OdeOptions};
use redreg_core::reference::ExactAmplitudeSolution;
use redreg_core::{Complex64, ComplexMatrix, Error, Norm, PropagatorMatrix, Scheme, VSystemParams};

use crate::config::{Method, Run};
use crate::csv::{num, Table};
use crate::error::CliError;
use crate::svg::{Plot, Series, DASHES, PALETTE};

/// Human-readable one-line description per scheme name.
pub const SCHEME_HELP: [(&str, &str); 6] = [
    ("redfield-raw", "unmodified time-dependent Redfield generator (may violate positivity)"),
    ("nearest-psd", "χ(t) replaced by its nearest PSD matrix in Frobenius norm at every time"),
    ("partial-secular[:dt=<float>|auto]", "entries damped by sinc(Δω Δt/2); auto picks the smallest Δt giving PSD χ"),
    ("secular", "only entries with equal Bohr frequencies kept (Markov limit)"),
    ("ule", "geometric-mean coefficients from √J(ω) (Markov limit)"),
    ("exact", "closed-form V-system solution (v-system model only)"),
];

fn numerical(method: Method, t_max: f64, err: Error) -> CliError {
    let at = match err {
        Error::StepSizeUnderflow { t } | Error::TooManySteps { t, .. } => format!("t = {t}"),
        _ => format!("t in [0, {t_max}]"),
    };
    CliError::Numerical(format!("scheme {} failed at {at}: {err}", method.name()))
}

fn exact_solution(p: &VSystemParams) -> Result<ExactAmplitudeSolution, CliError> {
    ExactAmplitudeSolution::new(p).map_err(|e| match e {
        Error::DegenerateRoots { .. } => CliError::DegenerateExact(e.to_string()),
        other => CliError::Numerical(format!("exact solution: {other}")),
    })
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn header_comments(table: &mut Table, method: Method, tol: f64, dt: Option<f64>) {
    table.comment(format!("scheme={}", method.name()));
    if method != Method::Exact {
        table.comment(format!("tol={}", num(tol)));
    }
    if let Some(dt) = dt {
        table.comment(format!("partial-secular dt={}", num(dt)));
    }
}

/// States on the output grid plus the coarse-graining time, if any.
struct Computed {
    method: Method,
    states: Vec<ComplexMatrix>,
    dt: Option<f64>,
}

fn trajectory(run: &Run, method: Method) -> Result<Computed, CliError> {
    let t_max = *run.grid.last().expect("grid has >= 2 points");
    match method {
        Method::Exact => {
            let p = run.vsystem.as_ref().ok_or_else(|| CliError::Config("`exact` needs the v-system model".into()))?;
            let sol = exact_solution(p)?;
            let states = run
                .grid
                .iter()
                .map(|&t| sol.channel(t).apply(&run.rho0))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| numerical(method, t_max, e))?;
            Ok(Computed { method, states, dt: None })
        }
        Method::Scheme(s) => {
            let g = Generator::new(&run.model, &run.bath, s).map_err(|e| numerical(method, t_max, e))?;
            let traj = evolve_with(&g, &run.rho0, &run.grid, &OdeOptions::with_tol(run.tol))
                .map_err(|e| numerical(method, t_max, e))?;
            Ok(Computed { method, states: traj.states, dt: traj.coarse_graining_time })
        }
    }
}

fn trajectory_table(run: &Run, c: &Computed) -> Result<Table, CliError> {
    let n = run.model.dim();
    let mut header = vec!["t".to_string()];
    for k in 0..n {
        for q in 0..n {
            header.push(format!("re_rho_{k}{q}"));
            header.push(format!("im_rho_{k}{q}"));
        }
    }
    header.push("trace_dev".into());
    header.push("min_eig".into());
    let mut table = Table::new(header);
    header_comments(&mut table, c.method, run.tol, c.dt);
    for (t, rho) in run.grid.iter().zip(&c.states) {
        let mut row = vec![*t];
        for k in 0..n {
            for q in 0..n {
                row.push(rho[(k, q)].re);
                row.push(rho[(k, q)].im);
            }
        }
        row.push((linalg::trace(rho) - Complex64::new(1.0, 0.0)).norm());
        let m = linalg::min_eigenvalue(&linalg::hermitian_part(rho)).map_err(|e| numerical(c.method, *t, e))?;
        row.push(m);
        table.push_numbers(&row);
    }
    Ok(table)
}

fn default_simulate_methods(run: &Run) -> Vec<Method> {
    let mut m = Vec::new();
    if run.vsystem.is_some() {
        m.push(Method::Exact);
    }
    m.extend(Scheme::STUDY.into_iter().map(Method::Scheme));
    m
}

/// Trajectory CSV per scheme (plus the exact solution for the V-system).
pub fn simulate(run: &Run) -> Result<Vec<PathBuf>, CliError> {
    let mut methods = run.methods.clone().unwrap_or_else(|| default_simulate_methods(run));
    if run.vsystem.is_some() && !methods.contains(&Method::Exact) {
        methods.insert(0, Method::Exact);
    }
    prepare_dir(&run.out)?;
    let mut written = Vec::new();
    let mut computed = Vec::new();
    for &m in &methods {
        let c = trajectory(run, m)?;
        let path = run.out.join(format!("trajectory_{}.csv", m.slug()));
        trajectory_table(run, &c)?.write(&path)?;
        written.push(path);
        computed.push(c);
    }
    if run.svg {
        let path = run.out.join("populations.svg");
        write_text(&path, &populations_plot(run, &computed).render())?;
        written.push(path);
    }
    Ok(written)
}

fn populations_plot(run: &Run, computed: &[Computed]) -> Plot {
    let n = run.model.dim();
    let mut series = Vec::new();
    for (i, c) in computed.iter().enumerate() {
        for k in 1..n {
            series.push(Series {
                label: format!("{} ρ{k}{k}", c.method.name()),
                color: PALETTE[i % PALETTE.len()],
                dash: DASHES[(k - 1) % DASHES.len()],
                points: run.grid.iter().zip(&c.states).map(|(&t, r)| (t, r[(k, k)].re)).collect(),
            });
        }
    }
    Plot { title: "Excited-state populations".into(), x_label: "t".into(), y_label: "ρ_kk".into(), series }
}

/// One row of the summary table.
#[derive(Debug, Clone)]
pub struct DistanceSummary {
    pub method: Method,
    pub short_frobenius: f64,
    pub short_trace: f64,
    pub full_frobenius: f64,
    pub full_trace: f64,
    pub rank: usize,
}

impl DistanceSummary {
    fn short(&self, norm: Norm) -> f64 {
        match norm {
            Norm::Frobenius => self.short_frobenius,
            Norm::Trace => self.short_trace,
        }
    }
}

/// δ(t) CSV per scheme plus a summary of time averages.
pub fn choi_distance(run: &Run) -> Result<(Vec<PathBuf>, Vec<DistanceSummary>), CliError> {
    let p = run
        .vsystem
        .as_ref()
        .ok_or_else(|| CliError::Config("choi-distance needs the v-system model (exact channel required)".into()))?;
    let sol = exact_solution(p)?;
    let methods = run.methods.clone().unwrap_or_else(|| Scheme::REGULARIZED.into_iter().map(Method::Scheme).collect());
    let t_max = *run.grid.last().expect("grid has >= 2 points");
    if run.grid.iter().take_while(|&&t| t <= run.short_window).count() < 2 {
        return Err(CliError::Config(format!(
            "short_window {} is shorter than the grid spacing {}",
            run.short_window, run.grid[1]
        )));
    }
    let exact: Vec<PropagatorMatrix> = run.grid.iter().map(|&t| sol.channel(t)).collect();
    prepare_dir(&run.out)?;
    let mut written = Vec::new();
    let mut summary = Vec::new();
    let mut curves = Vec::new();
    for &m in &methods {
        let (maps, dt) = match m {
            Method::Exact => (exact.clone(), None),
            Method::Scheme(s) => {
                let g = Generator::new(&run.model, &run.bath, s).map_err(|e| numerical(m, t_max, e))?;
                let maps = propagator_with(&g, 0.0, &run.grid, &OdeOptions::with_tol(run.tol))
                    .map_err(|e| numerical(m, t_max, e))?;
                (maps, g.coarse_graining_time())
            }
        };
        let df = delta_curve(&maps, &exact, Norm::Frobenius).map_err(|e| numerical(m, t_max, e))?;
        let dtr = delta_curve(&maps, &exact, Norm::Trace).map_err(|e| numerical(m, t_max, e))?;
        let mut table = Table::new(vec!["t".into(), "delta_frobenius".into(), "delta_trace".into()]);
        header_comments(&mut table, m, run.tol, dt);
        for ((t, a), b) in run.grid.iter().zip(&df).zip(&dtr) {
            table.push_numbers(&[*t, *a, *b]);
        }
        let path = run.out.join(format!("delta_{}.csv", m.slug()));
        table.write(&path)?;
        written.push(path);
        let avg = |v: &[f64], end: f64| time_average(&run.grid, v, end).map_err(|e| numerical(m, t_max, e));
        summary.push(DistanceSummary {
            method: m,
            short_frobenius: avg(&df, run.short_window)?,
            short_trace: avg(&dtr, run.short_window)?,
            full_frobenius: avg(&df, t_max)?,
            full_trace: avg(&dtr, t_max)?,
            rank: 0,
        });
        curves.push((
            m,
            match run.norm {
                Norm::Frobenius => df,
                Norm::Trace => dtr,
            },
        ));
    }
    let mut order: Vec<usize> = (0..summary.len()).collect();
    order.sort_by(|&a, &b| summary[a].short(run.norm).total_cmp(&summary[b].short(run.norm)));
    for (r, &i) in order.iter().enumerate() {
        summary[i].rank = r + 1;
    }

    let mut table = Table::new(
        ["scheme", "short_mean_frobenius", "short_mean_trace", "full_mean_frobenius", "full_mean_trace", "rank"]
            .map(String::from)
            .to_vec(),
    );
    table.comment(format!("short_window={}", num(run.short_window)));
    table.comment(format!("t_max={}", num(t_max)));
    table.comment(format!("rank_norm={}", run.norm));
    for s in &summary {
        table.push(vec![
            s.method.name(),
            num(s.short_frobenius),
            num(s.short_trace),
            num(s.full_frobenius),
            num(s.full_trace),
            s.rank.to_string(),
        ]);
    }
    let path = run.out.join("delta_summary.csv");
    table.write(&path)?;
    written.push(path);

    if run.svg {
        let series = curves
            .iter()
            .enumerate()
            .map(|(i, (m, d))| Series {
                label: m.name(),
                color: PALETTE[i % PALETTE.len()],
                dash: DASHES[0],
                points: run.grid.iter().cloned().zip(d.iter().cloned()).collect(),
            })
            .collect();
        let plot = Plot {
            title: format!("Distance from the exact dynamics ({} norm)", run.norm),
            x_label: "t".into(),
            y_label: "δ(t)".into(),
            series,
        };
        let path = run.out.join(format!("delta_{}.svg", run.norm));
        write_text(&path, &plot.render())?;
        written.push(path);
    }
    Ok((written, summary))
}
