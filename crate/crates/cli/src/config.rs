//! JSON run configuration and its resolution into core objects.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use redreg_core::propagation::validate_state;
use redreg_core::{BathSpec, Complex64, ComplexMatrix, Norm, Scheme, SystemModel, VSystemParams};
use serde::Deserialize;

use crate::error::CliError;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_SHORT_WINDOW: f64 = 0.5;
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// A complex entry written either as a bare number or as `[re, im]`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexValue> for Complex64 {
    fn from(v: ComplexValue) -> Self {
        match v {
            ComplexValue::Real(re) => Complex64::new(re, 0.0),
            ComplexValue::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    VSystem { omega1: f64, omega2: f64, gamma1: f64, gamma2: f64, mu: f64, omega0: f64 },
    Generic { energies: Vec<f64>, couplings: Vec<Vec<Vec<ComplexValue>>> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BathConfig {
    Lorentzian { gamma: Vec<Vec<f64>>, mu: f64, omega0: f64 },
    Tabulated { tau: Vec<f64>, samples: Vec<Vec<Vec<ComplexValue>>> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Amplitudes(Vec<ComplexValue>),
    Density(Vec<Vec<ComplexValue>>),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_max: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub bath: Option<BathConfig>,
    #[serde(default)]
    pub schemes: Option<Vec<String>>,
    #[serde(default)]
    pub initial_state: Option<InitialState>,
    pub time: TimeGrid,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub norm: Option<String>,
    #[serde(default)]
    pub svg: bool,
    #[serde(default)]
    pub short_window: Option<f64>,
}

/// Command-line values that take precedence over the document.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub norm: Option<String>,
    pub tol: Option<f64>,
    pub schemes: Vec<String>,
    pub svg: bool,
}

/// One entry of the scheme list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Exact,
    Scheme(Scheme),
}

impl Method {
    pub fn name(self) -> String {
        match self {
            Method::Exact => "exact".into(),
            Method::Scheme(s) => s.to_string(),
        }
    }

    /// File-name fragment: `partial-secular:dt=0.5` becomes `partial-secular_dt0.5`.
    pub fn slug(self) -> String {
        self.name().replace(':', "_").replace('=', "")
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim() == "exact" {
            return Ok(Method::Exact);
        }
        s.parse::<Scheme>().map(Method::Scheme).map_err(|e| e.to_string())
    }
}

/// Fully validated run.
#[derive(Debug, Clone)]
pub struct Run {
    pub model: SystemModel,
    pub bath: BathSpec,
    pub vsystem: Option<VSystemParams>,
    /// Explicit scheme list, `None` when the command default applies.
    pub methods: Option<Vec<Method>>,
    pub rho0: ComplexMatrix,
    pub grid: Vec<f64>,
    pub tol: f64,
    pub out: PathBuf,
    pub norm: Norm,
    pub svg: bool,
    pub short_window: f64,
}

fn cfg<E: std::fmt::Display>(context: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Config(format!("{context}: {e}"))
}

fn matrix(rows: &[Vec<ComplexValue>], what: &str) -> Result<ComplexMatrix, CliError> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Config(format!("{what} must be a square matrix")));
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| rows[i][j].into()))
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    serde_json::from_str(text).map_err(cfg("invalid config"))
}

impl RunConfig {
    pub fn resolve(&self, over: &Overrides) -> Result<Run, CliError> {
        let (model, bath, vsystem) = match &self.model {
            &ModelConfig::VSystem { omega1, omega2, gamma1, gamma2, mu, omega0 } => {
                if self.bath.is_some() {
                    return Err(CliError::Config(
                        "a v-system model fixes its own bath; remove the `bath` entry".into(),
                    ));
                }
                let p = VSystemParams { omega1, omega2, gamma1, gamma2, mu, omega0 };
                p.validate().map_err(cfg("model"))?;
                (p.model().map_err(cfg("model"))?, p.bath().map_err(cfg("bath"))?, Some(p))
            }
            ModelConfig::Generic { energies, couplings } => {
                let ops = couplings.iter().map(|c| matrix(c, "coupling")).collect::<Result<Vec<_>, _>>()?;
                let model = SystemModel::new(energies.clone(), ops).map_err(cfg("model"))?;
                let bath = match &self.bath {
                    None => return Err(CliError::Config("a generic model needs a `bath` entry".into())),
                    Some(BathConfig::Lorentzian { gamma, mu, omega0 }) => {
                        let m = gamma.len();
                        if gamma.iter().any(|r| r.len() != m) {
                            return Err(CliError::Config("bath gamma must be a square matrix".into()));
                        }
                        let g = DMatrix::from_fn(m, m, |i, j| gamma[i][j]);
                        BathSpec::lorentzian(g, *mu, *omega0).map_err(cfg("bath"))?
                    }
                    Some(BathConfig::Tabulated { tau, samples }) => {
                        let s = samples.iter().map(|x| matrix(x, "bath sample")).collect::<Result<Vec<_>, _>>()?;
                        BathSpec::tabulated(tau.clone(), s).map_err(cfg("bath"))?
                    }
                };
                if bath.channels() != model.channels() {
                    return Err(CliError::Config(format!(
                        "model has {} coupling channels but the bath has {}",
                        model.channels(),
                        bath.channels()
                    )));
                }
                (model, bath, None)
            }
        };

        let n = model.dim();
        let rho0 = match &self.initial_state {
            None if vsystem.is_some() => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let psi = [0.0, s, s];
                ComplexMatrix::from_fn(3, 3, |k, q| Complex64::new(psi[k] * psi[q], 0.0))
            }
            None => return Err(CliError::Config("`initial_state` is required for a generic model".into())),
            Some(InitialState::Amplitudes(a)) => {
                if a.len() != n {
                    return Err(CliError::Config(format!("initial amplitudes have length {}, expected {n}", a.len())));
                }
                let a: Vec<Complex64> = a.iter().map(|&x| x.into()).collect();
                let norm: f64 = a.iter().map(|x| x.norm_sqr()).sum();
                if !((norm - 1.0).abs() <= NORMALIZATION_TOL) {
                    return Err(CliError::Config(format!("initial amplitudes are not normalized (norm² = {norm})")));
                }
                ComplexMatrix::from_fn(n, n, |k, q| a[k] * a[q].conj())
            }
            Some(InitialState::Density(rows)) => {
                let rho = matrix(rows, "initial density")?;
                if rho.nrows() != n {
                    return Err(CliError::Config(format!(
                        "initial density is {}×{}, expected {n}×{n}",
                        rho.nrows(),
                        rho.nrows()
                    )));
                }
                rho
            }
        };
        validate_state(&rho0, n).map_err(cfg("initial state"))?;

        let TimeGrid { t_max, samples } = self.time;
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(CliError::Config(format!("time.t_max must be finite and > 0, got {t_max}")));
        }
        if samples < 2 {
            return Err(CliError::Config(format!("time.samples must be >= 2, got {samples}")));
        }
        let grid: Vec<f64> = (0..samples).map(|k| t_max * k as f64 / (samples - 1) as f64).collect();

        let tol = over.tol.or(self.tol).unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(CliError::Config(format!("tolerance must be finite and > 0, got {tol}")));
        }
        let names: Option<&[String]> =
            if !over.schemes.is_empty() { Some(&over.schemes) } else { self.schemes.as_deref() };
        let methods = match names {
            None => None,
            Some([]) => return Err(CliError::Config("scheme list is empty".into())),
            Some(list) => {
                let mut out: Vec<Method> = Vec::new();
                for name in list {
                    let m: Method = name.parse().map_err(|e| CliError::Config(format!("scheme list: {e}")))?;
                    if m == Method::Exact && vsystem.is_none() {
                        return Err(CliError::Config("`exact` is only available for the v-system model".into()));
                    }
                    if !out.contains(&m) {
                        out.push(m);
                    }
                }
                Some(out)
            }
        };
        let norm_name = over.norm.as_deref().or(self.norm.as_deref()).unwrap_or("frobenius");
        let norm: Norm = norm_name.parse().map_err(cfg("norm"))?;
        let short_window = self.short_window.unwrap_or(DEFAULT_SHORT_WINDOW);
        if !(short_window > 0.0) || !short_window.is_finite() {
            return Err(CliError::Config(format!("short_window must be finite and > 0, got {short_window}")));
        }
        let out = over.out.clone().or_else(|| self.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
        Ok(Run {
            model,
            bath,
            vsystem,
            methods,
            rho0,
            grid,
            tol,
            out,
            norm,
            svg: over.svg || self.svg,
            short_window: short_window.min(t_max),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "model": {"type": "v-system", "omega1": 1, "omega2": 2, "gamma1": 1, "gamma2": 1, "mu": 4, "omega0": 1.5},
        "time": {"t_max": 10, "samples": 101}
    }"#;

    #[test]
    fn minimal_vsystem_defaults() {
        let run = parse(MINIMAL).unwrap().resolve(&Overrides::default()).unwrap();
        assert_eq!(run.grid.len(), 101);
        assert_eq!(run.grid[100], 10.0);
        assert_eq!(run.tol, DEFAULT_TOL);
        assert_eq!(run.norm, Norm::Frobenius);
        assert!(run.methods.is_none());
        assert!((run.rho0[(1, 2)].re - 0.5).abs() < 1e-15);
        assert_eq!(run.out, PathBuf::from("out"));
    }

    #[test]
    fn overrides_win() {
        let over = Overrides {
            out: Some("elsewhere".into()),
            norm: Some("trace".into()),
            tol: Some(1e-6),
            schemes: vec!["ule".into(), "exact".into(), "ule".into()],
            svg: true,
        };
        let run = parse(MINIMAL).unwrap().resolve(&over).unwrap();
        assert_eq!(run.methods, Some(vec![Method::Scheme(Scheme::Ule), Method::Exact]));
        assert_eq!(run.norm, Norm::Trace);
        assert_eq!(run.tol, 1e-6);
        assert!(run.svg);
        assert_eq!(run.out, PathBuf::from("elsewhere"));
    }

    #[test]
    fn generic_model_with_complex_entries() {
        let text = r#"{
            "model": {"type": "generic", "energies": [0, 1], "couplings": [[[0, 1], [[0, 0], 0]]]},
            "bath": {"type": "lorentzian", "gamma": [[1]], "mu": 2, "omega0": 1},
            "initial_state": {"amplitudes": [0, [0, 1]]},
            "time": {"t_max": 1, "samples": 2}
        }"#;
        let run = parse(text).unwrap().resolve(&Overrides::default()).unwrap();
        assert_eq!(run.model.dim(), 2);
        assert!(run.vsystem.is_none());
        assert_eq!(run.rho0[(1, 1)].re, 1.0);
    }

    #[test]
    fn rejects_invalid_documents() {
        let bad = [
            r#"{"model": {"type": "v-system"}, "time": {"t_max": 1, "samples": 2}}"#,
            r#"{"model": {"type": "v-system", "omega1": 1, "omega2": 2, "gamma1": 1, "gamma2": 1, "mu": 4, "omega0": 1.5}, "time": {"t_max": 0, "samples": 2}}"#,
            r#"{"model": {"type": "v-system", "omega1": 1, "omega2": 2, "gamma1": 1, "gamma2": 1, "mu": 4, "omega0": 1.5}, "time": {"t_max": 1, "samples": 1}}"#,
            r#"{"model": {"type": "v-system", "omega1": 1, "omega2": 2, "gamma1": 1, "gamma2": 1, "mu": 4, "omega0": 1.5}, "time": {"t_max": 1, "samples": 2}, "schemes": ["bogus"]}"#,
            r#"{"model": {"type": "v-system", "omega1": 1, "omega2": 2, "gamma1": 1, "gamma2": 1, "mu": 4, "omega0": 1.5}, "time": {"t_max": 1, "samples": 2}, "initial_state": {"amplitudes": [1, 1, 0]}}"#,
            r#"{"model": {"type": "v-system", "omega1": 1, "omega2": 2, "gamma1": 1, "gamma2": 1, "mu": 4, "omega0": 1.5}, "time": {"t_max": 1, "samples": 2}, "norm": "spectral"}"#,
            r#"{"model": {"type": "v-system", "omega1": 1, "omega2": 2, "gamma1": 1, "gamma2": 1, "mu": 4, "omega0": 1.5}, "time": {"t_max": 1, "samples": 2}, "extra": 1}"#,
            r#"{"model": {"type": "generic", "energies": [0, 1], "couplings": [[[0, 1], [0, 0]]]}, "time": {"t_max": 1, "samples": 2}, "initial_state": {"amplitudes": [1, 0]}}"#,
            r#"{"model": {"type": "generic", "energies": [0, 1], "couplings": [[[0, 1], [0, 0]]]}, "bath": {"type": "lorentzian", "gamma": [[1]], "mu": 2, "omega0": 1}, "time": {"t_max": 1, "samples": 2}, "schemes": ["exact"], "initial_state": {"amplitudes": [1, 0]}}"#,
            "not json",
        ];
        for text in bad {
            let r = parse(text).and_then(|c| c.resolve(&Overrides::default()));
            assert!(matches!(r, Err(CliError::Config(_))), "accepted: {text}");
        }
    }

    #[test]
    fn slugs_are_file_safe() {
        assert_eq!(
            Method::Scheme(Scheme::PartialSecular(redreg_core::CoarseGraining::Auto)).slug(),
            "partial-secular_auto"
        );
        assert_eq!("partial-secular:dt=0.5".parse::<Method>().unwrap().slug(), "partial-secular_dt0.5");
        assert_eq!(Method::Exact.slug(), "exact");
    }
}
