//! Experiment configuration files.
//!
//! A config is a TOML document with the tables `problem`, `method`, `init`,
//! `run`, `adaptive`, `outputs` and `recurrence`, plus the top-level keys
//! `policy` and `policies`. Parsing only checks the syntax and the key
//! names; [`ExperimentConfig::validate`] checks everything else and builds
//! the objects a command needs.

use std::fmt;
use std::path::{Path, PathBuf};

use hblab_core::lyapunov::{theorem2_feasible_params, theorem3_feasible_params};
use hblab_core::vector;
use hblab_core::{DiagonalQuadratic, HbParams, NonconvexPl, Objective, RestartPolicy};
use serde::Deserialize;

/// Columns a trajectory CSV may contain, in canonical order.
pub const ALL_FIELDS: [&str; 9] = [
    "k", "x_norm", "f", "V", "grad_norm", "event", "alpha", "beta", "L_estimate",
];

const DEFAULT_FIELDS: [&str; 5] = ["k", "x_norm", "f", "V", "event"];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub policy: Option<String>,
    pub policies: Option<Vec<String>>,
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub method: MethodConfig,
    pub init: Option<InitConfig>,
    #[serde(default)]
    pub run: RunConfig,
    pub adaptive: Option<AdaptiveConfig>,
    #[serde(default)]
    pub outputs: OutputsConfig,
    pub recurrence: Option<RecurrenceConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: String,
    pub eigenvalues: Option<Vec<f64>>,
    pub mu: Option<f64>,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub dim: Option<usize>,
    pub spectrum: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ParamsSpec {
    Named(String),
    Explicit { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub params: ParamsSpec,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            params: ParamsSpec::Named("optimal".into()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub x0: Vec<f64>,
    pub x1: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    #[serde(rename = "standard-from")]
    pub standard_from: Option<Vec<f64>>,
    pub pair: Option<PairConfig>,
    pub named: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
}

fn default_max_iters() -> usize {
    10_000
}

fn default_grad_tol() -> f64 {
    hblab_core::heavy_ball::DEFAULT_GRAD_TOL
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            max_iters: default_max_iters(),
            grad_tol: default_grad_tol(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveConfig {
    #[serde(rename = "L0")]
    pub l0: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_eps() -> f64 {
    hblab_core::restart::DEFAULT_EPS
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    pub csv_path: Option<PathBuf>,
    pub fields: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecurrenceConfig {
    pub rho: Option<f64>,
    pub a1: Option<f64>,
    pub a2: Option<f64>,
    pub roots: Option<Vec<f64>>,
    pub x0: f64,
    pub x1: f64,
    pub k: Option<usize>,
}

/// A validated problem with the constants the methods need.
#[derive(Debug)]
pub enum Problem {
    Quadratic(DiagonalQuadratic),
    Nonconvex(NonconvexPl),
}

impl Problem {
    pub fn objective(&self) -> &dyn Objective {
        match self {
            Problem::Quadratic(q) => q,
            Problem::Nonconvex(f) => f,
        }
    }

    pub fn l(&self) -> f64 {
        match self {
            Problem::Quadratic(q) => q.l(),
            Problem::Nonconvex(_) => NonconvexPl::L_CERTIFIED,
        }
    }

    pub fn mu(&self) -> f64 {
        match self {
            Problem::Quadratic(q) => q.mu(),
            Problem::Nonconvex(f) => f.mu_certified(),
        }
    }
}

/// Everything `run`, `adaptive` and `compare` need.
#[derive(Debug)]
pub struct Experiment {
    pub problem: Problem,
    pub params: HbParams,
    pub x0: Vec<f64>,
    pub x1: Vec<f64>,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub policies: Vec<RestartPolicy>,
    pub adaptive: Option<AdaptiveConfig>,
    pub fields: Vec<String>,
    pub csv_path: Option<PathBuf>,
}

impl Experiment {
    pub fn is_standard_init(&self) -> bool {
        self.x0 == self.x1
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    /// Checks the config and builds the experiment. `seed` overrides
    /// `problem.seed`.
    pub fn validate(&self, seed: Option<u64>) -> Result<Experiment, ConfigError> {
        let problem = self
            .problem
            .as_ref()
            .ok_or_else(|| ConfigError("missing [problem] table".into()))?;
        let problem = build_problem(problem, seed)?;
        let params = build_params(&self.method.params, &problem)?;
        let init = self
            .init
            .as_ref()
            .ok_or_else(|| ConfigError("missing [init] table".into()))?;
        let (x0, x1) = build_init(init, &problem)?;
        if self.run.max_iters == 0 {
            return err("run.max_iters: must be at least 1");
        }
        if !(self.run.grad_tol >= 0.0 && self.run.grad_tol.is_finite()) {
            return err("run.grad_tol: must be a nonnegative number");
        }
        if let Some(a) = &self.adaptive {
            if !(a.l0 > 0.0 && a.l0.is_finite()) {
                return err(format!("adaptive.L0: must be positive, got {}", a.l0));
            }
            if !(a.eps > 0.0 && a.eps.is_finite()) {
                return err(format!("adaptive.eps: must be positive, got {}", a.eps));
            }
        }
        Ok(Experiment {
            problem,
            params,
            x0,
            x1,
            max_iters: self.run.max_iters,
            grad_tol: self.run.grad_tol,
            policies: self.build_policies()?,
            adaptive: self.adaptive.clone(),
            fields: self.build_fields()?,
            csv_path: self.outputs.csv_path.clone(),
        })
    }

    fn build_policies(&self) -> Result<Vec<RestartPolicy>, ConfigError> {
        let names: Vec<&str> = match (&self.policy, &self.policies) {
            (Some(_), Some(_)) => return err("give either `policy` or `policies`, not both"),
            (Some(p), None) => vec![p.as_str()],
            (None, Some(ps)) => ps.iter().map(String::as_str).collect(),
            (None, None) => vec!["none"],
        };
        if names.is_empty() {
            return err("policies: list must not be empty");
        }
        names
            .into_iter()
            .map(|n| n.parse().map_err(|e| ConfigError(format!("policy: {e}"))))
            .collect()
    }

    fn build_fields(&self) -> Result<Vec<String>, ConfigError> {
        let fields: Vec<String> = match &self.outputs.fields {
            Some(f) => f.clone(),
            None => DEFAULT_FIELDS.iter().map(|s| s.to_string()).collect(),
        };
        if fields.is_empty() {
            return err("outputs.fields: must not be empty");
        }
        for (i, f) in fields.iter().enumerate() {
            if !ALL_FIELDS.contains(&f.as_str()) {
                return err(format!(
                    "outputs.fields: unknown field `{f}` (allowed: {})",
                    ALL_FIELDS.join(", ")
                ));
            }
            if fields[..i].contains(f) {
                return err(format!("outputs.fields: `{f}` listed twice"));
            }
        }
        Ok(fields)
    }
}

fn build_problem(p: &ProblemConfig, seed: Option<u64>) -> Result<Problem, ConfigError> {
    match p.kind.as_str() {
        "diagonal-quadratic" => {
            let q = match (&p.eigenvalues, p.mu, p.l, p.dim) {
                (Some(_), Some(_), _, _) | (Some(_), _, Some(_), _) | (Some(_), _, _, Some(_)) => {
                    return err("problem: give either `eigenvalues` or `mu`/`L`/`dim`, not both")
                }
                (Some(eig), None, None, None) => {
                    if eig.is_empty() {
                        return err("problem.eigenvalues: must not be empty");
                    }
                    DiagonalQuadratic::new(eig.clone())
                        .map_err(|e| ConfigError(format!("problem.eigenvalues: {e}")))?
                }
                (None, Some(mu), Some(l), Some(dim)) => {
                    let rule = p.spectrum.as_deref().unwrap_or("log-uniform");
                    if rule != "log-uniform" {
                        return err(format!(
                            "problem.spectrum: unknown rule `{rule}` (expected log-uniform)"
                        ));
                    }
                    if dim == 0 {
                        return err("problem.dim: must be at least 1");
                    }
                    let seed = seed.or(p.seed).unwrap_or(0);
                    DiagonalQuadratic::log_uniform(mu, l, dim, seed)
                        .map_err(|e| ConfigError(format!("problem: {e}")))?
                }
                _ => return err("problem: a diagonal quadratic needs `eigenvalues` or all of `mu`, `L`, `dim`"),
            };
            Ok(Problem::Quadratic(q))
        }
        "nonconvex-pl" => {
            if p.eigenvalues.is_some() || p.mu.is_some() || p.l.is_some() || p.spectrum.is_some() {
                return err("problem: nonconvex-pl takes no spectrum keys");
            }
            if p.dim.is_some_and(|d| d != 1) {
                return err("problem.dim: nonconvex-pl is one-dimensional");
            }
            Ok(Problem::Nonconvex(NonconvexPl::new()))
        }
        other => err(format!(
            "problem.kind: unknown kind `{other}` (expected diagonal-quadratic or nonconvex-pl)"
        )),
    }
}

fn build_params(spec: &ParamsSpec, problem: &Problem) -> Result<HbParams, ConfigError> {
    let wrap = |e: hblab_core::Error| ConfigError(format!("method.params: {e}"));
    match spec {
        ParamsSpec::Explicit { alpha, beta } => HbParams::new(*alpha, *beta).map_err(wrap),
        ParamsSpec::Named(name) => match name.as_str() {
            "optimal" => HbParams::optimal(problem.mu(), problem.l()).map_err(wrap),
            "theorem2-feasible" => theorem2_feasible_params(problem.l()).map_err(wrap),
            "theorem3-feasible" => theorem3_feasible_params(problem.l(), problem.mu()).map_err(wrap),
            other => err(format!(
                "method.params: unknown preset `{other}` (expected optimal, theorem2-feasible, theorem3-feasible or {{alpha, beta}})"
            )),
        },
    }
}

fn build_init(init: &InitConfig, problem: &Problem) -> Result<(Vec<f64>, Vec<f64>), ConfigError> {
    let dim = problem.objective().dim();
    let given = [init.standard_from.is_some(), init.pair.is_some(), init.named.is_some()];
    if given.iter().filter(|&&g| g).count() != 1 {
        return err("init: give exactly one of `standard-from`, `pair`, `named`");
    }
    let check = |name: &str, x: &[f64]| -> Result<(), ConfigError> {
        if x.len() != dim {
            return err(format!("init.{name}: expected {dim} entries, got {}", x.len()));
        }
        if !vector::all_finite(x) {
            return err(format!("init.{name}: entries must be finite"));
        }
        Ok(())
    };
    if let Some(x) = &init.standard_from {
        check("standard-from", x)?;
        return Ok((x.clone(), x.clone()));
    }
    if let Some(p) = &init.pair {
        check("pair.x0", &p.x0)?;
        check("pair.x1", &p.x1)?;
        return Ok((p.x0.clone(), p.x1.clone()));
    }
    let name = init.named.as_deref().unwrap_or_default();
    let Problem::Quadratic(q) = problem else {
        return err("init.named: named initializations need a diagonal-quadratic problem");
    };
    match name {
        "worst-case-e1" => {
            let e1 = vector::basis(dim, q.min_index());
            Ok((e1.iter().map(|v| -v).collect(), e1))
        }
        "worst-case-en" => {
            let en = vector::basis(dim, q.max_index());
            Ok((en.clone(), en))
        }
        "zeros-ones" => Ok((vec![0.0; dim], vec![1.0; dim])),
        other => err(format!(
            "init.named: unknown initialization `{other}` (expected worst-case-e1, worst-case-en or zeros-ones)"
        )),
    }
}
