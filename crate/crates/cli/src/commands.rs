//! The `peak`, `run`, `adaptive` and `compare` commands.
//!
//! Each command returns an [`Outcome`] holding the CSV bytes, a few report
//! lines and the process exit status; writing them out is left to the caller.

use hblab_core::recurrence::{peak_time, scan_bound, trajectory_peak};
use hblab_core::restart::{
    adaptive_run_with, compare_policies, run_with_policy, AdaptiveOptions, StopRule,
};
use hblab_core::{Error, RootClassification, SecondOrderRecurrence};

use crate::config::{ConfigError, Experiment, ExperimentConfig, RecurrenceConfig};
use crate::csvio;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    Config = 1,
    Unstable = 2,
    Budget = 3,
    Diverged = 4,
    SelftestFailed = 5,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub status: Status,
    pub csv: Vec<u8>,
    pub report: Vec<String>,
}

/// Iteration count used by `peak` when none is given.
const DEFAULT_PEAK_K: usize = 100;

fn csv_failure(e: csv::Error) -> ConfigError {
    ConfigError(format!("cannot write CSV: {e}"))
}

/// Builds the recurrence described by exactly one of `rho`, `(a1, a2)` or
/// `roots`.
pub fn recurrence_from(cfg: &RecurrenceConfig) -> Result<SecondOrderRecurrence, ConfigError> {
    let given = [cfg.rho.is_some(), cfg.a1.is_some() || cfg.a2.is_some(), cfg.roots.is_some()];
    if given.iter().filter(|&&g| g).count() != 1 {
        return Err(ConfigError(
            "recurrence: give exactly one of `rho`, `a1`/`a2`, `roots`".into(),
        ));
    }
    let finite = |name: &str, v: f64| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ConfigError(format!("recurrence.{name}: must be finite")))
        }
    };
    finite("x0", cfg.x0)?;
    finite("x1", cfg.x1)?;
    if let Some(rho) = cfg.rho {
        return Ok(SecondOrderRecurrence::with_double_root(finite("rho", rho)?, cfg.x0, cfg.x1));
    }
    if let Some(roots) = &cfg.roots {
        let [l1, l2] = roots.as_slice() else {
            return Err(ConfigError("recurrence.roots: expected two roots".into()));
        };
        return Ok(SecondOrderRecurrence::with_real_roots(
            finite("roots", *l1)?,
            finite("roots", *l2)?,
            cfg.x0,
            cfg.x1,
        ));
    }
    match (cfg.a1, cfg.a2) {
        (Some(a1), Some(a2)) => Ok(SecondOrderRecurrence::new(
            finite("a1", a1)?,
            finite("a2", a2)?,
            cfg.x0,
            cfg.x1,
        )),
        _ => Err(ConfigError("recurrence: `a1` and `a2` go together".into())),
    }
}

fn describe_roots(roots: &RootClassification) -> String {
    match *roots {
        RootClassification::Equal { rho } => format!("roots: equal rho={}", csvio::real(rho)),
        RootClassification::RealDistinct { lambda1, lambda2 } => format!(
            "roots: real lambda1={} lambda2={}",
            csvio::real(lambda1),
            csvio::real(lambda2)
        ),
        RootClassification::ComplexPair { modulus, angle } => format!(
            "roots: complex modulus={} angle={}",
            csvio::real(modulus),
            csvio::real(angle)
        ),
    }
}

/// Iterates the recurrence to `k` and reports its peak; double roots in
/// `(0, 1)` also get the envelope analytics.
pub fn peak(cfg: &RecurrenceConfig) -> Result<Outcome, ConfigError> {
    let rec = recurrence_from(cfg)?;
    let roots = rec.characteristic_roots();
    let double = match roots {
        RootClassification::Equal { rho } if rho > 0.0 && rho < 1.0 => Some(rho),
        _ => None,
    };
    let k = match cfg.k {
        Some(0) => return Err(ConfigError("recurrence.k: must be at least 1".into())),
        Some(k) => k,
        None => double.map_or(DEFAULT_PEAK_K, |rho| scan_bound(rho) as usize),
    };
    let xs = rec.iterate(k).map_err(|e| ConfigError(e.to_string()))?;
    let mut csv = Vec::new();
    csvio::write_sequence(&mut csv, &xs).map_err(csv_failure)?;

    let mut report = vec![describe_roots(&roots)];
    if let Some((k_max, v)) = trajectory_peak(&xs) {
        report.push(format!("trajectory_peak k={k_max} abs_x={}", csvio::real(v)));
    }
    if let Some(rho) = double {
        let p = peak_time(rho).map_err(|e| ConfigError(e.to_string()))?;
        report.push(format!("k_continuous={}", csvio::real(p.k_continuous)));
        report.push(format!("k_star={}", p.k_star));
        report.push(format!("peak={}", csvio::real(p.peak)));
        report.push(format!("eta_asymptotic={}", csvio::real(p.eta_asymptotic)));
    }
    let status = if rec.is_stable() {
        Status::Ok
    } else {
        report.push(format!(
            "unstable recurrence: largest root modulus {} is not below 1",
            csvio::real(roots.max_modulus())
        ));
        Status::Unstable
    };
    Ok(Outcome { status, csv, report })
}

/// Fixed-parameter Heavy Ball with the configured restart policy.
pub fn run(exp: &Experiment) -> Result<Outcome, ConfigError> {
    let [policy] = exp.policies.as_slice() else {
        return Err(ConfigError("run takes a single `policy`".into()));
    };
    let obj = exp.problem.objective();
    let result = run_with_policy(
        obj,
        &exp.x0,
        &exp.x1,
        exp.params,
        *policy,
        Some(exp.problem.l()),
        exp.max_iters,
        StopRule::GradNorm(exp.grad_tol),
    );
    let out = match result {
        Ok(out) => out,
        Err(Error::Diverged { .. }) => {
            return Ok(Outcome {
                status: Status::Diverged,
                csv: Vec::new(),
                report: vec!["diverged: initial pair is not finite".into()],
            })
        }
        Err(e) => return Err(ConfigError(e.to_string())),
    };
    let mut csv = Vec::new();
    csvio::write_trajectory(&mut csv, &out.trajectory, &exp.fields).map_err(csv_failure)?;
    let last = out.trajectory.len() - 1;
    let status = if out.diverged {
        Status::Diverged
    } else if out.converged {
        Status::Ok
    } else {
        Status::Budget
    };
    let report = vec![format!(
        "policy={} iterations={last} restarts={} converged={} diverged={}",
        policy, out.restarts, out.converged, out.diverged
    )];
    Ok(Outcome { status, csv, report })
}

/// Adaptive Heavy Ball with `L` doubling.
pub fn adaptive(exp: &Experiment) -> Result<Outcome, ConfigError> {
    let cfg = exp
        .adaptive
        .as_ref()
        .ok_or_else(|| ConfigError("adaptive: missing [adaptive] table with L0".into()))?;
    if !exp.is_standard_init() {
        return Err(ConfigError(
            "adaptive: the method starts from x0 = x1; use `standard-from` or worst-case-en".into(),
        ));
    }
    let opts = AdaptiveOptions {
        l0: cfg.l0,
        eps: cfg.eps,
        max_iters: exp.max_iters,
        grad_tol: exp.grad_tol,
        ..AdaptiveOptions::new(cfg.l0)
    };
    let out = match adaptive_run_with(exp.problem.objective(), &exp.x0, &opts) {
        Ok(out) => out,
        Err(e @ (Error::Diverged { .. } | Error::TooManyDoublings { .. })) => {
            return Ok(Outcome {
                status: Status::Diverged,
                csv: Vec::new(),
                report: vec![format!("diverged: {e}")],
            })
        }
        Err(e) => return Err(ConfigError(e.to_string())),
    };
    let mut csv = Vec::new();
    csvio::write_trajectory(&mut csv, &out.trajectory, &exp.fields).map_err(csv_failure)?;
    let status = if out.converged { Status::Ok } else { Status::Budget };
    let report = vec![format!(
        "doublings={} iterations={} L_estimate={} converged={}",
        out.doublings,
        out.trajectory.len() - 1,
        csvio::real(out.l_estimate),
        out.converged
    )];
    Ok(Outcome { status, csv, report })
}

/// One summary row per policy, ordered by policy name.
pub fn compare(exp: &Experiment) -> Result<Outcome, ConfigError> {
    if !exp.is_standard_init() {
        return Err(ConfigError(
            "compare: policies are compared from x0 = x1; use `standard-from` or worst-case-en".into(),
        ));
    }
    let rows = compare_policies(
        exp.problem.objective(),
        &exp.x0,
        exp.params,
        Some(exp.problem.l()),
        &exp.policies,
        exp.max_iters,
    )
    .map_err(|e| ConfigError(e.to_string()))?;
    let mut csv = Vec::new();
    csvio::write_summary(&mut csv, &rows).map_err(csv_failure)?;
    let status = if rows.iter().any(|r| r.diverged) {
        Status::Diverged
    } else if rows.iter().any(|r| r.iterations_to_tol.is_none()) {
        Status::Budget
    } else {
        Status::Ok
    };
    let report = rows
        .iter()
        .map(|r| {
            format!(
                "{}: iterations_to_tol={} restarts={}",
                r.policy,
                r.iterations_to_tol.map_or("-".to_string(), |k| k.to_string()),
                r.restarts
            )
        })
        .collect();
    Ok(Outcome { status, csv, report })
}

/// Picks the command a config describes: `peak` for a `[recurrence]`
/// table, `adaptive` for an `[adaptive]` table, `compare` for a `policies`
/// list and `run` otherwise.
pub fn infer(cfg: &ExperimentConfig, seed: Option<u64>) -> Result<Outcome, ConfigError> {
    if let Some(rec) = &cfg.recurrence {
        return peak(rec);
    }
    let exp = cfg.validate(seed)?;
    if cfg.adaptive.is_some() {
        adaptive(&exp)
    } else if cfg.policies.is_some() {
        compare(&exp)
    } else {
        run(&exp)
    }
}
