//! Restart policies and the adaptive Heavy Ball method.
//!
//! A restart clears the momentum memory: the current iterate becomes the new
//! starting point with `x_prev = x_curr`, so the following step is a plain
//! gradient step. The adaptive method keeps a Lipschitz estimate `L̂`,
//! derives `α = 1/(2L̂)` and `β = 0.9·√(1 − αL̂)` from it, and doubles `L̂`
//! whenever a candidate step increases the Lyapunov function or violates the
//! ε-relaxed descent inequality.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_dim, Error, Result};
use crate::heavy_ball::{is_divergent, step_unchecked, Event, HbParams, ParamsEntry, Trajectory, DEFAULT_GRAD_TOL};
use crate::lyapunov::{theorem2_feasible_params, LyapunovConfig};
use crate::objective::Objective;
use crate::vector;

/// Default slack `ε` in the relaxed descent inequality.
pub const DEFAULT_EPS: f64 = 1e-12;

/// Upper limit on Lipschitz-estimate doublings in [`adaptive_run`].
pub const MAX_DOUBLINGS: u32 = 60;

/// Suboptimality target used by [`compare_policies`].
pub const COMPARE_GAP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RestartPolicy {
    NoRestart,
    /// Restart at every iteration index divisible by `period`.
    FixedInterval { period: usize },
    /// Restart when `f(x_k) > f(x_{k−1})`.
    FunctionScheme,
    /// Restart when `∇f(x_{k−1})ᵀ(x_k − x_{k−1}) > 0`.
    GradientScheme,
    /// Restart when `V(x_k) > V(x_{k−1})`.
    LyapunovScheme,
}

impl RestartPolicy {
    pub fn fixed(period: usize) -> Result<Self> {
        if period < 2 {
            return Err(Error::InvalidArgument(format!(
                "restart period must be at least 2, got {period}"
            )));
        }
        Ok(RestartPolicy::FixedInterval { period })
    }

    pub fn name(&self) -> String {
        match self {
            RestartPolicy::NoRestart => "none".into(),
            RestartPolicy::FixedInterval { period } => format!("fixed-{period}"),
            RestartPolicy::FunctionScheme => "function".into(),
            RestartPolicy::GradientScheme => "gradient".into(),
            RestartPolicy::LyapunovScheme => "lyapunov".into(),
        }
    }
}

impl fmt::Display for RestartPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for RestartPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(RestartPolicy::NoRestart),
            "function" => Ok(RestartPolicy::FunctionScheme),
            "gradient" => Ok(RestartPolicy::GradientScheme),
            "lyapunov" => Ok(RestartPolicy::LyapunovScheme),
            other => match other.strip_prefix("fixed-").map(str::parse::<usize>) {
                Some(Ok(period)) => RestartPolicy::fixed(period),
                _ => Err(Error::InvalidArgument(format!(
                    "unknown restart policy `{other}` (expected none, fixed-N, function, gradient or lyapunov)"
                ))),
            },
        }
    }
}

/// Evaluates the restart predicate of `policy` for the transition
/// `x_prev → x_k` at iteration index `k`.
///
/// `lyapunov` carries `(V_k, V_{k−1})` and is required by
/// [`RestartPolicy::LyapunovScheme`].
pub fn should_restart(
    policy: RestartPolicy,
    obj: &dyn Objective,
    x_k: &[f64],
    x_prev: &[f64],
    lyapunov: Option<(f64, f64)>,
    k: usize,
) -> Result<bool> {
    check_dim(obj.dim(), x_k.len())?;
    check_dim(obj.dim(), x_prev.len())?;
    Ok(match policy {
        RestartPolicy::NoRestart => false,
        RestartPolicy::FixedInterval { period } => k.is_multiple_of(period),
        RestartPolicy::FunctionScheme => obj.value(x_k) > obj.value(x_prev),
        RestartPolicy::GradientScheme => {
            let g = obj.gradient(x_prev);
            vector::dot(&g, &vector::sub(x_k, x_prev)) > 0.0
        }
        RestartPolicy::LyapunovScheme => {
            let (v_k, v_prev) =
                lyapunov.ok_or(Error::Undefined("Lyapunov scheme needs V values"))?;
            v_k > v_prev
        }
    })
}

/// Clears the momentum memory: returns `(x_curr, x_curr)`.
pub fn apply_restart(x_curr: &[f64], _x_prev: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (x_curr.to_vec(), x_curr.to_vec())
}

/// `f(x_k) ≤ f(x_prev) + ⟨∇f(x_prev), x_k − x_prev⟩ + (L/2)‖x_k − x_prev‖² + ε/2`.
pub fn descent_check_eps(obj: &dyn Objective, x_k: &[f64], x_prev: &[f64], l: f64, eps: f64) -> Result<bool> {
    check_dim(obj.dim(), x_k.len())?;
    check_dim(obj.dim(), x_prev.len())?;
    if !(eps > 0.0) {
        return Err(Error::out_of_range("eps", eps, "must be positive"));
    }
    let d = vector::sub(x_k, x_prev);
    let g = obj.gradient(x_prev);
    let model = obj.value(x_prev) + vector::dot(&g, &d) + 0.5 * l * vector::norm_sq(&d) + 0.5 * eps;
    Ok(obj.value(x_k) <= model)
}

/// Merit value watched by [`RestartPolicy::LyapunovScheme`]:
/// `f − f* + max(0, (1 − αL)/(2α))·‖x_k − x_prev‖²`.
///
/// Inside `α < 1/L` this is the Lyapunov function; beyond it the distance
/// term is dropped and the scheme watches `f − f*`.
pub fn monitored_value(obj: &dyn Objective, x_k: &[f64], x_prev: &[f64], params: HbParams, l: f64) -> f64 {
    let coef = ((1.0 - params.alpha * l) / (2.0 * params.alpha)).max(0.0);
    obj.value(x_k) - obj.f_star().unwrap_or(0.0) + coef * vector::dist_sq(x_k, x_prev)
}

/// When a policy-driven run stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// `‖∇f(x_k)‖ ≤ tol`.
    GradNorm(f64),
    /// `f(x_k) − f* ≤ tol` (`f* = 0` when undeclared).
    Gap(f64),
}

impl StopRule {
    fn reached(&self, obj: &dyn Objective, rec: &crate::heavy_ball::Record) -> bool {
        match *self {
            StopRule::GradNorm(tol) => rec.grad_norm <= tol,
            StopRule::Gap(tol) => rec.f - obj.f_star().unwrap_or(0.0) <= tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRun {
    pub trajectory: Trajectory,
    pub converged: bool,
    pub restarts: usize,
    /// The run stopped at a non-finite or exploding iterate, which is not
    /// recorded.
    pub diverged: bool,
}

/// Heavy Ball with fixed parameters and a restart policy.
///
/// `l` is the curvature constant used for `V`; when `α < 1/L` the Lyapunov
/// value is recorded for every iterate with a predecessor. Iteration stops
/// when `stop` is met (checked from `k = 1`) or at index `max_iters`.
#[allow(clippy::too_many_arguments)]
pub fn run_with_policy(
    obj: &dyn Objective,
    x0: &[f64],
    x1: &[f64],
    params: HbParams,
    policy: RestartPolicy,
    l: Option<f64>,
    max_iters: usize,
    stop: StopRule,
) -> Result<PolicyRun> {
    check_dim(obj.dim(), x0.len())?;
    check_dim(obj.dim(), x1.len())?;
    if max_iters == 0 {
        return Err(Error::InvalidArgument("iteration count must be at least 1".into()));
    }
    if policy == RestartPolicy::LyapunovScheme && l.is_none() {
        return Err(Error::Undefined("Lyapunov scheme needs a curvature constant"));
    }
    if is_divergent(x0) {
        return Err(Error::InvalidArgument("initial point is not finite".into()));
    }
    if is_divergent(x1) {
        return Err(Error::Diverged { last_finite: 0 });
    }
    let lyap = l.and_then(|l| LyapunovConfig::for_objective(obj, params, l).ok());

    let mut traj = Trajectory::default();
    traj.params_history.push(ParamsEntry {
        k: 0,
        params,
        l_estimate: l,
    });
    traj.push(obj, x0.to_vec(), Event::None);
    traj.push(obj, x1.to_vec(), Event::None);
    let monitor = |a: &[f64], b: &[f64]| l.map(|l| monitored_value(obj, a, b, params, l));
    if lyap.is_some() {
        traj.records[1].v = monitor(x1, x0);
    }

    let (mut cur, mut prev) = (x1.to_vec(), x0.to_vec());
    let mut restarts = 0;
    let mut converged = stop.reached(obj, &traj.records[1]);
    let mut k = 1;
    while !converged && k < max_iters {
        k += 1;
        let next = step_unchecked(obj, &cur, &prev, params);
        if is_divergent(&next) {
            return Ok(PolicyRun {
                trajectory: traj,
                converged: false,
                restarts,
                diverged: true,
            });
        }
        let v_pair = match (monitor(&next, &cur), monitor(&cur, &prev)) {
            (Some(a), Some(b)) => Some((a, b)),
            _ => None,
        };
        let fire = should_restart(policy, obj, &next, &cur, v_pair, k)?;
        let event = if fire { Event::Restart } else { Event::None };
        traj.push(obj, next.clone(), event);
        if lyap.is_some() {
            traj.records[k].v = v_pair.map(|p| p.0);
        }
        if fire {
            restarts += 1;
            let (c, p) = apply_restart(&next, &cur);
            cur = c;
            prev = p;
        } else {
            prev = std::mem::replace(&mut cur, next);
        }
        converged = stop.reached(obj, &traj.records[k]);
    }
    Ok(PolicyRun {
        trajectory: traj,
        converged,
        restarts,
        diverged: false,
    })
}

/// One row of a policy comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub policy: String,
    /// First index with `f − f* ≤ 1e-8`.
    pub iterations_to_tol: Option<usize>,
    pub restarts: usize,
    pub final_f: f64,
    pub diverged: bool,
}

/// Runs every policy from the standard initialization `x1 = x0` with the same
/// parameters and reports one row per policy, ordered by policy name.
pub fn compare_policies(
    obj: &dyn Objective,
    x0: &[f64],
    params: HbParams,
    l: Option<f64>,
    policies: &[RestartPolicy],
    max_iters: usize,
) -> Result<Vec<PolicySummary>> {
    let mut rows = Vec::with_capacity(policies.len());
    for &policy in policies {
        let run = run_with_policy(obj, x0, x0, params, policy, l, max_iters, StopRule::Gap(COMPARE_GAP_TOL))?;
        rows.push(PolicySummary {
            policy: policy.name(),
            iterations_to_tol: run.converged.then(|| run.trajectory.len() - 1),
            restarts: run.restarts,
            final_f: if run.diverged {
                f64::NAN
            } else {
                run.trajectory.last().map_or(f64::NAN, |r| r.f)
            },
            diverged: run.diverged,
        });
    }
    rows.sort_by(|a, b| a.policy.cmp(&b.policy));
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub l0: f64,
    pub eps: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub max_doublings: u32,
}

impl AdaptiveOptions {
    pub fn new(l0: f64) -> Self {
        Self {
            l0,
            eps: DEFAULT_EPS,
            max_iters: 1_000_000,
            grad_tol: DEFAULT_GRAD_TOL,
            max_doublings: MAX_DOUBLINGS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveOutcome {
    pub trajectory: Trajectory,
    pub doublings: u32,
    pub l_estimate: f64,
    pub converged: bool,
}

/// Adaptive Heavy Ball with Lyapunov monitoring and `L` doubling.
pub fn adaptive_run(obj: &dyn Objective, x0: &[f64], l0: f64, eps: f64, max_iters: usize) -> Result<AdaptiveOutcome> {
    adaptive_run_with(
        obj,
        x0,
        &AdaptiveOptions {
            eps,
            max_iters,
            ..AdaptiveOptions::new(l0)
        },
    )
}

/// [`adaptive_run`] with every knob exposed.
///
/// Starts from `x1 = x0`. For each candidate step from `(x_k, x_{k−1})` the
/// Lyapunov values `V(candidate, x_k)` and `V(x_k, x_{k−1})` are compared
/// under the current estimate `L̂`, and the descent inequality with slack
/// `ε/2` is checked. If either test fails the candidate is discarded, `L̂`
/// doubles, `(α, β)` are re-derived and the method restarts from `x_k` with
/// cleared momentum; otherwise the candidate is accepted. Accepted records
/// carry the `V` they were accepted with, so the recorded sequence is
/// non-increasing.
pub fn adaptive_run_with(obj: &dyn Objective, x0: &[f64], opts: &AdaptiveOptions) -> Result<AdaptiveOutcome> {
    check_dim(obj.dim(), x0.len())?;
    if !(opts.l0 > 0.0 && opts.l0.is_finite()) {
        return Err(Error::out_of_range("L0", opts.l0, "must be positive"));
    }
    if !(opts.eps > 0.0) {
        return Err(Error::out_of_range("eps", opts.eps, "must be positive"));
    }
    if opts.max_iters == 0 {
        return Err(Error::InvalidArgument("iteration count must be at least 1".into()));
    }
    if is_divergent(x0) {
        return Err(Error::InvalidArgument("initial point is not finite".into()));
    }

    let mut l_est = opts.l0;
    let mut params = theorem2_feasible_params(l_est)?;
    let mut cfg = LyapunovConfig::for_objective(obj, params, l_est)?;
    let mut traj = Trajectory::default();
    traj.params_history.push(ParamsEntry {
        k: 0,
        params,
        l_estimate: Some(l_est),
    });
    traj.push(obj, x0.to_vec(), Event::None);
    traj.push(obj, x0.to_vec(), Event::None);
    let v = |cfg: &LyapunovConfig, a: &[f64], b: &[f64]| {
        obj.value(a) - cfg.f_star + cfg.coefficient() * vector::dist_sq(a, b)
    };
    traj.records[1].v = Some(v(&cfg, x0, x0));

    let (mut cur, mut prev) = (x0.to_vec(), x0.to_vec());
    let mut doublings = 0u32;
    let mut pending = Event::None;
    let mut converged = traj.records[1].grad_norm <= opts.grad_tol;
    while !converged && traj.len() <= opts.max_iters {
        let candidate = step_unchecked(obj, &cur, &prev, params);
        let v_cur = v(&cfg, &cur, &prev);
        let rejected = !vector::all_finite(&candidate)
            || v(&cfg, &candidate, &cur) > v_cur
            || !descent_check_eps(obj, &candidate, &cur, l_est, opts.eps)?;
        if rejected {
            doublings += 1;
            if doublings > opts.max_doublings {
                return Err(Error::TooManyDoublings {
                    limit: opts.max_doublings,
                });
            }
            l_est *= 2.0;
            params = theorem2_feasible_params(l_est)?;
            cfg = LyapunovConfig::for_objective(obj, params, l_est)?;
            prev = cur.clone();
            pending = Event::LDoubled;
            traj.params_history.push(ParamsEntry {
                k: traj.len(),
                params,
                l_estimate: Some(l_est),
            });
            continue;
        }
        if is_divergent(&candidate) {
            return Err(Error::Diverged {
                last_finite: traj.len() - 1,
            });
        }
        let v_next = v(&cfg, &candidate, &cur);
        traj.push(obj, candidate.clone(), std::mem::take(&mut pending));
        let last = traj.records.len() - 1;
        traj.records[last].v = Some(v_next);
        converged = traj.records[last].grad_norm <= opts.grad_tol;
        prev = std::mem::replace(&mut cur, candidate);
    }
    Ok(AdaptiveOutcome {
        trajectory: traj,
        doublings,
        l_estimate: l_est,
        converged,
    })
}
