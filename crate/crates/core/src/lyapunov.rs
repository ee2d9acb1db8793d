//! Lyapunov functions for the Heavy Ball method.
//!
//! Discrete case: `V_k = f(x_k) − f* + (1 − αL)/(2α)·‖x_k − x_{k−1}‖²` is
//! non-increasing whenever `0 < α < 1/L` and `0 ≤ β ≤ √(1 − αL)`, and decays
//! like `(1 − αμ)^k` under the PL inequality when
//! `β ≤ √((1 − αL)(1 − αμ))`.
//!
//! Continuous case: for `ẍ + aẋ + b∇f(x) = 0` the energy
//! `f(x) + ‖ẋ‖²/(2b)` has derivative `−(a/b)‖ẋ‖² ≤ 0`.

use crate::error::{check_dim, Error, Result};
use crate::heavy_ball::{HbParams, Trajectory};
use crate::objective::Objective;
use crate::recurrence::pow_k;
use crate::vector;

/// Momentum used by the feasible-parameter constructors, as a fraction of
/// the largest admissible value.
pub const FEASIBLE_BETA_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovConfig {
    pub alpha: f64,
    pub beta: f64,
    pub l: f64,
    pub mu: Option<f64>,
    pub f_star: f64,
    /// Set when the objective has no known optimum and `f* = 0` was assumed.
    /// Differences of `V` stay meaningful; absolute values do not.
    pub shifted: bool,
}

impl LyapunovConfig {
    pub fn new(alpha: f64, beta: f64, l: f64, mu: Option<f64>, f_star: f64) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::out_of_range("L", l, "must be positive"));
        }
        if !(alpha > 0.0 && alpha < 1.0 / l) {
            return Err(Error::out_of_range("alpha", alpha, "must lie in (0, 1/L)"));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::out_of_range("beta", beta, "must be nonnegative"));
        }
        if let Some(m) = mu {
            if !(m > 0.0 && m <= l) {
                return Err(Error::out_of_range("mu", m, "must lie in (0, L]"));
            }
        }
        Ok(Self {
            alpha,
            beta,
            l,
            mu,
            f_star,
            shifted: false,
        })
    }

    /// Config for `obj`, taking `f*` and `μ` from the objective when declared
    /// (`μ` is dropped if it exceeds `l`).
    pub fn for_objective(obj: &dyn Objective, params: HbParams, l: f64) -> Result<Self> {
        let mu = obj.mu_hint().filter(|&m| m <= l);
        let mut cfg = Self::new(params.alpha, params.beta, l, mu, obj.f_star().unwrap_or(0.0))?;
        cfg.shifted = obj.f_star().is_none();
        Ok(cfg)
    }

    /// `(1 − αL)/(2α)`.
    pub fn coefficient(&self) -> f64 {
        (1.0 - self.alpha * self.l) / (2.0 * self.alpha)
    }

    pub fn params(&self) -> HbParams {
        HbParams {
            alpha: self.alpha,
            beta: self.beta,
        }
    }
}

/// `V = f(x_k) − f* + (1 − αL)/(2α)·‖x_k − x_prev‖²`.
pub fn lyapunov_value(obj: &dyn Objective, x_k: &[f64], x_prev: &[f64], cfg: &LyapunovConfig) -> Result<f64> {
    check_dim(obj.dim(), x_k.len())?;
    check_dim(obj.dim(), x_prev.len())?;
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0 / cfg.l) {
        return Err(Error::out_of_range("alpha", cfg.alpha, "must lie in (0, 1/L)"));
    }
    Ok(obj.value(x_k) - cfg.f_star + cfg.coefficient() * vector::dist_sq(x_k, x_prev))
}

/// Fills `V_k` for every record with a predecessor (`k ≥ 1`).
pub fn annotate(traj: &mut Trajectory, obj: &dyn Objective, cfg: &LyapunovConfig) -> Result<()> {
    for k in 1..traj.records.len() {
        let v = lyapunov_value(obj, &traj.records[k].x, &traj.records[k - 1].x, cfg)?;
        traj.records[k].v = Some(v);
    }
    Ok(())
}

/// `0 < α < 1/L` and `0 ≤ β ≤ √(1 − αL)`.
pub fn theorem2_region(alpha: f64, beta: f64, l: f64) -> bool {
    alpha > 0.0 && alpha < 1.0 / l && beta >= 0.0 && beta <= (1.0 - alpha * l).sqrt()
}

/// `0 < α < 1/L` and `0 ≤ β ≤ √((1 − αL)(1 − αμ))`.
pub fn theorem3_region(alpha: f64, beta: f64, l: f64, mu: f64) -> Result<bool> {
    if !(mu > 0.0) {
        return Err(Error::out_of_range("mu", mu, "must be positive"));
    }
    if mu > l {
        return Err(Error::out_of_range("mu", mu, "must not exceed L"));
    }
    Ok(alpha > 0.0
        && alpha < 1.0 / l
        && beta >= 0.0
        && beta <= ((1.0 - alpha * l) * (1.0 - alpha * mu)).sqrt())
}

/// `α = 1/(2L)` with 90% of the largest momentum allowed for monotone `V`.
pub fn theorem2_feasible_params(l: f64) -> Result<HbParams> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::out_of_range("L", l, "must be positive"));
    }
    let alpha = 0.5 / l;
    HbParams::new(alpha, FEASIBLE_BETA_FRACTION * (1.0 - alpha * l).sqrt())
}

/// `α = 1/(2L)` with 90% of the largest momentum allowed for the linear rate.
pub fn theorem3_feasible_params(l: f64, mu: f64) -> Result<HbParams> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::out_of_range("L", l, "must be positive"));
    }
    if !(mu > 0.0 && mu <= l) {
        return Err(Error::out_of_range("mu", mu, "must lie in (0, L]"));
    }
    let alpha = 0.5 / l;
    HbParams::new(
        alpha,
        FEASIBLE_BETA_FRACTION * ((1.0 - alpha * l) * (1.0 - alpha * mu)).sqrt(),
    )
}

/// `V0·(1 − αμ)^k`.
pub fn rate_bound(v0: f64, alpha: f64, mu: f64, k: u64) -> Result<f64> {
    let am = alpha * mu;
    if !(am > 0.0 && am < 1.0) {
        return Err(Error::out_of_range("alpha*mu", am, "must lie in (0, 1)"));
    }
    if !(v0 >= 0.0) {
        return Err(Error::out_of_range("V0", v0, "must be nonnegative"));
    }
    Ok(v0 * pow_k(1.0 - am, k))
}

/// State of `ẋ = y, ẏ = −a·y − b·∇f(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

impl ContinuousState {
    pub fn new(x: Vec<f64>, y: Vec<f64>, a: f64, b: f64) -> Result<Self> {
        check_dim(x.len(), y.len())?;
        if !(a > 0.0) {
            return Err(Error::out_of_range("a", a, "must be positive"));
        }
        if !(b > 0.0) {
            return Err(Error::out_of_range("b", b, "must be positive"));
        }
        Ok(Self { x, y, a, b })
    }

    /// Largest step accepted by [`simulate_continuous`]:
    /// `min(0.1/a, 0.5/√(bL))`.
    pub fn max_step(&self, l: f64) -> f64 {
        (0.1 / self.a).min(0.5 / (self.b * l).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousSample {
    pub t: f64,
    pub state: ContinuousState,
    pub energy: f64,
}

/// `f(x) + ‖y‖²/(2b)`.
pub fn continuous_energy(obj: &dyn Objective, state: &ContinuousState) -> Result<f64> {
    check_dim(obj.dim(), state.x.len())?;
    check_dim(obj.dim(), state.y.len())?;
    if !(state.b > 0.0) {
        return Err(Error::out_of_range("b", state.b, "must be positive"));
    }
    Ok(obj.value(&state.x) + vector::norm_sq(&state.y) / (2.0 * state.b))
}

fn derivative(obj: &dyn Objective, a: f64, b: f64, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let g = obj.gradient(x);
    let dy = y.iter().zip(&g).map(|(yi, gi)| -a * yi - b * gi).collect();
    (y.to_vec(), dy)
}

fn offset(base: &[f64], dir: &[f64], h: f64) -> Vec<f64> {
    base.iter().zip(dir).map(|(b, d)| b + h * d).collect()
}

/// Fixed-step classical RK4 integration of the heavy-ball ODE over `[0, t_end]`.
///
/// Takes `⌈t_end/dt⌉` steps and samples the energy after each, starting with
/// the initial state at `t = 0`. `dt` may not exceed
/// [`ContinuousState::max_step`] for the objective's declared `L`.
pub fn simulate_continuous(
    obj: &dyn Objective,
    state0: &ContinuousState,
    dt: f64,
    t_end: f64,
) -> Result<Vec<ContinuousSample>> {
    check_dim(obj.dim(), state0.x.len())?;
    check_dim(obj.dim(), state0.y.len())?;
    let l = obj
        .lipschitz_hint()
        .ok_or(Error::Undefined("step bound needs a Lipschitz constant"))?;
    let dt_max = state0.max_step(l);
    if !(dt > 0.0 && dt <= dt_max) {
        return Err(Error::out_of_range("dt", dt, "must lie in (0, min(0.1/a, 0.5/sqrt(bL))]"));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::out_of_range("T", t_end, "must be positive"));
    }
    let (a, b) = (state0.a, state0.b);
    let steps = (t_end / dt).ceil() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut state = state0.clone();
    out.push(ContinuousSample {
        t: 0.0,
        energy: continuous_energy(obj, &state)?,
        state: state.clone(),
    });
    for j in 1..=steps {
        let (x, y) = (&state.x, &state.y);
        let (k1x, k1y) = derivative(obj, a, b, x, y);
        let (k2x, k2y) = derivative(obj, a, b, &offset(x, &k1x, 0.5 * dt), &offset(y, &k1y, 0.5 * dt));
        let (k3x, k3y) = derivative(obj, a, b, &offset(x, &k2x, 0.5 * dt), &offset(y, &k2y, 0.5 * dt));
        let (k4x, k4y) = derivative(obj, a, b, &offset(x, &k3x, dt), &offset(y, &k3y, dt));
        let combine = |base: &[f64], k1: &[f64], k2: &[f64], k3: &[f64], k4: &[f64]| -> Vec<f64> {
            (0..base.len())
                .map(|i| base[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect()
        };
        let nx = combine(x, &k1x, &k2x, &k3x, &k4x);
        let ny = combine(y, &k1y, &k2y, &k3y, &k4y);
        if !vector::all_finite(&nx) || !vector::all_finite(&ny) {
            return Err(Error::Diverged { last_finite: j - 1 });
        }
        state = ContinuousState { x: nx, y: ny, a, b };
        out.push(ContinuousSample {
            t: j as f64 * dt,
            energy: continuous_energy(obj, &state)?,
            state: state.clone(),
        });
    }
    Ok(out)
}

/// Largest single-step energy increase along a simulation (0 if none).
pub fn energy_violation(samples: &[ContinuousSample]) -> f64 {
    samples
        .windows(2)
        .map(|w| w[1].energy - w[0].energy)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heavy_ball::{run, run_standard};
    use crate::objective::{DiagonalQuadratic, NonconvexPl};
    use approx::assert_relative_eq;

    #[test]
    fn lyapunov_value_examples() {
        let q = DiagonalQuadratic::new(vec![1.0]).unwrap();
        let cfg = LyapunovConfig::new(0.5, 0.3, 1.0, None, 0.0).unwrap();
        // V = 0.5 + (1 - 0.5)/(2·0.5)·1 = 1
        assert_relative_eq!(lyapunov_value(&q, &[1.0], &[0.0], &cfg).unwrap(), 1.0);
        assert_eq!(lyapunov_value(&q, &[0.0], &[0.0], &cfg).unwrap(), 0.0);

        let q2 = DiagonalQuadratic::new(vec![1.0, 9.0]).unwrap();
        let cfg2 = LyapunovConfig::for_objective(&q2, theorem2_feasible_params(9.0).unwrap(), 9.0).unwrap();
        let x0 = [0.4, -1.0];
        assert_eq!(lyapunov_value(&q2, &x0, &x0, &cfg2).unwrap(), q2.value(&x0));

        let bad = LyapunovConfig { alpha: 1.0, ..cfg };
        assert!(lyapunov_value(&q, &[1.0], &[0.0], &bad).is_err());
        assert!(LyapunovConfig::new(1.0, 0.0, 1.0, None, 0.0).is_err());
    }

    #[test]
    fn region_examples() {
        let l = 4.0;
        assert!(theorem2_region(1.0 / (2.0 * l), 0.5f64.sqrt(), l));
        assert!(!theorem2_region(1.0 / l, 0.0, l));
        let p = HbParams::optimal(1.0, 1e4).unwrap();
        assert!(p.alpha > 1.0 / 1e4);
        assert!(!theorem2_region(p.alpha, p.beta, 1e4));

        assert!(theorem3_region(1.0 / (2.0 * l), 0.0, l, 1.0).unwrap());
        assert!(theorem3_region(1.0 / (2.0 * l), 0.5, l, l).unwrap());
        assert!(!theorem3_region(1.0 / (2.0 * l), 0.5 + 1e-12, l, l).unwrap());
        assert!(theorem3_region(0.1, 0.1, 1.0, 2.0).is_err());
    }

    #[test]
    fn feasible_params_lie_in_regions() {
        for &(l, mu) in &[(1.0, 1.0), (1e4, 1.0), (8.0, 0.17)] {
            let p2 = theorem2_feasible_params(l).unwrap();
            assert!(theorem2_region(p2.alpha, p2.beta, l));
            let p3 = theorem3_feasible_params(l, mu).unwrap();
            assert!(theorem3_region(p3.alpha, p3.beta, l, mu).unwrap());
        }
    }

    #[test]
    fn rate_bound_examples() {
        assert_eq!(rate_bound(2.5, 0.1, 1.0, 0).unwrap(), 2.5);
        assert_relative_eq!(rate_bound(1.0, 0.1, 1.0, 10).unwrap(), 0.3486784401000001, max_relative = 1e-14);
        assert!(rate_bound(1.0, 1.0, 1.0, 3).is_err());
    }

    #[test]
    fn standard_init_objective_decays_at_rate() {
        let q = DiagonalQuadratic::new(vec![0.5, 2.0, 10.0]).unwrap();
        let p = theorem3_feasible_params(10.0, 0.5).unwrap();
        let x0 = [1.0, -1.0, 2.0];
        let t = run_standard(&q, &x0, p, 300).unwrap();
        let f0 = q.value(&x0);
        // k counts steps taken after the initialization x1 = x0
        for r in &t.records[1..] {
            let bound = rate_bound(f0, p.alpha, 0.5, r.k as u64 - 1).unwrap();
            assert!(r.f <= bound * (1.0 + 1e-8), "k={} f={} bound={}", r.k, r.f, bound);
        }
    }

    #[test]
    fn annotate_is_monotone_in_region() {
        let pl = NonconvexPl::new();
        let p = theorem2_feasible_params(NonconvexPl::L_CERTIFIED).unwrap();
        let cfg = LyapunovConfig::for_objective(&pl, p, NonconvexPl::L_CERTIFIED).unwrap();
        let mut t = run(&pl, &[4.0], &[3.0], p, 200).unwrap();
        annotate(&mut t, &pl, &cfg).unwrap();
        assert!(t.records[0].v.is_none());
        let vs: Vec<f64> = t.records[1..].iter().map(|r| r.v.unwrap()).collect();
        assert!(vs.windows(2).all(|w| w[1] <= w[0] + 1e-10 * vs[0].max(1.0)));
    }

    #[test]
    fn energy_examples() {
        let q = DiagonalQuadratic::new(vec![2.0]).unwrap();
        let s = ContinuousState::new(vec![1.0], vec![2.0], 1.0, 4.0).unwrap();
        assert_relative_eq!(continuous_energy(&q, &s).unwrap(), 1.5);
        let s0 = ContinuousState::new(vec![1.0], vec![0.0], 1.0, 4.0).unwrap();
        assert_eq!(continuous_energy(&q, &s0).unwrap(), 1.0);
        let eq = ContinuousState::new(vec![0.0], vec![0.0], 1.0, 4.0).unwrap();
        assert_eq!(continuous_energy(&q, &eq).unwrap(), 0.0);
        assert!(ContinuousState::new(vec![0.0], vec![0.0, 1.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn simulation_dissipates_energy() {
        let q = DiagonalQuadratic::new(vec![1.0]).unwrap();
        let s0 = ContinuousState::new(vec![1.0], vec![0.0], 1.0, 1.0).unwrap();
        let samples = simulate_continuous(&q, &s0, 0.1, 20.0).unwrap();
        assert_eq!(samples.len(), 201);
        let e0 = samples[0].energy;
        assert!(energy_violation(&samples) <= 1e-6 * e0);
        // zero initial velocity keeps f below its starting value
        assert!(samples.iter().all(|s| q.value(&s.state.x) <= q.value(&s0.x) + 1e-6));
        assert!(simulate_continuous(&q, &s0, 0.2, 20.0).is_err());
    }

    #[test]
    fn overdamped_flow_decays_monotonically() {
        let q = DiagonalQuadratic::new(vec![1.0]).unwrap();
        let s0 = ContinuousState::new(vec![1.0], vec![0.0], 10.0, 1.0).unwrap();
        let samples = simulate_continuous(&q, &s0, 0.01, 20.0).unwrap();
        let fs: Vec<f64> = samples.iter().map(|s| q.value(&s.state.x)).collect();
        assert!(fs.windows(2).all(|w| w[1] <= w[0]));
    }
}
