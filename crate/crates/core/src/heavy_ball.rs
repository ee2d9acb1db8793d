//! The Heavy Ball iteration `x_{k+1} = x_k − α·∇f(x_k) + β·(x_k − x_{k−1})`.

use std::f64::consts::E;
use std::fmt;

use crate::error::{check_dim, Error, Result};
use crate::objective::Objective;
use crate::recurrence::{self, RootClassification, SecondOrderRecurrence};
use crate::vector;

/// Iterates with a Euclidean norm above this are treated as divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// Default gradient-norm tolerance for tolerance-based stopping.
pub const DEFAULT_GRAD_TOL: f64 = 1e-9;

/// Relative distance (in units of `L − μ`) below which an eigenvalue is
/// treated as sitting on the boundary of the spectrum.
pub const MODAL_BOUNDARY_TOL: f64 = 1e-8;

/// Step size `alpha` and momentum `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HbParams {
    pub alpha: f64,
    pub beta: f64,
}

impl HbParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::out_of_range("alpha", alpha, "must be positive"));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::out_of_range("beta", beta, "must be nonnegative"));
        }
        Ok(Self { alpha, beta })
    }

    /// Fastest-rate tuning for a quadratic with spectrum in `[mu, l]`:
    /// `α = 4/(√L + √μ)²`, `β = q²`.
    pub fn optimal(mu: f64, l: f64) -> Result<Self> {
        check_spectrum(mu, l)?;
        let (sl, sm) = (l.sqrt(), mu.sqrt());
        let alpha = 4.0 / ((sl + sm) * (sl + sm));
        let q = (sl - sm) / (sl + sm);
        Ok(Self { alpha, beta: q * q })
    }

    /// `0 ≤ β < 1` and `0 < α < 2(1 + β)/L`.
    pub fn in_convergence_region(&self, l: f64) -> bool {
        (0.0..1.0).contains(&self.beta) && self.alpha > 0.0 && self.alpha < 2.0 * (1.0 + self.beta) / l
    }
}

/// `q = (√L − √μ)/(√L + √μ)`, the rate achieved by [`HbParams::optimal`].
pub fn optimal_rate(mu: f64, l: f64) -> Result<f64> {
    check_spectrum(mu, l)?;
    let (sl, sm) = (l.sqrt(), mu.sqrt());
    Ok((sl - sm) / (sl + sm))
}

fn check_spectrum(mu: f64, l: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::out_of_range("mu", mu, "must be positive"));
    }
    if !(l >= mu && l.is_finite()) {
        return Err(Error::out_of_range("L", l, "must be at least mu"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Event {
    #[default]
    None,
    Restart,
    LDoubled,
}

impl Event {
    pub fn as_str(&self) -> &'static str {
        match self {
            Event::None => "none",
            Event::Restart => "restart",
            Event::LDoubled => "L-doubled",
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Event {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Event::None),
            "restart" => Ok(Event::Restart),
            "L-doubled" => Ok(Event::LDoubled),
            other => Err(Error::InvalidArgument(format!("unknown event `{other}`"))),
        }
    }
}

/// One iterate of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub k: usize,
    pub x: Vec<f64>,
    pub f: f64,
    pub x_norm: f64,
    pub grad_norm: f64,
    /// Lyapunov value, when the run defines one.
    pub v: Option<f64>,
    pub event: Event,
}

/// Parameters in force from iteration `k` onwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamsEntry {
    pub k: usize,
    pub params: HbParams,
    pub l_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub params_history: Vec<ParamsEntry>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }

    /// Appends the next iterate, evaluating `f` and `∇f` at it.
    pub fn push(&mut self, obj: &dyn Objective, x: Vec<f64>, event: Event) {
        let k = self.records.len();
        let f = obj.value(&x);
        let grad_norm = vector::norm(&obj.gradient(&x));
        let x_norm = vector::norm(&x);
        self.records.push(Record {
            k,
            x,
            f,
            x_norm,
            grad_norm,
            v: None,
            event,
        });
    }

    pub fn max_norm(&self) -> f64 {
        self.records.iter().map(|r| r.x_norm).fold(0.0, f64::max)
    }

    pub fn f_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.f).collect()
    }

    /// Coordinate `i` of every iterate.
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.x[i]).collect()
    }

    pub fn count_events(&self, event: Event) -> usize {
        self.records.iter().filter(|r| r.event == event).count()
    }

    /// Parameters in force at iteration `k`.
    pub fn params_at(&self, k: usize) -> Option<&ParamsEntry> {
        self.params_history.iter().rev().find(|e| e.k <= k)
    }
}

/// One Heavy Ball step from `(x_k, x_prev)`.
pub fn step(obj: &dyn Objective, x_k: &[f64], x_prev: &[f64], params: HbParams) -> Result<Vec<f64>> {
    check_dim(obj.dim(), x_k.len())?;
    check_dim(obj.dim(), x_prev.len())?;
    Ok(step_unchecked(obj, x_k, x_prev, params))
}

pub(crate) fn step_unchecked(obj: &dyn Objective, x_k: &[f64], x_prev: &[f64], params: HbParams) -> Vec<f64> {
    let g = obj.gradient(x_k);
    x_k.iter()
        .zip(x_prev)
        .zip(&g)
        .map(|((&xk, &xp), &gi)| xk - params.alpha * gi + params.beta * (xk - xp))
        .collect()
}

pub(crate) fn is_divergent(x: &[f64]) -> bool {
    !vector::all_finite(x) || vector::norm(x) > DIVERGENCE_NORM
}

fn start(obj: &dyn Objective, x0: &[f64], x1: &[f64], params: HbParams) -> Result<Trajectory> {
    check_dim(obj.dim(), x0.len())?;
    check_dim(obj.dim(), x1.len())?;
    if is_divergent(x0) {
        return Err(Error::InvalidArgument("initial point is not finite".into()));
    }
    if is_divergent(x1) {
        return Err(Error::Diverged { last_finite: 0 });
    }
    let mut traj = Trajectory::default();
    traj.params_history.push(ParamsEntry {
        k: 0,
        params,
        l_estimate: None,
    });
    traj.push(obj, x0.to_vec(), Event::None);
    traj.push(obj, x1.to_vec(), Event::None);
    Ok(traj)
}

/// Runs `k_max` Heavy Ball steps from the pair `(x0, x1)`, producing records
/// `0..=k_max`.
pub fn run(obj: &dyn Objective, x0: &[f64], x1: &[f64], params: HbParams, k_max: usize) -> Result<Trajectory> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("iteration count must be at least 1".into()));
    }
    let mut traj = start(obj, x0, x1, params)?;
    for k in 2..=k_max {
        let next = {
            let r = &traj.records;
            step_unchecked(obj, &r[k - 1].x, &r[k - 2].x, params)
        };
        if is_divergent(&next) {
            return Err(Error::Diverged { last_finite: k - 1 });
        }
        traj.push(obj, next, Event::None);
    }
    Ok(traj)
}

/// [`run`] with the standard initialization `x1 = x0`, so the first step is a
/// plain gradient step.
pub fn run_standard(obj: &dyn Objective, x0: &[f64], params: HbParams, k_max: usize) -> Result<Trajectory> {
    run(obj, x0, x0, params, k_max)
}

/// Runs until `‖∇f(x_k)‖ ≤ grad_tol` (checked from `k = 1`) or `max_iters`.
///
/// Returns the trajectory and whether the tolerance was reached.
pub fn run_to_tolerance(
    obj: &dyn Objective,
    x0: &[f64],
    x1: &[f64],
    params: HbParams,
    max_iters: usize,
    grad_tol: f64,
) -> Result<(Trajectory, bool)> {
    if max_iters == 0 {
        return Err(Error::InvalidArgument("iteration count must be at least 1".into()));
    }
    let mut traj = start(obj, x0, x1, params)?;
    for k in 2..=max_iters {
        if traj.records[k - 1].grad_norm <= grad_tol {
            return Ok((traj, true));
        }
        let next = {
            let r = &traj.records;
            step_unchecked(obj, &r[k - 1].x, &r[k - 2].x, params)
        };
        if is_divergent(&next) {
            return Err(Error::Diverged { last_finite: k - 1 });
        }
        traj.push(obj, next, Event::None);
    }
    let converged = traj.last().is_some_and(|r| r.grad_norm <= grad_tol);
    Ok((traj, converged))
}

/// Root classification of the scalar recurrence governing the coordinate
/// with eigenvalue `lambda` under optimal parameters for `[mu, l]`.
pub fn modal_roots(lambda: f64, mu: f64, l: f64) -> Result<RootClassification> {
    let params = HbParams::optimal(mu, l)?;
    if !(lambda >= mu && lambda <= l) {
        return Err(Error::out_of_range("lambda", lambda, "must lie in [mu, L]"));
    }
    Ok(modal_recurrence(lambda, params, 0.0, 0.0).characteristic_roots())
}

/// Scalar recurrence `x_{k+1} = (1 − αλ + β)·x_k − β·x_{k−1}` followed by the
/// coordinate with eigenvalue `lambda`.
pub fn modal_recurrence(lambda: f64, params: HbParams, xi0: f64, xi1: f64) -> SecondOrderRecurrence {
    SecondOrderRecurrence::new(1.0 - params.alpha * lambda + params.beta, -params.beta, xi0, xi1)
}

/// Closed-form value of the coordinate with eigenvalue `lambda` after `k`
/// optimal-parameter steps from `(xi0, xi1)`.
///
/// Interior eigenvalues use `[C1·cos(ωk) + C2·sin(ωk)]·q^k`; eigenvalues
/// within `1e-8·(L − μ)` of `μ` or `L` use the double-root form with
/// `ρ = q` or `ρ = −q`.
pub fn modal_closed_form(lambda: f64, mu: f64, l: f64, xi0: f64, xi1: f64, k: u64) -> Result<f64> {
    let q = optimal_rate(mu, l)?;
    if !(lambda >= mu && lambda <= l) {
        return Err(Error::out_of_range("lambda", lambda, "must lie in [mu, L]"));
    }
    let width = l - mu;
    let tol = MODAL_BOUNDARY_TOL * width;
    if lambda - mu <= tol {
        return Ok(recurrence::equal_roots_unchecked(q, xi0, xi1, k));
    }
    if l - lambda <= tol {
        return Ok(recurrence::equal_roots_unchecked(-q, xi0, xi1, k));
    }
    let (rm, rl) = ((lambda - mu).sqrt(), (l - lambda).sqrt());
    let sin_w = 2.0 * rm * rl / width;
    let cos_w = (l + mu - 2.0 * lambda) / width;
    let omega = sin_w.atan2(cos_w);
    let s = l.sqrt() + mu.sqrt();
    let c1 = xi0;
    let c2 = (xi1 * s * s - xi0 * (l + mu - 2.0 * lambda)) / (2.0 * rm * rl);
    let phase = k as f64 * omega;
    Ok((c1 * phase.cos() + c2 * phase.sin()) * recurrence::pow_k(q, k))
}

/// `√κ / (2e)`; meaningful for `κ ≥ 1`.
pub fn peak_lower_bound(kappa: f64) -> f64 {
    kappa.sqrt() / (2.0 * E)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::DiagonalQuadratic;
    use approx::assert_relative_eq;

    #[test]
    fn optimal_params_examples() {
        assert_eq!(HbParams::optimal(1.0, 1.0).unwrap(), HbParams { alpha: 1.0, beta: 0.0 });
        let p = HbParams::optimal(1.0, 1e4).unwrap();
        assert_relative_eq!(p.alpha, 4.0 / 10201.0, max_relative = 1e-15);
        assert_relative_eq!(p.beta, (99.0f64 / 101.0).powi(2), max_relative = 1e-15);
        let p = HbParams::optimal(1.0, 4.0).unwrap();
        assert_relative_eq!(p.alpha, 4.0 / 9.0, max_relative = 1e-15);
        assert_relative_eq!(p.beta, 1.0 / 9.0, max_relative = 1e-15);
        assert!(HbParams::optimal(2.0, 1.0).is_err());
    }

    #[test]
    fn convergence_region_examples() {
        let p = HbParams::optimal(1.0, 1e4).unwrap();
        // α ≈ 3.92118e-4 against 2(1+β)/L ≈ 3.92158e-4
        assert!(p.alpha < 2.0 * (1.0 + p.beta) / 1e4);
        assert!(p.in_convergence_region(1e4));
        assert!(!HbParams { alpha: 1e-3, beta: 1.0 }.in_convergence_region(1.0));
        assert!(!HbParams { alpha: 0.0, beta: 0.5 }.in_convergence_region(1.0));
        assert!(HbParams::new(0.0, 0.5).is_err());
        assert!(HbParams::new(0.1, -0.5).is_err());
    }

    #[test]
    fn step_examples() {
        let q = DiagonalQuadratic::new(vec![2.0]).unwrap();
        let p = HbParams { alpha: 0.1, beta: 0.5 };
        let x = step(&q, &[1.0], &[0.5], p).unwrap();
        assert_relative_eq!(x[0], 1.05, max_relative = 1e-15);

        let gd = step(&q, &[1.0], &[0.5], HbParams { alpha: 0.1, beta: 0.0 }).unwrap();
        assert_relative_eq!(gd[0], 0.8, max_relative = 1e-15);

        assert_eq!(step(&q, &[0.0], &[0.0], p).unwrap(), vec![0.0]);
        assert!(step(&q, &[0.0, 1.0], &[0.0], p).is_err());
    }

    #[test]
    fn run_records_and_standard_init() {
        let q = DiagonalQuadratic::new(vec![1.0, 3.0]).unwrap();
        let p = HbParams::optimal(1.0, 3.0).unwrap();
        let t = run_standard(&q, &[1.0, -2.0], p, 5).unwrap();
        assert_eq!(t.len(), 6);
        assert_eq!(t.records[1].x, t.records[0].x);
        for (i, r) in t.records.iter().enumerate() {
            assert_eq!(r.k, i);
            assert_relative_eq!(r.x_norm, vector::norm(&r.x));
        }
        assert!(run_standard(&q, &[1.0, -2.0], p, 0).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let q = DiagonalQuadratic::new(vec![1.0]).unwrap();
        let p = HbParams { alpha: 3.0, beta: 0.0 };
        match run_standard(&q, &[1.0], p, 500) {
            Err(Error::Diverged { last_finite }) => assert!(last_finite > 10 && last_finite < 500),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn theorem1_peak_at_kappa_1e4() {
        let q = DiagonalQuadratic::new(vec![1.0, 50.0, 1e4]).unwrap();
        let p = HbParams::optimal(1.0, 1e4).unwrap();
        let t = run(&q, &[-1.0, 0.0, 0.0], &[1.0, 0.0, 0.0], p, 400).unwrap();
        assert!(t.max_norm() >= peak_lower_bound(1e4));
    }

    #[test]
    fn converges_with_optimal_params() {
        let q = DiagonalQuadratic::new(vec![1.0, 20.0, 300.0]).unwrap();
        let p = HbParams::optimal(1.0, 300.0).unwrap();
        let t = run_standard(&q, &[1.0, 1.0, 1.0], p, 600).unwrap();
        assert!(t.last().unwrap().x_norm <= 1e-6);
        let (t, ok) = run_to_tolerance(&q, &[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0], p, 10_000, 1e-9).unwrap();
        assert!(ok);
        assert!(t.last().unwrap().grad_norm <= 1e-9);
    }

    #[test]
    fn modal_roots_examples() {
        let q = optimal_rate(1.0, 1e4).unwrap();
        match modal_roots(1.0, 1.0, 1e4).unwrap() {
            RootClassification::Equal { rho } => assert_relative_eq!(rho, q, epsilon = 1e-10),
            other => panic!("{other:?}"),
        }
        match modal_roots(1e4, 1.0, 1e4).unwrap() {
            RootClassification::Equal { rho } => assert_relative_eq!(rho, -q, epsilon = 1e-10),
            other => panic!("{other:?}"),
        }
        match modal_roots(5000.0, 1.0, 1e4).unwrap() {
            RootClassification::ComplexPair { modulus, .. } => {
                assert_relative_eq!(modulus, 99.0 / 101.0, epsilon = 1e-10)
            }
            other => panic!("{other:?}"),
        }
        assert!(modal_roots(0.5, 1.0, 1e4).is_err());
    }

    #[test]
    fn modal_closed_form_examples() {
        for k in 0..50 {
            assert_eq!(modal_closed_form(3.0, 1.0, 9.0, 0.0, 0.0, k).unwrap(), 0.0);
        }
        // μ=1, L=9, λ=5: cos ω = 0, so the trigonometric factor has period 4.
        let q = optimal_rate(1.0, 9.0).unwrap();
        let xs: Vec<f64> = (0..9)
            .map(|k| modal_closed_form(5.0, 1.0, 9.0, 1.0, 0.3, k).unwrap() / recurrence::pow_k(q, k))
            .collect();
        for k in 0..5 {
            assert_relative_eq!(xs[k], xs[k + 4], epsilon = 1e-12);
        }
        assert_relative_eq!(xs[2], -xs[0], epsilon = 1e-12);
    }

    #[test]
    fn modal_closed_form_matches_run_on_three_coordinates() {
        let ev = vec![1.0, 37.0, 100.0];
        let obj = DiagonalQuadratic::new(ev.clone()).unwrap();
        let p = HbParams::optimal(1.0, 100.0).unwrap();
        let x0 = [0.0, 0.0, 0.0];
        let x1 = [1.0, 1.0, 1.0];
        let t = run(&obj, &x0, &x1, p, 300).unwrap();
        for (i, &lambda) in ev.iter().enumerate() {
            for r in &t.records {
                let cf = modal_closed_form(lambda, 1.0, 100.0, x0[i], x1[i], r.k as u64).unwrap();
                assert!((cf - r.x[i]).abs() <= 1e-9, "coord {i} k {}: {cf} vs {}", r.k, r.x[i]);
            }
        }
    }

    #[test]
    fn peak_lower_bound_examples() {
        assert_relative_eq!(peak_lower_bound(1e4), 18.393972058572118, max_relative = 1e-14);
        assert_relative_eq!(peak_lower_bound(1.0), 0.18393972058572117, max_relative = 1e-14);
        assert_relative_eq!(peak_lower_bound(1e6), 183.93972058572118, max_relative = 1e-14);
    }

    #[test]
    fn trajectory_params_lookup() {
        let mut t = Trajectory::default();
        let a = HbParams { alpha: 0.1, beta: 0.2 };
        let b = HbParams { alpha: 0.05, beta: 0.2 };
        t.params_history.push(ParamsEntry { k: 0, params: a, l_estimate: Some(1.0) });
        t.params_history.push(ParamsEntry { k: 7, params: b, l_estimate: Some(2.0) });
        assert_eq!(t.params_at(3).unwrap().params, a);
        assert_eq!(t.params_at(7).unwrap().params, b);
        assert_eq!(t.params_at(100).unwrap().l_estimate, Some(2.0));
    }

    #[test]
    fn event_names_round_trip() {
        for e in [Event::None, Event::Restart, Event::LDoubled] {
            assert_eq!(e.as_str().parse::<Event>().unwrap(), e);
        }
    }
}
