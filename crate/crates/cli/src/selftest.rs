//! Acceptance checks, runnable from the `selftest` command and from tests.
//!
//! Every check returns a [`Check`] with a verdict, a one-line detail and its
//! wall-clock time; a check passes only if it also meets its time budget.

use std::time::{Duration, Instant};

use hblab_core::heavy_ball::{modal_closed_form, peak_lower_bound, run, run_standard};
use hblab_core::lyapunov::{
    annotate, rate_bound, simulate_continuous, theorem2_feasible_params, theorem2_region,
    theorem3_feasible_params, ContinuousSample,
};
use hblab_core::recurrence::{
    eta_asymptotic, peak_time, scan_bound, trajectory_peak, worst_case_peak_envelope,
};
use hblab_core::restart::{adaptive_run, DEFAULT_EPS};
use hblab_core::vector;
use hblab_core::{
    ContinuousState, DiagonalQuadratic, HbParams, LyapunovConfig, NonconvexPl, Objective,
    SecondOrderRecurrence, Trajectory,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::commands;
use crate::config::ExperimentConfig;
use crate::recipes::RECIPES;

#[derive(Debug, Clone)]
pub struct Check {
    pub id: u32,
    pub name: &'static str,
    pub ok: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.ok && self.elapsed < self.budget
    }

    pub fn line(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let slow = if self.ok && !self.passed() { " [over time budget]" } else { "" };
        format!(
            "{verdict} {:>2} {} ({:.3} s of {} s){slow}: {}",
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
            self.detail
        )
    }
}

fn timed(id: u32, name: &'static str, budget_s: u64, body: impl FnOnce() -> (bool, String)) -> Check {
    let start = Instant::now();
    let (ok, detail) = body();
    Check {
        id,
        name,
        ok,
        detail,
        elapsed: start.elapsed(),
        budget: Duration::from_secs(budget_s),
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Envelope exactness of the double-root worst case.
pub fn envelope_exactness() -> Check {
    timed(1, "envelope exactness", 1, || {
        let mut ok = true;
        let mut parts = Vec::new();
        for rho in [0.3, 0.6, 0.9, 0.99] {
            let report = peak_time(rho).unwrap();
            let xs = SecondOrderRecurrence::with_double_root(rho, -1.0, 1.0)
                .iterate(scan_bound(rho) as usize)
                .unwrap();
            let (k, v) = trajectory_peak(&xs).unwrap();
            let env = worst_case_peak_envelope(rho, report.k_star).unwrap();
            let err = rel_diff(v, env);
            ok &= k as u64 == report.k_star && err <= 1e-12;
            parts.push(format!("rho={rho}: k*={} peak={env:.10} rel.err={err:.1e}", report.k_star));
        }
        let p = peak_time(0.6).unwrap();
        ok &= p.k_star == 2 && rel_diff(p.peak, 1.56) <= 1e-12;
        (ok, parts.join("; "))
    })
}

/// Exact peak against `2/(e(1 − ρ))` near `ρ = 1`.
pub fn eta_asymptotics() -> Check {
    timed(2, "eta asymptotic", 1, || {
        let mut ok = true;
        let mut parts = Vec::new();
        for rho in [0.999, 0.9999] {
            let xs = SecondOrderRecurrence::with_double_root(rho, -1.0, 1.0)
                .iterate(scan_bound(rho) as usize)
                .unwrap();
            let (_, peak) = trajectory_peak(&xs).unwrap();
            let ratio = peak / eta_asymptotic(rho).unwrap();
            ok &= (0.95..=1.05).contains(&ratio);
            parts.push(format!("rho={rho}: peak/eta={ratio:.6}"));
        }
        (ok, parts.join("; "))
    })
}

/// Peak ordering between distinct and double roots from `(0, 1)`.
pub fn ordering() -> Check {
    timed(3, "ordering property", 1, || {
        let k = 500;
        let top = |xs: &[f64]| xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let abs_top = |xs: &[f64]| xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let equal = top(&SecondOrderRecurrence::with_double_root(0.6, 0.0, 1.0).iterate(k).unwrap());
        let above = top(&SecondOrderRecurrence::with_real_roots(0.7, 0.8, 0.0, 1.0).iterate(k).unwrap());
        let below = abs_top(&SecondOrderRecurrence::with_real_roots(0.4, 0.5, 0.0, 1.0).iterate(k).unwrap());
        (
            above >= equal && below <= equal,
            format!("peaks: (0.7, 0.8) {above:.6} >= rho 0.6 {equal:.6} >= (0.4, 0.5) {below:.6}"),
        )
    })
}

/// Peak lower bound and top-mode oscillation at optimal parameters.
pub fn theorem1() -> Check {
    timed(4, "peak lower bound", 2, || {
        let mut ok = true;
        let mut parts = Vec::new();
        for kappa in [1e2f64, 1e3, 1e4] {
            let q = DiagonalQuadratic::new(vec![1.0, kappa.sqrt(), kappa]).unwrap();
            let params = HbParams::optimal(1.0, kappa).unwrap();
            let bound = peak_lower_bound(kappa);
            let e1 = vector::basis(3, q.min_index());
            let minus: Vec<f64> = e1.iter().map(|v| -v).collect();
            let worst = run(&q, &minus, &e1, params, 4000).unwrap().max_norm();
            let en = vector::basis(3, q.max_index());
            let top = run_standard(&q, &en, params, 4000).unwrap();
            let peak_en = top.max_norm();
            let coord = top.coordinate(q.max_index());
            let changes = coord[..=200].windows(2).filter(|w| w[0] * w[1] < 0.0).count();
            ok &= worst >= bound && peak_en >= bound && changes >= 10;
            parts.push(format!(
                "kappa={kappa:.0e}: bound {bound:.3}, -e1/e1 peak {worst:.3}, e_n peak {peak_en:.3}, {changes} sign changes"
            ));
        }
        (ok, parts.join("; "))
    })
}

/// Modal closed forms against the coordinates of `run`.
pub fn closed_form_equivalence() -> Check {
    timed(5, "closed-form equivalence", 5, || {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut worst = 0.0f64;
        for draw in 0..100 {
            let mu = 10f64.powf(rng.gen_range(-1.0..1.0));
            let l = mu * 10f64.powf(rng.gen_range(0.5..4.0));
            let lambda = match draw % 10 {
                0 => mu,
                1 => l,
                _ => rng.gen_range(mu..l),
            };
            let x0: f64 = rng.gen_range(-1.0..1.0);
            let x1: f64 = rng.gen_range(-1.0..1.0);
            let q = DiagonalQuadratic::new(vec![lambda]).unwrap();
            let params = HbParams::optimal(mu, l).unwrap();
            let traj = run(&q, &[x0], &[x1], params, 500).unwrap();
            for (k, r) in traj.records.iter().enumerate() {
                let c = modal_closed_form(lambda, mu, l, x0, x1, k as u64).unwrap();
                worst = worst.max((c - r.x[0]).abs());
            }
        }
        (worst <= 1e-9, format!("100 draws, k <= 500: max abs error {worst:.2e}"))
    })
}

fn lyapunov_trace(obj: &dyn Objective, traj: &mut Trajectory, params: HbParams, l: f64) -> Vec<f64> {
    let cfg = LyapunovConfig::for_objective(obj, params, l).unwrap();
    annotate(traj, obj, &cfg).unwrap();
    traj.records[1..].iter().map(|r| r.v.unwrap()).collect()
}

/// Worst `V_k − V_{k−1}` relative to `max(1, V_1)`.
fn worst_increase(v: &[f64]) -> f64 {
    let scale = v[0].max(1.0);
    v.windows(2).map(|w| (w[1] - w[0]) / scale).fold(f64::NEG_INFINITY, f64::max)
}

/// Monotone `V` over random parameters in the region, plus the contrast
/// with optimal parameters.
pub fn theorem2() -> Check {
    timed(6, "Lyapunov monotonicity", 30, || {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pl = NonconvexPl::new();
        let mut worst = f64::NEG_INFINITY;
        let mut trials = 0;
        while trials < 1000 {
            let quadratic;
            let (obj, l, x0, x1): (&dyn Objective, f64, Vec<f64>, Vec<f64>) = if trials % 4 == 3 {
                let pair = (rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0));
                (&pl, NonconvexPl::L_CERTIFIED, vec![pair.0], vec![pair.1])
            } else {
                let kappa = 10f64.powf(rng.gen_range(0.0..5.0));
                let n = rng.gen_range(2..=8);
                quadratic = DiagonalQuadratic::log_uniform(1.0, kappa, n, rng.gen()).unwrap();
                let x0 = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let x1 = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                (&quadratic, kappa, x0, x1)
            };
            let alpha = rng.gen_range(1e-3..1.0) / l;
            let beta = rng.gen_range(0.0..=1.0) * (1.0 - alpha * l).sqrt();
            if !theorem2_region(alpha, beta, l) {
                continue;
            }
            let params = HbParams::new(alpha, beta).unwrap();
            let mut traj = run(obj, &x0, &x1, params, 300).unwrap();
            worst = worst.max(worst_increase(&lyapunov_trace(obj, &mut traj, params, l)));
            trials += 1;
        }
        let random_ok = worst <= 1e-10;

        let q = DiagonalQuadratic::log_uniform(1.0, 1e4, 4, 1).unwrap();
        let x0 = vector::basis(4, q.max_index());
        let fast = run_standard(&q, &x0, HbParams::optimal(1.0, 1e4).unwrap(), 3000).unwrap();
        let f = fast.f_values();
        let rises = f.windows(2).filter(|w| w[1] > w[0]).count();
        let params = theorem2_feasible_params(1e4).unwrap();
        let mut slow = run_standard(&q, &x0, params, 3000).unwrap();
        let contrast_v = worst_increase(&lyapunov_trace(&q, &mut slow, params, 1e4));
        let contrast_ok = rises > 0 && contrast_v <= 1e-10;
        (
            random_ok && contrast_ok,
            format!(
                "1000 trials: worst relative V increase {worst:.2e}; optimal params: {rises} rises of f; feasible params: worst V increase {contrast_v:.2e}"
            ),
        )
    })
}

/// Linear decay of `V` and of `f` under the strong-convexity region.
pub fn theorem3() -> Check {
    timed(7, "linear rate", 10, || {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pl = NonconvexPl::new();
        let quads: Vec<DiagonalQuadratic> = [(10.0, 3), (1e3, 5), (1e5, 8)]
            .iter()
            .map(|&(kappa, n)| DiagonalQuadratic::log_uniform(1.0, kappa, n, rng.gen()).unwrap())
            .collect();
        let mut cases: Vec<(&dyn Objective, f64, f64)> = quads
            .iter()
            .map(|q| (q as &dyn Objective, q.l(), q.mu()))
            .collect();
        cases.push((&pl, NonconvexPl::L_CERTIFIED, pl.mu_certified()));

        let mut worst_v = f64::NEG_INFINITY;
        let mut worst_f = f64::NEG_INFINITY;
        for (obj, l, mu) in cases {
            let params = theorem3_feasible_params(l, mu).unwrap();
            let n = obj.dim();
            let scale = if n == 1 { 20.0 } else { 1.0 };
            for trial in 0..5 {
                let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-scale..scale)).collect();
                let x1: Vec<f64> = if trial == 0 {
                    x0.clone()
                } else {
                    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
                };
                let mut traj = run(obj, &x0, &x1, params, 2000).unwrap();
                let v = lyapunov_trace(obj, &mut traj, params, l);
                for (j, &vk) in v.iter().enumerate() {
                    let bound = rate_bound(v[0], params.alpha, mu, j as u64).unwrap();
                    if bound < 1e-250 {
                        break;
                    }
                    worst_v = worst_v.max(vk / bound - 1.0);
                }
                if trial == 0 {
                    let f0 = traj.records[0].f;
                    for r in &traj.records[1..] {
                        let bound = rate_bound(f0, params.alpha, mu, r.k as u64 - 1).unwrap();
                        if bound < 1e-250 {
                            break;
                        }
                        worst_f = worst_f.max(r.f / bound - 1.0);
                    }
                }
            }
        }
        (
            worst_v <= 1e-8 && worst_f <= 1e-8,
            format!(
                "max V_k/(V_1 q^(k-1)) - 1 = {worst_v:.2e}; x0 = x1: max f_k/(f_0 q^(k-1)) - 1 = {worst_f:.2e}"
            ),
        )
    })
}

/// Exact flow of `x'' + a·x' + b·λ·x = 0` over `t`; underdamped only.
fn exact_flow(lambda: f64, a: f64, b: f64, x: f64, y: f64, t: f64) -> (f64, f64) {
    let sigma = 0.5 * a;
    let w2 = b * lambda - sigma * sigma;
    assert!(w2 > 0.0, "oracle covers the underdamped case only");
    let w = w2.sqrt();
    let (s, c) = (w * t).sin_cos();
    let decay = (-sigma * t).exp();
    let xt = decay * (x * c + (y + sigma * x) / w * s);
    let yt = decay * (y * c - (sigma * y + b * lambda * x) / w * s);
    (xt, yt)
}

struct EnergyStats {
    defect: f64,
    increase: f64,
}

fn energy_stats(samples: &[ContinuousSample], lambda: f64, dt: f64) -> EnergyStats {
    let mut defect = 0.0f64;
    let mut increase = 0.0f64;
    for w in samples.windows(2) {
        let s = &w[0].state;
        let (xe, ye) = exact_flow(lambda, s.a, s.b, s.x[0], s.y[0], dt);
        let exact = 0.5 * lambda * xe * xe + ye * ye / (2.0 * s.b);
        defect = defect.max((w[1].energy - exact).abs());
        increase = increase.max(w[1].energy - w[0].energy);
    }
    EnergyStats { defect, increase }
}

/// Energy decay of the continuous-time heavy-ball flow under RK4.
pub fn continuous_case() -> Check {
    timed(8, "continuous energy", 5, || {
        let lambda = 1.0;
        let q = DiagonalQuadratic::new(vec![lambda]).unwrap();
        let state = ContinuousState::new(vec![1.0], vec![0.0], 1.0, 1.0).unwrap();
        let dt = state.max_step(lambda);
        let coarse = simulate_continuous(&q, &state, dt, 20.0).unwrap();
        let fine = simulate_continuous(&q, &state, 0.5 * dt, 20.0).unwrap();
        let c_stats = energy_stats(&coarse, lambda, dt);
        let f_stats = energy_stats(&fine, lambda, 0.5 * dt);
        let order = c_stats.defect / f_stats.defect;
        let c_fit = c_stats.defect / dt.powi(4);
        let tol_coarse = c_fit * dt.powi(4);
        let tol_fine = c_fit * (0.5 * dt).powi(4);
        let e0 = coarse[0].energy;
        let f_max = fine.iter().map(|s| q.value(&s.state.x)).fold(f64::NEG_INFINITY, f64::max);
        let ok = order >= 8.0
            && c_stats.increase <= tol_coarse
            && f_stats.increase <= tol_fine
            && c_stats.increase <= 1e-6 * e0
            && f_max <= q.value(&[1.0]) + 1e-6;
        (
            ok,
            format!(
                "dt={dt}: energy defect {:.2e}, step increase {:.2e} (tol {tol_coarse:.2e}); dt/2: defect {:.2e}, increase {:.2e} (tol {tol_fine:.2e}); defect ratio {order:.1}",
                c_stats.defect, c_stats.increase, f_stats.defect, f_stats.increase
            ),
        )
    })
}

/// Doubling count, convergence and monotone `V` of the adaptive method.
pub fn adaptive_algorithm() -> Check {
    timed(9, "adaptive L doubling", 5, || {
        let q = DiagonalQuadratic::log_uniform(1.0, 1e4, 4, 1).unwrap();
        let mut ok = true;
        let mut parts = Vec::new();
        for m in [0u32, 5, 10] {
            let l0 = q.l() / 2f64.powi(m as i32);
            let out = adaptive_run(&q, &[1.0; 4], l0, DEFAULT_EPS, 1_000_000).unwrap();
            let v: Vec<f64> = out.trajectory.records[1..].iter().map(|r| r.v.unwrap()).collect();
            let monotone = v.windows(2).all(|w| w[1] <= w[0]);
            let grad = out.trajectory.last().unwrap().grad_norm;
            ok &= out.doublings <= m + 1 && out.converged && grad <= 1e-9 && monotone;
            parts.push(format!(
                "m={m}: {} doublings, {} iterations, grad {grad:.1e}, V monotone {monotone}",
                out.doublings,
                out.trajectory.len() - 1
            ));
        }
        (ok, parts.join("; "))
    })
}

/// Every embedded recipe produces identical bytes on a second run.
pub fn recipe_determinism() -> Check {
    timed(10, "recipe determinism", 30, || {
        let mut ok = true;
        let mut parts = Vec::new();
        for (name, text) in RECIPES {
            let once = || {
                ExperimentConfig::parse(text).and_then(|cfg| commands::infer(&cfg, None))
            };
            match (once(), once()) {
                (Ok(a), Ok(b)) => {
                    let same = a == b && !a.csv.is_empty();
                    ok &= same;
                    parts.push(format!("{name}: exit {} {}", a.status.code(), if same { "same" } else { "DIFFERENT" }));
                }
                (Err(e), _) | (_, Err(e)) => {
                    ok = false;
                    parts.push(format!("{name}: {e}"));
                }
            }
        }
        (ok, parts.join("; "))
    })
}

/// Checks 1 to 9, which exercise the library directly.
pub fn library_checks() -> Vec<Check> {
    vec![
        envelope_exactness(),
        eta_asymptotics(),
        ordering(),
        theorem1(),
        closed_form_equivalence(),
        theorem2(),
        theorem3(),
        continuous_case(),
        adaptive_algorithm(),
    ]
}

pub fn all_checks() -> Vec<Check> {
    let mut checks = library_checks();
    checks.push(recipe_determinism());
    checks
}
