//! Objective functions and the checks run against them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::vector;

/// Points whose suboptimality is below this are skipped when certifying a
/// PL constant.
pub const PL_GAP_FLOOR: f64 = 1e-12;

/// A differentiable objective bounded from below.
pub trait Objective {
    fn dim(&self) -> usize;

    /// `f(x)`; `x` must have length [`Objective::dim`].
    fn value(&self, x: &[f64]) -> f64;

    /// `∇f(x)`; `x` must have length [`Objective::dim`].
    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// Known optimal value `f*`, if any.
    fn f_star(&self) -> Option<f64> {
        None
    }

    /// Declared Lipschitz constant of the gradient.
    fn lipschitz_hint(&self) -> Option<f64> {
        None
    }

    /// Declared strong-convexity or PL constant.
    fn mu_hint(&self) -> Option<f64> {
        None
    }

    /// Known minimizer, if any.
    fn minimizer(&self) -> Option<Vec<f64>> {
        None
    }
}

/// Returns `(f(x), ∇f(x))` after checking the dimension.
pub fn eval_and_grad(obj: &dyn Objective, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_dim(obj.dim(), x.len())?;
    Ok((obj.value(x), obj.gradient(x)))
}

/// `f(x) = ½·Σ λᵢ·xᵢ²` with all `λᵢ > 0`; minimizer `0`, `f* = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalQuadratic {
    eigenvalues: Vec<f64>,
    mu: f64,
    l: f64,
}

impl DiagonalQuadratic {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidArgument("eigenvalue list is empty".into()));
        }
        if let Some(&bad) = eigenvalues.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::out_of_range(
                "eigenvalue",
                bad,
                "must be positive and finite",
            ));
        }
        let mu = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let l = eigenvalues.iter().copied().fold(0.0, f64::max);
        Ok(Self { eigenvalues, mu, l })
    }

    /// Spectrum with both endpoints `mu` and `l` and the remaining `dim − 2`
    /// eigenvalues drawn log-uniformly in between, sorted ascending.
    pub fn log_uniform(mu: f64, l: f64, dim: usize, seed: u64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::out_of_range("mu", mu, "must be positive"));
        }
        if !(l >= mu && l.is_finite()) {
            return Err(Error::out_of_range("L", l, "must be at least mu"));
        }
        let eigenvalues = match dim {
            0 => return Err(Error::InvalidArgument("dimension must be positive".into())),
            1 if mu == l => vec![mu],
            1 => {
                return Err(Error::InvalidArgument(
                    "a one-dimensional spectrum cannot hold distinct mu and L".into(),
                ))
            }
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let (lo, hi) = (mu.ln(), l.ln());
                let mut v = Vec::with_capacity(dim);
                v.push(mu);
                for _ in 0..dim - 2 {
                    let u: f64 = rng.gen();
                    v.push((lo + u * (hi - lo)).exp().clamp(mu, l));
                }
                v.push(l);
                v.sort_by(f64::total_cmp);
                v
            }
        };
        Self::new(eigenvalues)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn condition_number(&self) -> f64 {
        self.l / self.mu
    }

    /// Index of the coordinate carrying the smallest eigenvalue.
    pub fn min_index(&self) -> usize {
        argmin_by(&self.eigenvalues, |a, b| a < b)
    }

    /// Index of the coordinate carrying the largest eigenvalue.
    pub fn max_index(&self) -> usize {
        argmin_by(&self.eigenvalues, |a, b| a > b)
    }
}

fn argmin_by(v: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if better(x, v[best]) {
            best = i;
        }
    }
    best
}

impl Objective for DiagonalQuadratic {
    fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self
            .eigenvalues
            .iter()
            .zip(x)
            .map(|(l, xi)| l * xi * xi)
            .sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.eigenvalues.iter().zip(x).map(|(l, xi)| l * xi).collect()
    }

    fn f_star(&self) -> Option<f64> {
        Some(0.0)
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        Some(self.l)
    }

    fn mu_hint(&self) -> Option<f64> {
        Some(self.mu)
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.dim()])
    }
}

/// Scalar nonconvex function `f(x) = x² + 3·sin²(x)`.
///
/// `f'' = 2 + 6·cos(2x)` is negative whenever `cos(2x) < −1/3`, so `f` is not
/// convex, yet `0` is its only stationary point and the PL inequality holds
/// with a constant certified numerically on `[-20, 20]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonconvexPl {
    mu_certified: f64,
}

impl NonconvexPl {
    pub const CERTIFY_LO: f64 = -20.0;
    pub const CERTIFY_HI: f64 = 20.0;
    pub const CERTIFY_POINTS: usize = 100_000;
    /// `max |f''| = 2 + 6`.
    pub const L_CERTIFIED: f64 = 8.0;

    /// Builds the objective and certifies its PL constant on the default grid.
    pub fn new() -> Self {
        let uncertified = Self { mu_certified: f64::NAN };
        let mu_certified = certify_pl_constant(
            &uncertified,
            Self::CERTIFY_LO,
            Self::CERTIFY_HI,
            Self::CERTIFY_POINTS,
        )
        .expect("default certification grid is non-empty");
        Self { mu_certified }
    }

    pub fn mu_certified(&self) -> f64 {
        self.mu_certified
    }

    pub fn second_derivative(x: f64) -> f64 {
        2.0 + 6.0 * (2.0 * x).cos()
    }
}

impl Default for NonconvexPl {
    fn default() -> Self {
        Self::new()
    }
}

impl Objective for NonconvexPl {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        let s = x[0].sin();
        x[0] * x[0] + 3.0 * s * s
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![2.0 * x[0] + 3.0 * (2.0 * x[0]).sin()]
    }

    fn f_star(&self) -> Option<f64> {
        Some(0.0)
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        Some(Self::L_CERTIFIED)
    }

    fn mu_hint(&self) -> Option<f64> {
        Some(self.mu_certified)
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![0.0])
    }
}

/// `‖∇f(x)‖² / (2·(f(x) − f*))`.
pub fn pl_ratio(obj: &dyn Objective, x: &[f64]) -> Result<f64> {
    let f_star = obj
        .f_star()
        .ok_or(Error::Undefined("PL ratio needs a known optimal value"))?;
    let (f, g) = eval_and_grad(obj, x)?;
    let gap = f - f_star;
    if gap <= 0.0 {
        return Err(Error::Undefined("PL ratio at an optimal point"));
    }
    Ok(vector::norm_sq(&g) / (2.0 * gap))
}

/// Minimum of [`pl_ratio`] over `n_grid` equispaced points of `[lo, hi]`,
/// skipping points with `f − f* < 1e-12`.
pub fn certify_pl_constant(obj: &dyn Objective, lo: f64, hi: f64, n_grid: usize) -> Result<f64> {
    check_dim(1, obj.dim())?;
    let f_star = obj
        .f_star()
        .ok_or(Error::Undefined("PL certification needs a known optimal value"))?;
    if n_grid == 0 || !(hi >= lo) {
        return Err(Error::InvalidArgument("empty certification grid".into()));
    }
    let step = if n_grid > 1 {
        (hi - lo) / (n_grid - 1) as f64
    } else {
        0.0
    };
    let mut best: Option<f64> = None;
    for i in 0..n_grid {
        let x = [lo + i as f64 * step];
        if obj.value(&x) - f_star < PL_GAP_FLOOR {
            continue;
        }
        let r = pl_ratio(obj, &x)?;
        best = Some(best.map_or(r, |b| b.min(r)));
    }
    best.ok_or_else(|| {
        Error::InvalidArgument("no grid point has a positive suboptimality gap".into())
    })
}

/// Default central-difference step `1e-5·max(1, ‖x‖_∞)`.
pub fn default_fd_step(x: &[f64]) -> f64 {
    1e-5 * vector::norm_inf(x).max(1.0)
}

/// Largest discrepancy between the analytic gradient and central differences
/// with step `h`, relative to `max(1, ‖fd‖_∞)`.
pub fn gradient_check(obj: &dyn Objective, x: &[f64], h: f64) -> Result<f64> {
    check_dim(obj.dim(), x.len())?;
    if !(h > 0.0) {
        return Err(Error::out_of_range("h", h, "must be positive"));
    }
    let g = obj.gradient(x);
    let mut probe = x.to_vec();
    let mut fd = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = obj.value(&probe);
        probe[i] = x[i] - h;
        let fm = obj.value(&probe);
        probe[i] = x[i];
        fd.push((fp - fm) / (2.0 * h));
    }
    let scale = vector::norm_inf(&fd).max(1.0);
    Ok(g.iter()
        .zip(&fd)
        .map(|(a, b)| (a - b).abs() / scale)
        .fold(0.0, f64::max))
}
