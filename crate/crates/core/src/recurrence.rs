//! Scalar second-order linear recurrences `x_k = a1·x_{k-1} + a2·x_{k-2}`.
//!
//! Besides plain iteration this module classifies the roots of the
//! characteristic polynomial `λ² − a1·λ − a2`, evaluates the closed-form
//! solution in each root regime and computes the worst-case peak envelope
//! `k·ρ^{k-1} + (k-1)·ρ^k` for a double root `ρ`, which is attained by the
//! initial pair `(-1, 1)`.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};

/// Relative scale of the discriminant tolerance used to detect a double root.
pub const DISCRIMINANT_TOL: f64 = 1e-10;

/// Largest exponent evaluated by repeated multiplication; larger ones go
/// through `exp`/`ln`.
const POW_MULTIPLY_LIMIT: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderRecurrence {
    pub a1: f64,
    pub a2: f64,
    pub x0: f64,
    pub x1: f64,
}

/// Roots of `λ² − a1·λ − a2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RootClassification {
    /// Double real root.
    Equal { rho: f64 },
    /// Two real roots with `lambda1 < lambda2`.
    RealDistinct { lambda1: f64, lambda2: f64 },
    /// Conjugate pair `modulus·exp(±i·angle)` with `angle` in `(0, π)`.
    ComplexPair { modulus: f64, angle: f64 },
}

impl RootClassification {
    pub fn max_modulus(&self) -> f64 {
        match *self {
            RootClassification::Equal { rho } => rho.abs(),
            RootClassification::RealDistinct { lambda1, lambda2 } => {
                lambda1.abs().max(lambda2.abs())
            }
            RootClassification::ComplexPair { modulus, .. } => modulus,
        }
    }

    /// Coefficients `(a1, a2)` of the recurrence whose characteristic roots
    /// are `self`.
    pub fn coefficients(&self) -> (f64, f64) {
        match *self {
            RootClassification::Equal { rho } => (2.0 * rho, -rho * rho),
            RootClassification::RealDistinct { lambda1, lambda2 } => {
                (lambda1 + lambda2, -lambda1 * lambda2)
            }
            RootClassification::ComplexPair { modulus, angle } => {
                (2.0 * modulus * angle.cos(), -modulus * modulus)
            }
        }
    }
}

/// Peak analytics of the worst-case envelope for a double root `ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakReport {
    /// Stationary point of the envelope treated as a function of real `k`.
    pub k_continuous: f64,
    /// Discrete maximizer of the envelope over `k ≥ 2`.
    pub k_star: u64,
    /// Envelope value at `k_star`.
    pub peak: f64,
    /// Large-`ρ` approximation `2 / (e·(1 − ρ))` of the peak.
    pub eta_asymptotic: f64,
}

impl SecondOrderRecurrence {
    pub fn new(a1: f64, a2: f64, x0: f64, x1: f64) -> Self {
        Self { a1, a2, x0, x1 }
    }

    /// Recurrence with a double characteristic root `rho`.
    pub fn with_double_root(rho: f64, x0: f64, x1: f64) -> Self {
        Self::new(2.0 * rho, -rho * rho, x0, x1)
    }

    /// Recurrence with the two real characteristic roots given.
    pub fn with_real_roots(lambda1: f64, lambda2: f64, x0: f64, x1: f64) -> Self {
        Self::new(lambda1 + lambda2, -lambda1 * lambda2, x0, x1)
    }

    /// Returns `x_0, …, x_K`.
    pub fn iterate(&self, k_max: usize) -> Result<Vec<f64>> {
        if k_max == 0 {
            return Err(Error::InvalidArgument(
                "iteration count must be at least 1".into(),
            ));
        }
        let mut xs = Vec::with_capacity(k_max + 1);
        xs.push(self.x0);
        xs.push(self.x1);
        for k in 2..=k_max {
            let next = self.a1 * xs[k - 1] + self.a2 * xs[k - 2];
            xs.push(next);
        }
        Ok(xs)
    }

    pub fn characteristic_roots(&self) -> RootClassification {
        let (a1, a2) = (self.a1, self.a2);
        let disc = a1 * a1 + 4.0 * a2;
        let tol = DISCRIMINANT_TOL * 1f64.max(a1 * a1).max(a2.abs());
        if disc.abs() <= tol {
            RootClassification::Equal { rho: 0.5 * a1 }
        } else if disc > 0.0 {
            // Larger-magnitude root first, the other from the product -a2.
            let s = disc.sqrt();
            let big = 0.5 * (a1 + a1.signum() * s);
            let small = -a2 / big;
            let (lambda1, lambda2) = if big < small {
                (big, small)
            } else {
                (small, big)
            };
            RootClassification::RealDistinct { lambda1, lambda2 }
        } else {
            let modulus = (-a2).sqrt();
            let angle = (0.5 * (-disc).sqrt()).atan2(0.5 * a1);
            RootClassification::ComplexPair { modulus, angle }
        }
    }

    /// `true` iff every characteristic root lies strictly inside the unit disk.
    pub fn is_stable(&self) -> bool {
        let by_roots = self.characteristic_roots().max_modulus() < 1.0;
        let jury_margin = (1.0 - self.a2.abs()).min(1.0 - self.a2 - self.a1.abs());
        let by_jury = jury_margin > 0.0;
        debug_assert!(
            by_roots == by_jury || jury_margin.abs() <= 1e-8,
            "root-based and Jury stability tests disagree for a1={}, a2={}",
            self.a1,
            self.a2
        );
        by_roots
    }

    /// Rescales the initial pair into the unit box `‖(x0, x1)‖_∞ = 1`.
    ///
    /// Returns the scaled recurrence and the factor that was divided out, or
    /// `None` for the zero initial pair.
    pub fn unit_box_normalized(&self) -> Option<(Self, f64)> {
        let scale = self.x0.abs().max(self.x1.abs());
        if scale == 0.0 || !scale.is_finite() {
            return None;
        }
        Some((
            Self::new(self.a1, self.a2, self.x0 / scale, self.x1 / scale),
            scale,
        ))
    }
}

/// `base^k`: repeated multiplication for small `k`, `exp(k·ln|base|)` above.
pub fn pow_k(base: f64, k: u64) -> f64 {
    if k <= POW_MULTIPLY_LIMIT {
        let mut acc = 1.0;
        for _ in 0..k {
            acc *= base;
        }
        acc
    } else if base == 0.0 {
        0.0
    } else {
        let magnitude = (k as f64 * base.abs().ln()).exp();
        if base < 0.0 && k % 2 == 1 {
            -magnitude
        } else {
            magnitude
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::out_of_range("rho", rho, "must lie in (0, 1)"))
    }
}

/// Double-root solution without the range check; valid for any `ρ ≠ 0`
/// and for `ρ = 0` when `k ≥ 2`.
pub(crate) fn equal_roots_unchecked(rho: f64, x0: f64, x1: f64, k: u64) -> f64 {
    match k {
        0 => x0,
        1 => x1,
        _ => {
            let prev = pow_k(rho, k - 1);
            x1 * k as f64 * prev - x0 * (k - 1) as f64 * prev * rho
        }
    }
}

/// Closed form `x_k = x1·k·ρ^{k-1} − x0·(k−1)·ρ^k` for a double root.
pub fn closed_form_equal_roots(rho: f64, x0: f64, x1: f64, k: u64) -> Result<f64> {
    check_rho(rho)?;
    Ok(equal_roots_unchecked(rho, x0, x1, k))
}

/// Closed form `c1·λ1^k + c2·λ2^k` for distinct real roots.
pub fn closed_form_real_roots(lambda1: f64, lambda2: f64, x0: f64, x1: f64, k: u64) -> Result<f64> {
    for (name, l) in [("lambda1", lambda1), ("lambda2", lambda2)] {
        if !(l.abs() < 1.0) {
            return Err(Error::out_of_range(name, l, "root modulus must be below 1"));
        }
    }
    if lambda1 == lambda2 {
        return Err(Error::InvalidArgument(
            "roots coincide; use the equal-roots form".into(),
        ));
    }
    let c2 = (x1 - lambda1 * x0) / (lambda2 - lambda1);
    let c1 = x0 - c2;
    Ok(c1 * pow_k(lambda1, k) + c2 * pow_k(lambda2, k))
}

/// Closed form `[C1·cos(kθ) + C2·sin(kθ)]·r^k` for a conjugate pair `r·e^{±iθ}`.
pub fn closed_form_complex(modulus: f64, angle: f64, x0: f64, x1: f64, k: u64) -> Result<f64> {
    check_rho(modulus).map_err(|_| Error::out_of_range("modulus", modulus, "must lie in (0, 1)"))?;
    if !(angle > 0.0 && angle < PI) {
        return Err(Error::out_of_range(
            "angle",
            angle,
            "must lie strictly between 0 and pi",
        ));
    }
    let c1 = x0;
    let c2 = (x1 - modulus * angle.cos() * x0) / (modulus * angle.sin());
    let phase = k as f64 * angle;
    Ok((c1 * phase.cos() + c2 * phase.sin()) * pow_k(modulus, k))
}

/// Worst case over the unit box of `x_k` for a double root `ρ`:
/// `k·ρ^{k-1} + (k−1)·ρ^k`.
pub fn worst_case_peak_envelope(rho: f64, k: u64) -> Result<f64> {
    check_rho(rho)?;
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "envelope is defined for k >= 2, got k = {k}"
        )));
    }
    let prev = pow_k(rho, k - 1);
    Ok(k as f64 * prev + (k - 1) as f64 * prev * rho)
}

/// Upper end of the discrete scan used to confirm the envelope maximizer.
pub fn scan_bound(rho: f64) -> u64 {
    100u64.max((10.0 / (1.0 - rho)).ceil() as u64)
}

/// Stationary point of the envelope in continuous `k`.
pub fn continuous_peak_time(rho: f64) -> f64 {
    let ln = rho.ln();
    (rho * ln - rho - 1.0) / (ln * (1.0 + rho))
}

/// Locates the envelope maximum for a double root `ρ`.
///
/// The two integer neighbours of the continuous stationary point are
/// compared and the winner is confirmed against a full scan over
/// `2..=scan_bound(ρ)`; a bare ceiling of the stationary point is not always
/// the discrete maximizer (`ρ = 0.6` peaks at `k = 2`, not `3`).
pub fn peak_time(rho: f64) -> Result<PeakReport> {
    check_rho(rho)?;
    let k_continuous = continuous_peak_time(rho);
    let lo = (k_continuous.floor() as u64).max(2);
    let hi = (k_continuous.ceil() as u64).max(2);
    let env = |k| worst_case_peak_envelope(rho, k);
    let mut k_star = if env(hi)? > env(lo)? { hi } else { lo };
    let mut best = env(k_star)?;
    for k in 2..=scan_bound(rho) {
        let v = env(k)?;
        if v > best {
            best = v;
            k_star = k;
        }
    }
    Ok(PeakReport {
        k_continuous,
        k_star,
        peak: env(k_star)?,
        eta_asymptotic: eta_asymptotic(rho)?,
    })
}

/// `2 / (e·(1 − ρ))`.
pub fn eta_asymptotic(rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(2.0 / (E * (1.0 - rho)))
}

/// Largest `|x_k|` over `k ≥ 2` and its index.
pub fn trajectory_peak(xs: &[f64]) -> Option<(usize, f64)> {
    xs.iter()
        .enumerate()
        .skip(2)
        .fold(None, |best: Option<(usize, f64)>, (k, &x)| match best {
            Some((_, v)) if v >= x.abs() => best,
            _ => Some((k, x.abs())),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn iterate_examples() {
        let rec = SecondOrderRecurrence::new(1.2, -0.36, 0.0, 1.0);
        assert_eq!(rec.iterate(2).unwrap(), vec![0.0, 1.0, 1.2]);

        let zero = SecondOrderRecurrence::new(1.7, -0.3, 0.0, 0.0);
        assert!(zero.iterate(10).unwrap().iter().all(|&x| x == 0.0));

        let dead = SecondOrderRecurrence::new(0.0, 0.0, 3.0, 5.0);
        assert_eq!(dead.iterate(3).unwrap(), vec![3.0, 5.0, 0.0, 0.0]);

        assert!(rec.iterate(0).is_err());
    }

    #[test]
    fn classify_examples() {
        let eq = SecondOrderRecurrence::new(1.2, -0.36, 0.0, 0.0).characteristic_roots();
        match eq {
            RootClassification::Equal { rho } => assert_relative_eq!(rho, 0.6, max_relative = 1e-15),
            other => panic!("expected double root, got {other:?}"),
        }

        let real = SecondOrderRecurrence::new(1.5, -0.56, 0.0, 0.0).characteristic_roots();
        match real {
            RootClassification::RealDistinct { lambda1, lambda2 } => {
                assert_relative_eq!(lambda1, 0.7, max_relative = 1e-12);
                assert_relative_eq!(lambda2, 0.8, max_relative = 1e-12);
            }
            other => panic!("expected real roots, got {other:?}"),
        }

        let cplx = SecondOrderRecurrence::new(0.0, -0.25, 0.0, 0.0).characteristic_roots();
        match cplx {
            RootClassification::ComplexPair { modulus, angle } => {
                assert_relative_eq!(modulus, 0.5);
                assert_relative_eq!(angle, PI / 2.0);
            }
            other => panic!("expected complex pair, got {other:?}"),
        }
    }

    #[test]
    fn real_roots_with_zero_linear_coefficient() {
        let roots = SecondOrderRecurrence::new(0.0, 0.25, 0.0, 0.0).characteristic_roots();
        assert_eq!(
            roots,
            RootClassification::RealDistinct {
                lambda1: -0.5,
                lambda2: 0.5
            }
        );
    }

    #[test]
    fn stability_examples() {
        assert!(SecondOrderRecurrence::new(1.2, -0.36, 0.0, 0.0).is_stable());
        assert!(!SecondOrderRecurrence::new(2.0, -1.0, 0.0, 0.0).is_stable());
        assert!(!SecondOrderRecurrence::new(0.0, 1.0, 0.0, 0.0).is_stable());
        assert!(!SecondOrderRecurrence::new(0.0, -1.5, 0.0, 0.0).is_stable());
    }

    #[test]
    fn equal_roots_examples() {
        assert_relative_eq!(closed_form_equal_roots(0.6, 0.0, 1.0, 2).unwrap(), 1.2, max_relative = 1e-15);
        assert_eq!(closed_form_equal_roots(0.3, 7.5, -2.0, 0).unwrap(), 7.5);
        assert_eq!(closed_form_equal_roots(0.3, 7.5, -2.0, 1).unwrap(), -2.0);
        assert_relative_eq!(closed_form_equal_roots(0.6, -1.0, 1.0, 3).unwrap(), 1.512, max_relative = 1e-14);
        assert!(closed_form_equal_roots(1.0, 0.0, 1.0, 3).is_err());
        assert!(closed_form_equal_roots(-0.5, 0.0, 1.0, 3).is_err());
    }

    #[test]
    fn real_roots_examples() {
        assert_relative_eq!(closed_form_real_roots(0.7, 0.8, 0.0, 1.0, 2).unwrap(), 1.5, max_relative = 1e-12);
        assert_relative_eq!(closed_form_real_roots(0.4, 0.5, 0.0, 1.0, 2).unwrap(), 0.9, max_relative = 1e-12);
        for k in 0..30 {
            let pure = closed_form_real_roots(0.35, -0.8, 1.0, 0.35, k).unwrap();
            assert_relative_eq!(pure, 0.35f64.powi(k as i32), max_relative = 1e-12);
        }
        assert!(closed_form_real_roots(0.5, 0.5, 0.0, 1.0, 2).is_err());
    }

    #[test]
    fn complex_examples() {
        assert_relative_eq!(
            closed_form_complex(0.5, PI / 2.0, 1.0, 0.0, 2).unwrap(),
            -0.25,
            epsilon = 1e-15
        );
        for k in 0..20 {
            assert_eq!(closed_form_complex(0.8, 1.0, 0.0, 0.0, k).unwrap(), 0.0);
        }
        let v = closed_form_complex(0.9, PI / 3.0, 0.0, 1.0, 3).unwrap();
        assert!(v.abs() < 1e-15, "{v}");
        assert!(closed_form_complex(0.9, 0.0, 0.0, 1.0, 3).is_err());
        assert!(closed_form_complex(0.9, PI, 0.0, 1.0, 3).is_err());
    }

    #[test]
    fn envelope_examples() {
        assert_relative_eq!(worst_case_peak_envelope(0.6, 2).unwrap(), 1.56, max_relative = 1e-15);
        assert_relative_eq!(worst_case_peak_envelope(0.6, 3).unwrap(), 1.512, max_relative = 1e-15);
        let tiny = worst_case_peak_envelope(1e-9, 2).unwrap();
        assert!(tiny < 3e-9);
        assert!(worst_case_peak_envelope(0.6, 1).is_err());
    }

    #[test]
    fn peak_time_examples() {
        let r = peak_time(0.6).unwrap();
        assert_relative_eq!(r.k_continuous, 2.3326151889712174, max_relative = 1e-12);
        assert_eq!(r.k_star, 2);
        assert_relative_eq!(r.peak, 1.56, max_relative = 1e-15);
        // the bare ceiling would have picked k = 3
        assert_eq!(r.k_continuous.ceil() as u64, 3);

        let r = peak_time(0.9).unwrap();
        assert_eq!(r.k_star, 10);
        assert_relative_eq!(r.peak, 7.0123108509, max_relative = 1e-10);

        assert_eq!(peak_time(0.01).unwrap().k_star, 2);
    }

    #[test]
    fn eta_examples() {
        assert_relative_eq!(eta_asymptotic(0.99).unwrap(), 73.57588823428846, max_relative = 1e-12);
        assert_relative_eq!(eta_asymptotic(0.5).unwrap(), 4.0 / E, max_relative = 1e-15);
        assert!(eta_asymptotic(1.0).is_err());
    }

    #[test]
    fn pow_switches_to_exp_log_above_limit() {
        assert_relative_eq!(pow_k(0.97, 64), 0.97f64.powi(64), max_relative = 1e-14);
        assert_relative_eq!(pow_k(0.97, 500), 0.97f64.powi(500), max_relative = 1e-12);
        assert_relative_eq!(pow_k(-0.97, 501), -(0.97f64.powi(501)), max_relative = 1e-12);
        assert_eq!(pow_k(0.0, 100), 0.0);
    }

    #[test]
    fn normalization_keeps_shape() {
        let rec = SecondOrderRecurrence::new(1.2, -0.36, -4.0, 2.0);
        let (n, s) = rec.unit_box_normalized().unwrap();
        assert_eq!(s, 4.0);
        assert_eq!((n.x0, n.x1), (-1.0, 0.5));
        assert!(SecondOrderRecurrence::new(1.0, 0.0, 0.0, 0.0).unit_box_normalized().is_none());
    }

    #[test]
    fn trajectory_peak_skips_initial_pair() {
        assert_eq!(trajectory_peak(&[10.0, -9.0, 0.5, -0.7, 0.1]), Some((3, 0.7)));
        assert_eq!(trajectory_peak(&[1.0, 1.0]), None);
    }
}
