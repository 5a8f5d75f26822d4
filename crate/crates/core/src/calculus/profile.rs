//! One-dimensional profiles: the compact polynomial kernel, the regularized
//! maximum built from it, smooth steps, and the convex majorant.

use std::fmt;

use crate::error::{Error, Result};

/// A `C^2` function of one real variable.
pub trait Profile1D: fmt::Debug + Send + Sync {
    fn value(&self, t: f64) -> f64;
    fn d1(&self, t: f64) -> f64;
    fn d2(&self, t: f64) -> f64;
    fn describe(&self) -> String;
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

const KERNEL_NORM: f64 = 315.0 / 256.0;
// (1 - τ²)^4
const KERNEL_POLY: [f64; 9] = [1.0, 0.0, -4.0, 0.0, 6.0, 0.0, -4.0, 0.0, 1.0];
// antiderivative of (1 - τ²)^4, zero at the origin
const KERNEL_INT: [f64; 10] = [0.0, 1.0, 0.0, -4.0 / 3.0, 0.0, 6.0 / 5.0, 0.0, -4.0 / 7.0, 0.0, 1.0 / 9.0];
// antiderivative of τ (1 - τ²)^4 = -(1 - τ²)^5 / 10, written as a polynomial
const KERNEL_MOMENT_INT: [f64; 11] = [-0.1, 0.0, 0.5, 0.0, -1.0, 0.0, 1.0, 0.0, -0.5, 0.0, 0.1];

/// `K(τ) = (315/256)(1 - τ²)^4` on `[-1, 1]`, unit mass, `C^3`.
pub fn kernel(tau: f64) -> f64 {
    if tau.abs() >= 1.0 {
        0.0
    } else {
        KERNEL_NORM * horner(&KERNEL_POLY, tau)
    }
}

/// `∫_{-1}^{σ} K`.
pub fn kernel_cdf(sigma: f64) -> f64 {
    if sigma <= -1.0 {
        0.0
    } else if sigma >= 1.0 {
        1.0
    } else {
        0.5 + KERNEL_NORM * horner(&KERNEL_INT, sigma)
    }
}

/// `∫_{-1}^{σ} τ K(τ) dτ`.
fn kernel_first_moment(sigma: f64) -> f64 {
    let s = sigma.clamp(-1.0, 1.0);
    KERNEL_NORM * (horner(&KERNEL_MOMENT_INT, s) - horner(&KERNEL_MOMENT_INT, -1.0))
}

/// Smoothed positive part `M_δ(s) = ∫ max(s - δτ, 0) K(τ) dτ`.
///
/// Equals `max(s, 0)` for `|s| ≥ δ`, is convex and `C^4`, and
/// `M_δ(0) = 63δ/512`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothPositivePart {
    pub delta: f64,
}

impl SmoothPositivePart {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::NonFinite(format!("regularization width {delta}")));
        }
        Ok(Self { delta })
    }
}

impl Profile1D for SmoothPositivePart {
    fn value(&self, s: f64) -> f64 {
        let sigma = s / self.delta;
        if sigma <= -1.0 {
            0.0
        } else if sigma >= 1.0 {
            s
        } else {
            self.delta * (sigma * kernel_cdf(sigma) - kernel_first_moment(sigma))
        }
    }
    fn d1(&self, s: f64) -> f64 {
        kernel_cdf(s / self.delta)
    }
    fn d2(&self, s: f64) -> f64 {
        kernel(s / self.delta) / self.delta
    }
    fn describe(&self) -> String {
        format!("smooth_positive_part(delta={})", self.delta)
    }
}

/// Regularized maximum `y + M_δ(x - y)`.
///
/// Symmetric in `x, y`, equal to `max(x, y)` when `|x - y| ≥ δ`, and
/// nondecreasing in each argument.
pub fn regularized_max(x: f64, y: f64, delta: f64) -> f64 {
    y + SmoothPositivePart { delta }.value(x - y)
}

/// Smooth monotone transition from 0 at `lo` to 1 at `hi` (or the reverse
/// when `descending`), built from the kernel CDF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothStep {
    pub lo: f64,
    pub hi: f64,
    pub descending: bool,
}

impl SmoothStep {
    pub fn new(lo: f64, hi: f64, descending: bool) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::BadRadii { inner: lo, outer: hi });
        }
        Ok(Self { lo, hi, descending })
    }

    fn sigma(&self, t: f64) -> f64 {
        2.0 * (t - self.lo) / (self.hi - self.lo) - 1.0
    }

    fn sign(&self) -> f64 {
        if self.descending {
            -1.0
        } else {
            1.0
        }
    }
}

impl Profile1D for SmoothStep {
    fn value(&self, t: f64) -> f64 {
        let v = kernel_cdf(self.sigma(t));
        if self.descending {
            1.0 - v
        } else {
            v
        }
    }
    fn d1(&self, t: f64) -> f64 {
        self.sign() * kernel(self.sigma(t)) * 2.0 / (self.hi - self.lo)
    }
    fn d2(&self, t: f64) -> f64 {
        let s = self.sigma(t);
        if s.abs() >= 1.0 {
            return 0.0;
        }
        // K'(σ) = -8σ (315/256)(1 - σ²)^3
        let kp = -8.0 * s * KERNEL_NORM * (1.0 - s * s).powi(3);
        let a = 2.0 / (self.hi - self.lo);
        self.sign() * kp * a * a
    }
    fn describe(&self) -> String {
        format!("smooth_step(lo={}, hi={}, descending={})", self.lo, self.hi, self.descending)
    }
}

/// `t ↦ exp(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpProfile;

impl Profile1D for ExpProfile {
    fn value(&self, t: f64) -> f64 {
        t.exp()
    }
    fn d1(&self, t: f64) -> f64 {
        t.exp()
    }
    fn d2(&self, t: f64) -> f64 {
        t.exp()
    }
    fn describe(&self) -> String {
        "exp".into()
    }
}

/// Where the majorant is anchored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MajorantBase {
    /// `u(0) = 0`
    Zero,
    /// `u(0) = u0 ≥ 0`
    Value(f64),
}

/// `C^1`, convex, increasing, piecewise-quadratic `u` with
/// `u'(t) ≥ max_{j ≤ i+1} v_j²` on `[t_i, t_{i+1}]`.
///
/// `u'` interpolates linearly between knot slopes and is constant after the
/// last knot; before the first knot `u` is affine.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexMajorant {
    knots: Vec<f64>,
    slopes: Vec<f64>,
    values: Vec<f64>,
}

impl ConvexMajorant {
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    fn segment(&self, t: f64) -> usize {
        // last knot index with knot <= t
        self.knots.partition_point(|&k| k <= t).saturating_sub(1)
    }
}

/// Builds the majorant from knots `t_0 = 0 < t_1 < ... < t_N` and band
/// requirements `v_0..v_N`.
pub fn build_convex_majorant(t: &[f64], v: &[f64], base: MajorantBase) -> Result<ConvexMajorant> {
    if t.is_empty() || t.len() != v.len() {
        return Err(Error::BadKnots(format!("{} knots for {} requirements", t.len(), v.len())));
    }
    if t[0] != 0.0 {
        return Err(Error::BadKnots(format!("first knot must be 0, got {}", t[0])));
    }
    if t.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(Error::BadKnots("knots must be finite and strictly increasing".into()));
    }
    if let Some((index, &value)) = v.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::NegativeSlopeInput { index, value });
    }
    let u0 = match base {
        MajorantBase::Zero => 0.0,
        MajorantBase::Value(u0) if u0.is_finite() && u0 >= 0.0 => u0,
        MajorantBase::Value(u0) => return Err(Error::NegativeSlopeInput { index: 0, value: u0 }),
    };
    let m = t.len();
    // slope at knot i covers every requirement up to band i+1, so the linear
    // interpolation on [t_i, t_{i+1}] never dips below them
    let mut slopes = Vec::with_capacity(m);
    let mut running = 0.0f64;
    for i in 0..m {
        running = running.max(v[i] * v[i]);
        if i + 1 < m {
            running = running.max(v[i + 1] * v[i + 1]);
        }
        slopes.push(running);
    }
    let mut values = Vec::with_capacity(m);
    values.push(u0);
    for i in 1..m {
        let dt = t[i] - t[i - 1];
        values.push(values[i - 1] + 0.5 * (slopes[i - 1] + slopes[i]) * dt);
    }
    Ok(ConvexMajorant { knots: t.to_vec(), slopes, values })
}

impl Profile1D for ConvexMajorant {
    fn value(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let tau = t - self.knots[i];
        if t < self.knots[0] || i + 1 == self.knots.len() {
            return self.values[i] + self.slopes[i] * tau;
        }
        let dt = self.knots[i + 1] - self.knots[i];
        let c = (self.slopes[i + 1] - self.slopes[i]) / dt;
        self.values[i] + self.slopes[i] * tau + 0.5 * c * tau * tau
    }
    fn d1(&self, t: f64) -> f64 {
        let i = self.segment(t);
        if t < self.knots[0] || i + 1 == self.knots.len() {
            return self.slopes[i];
        }
        let dt = self.knots[i + 1] - self.knots[i];
        self.slopes[i] + (self.slopes[i + 1] - self.slopes[i]) * (t - self.knots[i]) / dt
    }
    fn d2(&self, t: f64) -> f64 {
        let i = self.segment(t);
        if t < self.knots[0] || i + 1 == self.knots.len() {
            return 0.0;
        }
        (self.slopes[i + 1] - self.slopes[i]) / (self.knots[i + 1] - self.knots[i])
    }
    fn describe(&self) -> String {
        format!(
            "convex_majorant(knots={}, final_slope={})",
            self.knots.len(),
            self.slopes.last().copied().unwrap_or(0.0)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
        // composite Simpson
        let h = (b - a) / m as f64;
        let mut s = f(a) + f(b);
        for i in 1..m {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn kernel_has_unit_mass() {
        assert!((integrate(kernel, -1.0, 1.0, 2000) - 1.0).abs() < 1e-12);
        assert!((kernel_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((kernel_cdf(1.0 - 1e-12) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn regmax_at_the_diagonal() {
        let t = 1.7;
        let delta = 0.4;
        let want = t + 63.0 / 512.0 * delta;
        assert!((regularized_max(t, t, delta) - want).abs() < 1e-14);
        // independent quadrature of ∫ max(-δτ, 0) K(τ) dτ
        let q = integrate(|tau| (-delta * tau).max(0.0) * kernel(tau), -1.0, 1.0, 4000);
        assert!((q - 63.0 / 512.0 * delta).abs() < 1e-10);
    }

    #[test]
    fn regmax_derivatives_match_differences() {
        let p = SmoothPositivePart { delta: 0.5 };
        for s in [-0.4, -0.1, 0.0, 0.2, 0.45] {
            let h = 1e-5;
            let d1 = (p.value(s + h) - p.value(s - h)) / (2.0 * h);
            let d2 = (p.value(s + h) - 2.0 * p.value(s) + p.value(s - h)) / (h * h);
            assert!((d1 - p.d1(s)).abs() < 1e-8);
            assert!((d2 - p.d2(s)).abs() < 1e-4);
        }
    }

    #[test]
    fn smooth_step_endpoints() {
        let s = SmoothStep::new(1.0, 3.0, true).unwrap();
        assert_eq!(s.value(0.5), 1.0);
        assert_eq!(s.value(3.5), 0.0);
        assert!((s.value(2.0) - 0.5).abs() < 1e-15);
        let h = 1e-5;
        for t in [1.3, 2.0, 2.7] {
            assert!(((s.value(t + h) - s.value(t - h)) / (2.0 * h) - s.d1(t)).abs() < 1e-8);
            assert!(((s.d1(t + h) - s.d1(t - h)) / (2.0 * h) - s.d2(t)).abs() < 1e-6);
        }
        assert!(SmoothStep::new(2.0, 1.0, false).is_err());
    }

    #[test]
    fn majorant_rejects_bad_input() {
        assert!(matches!(
            build_convex_majorant(&[0.0, 1.0], &[1.0, -1.0], MajorantBase::Zero),
            Err(Error::NegativeSlopeInput { index: 1, .. })
        ));
        assert!(build_convex_majorant(&[0.5, 1.0], &[1.0, 1.0], MajorantBase::Zero).is_err());
        assert!(build_convex_majorant(&[0.0, 0.0], &[1.0, 1.0], MajorantBase::Zero).is_err());
    }

    #[test]
    fn majorant_is_c1() {
        let u = build_convex_majorant(&[0.0, 1.0, 2.5, 4.0], &[0.5, 2.0, 1.0, 3.0], MajorantBase::Value(1.0)).unwrap();
        assert_eq!(u.value(0.0), 1.0);
        for &k in &u.knots()[1..] {
            let e = 1e-9;
            assert!((u.value(k + e) - u.value(k - e)).abs() < 1e-7);
            assert!((u.d1(k + e) - u.d1(k - e)).abs() < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn regmax_properties(x in -5.0f64..5.0, y in -5.0f64..5.0, delta in 0.01f64..2.0, bump in 0.0f64..1.0) {
            let m = regularized_max(x, y, delta);
            prop_assert!((m - regularized_max(y, x, delta)).abs() < 1e-12);
            prop_assert!(m >= x.max(y) - 1e-12);
            prop_assert!(m <= x.max(y) + delta);
            if (x - y).abs() >= 2.0 * delta {
                prop_assert!((m - x.max(y)).abs() < 1e-12);
            }
            prop_assert!(regularized_max(x + bump, y, delta) >= m - 1e-12);
        }

        #[test]
        fn majorant_dominates(
            steps in proptest::collection::vec(0.05f64..2.0, 1..12),
            reqs in proptest::collection::vec(0.0f64..10.0, 12),
        ) {
            let mut t = vec![0.0];
            for s in &steps {
                t.push(t.last().unwrap() + s);
            }
            let v = &reqs[..t.len()];
            let u = build_convex_majorant(&t, v, MajorantBase::Zero).unwrap();
            for i in 0..t.len() {
                let hi = if i + 1 < t.len() { t[i + 1] } else { t[i] + 1.0 };
                for q in 0..=8 {
                    let s = t[i] + (hi - t[i]) * q as f64 / 8.0;
                    prop_assert!(u.d1(s) >= v[i] * v[i] - 1e-9);
                    prop_assert!(u.d2(s) >= -1e-12);
                    if i + 1 < t.len() {
                        prop_assert!(u.d1(s) >= v[i + 1] * v[i + 1] - 1e-9);
                    }
                }
            }
        }
    }
}
