use serde::Serialize;

use super::Target;
use crate::calculus::{convolve, Mollifier, ScalarField};
use crate::curvature::{classify, ClassificationReport, ClassifyOptions};
use crate::error::{Error, Result};
use crate::field::{sample_metric, MetricField};
use crate::grid::{GridDomain, GridMeta};
use crate::linalg::{min_eigenvalue, HermitianMatrix};
use crate::samples::GridSamples;

/// Slack of the Hermitian-order monotonicity checks.
pub const MONOTONE_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct LocalStageReport {
    pub eps: f64,
    pub grid: GridMeta,
    /// Whether the asserted negativity survived the convolution.
    pub negativity_held: bool,
    /// `min λ_min(h_{ν-1} - h_ν)` over the previous stage's interior points.
    pub monotone_min_eigenvalue: Option<f64>,
    pub monotone: bool,
    /// `max ‖h_ν - h‖ / (1 + ‖h‖)` over the smooth interior samples.
    pub max_deviation: f64,
    pub classification: ClassificationReport,
}

#[derive(Debug, Clone)]
pub struct LocalStage {
    pub report: LocalStageReport,
    pub samples: GridSamples<HermitianMatrix>,
    pub metric: MetricField,
}

#[derive(Debug, Clone)]
pub struct LocalApproximation {
    /// Singular samples of the input on the source grid.
    pub exceptions: usize,
    pub stages: Vec<LocalStage>,
}

/// Convolves `h`, sampled on `domain`, with `ρ_ε` for every radius of the
/// decreasing schedule `eps`. Stage `ν` lives on `domain` shrunk by the
/// kernel reach; each stage is classified for `target` and compared with the
/// previous one in the Hermitian order.
///
/// A stage that loses the asserted negativity is reported, not an error.
pub fn smooth_approximate_local(
    h: &MetricField,
    domain: &GridDomain,
    eps: &[f64],
    target: Target,
    opts: &ClassifyOptions,
) -> Result<LocalApproximation> {
    check_schedule(eps)?;
    let source = sample_metric(h, domain)?;
    let mut stages: Vec<LocalStage> = Vec::with_capacity(eps.len());
    for &e in eps {
        let grid = domain.shrink(domain.cells_for_radius(e))?;
        let samples = convolve(&source.samples, &Mollifier::new(domain.n(), e)?, &grid)?;
        let metric = MetricField::sampled(samples.clone())?;
        let classification = classify(&metric, &grid, opts)?;
        let negativity_held = classification.verdict(target.verdict_name()).is_some_and(|v| v.pass);
        let monotone_min_eigenvalue = match stages.last() {
            Some(prev) => Some(order_gap(&prev.samples, &samples)?),
            None => None,
        };
        let max_deviation = deviation(h, &samples);
        stages.push(LocalStage {
            report: LocalStageReport {
                eps: e,
                grid: grid.meta(),
                negativity_held,
                monotone: monotone_min_eigenvalue.is_none_or(|g| g >= -MONOTONE_SLACK),
                monotone_min_eigenvalue,
                max_deviation,
                classification,
            },
            samples,
            metric,
        });
    }
    Ok(LocalApproximation { exceptions: source.exceptions.len(), stages })
}

pub(super) fn check_schedule(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::BadSchedule("empty mollifier schedule".into()));
    }
    if eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::BadSchedule("radii must be positive and finite".into()));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::BadSchedule("radii must be strictly decreasing".into()));
    }
    Ok(())
}

/// `min λ_min(a(z) - b(z))` over the interior points of `a`'s grid, which
/// must also be lattice points of `b`.
pub(super) fn order_gap(a: &GridSamples<HermitianMatrix>, b: &GridSamples<HermitianMatrix>) -> Result<f64> {
    let grid = a.domain();
    let mut worst = f64::INFINITY;
    for flat in grid.interior_indices() {
        let z = grid.point(flat);
        let hb = b.lookup(&z).ok_or_else(|| Error::DomainMismatch("stages do not share a lattice".into()))?;
        let ha = a.at(flat);
        if !(ha.is_finite() && hb.is_finite()) {
            continue;
        }
        worst = worst.min(min_eigenvalue(&ha.sub(hb))?);
    }
    Ok(worst)
}

fn deviation(h: &MetricField, s: &GridSamples<HermitianMatrix>) -> f64 {
    let grid = s.domain();
    let mut worst = 0.0f64;
    for flat in grid.interior_indices() {
        if let Ok(hz) = h.evaluate(&grid.point(flat)) {
            let d = hz.sub(s.at(flat)).as_matrix().max_abs() / (1.0 + hz.as_matrix().max_abs());
            if d.is_finite() {
                worst = worst.max(d);
            }
        }
    }
    worst
}

/// Radial cutoff about the centre of `domain`: 1 on `|z - c| ≤ inner`, 0 on
/// `|z - c| ≥ outer`, with values in `[0, 1]` and a `C^3` kernel-CDF profile
/// in `|z - c|²` between.
pub fn make_cutoff(inner: f64, outer: f64, domain: &GridDomain) -> Result<ScalarField> {
    let reach = domain.half_width().iter().map(|w| w * w).sum::<f64>().sqrt();
    if !(inner >= 0.0 && inner < outer && outer.is_finite() && inner < reach) {
        return Err(Error::BadRadii { inner, outer });
    }
    ScalarField::radial_cutoff(domain.center(), inner, outer)
}
