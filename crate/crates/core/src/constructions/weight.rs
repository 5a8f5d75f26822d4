use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{deficit, Target};
use crate::calculus::{build_convex_majorant, ConvexMajorant, MajorantBase, ScalarField};
use crate::curvature::{classify, ClassificationReport, ClassifyOptions};
use crate::error::{Error, Result};
use crate::field::MetricField;
use crate::grid::GridDomain;
use crate::linalg::min_eigenvalue;

#[derive(Debug, Clone)]
pub struct WeightSearchOptions {
    pub targets: Vec<Target>,
    /// Form value demanded at every point where a target initially fails.
    pub margin: f64,
    /// Shortfalls at or below this are left to the classifier tolerance.
    pub slack: f64,
    /// Number of `u`-level bands the requirement is sampled on.
    pub bands: usize,
    pub classify: ClassifyOptions,
}

impl Default for WeightSearchOptions {
    fn default() -> Self {
        Self {
            targets: vec![Target::GriffithsNegative],
            margin: 0.0,
            slack: 0.0,
            bands: 64,
            classify: ClassifyOptions::default(),
        }
    }
}

/// Result of [`weight_search`]: the convex weight `v`, the weighted metric
/// `e^{±v(u)}·base` and its classification.
#[derive(Debug, Clone, Serialize)]
pub struct WeightSearch {
    #[serde(skip)]
    pub profile: Arc<ConvexMajorant>,
    #[serde(skip)]
    pub metric: MetricField,
    /// Interior points where some target failed for `base`.
    pub bad_points: usize,
    /// Smallest eigenvalue of `∂∂̄u` over the bad points.
    pub hessian_floor: Option<f64>,
    /// Largest slope `v'` demanded by a single point.
    pub max_requirement: f64,
    pub knots: Vec<f64>,
    pub slopes: Vec<f64>,
    pub report: ClassificationReport,
}

impl WeightSearch {
    /// `v'(t)`.
    pub fn slope_at(&self, t: f64) -> f64 {
        crate::calculus::Profile1D::d1(&*self.profile, t)
    }
}

struct Requirement {
    t: f64,
    slope: f64,
    mu: f64,
}

/// Finds an increasing convex `v` with `v(0) = 0` such that
/// `e^{s·v(u)}·base` meets every target on the interior of `domain`, where
/// `s = ±1` is the common weight sign of the targets.
///
/// At each failing point the conformal term adds `v'(u)·∂∂̄u` (plus a
/// positive multiple of `∂u∂̄u`) to the normalized form, so
/// `v'(u)·μ ≥ shortfall + margin` with `μ = λ_min(∂∂̄u)` suffices. The
/// requirements are maximized on `u`-level bands and integrated with the
/// convex majorant, then the result is re-classified.
pub fn weight_search(
    base: &MetricField,
    u: &ScalarField,
    domain: &GridDomain,
    opts: &WeightSearchOptions,
) -> Result<WeightSearch> {
    if base.dim() != domain.n() {
        return Err(Error::DomainMismatch(format!("metric on C^{}, grid on C^{}", base.dim(), domain.n())));
    }
    let sign = weight_sign(&opts.targets)?;
    let steps = opts.classify.steps.clone().unwrap_or_else(|| domain.steps());
    let points = domain.interior_indices();
    let reqs = points
        .par_iter()
        .enumerate()
        .map(|(i, &flat)| {
            let z = domain.point(flat);
            let jet = base.jet(&z, &steps)?;
            let d = deficit(&z, &jet, &opts.targets, opts.classify.restarts, opts.classify.seed, i as u64)?;
            if d <= opts.slack {
                return Ok(None);
            }
            let uj = u.jet(&z, &steps)?;
            let mu = min_eigenvalue(&uj.hessian())?;
            if !(mu > 0.0) {
                return Err(Error::WeightSearchFailed {
                    point: z.as_slice().into(),
                    detail: format!("shortfall {d:e} where the Hessian floor of u is {mu:e}"),
                });
            }
            if uj.value < -1e-12 {
                return Err(Error::WeightSearchFailed {
                    point: z.as_slice().into(),
                    detail: format!("u = {:e} is negative on the bad region", uj.value),
                });
            }
            Ok(Some(Requirement { t: uj.value.max(0.0), slope: (d + opts.margin) / mu, mu }))
        })
        .collect::<Result<Vec<_>>>()?;
    let reqs: Vec<Requirement> = reqs.into_iter().flatten().collect();

    let profile = Arc::new(majorant(&reqs, opts.bands.max(1))?);
    let metric = if reqs.is_empty() {
        base.clone()
    } else {
        let w = ScalarField::compose(profile.clone(), u.clone());
        base.conformal_scale(ScalarField::scale(sign, w))
    };
    let copts = ClassifyOptions {
        include_dual: opts.targets.iter().any(|t| t.needs_dual()),
        steps: Some(steps),
        ..opts.classify.clone()
    };
    let report = classify(&metric, domain, &copts)?;
    for t in &opts.targets {
        let v = report.verdict(t.verdict_name()).expect("known verdict");
        if !v.pass {
            let point = v.witness.as_ref().map(|w| w.point.clone()).unwrap_or_default();
            return Err(Error::WeightSearchFailed {
                point: crate::error::PointLabel(point),
                detail: format!(
                    "{} margin {:e} below -{:e} after weighting ({} bad points, largest slope demand {:e})",
                    t.verdict_name(),
                    v.margin,
                    report.tolerance,
                    reqs.len(),
                    reqs.iter().map(|r| r.slope).fold(0.0, f64::max)
                ),
            });
        }
    }
    Ok(WeightSearch {
        knots: profile.knots().to_vec(),
        slopes: profile.slopes().to_vec(),
        profile,
        metric,
        bad_points: reqs.len(),
        hessian_floor: reqs.iter().map(|r| r.mu).reduce(f64::min),
        max_requirement: reqs.iter().map(|r| r.slope).fold(0.0, f64::max),
        report,
    })
}

pub(super) fn weight_sign(targets: &[Target]) -> Result<f64> {
    let first = targets.first().ok_or_else(|| Error::InvalidTargets("no targets given".into()))?.weight_sign();
    if targets.iter().any(|t| t.weight_sign() != first) {
        return Err(Error::InvalidTargets("targets need conformal weights of opposite signs".into()));
    }
    Ok(first)
}

/// Convex `v` with `v(0) = 0` and `v' ≥ slope` on the band of every
/// requirement.
fn majorant(reqs: &[Requirement], bands: usize) -> Result<ConvexMajorant> {
    let t_max = reqs.iter().map(|r| r.t).fold(0.0, f64::max);
    if reqs.is_empty() {
        return build_convex_majorant(&[0.0], &[0.0], MajorantBase::Zero);
    }
    if t_max <= 0.0 {
        let s = reqs.iter().map(|r| r.slope).fold(0.0, f64::max);
        return build_convex_majorant(&[0.0], &[s.sqrt()], MajorantBase::Zero);
    }
    let width = t_max / bands as f64;
    let knots: Vec<f64> = (0..=bands).map(|i| i as f64 * width).collect();
    let mut need = vec![0.0f64; bands + 1];
    for r in reqs {
        let b = ((r.t / width).floor() as usize).min(bands);
        need[b] = need[b].max(r.slope);
    }
    // the majorant enforces u' ≥ v², so feed square roots
    let v: Vec<f64> = need.iter().map(|s| s.sqrt()).collect();
    build_convex_majorant(&knots, &v, MajorantBase::Zero)
}
