use serde::Serialize;

use super::local::{check_schedule, MONOTONE_SLACK};
use super::{weight_search, Target, WeightSearch, WeightSearchOptions};
use crate::calculus::{convolve, Mollifier, ScalarField};
use crate::curvature::ClassifyOptions;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::{sample_metric, MetricField};
use crate::grid::{GridDomain, GridMeta};
use crate::linalg::{min_eigenvalue, HermitianMatrix};
use crate::samples::GridSamples;

#[derive(Debug, Clone)]
pub struct GlobalOptions {
    /// Stage indices `k`, strictly increasing; `X_k = {|z - c| ≤ k·unit}`.
    pub stages: Vec<usize>,
    /// `ε_k`, strictly decreasing.
    pub eps: Vec<f64>,
    pub unit: f64,
    pub target: Target,
    /// Radius of the compact set `K = {|z - c| ≤ ρ}` monotonicity is checked on.
    pub compact_radius: Option<f64>,
    pub bands: usize,
    pub classify: ClassifyOptions,
}

impl Default for GlobalOptions {
    fn default() -> Self {
        Self {
            stages: vec![1, 2, 3],
            eps: vec![0.3, 0.2, 0.1],
            unit: 1.0,
            target: Target::GriffithsNegative,
            compact_radius: None,
            bands: 64,
            classify: ClassifyOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub k: usize,
    pub radius: f64,
    pub eps: f64,
    /// Band of the regularized max, `¼ dist(X_k, ∂U_k)`.
    pub delta: Option<f64>,
    /// `[inner, outer]` radii of `χ_k`; `None` when `X_k` fills the valid
    /// region and `χ_k ≡ 1`.
    pub cutoff: Option<[f64; 2]>,
    /// `max |u_k|` over grid points of `X_k`.
    pub u_on_inner: f64,
    /// `min u_k` over grid points outside `U_k`.
    pub c_k: Option<f64>,
    pub in1_holds: bool,
    pub weight: WeightSearch,
}

#[derive(Debug, Clone)]
pub struct GlobalStage {
    pub report: StageReport,
    /// `h̃_k`.
    pub metric: MetricField,
    /// `(h∘π) ∗ ρ_{ε_k}` on the stage's convolution grid.
    pub convolution: GridSamples<HermitianMatrix>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotoneCheck {
    pub from: usize,
    pub to: usize,
    /// `min λ_min(h_from - h_to)` over the sample points of `K`.
    pub min_eigenvalue: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GlobalApproximation {
    pub grid: GridMeta,
    pub compact_radius: Option<f64>,
    /// Smallest stage whose `X_k` contains `K` in its interior.
    pub k_of_compact: Option<usize>,
    /// Sample points of `K` (on `X` when a defining tuple is given).
    pub compact_points: usize,
    /// Consecutive-stage checks from `k(K)` on.
    pub monotone: Vec<MonotoneCheck>,
    pub monotone_from_k: bool,
    /// `min λ_min(h_k - h)` over `K` for each stage from `k(K)` on.
    pub above_limit: Vec<f64>,
    #[serde(skip)]
    pub stages: Vec<GlobalStage>,
    pub stage_reports: Vec<StageReport>,
}

/// Assembles `h̃_k = e^{v_k(u_k)}(χ_k·(h∘π)∗ρ_{ε_k} + ε_k I)` for every
/// stage, with `u_k = max_δ(|z - c|² - R_k² - δ_k, 0) + |f|²`, and checks
/// that `h̃_k` decreases on `K` for `k ≥ k(K)`.
///
/// `h` is the metric already pulled back to the box (`h∘π`); `defining` is
/// the tuple `f` cutting out the model (empty when the model is the box).
/// All stages are classified on the grid of the largest radius.
pub fn global_approximate(
    h: &MetricField,
    defining: &[Expr],
    domain: &GridDomain,
    opts: &GlobalOptions,
) -> Result<GlobalApproximation> {
    check_schedule(&opts.eps)?;
    if opts.stages.len() != opts.eps.len() {
        return Err(Error::BadSchedule(format!("{} stages but {} radii", opts.stages.len(), opts.eps.len())));
    }
    if opts.stages.first() == Some(&0) || opts.stages.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadSchedule("stage indices must be positive and strictly increasing".into()));
    }
    if !(opts.unit.is_finite() && opts.unit > 0.0) {
        return Err(Error::BadSchedule("radius unit must be positive".into()));
    }
    if !matches!(opts.target, Target::GriffithsNegative | Target::NakanoNegative) {
        return Err(Error::InvalidTargets("approximation targets Griffiths or Nakano negativity".into()));
    }
    let n = domain.n();
    let center = domain.center().to_vec();
    let source = sample_metric(h, domain)?;
    let common = domain.shrink(domain.cells_for_radius(opts.eps[0]))?;
    let steps = common.steps();
    let tol = opts.classify.tol.unwrap_or(10.0 * common.max_step().powi(2));
    let classify = ClassifyOptions { tol: Some(tol), steps: Some(steps), ..opts.classify.clone() };
    let f2 = ScalarField::norm_squared(defining, n);
    let dist2 = ScalarField::squared_distance(&center);
    let interior: Vec<usize> = common.interior_indices();

    let mut stages = Vec::with_capacity(opts.stages.len());
    for (&k, &eps) in opts.stages.iter().zip(&opts.eps) {
        let radius = k as f64 * opts.unit;
        let grid = domain.shrink(domain.cells_for_radius(eps))?;
        let convolution = convolve(&source.samples, &Mollifier::new(n, eps)?, &grid)?;
        let conv = MetricField::sampled(convolution.clone())?;
        let reach = grid.half_width().iter().copied().fold(f64::INFINITY, f64::min);
        let d = reach - radius;
        let shift = MetricField::constant(n, HermitianMatrix::identity(h.rank()).scale(eps));
        let (base, u, delta, cutoff) = if d > 0.0 {
            let a = d / 3.0;
            let (inner, outer) = (radius + a, radius + 2.0 * a);
            let chi = ScalarField::radial_cutoff(&center, inner, outer)?;
            let delta = a / 4.0;
            let x = ScalarField::sum(vec![dist2.clone(), ScalarField::constant(-radius * radius - delta)]);
            let m = ScalarField::regularized_max(&x, &ScalarField::constant(0.0), delta)?;
            let base = MetricField::sum(vec![conv.scalar_mul(chi), shift])?;
            (base, m.add(&f2), Some(delta), Some([inner, outer]))
        } else {
            (MetricField::sum(vec![conv, shift])?, f2.clone(), None, None)
        };
        let wopts = WeightSearchOptions {
            targets: vec![opts.target],
            margin: 0.0,
            slack: 1e-3 * tol,
            bands: opts.bands,
            classify: classify.clone(),
        };
        let weight = weight_search(&base, &u, &common, &wopts)?;

        let mut u_on_inner = 0.0f64;
        let mut c_k: Option<f64> = None;
        for &flat in &interior {
            let z = common.point(flat);
            let r2 = dist2.value(&z)?;
            let uz = u.value(&z)?;
            if r2 <= radius * radius && f2.value(&z)? <= 1e-24 {
                u_on_inner = u_on_inner.max(uz.abs());
            }
            if let Some([inner, _]) = cutoff {
                if r2 >= inner * inner {
                    c_k = Some(c_k.map_or(uz, |c| c.min(uz)));
                }
            }
        }
        let report = StageReport {
            k,
            radius,
            eps,
            delta,
            cutoff,
            u_on_inner,
            c_k,
            in1_holds: u_on_inner <= 1e-12 && c_k.is_none_or(|c| c > 0.0),
            weight,
        };
        stages.push(GlobalStage { metric: report.weight.metric.clone(), report, convolution });
    }

    let k_of_compact =
        opts.compact_radius.and_then(|rho| stages.iter().map(|s| &s.report).find(|s| s.radius > rho).map(|s| s.k));
    let compact: Vec<usize> = match opts.compact_radius {
        Some(rho) => interior
            .iter()
            .copied()
            .filter(|&flat| {
                let z = common.point(flat);
                dist2.value(&z).is_ok_and(|r2| r2 <= rho * rho) && f2.value(&z).is_ok_and(|v| v <= 1e-24)
            })
            .collect(),
        None => Vec::new(),
    };
    let tail: Vec<&GlobalStage> = match k_of_compact {
        Some(k0) => stages.iter().filter(|s| s.report.k >= k0).collect(),
        None => Vec::new(),
    };
    let values = tail
        .iter()
        .map(|s| compact.iter().map(|&flat| s.metric.evaluate(&common.point(flat))).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let mut monotone = Vec::new();
    for i in 1..tail.len() {
        let gap = values[i - 1]
            .iter()
            .zip(&values[i])
            .map(|(a, b)| min_eigenvalue(&a.sub(b)))
            .try_fold(f64::INFINITY, |m, x| x.map(|x| m.min(x)))?;
        monotone.push(MonotoneCheck {
            from: tail[i - 1].report.k,
            to: tail[i].report.k,
            min_eigenvalue: gap,
            pass: gap >= -MONOTONE_SLACK,
        });
    }
    let mut above_limit = Vec::with_capacity(tail.len());
    for vals in &values {
        let mut worst = f64::INFINITY;
        for (&flat, hk) in compact.iter().zip(vals) {
            match h.evaluate(&common.point(flat)) {
                Ok(hz) => worst = worst.min(min_eigenvalue(&hk.sub(&hz))?),
                Err(e) if e.is_singular_sample() => {}
                Err(e) => return Err(e),
            }
        }
        above_limit.push(worst);
    }
    Ok(GlobalApproximation {
        grid: common.meta(),
        compact_radius: opts.compact_radius,
        k_of_compact,
        compact_points: compact.len(),
        monotone_from_k: k_of_compact.is_some() && monotone.iter().all(|m| m.pass),
        monotone,
        above_limit,
        stage_reports: stages.iter().map(|s| s.report.clone()).collect(),
        stages,
    })
}
