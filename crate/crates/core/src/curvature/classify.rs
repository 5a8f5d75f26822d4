use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{griffiths_extremes_with, CurvatureData, Extreme, GRIFFITHS_RESTARTS};
use crate::error::{Error, Result};
use crate::field::MetricField;
use crate::grid::{GridDomain, GridMeta};
use crate::linalg::eig_hermitian;

pub const CONVENTION: &str = "forms are minimized section-norm Hessians in an h-orthonormal frame: \
form >= 0 means negatively curved (i*Theta <= 0); griffiths_positive and dual_nakano_positive test the dual metric";

#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    /// Defaults to `10 · max_step²`.
    pub tol: Option<f64>,
    /// Stencil steps per real axis; defaults to the grid steps.
    pub steps: Option<Vec<f64>>,
    pub restarts: usize,
    pub seed: u64,
    pub include_dual: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { tol: None, steps: None, restarts: GRIFFITHS_RESTARTS, seed: 0, include_dual: true }
    }
}

fn label(z: &[C64]) -> Vec<[f64; 2]> {
    z.iter().map(|c| [c.re, c.im]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub point: Vec<[f64; 2]>,
    /// Griffiths witnesses carry `[v, ξ]`; Nakano witnesses the flattened
    /// tuple `(ξ_1, ..., ξ_n)`.
    pub vectors: Vec<Vec<[f64; 2]>>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    /// Smallest value of the tested form over the evaluated points.
    pub margin: f64,
    pub witness: Option<Witness>,
}

impl Verdict {
    fn from_candidates(tol: f64, candidates: impl Iterator<Item = Witness>) -> Self {
        let worst = candidates.min_by(|a, b| a.value.total_cmp(&b.value));
        match worst {
            Some(w) => Verdict { pass: w.value >= -tol, margin: w.value, witness: Some(w) },
            None => Verdict { pass: true, margin: f64::INFINITY, witness: None },
        }
    }
}

/// Per-point extremes in the normalized frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    pub point: Vec<[f64; 2]>,
    pub griffiths_min: f64,
    pub griffiths_max: f64,
    pub nakano_min: f64,
    pub nakano_max: f64,
    pub dual_griffiths_min: Option<f64>,
    pub dual_nakano_min: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub tolerance: f64,
    pub steps: Vec<f64>,
    pub grid: Option<GridMeta>,
    pub points_evaluated: usize,
    /// Points skipped because the metric is singular there.
    pub exceptions: Vec<Vec<[f64; 2]>>,
    pub griffiths_negative: Verdict,
    pub nakano_negative: Verdict,
    pub griffiths_positive: Verdict,
    pub dual_nakano_positive: Verdict,
    pub nakano_positive: Verdict,
    pub convention: &'static str,
    #[serde(skip)]
    pub points: Vec<PointSummary>,
}

pub const VERDICT_NAMES: [&str; 5] =
    ["griffiths_negative", "nakano_negative", "griffiths_positive", "dual_nakano_positive", "nakano_positive"];

impl ClassificationReport {
    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        match name {
            "griffiths_negative" => Some(&self.griffiths_negative),
            "nakano_negative" => Some(&self.nakano_negative),
            "griffiths_positive" => Some(&self.griffiths_positive),
            "dual_nakano_positive" => Some(&self.dual_nakano_positive),
            "nakano_positive" => Some(&self.nakano_positive),
            _ => None,
        }
    }

    /// One row per evaluated point: coordinates, then the per-point extremes.
    pub fn points_csv(&self) -> String {
        let n = self.points.first().map_or(0, |p| p.point.len());
        let mut out = String::new();
        for j in 1..=n {
            out.push_str(&format!("re_z{j},im_z{j},"));
        }
        out.push_str("griffiths_min,griffiths_max,nakano_min,nakano_max,dual_griffiths_min,dual_nakano_min\n");
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:e}"));
        for p in &self.points {
            for [re, im] in &p.point {
                out.push_str(&format!("{re},{im},"));
            }
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e},{},{}\n",
                p.griffiths_min,
                p.griffiths_max,
                p.nakano_min,
                p.nakano_max,
                opt(p.dual_griffiths_min),
                opt(p.dual_nakano_min)
            ));
        }
        out
    }
}

struct PointEval {
    summary: PointSummary,
    gmin: Extreme,
    nmin: (f64, Vec<C64>),
    nmax: (f64, Vec<C64>),
    dual: Option<(Extreme, (f64, Vec<C64>))>,
}

fn nakano_pair(c: &CurvatureData, lowest: bool) -> (f64, Vec<C64>) {
    let e = eig_hermitian(&c.nakano_matrix()).expect("finite curvature data");
    let i = if lowest { 0 } else { e.values.len() - 1 };
    (e.values[i], e.vector(i))
}

fn is_singularity(e: &Error) -> bool {
    matches!(e, Error::SingularSample(_) | Error::NotPositiveDefinite { .. } | Error::Linalg(_))
}

fn evaluate_point(
    h: &MetricField,
    z: &[C64],
    steps: &[f64],
    rng: &mut ChaCha8Rng,
    opts: &ClassifyOptions,
) -> Result<PointEval> {
    let jet = h.jet(z, steps)?;
    let data = CurvatureData::from_jet(z, &jet)?.normalized();
    let ex = griffiths_extremes_with(&data, opts.restarts, rng);
    let nmin = nakano_pair(&data, true);
    let nmax = nakano_pair(&data, false);
    let dual = if opts.include_dual {
        let dj = jet.dual()?;
        let dd = CurvatureData::from_jet(z, &dj)?.normalized();
        let dex = griffiths_extremes_with(&dd, opts.restarts, rng);
        Some((dex.min, nakano_pair(&dd, true)))
    } else {
        None
    };
    Ok(PointEval {
        summary: PointSummary {
            point: label(z),
            griffiths_min: ex.min.value,
            griffiths_max: ex.max.value,
            nakano_min: nmin.0,
            nakano_max: nmax.0,
            dual_griffiths_min: dual.as_ref().map(|d| d.0.value),
            dual_nakano_min: dual.as_ref().map(|d| d.1 .0),
        },
        gmin: ex.min,
        nmin,
        nmax,
        dual,
    })
}

/// Classifies `h` on the interior points of `domain`.
pub fn classify(h: &MetricField, domain: &GridDomain, opts: &ClassifyOptions) -> Result<ClassificationReport> {
    if h.dim() != domain.n() {
        return Err(Error::DomainMismatch(format!("metric on C^{}, grid on C^{}", h.dim(), domain.n())));
    }
    let steps = opts.steps.clone().unwrap_or_else(|| domain.steps());
    let points: Vec<Vec<C64>> = domain.interior_indices().into_iter().map(|i| domain.point(i)).collect();
    let mut report = classify_points(h, &points, &steps, opts)?;
    report.grid = Some(domain.meta());
    Ok(report)
}

/// Classifies `h` at explicit points with the given stencil steps.
pub fn classify_points(
    h: &MetricField,
    points: &[Vec<C64>],
    steps: &[f64],
    opts: &ClassifyOptions,
) -> Result<ClassificationReport> {
    let max_step = steps.iter().copied().fold(0.0, f64::max);
    let tol = opts.tol.unwrap_or(10.0 * max_step * max_step);
    let outcomes = points
        .par_iter()
        .enumerate()
        .map(|(i, z)| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(i as u64);
            match evaluate_point(h, z, steps, &mut rng, opts) {
                Ok(p) => Ok(Some(p)),
                Err(e) if h.singular_allowed() && is_singularity(&e) => Ok(None),
                Err(Error::Linalg(l)) => {
                    Err(Error::NotPositiveDefinite { point: z.as_slice().into(), detail: l.to_string() })
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<Option<PointEval>>>>()?;

    let exceptions = points.iter().zip(&outcomes).filter(|(_, o)| o.is_none()).map(|(z, _)| label(z)).collect();
    let evals: Vec<&PointEval> = outcomes.iter().flatten().collect();
    let griffiths = |e: &Extreme, point: &[[f64; 2]]| Witness {
        point: point.to_vec(),
        vectors: vec![label(&e.v), label(&e.xi)],
        value: e.value,
    };
    let nakano = |(value, vec): &(f64, Vec<C64>), point: &[[f64; 2]], sign: f64| Witness {
        point: point.to_vec(),
        vectors: vec![label(vec)],
        value: sign * value,
    };
    Ok(ClassificationReport {
        tolerance: tol,
        steps: steps.to_vec(),
        grid: None,
        points_evaluated: evals.len(),
        exceptions,
        griffiths_negative: Verdict::from_candidates(tol, evals.iter().map(|p| griffiths(&p.gmin, &p.summary.point))),
        nakano_negative: Verdict::from_candidates(tol, evals.iter().map(|p| nakano(&p.nmin, &p.summary.point, 1.0))),
        griffiths_positive: Verdict::from_candidates(
            tol,
            evals.iter().filter_map(|p| p.dual.as_ref().map(|d| griffiths(&d.0, &p.summary.point))),
        ),
        dual_nakano_positive: Verdict::from_candidates(
            tol,
            evals.iter().filter_map(|p| p.dual.as_ref().map(|d| nakano(&d.1, &p.summary.point, 1.0))),
        ),
        nakano_positive: Verdict::from_candidates(tol, evals.iter().map(|p| nakano(&p.nmax, &p.summary.point, -1.0))),
        convention: CONVENTION,
        points: evals.iter().map(|p| p.summary.clone()).collect(),
    })
}
