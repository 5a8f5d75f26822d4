use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{deficit, label, Target};
use crate::calculus::{build_convex_majorant, MajorantBase, Profile1D, ScalarField, SmoothStep};
use crate::curvature::{classify, ClassificationReport, ClassifyOptions};
use crate::error::{Error, PointLabel, Result};
use crate::expr::Expr;
use crate::field::MetricField;
use crate::grid::GridDomain;
use crate::linalg::min_eigenvalue;

/// Largest exponent `u` may reach before `e^{u}` stops being representable
/// with room for its derivatives.
const MAX_EXPONENT: f64 = 650.0;

/// Relative fidelity bound on the embedded `Y` samples.
pub const FIDELITY_TOL: f64 = 1e-10;

/// `χ` as a function of `|f|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Cutoff {
    /// `χ ≡ 1`.
    One,
    /// `χ = 1` on `|f| ≤ inner`, `χ = 0` on `|f| ≥ outer`.
    Band { inner: f64, outer: f64 },
}

#[derive(Debug, Clone)]
pub struct ExtensionProblem {
    pub ambient: GridDomain,
    /// Grid of the `Y`-chart; the input metric is classified and compared
    /// there.
    pub chart: GridDomain,
    /// `f`, with `Y = {f = 0}`.
    pub defining: Vec<Expr>,
    /// `π`: ambient coordinates to chart coordinates.
    pub retraction: Vec<Expr>,
    /// Chart coordinates to ambient coordinates.
    pub embedding: Vec<Expr>,
    /// `h` on the chart.
    pub metric: MetricField,
    /// `g` on the complementary summand `F` (negative cases only).
    pub background: Option<MetricField>,
    /// `h_1` away from `Y` (positive case); the identity when absent.
    pub far_metric: Option<MetricField>,
    /// `φ`, strictly psh and nonnegative.
    pub exhaustion: ScalarField,
    pub cutoff: Cutoff,
}

#[derive(Debug, Clone)]
pub struct ExtensionOptions {
    /// Number of `φ`-level bands `v` is sampled on.
    pub bands: usize,
    /// How many of the worst sample points the inequality chain reports.
    pub chain_points: usize,
    pub classify: ClassifyOptions,
}

impl Default for ExtensionOptions {
    fn default() -> Self {
        Self { bands: 64, chain_points: 100, classify: ClassifyOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainPoint {
    pub point: Vec<[f64; 2]>,
    /// `λ_min(∂∂̄(|f|²e^{u(φ)}) - v(φ)∂∂̄φ)`.
    pub slack: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainCheck {
    /// Points outside `V` the chain applies to.
    pub points_checked: usize,
    pub pass: bool,
    pub min_slack: Option<f64>,
    /// Worst points, ascending slack.
    pub worst: Vec<ChainPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Extension {
    pub target: Target,
    pub input: ClassificationReport,
    /// Band knots in `φ` and the sampled `v` on each band.
    pub knots: Vec<f64>,
    pub v: Vec<f64>,
    /// Slopes of `u` at the knots (`u' ≥ v²`).
    pub u_slopes: Vec<f64>,
    pub u_max: f64,
    /// `max ‖h_ext - h‖ / (1 + ‖h‖)` over embedded chart samples.
    pub fidelity: f64,
    pub fidelity_pass: bool,
    /// Classification of `h̃` on the ambient grid.
    pub report: ClassificationReport,
    /// Classification of the `E` block when a background summand is present.
    pub restricted: Option<ClassificationReport>,
    pub chain: ChainCheck,
    #[serde(skip)]
    pub total: MetricField,
    #[serde(skip)]
    pub extended: MetricField,
}

impl Extension {
    pub fn pass(&self) -> bool {
        self.fidelity_pass && self.chain.pass && self.report.verdict(self.target.verdict_name()).is_some_and(|v| v.pass)
    }
}

/// Extends a Griffiths-negative `h` on `Y` to `Ẽ = E ⊕ F` over the box:
/// `h̃ = e^{|f|²e^{u(φ)}}(χ(h∘π ⊕ g) + (1-χ)I)`, with `v` sampled from the
/// curvature excess of the blend against `∂∂̄φ` and `1/|f|²` off `V`, and
/// `u' ≥ v²`. Returns `h̃` and its `E` block.
pub fn extend_griffiths_negative(p: &ExtensionProblem, opts: &ExtensionOptions) -> Result<Extension> {
    extend(p, Target::GriffithsNegative, opts)
}

/// The Nakano-negative variant of [`extend_griffiths_negative`].
pub fn extend_nakano_negative(p: &ExtensionProblem, opts: &ExtensionOptions) -> Result<Extension> {
    extend(p, Target::NakanoNegative, opts)
}

/// Extends a Nakano-positive `h` on `Y`:
/// `h̃ = e^{-|f|²e^{u(φ)}}(χ·π*h + (1-χ)h_1)`.
pub fn extend_nakano_positive(p: &ExtensionProblem, opts: &ExtensionOptions) -> Result<Extension> {
    extend(p, Target::NakanoPositive, opts)
}

fn eval_tuple(exprs: &[Expr], z: &[C64]) -> Result<Vec<C64>> {
    exprs.iter().map(|e| e.eval(z).map_err(|err| Error::eval(z, err))).collect()
}

fn check_geometry(p: &ExtensionProblem) -> Result<()> {
    let (n, m) = (p.ambient.n(), p.chart.n());
    if p.embedding.len() != n || p.retraction.len() != m {
        return Err(Error::GeometryInconsistent(format!(
            "embedding has {} components (ambient C^{n}), retraction {} (chart C^{m})",
            p.embedding.len(),
            p.retraction.len()
        )));
    }
    if p.metric.dim() != m {
        return Err(Error::DomainMismatch(format!("metric on C^{}, chart C^{m}", p.metric.dim())));
    }
    if p.tuple_dims_bad(n) {
        return Err(Error::DomainMismatch("defining functions live on a different space".into()));
    }
    for flat in p.chart.interior_indices() {
        let w = p.chart.point(flat);
        let e = eval_tuple(&p.embedding, &w)?;
        if let Some(j) = eval_tuple(&p.defining, &e)?.iter().position(|v| v.norm() > 1e-12) {
            return Err(Error::GeometryInconsistent(format!(
                "f_{} does not vanish at the embedded sample {}",
                j + 1,
                PointLabel::from(w.as_slice())
            )));
        }
        let back = eval_tuple(&p.retraction, &e)?;
        let scale = 1.0 + w.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if back.iter().zip(&w).any(|(a, b)| (a - b).norm() > 1e-12 * scale) {
            return Err(Error::GeometryInconsistent(format!(
                "retraction moves the embedded sample {}",
                PointLabel::from(w.as_slice())
            )));
        }
    }
    Ok(())
}

impl ExtensionProblem {
    /// Dimension checks, `f = 0` on the embedded chart samples and
    /// `π ∘ embed = id` there, with no curvature numerics.
    pub fn validate(&self) -> Result<()> {
        check_geometry(self)?;
        self.cutoff_field(&ScalarField::constant(0.0)).map(|_| ())
    }

    fn tuple_dims_bad(&self, n: usize) -> bool {
        self.defining.iter().any(|f| f.dim() != n)
            || self.embedding.iter().any(|e| e.dim() != self.chart.n())
            || self.retraction.iter().any(|e| e.dim() != n)
    }

    fn cutoff_field(&self, f2: &ScalarField) -> Result<Option<(ScalarField, f64)>> {
        match self.cutoff {
            Cutoff::One => Ok(None),
            Cutoff::Band { inner, outer } => {
                if !(inner > 0.0 && inner < outer && outer.is_finite()) {
                    return Err(Error::BadRadii { inner, outer });
                }
                let step = SmoothStep::new(inner * inner, outer * outer, true)?;
                Ok(Some((ScalarField::compose(Arc::new(step), f2.clone()), inner * inner)))
            }
        }
    }
}

struct Sample {
    phi: f64,
    v: f64,
}

fn extend(p: &ExtensionProblem, target: Target, opts: &ExtensionOptions) -> Result<Extension> {
    check_geometry(p)?;
    let n = p.ambient.n();
    let chart_opts =
        ClassifyOptions { include_dual: target.needs_dual(), tol: opts.classify.tol, ..opts.classify.clone() };
    let input = classify(&p.metric, &p.chart, &chart_opts)?;
    let iv = input.verdict(target.verdict_name()).expect("known verdict");
    if !iv.pass {
        return Err(Error::InputNotNegative(format!(
            "{} fails on the chart with margin {:e} (tolerance {:e})",
            target.verdict_name(),
            iv.margin,
            input.tolerance
        )));
    }

    // h' = χ(h∘π ⊕ g) + (1 - χ)·far
    let pulled = p.metric.pullback(p.retraction.clone())?;
    let rank_e = pulled.rank();
    let near = match (&p.background, target.weight_sign() > 0.0) {
        (Some(g), true) => pulled.direct_sum(g)?,
        _ => pulled,
    };
    let far = match (&p.far_metric, target.weight_sign() > 0.0) {
        (Some(h1), false) => h1.clone(),
        _ => MetricField::identity(n, near.rank()),
    };
    if far.rank() != near.rank() || far.dim() != n {
        return Err(Error::DomainMismatch("far metric does not match the extended bundle".into()));
    }
    let f2 = ScalarField::norm_squared(&p.defining, n);
    let cutoff = p.cutoff_field(&f2)?;
    let blend = match &cutoff {
        None => near.clone(),
        Some((chi, _)) => {
            let one_minus = ScalarField::sum(vec![ScalarField::constant(1.0), ScalarField::scale(-1.0, chi.clone())]);
            MetricField::sum(vec![near.scalar_mul(chi.clone()), far.scalar_mul(one_minus)])?
        }
    };
    let v_floor = cutoff.as_ref().map(|c| c.1);

    // sample v(φ): the curvature excess of the blend against ∂∂̄φ, and 1/|f|² off V
    let domain = &p.ambient;
    let steps = opts.classify.steps.clone().unwrap_or_else(|| domain.steps());
    let phi = &p.exhaustion;
    let points = domain.interior_indices();
    let samples = points
        .par_iter()
        .enumerate()
        .map(|(i, &flat)| {
            let z = domain.point(flat);
            let pj = phi.jet(&z, &steps)?;
            if pj.value < -1e-12 {
                return Err(Error::GeometryInconsistent(format!(
                    "exhaustion is negative ({:e}) at {}",
                    pj.value,
                    PointLabel::from(z.as_slice())
                )));
            }
            let mu = min_eigenvalue(&pj.hessian())?;
            let jet = blend.jet(&z, &steps)?;
            let d = deficit(&z, &jet, &[target], opts.classify.restarts, opts.classify.seed, i as u64)?;
            let mut v = 0.0f64;
            if d > 0.0 {
                if !(mu > 0.0) {
                    return Err(Error::WeightSearchFailed {
                        point: z.as_slice().into(),
                        detail: format!("curvature excess {d:e} where the exhaustion Hessian floor is {mu:e}"),
                    });
                }
                v = d / mu;
            }
            if let Some(floor) = v_floor {
                let fz = f2.value(&z)?;
                if fz >= floor {
                    v = v.max(1.0 / fz);
                }
            }
            Ok(Sample { phi: pj.value.max(0.0), v })
        })
        .collect::<Result<Vec<_>>>()?;

    let phi_max = samples.iter().map(|s| s.phi).fold(0.0, f64::max);
    let bands = opts.bands.max(1);
    let (knots, v_band) = if phi_max > 0.0 {
        let width = phi_max / bands as f64;
        let knots: Vec<f64> = (0..=bands).map(|i| i as f64 * width).collect();
        let mut v = vec![0.0f64; bands + 1];
        for s in &samples {
            let b = ((s.phi / width).floor() as usize).min(bands);
            v[b] = v[b].max(s.v);
        }
        (knots, v)
    } else {
        (vec![0.0], vec![samples.iter().map(|s| s.v).fold(0.0, f64::max)])
    };
    let u = Arc::new(build_convex_majorant(&knots, &v_band, MajorantBase::Zero)?);
    let ext_phi_max = (0..domain.extended_len())
        .map(|i| phi.value(&domain.point(i)))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let u_max = u.value(ext_phi_max);
    if !(u_max <= MAX_EXPONENT) {
        return Err(Error::WeightSearchFailed {
            point: PointLabel(Vec::new()),
            detail: format!(
                "u(φ) reaches {u_max:e} on the grid (largest v = {:e}); widen the cutoff band or shrink the box",
                v_band.iter().copied().fold(0.0, f64::max)
            ),
        });
    }
    let weight = ScalarField::product(
        f2.clone(),
        ScalarField::exp(ScalarField::compose(u.clone() as Arc<dyn Profile1D>, phi.clone())),
    );
    let total = blend.conformal_scale(ScalarField::scale(target.weight_sign(), weight.clone()));
    let extended = if total.rank() == rank_e { total.clone() } else { total.block(0, rank_e)? };

    let ambient_opts =
        ClassifyOptions { include_dual: target.needs_dual(), steps: Some(steps.clone()), ..opts.classify.clone() };
    let report = classify(&total, domain, &ambient_opts)?;
    let restricted =
        if extended.rank() != total.rank() { Some(classify(&extended, domain, &ambient_opts)?) } else { None };

    let mut fidelity = 0.0f64;
    for flat in p.chart.interior_indices() {
        let w = p.chart.point(flat);
        let e = eval_tuple(&p.embedding, &w)?;
        let want = p.metric.evaluate(&w)?;
        let got = extended.evaluate(&e)?;
        fidelity = fidelity.max(got.sub(&want).as_matrix().max_abs() / (1.0 + want.as_matrix().max_abs()));
    }

    let chain = chain_check(domain, &steps, &samples, &points, &knots, &v_band, &weight, phi, &f2, v_floor, opts)?;

    Ok(Extension {
        target,
        input,
        u_slopes: u.slopes().to_vec(),
        u_max,
        knots,
        v: v_band,
        fidelity,
        fidelity_pass: fidelity <= FIDELITY_TOL,
        report,
        restricted,
        chain,
        total,
        extended,
    })
}

/// Spot-checks `∂∂̄(|f|²e^{u(φ)}) ⪰ v(φ)∂∂̄φ` off `V`, keeping the worst
/// points.
#[allow(clippy::too_many_arguments)]
fn chain_check(
    domain: &GridDomain,
    steps: &[f64],
    samples: &[Sample],
    points: &[usize],
    knots: &[f64],
    v_band: &[f64],
    weight: &ScalarField,
    phi: &ScalarField,
    f2: &ScalarField,
    v_floor: Option<f64>,
    opts: &ExtensionOptions,
) -> Result<ChainCheck> {
    let Some(floor) = v_floor else {
        return Ok(ChainCheck { points_checked: 0, pass: true, min_slack: None, worst: Vec::new() });
    };
    let step2 = steps.iter().copied().fold(0.0, f64::max).powi(2);
    let band_of = |t: f64| {
        if knots.len() == 1 {
            return 0;
        }
        let width = knots[1];
        ((t / width).floor() as usize).min(knots.len() - 1)
    };
    let mut checked: Vec<ChainPoint> = points
        .par_iter()
        .zip(samples)
        .filter_map(|(&flat, s)| {
            let z = domain.point(flat);
            match f2.value(&z) {
                Ok(v) if v >= floor => {}
                Ok(_) => return None,
                Err(e) => return Some(Err(e)),
            }
            Some((|| {
                let v = v_band[band_of(s.phi)];
                let hw = weight.jet(&z, steps)?.hessian();
                let hp = phi.jet(&z, steps)?.hessian();
                let m = hw.sub(&hp.scale(v));
                let slack = min_eigenvalue(&m)?;
                let scale = 1.0f64.max(hp.scale(v).as_matrix().max_abs());
                Ok(ChainPoint { point: label(&z), slack, tolerance: 10.0 * step2 * scale })
            })())
        })
        .collect::<Result<Vec<_>>>()?;
    checked.sort_by(|a, b| (a.slack / a.tolerance).total_cmp(&(b.slack / b.tolerance)));
    let points_checked = checked.len();
    let pass = checked.iter().all(|c| c.slack >= -c.tolerance);
    let min_slack = checked.iter().map(|c| c.slack).reduce(f64::min);
    checked.truncate(opts.chain_points);
    Ok(ChainCheck { points_checked, pass, min_slack, worst: checked })
}
