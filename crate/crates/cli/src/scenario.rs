//! One runner per scenario kind. A runner returns its checks, a JSON result
//! block, the classifications to dump as CSV fields, the metrics to dump as
//! samples, and the probes single-point mode re-evaluates.

use hermlab_core::constructions::{
    extend_griffiths_negative, extend_nakano_negative, extend_nakano_positive, global_approximate,
    smooth_approximate_local, twist_to_positive, ExtensionOptions, ExtensionProblem, GlobalOptions, Target,
};
use hermlab_core::curvature::{classify, classify_points, ClassificationReport, ClassifyOptions, VERDICT_NAMES};
use hermlab_core::field::MetricField;
use hermlab_core::grid::GridDomain;
use hermlab_core::samples::GridSamples;
use hermlab_core::{HermitianMatrix, C64};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{self, Builder, Kind, ScenarioConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: Option<f64>,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, value: Option<f64>, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, value, detail: detail.into() }
    }

    /// A verdict of `report` as a check, with the witness in the detail when
    /// it fails.
    fn verdict(name: impl Into<String>, report: &ClassificationReport, verdict: &str) -> Self {
        let v = report.verdict(verdict).expect("verdict names are validated");
        let detail = match (&v.witness, v.pass) {
            (Some(w), false) => format!(
                "{verdict} fails at {} (value {:e}, tolerance {:e})",
                point_text(&w.point),
                w.value,
                report.tolerance
            ),
            _ => format!("{verdict}: margin {:e}, tolerance {:e}", v.margin, report.tolerance),
        };
        Self::new(name, v.pass, Some(v.margin), detail)
    }
}

fn point_text(p: &[[f64; 2]]) -> String {
    p.iter().flat_map(|[re, im]| [re.to_string(), im.to_string()]).collect::<Vec<_>>().join(",")
}

pub enum MetricOutput {
    Samples(GridSamples<HermitianMatrix>),
    Field(MetricField, GridDomain),
}

/// A metric and the verdicts it is expected to satisfy.
pub struct Probe {
    pub name: String,
    pub metric: MetricField,
    pub verdicts: Vec<String>,
}

pub struct Outcome {
    pub checks: Vec<Check>,
    pub result: Value,
    pub fields: Vec<(String, ClassificationReport)>,
    pub metrics: Vec<(String, MetricOutput)>,
    pub probes: Vec<Probe>,
    /// Stencil steps of the final classifications.
    pub steps: Vec<f64>,
}

impl Outcome {
    pub fn new(steps: Vec<f64>) -> Self {
        Self { checks: vec![], result: Value::Null, fields: vec![], metrics: vec![], probes: vec![], steps }
    }
}

/// Everything a runner needs, built and checked up front.
pub struct Context<'a> {
    pub b: Builder<'a>,
    pub domain: GridDomain,
    pub opts: ClassifyOptions,
}

impl<'a> Context<'a> {
    pub fn new(b: Builder<'a>) -> Result<Self, CliError> {
        let c = b.config;
        let domain = b.domain()?;
        if let Some(names) = &c.expect {
            if let Some((i, bad)) = names.iter().enumerate().find(|(_, s)| !VERDICT_NAMES.contains(&s.as_str())) {
                return Err(CliError::config(format!("expect[{i}]"), format!("unknown verdict `{bad}`")));
            }
        }
        let steps = match c.numeric.step {
            Some(s) if s > 0.0 && s.is_finite() => Some(vec![s; domain.real_dim()]),
            Some(s) => return Err(CliError::config("numeric.step".into(), format!("must be positive, got {s}"))),
            None => None,
        };
        if let Some(t) = c.numeric.tol {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(CliError::config("numeric.tol".into(), format!("must be nonnegative, got {t}")));
            }
        }
        let mut opts = ClassifyOptions { tol: c.numeric.tol, steps, seed: c.seed, ..Default::default() };
        if let Some(r) = c.numeric.restarts {
            opts.restarts = r;
        }
        Ok(Self { b, domain, opts })
    }

    fn config(&self) -> &ScenarioConfig {
        self.b.config
    }

    fn steps(&self) -> Vec<f64> {
        self.opts.steps.clone().unwrap_or_else(|| self.domain.steps())
    }

    fn expect(&self) -> Vec<String> {
        self.config().expect.clone().unwrap_or_else(|| VERDICT_NAMES.iter().map(|s| s.to_string()).collect())
    }

    fn target(&self, default: Target, allowed: &[Target]) -> Result<Target, CliError> {
        let t = self.config().numeric.target.unwrap_or(default);
        if !allowed.contains(&t) {
            return Err(CliError::config(
                "numeric.target".into(),
                format!("{} is not available for {:?}", t.verdict_name(), self.config().kind),
            ));
        }
        Ok(t)
    }

    /// Builds every object of the scenario without curvature numerics.
    pub fn validate(&self) -> Result<(), CliError> {
        let b = &self.b;
        let g = &self.config().geometry;
        let n = b.n();
        match self.config().kind {
            Kind::ExtendGriffiths | Kind::ExtendNakano => {
                self.extension_target()?;
                self.extension_problem()?.validate().map_err(|e| CliError::core("geometry", e))?;
            }
            Kind::ApproximateGlobal => {
                self.global_metric()?;
                if let Some(f) = &g.f {
                    b.exprs(f, n, "geometry.f")?;
                }
                self.target(Target::GriffithsNegative, &[Target::GriffithsNegative, Target::NakanoNegative])?;
            }
            Kind::ApproximateLocal => {
                b.metric()?;
                self.target(Target::GriffithsNegative, &[Target::GriffithsNegative, Target::NakanoNegative])?;
            }
            Kind::Twist => {
                b.metric()?;
                b.phi(&self.domain)?;
            }
            Kind::SubbundleCheck => {
                let h = b.metric()?;
                let frame = b.frame(b.need(&g.frame, "frame")?, "geometry.frame")?;
                h.project_to_subbundle(frame.clone())
                    .map_err(|e| CliError::config("geometry.frame".into(), e.to_string()))?;
                if let Some(c) = &g.complement {
                    let c = b.frame(c, "geometry.complement")?;
                    h.quotient(frame, c).map_err(|e| CliError::config("geometry.complement".into(), e.to_string()))?;
                }
            }
            Kind::Classify | Kind::DualityCheck => {
                b.metric()?;
            }
        }
        Ok(())
    }

    pub fn run(&self) -> Result<Outcome, CliError> {
        match self.config().kind {
            Kind::Classify => self.classify(),
            Kind::ApproximateLocal => self.approximate_local(),
            Kind::ApproximateGlobal => self.approximate_global(),
            Kind::ExtendGriffiths | Kind::ExtendNakano => self.extend(),
            Kind::Twist => self.twist(),
            Kind::DualityCheck => self.duality(),
            Kind::SubbundleCheck => self.subbundle(),
        }
    }

    fn classify_metric(&self, h: &MetricField, what: &str) -> Result<ClassificationReport, CliError> {
        classify(h, &self.domain, &self.opts).map_err(|e| CliError::core(format!("classifying {what}"), e))
    }

    fn classify(&self) -> Result<Outcome, CliError> {
        let h = self.b.metric()?;
        let r = self.classify_metric(&h, "the metric")?;
        let expect = self.expect();
        let mut out = Outcome::new(r.steps.clone());
        out.checks = expect.iter().map(|v| Check::verdict(v.as_str(), &r, v)).collect();
        out.result = json!({ "metric": h.describe(), "classification": r });
        out.fields.push(("metric".into(), r));
        out.metrics.push(("metric".into(), MetricOutput::Field(h.clone(), self.domain.clone())));
        out.probes.push(Probe { name: "metric".into(), metric: h, verdicts: expect });
        Ok(out)
    }

    fn approximate_local(&self) -> Result<Outcome, CliError> {
        let h = self.b.metric()?;
        let target = self.target(Target::GriffithsNegative, &[Target::GriffithsNegative, Target::NakanoNegative])?;
        let eps = self.config().numeric.eps.clone().unwrap_or_else(|| vec![0.3, 0.2, 0.1]);
        let approx = smooth_approximate_local(&h, &self.domain, &eps, target, &self.opts)
            .map_err(|e| CliError::core("local approximation", e))?;
        let mut out = Outcome::new(self.steps());
        let name = target.verdict_name();
        for (i, stage) in approx.stages.iter().enumerate() {
            let r = &stage.report;
            out.checks.push(Check::verdict(format!("stage{}.{name}", i + 1), &r.classification, name));
            if i > 0 {
                let detail = match r.monotone_min_eigenvalue {
                    Some(m) => format!("min eigenvalue of h_{} - h_{}: {m:e}", i, i + 1),
                    None => "no shared points".into(),
                };
                out.checks.push(Check::new(
                    format!("stage{}.monotone", i + 1),
                    r.monotone,
                    r.monotone_min_eigenvalue,
                    detail,
                ));
            }
        }
        let reports: Vec<_> = approx.stages.iter().map(|s| &s.report).collect();
        out.result =
            json!({ "metric": h.describe(), "target": target, "exceptions": approx.exceptions, "stages": reports });
        for (i, stage) in approx.stages.iter().enumerate() {
            out.fields.push((format!("stage{}", i + 1), stage.report.classification.clone()));
            out.metrics.push((format!("stage{}", i + 1), MetricOutput::Samples(stage.samples.clone())));
        }
        if let Some(last) = approx.stages.last() {
            out.steps = last.report.classification.steps.clone();
            out.probes.push(Probe { name: "final".into(), metric: last.metric.clone(), verdicts: vec![name.into()] });
        }
        Ok(out)
    }

    fn global_metric(&self) -> Result<MetricField, CliError> {
        let b = &self.b;
        match &self.config().geometry.pi {
            Some(pi) => {
                let pi = b.exprs(pi, b.n(), "geometry.pi")?;
                b.metric_block(&self.config().metric, pi.len(), "metric")?
                    .pullback(pi)
                    .map_err(|e| CliError::config("geometry.pi".into(), e.to_string()))
            }
            None => b.metric(),
        }
    }

    fn approximate_global(&self) -> Result<Outcome, CliError> {
        let c = self.config();
        let h = self.global_metric()?;
        let defining = match &c.geometry.f {
            Some(f) => self.b.exprs(f, self.b.n(), "geometry.f")?,
            None => vec![],
        };
        let target = self.target(Target::GriffithsNegative, &[Target::GriffithsNegative, Target::NakanoNegative])?;
        let d = GlobalOptions::default();
        let opts = GlobalOptions {
            stages: c.numeric.stages.clone().unwrap_or(d.stages),
            eps: c.numeric.eps.clone().unwrap_or(d.eps),
            unit: c.numeric.unit.unwrap_or(d.unit),
            target,
            compact_radius: c.numeric.compact_radius,
            bands: c.numeric.bands.unwrap_or(d.bands),
            classify: self.opts.clone(),
        };
        let g = global_approximate(&h, &defining, &self.domain, &opts)
            .map_err(|e| CliError::core("global approximation", e))?;
        let mut out = Outcome::new(self.steps());
        let name = target.verdict_name();
        for s in &g.stage_reports {
            out.checks.push(Check::verdict(format!("stage{}.{name}", s.k), &s.weight.report, name));
        }
        if let Some(radius) = g.compact_radius {
            let detail = format!("K = {{|z - c| <= {radius}}}, {} grid points", g.compact_points);
            out.checks.push(Check::new(
                "k_of_compact",
                g.k_of_compact.is_some(),
                g.k_of_compact.map(|k| k as f64),
                detail,
            ));
            let worst = g
                .monotone
                .iter()
                .filter(|m| Some(m.from) >= g.k_of_compact)
                .map(|m| m.min_eigenvalue)
                .fold(None, |a: Option<f64>, x| Some(a.map_or(x, |a| a.min(x))));
            out.checks.push(Check::new(
                "monotone_from_k",
                g.monotone_from_k,
                worst,
                "h_k - h_{k+1} on K for k >= k(K)",
            ));
        }
        out.result = json!({ "metric": h.describe(), "target": target, "approximation": &g });
        // stages are classified where every kernel fits
        let common = self
            .domain
            .shrink(self.domain.cells_for_radius(opts.eps[0]))
            .map_err(|e| CliError::core("global approximation", e.into()))?;
        for (s, stage) in g.stage_reports.iter().zip(&g.stages) {
            out.fields.push((format!("stage{}", s.k), s.weight.report.clone()));
            out.metrics.push((format!("stage{}", s.k), MetricOutput::Field(stage.metric.clone(), common.clone())));
        }
        if let (Some(s), Some(stage)) = (g.stage_reports.last(), g.stages.last()) {
            out.steps = s.weight.report.steps.clone();
            out.probes.push(Probe { name: "final".into(), metric: stage.metric.clone(), verdicts: vec![name.into()] });
        }
        Ok(out)
    }

    fn extension_target(&self) -> Result<Target, CliError> {
        match self.config().kind {
            Kind::ExtendGriffiths => self.target(Target::GriffithsNegative, &[Target::GriffithsNegative]),
            _ => self.target(Target::NakanoPositive, &[Target::NakanoPositive, Target::NakanoNegative]),
        }
    }

    fn extension_problem(&self) -> Result<ExtensionProblem, CliError> {
        let b = &self.b;
        let g = &self.config().geometry;
        let n = b.n();
        let chart = config::domain(b.need(&g.chart, "chart")?, "geometry.chart")?;
        let m = chart.n();
        let defining = match &g.f {
            Some(f) => b.exprs(f, n, "geometry.f")?,
            None => vec![],
        };
        let retraction = b.exprs(b.need(&g.pi, "pi")?, n, "geometry.pi")?;
        let embedding = b.exprs(b.need(&g.embed, "embed")?, m, "geometry.embed")?;
        let metric = b.metric_block(&self.config().metric, m, "metric")?;
        let background = g.g.as_ref().map(|c| b.metric_block(c, n, "geometry.g")).transpose()?;
        let far_metric = g.far.as_ref().map(|c| b.metric_block(c, n, "geometry.far")).transpose()?;
        Ok(ExtensionProblem {
            ambient: self.domain.clone(),
            chart,
            defining,
            retraction,
            embedding,
            metric,
            background,
            far_metric,
            exhaustion: b.phi(&self.domain)?,
            cutoff: b.cutoff(),
        })
    }

    fn extend(&self) -> Result<Outcome, CliError> {
        let c = self.config();
        let target = self.extension_target()?;
        let p = self.extension_problem()?;
        let d = ExtensionOptions::default();
        let opts = ExtensionOptions {
            bands: c.numeric.bands.unwrap_or(d.bands),
            chain_points: c.numeric.chain_points.unwrap_or(d.chain_points),
            classify: self.opts.clone(),
        };
        let ext = match target {
            Target::GriffithsNegative => extend_griffiths_negative(&p, &opts),
            Target::NakanoNegative => extend_nakano_negative(&p, &opts),
            _ => extend_nakano_positive(&p, &opts),
        }
        .map_err(|e| CliError::core("extension", e))?;
        let name = target.verdict_name();
        let mut out = Outcome::new(ext.report.steps.clone());
        out.checks.push(Check::new(
            "fidelity",
            ext.fidelity_pass,
            Some(ext.fidelity),
            "relative deviation of the restriction to Y from h",
        ));
        out.checks.push(Check::verdict(name, &ext.report, name));
        out.checks.push(Check::new(
            "chain",
            ext.chain.pass,
            ext.chain.min_slack,
            format!("inequality chain at the {} worst of {} points", ext.chain.worst.len(), ext.chain.points_checked),
        ));
        out.result = json!({ "target": target, "extension": &ext });
        out.fields.push(("input".into(), ext.input.clone()));
        out.fields.push(("extended".into(), ext.report.clone()));
        if let Some(r) = &ext.restricted {
            out.fields.push(("restricted".into(), r.clone()));
        }
        // the weight is only known on the sampled φ range, so sample the interior
        let interior = self.domain.shrink(self.domain.margin()).map_err(|e| CliError::core("extension", e.into()))?;
        out.metrics.push(("total".into(), MetricOutput::Field(ext.total.clone(), interior.clone())));
        out.metrics.push(("extended".into(), MetricOutput::Field(ext.extended.clone(), interior)));
        out.probes.push(Probe { name: "total".into(), metric: ext.total.clone(), verdicts: vec![name.into()] });
        Ok(out)
    }

    fn twist(&self) -> Result<Outcome, CliError> {
        let h0 = self.b.metric()?;
        let phi = self.b.phi(&self.domain)?;
        let t = twist_to_positive(&h0, &phi, &self.domain, self.opts.tol, &self.opts)
            .map_err(|e| CliError::core("twist", e))?;
        let r = &t.search.report;
        let mut out = Outcome::new(r.steps.clone());
        let verdicts = ["nakano_positive", "dual_nakano_positive"];
        for v in verdicts {
            let mut check = Check::verdict(v, r, v);
            check.pass &= r.verdict(v).is_some_and(|x| x.margin > 0.0);
            out.checks.push(check);
        }
        out.result = json!({ "metric": h0.describe(), "twist": &t });
        out.fields.push(("twisted".into(), r.clone()));
        out.metrics.push(("twisted".into(), MetricOutput::Field(t.metric().clone(), self.domain.clone())));
        out.probes.push(Probe {
            name: "twisted".into(),
            metric: t.metric().clone(),
            verdicts: verdicts.iter().map(|s| s.to_string()).collect(),
        });
        Ok(out)
    }

    fn duality(&self) -> Result<Outcome, CliError> {
        let h = self.b.metric()?;
        let dual = h.dual();
        let back = dual.dual();
        let mut involution: f64 = 0.0;
        for flat in self.domain.interior_indices() {
            let z = self.domain.point(flat);
            let (a, b) = match (h.evaluate(&z), back.evaluate(&z)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) if h.singular_allowed() && e.is_singular_sample() => continue,
                (Err(e), _) | (_, Err(e)) => return Err(CliError::core("evaluating the double dual", e)),
            };
            let scale = a.as_matrix().max_abs().max(1.0);
            involution = involution.max(b.sub(&a).as_matrix().max_abs() / scale);
        }
        let rh = self.classify_metric(&h, "the metric")?;
        let rd = self.classify_metric(&dual, "the dual")?;
        let mut out = Outcome::new(rh.steps.clone());
        out.checks.push(Check::new(
            "involution",
            involution <= 1e-10,
            Some(involution),
            "max relative |h** - h| on the grid",
        ));
        for (a, b) in [("griffiths_negative", "griffiths_positive"), ("griffiths_positive", "griffiths_negative")] {
            let (va, vb) = (rh.verdict(a).unwrap(), rd.verdict(b).unwrap());
            out.checks.push(Check::new(
                format!("{a}_swap"),
                va.pass == vb.pass,
                None,
                format!("{a}(h) = {}, {b}(h*) = {}", va.pass, vb.pass),
            ));
        }
        let expect = self.config().expect.clone().unwrap_or_default();
        for v in &expect {
            out.checks.push(Check::verdict(format!("metric.{v}"), &rh, v));
        }
        out.result =
            json!({ "metric": h.describe(), "involution_error": involution, "metric_report": &rh, "dual_report": &rd });
        out.fields.push(("metric".into(), rh));
        out.fields.push(("dual".into(), rd));
        out.metrics.push(("metric".into(), MetricOutput::Field(h.clone(), self.domain.clone())));
        out.metrics.push(("dual".into(), MetricOutput::Field(dual, self.domain.clone())));
        out.probes.push(Probe { name: "metric".into(), metric: h, verdicts: expect });
        Ok(out)
    }

    fn subbundle(&self) -> Result<Outcome, CliError> {
        let b = &self.b;
        let g = &self.config().geometry;
        let h = b.metric()?;
        let frame = b.frame(b.need(&g.frame, "frame")?, "geometry.frame")?;
        let sub = h.project_to_subbundle(frame.clone()).map_err(|e| CliError::core("subbundle", e))?;
        let quotient = match &g.complement {
            Some(c) => {
                Some(h.quotient(frame, b.frame(c, "geometry.complement")?).map_err(|e| CliError::core("quotient", e))?)
            }
            None => None,
        };
        let rh = self.classify_metric(&h, "the metric")?;
        let rs = self.classify_metric(&sub, "the subbundle")?;
        let rq = quotient.as_ref().map(|q| self.classify_metric(q, "the quotient")).transpose()?;
        let mut out = Outcome::new(rh.steps.clone());
        let mut sub_verdicts = vec![];
        for v in ["griffiths_negative", "nakano_negative"] {
            if rh.verdict(v).unwrap().pass {
                out.checks.push(Check::verdict(format!("subbundle.{v}"), &rs, v));
                sub_verdicts.push(v.to_string());
            }
        }
        let mut quotient_verdicts = vec![];
        if let Some(rq) = &rq {
            if rh.griffiths_positive.pass {
                out.checks.push(Check::verdict("quotient.griffiths_positive", rq, "griffiths_positive"));
                quotient_verdicts.push("griffiths_positive".to_string());
            }
        }
        if out.checks.is_empty() {
            out.checks.push(Check::new(
                "hypotheses",
                true,
                None,
                "the metric is neither negative nor positive; nothing to inherit",
            ));
        }
        out.result =
            json!({ "metric": h.describe(), "metric_report": &rh, "subbundle_report": &rs, "quotient_report": &rq });
        out.metrics.push(("subbundle".into(), MetricOutput::Field(sub.clone(), self.domain.clone())));
        out.probes.push(Probe { name: "subbundle".into(), metric: sub, verdicts: sub_verdicts });
        if let (Some(q), Some(rq)) = (quotient, rq) {
            out.metrics.push(("quotient".into(), MetricOutput::Field(q.clone(), self.domain.clone())));
            out.probes.push(Probe { name: "quotient".into(), metric: q, verdicts: quotient_verdicts });
            out.fields.push(("quotient".into(), rq));
        }
        out.fields.insert(0, ("metric".into(), rh));
        out.fields.insert(1, ("subbundle".into(), rs));
        Ok(out)
    }
}

/// Re-evaluates every probe at one point with the scenario's stencil.
pub fn probe_point(
    probes: &[Probe],
    z: &[C64],
    steps: &[f64],
    opts: &ClassifyOptions,
) -> Result<(Vec<Check>, Value), CliError> {
    let mut checks = vec![];
    let mut reports = serde_json::Map::new();
    let points = [z.to_vec()];
    for p in probes {
        let r = classify_points(&p.metric, &points, steps, opts)
            .map_err(|e| CliError::core(format!("classifying {} at the point", p.name), e))?;
        for v in &p.verdicts {
            checks.push(Check::verdict(format!("{}.{v}", p.name), &r, v));
        }
        reports.insert(p.name.clone(), serde_json::to_value(&r).expect("report serializes"));
    }
    Ok((checks, Value::Object(reports)))
}
