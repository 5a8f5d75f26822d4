//! Scenario configuration: the JSON schema and its conversion into core
//! objects.

use std::path::{Path, PathBuf};

use hermlab_core::calculus::ScalarField;
use hermlab_core::constructions::{Cutoff, Target};
use hermlab_core::expr::{parse, Expr};
use hermlab_core::field::MetricField;
use hermlab_core::grid::GridDomain;
use hermlab_core::samples::read_metric_samples;
use hermlab_core::C64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Classify,
    ApproximateLocal,
    ApproximateGlobal,
    ExtendGriffiths,
    ExtendNakano,
    Twist,
    DualityCheck,
    SubbundleCheck,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    pub domain: DomainConfig,
    pub metric: MetricConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub numeric: NumericConfig,
    /// Verdicts that must pass (`classify` and `duality_check`); all five
    /// when absent.
    #[serde(default)]
    pub expect: Option<Vec<String>>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HalfWidth {
    Uniform(f64),
    PerAxis(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub n: usize,
    /// `[re, im]` per coordinate; the origin when absent.
    #[serde(default)]
    pub center: Option<Vec<[f64; 2]>>,
    pub half_width: HalfWidth,
    pub samples: usize,
    #[serde(default = "default_margin")]
    pub margin: usize,
}

fn default_margin() -> usize {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    #[serde(default)]
    pub rank: Option<usize>,
    /// Row-major matrix entries as expression strings.
    #[serde(default)]
    pub entries: Option<Vec<Vec<String>>>,
    /// Binary grid samples written by an earlier run.
    #[serde(default)]
    pub samples_file: Option<PathBuf>,
    #[serde(default)]
    pub singular_allowed: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Radii {
    pub inner: f64,
    pub outer: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// Defining functions of `Y` (extension) or of the model (global).
    #[serde(default)]
    pub f: Option<Vec<String>>,
    /// Retraction to chart coordinates.
    #[serde(default)]
    pub pi: Option<Vec<String>>,
    /// Chart to ambient coordinates.
    #[serde(default)]
    pub embed: Option<Vec<String>>,
    #[serde(default)]
    pub chart: Option<DomainConfig>,
    /// Cutoff band on `|f|`; `χ ≡ 1` when absent.
    #[serde(default)]
    pub chi: Option<Radii>,
    /// Exhaustion; `|z - c|²` when absent.
    #[serde(default)]
    pub phi: Option<String>,
    /// Metric on the complementary summand (negative extensions).
    #[serde(default)]
    pub g: Option<MetricConfig>,
    /// Metric away from `Y` (positive extensions).
    #[serde(default)]
    pub far: Option<MetricConfig>,
    /// Subbundle frame, `r` rows of `s` holomorphic expressions.
    #[serde(default)]
    pub frame: Option<Vec<Vec<String>>>,
    /// Complement frame for the quotient.
    #[serde(default)]
    pub complement: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericConfig {
    /// Stencil step on every real axis; the grid step when absent.
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub eps: Option<Vec<f64>>,
    #[serde(default)]
    pub stages: Option<Vec<usize>>,
    #[serde(default)]
    pub unit: Option<f64>,
    #[serde(default)]
    pub compact_radius: Option<f64>,
    #[serde(default)]
    pub target: Option<Target>,
    #[serde(default)]
    pub restarts: Option<usize>,
    #[serde(default)]
    pub bands: Option<usize>,
    #[serde(default)]
    pub chain_points: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "yes")]
    pub fields: bool,
    #[serde(default = "yes")]
    pub metrics: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, fields: true, metrics: true }
    }
}

/// Reads and schema-checks a config, reporting the JSON path of the first
/// offending field.
pub fn load(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(if path == "." { "$".into() } else { path }, e.into_inner().to_string())
    })
}

/// Builds core objects from a config. Paths inside the config are resolved
/// against `base`.
pub struct Builder<'a> {
    pub config: &'a ScenarioConfig,
    pub base: PathBuf,
}

impl<'a> Builder<'a> {
    pub fn n(&self) -> usize {
        self.config.domain.n
    }

    pub fn domain(&self) -> Result<GridDomain, CliError> {
        domain(&self.config.domain, "domain")
    }

    pub fn metric(&self) -> Result<MetricField, CliError> {
        self.metric_block(&self.config.metric, self.n(), "metric")
    }

    pub fn metric_block(&self, m: &MetricConfig, n: usize, at: &str) -> Result<MetricField, CliError> {
        let h = match (&m.entries, &m.samples_file) {
            (Some(entries), None) => {
                if let Some(r) = m.rank {
                    if entries.len() != r || entries.iter().any(|row| row.len() != r) {
                        return Err(CliError::config(format!("{at}.entries"), format!("expected a {r}×{r} matrix")));
                    }
                }
                let parsed = entries
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        row.iter()
                            .enumerate()
                            .map(|(j, text)| expr(text, n, &format!("{at}.entries[{i}][{j}]")))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                MetricField::analytic(n, parsed)
                    .map_err(|e| CliError::config(format!("{at}.entries"), e.to_string()))?
            }
            (None, Some(file)) => {
                let path = self.base.join(file);
                let samples =
                    read_metric_samples(&path).map_err(|e| CliError::core(format!("reading {}", path.display()), e))?;
                if samples.domain().n() != n {
                    return Err(CliError::config(
                        format!("{at}.samples_file"),
                        format!("samples live on C^{}, expected C^{n}", samples.domain().n()),
                    ));
                }
                MetricField::sampled(samples)
                    .map_err(|e| CliError::config(format!("{at}.samples_file"), e.to_string()))?
            }
            _ => {
                return Err(CliError::config(at.to_string(), "give exactly one of `entries` and `samples_file`".into()))
            }
        };
        if let Some(r) = m.rank {
            if h.rank() != r {
                return Err(CliError::config(format!("{at}.rank"), format!("metric has rank {}", h.rank())));
            }
        }
        Ok(h.with_singular_allowed(m.singular_allowed))
    }

    pub fn exprs(&self, list: &[String], n: usize, at: &str) -> Result<Vec<Expr>, CliError> {
        list.iter().enumerate().map(|(i, t)| expr(t, n, &format!("{at}[{i}]"))).collect()
    }

    pub fn frame(&self, rows: &[Vec<String>], at: &str) -> Result<Vec<Vec<Expr>>, CliError> {
        rows.iter().enumerate().map(|(i, row)| self.exprs(row, self.n(), &format!("{at}[{i}]"))).collect()
    }

    /// `φ`, defaulting to `|z - c|²` around the domain center.
    pub fn phi(&self, domain: &GridDomain) -> Result<ScalarField, CliError> {
        match &self.config.geometry.phi {
            Some(text) => {
                ScalarField::parse(text, self.n()).map_err(|e| CliError::config("geometry.phi".into(), e.to_string()))
            }
            None => Ok(ScalarField::squared_distance(domain.center())),
        }
    }

    pub fn cutoff(&self) -> Cutoff {
        match self.config.geometry.chi {
            Some(Radii { inner, outer }) => Cutoff::Band { inner, outer },
            None => Cutoff::One,
        }
    }

    /// Required geometry entry.
    pub fn need<'b, T>(&self, value: &'b Option<T>, name: &str) -> Result<&'b T, CliError> {
        value
            .as_ref()
            .ok_or_else(|| CliError::config(format!("geometry.{name}"), format!("required for {:?}", self.config.kind)))
    }
}

pub fn domain(d: &DomainConfig, at: &str) -> Result<GridDomain, CliError> {
    let center = match &d.center {
        Some(c) => c.iter().map(|[re, im]| C64::new(*re, *im)).collect(),
        None => vec![C64::new(0.0, 0.0); d.n],
    };
    let half_width = match &d.half_width {
        HalfWidth::Uniform(w) => vec![*w; 2 * d.n],
        HalfWidth::PerAxis(w) => w.clone(),
    };
    GridDomain::new(d.n, center, half_width, d.samples, d.margin)
        .map_err(|e| CliError::config(at.to_string(), e.to_string()))
}

fn expr(text: &str, n: usize, at: &str) -> Result<Expr, CliError> {
    parse(text, n).map_err(|e| CliError::config(at.to_string(), e.to_string()))
}
