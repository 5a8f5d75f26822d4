use serde::Serialize;

use super::{weight_search, Target, WeightSearch, WeightSearchOptions};
use crate::calculus::ScalarField;
use crate::curvature::ClassifyOptions;
use crate::error::Result;
use crate::field::MetricField;
use crate::grid::GridDomain;

#[derive(Debug, Clone, Serialize)]
pub struct Twist {
    /// Margin demanded from both verdicts.
    pub margin: f64,
    pub search: WeightSearch,
}

impl Twist {
    /// `e^{-u(φ)}·h0`.
    pub fn metric(&self) -> &MetricField {
        &self.search.metric
    }
}

/// Finds an increasing convex `u` with `u(0) = 0` such that
/// `e^{-u(φ)}·h0` is Nakano positive and dual Nakano positive on `domain`
/// with margin at least `tol` (default `10 · max_step²`).
///
/// Points where `h0` already has twice the margin impose nothing, so an
/// already both-positive `h0` comes back unchanged.
pub fn twist_to_positive(
    h0: &MetricField,
    phi: &ScalarField,
    domain: &GridDomain,
    tol: Option<f64>,
    classify: &ClassifyOptions,
) -> Result<Twist> {
    let step = domain.max_step();
    let tol = tol.or(classify.tol).unwrap_or(10.0 * step * step);
    let margin = 2.0 * tol;
    let opts = WeightSearchOptions {
        targets: vec![Target::NakanoPositive, Target::DualNakanoPositive],
        margin,
        slack: -margin,
        classify: ClassifyOptions { tol: Some(tol), ..classify.clone() },
        ..Default::default()
    };
    let search = weight_search(h0, phi, domain, &opts)?;
    Ok(Twist { margin, search })
}
