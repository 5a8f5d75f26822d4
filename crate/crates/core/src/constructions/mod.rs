//! Constructive procedures: local mollification, cutoffs, convex weight
//! search, global approximation, extension from a submanifold and positivity
//! twisting.

mod extension;
mod global;
mod local;
mod twist;
mod weight;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::MatrixJet;
use crate::curvature::{griffiths_extremes_with, nakano_max_eig, nakano_min_eig, CurvatureData};
use crate::error::Result;

pub use extension::{
    extend_griffiths_negative, extend_nakano_negative, extend_nakano_positive, ChainCheck, Cutoff, Extension,
    ExtensionOptions, ExtensionProblem,
};
pub use global::{global_approximate, GlobalApproximation, GlobalOptions, GlobalStage, MonotoneCheck, StageReport};
pub use local::{make_cutoff, smooth_approximate_local, LocalApproximation, LocalStage, LocalStageReport};
pub use twist::{twist_to_positive, Twist};
pub use weight::{weight_search, WeightSearch, WeightSearchOptions};

/// A curvature condition the constructions aim for. Each one is a verdict of
/// the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    GriffithsNegative,
    NakanoNegative,
    GriffithsPositive,
    DualNakanoPositive,
    NakanoPositive,
}

impl Target {
    pub fn verdict_name(self) -> &'static str {
        match self {
            Target::GriffithsNegative => "griffiths_negative",
            Target::NakanoNegative => "nakano_negative",
            Target::GriffithsPositive => "griffiths_positive",
            Target::DualNakanoPositive => "dual_nakano_positive",
            Target::NakanoPositive => "nakano_positive",
        }
    }

    /// Sign of the conformal exponent that pushes the metric towards the
    /// target: `e^{+w}` helps negativity, `e^{-w}` positivity.
    pub fn weight_sign(self) -> f64 {
        match self {
            Target::GriffithsNegative | Target::NakanoNegative => 1.0,
            _ => -1.0,
        }
    }

    pub fn needs_dual(self) -> bool {
        matches!(self, Target::GriffithsPositive | Target::DualNakanoPositive)
    }
}

/// Signed value of the tested form at one point in the normalized frame:
/// the target holds there iff the value is `≥ 0`.
fn target_values(
    z: &[C64],
    jet: &MatrixJet,
    targets: &[Target],
    restarts: usize,
    seed: u64,
    stream: u64,
) -> Result<Vec<f64>> {
    let data = CurvatureData::from_jet(z, jet)?.normalized();
    let dual = if targets.iter().any(|t| t.needs_dual()) {
        Some(CurvatureData::from_jet(z, &jet.dual()?)?.normalized())
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    Ok(targets
        .iter()
        .map(|t| match t {
            Target::GriffithsNegative => griffiths_extremes_with(&data, restarts, &mut rng).min.value,
            Target::NakanoNegative => nakano_min_eig(&data),
            Target::NakanoPositive => -nakano_max_eig(&data),
            Target::GriffithsPositive => {
                griffiths_extremes_with(dual.as_ref().expect("dual computed"), restarts, &mut rng).min.value
            }
            Target::DualNakanoPositive => nakano_min_eig(dual.as_ref().expect("dual computed")),
        })
        .collect())
}

/// Largest shortfall `max_t (-value_t)` over the targets; `≤ 0` when every
/// target holds at the point.
fn deficit(z: &[C64], jet: &MatrixJet, targets: &[Target], restarts: usize, seed: u64, stream: u64) -> Result<f64> {
    Ok(target_values(z, jet, targets, restarts, seed, stream)?
        .into_iter()
        .map(|v| -v)
        .fold(f64::NEG_INFINITY, f64::max))
}

fn label(z: &[C64]) -> Vec<[f64; 2]> {
    z.iter().map(|c| [c.re, c.im]).collect()
}
