//! Wirtinger calculus on fields: jets, plurisubharmonicity, mollification,
//! regularized maxima and convex majorants.

pub mod jet;
pub mod mollifier;
pub mod profile;
pub mod scalar;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::grid::GridDomain;
use crate::linalg::{min_eigenvalue, HermitianMatrix};

pub use jet::{fd_jet, MatrixJet, ScalarJet};
pub use mollifier::{convolve, Mollifier};
pub use profile::{
    build_convex_majorant, kernel, regularized_max, ConvexMajorant, MajorantBase, Profile1D, SmoothPositivePart,
    SmoothStep,
};
pub use scalar::ScalarField;

/// Complex Hessian `(∂_j ∂_k̄ s)` at `z`.
pub fn wirtinger_hessian(s: &ScalarField, z: &[C64], steps: &[f64]) -> Result<HermitianMatrix> {
    Ok(s.jet(z, steps)?.hessian())
}

#[derive(Debug, Clone, Serialize)]
pub struct PshReport {
    pub pass: bool,
    pub tolerance: f64,
    pub min_eigenvalue: f64,
    pub witness: Vec<[f64; 2]>,
    /// Smallest Hessian eigenvalue at every interior point, in grid order.
    #[serde(skip)]
    pub field: Vec<f64>,
}

/// Checks `λ_min(∂∂̄ s) ≥ -tol` on the interior points of `domain`.
pub fn is_psh(s: &ScalarField, domain: &GridDomain, tol: f64) -> Result<PshReport> {
    let steps = domain.steps();
    let pts = domain.interior_indices();
    let field = pts
        .par_iter()
        .map(|&i| Ok(min_eigenvalue(&wirtinger_hessian(s, &domain.point(i), &steps)?)?))
        .collect::<Result<Vec<f64>>>()?;
    let (arg, min) =
        field.iter().enumerate().fold((0, f64::INFINITY), |(ai, am), (i, &v)| if v < am { (i, v) } else { (ai, am) });
    Ok(PshReport {
        pass: min >= -tol,
        tolerance: tol,
        min_eigenvalue: min,
        witness: domain.point(pts[arg]).iter().map(|c| [c.re, c.im]).collect(),
        field,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psh_examples() {
        let g = GridDomain::cube(2, 1.0, 8, 2).unwrap();
        let good = ScalarField::parse("abs2(z1) + abs2(z2)^2", 2).unwrap();
        let r = is_psh(&good, &g, 1e-8).unwrap();
        assert!(r.pass, "{}", r.min_eigenvalue);
        let bad = ScalarField::parse("abs2(z1) - abs2(z2)", 2).unwrap();
        let r = is_psh(&bad, &g, 1e-8).unwrap();
        assert!(!r.pass);
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-8);
    }

    #[test]
    fn hessian_convergence_is_second_order() {
        let s = ScalarField::parse("exp(re(z1))*abs2(z1)", 1).unwrap();
        let z = [C64::new(0.3, 0.4)];
        // exact: ∂∂̄ of e^x (x² + y²) = ¼ Δ = ¼ e^x (x² + y² + 4x + 4)
        let (x, y) = (0.3f64, 0.4f64);
        let exact = 0.25 * x.exp() * (x * x + y * y + 4.0 * x + 4.0);
        let err = |h: f64| (wirtinger_hessian(&s, &z, &[h, h]).unwrap()[(0, 0)].re - exact).abs();
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }
}
