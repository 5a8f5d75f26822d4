use rayon::prelude::*;

use super::MetricField;
use crate::error::{Error, Result};
use crate::grid::GridDomain;
use crate::linalg::{CMatrix, HermitianMatrix};
use crate::samples::{exception_interior_count, GridSamples};

/// A metric sampled on every extended point of a grid, with the recorded
/// exception set (singular points, stored as non-finite matrices).
#[derive(Debug, Clone)]
pub struct SampledMetric {
    pub samples: GridSamples<HermitianMatrix>,
    pub exceptions: Vec<usize>,
}

/// Samples `h` on the extended grid of `domain`. Singular samples are only
/// accepted when `h` allows them, and the resulting exception set must have
/// empty interior.
pub fn sample_metric(h: &MetricField, domain: &GridDomain) -> Result<SampledMetric> {
    if h.dim() != domain.n() {
        return Err(Error::DomainMismatch(format!("metric on C^{}, grid on C^{}", h.dim(), domain.n())));
    }
    let r = h.rank();
    let values = (0..domain.extended_len())
        .into_par_iter()
        .map(|i| match h.evaluate(&domain.point(i)) {
            Ok(v) => Ok((v, false)),
            Err(Error::SingularSample(_)) => {
                let nan = CMatrix::from_fn(r, r, |_, _| crate::C64::new(f64::NAN, 0.0));
                Ok((HermitianMatrix::new(nan)?, true))
            }
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    let exceptions: Vec<usize> = values.iter().enumerate().filter(|(_, v)| v.1).map(|(i, _)| i).collect();
    let interior = exception_interior_count(domain, &exceptions);
    if interior > 0 {
        return Err(Error::ExceptionSetHasInterior(interior));
    }
    let samples = GridSamples::new(domain.clone(), values.into_iter().map(|v| v.0).collect())?;
    Ok(SampledMetric { samples, exceptions })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_thin_singular_sets() {
        // |z|^2 vanishes only at the origin, which is not a lattice point for
        // an even sample count; shift the grid so it is
        let g = GridDomain::new(1, vec![crate::C64::new(0.125, 0.125)], vec![1.0, 1.0], 8, 2).unwrap();
        let h = MetricField::parse_analytic(1, &[vec!["abs2(z1)".into()]]).unwrap().with_singular_allowed(true);
        let s = sample_metric(&h, &g).unwrap();
        assert_eq!(s.exceptions.len(), 1);
        assert!(!s.samples.at(s.exceptions[0]).is_finite());
        let strict = h.with_singular_allowed(false);
        assert!(matches!(sample_metric(&strict, &g), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn rejects_fat_singular_sets() {
        let g = GridDomain::cube(1, 1.0, 8, 2).unwrap();
        let h = MetricField::parse_analytic(1, &[vec!["0".into()]]).unwrap().with_singular_allowed(true);
        assert!(matches!(sample_metric(&h, &g), Err(Error::ExceptionSetHasInterior(_))));
    }
}
