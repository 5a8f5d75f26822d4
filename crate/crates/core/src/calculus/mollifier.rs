use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridDomain;
use crate::samples::{GridSamples, SampleValue};

/// Smallest admissible radius, in multiples of the largest grid step.
pub const MIN_EPS_STEPS: f64 = 3.0;

/// `ρ_ε(x) = c_N ε^{-2n} (1 - |x/ε|²)^4` on the ball of radius `ε` in
/// `R^{2n}`, with `c_N = (n+4)! / (24 π^n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    n: usize,
    eps: f64,
}

impl Mollifier {
    pub fn new(n: usize, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::EpsilonTooSmall { eps, min: 0.0 });
        }
        Ok(Self { n, eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn unit_constant(n: usize) -> f64 {
        let fact: f64 = (1..=n + 4).map(|k| k as f64).product();
        fact / (24.0 * std::f64::consts::PI.powi(n as i32))
    }

    /// Density at a point with `|x|² = r2`.
    pub fn density(&self, r2: f64) -> f64 {
        let s = r2 / (self.eps * self.eps);
        if s >= 1.0 {
            return 0.0;
        }
        Self::unit_constant(self.n) * self.eps.powi(-2 * self.n as i32) * (1.0 - s).powi(4)
    }

    /// Lattice offsets inside the ball with weights renormalized to unit
    /// mass.
    pub fn lattice_weights(&self, steps: &[f64]) -> Vec<(Vec<isize>, f64)> {
        let d = steps.len();
        let radius: Vec<isize> = steps.iter().map(|s| (self.eps / s).floor() as isize).collect();
        let mut out = Vec::new();
        let mut o: Vec<isize> = radius.iter().map(|r| -r).collect();
        loop {
            let r2: f64 = o.iter().zip(steps).map(|(&k, s)| (k as f64 * s).powi(2)).sum();
            let w = self.density(r2);
            if w > 0.0 {
                out.push((o.clone(), w));
            }
            let mut a = d;
            loop {
                if a == 0 {
                    let total: f64 = out.iter().map(|(_, w)| w).sum();
                    for (_, w) in &mut out {
                        *w /= total;
                    }
                    return out;
                }
                a -= 1;
                o[a] += 1;
                if o[a] <= radius[a] {
                    break;
                }
                o[a] = -radius[a];
            }
        }
    }
}

/// `(f * ρ_ε)` on `target`, which must be a shrunk copy of the source grid
/// (same lattice) whose every extended point keeps the kernel support inside
/// the source grid.
///
/// Non-finite source samples are skipped and the remaining weights
/// renormalized; a point whose whole stencil is non-finite stays non-finite.
pub fn convolve<T: SampleValue>(
    source: &GridSamples<T>,
    mollifier: &Mollifier,
    target: &GridDomain,
) -> Result<GridSamples<T>> {
    let sd = source.domain();
    let min = MIN_EPS_STEPS * sd.max_step();
    if mollifier.eps() < min {
        return Err(Error::EpsilonTooSmall { eps: mollifier.eps(), min });
    }
    let offset = sd
        .offset_of(target)
        .ok_or_else(|| Error::DomainMismatch("convolution target is not on the source lattice".into()))?;
    let weights = mollifier.lattice_weights(&sd.steps());
    let reach = weights.iter().flat_map(|(o, _)| o.iter().map(|k| k.unsigned_abs())).max().unwrap_or(0);
    if reach > offset {
        return Err(Error::InsufficientMargin(format!(
            "kernel reaches {reach} cells but the target sits only {offset} cells inside the source"
        )));
    }
    let values: Vec<T> = (0..target.extended_len())
        .into_par_iter()
        .map(|flat| {
            let base: Vec<isize> = target.multi_index(flat).iter().map(|&i| (i + offset) as isize).collect();
            let template = source.at(sd.flat_index(&base.iter().map(|&i| i as usize).collect::<Vec<_>>()));
            let mut acc = template.zero_like();
            let mut used = 0.0;
            let mut idx = vec![0usize; base.len()];
            for (o, w) in &weights {
                for (a, slot) in idx.iter_mut().enumerate() {
                    *slot = (base[a] + o[a]) as usize;
                }
                let v = source.at(sd.flat_index(&idx));
                if v.is_finite_value() {
                    acc.add_scaled(*w, v);
                    used += w;
                }
            }
            if used > 0.0 {
                let mut out = acc.zero_like();
                out.add_scaled(1.0 / used, &acc);
                out
            } else {
                let mut out = template.clone();
                out.add_scaled(f64::NAN, template);
                out
            }
        })
        .collect();
    GridSamples::new(target.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    #[test]
    fn continuous_mass_is_one() {
        // radial quadrature: |S^{2n-1}| ∫_0^ε ρ(r) r^{2n-1} dr
        for n in 1..=3usize {
            let m = Mollifier::new(n, 0.7).unwrap();
            let sphere = 2.0 * std::f64::consts::PI.powi(n as i32) / (1..n).map(|k| k as f64).product::<f64>();
            let steps = 20000;
            let h = 0.7 / steps as f64;
            let mut total = 0.0;
            for i in 0..steps {
                let r = (i as f64 + 0.5) * h;
                total += m.density(r * r) * r.powi(2 * n as i32 - 1) * h;
            }
            assert!((sphere * total - 1.0).abs() < 1e-6, "n={n}: {}", sphere * total);
        }
        assert!((Mollifier::unit_constant(1) - 5.0 / std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn lattice_weights_sum_to_one() {
        let m = Mollifier::new(1, 0.3).unwrap();
        let w = m.lattice_weights(&[0.05, 0.05]);
        let total: f64 = w.iter().map(|(_, x)| x).sum();
        assert!((total - 1.0).abs() < 1e-14);
        assert!(w.iter().all(|(o, _)| o.iter().all(|k| k.abs() <= 6)));
    }

    #[test]
    fn rejects_small_eps_and_thin_margins() {
        let g = GridDomain::cube(1, 1.0, 32, 2).unwrap();
        let s = GridSamples::new(g.clone(), vec![1.0; g.extended_len()]).unwrap();
        let small = Mollifier::new(1, 0.1).unwrap();
        assert!(matches!(convolve(&s, &small, &g.shrink(4).unwrap()), Err(Error::EpsilonTooSmall { .. })));
        let ok = Mollifier::new(1, 0.25).unwrap();
        assert!(matches!(convolve(&s, &ok, &g.shrink(2).unwrap()), Err(Error::InsufficientMargin(_))));
        let out = convolve(&s, &ok, &g.shrink(4).unwrap()).unwrap();
        assert!(out.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn skips_singular_samples() {
        let g = GridDomain::cube(1, 1.0, 32, 2).unwrap();
        let mut values: Vec<f64> = (0..g.extended_len()).map(|i| g.point(i)[0].re).collect();
        let hole = g.locate(&[C64::new(g.coordinate(0, 18), g.coordinate(1, 18))]).unwrap();
        values[hole] = f64::INFINITY;
        let s = GridSamples::new(g.clone(), values).unwrap();
        let out = convolve(&s, &Mollifier::new(1, 0.25).unwrap(), &g.shrink(4).unwrap()).unwrap();
        assert!(out.values().iter().all(|v| v.is_finite()));
    }
}
