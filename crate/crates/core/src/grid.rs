//! Axis-aligned boxes in `C^n ≅ R^{2n}` with uniform cell-centred sampling.
//!
//! Real axis `2j` is `Re z_{j+1}` and axis `2j+1` is `Im z_{j+1}`. Each axis
//! carries `samples` interior points plus `margin` extra points on both sides
//! so every interior point owns a full central-difference stencil.

use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    n: usize,
    center: Vec<C64>,
    half_width: Vec<f64>,
    samples: usize,
    margin: usize,
}

/// Serializable summary of a grid, used in reports and sidecars.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMeta {
    pub n: usize,
    pub center: Vec<[f64; 2]>,
    pub half_width: Vec<f64>,
    pub samples_per_axis: usize,
    pub margin: usize,
    pub step: Vec<f64>,
}

pub const MIN_SAMPLES: usize = 8;
pub const MIN_MARGIN: usize = 2;

impl GridDomain {
    pub fn new(
        n: usize,
        center: Vec<C64>,
        half_width: Vec<f64>,
        samples: usize,
        margin: usize,
    ) -> Result<Self, GridError> {
        if n == 0 {
            return Err(GridError::Invalid("dimension must be positive".into()));
        }
        if center.len() != n {
            return Err(GridError::Invalid(format!("center has {} coordinates, expected {n}", center.len())));
        }
        if half_width.len() != 2 * n {
            return Err(GridError::Invalid(format!("half_width has {} entries, expected {}", half_width.len(), 2 * n)));
        }
        if half_width.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(GridError::Invalid("half widths must be positive and finite".into()));
        }
        if center.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(GridError::Invalid("center must be finite".into()));
        }
        if samples < MIN_SAMPLES {
            return Err(GridError::Invalid(format!("samples_per_axis must be at least {MIN_SAMPLES}")));
        }
        if margin < MIN_MARGIN {
            return Err(GridError::Invalid(format!("margin must be at least {MIN_MARGIN}")));
        }
        Ok(Self { n, center, half_width, samples, margin })
    }

    /// Box centred at the origin with the same half width on every axis.
    pub fn cube(n: usize, half_width: f64, samples: usize, margin: usize) -> Result<Self, GridError> {
        Self::new(n, vec![C64::new(0.0, 0.0); n], vec![half_width; 2 * n], samples, margin)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn real_dim(&self) -> usize {
        2 * self.n
    }

    pub fn center(&self) -> &[C64] {
        &self.center
    }

    pub fn half_width(&self) -> &[f64] {
        &self.half_width
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn step(&self, axis: usize) -> f64 {
        2.0 * self.half_width[axis] / self.samples as f64
    }

    pub fn steps(&self) -> Vec<f64> {
        (0..self.real_dim()).map(|a| self.step(a)).collect()
    }

    pub fn max_step(&self) -> f64 {
        self.steps().into_iter().fold(0.0, f64::max)
    }

    /// Points per axis including both margins.
    pub fn extended_per_axis(&self) -> usize {
        self.samples + 2 * self.margin
    }

    pub fn extended_len(&self) -> usize {
        self.extended_per_axis().pow(self.real_dim() as u32)
    }

    pub fn interior_len(&self) -> usize {
        self.samples.pow(self.real_dim() as u32)
    }

    fn axis_center(&self, axis: usize) -> f64 {
        let c = self.center[axis / 2];
        if axis.is_multiple_of(2) {
            c.re
        } else {
            c.im
        }
    }

    /// Real coordinate of extended index `e` along `axis`.
    pub fn coordinate(&self, axis: usize, e: usize) -> f64 {
        let interior = e as f64 - self.margin as f64;
        self.axis_center(axis) - self.half_width[axis] + (interior + 0.5) * self.step(axis)
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let e = self.extended_per_axis();
        let mut idx = vec![0; self.real_dim()];
        let mut rest = flat;
        for a in (0..self.real_dim()).rev() {
            idx[a] = rest % e;
            rest /= e;
        }
        idx
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        let e = self.extended_per_axis();
        multi.iter().fold(0, |acc, &i| acc * e + i)
    }

    pub fn point_of_multi(&self, multi: &[usize]) -> Vec<C64> {
        (0..self.n)
            .map(|j| C64::new(self.coordinate(2 * j, multi[2 * j]), self.coordinate(2 * j + 1, multi[2 * j + 1])))
            .collect()
    }

    pub fn point(&self, flat: usize) -> Vec<C64> {
        self.point_of_multi(&self.multi_index(flat))
    }

    pub fn is_interior_multi(&self, multi: &[usize]) -> bool {
        multi.iter().all(|&i| i >= self.margin && i < self.margin + self.samples)
    }

    /// Extended flat indices of the interior points, in row-major order.
    pub fn interior_indices(&self) -> Vec<usize> {
        let d = self.real_dim();
        let mut out = Vec::with_capacity(self.interior_len());
        let mut multi = vec![self.margin; d];
        loop {
            out.push(self.flat_index(&multi));
            let mut a = d;
            loop {
                if a == 0 {
                    return out;
                }
                a -= 1;
                multi[a] += 1;
                if multi[a] < self.margin + self.samples {
                    break;
                }
                multi[a] = self.margin;
            }
        }
    }

    /// Extended flat index of `z` if it sits on the lattice inside the
    /// extended grid.
    pub fn locate(&self, z: &[C64]) -> Option<usize> {
        if z.len() != self.n {
            return None;
        }
        let e = self.extended_per_axis() as f64;
        let mut multi = Vec::with_capacity(self.real_dim());
        for a in 0..self.real_dim() {
            let x = if a % 2 == 0 { z[a / 2].re } else { z[a / 2].im };
            let s = (x - self.axis_center(a) + self.half_width[a]) / self.step(a) - 0.5 + self.margin as f64;
            let r = s.round();
            if (s - r).abs() > 1e-6 || r < 0.0 || r >= e {
                return None;
            }
            multi.push(r as usize);
        }
        Some(self.flat_index(&multi))
    }

    /// Whether `z` lies in the closed interior box (margins excluded).
    pub fn contains(&self, z: &[C64]) -> bool {
        (0..self.real_dim()).all(|a| {
            let x = if a % 2 == 0 { z[a / 2].re } else { z[a / 2].im };
            (x - self.axis_center(a)).abs() <= self.half_width[a] + 1e-12
        })
    }

    /// Same lattice with `cells` interior points removed on every side.
    pub fn shrink(&self, cells: usize) -> Result<Self, GridError> {
        if self.samples <= 2 * cells {
            return Err(GridError::Invalid(format!(
                "cannot shrink {} samples by {cells} cells per side",
                self.samples
            )));
        }
        let half_width = (0..self.real_dim()).map(|a| self.half_width[a] - cells as f64 * self.step(a)).collect();
        Self::new(self.n, self.center.clone(), half_width, self.samples - 2 * cells, self.margin)
    }

    /// Number of cells to drop per side so that balls of `radius` around the
    /// extended points stay inside this grid's extended lattice.
    pub fn cells_for_radius(&self, radius: f64) -> usize {
        self.steps().iter().map(|s| (radius / s).ceil() as usize).max().unwrap_or(0)
    }

    /// Offset (in extended-index units) that maps a point of `inner`, which
    /// must have been produced by [`GridDomain::shrink`], into this grid.
    pub fn offset_of(&self, inner: &GridDomain) -> Option<usize> {
        if inner.n != self.n || inner.margin != self.margin || inner.samples > self.samples {
            return None;
        }
        let diff = self.samples - inner.samples;
        if !diff.is_multiple_of(2) {
            return None;
        }
        let cells = diff / 2;
        let same_lattice = (0..self.real_dim()).all(|a| {
            (self.step(a) - inner.step(a)).abs() <= 1e-12 * self.step(a)
                && (self.coordinate(a, cells) - inner.coordinate(a, 0)).abs() <= 1e-9 * self.step(a)
        });
        same_lattice.then_some(cells)
    }

    pub fn meta(&self) -> GridMeta {
        GridMeta {
            n: self.n,
            center: self.center.iter().map(|c| [c.re, c.im]).collect(),
            half_width: self.half_width.clone(),
            samples_per_axis: self.samples,
            margin: self.margin,
            step: self.steps(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(GridDomain::cube(1, 1.0, 4, 2).is_err());
        assert!(GridDomain::cube(1, 1.0, 8, 1).is_err());
        assert!(GridDomain::cube(1, -1.0, 8, 2).is_err());
        assert!(GridDomain::new(2, vec![C64::new(0.0, 0.0)], vec![1.0; 4], 8, 2).is_err());
    }

    #[test]
    fn coordinates_are_cell_centred() {
        let g = GridDomain::cube(1, 1.0, 8, 2).unwrap();
        assert_eq!(g.step(0), 0.25);
        assert!((g.coordinate(0, 2) + 0.875).abs() < 1e-15);
        assert!((g.coordinate(0, 9) - 0.875).abs() < 1e-15);
        assert_eq!(g.interior_indices().len(), 64);
        assert_eq!(g.extended_len(), 144);
    }

    #[test]
    fn locate_round_trips() {
        let g =
            GridDomain::new(2, vec![C64::new(0.1, -0.2), C64::new(0.0, 0.3)], vec![1.0, 0.5, 0.7, 0.9], 8, 2).unwrap();
        for flat in [0, 17, 555, g.extended_len() - 1] {
            let p = g.point(flat);
            assert_eq!(g.locate(&p), Some(flat));
        }
        assert_eq!(g.locate(&[C64::new(5.0, 0.0), C64::new(0.0, 0.0)]), None);
    }

    #[test]
    fn shrink_keeps_lattice() {
        let g = GridDomain::cube(1, 1.0, 16, 2).unwrap();
        let s = g.shrink(3).unwrap();
        assert_eq!(s.samples(), 10);
        assert_eq!(g.offset_of(&s), Some(3));
        for flat in [0, 5, s.extended_len() - 1] {
            let p = s.point(flat);
            assert!(g.locate(&p).is_some());
        }
        assert!(g.shrink(8).is_err());
    }
}
