//! Curvature forms of smooth metrics and the positivity tests built on them.
//!
//! Orientation: every form here is the minimized Hessian of a section norm,
//! so *form ⪰ 0 means the metric is negatively curved*. In terms of the
//! Chern curvature, `iΘ_h` corresponds to minus the form.

mod classify;

use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::calculus::jet::{fd_jet, MatrixJet};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::MetricField;
use crate::linalg::{chol_posdef, eig_hermitian, invert_lower, whiten, CMatrix, HermitianMatrix};

pub use classify::{
    classify, classify_points, ClassificationReport, ClassifyOptions, PointSummary, Verdict, Witness, VERDICT_NAMES,
};

/// Curvature blocks `Λ_{jk̄}` at a point, in the given frame and in an
/// `h`-orthonormal frame.
#[derive(Debug, Clone)]
pub struct CurvatureData {
    pub point: Vec<C64>,
    pub n: usize,
    pub r: usize,
    /// `Λ_{jk̄}` at `j * n + k`.
    pub blocks: Vec<CMatrix>,
    /// `L^{-1} Λ_{jk̄} L^{-†}` for `h = L L†`.
    pub normalized_blocks: Vec<CMatrix>,
}

impl CurvatureData {
    /// Builds the data from a metric jet. Fails when the metric value is not
    /// positive definite.
    pub fn from_jet(point: &[C64], jet: &MatrixJet) -> Result<Self> {
        let n = jet.dim();
        let r = jet.rank();
        let stored = jet.curvature_blocks()?;
        let h = HermitianMatrix::new(jet.value.clone())?;
        let linv = invert_lower(&chol_posdef(&h)?);
        let normalized_blocks = stored.iter().map(|b| whiten(b, &linv)).collect();
        let scale = jet.log_scale.exp();
        let blocks = stored.iter().map(|b| b.scale_real(scale)).collect();
        Ok(Self { point: point.to_vec(), n, r, blocks, normalized_blocks })
    }

    pub fn block(&self, j: usize, k: usize) -> &CMatrix {
        &self.blocks[j * self.n + k]
    }

    /// The same data expressed in the `h`-orthonormal frame.
    pub fn normalized(&self) -> Self {
        Self { blocks: self.normalized_blocks.clone(), ..self.clone() }
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().all(CMatrix::is_finite)
    }

    /// `Λ(v) = Σ v_j v̄_k Λ_{jk̄}`.
    pub fn direction_matrix(&self, v: &[C64]) -> HermitianMatrix {
        let mut m = CMatrix::zeros(self.r, self.r);
        for j in 0..self.n {
            for k in 0..self.n {
                m.axpy(v[j] * v[k].conj(), self.block(j, k));
            }
        }
        HermitianMatrix::new(m).expect("square")
    }

    /// `M(ξ)_{kj} = ξ† Λ_{jk̄} ξ`, so that `ξ†Λ(v)ξ = v† M(ξ) v`.
    pub fn fiber_matrix(&self, xi: &[C64]) -> HermitianMatrix {
        let m = CMatrix::from_fn(self.n, self.n, |k, j| self.block(j, k).sesquilinear(xi, xi));
        HermitianMatrix::new(m).expect("square")
    }

    pub fn griffiths_form(&self, v: &[C64], xi: &[C64]) -> f64 {
        self.direction_matrix(v).quadratic_form(xi)
    }

    /// `nr × nr` matrix of the tuple form `Σ_{jk} ξ_k† Λ_{jk̄} ξ_j`; block
    /// `(k, j)` is `Λ_{jk̄}`.
    pub fn nakano_matrix(&self) -> HermitianMatrix {
        let (n, r) = (self.n, self.r);
        let mut m = CMatrix::zeros(n * r, n * r);
        for j in 0..n {
            for k in 0..n {
                m.set_block(k * r, j * r, self.block(j, k));
            }
        }
        HermitianMatrix::new(m).expect("square")
    }

    /// Tuple form at `(ξ_1, ..., ξ_n)`.
    pub fn nakano_form(&self, tuple: &[Vec<C64>]) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..self.n {
            for k in 0..self.n {
                acc += self.block(j, k).sesquilinear(&tuple[k], &tuple[j]);
            }
        }
        acc.re
    }

    /// Largest deviation from `Λ_{kj̄} = Λ_{jk̄}†`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.n {
            for k in 0..self.n {
                worst = worst.max((self.block(k, j) - &self.block(j, k).adjoint()).max_abs());
            }
        }
        worst
    }
}

/// Curvature blocks of `h` at `z` from a jet with the given stencil steps.
pub fn section_hessian_form(h: &MetricField, z: &[C64], steps: &[f64]) -> Result<CurvatureData> {
    let jet = h.jet(z, steps)?;
    CurvatureData::from_jet(z, &jet).map_err(|e| match e {
        Error::Linalg(l) => Error::NotPositiveDefinite { point: z.into(), detail: l.to_string() },
        other => other,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extreme {
    pub value: f64,
    pub v: Vec<C64>,
    pub xi: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GriffithsExtremes {
    pub min: Extreme,
    pub max: Extreme,
}

pub const GRIFFITHS_RESTARTS: usize = 32;
const ITERATION_TOL: f64 = 1e-10;
const MAX_ITERATIONS: usize = 500;

fn unit_random<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..len).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

fn basis(len: usize, i: usize) -> Vec<C64> {
    (0..len).map(|k| C64::new(if k == i { 1.0 } else { 0.0 }, 0.0)).collect()
}

/// Extremal eigenpair: smallest when `lowest`, else largest.
fn extreme_pair(m: &HermitianMatrix, lowest: bool) -> (f64, Vec<C64>) {
    let e = eig_hermitian(m).expect("finite curvature data");
    let i = if lowest { 0 } else { m.dim() - 1 };
    (e.values[i], e.vector(i))
}

fn alternate(c: &CurvatureData, mut v: Vec<C64>, lowest: bool) -> Extreme {
    let mut prev = f64::NAN;
    let mut xi = basis(c.r, 0);
    let mut value = f64::NAN;
    for _ in 0..MAX_ITERATIONS {
        let (_, x) = extreme_pair(&c.direction_matrix(&v), lowest);
        xi = x;
        let (val, w) = extreme_pair(&c.fiber_matrix(&xi), lowest);
        v = w;
        value = val;
        if (val - prev).abs() < ITERATION_TOL {
            break;
        }
        prev = val;
    }
    Extreme { value, v, xi }
}

fn better(a: &Extreme, b: &Extreme, lowest: bool) -> bool {
    if lowest {
        a.value < b.value
    } else {
        a.value > b.value
    }
}

/// Extremes of `ξ†Λ(v)ξ` over unit `v ∈ C^n` and unit `ξ ∈ C^r`, with the
/// default number of restarts and a fixed seed.
pub fn griffiths_extremes(c: &CurvatureData) -> GriffithsExtremes {
    griffiths_extremes_with(c, GRIFFITHS_RESTARTS, &mut ChaCha8Rng::seed_from_u64(0))
}

/// Alternating eigen-iteration with `restarts` random starts. A search stops
/// early once it reaches the bound given by the tuple form, which is then
/// attained. When `n = 1` or `r = 1` the problem is a single eigenproblem.
pub fn griffiths_extremes_with(c: &CurvatureData, restarts: usize, rng: &mut impl Rng) -> GriffithsExtremes {
    if c.n == 1 {
        let v = vec![C64::new(1.0, 0.0)];
        let m = c.direction_matrix(&v);
        let (lo, xlo) = extreme_pair(&m, true);
        let (hi, xhi) = extreme_pair(&m, false);
        return GriffithsExtremes {
            min: Extreme { value: lo, v: v.clone(), xi: xlo },
            max: Extreme { value: hi, v, xi: xhi },
        };
    }
    if c.r == 1 {
        let xi = vec![C64::new(1.0, 0.0)];
        let m = c.fiber_matrix(&xi);
        let (lo, vlo) = extreme_pair(&m, true);
        let (hi, vhi) = extreme_pair(&m, false);
        return GriffithsExtremes {
            min: Extreme { value: lo, v: vlo, xi: xi.clone() },
            max: Extreme { value: hi, v: vhi, xi },
        };
    }
    let nak = eig_hermitian(&c.nakano_matrix()).expect("finite curvature data");
    let scale = nak.values.iter().fold(1e-300f64, |m, x| m.max(x.abs()));
    let search = |lowest: bool, rng: &mut dyn rand::RngCore| {
        let bound = if lowest { nak.min() } else { nak.max() };
        let mut best: Option<Extreme> = None;
        for attempt in 0..restarts.max(1) {
            let start = if attempt < c.n { basis(c.n, attempt) } else { unit_random(rng, c.n) };
            let e = alternate(c, start, lowest);
            if best.as_ref().is_none_or(|b| better(&e, b, lowest)) {
                best = Some(e);
            }
            let b = best.as_ref().expect("set above");
            if (b.value - bound).abs() <= 1e-12 * scale {
                break;
            }
        }
        best.expect("at least one restart")
    };
    let min = search(true, rng);
    let max = search(false, rng);
    GriffithsExtremes { min, max }
}

pub fn nakano_min_eig(c: &CurvatureData) -> f64 {
    eig_hermitian(&c.nakano_matrix()).expect("finite curvature data").min()
}

pub fn nakano_max_eig(c: &CurvatureData) -> f64 {
    eig_hermitian(&c.nakano_matrix()).expect("finite curvature data").max()
}

/// `Σ_{j,k} ∂_j ∂_k̄ (v_j, v_k)_h` at `z` by central differences, with
/// `(a, b)_h = b† h a`. `sections[j]` holds the `r` components of `v_j`.
pub fn berndtsson_current(h: &MetricField, sections: &[Vec<Expr>], z: &[C64], steps: &[f64]) -> Result<f64> {
    let n = h.dim();
    if sections.len() != n || sections.iter().any(|s| s.len() != h.rank()) {
        return Err(Error::DomainMismatch(format!("need {n} sections of rank {}", h.rank())));
    }
    for (i, e) in sections.iter().flatten().enumerate() {
        if !e.is_holomorphic() {
            return Err(Error::NonHolomorphicSection(i));
        }
    }
    let pairing = |p: &[C64]| -> Result<CMatrix> {
        let hm = h.evaluate(p)?;
        let vals = sections
            .iter()
            .map(|s| s.iter().map(|e| e.eval(p).map_err(|err| Error::eval(p, err))).collect())
            .collect::<Result<Vec<Vec<C64>>>>()?;
        // entry (j, k) = v_k† h v_j
        Ok(CMatrix::from_fn(n, n, |j, k| hm.as_matrix().sesquilinear(&vals[k], &vals[j])))
    };
    let jet = fd_jet(z, steps, pairing)?;
    let mut total = C64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            total += jet.dd[j * n + k][(j, k)];
        }
    }
    Ok(total.re)
}
