//! Hermitian metrics on the trivial bundle `Ω × C^r`.
//!
//! A [`MetricField`] is an immutable expression tree. Leaves are analytic
//! matrices, constants or grid samples; interior nodes are the structural
//! operations (dual, direct sum, pullback, conformal scaling, frames).
//! Evaluation and jets walk the tree; jets use exact chain rules through the
//! interior nodes and central differences only at the leaves.

mod sampling;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::calculus::jet::{fd_jet, MatrixJet};
use crate::calculus::ScalarField;
use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::linalg::{chol_posdef, CMatrix, HermitianMatrix};
use crate::samples::GridSamples;

pub use sampling::{sample_metric, SampledMetric};

#[derive(Clone)]
pub struct MetricField {
    n: usize,
    rank: usize,
    singular_allowed: bool,
    kind: Arc<Kind>,
}

enum Kind {
    Constant(HermitianMatrix),
    /// Row-major `r × r` entries.
    Analytic(Vec<Expr>),
    Sampled(Arc<GridSamples<HermitianMatrix>>),
    Dual(MetricField),
    DirectSum(MetricField, MetricField),
    /// `base ∘ map`; `jacobian[j * m + a] = ∂ map_a / ∂ z_j`.
    Pullback {
        base: MetricField,
        map: Vec<Expr>,
        jacobian: Vec<Expr>,
    },
    Conformal {
        weight: ScalarField,
        base: MetricField,
    },
    Sum(Vec<MetricField>),
    ScalarMul(ScalarField, MetricField),
    /// `F† h F` for a holomorphic `r × s` frame `F` (row-major), with
    /// `frame_d[j] = ∂_j F`.
    Induced {
        base: MetricField,
        frame: Vec<Expr>,
        frame_d: Vec<Vec<Expr>>,
        cols: usize,
    },
    Block {
        base: MetricField,
        start: usize,
        len: usize,
    },
}

fn holomorphic_derivatives(exprs: &[Expr], n: usize) -> Result<Vec<Vec<Expr>>> {
    (0..n)
        .map(|j| exprs.iter().enumerate().map(|(i, e)| e.derivative(j).ok_or(Error::NonHolomorphicMap(i))).collect())
        .collect()
}

fn eval_matrix(entries: &[Expr], rows: usize, cols: usize, z: &[C64]) -> Result<CMatrix> {
    let mut m = CMatrix::zeros(rows, cols);
    for (slot, e) in m.as_mut_slice().iter_mut().zip(entries) {
        *slot = e.eval(z).map_err(|err| Error::eval(z, err))?;
    }
    Ok(m)
}

impl MetricField {
    fn node(n: usize, rank: usize, singular_allowed: bool, kind: Kind) -> Self {
        Self { n, rank, singular_allowed, kind: Arc::new(kind) }
    }

    pub fn constant(n: usize, value: HermitianMatrix) -> Self {
        Self::node(n, value.dim(), false, Kind::Constant(value))
    }

    pub fn identity(n: usize, rank: usize) -> Self {
        Self::constant(n, HermitianMatrix::identity(rank))
    }

    /// Metric with entries given as expressions; evaluation symmetrizes.
    pub fn analytic(n: usize, entries: Vec<Vec<Expr>>) -> Result<Self> {
        let r = entries.len();
        if r == 0 || entries.iter().any(|row| row.len() != r) {
            return Err(Error::DomainMismatch("metric entries must form a non-empty square matrix".into()));
        }
        if let Some(e) = entries.iter().flatten().find(|e| e.dim() != n) {
            return Err(Error::DomainMismatch(format!("entry lives in C^{}, metric in C^{n}", e.dim())));
        }
        Ok(Self::node(n, r, false, Kind::Analytic(entries.concat())))
    }

    pub fn parse_analytic(n: usize, entries: &[Vec<String>]) -> Result<Self> {
        let parsed = entries
            .iter()
            .map(|row| row.iter().map(|t| expr::parse(t, n)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Self::analytic(n, parsed)
    }

    pub fn sampled(samples: GridSamples<HermitianMatrix>) -> Result<Self> {
        let rank = samples.values().first().map_or(0, HermitianMatrix::dim);
        if rank == 0 || samples.values().iter().any(|m| m.dim() != rank) {
            return Err(Error::DomainMismatch("samples must share a positive rank".into()));
        }
        Ok(Self::node(samples.domain().n(), rank, false, Kind::Sampled(Arc::new(samples))))
    }

    /// Marks the metric as singular: degenerate or non-finite values become
    /// recorded [`Error::SingularSample`]s instead of fatal errors.
    pub fn with_singular_allowed(&self, allowed: bool) -> Self {
        Self { singular_allowed: allowed, ..self.clone() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn singular_allowed(&self) -> bool {
        self.singular_allowed
    }

    /// Backing samples, if this is a sampled leaf.
    pub fn samples(&self) -> Option<&GridSamples<HermitianMatrix>> {
        match &*self.kind {
            Kind::Sampled(s) => Some(s),
            _ => None,
        }
    }

    /// `h*` with `H*(z) = (H(z)^{-1})^T`. Dualizing twice returns the
    /// original field.
    pub fn dual(&self) -> Self {
        if let Kind::Dual(inner) = &*self.kind {
            return inner.clone();
        }
        Self::node(self.n, self.rank, self.singular_allowed, Kind::Dual(self.clone()))
    }

    pub fn direct_sum(&self, other: &MetricField) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DomainMismatch(format!("direct sum of metrics on C^{} and C^{}", self.n, other.n)));
        }
        Ok(Self::node(
            self.n,
            self.rank + other.rank,
            self.singular_allowed || other.singular_allowed,
            Kind::DirectSum(self.clone(), other.clone()),
        ))
    }

    /// `h ∘ π` for a holomorphic map `π` given by one expression per
    /// coordinate of this metric's chart.
    pub fn pullback(&self, map: Vec<Expr>) -> Result<Self> {
        if map.len() != self.n {
            return Err(Error::DomainMismatch(format!("map has {} components, chart has {}", map.len(), self.n)));
        }
        let m = map.first().map_or(0, Expr::dim);
        if map.iter().any(|e| e.dim() != m) {
            return Err(Error::DomainMismatch("map components live in different dimensions".into()));
        }
        if let Some(i) = map.iter().position(|e| !e.is_holomorphic()) {
            return Err(Error::NonHolomorphicMap(i));
        }
        let jacobian = holomorphic_derivatives(&map, m)?.concat();
        Ok(Self::node(m, self.rank, self.singular_allowed, Kind::Pullback { base: self.clone(), map, jacobian }))
    }

    /// Restriction along a holomorphic embedding of a chart; the same
    /// operation as [`MetricField::pullback`].
    pub fn restrict(&self, embed: Vec<Expr>) -> Result<Self> {
        self.pullback(embed)
    }

    /// `e^{w} h`.
    pub fn conformal_scale(&self, weight: ScalarField) -> Self {
        Self::node(self.n, self.rank, self.singular_allowed, Kind::Conformal { weight, base: self.clone() })
    }

    pub fn sum(parts: Vec<MetricField>) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::DomainMismatch("empty metric sum".into()))?;
        if parts.iter().any(|p| p.n != first.n || p.rank != first.rank) {
            return Err(Error::DomainMismatch("summands differ in dimension or rank".into()));
        }
        let singular = parts.iter().any(|p| p.singular_allowed);
        Ok(Self::node(first.n, first.rank, singular, Kind::Sum(parts.clone())))
    }

    /// `χ · h` for a real scalar field `χ ≥ 0`.
    pub fn scalar_mul(&self, chi: ScalarField) -> Self {
        Self::node(self.n, self.rank, self.singular_allowed, Kind::ScalarMul(chi, self.clone()))
    }

    /// Induced metric `F† h F` on the subbundle spanned by the columns of
    /// the holomorphic frame `F` (`r` rows of `s` expressions).
    pub fn project_to_subbundle(&self, frame: Vec<Vec<Expr>>) -> Result<Self> {
        if frame.len() != self.rank {
            return Err(Error::DomainMismatch(format!("frame has {} rows, bundle rank {}", frame.len(), self.rank)));
        }
        let cols = frame.first().map_or(0, Vec::len);
        if cols == 0 || frame.iter().any(|row| row.len() != cols) {
            return Err(Error::DomainMismatch("frame rows must have equal positive length".into()));
        }
        let flat = frame.concat();
        if let Some(e) = flat.iter().find(|e| e.dim() != self.n) {
            return Err(Error::DomainMismatch(format!("frame entry lives in C^{}", e.dim())));
        }
        if let Some(i) = flat.iter().position(|e| !e.is_holomorphic()) {
            return Err(Error::NonHolomorphicSection(i));
        }
        let frame_d = holomorphic_derivatives(&flat, self.n).map_err(|_| Error::NonHolomorphicSection(0))?;
        Ok(Self::node(
            self.n,
            cols,
            self.singular_allowed,
            Kind::Induced { base: self.clone(), frame: flat, frame_d, cols },
        ))
    }

    /// Quotient metric on `E / S`, realized on the complement frame `G` as
    /// the Schur complement of `[F G]† h [F G]`.
    pub fn quotient(&self, frame: Vec<Vec<Expr>>, complement: Vec<Vec<Expr>>) -> Result<Self> {
        let s = frame.first().map_or(0, Vec::len);
        if complement.len() != frame.len() {
            return Err(Error::DomainMismatch("frame and complement have different row counts".into()));
        }
        let combined: Vec<Vec<Expr>> = frame
            .into_iter()
            .zip(complement)
            .map(|(mut a, b)| {
                a.extend(b);
                a
            })
            .collect();
        let full = self.project_to_subbundle(combined)?;
        // the inverse of a Schur complement is the matching block of the inverse
        Ok(full.dual().block(s, full.rank - s)?.dual())
    }

    /// Diagonal block `[start, start + len)`.
    pub fn block(&self, start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > self.rank {
            return Err(Error::DomainMismatch(format!("block {start}+{len} of a rank {} metric", self.rank)));
        }
        Ok(Self::node(self.n, len, self.singular_allowed, Kind::Block { base: self.clone(), start, len }))
    }

    /// `(log_scale, M)` with value `exp(log_scale) · M`, before any
    /// positivity check.
    fn eval_scaled(&self, z: &[C64]) -> Result<(f64, CMatrix)> {
        match &*self.kind {
            Kind::Constant(h) => Ok((0.0, h.as_matrix().clone())),
            Kind::Analytic(entries) => {
                let m = eval_matrix(entries, self.rank, self.rank, z)?;
                Ok((0.0, HermitianMatrix::new(m)?.into_matrix()))
            }
            Kind::Sampled(s) => match s.lookup(z) {
                Some(v) if v.is_finite() => Ok((0.0, v.as_matrix().clone())),
                Some(_) => Err(Error::SingularSample(z.into())),
                None => Err(Error::StencilOutOfDomain(z.into())),
            },
            Kind::Dual(inner) => {
                let (s, m) = inner.eval_scaled(z)?;
                let h = HermitianMatrix::new(m)?;
                let inv = crate::linalg::inv_hermitian(&h).map_err(|_| Error::SingularSample(z.into()))?;
                Ok((-s, inv.transpose().into_matrix()))
            }
            Kind::DirectSum(a, b) => {
                let (sa, ma) = a.eval_scaled(z)?;
                let (sb, mb) = b.eval_scaled(z)?;
                let s = sa.max(sb);
                Ok((s, CMatrix::block_diag(&ma.scale_real((sa - s).exp()), &mb.scale_real((sb - s).exp()))))
            }
            Kind::Pullback { base, map, .. } => {
                let w = map_point(map, z)?;
                base.eval_scaled(&w)
            }
            Kind::Conformal { weight, base } => {
                let (s, m) = base.eval_scaled(z)?;
                Ok((s + weight.value(z)?, m))
            }
            Kind::Sum(parts) => {
                let vals = parts.iter().map(|p| p.eval_scaled(z)).collect::<Result<Vec<_>>>()?;
                let s = vals.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
                let mut acc = CMatrix::zeros(self.rank, self.rank);
                for (si, m) in &vals {
                    if *si > f64::NEG_INFINITY {
                        acc.axpy(C64::new((si - s).exp(), 0.0), m);
                    }
                }
                Ok((s, acc))
            }
            Kind::ScalarMul(chi, base) => {
                let c = chi.value(z)?;
                if c == 0.0 {
                    return Ok((f64::NEG_INFINITY, CMatrix::zeros(self.rank, self.rank)));
                }
                let (s, m) = base.eval_scaled(z)?;
                Ok((s, m.scale_real(c)))
            }
            Kind::Induced { base, frame, cols, .. } => {
                let f = eval_matrix(frame, base.rank, *cols, z)?;
                check_frame_rank(&f, z)?;
                let (s, m) = base.eval_scaled(z)?;
                Ok((s, &(&f.adjoint() * &m) * &f))
            }
            Kind::Block { base, start, len } => {
                let (s, m) = base.eval_scaled(z)?;
                Ok((s, m.block(*start, *start, *len, *len)))
            }
        }
    }

    /// `H(z)`, Hermitian and positive definite.
    ///
    /// Degenerate or non-finite values are [`Error::SingularSample`] when the
    /// metric allows singularities and [`Error::NotPositiveDefinite`]
    /// otherwise.
    pub fn evaluate(&self, z: &[C64]) -> Result<HermitianMatrix> {
        if z.len() != self.n {
            return Err(Error::DomainMismatch(format!("point in C^{}, metric on C^{}", z.len(), self.n)));
        }
        let (s, m) = match self.eval_scaled(z) {
            Err(Error::SingularSample(p)) if !self.singular_allowed => {
                return Err(Error::NotPositiveDefinite { point: p, detail: "not invertible".into() })
            }
            other => other?,
        };
        let h = HermitianMatrix::new(if s == 0.0 { m } else { m.scale_real(s.exp()) })?;
        match chol_posdef(&h) {
            Ok(_) => Ok(h),
            Err(_) if self.singular_allowed => Err(Error::SingularSample(z.into())),
            Err(e) => Err(Error::NotPositiveDefinite { point: z.into(), detail: e.to_string() }),
        }
    }

    /// Second-order jet of the metric at `z`. `steps` (one per real axis)
    /// are the stencil steps used at the leaves.
    pub fn jet(&self, z: &[C64], steps: &[f64]) -> Result<MatrixJet> {
        let n = z.len();
        match &*self.kind {
            Kind::Constant(h) => Ok(MatrixJet::constant(h.as_matrix().clone(), n)),
            Kind::Analytic(_) | Kind::Sampled(_) => {
                let raw = fd_jet(z, steps, |p| Ok(self.eval_scaled(p)?.1))?;
                Ok(MatrixJet::from_raw(raw))
            }
            Kind::Dual(inner) => inner.jet(z, steps)?.dual().map_err(|_| Error::SingularSample(z.into())),
            Kind::DirectSum(a, b) => Ok(MatrixJet::direct_sum(&a.jet(z, steps)?, &b.jet(z, steps)?)),
            Kind::Pullback { base, map, jacobian } => {
                let w = map_point(map, z)?;
                let m = w.len();
                let h = steps.iter().copied().fold(f64::INFINITY, f64::min);
                let bj = base.jet(&w, &vec![h; 2 * m])?;
                let jac = jacobian
                    .iter()
                    .map(|e| e.eval(z).map_err(|err| Error::eval(z, err)))
                    .collect::<Result<Vec<C64>>>()?;
                Ok(pullback_jet(&bj, &jac, n, m))
            }
            Kind::Conformal { weight, base } => Ok(base.jet(z, steps)?.conformal(&weight.jet(z, steps)?)),
            Kind::Sum(parts) => {
                let jets = parts.iter().map(|p| p.jet(z, steps)).collect::<Result<Vec<_>>>()?;
                Ok(MatrixJet::sum(&jets))
            }
            Kind::ScalarMul(chi, base) => {
                let c = chi.jet(z, steps)?;
                if c.is_zero() {
                    return Ok(MatrixJet::zero(self.rank, n));
                }
                Ok(base.jet(z, steps)?.scalar_mul(&c))
            }
            Kind::Induced { base, frame, frame_d, cols } => {
                let r = base.rank;
                let f = eval_matrix(frame, r, *cols, z)?;
                check_frame_rank(&f, z)?;
                let fd = frame_d.iter().map(|d| eval_matrix(d, r, *cols, z)).collect::<Result<Vec<_>>>()?;
                Ok(induced_jet(&base.jet(z, steps)?, &f, &fd))
            }
            Kind::Block { base, start, len } => Ok(base.jet(z, steps)?.block(*start, *len)),
        }
    }

    pub fn describe(&self) -> String {
        match &*self.kind {
            Kind::Constant(h) => format!("constant(rank {})", h.dim()),
            Kind::Analytic(entries) => {
                let cells: Vec<String> = entries.iter().map(|e| e.to_string()).collect();
                format!("analytic[{}]", cells.join("; "))
            }
            Kind::Sampled(s) => format!("sampled(rank {}, {} per axis)", self.rank, s.domain().samples()),
            Kind::Dual(a) => format!("dual({})", a.describe()),
            Kind::DirectSum(a, b) => format!("({}) ⊕ ({})", a.describe(), b.describe()),
            Kind::Pullback { base, map, .. } => {
                let m: Vec<String> = map.iter().map(|e| e.to_string()).collect();
                format!("pullback({}; [{}])", base.describe(), m.join(", "))
            }
            Kind::Conformal { weight, base } => format!("exp({})·({})", weight.describe(), base.describe()),
            Kind::Sum(parts) => parts.iter().map(|p| format!("({})", p.describe())).collect::<Vec<_>>().join(" + "),
            Kind::ScalarMul(chi, base) => format!("({})·({})", chi.describe(), base.describe()),
            Kind::Induced { base, cols, .. } => format!("induced({}, {} columns)", base.describe(), cols),
            Kind::Block { base, start, len } => format!("block({}, {start}..{})", base.describe(), start + len),
        }
    }
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MetricField(n={}, r={}, {})", self.n, self.rank, self.describe())
    }
}

fn map_point(map: &[Expr], z: &[C64]) -> Result<Vec<C64>> {
    map.iter().map(|e| e.eval(z).map_err(|err| Error::eval(z, err))).collect()
}

fn check_frame_rank(f: &CMatrix, z: &[C64]) -> Result<()> {
    let gram = HermitianMatrix::new(&f.adjoint() * f)?;
    let scale = f.frobenius_norm().powi(2).max(f64::MIN_POSITIVE);
    let ok =
        chol_posdef(&gram).is_ok() && crate::linalg::min_eigenvalue(&gram).map(|m| m > 1e-12 * scale).unwrap_or(false);
    if ok {
        Ok(())
    } else {
        Err(Error::RankDeficientFrame(z.into()))
    }
}

/// Chain rule for `h ∘ π` with holomorphic `π`: only first derivatives of
/// `π` enter.
fn pullback_jet(base: &MatrixJet, jac: &[C64], n: usize, m: usize) -> MatrixJet {
    let base = &base.folded();
    let r = base.rank();
    let mut d = vec![CMatrix::zeros(r, r); n];
    for (j, dj) in d.iter_mut().enumerate() {
        for a in 0..m {
            dj.axpy(jac[j * m + a], &base.d[a]);
        }
    }
    let mut dd = vec![CMatrix::zeros(r, r); n * n];
    for j in 0..n {
        for k in 0..n {
            let slot = &mut dd[j * n + k];
            for a in 0..m {
                for b in 0..m {
                    let c = jac[j * m + a] * jac[k * m + b].conj();
                    if c != C64::new(0.0, 0.0) {
                        slot.axpy(c, &base.dd[a * m + b]);
                    }
                }
            }
        }
    }
    MatrixJet::new(base.log_scale, base.value.clone(), d, dd)
}

/// Jet of `F† H F` for a holomorphic frame `F` with `fd[j] = ∂_j F`.
fn induced_jet(base: &MatrixJet, f: &CMatrix, fd: &[CMatrix]) -> MatrixJet {
    let base = &base.folded();
    let n = base.dim();
    let fa = f.adjoint();
    let h = &base.value;
    let sandwich = |a: &CMatrix, m: &CMatrix, b: &CMatrix| &(a * m) * b;
    let d = (0..n).map(|j| &sandwich(&fa, &base.d[j], f) + &sandwich(&fa, h, &fd[j])).collect();
    let dd = (0..n * n)
        .map(|i| {
            let (j, k) = (i / n, i % n);
            let fka = fd[k].adjoint();
            let hk_bar = base.d[k].adjoint();
            let mut acc = sandwich(&fka, &base.d[j], f);
            acc = &acc + &sandwich(&fka, h, &fd[j]);
            acc = &acc + &sandwich(&fa, &base.dd[i], f);
            &acc + &sandwich(&fa, &hk_bar, &fd[j])
        })
        .collect();
    MatrixJet::new(base.log_scale, sandwich(&fa, h, f), d, dd)
}
