//! Second-order Wirtinger jets and the central-difference stencil that
//! produces them.
//!
//! A jet at `z` stores the value, `∂_j` and `∂_j ∂_k̄` (row-major, `j` outer).
//! Matrix jets also carry a log scale: the represented metric is
//! `exp(log_scale) · value`, which keeps huge conformal factors finite.

use num_complex::Complex64 as C64;

use crate::error::Result;
use crate::linalg::{CMatrix, HermitianMatrix};

/// Values a stencil can combine with complex coefficients.
pub trait StencilValue: Clone {
    fn zero_like(&self) -> Self;
    fn add_c(&mut self, a: C64, other: &Self);
}

impl StencilValue for C64 {
    fn zero_like(&self) -> Self {
        C64::new(0.0, 0.0)
    }
    fn add_c(&mut self, a: C64, other: &Self) {
        *self += a * other;
    }
}

impl StencilValue for CMatrix {
    fn zero_like(&self) -> Self {
        CMatrix::zeros(self.rows(), self.cols())
    }
    fn add_c(&mut self, a: C64, other: &Self) {
        self.axpy(a, other);
    }
}

#[derive(Debug, Clone)]
pub struct RawJet<T> {
    pub value: T,
    pub d: Vec<T>,
    pub dd: Vec<T>,
}

fn shifted(z: &[C64], moves: &[(usize, f64)]) -> Vec<C64> {
    let mut p = z.to_vec();
    for &(axis, h) in moves {
        if axis % 2 == 0 {
            p[axis / 2].re += h;
        } else {
            p[axis / 2].im += h;
        }
    }
    p
}

/// Central-difference Wirtinger jet of `f` at `z` with one step per real
/// axis. Error is `O(step²)`.
///
/// Uses `1 + 4n` evaluations for the value, gradient and diagonal of the
/// complex Hessian, plus 16 per pair of distinct complex coordinates.
pub fn fd_jet<T: StencilValue>(z: &[C64], steps: &[f64], mut f: impl FnMut(&[C64]) -> Result<T>) -> Result<RawJet<T>> {
    let n = z.len();
    let d = 2 * n;
    debug_assert_eq!(steps.len(), d);
    let f0 = f(z)?;
    let mut plus = Vec::with_capacity(d);
    let mut minus = Vec::with_capacity(d);
    for (a, &h) in steps.iter().enumerate() {
        plus.push(f(&shifted(z, &[(a, h)]))?);
        minus.push(f(&shifted(z, &[(a, -h)]))?);
    }
    let one = C64::new(1.0, 0.0);
    // first derivatives along each real axis
    let first = |a: usize| {
        let mut v = plus[a].clone();
        v.add_c(-one, &minus[a]);
        let mut out = v.zero_like();
        out.add_c(C64::new(0.5 / steps[a], 0.0), &v);
        out
    };
    let second_diag = |a: usize| {
        let mut v = plus[a].clone();
        v.add_c(one, &minus[a]);
        v.add_c(C64::new(-2.0, 0.0), &f0);
        let mut out = v.zero_like();
        out.add_c(C64::new(1.0 / (steps[a] * steps[a]), 0.0), &v);
        out
    };
    let mut mixed = |a: usize, b: usize| -> Result<T> {
        let (ha, hb) = (steps[a], steps[b]);
        let mut v = f(&shifted(z, &[(a, ha), (b, hb)]))?;
        v.add_c(-one, &f(&shifted(z, &[(a, ha), (b, -hb)]))?);
        v.add_c(-one, &f(&shifted(z, &[(a, -ha), (b, hb)]))?);
        v.add_c(one, &f(&shifted(z, &[(a, -ha), (b, -hb)]))?);
        let mut out = v.zero_like();
        out.add_c(C64::new(0.25 / (ha * hb), 0.0), &v);
        Ok(out)
    };

    let half = C64::new(0.5, 0.0);
    let quarter = C64::new(0.25, 0.0);
    let iq = C64::new(0.0, 0.25);
    let mut grad = Vec::with_capacity(n);
    for j in 0..n {
        // ∂_j = (∂_x - i ∂_y) / 2
        let mut g = f0.zero_like();
        g.add_c(half, &first(2 * j));
        g.add_c(C64::new(0.0, -0.5), &first(2 * j + 1));
        grad.push(g);
    }
    let mut dd = vec![f0.zero_like(); n * n];
    for j in 0..n {
        let mut v = f0.zero_like();
        v.add_c(quarter, &second_diag(2 * j));
        v.add_c(quarter, &second_diag(2 * j + 1));
        dd[j * n + j] = v;
    }
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            // ∂_j ∂_k̄ = ¼ [S(xj,xk) + S(yj,yk) + i (S(xj,yk) - S(yj,xk))]
            let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
            let sxx = mixed(xj, xk)?;
            let syy = mixed(yj, yk)?;
            let sxy = mixed(xj, yk)?;
            let syx = mixed(yj, xk)?;
            let mut v = f0.zero_like();
            v.add_c(quarter, &sxx);
            v.add_c(quarter, &syy);
            v.add_c(iq, &sxy);
            v.add_c(-iq, &syx);
            dd[j * n + k] = v;
        }
    }
    Ok(RawJet { value: f0, d: grad, dd })
}

/// Jet of a real scalar function.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarJet {
    pub value: f64,
    /// `∂_j f`
    pub d: Vec<C64>,
    /// `∂_j ∂_k̄ f` at `j * n + k`
    pub dd: Vec<C64>,
}

impl ScalarJet {
    pub fn constant(value: f64, n: usize) -> Self {
        Self { value, d: vec![C64::new(0.0, 0.0); n], dd: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn from_raw(raw: RawJet<C64>) -> Self {
        Self { value: raw.value.re, d: raw.d, dd: raw.dd }
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0.0 && self.d.iter().chain(&self.dd).all(|c| c.norm_sqr() == 0.0)
    }

    /// Complex Hessian `(∂_j ∂_k̄ f)`.
    pub fn hessian(&self) -> HermitianMatrix {
        let n = self.dim();
        HermitianMatrix::new(CMatrix::from_fn(n, n, |j, k| self.dd[j * n + k])).expect("square by construction")
    }

    /// `g ∘ f` for a 1-D function with derivatives `g1`, `g2` at `f(z)`.
    pub fn compose(&self, g: f64, g1: f64, g2: f64) -> Self {
        let n = self.dim();
        let d = self.d.iter().map(|a| a * g1).collect();
        let dd = (0..n * n)
            .map(|i| {
                let (j, k) = (i / n, i % n);
                self.dd[i] * g1 + self.d[j] * self.d[k].conj() * g2
            })
            .collect();
        Self { value: g, d, dd }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            value: self.value + other.value,
            d: self.d.iter().zip(&other.d).map(|(a, b)| a + b).collect(),
            dd: self.dd.iter().zip(&other.dd).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            value: self.value * c,
            d: self.d.iter().map(|a| a * c).collect(),
            dd: self.dd.iter().map(|a| a * c).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.dim();
        let (a, b) = (self, other);
        let d = (0..n).map(|j| a.d[j] * b.value + b.d[j] * a.value).collect();
        let dd = (0..n * n)
            .map(|i| {
                let (j, k) = (i / n, i % n);
                a.dd[i] * b.value + a.d[j] * b.d[k].conj() + a.d[k].conj() * b.d[j] + b.dd[i] * a.value
            })
            .collect();
        Self { value: a.value * b.value, d, dd }
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.compose(e, e, e)
    }
}

/// Jet of a Hermitian-matrix function, represented as `exp(log_scale) · H`.
///
/// `log_scale = -inf` encodes the zero metric.
#[derive(Debug, Clone)]
pub struct MatrixJet {
    pub log_scale: f64,
    pub value: CMatrix,
    /// `∂_j H`
    pub d: Vec<CMatrix>,
    /// `∂_j ∂_k̄ H` at `j * n + k`
    pub dd: Vec<CMatrix>,
    /// Derivatives of a conformal factor `exp(w)` not yet folded into `H`.
    /// Keeping them apart avoids the cancellation of `|∂w|²` terms in the
    /// curvature when `w` is large.
    pub pending: Option<ScalarJet>,
}

impl MatrixJet {
    pub fn new(log_scale: f64, value: CMatrix, d: Vec<CMatrix>, dd: Vec<CMatrix>) -> Self {
        Self { log_scale, value, d, dd, pending: None }
    }

    pub fn from_raw(raw: RawJet<CMatrix>) -> Self {
        Self::new(0.0, raw.value, raw.d, raw.dd)
    }

    pub fn zero(rank: usize, n: usize) -> Self {
        let z = CMatrix::zeros(rank, rank);
        Self::new(f64::NEG_INFINITY, z.clone(), vec![z.clone(); n], vec![z; n * n])
    }

    pub fn constant(value: CMatrix, n: usize) -> Self {
        let z = CMatrix::zeros(value.rows(), value.cols());
        Self::new(0.0, value, vec![z.clone(); n], vec![z; n * n])
    }

    pub fn rank(&self) -> usize {
        self.value.rows()
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn is_zero(&self) -> bool {
        self.log_scale == f64::NEG_INFINITY
    }

    /// The represented metric value, `exp(log_scale) · H`.
    pub fn metric(&self) -> CMatrix {
        if self.is_zero() {
            return CMatrix::zeros(self.rank(), self.rank());
        }
        self.value.scale_real(self.log_scale.exp())
    }

    fn map(&self, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        Self {
            log_scale: self.log_scale,
            value: f(&self.value),
            d: self.d.iter().map(&f).collect(),
            dd: self.dd.iter().map(&f).collect(),
            pending: self.pending.clone(),
        }
    }

    /// The same jet with any pending conformal factor folded into `H`.
    pub fn folded(&self) -> Self {
        let Some(w) = &self.pending else { return self.clone() };
        if self.is_zero() {
            return Self { pending: None, ..self.clone() };
        }
        let n = self.dim();
        let h = &self.value;
        let d: Vec<CMatrix> = (0..n)
            .map(|j| {
                let mut m = self.d[j].clone();
                m.axpy(w.d[j], h);
                m
            })
            .collect();
        let dbar: Vec<CMatrix> = self.d.iter().map(CMatrix::adjoint).collect();
        let dd = (0..n * n)
            .map(|i| {
                let (j, k) = (i / n, i % n);
                let mut m = self.dd[i].clone();
                m.axpy(w.dd[i] + w.d[j] * w.d[k].conj(), h);
                m.axpy(w.d[j], &dbar[k]);
                m.axpy(w.d[k].conj(), &self.d[j]);
                m
            })
            .collect();
        Self::new(self.log_scale, h.clone(), d, dd)
    }

    /// Rescales the stored parts so the jet uses `log_scale = s`.
    fn rescaled(&self, s: f64) -> Self {
        if self.pending.is_some() {
            return self.folded().rescaled(s);
        }
        if self.is_zero() {
            let mut z = self.clone();
            z.log_scale = s;
            return z;
        }
        let c = (self.log_scale - s).exp();
        let mut out = self.map(|m| m.scale_real(c));
        out.log_scale = s;
        out
    }

    /// `exp(w) · self`: adds `w` to the log scale and records its
    /// derivatives as pending.
    pub fn conformal(&self, w: &ScalarJet) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let pending = match &self.pending {
            Some(p) => p.add(w),
            None => w.clone(),
        };
        Self { log_scale: self.log_scale + w.value, pending: Some(pending), ..self.clone() }
    }

    /// Jet of `χ · self` for a scalar `χ`.
    pub fn scalar_mul(&self, chi: &ScalarJet) -> Self {
        if chi.is_zero() || self.is_zero() {
            return Self::zero(self.rank(), self.dim());
        }
        if self.pending.is_some() {
            return self.folded().scalar_mul(chi);
        }
        let n = self.dim();
        let h = &self.value;
        let dbar: Vec<CMatrix> = self.d.iter().map(CMatrix::adjoint).collect();
        let d = (0..n)
            .map(|j| {
                let mut m = self.d[j].scale_real(chi.value);
                m.axpy(chi.d[j], h);
                m
            })
            .collect();
        let dd = (0..n * n)
            .map(|i| {
                let (j, k) = (i / n, i % n);
                let mut m = self.dd[i].scale_real(chi.value);
                m.axpy(chi.dd[i], h);
                m.axpy(chi.d[j], &dbar[k]);
                m.axpy(chi.d[k].conj(), &self.d[j]);
                m
            })
            .collect();
        Self::new(self.log_scale, h.scale_real(chi.value), d, dd)
    }

    /// Sum of metrics of equal rank.
    pub fn sum(parts: &[MatrixJet]) -> Self {
        let s = parts.iter().map(|p| p.log_scale).fold(f64::NEG_INFINITY, f64::max);
        let first = &parts[0];
        if s == f64::NEG_INFINITY {
            return Self::zero(first.rank(), first.dim());
        }
        let mut acc = Self::zero(first.rank(), first.dim()).rescaled(s);
        for p in parts.iter().filter(|p| !p.is_zero()) {
            let q = p.rescaled(s);
            let one = C64::new(1.0, 0.0);
            acc.value.axpy(one, &q.value);
            for (a, b) in acc.d.iter_mut().zip(&q.d) {
                a.axpy(one, b);
            }
            for (a, b) in acc.dd.iter_mut().zip(&q.dd) {
                a.axpy(one, b);
            }
        }
        acc
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(a: &MatrixJet, b: &MatrixJet) -> Self {
        let s = a.log_scale.max(b.log_scale);
        let (a, b) = (a.rescaled(s), b.rescaled(s));
        Self::new(
            s,
            CMatrix::block_diag(&a.value, &b.value),
            a.d.iter().zip(&b.d).map(|(x, y)| CMatrix::block_diag(x, y)).collect(),
            a.dd.iter().zip(&b.dd).map(|(x, y)| CMatrix::block_diag(x, y)).collect(),
        )
    }

    /// Diagonal block `[start, start + len)`.
    pub fn block(&self, start: usize, len: usize) -> Self {
        self.map(|m| m.block(start, start, len, len))
    }

    /// Jet of the dual metric `(H^{-1})^T`.
    pub fn dual(&self) -> Result<Self> {
        let h = HermitianMatrix::new(self.value.clone())?;
        let g = crate::linalg::inv_hermitian(&h)?.into_matrix();
        let n = self.dim();
        let gd: Vec<CMatrix> = self.d.iter().map(|dj| &(&g * dj) * &g).collect();
        let d = gd.iter().map(|m| (-m).transpose()).collect();
        let dd = (0..n * n)
            .map(|i| {
                let (j, k) = (i / n, i % n);
                let hk_bar = self.d[k].adjoint();
                // G H_j G H_k̄ G + G H_k̄ G H_j G - G H_jk̄ G
                let a = &(&gd[j] * &hk_bar) * &g;
                let b = &(&(&(&g * &hk_bar) * &g) * &self.d[j]) * &g;
                let c = &(&g * &self.dd[i]) * &g;
                (&(&a + &b) - &c).transpose()
            })
            .collect();
        Ok(Self {
            log_scale: -self.log_scale,
            value: g.transpose(),
            d,
            dd,
            pending: self.pending.as_ref().map(|w| w.scale(-1.0)),
        })
    }

    /// Chern curvature blocks `Λ_{jk̄} = ∂_j∂_k̄H - (∂_k H)† H^{-1} ∂_j H` of
    /// the stored part; the true blocks are `exp(log_scale)` times these.
    pub fn curvature_blocks(&self) -> Result<Vec<CMatrix>> {
        let h = HermitianMatrix::new(self.value.clone())?;
        let hinv = crate::linalg::inv_hermitian(&h)?.into_matrix();
        let n = self.dim();
        let hinv_d: Vec<CMatrix> = self.d.iter().map(|dj| &hinv * dj).collect();
        Ok((0..n * n)
            .map(|i| {
                let (j, k) = (i / n, i % n);
                let mut m = &self.dd[i] - &(&self.d[k].adjoint() * &hinv_d[j]);
                if let Some(w) = &self.pending {
                    m.axpy(w.dd[i], &self.value);
                }
                m
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn stencil_is_exact_on_quadratics() {
        // f = |z1|^2 + 2 Re(z1 conj z2) + 3|z2|^2: ∂∂̄ f = [[1, 1], [1, 3]]
        let f = |z: &[C64]| -> Result<C64> {
            Ok(c(z[0].norm_sqr() + 2.0 * (z[0] * z[1].conj()).re + 3.0 * z[1].norm_sqr(), 0.0))
        };
        let z = [c(0.3, -0.2), c(0.1, 0.5)];
        let jet = ScalarJet::from_raw(fd_jet(&z, &[0.1; 4], f).unwrap());
        let want = [c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(3.0, 0.0)];
        for (a, b) in jet.dd.iter().zip(want) {
            assert!((a - b).norm() < 1e-10, "{a} vs {b}");
        }
        // ∂_1 f = conj(z1) + conj(z2)
        assert!((jet.d[0] - (z[0] + z[1]).conj()).norm() < 1e-10);
    }

    #[test]
    fn stencil_resolves_mixed_terms() {
        // f = Re(i z1 conj z2) has ∂_1 ∂_2̄ f = i/2
        let f = |z: &[C64]| -> Result<C64> { Ok(c((c(0.0, 1.0) * z[0] * z[1].conj()).re, 0.0)) };
        let jet = ScalarJet::from_raw(fd_jet(&[c(0.2, 0.1), c(-0.3, 0.4)], &[0.05; 4], f).unwrap());
        assert!((jet.dd[1] - c(0.0, 0.5)).norm() < 1e-10);
        assert!((jet.dd[2] - c(0.0, -0.5)).norm() < 1e-10);
    }

    #[test]
    fn conformal_shifts_curvature_by_weight_hessian() {
        let n = 1;
        let h = MatrixJet::constant(CMatrix::identity(2), n);
        let mut w = ScalarJet::constant(0.7, n);
        w.d[0] = c(0.3, -0.1);
        w.dd[0] = c(2.0, 0.0);
        let hw = h.conformal(&w);
        let blocks = hw.curvature_blocks().unwrap();
        assert!((&blocks[0] - &CMatrix::identity(2).scale_real(2.0)).max_abs() < 1e-14);
        assert!((hw.metric()[(0, 0)].re - 0.7f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn dual_of_dual_is_identity() {
        let n = 2;
        let mut h = MatrixJet::constant(
            CMatrix::from_rows(&[vec![c(2.0, 0.0), c(0.3, 0.4)], vec![c(0.3, -0.4), c(1.5, 0.0)]]).unwrap(),
            n,
        );
        h.d[0] = CMatrix::from_rows(&[vec![c(0.1, 0.0), c(0.2, 0.1)], vec![c(0.0, 0.3), c(-0.2, 0.0)]]).unwrap();
        h.d[1] = CMatrix::from_rows(&[vec![c(0.0, 0.1), c(0.0, 0.0)], vec![c(0.5, 0.0), c(0.1, 0.1)]]).unwrap();
        for i in 0..4 {
            let m = CMatrix::from_fn(2, 2, |a, b| c((i + a + 2 * b) as f64 * 0.1, (a as f64 - b as f64) * 0.05));
            h.dd[i] = &m + &m.adjoint();
        }
        let back = h.dual().unwrap().dual().unwrap();
        assert!((&back.value - &h.value).max_abs() < 1e-12);
        for (a, b) in back.d.iter().zip(&h.d) {
            assert!((a - b).max_abs() < 1e-12);
        }
        for (a, b) in back.dd.iter().zip(&h.dd) {
            assert!((a - b).max_abs() < 1e-12);
        }
    }

    #[test]
    fn scalar_chain_rules() {
        let mut a = ScalarJet::constant(0.5, 1);
        a.d[0] = c(0.2, 0.3);
        a.dd[0] = c(1.0, 0.0);
        let e = a.exp();
        let want = 0.5f64.exp() * (1.0 + a.d[0].norm_sqr());
        assert!((e.dd[0].re - want).abs() < 1e-14);
        let sq = a.mul(&a);
        assert!((sq.dd[0].re - (2.0 * 0.5 * 1.0 + 2.0 * a.d[0].norm_sqr())).abs() < 1e-14);
    }

    #[test]
    fn pending_weight_matches_folded_curvature() {
        let n = 2;
        let mut h = MatrixJet::constant(
            CMatrix::from_rows(&[vec![c(2.0, 0.0), c(0.3, 0.2)], vec![c(0.3, -0.2), c(1.0, 0.0)]]).unwrap(),
            n,
        );
        h.d[0] = CMatrix::from_rows(&[vec![c(0.1, 0.0), c(0.2, 0.1)], vec![c(0.0, 0.3), c(-0.2, 0.0)]]).unwrap();
        h.d[1] = CMatrix::from_rows(&[vec![c(0.4, 0.1), c(0.0, 0.0)], vec![c(0.5, 0.0), c(0.1, 0.1)]]).unwrap();
        let mut w = ScalarJet::constant(0.7, n);
        w.d = vec![c(0.3, -0.1), c(-0.2, 0.4)];
        w.dd = vec![c(1.0, 0.0), c(0.2, 0.1), c(0.2, -0.1), c(0.5, 0.0)];
        let pending = h.conformal(&w);
        let folded = pending.folded();
        assert!(folded.pending.is_none());
        for (a, b) in pending.curvature_blocks().unwrap().iter().zip(folded.curvature_blocks().unwrap()) {
            assert!((a - &b).max_abs() < 1e-12);
        }
        for (a, b) in pending
            .dual()
            .unwrap()
            .curvature_blocks()
            .unwrap()
            .iter()
            .zip(folded.dual().unwrap().curvature_blocks().unwrap())
        {
            assert!((a - &b).max_abs() < 1e-12);
        }
    }
}
