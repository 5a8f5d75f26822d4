//! Dense complex linear algebra for the small matrices that show up as metric
//! fibers and curvature blocks (dimension up to a few dozen).
//!
//! Everything here is a pure function of immutable values. Eigenvalues come
//! from cyclic complex Jacobi rotations, factorizations from a plain Cholesky
//! sweep.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("Jacobi iteration did not converge after {0} sweeps")]
    NoConvergence(usize),
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self { rows: r, cols: c, data: rows.concat() })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(*d, 0.0);
        }
        m
    }

    /// Column vector.
    pub fn column(values: &[C64]) -> Self {
        Self { rows: values.len(), cols: 1, data: values.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, a: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * a).collect() }
    }

    pub fn scale_real(&self, a: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * a).collect() }
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: C64, other: &CMatrix) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &CMatrix) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    pub fn block_diag(a: &CMatrix, b: &CMatrix) -> Self {
        let mut m = Self::zeros(a.rows + b.rows, a.cols + b.cols);
        m.set_block(0, 0, a);
        m.set_block(a.rows, a.cols, b);
        m
    }

    /// `x† · self · y` for column vectors given as slices.
    pub fn sesquilinear(&self, x: &[C64], y: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.rows {
            let mut row = C64::new(0.0, 0.0);
            for j in 0..self.cols {
                row += self[(i, j)] * y[j];
            }
            acc += x[i].conj() * row;
        }
        acc
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self[(i, j)] * x[j]).sum()).collect()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl<'a> Mul<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }
}

impl<'a> Add<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_real(-1.0)
    }
}

impl fmt::Display for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            write!(f, "[")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:.6}{:+.6}i", z.re, z.im)?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

/// Square complex matrix equal to its conjugate transpose.
///
/// Construction always stores `(M + M†)/2`, so the Hermitian symmetry holds
/// to rounding no matter what the caller passes in.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::DimensionMismatch(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        Ok(Self::symmetrize(m))
    }

    fn symmetrize(m: CMatrix) -> Self {
        let n = m.rows;
        let mut out = m;
        for i in 0..n {
            out[(i, i)] = C64::new(out[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let avg = (out[(i, j)] + out[(j, i)].conj()) * 0.5;
                out[(i, j)] = avg;
                out[(j, i)] = avg.conj();
            }
        }
        Self(out)
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim, dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self(CMatrix::from_real_diagonal(diag))
    }

    pub fn scalar(value: f64) -> Self {
        Self::from_real_diagonal(&[value])
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn scale(&self, a: f64) -> Self {
        Self(self.0.scale_real(a))
    }

    pub fn add(&self, other: &HermitianMatrix) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Self {
        Self(&self.0 - &other.0)
    }

    /// `self += w · other` for real `w`.
    pub fn axpy_real(&mut self, w: f64, other: &HermitianMatrix) {
        self.0.axpy(C64::new(w, 0.0), &other.0);
    }

    /// `A† · self · A`, Hermitian by construction.
    pub fn congruence(&self, a: &CMatrix) -> Self {
        Self::symmetrize(&(&a.adjoint() * &self.0) * a)
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn quadratic_form(&self, x: &[C64]) -> f64 {
        self.0.sesquilinear(x, x).re
    }
}

impl Index<(usize, usize)> for HermitianMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

#[derive(Debug, Clone)]
pub struct Eigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("empty spectrum")
    }

    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.vectors.col(i)
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigen-decomposition by cyclic complex Jacobi rotations.
///
/// Each rotation first removes the phase of the pivot `a_pq`, then applies
/// the classical real rotation that annihilates it. Sweeps stop once the
/// off-diagonal Frobenius mass drops below `1e-14·‖M‖_F`.
pub fn eig_hermitian(m: &HermitianMatrix) -> Result<Eigen, LinalgError> {
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = m.dim();
    let mut a = m.0.clone();
    let mut v = CMatrix::identity(n);
    let norm = a.frobenius_norm();
    let threshold = 1e-14 * norm;

    let off = |a: &CMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut converged = norm == 0.0 || off(&a) <= threshold;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(LinalgError::NoConvergence(sweeps));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let g = apq.norm();
                if g == 0.0 {
                    continue;
                }
                let phase = apq / g;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * g);
                let t = if theta.is_infinite() {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // V = D·R with D = diag(.., 1 at p, conj(phase) at q, ..)
                let vpp = C64::new(c, 0.0);
                let vpq = C64::new(s, 0.0);
                let vqp = -phase.conj() * s;
                let vqq = phase.conj() * c;
                // A ← A·V (columns p, q)
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * vpp + aiq * vqp;
                    a[(i, q)] = aip * vpq + aiq * vqq;
                }
                // A ← V†·A (rows p, q)
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = vpp.conj() * apj + vqp.conj() * aqj;
                    a[(q, j)] = vpq.conj() * apj + vqq.conj() * aqj;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * vpp + viq * vqp;
                    v[(i, q)] = vip * vpq + viq * vqq;
                }
            }
        }
        converged = off(&a) <= threshold;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(Eigen { values, vectors })
}

/// Eigenvalues only, ascending.
pub fn eigenvalues(m: &HermitianMatrix) -> Result<Vec<f64>, LinalgError> {
    Ok(eig_hermitian(m)?.values)
}

pub fn min_eigenvalue(m: &HermitianMatrix) -> Result<f64, LinalgError> {
    Ok(eig_hermitian(m)?.min())
}

/// Lower-triangular `L` with `L·L† = M`.
pub fn chol_posdef(m: &HermitianMatrix) -> Result<CMatrix, LinalgError> {
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = m.dim();
    let a = &m.0;
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return Err(LinalgError::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = C64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Inverse of a lower-triangular matrix with nonzero diagonal.
pub fn invert_lower(l: &CMatrix) -> CMatrix {
    let n = l.rows();
    let mut inv = CMatrix::zeros(n, n);
    for col in 0..n {
        for i in col..n {
            let mut s = if i == col { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            for k in col..i {
                s -= l[(i, k)] * inv[(k, col)];
            }
            inv[(i, col)] = s / l[(i, i)];
        }
    }
    inv
}

/// Inverse of a positive-definite Hermitian matrix through its Cholesky factor.
pub fn inv_hermitian(m: &HermitianMatrix) -> Result<HermitianMatrix, LinalgError> {
    let l = chol_posdef(m)?;
    let linv = invert_lower(&l);
    Ok(HermitianMatrix::symmetrize(&linv.adjoint() * &linv))
}

/// Determinant of a positive-definite matrix, `Π L_ii²`.
pub fn det_posdef(m: &HermitianMatrix) -> Result<f64, LinalgError> {
    let l = chol_posdef(m)?;
    Ok((0..m.dim()).map(|i| l[(i, i)].re * l[(i, i)].re).product())
}

/// Rewrites `m` in the orthonormal frame of the positive-definite `h`:
/// returns `L⁻¹·m·L⁻†` where `h = L·L†`.
pub fn whiten(m: &CMatrix, linv: &CMatrix) -> CMatrix {
    &(linv * m) * &linv.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn herm(rows: &[Vec<C64>]) -> HermitianMatrix {
        HermitianMatrix::new(CMatrix::from_rows(rows).unwrap()).unwrap()
    }

    fn random_herm(n: usize, seed: u64) -> HermitianMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = CMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        HermitianMatrix::new(m).unwrap()
    }

    fn check_decomposition(m: &HermitianMatrix) {
        let e = eig_hermitian(m).unwrap();
        let tol = 1e-10 * (1.0 + m.as_matrix().frobenius_norm());
        for i in 0..m.dim() {
            let v = e.vector(i);
            let mv = m.as_matrix().mul_vec(&v);
            for (a, b) in mv.iter().zip(&v) {
                assert!((a - b * e.values[i]).norm() < tol);
            }
        }
        let gram = &e.vectors.adjoint() * &e.vectors;
        assert!((&gram - &CMatrix::identity(m.dim())).max_abs() < 1e-10);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn identity_and_diagonal_spectra() {
        let e = eig_hermitian(&HermitianMatrix::identity(2)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
        let e = eig_hermitian(&HermitianMatrix::from_real_diagonal(&[5.0, -3.0])).unwrap();
        assert_eq!(e.values, vec![-3.0, 5.0]);
    }

    #[test]
    fn two_by_two_matches_characteristic_roots() {
        // [[2, i], [-i, 2]]: λ = 2 ± |i|
        let m = herm(&[vec![c(2.0, 0.0), c(0.0, 1.0)], vec![c(0.0, -1.0), c(2.0, 0.0)]]);
        let (a, d, b) = (2.0_f64, 2.0_f64, 1.0_f64);
        let disc = (((a - d) / 2.0).powi(2) + b * b).sqrt();
        let expected = [(a + d) / 2.0 - disc, (a + d) / 2.0 + disc];
        let e = eig_hermitian(&m).unwrap();
        assert!((e.values[0] - expected[0]).abs() < 1e-12);
        assert!((e.values[1] - expected[1]).abs() < 1e-12);
        check_decomposition(&m);
    }

    #[test]
    fn random_matrices_decompose() {
        for seed in 0..20 {
            check_decomposition(&random_herm(1 + (seed as usize % 7), seed));
        }
    }

    #[test]
    fn non_finite_is_rejected() {
        let mut m = CMatrix::identity(2);
        m[(0, 1)] = c(f64::NAN, 0.0);
        let h = HermitianMatrix::new(m).unwrap();
        assert_eq!(eig_hermitian(&h).unwrap_err(), LinalgError::NonFinite);
    }

    #[test]
    fn cholesky_cases() {
        let l = chol_posdef(&HermitianMatrix::identity(3)).unwrap();
        assert_eq!(l, CMatrix::identity(3));
        let l = chol_posdef(&HermitianMatrix::from_real_diagonal(&[4.0, 9.0])).unwrap();
        assert_eq!(l, CMatrix::from_real_diagonal(&[2.0, 3.0]));
        let m = herm(&[vec![c(2.0, 0.0), c(0.0, 1.0)], vec![c(0.0, -1.0), c(2.0, 0.0)]]);
        let l = chol_posdef(&m).unwrap();
        let back = &l * &l.adjoint();
        assert!((&back - m.as_matrix()).max_abs() < 1e-12);
        assert!(l[(0, 1)] == c(0.0, 0.0));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = HermitianMatrix::from_real_diagonal(&[1.0, -1.0]);
        assert!(matches!(chol_posdef(&m), Err(LinalgError::NotPositiveDefinite { pivot: 1, .. })));
        let m = HermitianMatrix::from_real_diagonal(&[1.0, 0.0]);
        assert!(matches!(inv_hermitian(&m), Err(LinalgError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn inverse_cases() {
        assert_eq!(inv_hermitian(&HermitianMatrix::identity(3)).unwrap(), HermitianMatrix::identity(3));
        let inv = inv_hermitian(&HermitianMatrix::from_real_diagonal(&[2.0, 4.0])).unwrap();
        let want = HermitianMatrix::from_real_diagonal(&[0.5, 0.25]);
        assert!(inv.sub(&want).as_matrix().max_abs() < 1e-15);
        // random positive-definite: A†A + I
        let a = random_herm(3, 99);
        let pd = HermitianMatrix::new(&(a.as_matrix() * a.as_matrix()) + &CMatrix::identity(3)).unwrap();
        let inv = inv_hermitian(&pd).unwrap();
        let prod = pd.as_matrix() * inv.as_matrix();
        let e = eigenvalues(&pd).unwrap();
        let cond = e[2] / e[0];
        assert!((&prod - &CMatrix::identity(3)).max_abs() < 1e-10 * cond);
    }

    #[test]
    fn negation_reverses_spectrum() {
        let m = random_herm(5, 7);
        let e = eigenvalues(&m).unwrap();
        let en = eigenvalues(&m.scale(-1.0)).unwrap();
        for (a, b) in e.iter().zip(en.iter().rev()) {
            assert!((a + b).abs() < 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn herm_strategy() -> impl Strategy<Value = HermitianMatrix> {
            (1usize..7).prop_flat_map(|n| {
                proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), n * n).prop_map(move |v| {
                    let m = CMatrix::from_fn(n, n, |i, j| c(v[i * n + j].0, v[i * n + j].1));
                    HermitianMatrix::new(m).unwrap()
                })
            })
        }

        proptest! {
            #[test]
            fn trace_equals_eigen_sum(m in herm_strategy()) {
                let e = eigenvalues(&m).unwrap();
                let tr = m.as_matrix().trace().re;
                let sum: f64 = e.iter().sum();
                prop_assert!((sum - tr).abs() <= 1e-9 * (1.0 + tr.abs().max(m.as_matrix().frobenius_norm())));
            }

            #[test]
            fn determinant_equals_eigen_product(m in herm_strategy()) {
                let n = m.dim();
                // shift to positive definite
                let shifted = m.add(&HermitianMatrix::identity(n).scale(3.0 * n as f64 + 1.0));
                let e = eigenvalues(&shifted).unwrap();
                let prod: f64 = e.iter().product();
                let det = det_posdef(&shifted).unwrap();
                prop_assert!((prod - det).abs() <= 1e-8 * det.abs());
            }

            #[test]
            fn constructor_symmetrizes(m in herm_strategy()) {
                let a = m.as_matrix();
                for i in 0..m.dim() {
                    for j in 0..m.dim() {
                        prop_assert!((a[(i, j)] - a[(j, i)].conj()).norm() <= 1e-12 * (1.0 + a.max_abs()));
                    }
                }
            }
        }
    }
}
