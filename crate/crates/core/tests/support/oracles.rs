#![allow(dead_code)]
//! Closed-form curvature oracles and the sweeps that compare against them.

use hermlab_core::curvature::{berndtsson_current, classify, section_hessian_form, ClassifyOptions};
use hermlab_core::expr::{parse, Expr};
use hermlab_core::field::MetricField;
use hermlab_core::grid::GridDomain;
use hermlab_core::linalg::{eig_hermitian, inv_hermitian};
use hermlab_core::{CMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn metric(n: usize, rows: &[&[&str]]) -> MetricField {
    let entries: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect();
    MetricField::parse_analytic(n, &entries).unwrap()
}

pub fn abs2(z: &[C64]) -> f64 {
    z.iter().map(|x| x.norm_sqr()).sum()
}

/// Closed-form `Λ_{jk̄}` of the analytic suite.
pub type Oracle = fn(&[C64], usize, usize) -> CMatrix;

fn diag(vals: &[f64]) -> CMatrix {
    CMatrix::from_real_diagonal(vals)
}

fn kron(j: usize, k: usize) -> f64 {
    if j == k {
        1.0
    } else {
        0.0
    }
}

pub fn suite_n1() -> Vec<(&'static str, MetricField, Oracle)> {
    vec![
        ("identity", MetricField::identity(1, 2), |_, _, _| diag(&[0.0, 0.0])),
        ("exp(|z|^2)", metric(1, &[&["exp(abs2(z1))"]]), |z, _, _| diag(&[abs2(z).exp()])),
        ("exp(-|z|^2)", metric(1, &[&["exp(-abs2(z1))"]]), |z, _, _| diag(&[-(-abs2(z)).exp()])),
        ("|z|^2 + c", metric(1, &[&["abs2(z1) + 0.5"]]), |z, _, _| diag(&[0.5 / (abs2(z) + 0.5)])),
        ("diag mixture", metric(1, &[&["exp(abs2(z1))", "0"], &["0", "abs2(z1) + 0.5"]]), |z, _, _| {
            diag(&[abs2(z).exp(), 0.5 / (abs2(z) + 0.5)])
        }),
    ]
}

pub fn suite_n2() -> Vec<(&'static str, MetricField, Oracle)> {
    vec![
        ("identity", MetricField::identity(2, 2), |_, _, _| diag(&[0.0, 0.0])),
        (
            "exp(|z|^2) I",
            metric(2, &[&["exp(abs2(z1) + abs2(z2))", "0"], &["0", "exp(abs2(z1) + abs2(z2))"]]),
            |z, j, k| {
                let e = abs2(z).exp() * kron(j, k);
                diag(&[e, e])
            },
        ),
        (
            "exp(-|z|^2) I",
            metric(2, &[&["exp(-abs2(z1) - abs2(z2))", "0"], &["0", "exp(-abs2(z1) - abs2(z2))"]]),
            |z, j, k| {
                let e = -(-abs2(z)).exp() * kron(j, k);
                diag(&[e, e])
            },
        ),
        ("diag mixture", metric(2, &[&["exp(abs2(z1))", "0"], &["0", "abs2(z2) + 0.5"]]), |z, j, k| {
            // line factors depend on one variable each
            let a = if j == 0 && k == 0 { z[0].norm_sqr().exp() } else { 0.0 };
            let b = if j == 1 && k == 1 { 0.5 / (z[1].norm_sqr() + 0.5) } else { 0.0 };
            diag(&[a, b])
        }),
    ]
}

/// Largest block error and largest oracle entry over the interior.
pub fn max_block_error(h: &MetricField, oracle: Oracle, grid: &GridDomain, steps: &[f64]) -> (f64, f64) {
    let n = grid.n();
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for flat in grid.interior_indices() {
        let z = grid.point(flat);
        let data = section_hessian_form(h, &z, steps).unwrap();
        for j in 0..n {
            for k in 0..n {
                let want = oracle(&z, j, k);
                worst = worst.max((data.block(j, k) - &want).max_abs());
                scale = scale.max(want.max_abs());
            }
        }
    }
    (worst, scale)
}

pub struct Convergence {
    pub name: &'static str,
    pub coarse: f64,
    pub fine: f64,
    /// `10·(1 + max|Λ|)·step²`.
    pub bound: f64,
}

impl Convergence {
    pub fn pass(&self) -> bool {
        self.coarse <= self.bound && (self.coarse <= 1e-10 || self.coarse / self.fine >= 3.5)
    }
}

/// Block errors at the grid steps `s` and at `s/2`.
pub fn convergence(suite: Vec<(&'static str, MetricField, Oracle)>, grid: &GridDomain) -> Vec<Convergence> {
    let s = grid.steps();
    let half: Vec<f64> = s.iter().map(|x| x / 2.0).collect();
    let step2 = grid.max_step().powi(2);
    suite
        .into_iter()
        .map(|(name, h, oracle)| {
            let (coarse, scale) = max_block_error(&h, oracle, grid, &s);
            let (fine, _) = max_block_error(&h, oracle, grid, &half);
            Convergence { name, coarse, fine, bound: 10.0 * (1.0 + scale) * step2 }
        })
        .collect()
}

/// `∂_j H` by fourth-order central differences.
pub fn metric_derivative(h: &MetricField, z: &[C64], j: usize) -> CMatrix {
    let t = 1e-3;
    let shifted = |dz: C64| {
        let mut p = z.to_vec();
        p[j] += dz;
        h.evaluate(&p).unwrap().into_matrix()
    };
    let diff = |unit: C64| {
        let mut m = shifted(unit * (-2.0 * t));
        m.axpy(c(-8.0, 0.0), &shifted(unit * -t));
        m.axpy(c(8.0, 0.0), &shifted(unit * t));
        m.axpy(c(-1.0, 0.0), &shifted(unit * (2.0 * t)));
        m.scale_real(1.0 / (12.0 * t))
    };
    let mut out = diff(c(1.0, 0.0)).scale_real(0.5);
    out.axpy(c(0.0, -0.5), &diff(c(0.0, 1.0)));
    out
}

/// `∂_t ∂_t̄ g` for `g(t)` on `C` by the fourth-order five-point stencil per axis.
pub fn complex_laplacian(g: impl Fn(C64) -> f64) -> f64 {
    let t = 1e-2;
    let axis = |u: C64| {
        (-g(u * (2.0 * t)) + 16.0 * g(u * t) - 30.0 * g(c(0.0, 0.0)) + 16.0 * g(u * -t) - g(u * (-2.0 * t)))
            / (12.0 * t * t)
    };
    0.25 * (axis(c(1.0, 0.0)) + axis(c(0.0, 1.0)))
}

pub fn unit(rng: &mut ChaCha8Rng, len: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..len).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

pub fn section_examples() -> Vec<MetricField> {
    vec![
        metric(2, &[&["exp(abs2(z1) + abs2(z2))", "0"], &["0", "exp(abs2(z1) + abs2(z2))"]]),
        metric(2, &[&["1 + abs2(z1)", "z1*conj(z2)"], &["z2*conj(z1)", "1 + abs2(z2)"]]),
        metric(1, &[&["exp(-abs2(z1))", "0"], &["0", "abs2(z1) + 0.5"]]),
    ]
}

/// Outcome of the section sweep: the lowest `Hessian - form` over all
/// sections and the largest `best - form` over all points.
pub struct SectionSweep {
    pub min_excess: f64,
    pub max_best_gap: f64,
}

/// At random points and directions, the complex Hessian of `‖u‖²_h` along
/// the direction for affine holomorphic sections `u` with `u(z0) = ξ`. The
/// sections are the minimizer `∂_j u = -H⁻¹∂_jHξ` plus perturbations of size
/// `10^-4 ... 1`.
pub fn section_sweep(h: &MetricField, points: usize, sections: usize, seed: u64) -> SectionSweep {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, r) = (h.dim(), h.rank());
    let mut sweep = SectionSweep { min_excess: f64::INFINITY, max_best_gap: f64::NEG_INFINITY };
    for _ in 0..points {
        let z0: Vec<C64> = (0..n).map(|_| c(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6))).collect();
        let (v, xi) = (unit(&mut rng, n), unit(&mut rng, r));
        let predicted = section_hessian_form(h, &z0, &vec![2e-4; 2 * n]).unwrap().griffiths_form(&v, &xi);
        let hinv = inv_hermitian(&h.evaluate(&z0).unwrap()).unwrap().into_matrix();
        let best: Vec<Vec<C64>> = (0..n)
            .map(|j| (&hinv * &metric_derivative(h, &z0, j)).mul_vec(&xi).into_iter().map(|x| -x).collect())
            .collect();
        let mut lowest = f64::INFINITY;
        for m in 0..sections {
            let delta = 10f64.powf(-4.0 + 4.0 * m as f64 / (sections - 1) as f64);
            let slopes: Vec<Vec<C64>> =
                best.iter().map(|b| b.iter().zip(unit(&mut rng, r)).map(|(x, y)| x + y * delta).collect()).collect();
            let norm2 = |t: C64| {
                let z: Vec<C64> = z0.iter().zip(&v).map(|(a, d)| a + d * t).collect();
                let u: Vec<C64> =
                    (0..r).map(|a| xi[a] + (0..n).map(|j| slopes[j][a] * (z[j] - z0[j])).sum::<C64>()).collect();
                h.evaluate(&z).unwrap().quadratic_form(&u)
            };
            let value = complex_laplacian(norm2);
            sweep.min_excess = sweep.min_excess.min(value - predicted);
            lowest = lowest.min(value);
        }
        sweep.max_best_gap = sweep.max_best_gap.max(lowest - predicted);
    }
    sweep
}

pub fn random_poly(rng: &mut ChaCha8Rng, n: usize) -> Expr {
    let mut terms = vec![format!("({}+{}i)", rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))];
    for j in 1..=n {
        terms.push(format!("({}+{}i)*z{j}", rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        terms.push(format!("({}+{}i)*z{j}^2", rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)));
    }
    parse(&terms.join(" + "), n).unwrap()
}

pub fn random_tuples(count: usize, n: usize, r: usize, seed: u64) -> Vec<Vec<Vec<Expr>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..n).map(|_| (0..r).map(|_| random_poly(&mut rng, n)).collect()).collect()).collect()
}

/// Smallest Berndtsson current over the tuples and the given points.
pub fn min_current(h: &MetricField, tuples: &[Vec<Vec<Expr>>], points: &[Vec<C64>], steps: &[f64]) -> f64 {
    let mut lowest = f64::INFINITY;
    for z in points {
        for t in tuples {
            lowest = lowest.min(berndtsson_current(h, t, z, steps).unwrap());
        }
    }
    lowest
}

/// Builds the tuple realizing the Nakano witness of `h` on `grid` and
/// returns `(current, Nakano form, tolerance)` there.
pub fn witness_current(h: &MetricField, grid: &GridDomain) -> (f64, f64, f64) {
    let report = classify(h, grid, &ClassifyOptions::default()).unwrap();
    assert!(!report.nakano_negative.pass);
    let w = report.nakano_negative.witness.as_ref().unwrap();
    let z0: Vec<C64> = w.point.iter().map(|p| c(p[0], p[1])).collect();
    let data = section_hessian_form(h, &z0, &grid.steps()).unwrap();
    let eig = eig_hermitian(&data.nakano_matrix()).unwrap();
    assert!(eig.min() < 0.0);
    let x = eig.vector(0);
    let (n, r) = (h.dim(), h.rank());
    let xi: Vec<Vec<C64>> = (0..n).map(|j| x[j * r..(j + 1) * r].to_vec()).collect();
    // Σ_j ∂_j v_j = -H^{-1} Σ_j ∂_j H ξ_j makes the current equal the tuple form
    let hinv = inv_hermitian(&h.evaluate(&z0).unwrap()).unwrap().into_matrix();
    let mut a = vec![c(0.0, 0.0); r];
    for (j, x) in xi.iter().enumerate() {
        for (acc, y) in a.iter_mut().zip(metric_derivative(h, &z0, j).mul_vec(x)) {
            *acc += y;
        }
    }
    let s: Vec<C64> = hinv.mul_vec(&a).into_iter().map(|x| -x).collect();
    let lit = |x: C64| format!("({}+{}i)", x.re, x.im);
    let tuple: Vec<Vec<Expr>> = (0..n)
        .map(|j| {
            (0..r)
                .map(|b| {
                    let text = if j == 0 {
                        format!("{} + {}*(z1 - {})", lit(xi[j][b]), lit(s[b]), lit(z0[0]))
                    } else {
                        lit(xi[j][b])
                    };
                    parse(&text, n).unwrap()
                })
                .collect()
        })
        .collect();
    let cur = berndtsson_current(h, &tuple, &z0, &grid.steps()).unwrap();
    (cur, data.nakano_form(&xi), report.tolerance)
}

/// Largest `|h** - h|` and whether the Griffiths verdicts swap across the
/// dual on `grid`.
pub fn dual_check(h: &MetricField, grid: &GridDomain) -> (f64, bool) {
    let d = h.dual();
    let mut err: f64 = 0.0;
    for flat in grid.interior_indices() {
        let z = grid.point(flat);
        let a = h.evaluate(&z).unwrap();
        err = err.max(d.dual().evaluate(&z).unwrap().sub(&a).as_matrix().max_abs() / a.as_matrix().max_abs().max(1.0));
    }
    let opts = ClassifyOptions::default();
    let (rh, rd) = (classify(h, grid, &opts).unwrap(), classify(&d, grid, &opts).unwrap());
    let swap = rh.griffiths_negative.pass == rd.griffiths_positive.pass
        && rh.griffiths_positive.pass == rd.griffiths_negative.pass;
    (err, swap)
}
