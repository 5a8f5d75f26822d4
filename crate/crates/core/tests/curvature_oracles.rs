#[path = "support/oracles.rs"]
mod oracles;

use hermlab_core::curvature::{griffiths_extremes, section_hessian_form};
use hermlab_core::grid::GridDomain;
use oracles::{metric, suite_n1, suite_n2};

fn assert_converges(rows: Vec<oracles::Convergence>) {
    for r in rows {
        assert!(r.pass(), "{}: error {:e} (bound {:e}), at s/2 {:e}", r.name, r.coarse, r.bound, r.fine);
    }
}

#[test]
fn blocks_converge_at_second_order_n1() {
    assert_converges(oracles::convergence(suite_n1(), &GridDomain::cube(1, 1.0, 32, 2).unwrap()));
}

#[test]
fn blocks_converge_at_second_order_n2() {
    assert_converges(oracles::convergence(suite_n2(), &GridDomain::cube(2, 0.8, 8, 2).unwrap()));
}

#[test]
fn random_sections_never_beat_the_form() {
    for (i, h) in oracles::section_examples().iter().enumerate() {
        let s = oracles::section_sweep(h, 10, 40, 3 + i as u64);
        assert!(s.min_excess >= -1e-6, "example {i}: section Hessian {:e} below the form", s.min_excess);
        assert!(s.max_best_gap <= 1e-3, "example {i}: best section {:e} above the form", s.max_best_gap);
    }
}

#[test]
fn berndtsson_current_is_nonnegative_for_nakano_negative() {
    let h = metric(2, &[&["exp(abs2(z1) + abs2(z2))", "0"], &["0", "exp(abs2(z1) + abs2(z2))"]]);
    let grid = GridDomain::cube(2, 0.6, 8, 2).unwrap();
    let tuples = oracles::random_tuples(50, 2, 2, 9);
    let points: Vec<_> = grid.interior_indices().into_iter().step_by(37).map(|i| grid.point(i)).collect();
    let lowest = oracles::min_current(&h, &tuples, &points, &grid.steps());
    assert!(lowest >= -10.0 * grid.max_step().powi(2), "{lowest}");
}

#[test]
fn berndtsson_current_certifies_the_nakano_witness() {
    let h = metric(2, &[&["exp(abs2(z1) - abs2(z2))", "0"], &["0", "1"]]);
    let (cur, form, tol) = oracles::witness_current(&h, &GridDomain::cube(2, 0.5, 8, 2).unwrap());
    assert!(cur < -tol, "current {cur} at the witness");
    assert!((cur - form).abs() < 1e-2 * cur.abs().max(1.0));
}

#[test]
fn dual_swaps_griffiths_signs_on_line_bundles() {
    let grid = GridDomain::cube(1, 0.8, 12, 2).unwrap();
    for text in ["exp(abs2(z1))", "exp(-abs2(z1))", "abs2(z1) + 0.5"] {
        let h = metric(1, &[&[text]]);
        let d = h.dual();
        for flat in grid.interior_indices().into_iter().step_by(7) {
            let z = grid.point(flat);
            let a = griffiths_extremes(&section_hessian_form(&h, &z, &grid.steps()).unwrap().normalized());
            let b = griffiths_extremes(&section_hessian_form(&d, &z, &grid.steps()).unwrap().normalized());
            assert!((a.min.value + b.max.value).abs() < 1e-9, "{text}: {} vs {}", a.min.value, b.max.value);
        }
        let (err, swap) = oracles::dual_check(&h, &grid);
        assert!(err < 1e-10 && swap, "{text}: {err:e}");
    }
}
