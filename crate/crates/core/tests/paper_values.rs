//! Heavier fixtures: the certified bounds that the published tables rest on.
//!
//! Expected raw optima were frozen from an independent solver (HiGHS via
//! scipy) before this crate was built; certified values must also clear the
//! exact rational verification path.

use oneind_core::grid::build_hypercube;
use oneind_core::lp::{verify_lower_bound, verify_lower_bound_exact};
use oneind_core::relax::{min_connect_prob, origin_step, renorm_step, TwoProbability};

#[test]
fn q3_connectivity_bounds() {
    let q3 = build_hypercube(3).unwrap();

    let b0 = min_connect_prob(&q3, 0.5847).unwrap();
    assert!((b0.raw - 0.04630364534888865).abs() < 2e-7, "raw={}", b0.raw);
    assert!(b0.value >= 0.0463);
    let lp = oneind_core::relax::build_connectivity_lp(&q3, 0.5847).unwrap();
    assert!(verify_lower_bound(&lp, &b0.certificate, 1e-9).unwrap());
    assert!(verify_lower_bound_exact(&lp, &b0.certificate, 1e-9).unwrap());

    let b1 = min_connect_prob(&q3, 0.5872).unwrap();
    assert!((b1.raw - 0.04979345159375213).abs() < 2e-7, "raw={}", b1.raw);
    assert!(b1.value >= 0.0497);

    // LP optimum is a lower bound on the independent-measure connectivity.
    let independent: f64 = (0..q3.subset_count())
        .map(|t| {
            let k = (t as u32).count_ones() as i32;
            if q3.is_connected_spanning(oneind_core::grid::EdgeSubset(t as u32)) {
                0.5847f64.powi(k) * 0.4153f64.powi(12 - k)
            } else {
                0.0
            }
        })
        .sum();
    assert!((independent - 0.46628449924032156).abs() < 1e-12);
    assert!(b0.raw <= independent);
}

#[test]
fn renorm_step_reproduces_table1_row1() {
    let start = TwoProbability::new(0.8457, 0.8457).unwrap();
    let step = renorm_step(start, 0.18).unwrap();
    assert!((step.intra.raw - 0.8591678436361952).abs() < 2e-7, "intra raw={}", step.intra.raw);
    assert!((step.cross.raw - 0.8290557567216915).abs() < 2e-7, "cross raw={}", step.cross.raw);
    assert!((step.next.p - 0.859167).abs() < 1e-12);
    assert!((step.next.p_prime - 0.829055).abs() < 1e-12);
}

#[test]
fn renorm_step_fixed_point_at_one() {
    let one = TwoProbability::new(1.0, 1.0).unwrap();
    let step = renorm_step(one, 0.3).unwrap();
    assert!((step.next.p - 1.0).abs() <= 2e-6, "p={}", step.next.p);
    assert!((step.next.p_prime - 1.0).abs() <= 2e-6, "p'={}", step.next.p_prime);
}

#[test]
fn origin_step_reproduces_table2_row1() {
    let start = TwoProbability::new(0.8459, 0.8459).unwrap();
    let o = origin_step(start, 0.18).unwrap();
    assert!((o.raw_min - (1.0 - 0.09620033313122012)).abs() < 2e-7, "raw={}", o.raw_min);
    assert!((o.g_complement_bound - 0.096201).abs() < 1e-12);

    let one = TwoProbability::new(1.0, 1.0).unwrap();
    let o1 = origin_step(one, 0.18).unwrap();
    assert!(o1.g_complement_bound <= 2e-6, "bound={}", o1.g_complement_bound);
}
