//! Statistical properties of the simulator against exact quantities.

use averaging_core::sim::{estimate_moments, Estimator, SimConfig};

#[test]
fn l1_deviation_decays() {
    let early = estimate_moments(&SimConfig::point(1, 64.0, 3), 200).unwrap();
    let late = estimate_moments(&SimConfig::point(1, 1024.0, 4), 200).unwrap();
    let l1 = |recs: &[averaging_core::sim::StatRecord]| {
        recs.iter().find(|r| r.estimator == Estimator::L1Dev).unwrap().clone()
    };
    let (a, b) = (l1(&early), l1(&late));
    assert!(a.mean <= 2.0 && b.mean <= 2.0);
    assert!(b.mean < a.mean, "{} then {}", a.mean, b.mean);
}

#[test]
fn moments_are_reproducible() {
    let cfg = SimConfig::point(2, 6.0, 99);
    assert_eq!(estimate_moments(&cfg, 64).unwrap(), estimate_moments(&cfg, 64).unwrap());
}
