//! Cross-checks against oracles that share no code path with the DP.

use averaging_core::lattice::{LatticeBox, LatticePoint};
use averaging_core::series::{central_binomial_ratio, series_from_sequence, RationalSeries};
use averaging_core::walk::{
    avg_difference_kernel, heat_kernel, poissonized_return_float, return_sequence, return_sequence_float, srw_kernel,
};
use num_rational::BigRational;

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

#[test]
fn srw_d2_is_product_of_rotated_d1_walks() {
    // rotating Z^2 by 45 degrees makes the two coordinates independent 1-d walks
    let p = return_sequence(&srw_kernel(2), 40).unwrap();
    for (n, v) in p.iter() {
        let c = central_binomial_ratio(n);
        assert_eq!(*v, &c * &c, "n={n}");
    }
}

#[test]
fn srw_d3_low_order_counts() {
    // 6 closed walks of length 2 and 90 of length 4 in Z^3
    let p = return_sequence(&srw_kernel(3), 4).unwrap();
    assert_eq!(p.get(2).unwrap(), &r(6, 36));
    assert_eq!(p.get(4).unwrap(), &r(90, 1296));
}

#[test]
fn averaging_green_function_from_relation() {
    // solve Gt = (1 - (1-2z) G) / (1 - (1-z)^2 G) by series division
    for (d, n) in [(1, 30), (2, 20), (3, 12)] {
        let g = series_from_sequence(&return_sequence(&srw_kernel(d), n).unwrap());
        let one = RationalSeries::one(n);
        let num = &one - &(&RationalSeries::polynomial(&[(1, 1), (-2, 1)], n) * &g);
        let den = &one - &(&RationalSeries::polynomial(&[(1, 1), (-2, 1), (1, 1)], n) * &g);
        // both sides vanish at z = 0, so cancel one factor of z first
        let drop_z = |s: &RationalSeries| RationalSeries::new(s.coeffs()[1..].to_vec());
        let gt = drop_z(&num).checked_div(&drop_z(&den)).unwrap();
        let dp = series_from_sequence(&return_sequence(&avg_difference_kernel(d), n).unwrap());
        assert_eq!(gt, dp.truncate(n - 1), "d={d}");
    }
}

/// `e^{-x} I_0(x)` from the power series of the modified Bessel function.
fn scaled_bessel_i0(x: f64) -> f64 {
    let mut term = (-x).exp();
    let mut sum = term;
    let q = x * x / 4.0;
    for k in 1..400 {
        term *= q / (k as f64 * k as f64);
        sum += term;
    }
    sum
}

#[test]
fn heat_kernel_at_origin_is_bessel() {
    let b = LatticeBox::absorbing(1, 80).unwrap();
    let o = LatticePoint::origin(1);
    for t in [1.0, 5.0, 20.0, 60.0] {
        let h = heat_kernel(1, t, &o, &b).unwrap();
        let want = scaled_bessel_i0(t / 2.0);
        assert!((h.at(&o) - want).abs() < 1e-12, "t={t}: {} vs {want}", h.at(&o));
    }
}

#[test]
fn second_moment_initial_slope() {
    // at t = 0 the two edges at the origin ring at total rate 1 and halve |eta|^2
    let seq = return_sequence_float(&avg_difference_kernel(1), 60, 1e-15).unwrap();
    let h = 1e-4;
    let f = |t: f64| poissonized_return_float(&seq, 1.0, t, 1e-15).unwrap().value;
    let slope = (f(h) - f(0.0)) / h;
    assert!((slope + 0.5).abs() < 1e-3, "{slope}");
}

#[test]
fn float_and_exact_sequences_agree() {
    for d in 1..=3 {
        let k = avg_difference_kernel(d);
        let exact = return_sequence(&k, 30).unwrap().to_f64();
        let float = return_sequence_float(&k, 30, 1e-15).unwrap();
        for (n, (a, b)) in exact.iter().zip(&float.values).enumerate() {
            assert!((a - b).abs() <= float.error_bounds[n] + 1e-15, "d={d} n={n}");
        }
    }
}
