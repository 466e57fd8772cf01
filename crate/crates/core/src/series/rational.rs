//! Truncated power series with exact rational coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::SeriesError;
use crate::walk::SequenceTable;

/// `sum_{k=0}^{N} c_k z^k + O(z^{N+1})`. Binary operations truncate to the
/// smaller order of their operands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalSeries {
    coeffs: Vec<BigRational>,
}

impl RationalSeries {
    /// Series from coefficients `c_0..=c_N`; an empty vector is not a series.
    pub fn new(coeffs: Vec<BigRational>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least the constant term");
        RationalSeries { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        RationalSeries { coeffs: vec![BigRational::zero(); order + 1] }
    }

    pub fn one(order: usize) -> Self {
        Self::constant(BigRational::one(), order)
    }

    pub fn constant(c: BigRational, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    /// `c z^k` truncated at `order`.
    pub fn monomial(c: BigRational, k: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if k <= order {
            s.coeffs[k] = c;
        }
        s
    }

    /// `z` truncated at `order`.
    pub fn z(order: usize) -> Self {
        Self::monomial(BigRational::one(), 1, order)
    }

    /// Polynomial from small integer-ratio coefficients `(num, den)`.
    pub fn polynomial(coeffs: &[(i64, i64)], order: usize) -> Self {
        let mut s = Self::zero(order);
        for (k, &(n, d)) in coeffs.iter().enumerate().take(order + 1) {
            s.coeffs[k] = BigRational::new(BigInt::from(n), BigInt::from(d));
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// Coefficient of `z^k`; past the truncation order it is unknown, not zero.
    pub fn coeff(&self, k: usize) -> Result<&BigRational, SeriesError> {
        self.coeffs.get(k).ok_or(SeriesError::BeyondOrder { index: k, order: self.order() })
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order());
        RationalSeries { coeffs: self.coeffs[..=order].to_vec() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Index of the first nonzero coefficient.
    pub fn first_nonzero(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    /// Multiplication by `z^k`.
    pub fn shift(&self, k: usize) -> Self {
        let order = self.order();
        let mut coeffs = vec![BigRational::zero(); order + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            if i + k > order {
                break;
            }
            coeffs[i + k] = c.clone();
        }
        RationalSeries { coeffs }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        RationalSeries { coeffs: self.coeffs.iter().map(|x| x * c).collect() }
    }

    /// `1 / self`, defined when the constant term is nonzero.
    pub fn reciprocal(&self) -> Result<Self, SeriesError> {
        let c0 = &self.coeffs[0];
        if c0.is_zero() {
            return Err(SeriesError::NonInvertible);
        }
        let inv0 = c0.recip();
        let n = self.order();
        let mut out: Vec<BigRational> = Vec::with_capacity(n + 1);
        out.push(inv0.clone());
        for k in 1..=n {
            let acc: BigRational = (1..=k).map(|j| &self.coeffs[j] * &out[k - j]).sum();
            out.push(-(acc * &inv0));
        }
        Ok(RationalSeries { coeffs: out })
    }

    pub fn checked_div(&self, rhs: &RationalSeries) -> Result<Self, SeriesError> {
        Ok(self * &rhs.reciprocal()?)
    }

    /// Coefficients as `f64`.
    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(crate::walk::kernel::to_f64).collect()
    }
}

impl fmt::Display for RationalSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c} z")?,
                _ => write!(f, "{c} z^{k}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(z^{})", self.order() + 1)
    }
}

impl Add for &RationalSeries {
    type Output = RationalSeries;
    fn add(self, rhs: &RationalSeries) -> RationalSeries {
        let n = self.order().min(rhs.order());
        RationalSeries { coeffs: (0..=n).map(|k| &self.coeffs[k] + &rhs.coeffs[k]).collect() }
    }
}

impl Sub for &RationalSeries {
    type Output = RationalSeries;
    fn sub(self, rhs: &RationalSeries) -> RationalSeries {
        let n = self.order().min(rhs.order());
        RationalSeries { coeffs: (0..=n).map(|k| &self.coeffs[k] - &rhs.coeffs[k]).collect() }
    }
}

impl Neg for &RationalSeries {
    type Output = RationalSeries;
    fn neg(self) -> RationalSeries {
        RationalSeries { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Mul for &RationalSeries {
    type Output = RationalSeries;
    fn mul(self, rhs: &RationalSeries) -> RationalSeries {
        let n = self.order().min(rhs.order());
        let mut coeffs = vec![BigRational::zero(); n + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(n + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate().take(n + 1 - i) {
                if !b.is_zero() {
                    coeffs[i + j] += a * b;
                }
            }
        }
        RationalSeries { coeffs }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for RationalSeries {
            type Output = RationalSeries;
            fn $m(self, rhs: RationalSeries) -> RationalSeries {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&RationalSeries> for RationalSeries {
            type Output = RationalSeries;
            fn $m(self, rhs: &RationalSeries) -> RationalSeries {
                (&self).$m(rhs)
            }
        }
        impl $tr<RationalSeries> for &RationalSeries {
            type Output = RationalSeries;
            fn $m(self, rhs: RationalSeries) -> RationalSeries {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Generating function of a sequence table: coefficient `k` is `a_k`, with
/// zeros below the table's first index. The order is the last stored index.
pub fn series_from_sequence(table: &SequenceTable) -> RationalSeries {
    let mut coeffs = vec![BigRational::zero(); table.first_index()];
    coeffs.extend(table.entries().iter().cloned());
    if coeffs.is_empty() {
        coeffs.push(BigRational::zero());
    }
    RationalSeries::new(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn arb_series(order: usize) -> impl Strategy<Value = RationalSeries> {
        proptest::collection::vec((-20i64..20, 1i64..9), order + 1).prop_map(|cs| {
            RationalSeries::new(cs.into_iter().map(|(n, d)| r(n, d)).collect())
        })
    }

    #[test]
    fn geometric_identity() {
        let n = 30;
        let geometric = RationalSeries::new(vec![BigRational::one(); n + 1]);
        let one_minus_z = RationalSeries::polynomial(&[(1, 1), (-1, 1)], n);
        assert_eq!(&one_minus_z * &geometric, RationalSeries::one(n));
        assert_eq!(one_minus_z.reciprocal().unwrap(), geometric);
    }

    #[test]
    fn shift_moves_coefficients() {
        let s = RationalSeries::new((1..=6).map(|k| r(k, 1)).collect());
        let t = s.shift(2);
        assert_eq!(t.order(), 5);
        assert_eq!(t.coeff(0).unwrap(), &r(0, 1));
        assert_eq!(t.coeff(2).unwrap(), &r(1, 1));
        assert_eq!(t.coeff(5).unwrap(), &r(4, 1));
    }

    #[test]
    fn division_by_zero_constant_fails() {
        let z = RationalSeries::z(5);
        assert_eq!(z.reciprocal(), Err(SeriesError::NonInvertible));
        assert!(RationalSeries::one(5).checked_div(&z).is_err());
    }

    #[test]
    fn missing_coefficient_is_an_error() {
        let s = RationalSeries::one(3);
        assert_eq!(s.coeff(4), Err(SeriesError::BeyondOrder { index: 4, order: 3 }));
    }

    #[test]
    fn mixed_orders_truncate_to_minimum() {
        let a = RationalSeries::one(10);
        let b = RationalSeries::one(4);
        assert_eq!((&a + &b).order(), 4);
        assert_eq!((&a * &b).order(), 4);
    }

    proptest! {
        #[test]
        fn reciprocal_inverts(s in arb_series(12)) {
            prop_assume!(!s.coeffs()[0].is_zero());
            let inv = s.reciprocal().unwrap();
            prop_assert_eq!(&s * &inv, RationalSeries::one(12));
        }

        #[test]
        fn ring_laws(a in arb_series(8), b in arb_series(8), c in arb_series(8)) {
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert!((&(&a + &b) - &b - a.clone()).is_zero());
        }
    }
}
