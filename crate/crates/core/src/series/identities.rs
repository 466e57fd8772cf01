//! Coefficientwise verification of the functional relations between the
//! Green's functions of the simple random walk and of the coupled difference
//! walk.
//!
//! Every relation is checked in denominator-cleared polynomial form, so no
//! series has to be inverted and the residual is an exact rational series.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::error::SeriesError;
use crate::series::rational::{series_from_sequence, RationalSeries};
use crate::walk::{
    avg_difference_kernel, first_passage_sequences, potlach_kernels, return_sequence, srw_kernel,
    SequenceTable,
};

/// Generating functions needed by the relation checks, all to the same order.
#[derive(Debug, Clone)]
pub struct GreenFunctions {
    pub dim: usize,
    pub order: usize,
    pub g: RationalSeries,
    pub q: RationalSeries,
    pub r: RationalSeries,
    pub s: RationalSeries,
    pub g_tilde: RationalSeries,
    pub q_tilde: RationalSeries,
    pub r_tilde: RationalSeries,
    pub s_tilde: RationalSeries,
}

/// Raw exact sequences for one dimension.
#[derive(Debug, Clone)]
pub struct WalkSequences {
    pub p: SequenceTable,
    pub q: SequenceTable,
    pub r: SequenceTable,
    pub s: SequenceTable,
    pub p_tilde: SequenceTable,
    pub q_tilde: SequenceTable,
    pub r_tilde: SequenceTable,
    pub s_tilde: SequenceTable,
}

impl WalkSequences {
    /// Exact DP for both walks to index `order`.
    pub fn compute(dim: usize, order: usize) -> Result<Self, SeriesError> {
        let srw = srw_kernel(dim);
        let avg = avg_difference_kernel(dim);
        let (plain, coupled) = crate::join(
            || -> Result<_, SeriesError> {
                Ok((return_sequence(&srw, order)?, first_passage_sequences(&srw, order)?))
            },
            || -> Result<_, SeriesError> {
                Ok((return_sequence(&avg, order)?, first_passage_sequences(&avg, order)?))
            },
        );
        let (p, fp) = plain?;
        let (pt, fpt) = coupled?;
        Ok(WalkSequences {
            p,
            q: fp.q,
            r: fp.r,
            s: fp.s,
            p_tilde: pt,
            q_tilde: fpt.q,
            r_tilde: fpt.r,
            s_tilde: fpt.s,
        })
    }

    pub fn green_functions(&self) -> GreenFunctions {
        let g = series_from_sequence(&self.p);
        GreenFunctions {
            dim: self.p.dim(),
            order: g.order(),
            q: series_from_sequence(&self.q),
            r: series_from_sequence(&self.r),
            s: series_from_sequence(&self.s),
            g_tilde: series_from_sequence(&self.p_tilde),
            q_tilde: series_from_sequence(&self.q_tilde),
            r_tilde: series_from_sequence(&self.r_tilde),
            s_tilde: series_from_sequence(&self.s_tilde),
            g,
        }
    }
}

/// Outcome of one relation check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub relation: &'static str,
    pub order: usize,
    /// Index of the first nonzero residual coefficient.
    pub first_nonzero: Option<usize>,
    /// Index of the last nonzero residual coefficient.
    pub last_nonzero: Option<usize>,
}

impl IdentityCheck {
    fn from_residual(name: &'static str, relation: &'static str, residual: &RationalSeries) -> Self {
        IdentityCheck {
            name,
            relation,
            order: residual.order(),
            first_nonzero: residual.first_nonzero(),
            last_nonzero: residual.coeffs().iter().rposition(|c| !num_traits::Zero::is_zero(c)),
        }
    }

    pub fn holds(&self) -> bool {
        self.first_nonzero.is_none()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GfReport {
    pub dim: usize,
    pub order: usize,
    pub checks: Vec<IdentityCheck>,
}

impl GfReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(IdentityCheck::holds)
    }
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Residuals of the ten relations for the given generating functions.
pub fn check_relations(gf: &GreenFunctions) -> GfReport {
    let n = gf.order;
    let d = gf.dim as i64;
    let one = RationalSeries::one(n);
    let z = RationalSeries::z(n);
    let z2 = z.shift(1);
    let one_minus_z_sq = RationalSeries::polynomial(&[(1, 1), (-2, 1), (1, 1)], n);
    let one_minus_2z = RationalSeries::polynomial(&[(1, 1), (-2, 1)], n);
    let one_minus_half_z = RationalSeries::polynomial(&[(1, 1), (-1, 2)], n);

    let (g, qs, r, s) = (&gf.g, &gf.q, &gf.r, &gf.s);
    let (gt, qt, rt, st) = (&gf.g_tilde, &gf.q_tilde, &gf.r_tilde, &gf.s_tilde);

    let mut checks = Vec::with_capacity(10);
    let mut push = |name, relation, residual: RationalSeries| {
        checks.push(IdentityCheck::from_residual(name, relation, &residual));
    };

    push(
        "green_relation",
        "Gt*(1-(1-z)^2 G) - (1-(1-2z) G)",
        gt * &(&one - &(&one_minus_z_sq * g)) - (&one - &(&one_minus_2z * g)),
    );
    push("renewal", "Gt - 1 - Gt*Qt", gt - &one - gt * qt);
    push(
        "first_return_factorization",
        "8d*Qt - 4d*z - z^2*Rt",
        qt.scale(&q(8 * d, 1)) - z.scale(&q(4 * d, 1)) - &z2 * rt,
    );
    push("sphere_renewal", "Rt - 1 - Rt*St", rt - &one - rt * st);
    push(
        "green_via_sphere",
        "Gt*((1-z/2)(1-St) - z^2/8d) - (1-St)",
        gt * &(&one_minus_half_z * &(&one - st) - z2.scale(&q(1, 8 * d))) - (&one - st),
    );
    push("sphere_shift", "St - z/4d - S", st - &z.scale(&q(1, 4 * d)) - s);
    push(
        "sphere_from_green",
        "2d*(S-1)*(G-1) + z^2*G",
        (s - &one) * (g - &one).scale(&q(2 * d, 1)) + &z2 * g,
    );
    push("srw_renewal", "G - 1 - G*Q", g - &one - g * qs);
    push("srw_first_return_factorization", "2d*Q - z^2*R", qs.scale(&q(2 * d, 1)) - &z2 * r);
    push("srw_sphere_renewal", "R - 1 - R*S", r - &one - r * s);

    GfReport { dim: gf.dim, order: n, checks }
}

/// Computes all sequences for dimension `dim` to `order` and checks every
/// relation exactly.
pub fn verify_gf_relations(dim: usize, order: usize) -> Result<GfReport, SeriesError> {
    let seqs = WalkSequences::compute(dim, order)?;
    Ok(check_relations(&seqs.green_functions()))
}

/// `C(2n, n) / 4^n` at even index `2n`, zero at odd index.
pub fn central_binomial_ratio(index: usize) -> BigRational {
    if index % 2 == 1 {
        return BigRational::from_integer(0.into());
    }
    let n = index / 2;
    let mut c = BigInt::from(1);
    for k in 0..n {
        c = c * BigInt::from(2 * n - k) / BigInt::from(k + 1);
    }
    BigRational::new(c, BigInt::from(4).pow(n as u32))
}

/// Checks the exact one-dimensional return probabilities against
/// `G(z) = (1 - z^2)^{-1/2}`.
pub fn verify_closed_form_d1(order: usize) -> Result<bool, SeriesError> {
    let p = return_sequence(&srw_kernel(1), order)?;
    let matches = p.iter().all(|(n, v)| *v == central_binomial_ratio(n));
    Ok(matches)
}

/// One exact statement about first-passage and taboo sequences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructureCheck {
    pub statement: String,
    pub holds: bool,
}

/// `q~_1 = 1/2`, `s~_1 = 1/(4d)`, `s_1 = 0`, and for `2 <= n <= n_max`
/// both `q~_n = r~_{n-2}/(8d)` and `s~_n = s_n`.
pub fn verify_first_passage_structure(dim: usize, n_max: usize) -> Result<Vec<StructureCheck>, SeriesError> {
    let srw = first_passage_sequences(&srw_kernel(dim), n_max)?;
    let avg = first_passage_sequences(&avg_difference_kernel(dim), n_max)?;
    let d = dim as i64;
    let at = |t: &SequenceTable, n: usize| t.get(n).cloned().ok_or(SeriesError::BeyondOrder { index: n, order: n_max });
    let mut out = vec![
        StructureCheck { statement: "q~_1 = 1/2".into(), holds: at(&avg.q, 1)? == q(1, 2) },
        StructureCheck { statement: format!("s~_1 = 1/{}", 4 * d), holds: at(&avg.s, 1)? == q(1, 4 * d) },
        StructureCheck { statement: "s_1 = 0".into(), holds: num_traits::Zero::is_zero(&at(&srw.s, 1)?) },
    ];
    let mut q_ok = true;
    let mut s_ok = true;
    for n in 2..=n_max {
        q_ok &= at(&avg.q, n)? == at(&avg.r, n - 2)? * q(1, 8 * d);
        s_ok &= at(&avg.s, n)? == at(&srw.s, n)?;
    }
    out.push(StructureCheck { statement: format!("q~_n = r~_(n-2)/{} for 2 <= n <= {n_max}", 8 * d), holds: q_ok });
    out.push(StructureCheck { statement: format!("s~_n = s_n for 2 <= n <= {n_max}"), holds: s_ok });
    Ok(out)
}

/// Residual of `Gt*(1-(1-z)^2 G) - 2z G` for the potlach difference walks.
pub fn verify_potlach_relation(dim: usize, order: usize) -> Result<IdentityCheck, SeriesError> {
    let (independent, coupled) = potlach_kernels(dim);
    let (g, gt) = crate::join(|| return_sequence(&independent, order), || return_sequence(&coupled, order));
    let (g, gt) = (series_from_sequence(&g?), series_from_sequence(&gt?));
    Ok(potlach_residual(&g, &gt))
}

pub fn potlach_residual(g: &RationalSeries, gt: &RationalSeries) -> IdentityCheck {
    let n = g.order().min(gt.order());
    let one = RationalSeries::one(n);
    let one_minus_z_sq = RationalSeries::polynomial(&[(1, 1), (-2, 1), (1, 1)], n);
    let residual = gt * &(&one - &(&one_minus_z_sq * g)) - g.shift(1).scale(&q(2, 1));
    IdentityCheck::from_residual("potlach_relation", "Gt*(1-(1-z)^2 G) - 2z*G", &residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn relations_hold_small_orders() {
        for (d, n) in [(1, 24), (2, 16), (3, 10), (4, 8)] {
            let report = verify_gf_relations(d, n).unwrap();
            assert_eq!(report.checks.len(), 10);
            for c in &report.checks {
                assert!(c.holds(), "d={d} {} first nonzero at {:?}", c.name, c.first_nonzero);
            }
        }
    }

    #[test]
    fn corrupted_sequence_is_detected() {
        let mut seqs = WalkSequences::compute(1, 12).unwrap();
        seqs.p_tilde.entries_mut()[3] += r(1, 1000);
        let report = check_relations(&seqs.green_functions());
        let renewal = report.checks.iter().find(|c| c.name == "renewal").unwrap();
        assert!(renewal.first_nonzero.unwrap() <= 3);
        assert!(!report.all_hold());
    }

    #[test]
    fn central_binomials() {
        assert_eq!(central_binomial_ratio(0), BigRational::one());
        assert_eq!(central_binomial_ratio(2), r(1, 2));
        assert_eq!(central_binomial_ratio(4), r(3, 8));
        assert_eq!(central_binomial_ratio(6), r(5, 16));
        assert!(central_binomial_ratio(7).is_zero());
    }

    #[test]
    fn closed_form_d1() {
        assert!(verify_closed_form_d1(40).unwrap());
    }

    #[test]
    fn srw_series_d1_first_terms() {
        let p = return_sequence(&srw_kernel(1), 6).unwrap();
        let g = series_from_sequence(&p);
        let expected = [r(1, 1), r(0, 1), r(1, 2), r(0, 1), r(3, 8), r(0, 1), r(5, 16)];
        assert_eq!(g.coeffs(), &expected);
        // G * (1/G) = 1
        assert_eq!(&g * &g.reciprocal().unwrap(), RationalSeries::one(6));
    }

    #[test]
    fn first_passage_structure() {
        for d in 1..=3 {
            let checks = verify_first_passage_structure(d, 14).unwrap();
            assert_eq!(checks.len(), 5);
            assert!(checks.iter().all(|c| c.holds), "d={d}: {checks:?}");
        }
    }

    #[test]
    fn q_tilde_starts_with_half() {
        for d in 1..=3 {
            let fp = first_passage_sequences(&avg_difference_kernel(d), 3).unwrap();
            let qt = series_from_sequence(&fp.q);
            assert!(qt.coeff(0).unwrap().is_zero());
            assert_eq!(qt.coeff(1).unwrap(), &r(1, 2));
        }
    }

    #[test]
    fn potlach_relation_low_orders() {
        // p~_1 and p~_2 forced by the relation from p_0 = 1, p_2 = 1/2
        let g = RationalSeries::polynomial(&[(1, 1), (0, 1), (1, 2)], 2);
        let (_, coupled) = potlach_kernels(1);
        let gt = series_from_sequence(&return_sequence(&coupled, 2).unwrap());
        assert_eq!(gt.coeff(1).unwrap(), &r(3, 4));
        assert_eq!(gt.coeff(2).unwrap(), &r(9, 16));
        assert!(potlach_residual(&g, &gt).holds());
        for d in 1..=3 {
            assert!(verify_potlach_relation(d, 12).unwrap().holds(), "d={d}");
        }
    }
}
