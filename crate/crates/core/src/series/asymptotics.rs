//! Numerical consequences of the singularity analysis: the expected number of
//! visits `alpha_d`, the constants of the singular expansion, and rescaled
//! return probabilities compared with their predicted limits.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::SeriesError;
use crate::walk::{return_sequence_float, srw_kernel, FloatSequence};

/// Interval estimate `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn radius(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Estimate of `alpha_d = sum_n p_n` from `p_0..=p_N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub dim: usize,
    pub terms: usize,
    /// `sum_{n <= N} p_n`.
    pub partial_sum: f64,
    /// Point estimate: partial sum plus the local-limit tail.
    pub value: f64,
    /// Bound on `sum_{n > N} p_n`.
    pub tail_bound: f64,
    /// `[partial_sum - float error, partial_sum + tail_bound + float error]`.
    pub interval: Interval,
}

/// `sum_{m > M} m^{-s}` by Euler-Maclaurin, for `s > 1`.
fn zeta_tail(m: f64, s: f64) -> f64 {
    m.powf(1.0 - s) / (s - 1.0) - 0.5 * m.powf(-s) + s / 12.0 * m.powf(-s - 1.0)
}

/// `alpha_d` from an already computed return sequence of the simple random
/// walk. Past `N` the terms are replaced by the local limit
/// `2 (d / 2 pi n)^{d/2}` at even `n`, scaled by the ratio observed at the
/// last even term; the bound scales by the largest ratio in the last quarter
/// (at least 1).
pub fn alpha_from_sequence(p: &FloatSequence) -> Result<AlphaEstimate, SeriesError> {
    let dim = p.dim;
    if dim <= 2 {
        return Err(SeriesError::Divergent(dim));
    }
    if p.len() < 8 {
        return Err(SeriesError::TooFewTerms { available: p.len(), required: 8 });
    }
    let n_max = p.len() - 1;
    let partial = crate::stats::neumaier_sum(p.values.iter().copied());
    let float_err: f64 = p.error_bounds.iter().sum();
    let s = dim as f64 / 2.0;
    let ratio = |n: usize| p.values[n] * llt_scale(dim, n) / 2.0;
    let last_even = n_max - n_max % 2;
    let rho_last = ratio(last_even);
    let rho_max = (3 * n_max / 4..=n_max).filter(|n| n % 2 == 0 && *n > 0).map(ratio).fold(1.0, f64::max);
    // sum over even n > N of 2 (d / 2 pi n)^{d/2} = 2 (d / 4 pi)^{d/2} sum_{m > N/2} m^{-d/2}
    let c = 2.0 * (dim as f64 / (4.0 * PI)).powf(s);
    let m = (n_max / 2) as f64;
    let tail = c * zeta_tail(m, s);
    let tail_bound = rho_max * c * m.powf(1.0 - s) / (s - 1.0);
    Ok(AlphaEstimate {
        dim,
        terms: p.len(),
        partial_sum: partial,
        value: partial + rho_last * tail,
        tail_bound,
        interval: Interval { lower: partial - float_err, upper: partial + float_err + tail_bound },
    })
}

/// Expected number of visits of the simple random walk to the origin, from
/// the first `terms + 1` return probabilities plus a tail bound.
pub fn alpha_d(dim: usize, terms: usize) -> Result<AlphaEstimate, SeriesError> {
    if dim <= 2 {
        return Err(SeriesError::Divergent(dim));
    }
    let p = return_sequence_float(&srw_kernel(dim), terms, 1e-15)?;
    alpha_from_sequence(&p)
}

/// `Gamma(k / 2)` for integer `k` that is not a non-positive even number.
pub(crate) fn gamma_half(k: i64) -> f64 {
    // Gamma(1/2) = sqrt(pi), Gamma(1) = 1, Gamma(x + 1) = x Gamma(x)
    let (mut x2, mut g) = if k.rem_euclid(2) == 1 { (1i64, PI.sqrt()) } else { (2i64, 1.0) };
    while x2 < k {
        g *= x2 as f64 / 2.0;
        x2 += 2;
    }
    while x2 > k {
        x2 -= 2;
        g /= x2 as f64 / 2.0;
    }
    g
}

/// Constants of the singular expansion of the Green's functions and the
/// return-probability asymptotics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConstants {
    pub dim: usize,
    pub alpha: Option<AlphaEstimate>,
    /// Coefficient of the singular term of `G` at `z = 1`; `None` for d = 2,
    /// where the closed form hits the pole of Gamma at 0.
    pub beta: Option<f64>,
    /// `(d + 1) mod 2`: 1 when the singular term carries a logarithm.
    pub log_flag: u32,
    /// `1 / (4 alpha_d - 1)^2` for d >= 3.
    pub oscillation: Option<f64>,
}

impl AsymptoticConstants {
    pub fn new(dim: usize, alpha: Option<AlphaEstimate>) -> Self {
        let d = dim as i64;
        let two_pi_pow = (2.0 * PI).powf(dim as f64 / 2.0);
        let beta = if d % 2 == 1 {
            Some(gamma_half(2 - d) / two_pi_pow)
        } else if d >= 4 {
            let sign = if ((d - 2) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            Some(sign / (gamma_half(d - 2) * two_pi_pow))
        } else {
            None
        };
        let oscillation = alpha.filter(|_| dim >= 3).map(|a| 1.0 / (4.0 * a.value - 1.0).powi(2));
        AsymptoticConstants { dim, alpha, beta, log_flag: ((dim + 1) % 2) as u32, oscillation }
    }

    /// `(2 pi n / d)^{d/2}`: the local-limit scale of a walk whose steps have
    /// covariance `I / d`.
    pub fn scale(&self, n: usize) -> f64 {
        llt_scale(self.dim, n)
    }

    /// Predicted limit of `p~_n (2 pi n / d)^{d/2}`.
    pub fn target(&self, n: usize) -> f64 {
        match self.oscillation {
            Some(amp) if self.dim >= 3 => {
                if n % 2 == 0 {
                    1.0 + amp
                } else {
                    1.0 - amp
                }
            }
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub n: usize,
    pub rescaled: f64,
    pub target: f64,
    pub deviation: f64,
}

/// `(2 pi n / d)^{d/2}`.
pub fn llt_scale(dim: usize, n: usize) -> f64 {
    let d = dim as f64;
    (2.0 * PI * n as f64 / d).powf(d / 2.0)
}

/// `p~_n (2 pi n / d)^{d/2}` on a grid of `n`, next to its predicted limit.
pub fn asymptotics_check(
    p_tilde: &FloatSequence,
    constants: &AsymptoticConstants,
    n_grid: &[usize],
) -> Result<Vec<AsymptoticRow>, SeriesError> {
    n_grid
        .iter()
        .map(|&n| {
            let v = *p_tilde
                .values
                .get(n)
                .ok_or(SeriesError::TooFewTerms { available: p_tilde.len(), required: n + 1 })?;
            let rescaled = v * constants.scale(n);
            let target = constants.target(n);
            Ok(AsymptoticRow { n, rescaled, target, deviation: (rescaled - target).abs() })
        })
        .collect()
}

/// `p_n (2 pi n / d)^{d/2} / 2` at even `n`; tends to 1.
pub fn srw_llt_ratio(p: &FloatSequence, n: usize) -> f64 {
    p.values[n] * llt_scale(p.dim, n) / 2.0
}
