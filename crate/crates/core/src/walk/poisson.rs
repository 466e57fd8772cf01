//! Poissonization: mixing step-indexed quantities against `Po(rate * t)`.

use serde::{Deserialize, Serialize};

use crate::error::WalkError;
use crate::lattice::{LatticeBox, LatticePoint};
use crate::stats::neumaier_sum;
use crate::walk::dp::{DistVector, DpState};
use crate::walk::kernel::{srw_kernel, TransitionKernel};
use crate::walk::sequences::{FloatSequence, SequenceTable};

/// A value with a certified absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certified {
    pub value: f64,
    pub error: f64,
}

/// Poisson probabilities `Pr(N = n)` for `n = 0..=last`, with a bound on the
/// neglected upper tail.
#[derive(Debug, Clone)]
pub struct PoissonWeights {
    pub mean: f64,
    pub weights: Vec<f64>,
    pub tail_bound: f64,
}

impl PoissonWeights {
    /// Weights up to the first index whose upper tail is below `tol`.
    ///
    /// Built by the ratio recursion outward from the mode and normalized, which
    /// keeps the relative error near `n * eps` instead of the `sqrt(n) * eps *
    /// ln(n!)` lost by evaluating `exp(n ln m - m - ln n!)` directly.
    pub fn new(mean: f64, tol: f64) -> Result<Self, WalkError> {
        if !(mean >= 0.0) {
            return Err(WalkError::NegativeTime(mean));
        }
        if mean == 0.0 {
            return Ok(PoissonWeights { mean, weights: vec![1.0], tail_bound: 0.0 });
        }
        let mode = mean.floor() as usize;
        let mut weights = vec![0.0f64; mode + 1];
        weights[mode] = 1.0;
        for k in (1..=mode).rev() {
            weights[k - 1] = weights[k] * k as f64 / mean;
        }
        // The unnormalized mass is at least 1, so the unnormalized tail bounds
        // the normalized one.
        let mut tail;
        let mut k = mode;
        loop {
            let next = weights[k] * mean / (k + 1) as f64;
            let ratio = mean / (k + 2) as f64;
            tail = if ratio < 1.0 { next / (1.0 - ratio) } else { f64::INFINITY };
            if tail <= tol {
                break;
            }
            weights.push(next);
            k += 1;
        }
        let total = neumaier_sum(weights.iter().copied());
        for w in &mut weights {
            *w /= total;
        }
        // Normalizing by the truncated sum shifts every weight by at most the tail.
        Ok(PoissonWeights { mean, weights, tail_bound: 2.0 * tail / total })
    }

    /// Largest index carrying a weight.
    pub fn last(&self) -> usize {
        self.weights.len() - 1
    }

    /// `sum_n w_n a_n` over the stored weights.
    pub fn mix(&self, seq: &[f64]) -> f64 {
        neumaier_sum(self.weights.iter().zip(seq).map(|(w, a)| w * a))
    }
}

/// Default tolerance for the neglected Poisson tail.
pub const DEFAULT_TAIL_TOL: f64 = 1e-15;

/// `e^{-rate t} sum_n (rate t)^n / n! a_n` for a sequence in `[0, 1]`, with
/// the Poisson tail beyond the sequence and the sequence's own error bounds
/// folded into the certificate.
pub fn poissonized(
    values: &[f64],
    errors: Option<&[f64]>,
    rate: f64,
    t: f64,
    tol: f64,
) -> Result<Certified, WalkError> {
    if !(t >= 0.0) {
        return Err(WalkError::NegativeTime(t));
    }
    let weights = PoissonWeights::new(rate * t, tol)?;
    if values.len() <= weights.last() {
        return Err(WalkError::SequenceTooShort { available: values.len(), required: weights.last() + 1 });
    }
    let value = weights.mix(values);
    let seq_error = errors.map_or(0.0, |e| weights.mix(e));
    Ok(Certified { value, error: weights.tail_bound + seq_error + 8.0 * f64::EPSILON * value })
}

/// Poissonized return probability from an exact sequence table.
pub fn poissonized_return(seq: &SequenceTable, rate: f64, t: f64, tol: f64) -> Result<Certified, WalkError> {
    let mut values = vec![0.0; seq.first_index()];
    values.extend(seq.to_f64());
    poissonized(&values, None, rate, t, tol)
}

/// Poissonized return probability from a floating sequence.
pub fn poissonized_return_float(seq: &FloatSequence, rate: f64, t: f64, tol: f64) -> Result<Certified, WalkError> {
    poissonized(&seq.values, Some(&seq.error_bounds), rate, t, tol)
}

/// Number of steps needed so the Poisson tail at mean `rate * t` is below `tol`.
pub fn required_steps(rate: f64, t: f64, tol: f64) -> Result<usize, WalkError> {
    Ok(PoissonWeights::new(rate * t, tol)?.last())
}

/// Distribution at time `t` of the continuous-time walk given by `kernel`,
/// started at `start`, on `lattice`.
pub fn poissonized_distribution(
    kernel: &TransitionKernel,
    t: f64,
    start: &LatticePoint,
    lattice: &LatticeBox,
    tol: f64,
) -> Result<DistVector, WalkError> {
    let weights = PoissonWeights::new(kernel.rate() * t, tol)?;
    let mut state = DpState::<f64>::new(kernel, lattice, start, 1.0)?;
    let mut acc = vec![0.0f64; lattice.len()];
    let mut lost = 0.0;
    for (n, w) in weights.weights.iter().enumerate() {
        if n > 0 {
            state.step();
        }
        if *w == 0.0 {
            continue;
        }
        let values = state.values();
        lattice.for_each_in_cube(state.support_radius(), |i| acc[i] += w * values[i]);
        lost += w * state.escaped();
    }
    Ok(DistVector::from_float(lattice.clone(), weights.last(), acc, lost + weights.tail_bound))
}

/// Heat kernel `h_t(start, .)`: continuous-time simple random walk with total
/// jump rate 1/2.
pub fn heat_kernel(dim: usize, t: f64, start: &LatticePoint, lattice: &LatticeBox) -> Result<DistVector, WalkError> {
    let kernel = srw_kernel(dim).with_rate(0.5);
    poissonized_distribution(&kernel, t, start, lattice, DEFAULT_TAIL_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::kernel::avg_difference_kernel;
    use crate::walk::sequences::return_sequence_float;

    #[test]
    fn zero_time_is_first_entry() {
        let seq = [1.0, 0.3, 0.2];
        let c = poissonized(&seq, None, 1.0, 0.0, 1e-15).unwrap();
        assert_eq!(c.value, 1.0);
    }

    #[test]
    fn all_ones_mix_to_one() {
        for t in [0.5, 3.0, 40.0, 900.0] {
            let seq = vec![1.0; 2000];
            let c = poissonized(&seq, None, 1.0, t, 1e-15).unwrap();
            assert!((c.value - 1.0).abs() <= c.error + 1e-13, "t={t}: {}", c.value);
        }
    }

    #[test]
    fn short_sequence_reports_requirement() {
        let err = poissonized(&[1.0; 10], None, 1.0, 50.0, 1e-12).unwrap_err();
        match err {
            WalkError::SequenceTooShort { available, required } => {
                assert_eq!(available, 10);
                assert!(required > 50);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn weights_sum_to_one_minus_tail() {
        let w = PoissonWeights::new(250.0, 1e-15).unwrap();
        let total = neumaier_sum(w.weights.iter().copied());
        assert!((total - 1.0).abs() < 1e-12);
        assert!(w.tail_bound <= 1e-15);
    }

    #[test]
    fn heat_kernel_basics() {
        let b = LatticeBox::absorbing(1, 60).unwrap();
        let o = LatticePoint::origin(1);
        let h0 = heat_kernel(1, 0.0, &o, &b).unwrap();
        assert_eq!(h0.at(&o), 1.0);

        let h = heat_kernel(1, 20.0, &o, &b).unwrap();
        assert!((h.total() - 1.0).abs() < 1e-12);
        assert!(h.escaped() < 1e-12);
        let peak = h.at(&o);
        for x in -60..=60 {
            let p = LatticePoint::new(vec![x]).unwrap();
            assert!(h.at(&p) <= peak);
            let m = LatticePoint::new(vec![-x]).unwrap();
            assert!((h.at(&p) - h.at(&m)).abs() < 1e-15);
        }
    }

    #[test]
    fn heat_kernel_on_torus() {
        let b = LatticeBox::torus(2, 4).unwrap();
        let o = LatticePoint::origin(2);
        let h = heat_kernel(2, 6.0, &o, &b).unwrap();
        assert!((h.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn poissonized_avg_return_decreases() {
        let k = avg_difference_kernel(1);
        let seq = return_sequence_float(&k, 400, 1e-15).unwrap();
        let mut last = f64::INFINITY;
        for t in (5..=200).step_by(5) {
            let c = poissonized_return_float(&seq, 1.0, t as f64, 1e-15).unwrap();
            assert!(c.value < last, "t={t}");
            last = c.value;
        }
    }
}
