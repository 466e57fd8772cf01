//! Return and first-passage sequences of a kernel started at the origin or on
//! the unit sphere, computed by (taboo) dynamic programming.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::WalkError;
use crate::lattice::{sphere, LatticeBox, LatticePoint};
use crate::walk::dp::{exact_radius, float_radius, DpState};
use crate::walk::kernel::{to_f64, TransitionKernel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SequenceName {
    P,
    PTilde,
    Q,
    QTilde,
    R,
    RTilde,
    S,
    STilde,
}

impl SequenceName {
    pub fn as_str(self) -> &'static str {
        match self {
            SequenceName::P => "p",
            SequenceName::PTilde => "p_tilde",
            SequenceName::Q => "q",
            SequenceName::QTilde => "q_tilde",
            SequenceName::R => "r",
            SequenceName::RTilde => "r_tilde",
            SequenceName::S => "s",
            SequenceName::STilde => "s_tilde",
        }
    }

    /// Index of the first entry: 0 for p and r, 1 for q and s.
    pub fn first_index(self) -> usize {
        match self {
            SequenceName::P | SequenceName::PTilde | SequenceName::R | SequenceName::RTilde => 0,
            _ => 1,
        }
    }

    fn pick(coupled: bool, plain: SequenceName, tilde: SequenceName) -> SequenceName {
        if coupled {
            tilde
        } else {
            plain
        }
    }
}

impl fmt::Display for SequenceName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Exact sequence `a_first, a_{first+1}, ..., a_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceTable {
    name: SequenceName,
    dim: usize,
    entries: Vec<BigRational>,
}

impl SequenceTable {
    pub fn new(name: SequenceName, dim: usize, entries: Vec<BigRational>) -> Self {
        SequenceTable { name, dim, entries }
    }

    pub fn name(&self) -> SequenceName {
        self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn first_index(&self) -> usize {
        self.name.first_index()
    }

    /// Largest index held.
    pub fn last_index(&self) -> usize {
        (self.first_index() + self.entries.len()).saturating_sub(1)
    }

    pub fn entries(&self) -> &[BigRational] {
        &self.entries
    }

    /// Entry `a_n`, or `None` outside the stored range.
    pub fn get(&self, n: usize) -> Option<&BigRational> {
        n.checked_sub(self.first_index()).and_then(|k| self.entries.get(k))
    }

    /// `(n, a_n)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &BigRational)> {
        let first = self.first_index();
        self.entries.iter().enumerate().map(move |(k, v)| (first + k, v))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(to_f64).collect()
    }

    pub fn entries_mut(&mut self) -> &mut Vec<BigRational> {
        &mut self.entries
    }
}

fn as_rational(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

struct ExactRun {
    state: DpState<BigUint>,
    base: BigUint,
    denominator: BigUint,
}

impl ExactRun {
    /// Box large enough that mass hitting its boundary cannot come back to
    /// the unit ball within `steps` steps.
    fn new(kernel: &TransitionKernel, start: &LatticePoint, steps: usize) -> Result<Self, WalkError> {
        let radius = (steps / 2 + 3).min(exact_radius(kernel, start, steps));
        let radius = radius.max(kernel.perturbation_radius() + kernel.max_step() + 1);
        let lattice = LatticeBox::absorbing(kernel.dim(), radius)?;
        let state = DpState::new(kernel, &lattice, start, BigUint::one())?;
        let base = kernel.common_denominator().to_biguint().expect("positive");
        Ok(ExactRun { state, base, denominator: BigUint::one() })
    }

    fn step(&mut self) {
        self.state.step();
        self.denominator *= &self.base;
    }

    fn index(&self, p: &LatticePoint) -> usize {
        self.state.lattice().to_index(p).expect("inside box")
    }

    fn mass(&self, idx: usize) -> BigRational {
        as_rational(self.state.mass(idx), &self.denominator)
    }

    fn take(&mut self, idx: usize) -> BigRational {
        let m = self.state.take(idx);
        as_rational(&m, &self.denominator)
    }
}

/// `P^n(0, 0)` for `n = 0..=steps`, exactly. Named `p_tilde` for coupled
/// kernels and `p` otherwise.
pub fn return_sequence(kernel: &TransitionKernel, steps: usize) -> Result<SequenceTable, WalkError> {
    let origin = LatticePoint::origin(kernel.dim());
    let mut run = ExactRun::new(kernel, &origin, steps)?;
    let o = run.index(&origin);
    let mut entries = Vec::with_capacity(steps + 1);
    entries.push(BigRational::one());
    for _ in 0..steps {
        run.step();
        entries.push(run.mass(o));
    }
    let name = SequenceName::pick(kernel.kind().is_coupled(), SequenceName::P, SequenceName::PTilde);
    Ok(SequenceTable::new(name, kernel.dim(), entries))
}

/// The three taboo sequences of a kernel.
#[derive(Debug, Clone)]
pub struct FirstPassage {
    /// First return to the origin at step n, n >= 1.
    pub q: SequenceTable,
    /// Started on the unit sphere: on the sphere at step n without visiting
    /// the origin, n >= 0.
    pub r: SequenceTable,
    /// Started on the unit sphere: first return to the sphere at step n
    /// without visiting the origin, n >= 1.
    pub s: SequenceTable,
}

/// q, r, s (or their tilde versions) to index `steps`. The sphere start is
/// `+e_0`; by symmetry any unit vector gives the same sequences.
pub fn first_passage_sequences(kernel: &TransitionKernel, steps: usize) -> Result<FirstPassage, WalkError> {
    let dim = kernel.dim();
    let coupled = kernel.kind().is_coupled();
    let origin = LatticePoint::origin(dim);
    let start = LatticePoint::unit(dim, 0, 1);
    let unit_sphere = sphere(dim, 1);

    // q: first return to the origin
    let mut run = ExactRun::new(kernel, &origin, steps)?;
    let o = run.index(&origin);
    let mut q = Vec::with_capacity(steps);
    for _ in 0..steps {
        run.step();
        q.push(run.take(o));
    }

    // r: stay clear of the origin, record sphere occupation
    let mut run = ExactRun::new(kernel, &start, steps)?;
    let o = run.index(&origin);
    let sphere_idx: Vec<usize> = unit_sphere.iter().map(|p| run.index(p)).collect();
    let mut r = Vec::with_capacity(steps + 1);
    r.push(BigRational::one());
    for _ in 0..steps {
        run.step();
        run.take(o);
        r.push(sphere_idx.iter().map(|&i| run.mass(i)).sum());
    }

    // s: stop on first re-entry into the sphere or the origin
    let mut run = ExactRun::new(kernel, &start, steps)?;
    let mut s = Vec::with_capacity(steps);
    for _ in 0..steps {
        run.step();
        run.take(o);
        s.push(sphere_idx.iter().map(|&i| run.take(i)).sum());
    }

    Ok(FirstPassage {
        q: SequenceTable::new(SequenceName::pick(coupled, SequenceName::Q, SequenceName::QTilde), dim, q),
        r: SequenceTable::new(SequenceName::pick(coupled, SequenceName::R, SequenceName::RTilde), dim, r),
        s: SequenceTable::new(SequenceName::pick(coupled, SequenceName::S, SequenceName::STilde), dim, s),
    })
}

/// Floating-point return probabilities with per-entry error bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloatSequence {
    pub dim: usize,
    pub values: Vec<f64>,
    /// `|true - computed| <= error_bounds[n]`, from escaped mass and rounding.
    pub error_bounds: Vec<f64>,
}

impl FloatSequence {
    pub fn max_error(&self) -> f64 {
        self.error_bounds.iter().copied().fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `P^n(0, 0)` for `n = 0..=steps` in double precision.
///
/// Symmetric kernels use `P^{2m}(0,0) = sum_x P^m(0,x)^2` and
/// `P^{2m+1}(0,0) = sum_x P^m(0,x) P^{m+1}(0,x)`, halving the number of
/// steps and therefore the box. `eps` is the target escaped mass.
pub fn return_sequence_float(kernel: &TransitionKernel, steps: usize, eps: f64) -> Result<FloatSequence, WalkError> {
    let origin = LatticePoint::origin(kernel.dim());
    let rounding = |n: usize, v: f64| 4.0 * f64::EPSILON * (n as f64 + 1.0) * v.abs();

    if !kernel.is_symmetric() {
        let radius = float_radius(kernel, &origin, steps, eps);
        let lattice = LatticeBox::absorbing(kernel.dim(), radius)?;
        let mut state = DpState::<f64>::new(kernel, &lattice, &origin, 1.0)?;
        let o = lattice.to_index(&origin).expect("origin");
        let mut values = vec![1.0];
        let mut errors = vec![0.0];
        for n in 1..=steps {
            state.step();
            let v = *state.mass(o);
            values.push(v);
            errors.push(*state.escaped() + rounding(n, v));
        }
        return Ok(FloatSequence { dim: kernel.dim(), values, error_bounds: errors });
    }

    let half = steps.div_ceil(2);
    let radius = float_radius(kernel, &origin, half, eps);
    let lattice = LatticeBox::absorbing(kernel.dim(), radius)?;
    let mut state = DpState::<f64>::new(kernel, &lattice, &origin, 1.0)?;
    let mut values = vec![0.0; steps + 1];
    let mut errors = vec![0.0; steps + 1];
    values[0] = 1.0;
    let mut prev_escaped = 0.0;
    for m in 0..half {
        // before the step, `values()` is P^m(0, .)
        let support = state.support_radius() + kernel.max_step();
        state.step();
        let (cur, prev) = (state.values(), state.previous());
        let mut even = Vec::new();
        let mut odd = Vec::new();
        lattice.for_each_in_cube(support, |i| {
            if prev[i] != 0.0 {
                even.push(prev[i] * prev[i]);
                odd.push(prev[i] * cur[i]);
            }
        });
        let esc = *state.escaped();
        if m > 0 {
            let n = 2 * m;
            values[n] = crate::stats::neumaier_sum(even);
            errors[n] = 2.0 * prev_escaped + rounding(n, values[n]);
        }
        let n = 2 * m + 1;
        if n <= steps {
            values[n] = crate::stats::neumaier_sum(odd);
            errors[n] = prev_escaped + esc + rounding(n, values[n]);
        }
        prev_escaped = esc;
    }
    if steps >= 2 && steps % 2 == 0 {
        let cur = state.values();
        let mut even = Vec::new();
        lattice.for_each_in_cube(state.support_radius(), |i| {
            if cur[i] != 0.0 {
                even.push(cur[i] * cur[i]);
            }
        });
        values[steps] = crate::stats::neumaier_sum(even);
        errors[steps] = 2.0 * prev_escaped + rounding(steps, values[steps]);
    }
    Ok(FloatSequence { dim: kernel.dim(), values, error_bounds: errors })
}

/// Exact zero test used by the parity checks.
pub fn is_zero(x: &BigRational) -> bool {
    x.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::kernel::{avg_difference_kernel, potlach_kernels, srw_kernel};

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn return_sequence_examples() {
        let p1 = return_sequence(&avg_difference_kernel(1), 4).unwrap();
        assert_eq!(p1.name(), SequenceName::PTilde);
        assert_eq!(p1.get(0), Some(&r(1, 1)));
        assert_eq!(p1.get(1), Some(&r(1, 2)));
        assert_eq!(p1.get(2), Some(&r(3, 8)));
        let p2 = return_sequence(&avg_difference_kernel(2), 2).unwrap();
        assert_eq!(p2.get(2), Some(&r(5, 16)));
        for d in 1..=3 {
            let p = return_sequence(&srw_kernel(d), 5).unwrap();
            assert_eq!(p.name(), SequenceName::P);
            assert_eq!(p.get(1), Some(&BigRational::zero()));
        }
    }

    #[test]
    fn parity_and_laziness() {
        for d in 1..=3 {
            let p = return_sequence(&srw_kernel(d), 12).unwrap();
            let pt = return_sequence(&avg_difference_kernel(d), 12).unwrap();
            for n in 0..=12 {
                assert_eq!(p.get(n).unwrap().is_zero(), n % 2 == 1);
                assert!(pt.get(n).unwrap() > &BigRational::zero());
            }
        }
    }

    #[test]
    fn first_passage_small_values() {
        for d in 1..=3 {
            let fp = first_passage_sequences(&avg_difference_kernel(d), 6).unwrap();
            assert_eq!(fp.q.get(1), Some(&r(1, 2)));
            assert_eq!(fp.s.get(1), Some(&r(1, 4 * d as i64)));
            assert_eq!(fp.r.get(0), Some(&r(1, 1)));
            let fp = first_passage_sequences(&srw_kernel(d), 6).unwrap();
            assert_eq!(fp.s.get(1), Some(&BigRational::zero()));
            assert_eq!(fp.q.get(2), Some(&r(1, 2 * d as i64)));
        }
    }

    #[test]
    fn renewal_identity_holds_exactly() {
        for d in 1..=2 {
            let k = avg_difference_kernel(d);
            let n_max = 20;
            let p = return_sequence(&k, n_max).unwrap();
            let q = first_passage_sequences(&k, n_max).unwrap().q;
            for n in 1..=n_max {
                let conv: BigRational = (1..=n).map(|j| p.get(n - j).unwrap() * q.get(j).unwrap()).sum();
                assert_eq!(&conv, p.get(n).unwrap(), "d={d} n={n}");
            }
        }
    }

    #[test]
    fn structural_q_equals_scaled_r() {
        for d in 1..=3 {
            let fp = first_passage_sequences(&avg_difference_kernel(d), 14).unwrap();
            for n in 2..=14 {
                let expected = fp.r.get(n - 2).unwrap() / BigInt::from(8 * d);
                assert_eq!(fp.q.get(n).unwrap(), &expected);
            }
        }
    }

    #[test]
    fn first_return_partial_sums_at_most_one() {
        let fp = first_passage_sequences(&avg_difference_kernel(2), 30).unwrap();
        for seq in [&fp.q, &fp.s] {
            let mut acc = BigRational::zero();
            for (_, v) in seq.iter() {
                acc += v;
                assert!(acc <= BigRational::one());
            }
        }
    }

    #[test]
    fn float_sequence_matches_exact() {
        for d in 1..=3 {
            for k in [srw_kernel(d), avg_difference_kernel(d), potlach_kernels(d).1] {
                let exact = return_sequence(&k, 17).unwrap().to_f64();
                for steps in [16, 17] {
                    let float = return_sequence_float(&k, steps, 1e-15).unwrap();
                    assert_eq!(float.len(), steps + 1);
                    for n in 0..=steps {
                        assert!(
                            (float.values[n] - exact[n]).abs() <= float.error_bounds[n] + 1e-15,
                            "d={d} kind={} n={n}",
                            k.kind()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn float_sequence_reports_truncation() {
        let k = srw_kernel(1);
        let float = return_sequence_float(&k, 400, 1e-6).unwrap();
        assert!(float.max_error() > 0.0);
        assert!(float.max_error() < 1e-5);
        let exact = return_sequence(&k, 400).unwrap().to_f64();
        for n in 0..=400 {
            assert!((float.values[n] - exact[n]).abs() <= float.error_bounds[n]);
        }
    }
}
