//! Step-by-step propagation of a distribution under a [`TransitionKernel`].
//!
//! Exact mode works with integer masses over a common denominator `D^n`,
//! where `D` is the kernel's least common denominator; this avoids rational
//! normalisation in the inner loop. Float mode uses `f64`.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::WalkError;
use crate::lattice::{LatticeBox, LatticePoint, Topology};
use crate::walk::kernel::{to_f64, TransitionKernel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            other => Err(format!("unknown mode `{other}` (expected exact or float)")),
        }
    }
}

/// Mass stored at one site during propagation.
pub trait Mass: Clone + Send + Sync {
    type Weight: Clone + Send + Sync;
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn set_zero(&mut self);
    fn add_scaled(&mut self, x: &Self, w: &Self::Weight);
    fn add(&mut self, x: &Self);
    /// Kernel probability `p` expressed in this representation, given the
    /// common denominator.
    fn weight(p: &BigRational, denominator: &BigInt) -> Self::Weight;
}

impl Mass for f64 {
    type Weight = f64;
    fn zero() -> Self {
        0.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn set_zero(&mut self) {
        *self = 0.0;
    }
    fn add_scaled(&mut self, x: &f64, w: &f64) {
        *self += x * w;
    }
    fn add(&mut self, x: &f64) {
        *self += x;
    }
    fn weight(p: &BigRational, _: &BigInt) -> f64 {
        to_f64(p)
    }
}

impl Mass for BigUint {
    type Weight = u64;
    fn zero() -> Self {
        <BigUint as Zero>::zero()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn set_zero(&mut self) {
        Zero::set_zero(self);
    }
    fn add_scaled(&mut self, x: &BigUint, w: &u64) {
        *self += x * *w;
    }
    fn add(&mut self, x: &BigUint) {
        *self += x;
    }
    fn weight(p: &BigRational, denominator: &BigInt) -> u64 {
        let scaled = p * BigRational::from_integer(denominator.clone());
        debug_assert!(scaled.is_integer());
        scaled.to_integer().to_u64().expect("kernel weights fit in u64")
    }
}

/// Where a perturbed row sends mass: a site index.
type Targets<W> = Vec<(usize, W)>;

/// Propagation state over a box. The caller may inspect or remove mass
/// between steps, which is how taboo (first-passage) quantities are computed.
pub struct DpState<T: Mass> {
    lattice: LatticeBox,
    bulk: Vec<(isize, T::Weight)>,
    torus_bulk: Option<Vec<Vec<usize>>>,
    special: HashMap<usize, Targets<T::Weight>>,
    max_step: usize,
    values: Vec<T>,
    previous: Vec<T>,
    escaped: T,
    step: usize,
    support: usize,
    boundary: Option<Vec<usize>>,
}

impl<T: Mass> DpState<T> {
    /// Starts from a unit mass at `start` (in the units of [`Mass`]: `1`).
    pub fn new(
        kernel: &TransitionKernel,
        lattice: &LatticeBox,
        start: &LatticePoint,
        unit: T,
    ) -> Result<Self, WalkError> {
        if kernel.dim() != lattice.dim() {
            return Err(WalkError::DimensionMismatch { kernel: kernel.dim(), lattice: lattice.dim() });
        }
        let max_step = kernel.max_step();
        let reach = kernel.perturbation_radius() + max_step;
        if lattice.topology() == Topology::Absorbing && lattice.radius() <= reach {
            return Err(WalkError::BoxTooSmall { radius: lattice.radius(), required: reach + 1 });
        }
        if lattice.topology() == Topology::Torus && lattice.side() <= 2 * reach {
            return Err(WalkError::BoxTooSmall { radius: lattice.radius(), required: reach + 1 });
        }
        let start_idx = lattice
            .to_index(start)
            .filter(|&i| lattice.topology() == Topology::Torus || !lattice.on_boundary(i))
            .ok_or_else(|| WalkError::StartOutsideBox(start.to_string()))?;

        let denominator = kernel.common_denominator();
        let bulk = kernel
            .bulk()
            .iter()
            .map(|(o, p)| {
                let delta: isize = o
                    .coords()
                    .iter()
                    .enumerate()
                    .map(|(axis, &c)| c as isize * lattice.stride(axis) as isize)
                    .sum();
                (delta, T::weight(p, &denominator))
            })
            .collect::<Vec<_>>();

        let mut special = HashMap::new();
        for (site, row) in kernel.perturbed() {
            let Some(idx) = lattice.to_index(site) else { continue };
            let targets = row
                .iter()
                .map(|(o, p)| {
                    let t = lattice.translate(idx, o).expect("perturbation zone fits in the box");
                    (t, T::weight(p, &denominator))
                })
                .collect();
            special.insert(idx, targets);
        }

        let torus_bulk = (lattice.topology() == Topology::Torus).then(|| {
            kernel
                .bulk()
                .iter()
                .map(|(o, _)| (0..lattice.len()).map(|i| lattice.translate(i, o).expect("torus")).collect())
                .collect()
        });

        let mut values = vec![T::zero(); lattice.len()];
        values[start_idx] = unit;
        let support = match lattice.topology() {
            Topology::Torus => lattice.radius(),
            Topology::Absorbing => start.linf_norm() as usize,
        };
        Ok(DpState {
            lattice: lattice.clone(),
            bulk,
            torus_bulk,
            special,
            max_step,
            previous: vec![T::zero(); lattice.len()],
            values,
            escaped: T::zero(),
            step: 0,
            support,
            boundary: None,
        })
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.lattice
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Distribution before the most recent step.
    pub fn previous(&self) -> &[T] {
        &self.previous
    }

    pub fn escaped(&self) -> &T {
        &self.escaped
    }

    /// l-infinity radius containing all current mass.
    pub fn support_radius(&self) -> usize {
        self.support
    }

    pub fn mass(&self, idx: usize) -> &T {
        &self.values[idx]
    }

    /// Removes and returns the mass at `idx`.
    pub fn take(&mut self, idx: usize) -> T {
        std::mem::replace(&mut self.values[idx], T::zero())
    }

    pub fn step(&mut self) {
        let r = self.lattice.radius();
        let new_support = match self.lattice.topology() {
            Topology::Torus => r,
            Topology::Absorbing => (self.support + self.max_step).min(r),
        };
        std::mem::swap(&mut self.values, &mut self.previous);
        {
            let values = &mut self.values;
            self.lattice.for_each_in_cube(new_support, |i| values[i].set_zero());
        }
        let prev = &self.previous;
        let next = &mut self.values;
        let bulk = &self.bulk;
        let special = &self.special;
        let torus = self.torus_bulk.as_ref();
        self.lattice.for_each_in_cube(self.support, |i| {
            let m = &prev[i];
            if m.is_zero() {
                return;
            }
            if let Some(targets) = special.get(&i) {
                for (t, w) in targets {
                    next[*t].add_scaled(m, w);
                }
            } else if let Some(table) = torus {
                for (k, (_, w)) in bulk.iter().enumerate() {
                    next[table[k][i]].add_scaled(m, w);
                }
            } else {
                for (delta, w) in bulk {
                    next[(i as isize + delta) as usize].add_scaled(m, w);
                }
            }
        });
        self.support = new_support;
        self.step += 1;
        if self.lattice.topology() == Topology::Absorbing && new_support == r {
            self.absorb_boundary();
        }
    }

    fn absorb_boundary(&mut self) {
        let lattice = &self.lattice;
        let boundary = self.boundary.get_or_insert_with(|| {
            let mut b = Vec::new();
            lattice.for_each_in_cube(lattice.radius(), |i| {
                if lattice.on_boundary(i) {
                    b.push(i);
                }
            });
            b
        });
        for &i in boundary.iter() {
            if !self.values[i].is_zero() {
                let m = std::mem::replace(&mut self.values[i], T::zero());
                self.escaped.add(&m);
            }
        }
    }
}

/// Distribution of a walk after a fixed number of steps.
#[derive(Debug, Clone)]
pub struct DistVector {
    lattice: LatticeBox,
    step: usize,
    values: DistValues,
}

#[derive(Debug, Clone)]
pub enum DistValues {
    /// Site masses are `numerators[i] / denominator`.
    Exact { numerators: Vec<BigUint>, escaped: BigUint, denominator: BigUint },
    Float { values: Vec<f64>, escaped: f64 },
}

impl DistVector {
    pub fn from_float(lattice: LatticeBox, step: usize, values: Vec<f64>, escaped: f64) -> Self {
        DistVector { lattice, step, values: DistValues::Float { values, escaped } }
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.lattice
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn mode(&self) -> Mode {
        match self.values {
            DistValues::Exact { .. } => Mode::Exact,
            DistValues::Float { .. } => Mode::Float,
        }
    }

    pub fn raw(&self) -> &DistValues {
        &self.values
    }

    pub fn exact_at_index(&self, idx: usize) -> Option<BigRational> {
        match &self.values {
            DistValues::Exact { numerators, denominator, .. } => Some(BigRational::new(
                BigInt::from(numerators[idx].clone()),
                BigInt::from(denominator.clone()),
            )),
            DistValues::Float { .. } => None,
        }
    }

    /// Exact probability at `p`; `None` in float mode.
    pub fn exact_at(&self, p: &LatticePoint) -> Option<BigRational> {
        match self.lattice.to_index(p) {
            Some(i) => self.exact_at_index(i),
            None => matches!(self.values, DistValues::Exact { .. }).then(BigRational::zero),
        }
    }

    pub fn at_index(&self, idx: usize) -> f64 {
        match &self.values {
            DistValues::Exact { .. } => to_f64(&self.exact_at_index(idx).expect("exact")),
            DistValues::Float { values, .. } => values[idx],
        }
    }

    pub fn at(&self, p: &LatticePoint) -> f64 {
        self.lattice.to_index(p).map_or(0.0, |i| self.at_index(i))
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        (0..self.lattice.len()).map(|i| self.at_index(i)).collect()
    }

    pub fn escaped(&self) -> f64 {
        match &self.values {
            DistValues::Exact { escaped, denominator, .. } => to_f64(&BigRational::new(
                BigInt::from(escaped.clone()),
                BigInt::from(denominator.clone()),
            )),
            DistValues::Float { escaped, .. } => *escaped,
        }
    }

    pub fn escaped_exact(&self) -> Option<BigRational> {
        match &self.values {
            DistValues::Exact { escaped, denominator, .. } => Some(BigRational::new(
                BigInt::from(escaped.clone()),
                BigInt::from(denominator.clone()),
            )),
            DistValues::Float { .. } => None,
        }
    }

    /// Sum of site values plus escaped mass; exactly 1 in exact mode.
    pub fn total_exact(&self) -> Option<BigRational> {
        match &self.values {
            DistValues::Exact { numerators, escaped, denominator } => {
                let num: BigUint = numerators.iter().sum::<BigUint>() + escaped;
                Some(BigRational::new(BigInt::from(num), BigInt::from(denominator.clone())))
            }
            DistValues::Float { .. } => None,
        }
    }

    pub fn total(&self) -> f64 {
        match &self.values {
            DistValues::Exact { .. } => to_f64(&self.total_exact().expect("exact")),
            DistValues::Float { values, escaped } => crate::stats::neumaier_sum(values.iter().copied()) + escaped,
        }
    }
}

/// Smallest absorbing radius guaranteeing that no mass reaches the boundary
/// within `steps` steps from `start`.
pub fn exact_radius(kernel: &TransitionKernel, start: &LatticePoint, steps: usize) -> usize {
    let reach = start.linf_norm() as usize + steps * kernel.max_step();
    (reach + 1).max(kernel.perturbation_radius() + kernel.max_step() + 1)
}

/// Absorbing radius for float propagation such that the mass reaching the
/// boundary within `steps` steps is below `eps`.
///
/// Uses Freedman's maximal inequality per coordinate and direction:
/// increments are bounded by 2, per-step conditional variance by `1/d`.
/// The escaped mass actually observed is still reported, so the radius only
/// needs to be good enough in practice.
pub fn float_radius(kernel: &TransitionKernel, start: &LatticePoint, steps: usize, eps: f64) -> usize {
    let d = kernel.dim() as f64;
    let variance = steps as f64 / d;
    let log_target = (2.0 * d / eps).ln();
    // Solve R^2 = 2 log_target (variance + 2R/3) for R.
    let b = 4.0 * log_target / 3.0;
    let c = 2.0 * log_target * variance;
    let r = 0.5 * (b + (b * b + 4.0 * c).sqrt());
    let truncated = start.linf_norm() as usize + r.ceil() as usize + 2;
    truncated
        .max(kernel.perturbation_radius() + kernel.max_step() + 1)
        .min(exact_radius(kernel, start, steps))
}

/// Distribution after `steps` steps from `start`.
///
/// In an absorbing box the per-site values are lower bounds on the true
/// probabilities and the escaped mass bounds the total deficit; the call
/// fails if that escaped mass exceeds `tolerance`.
pub fn dp_distribution(
    kernel: &TransitionKernel,
    start: &LatticePoint,
    steps: usize,
    lattice: &LatticeBox,
    mode: Mode,
    tolerance: f64,
) -> Result<DistVector, WalkError> {
    let dist = match mode {
        Mode::Exact => {
            let mut state = DpState::<BigUint>::new(kernel, lattice, start, BigUint::from(1u32))?;
            for _ in 0..steps {
                state.step();
            }
            let denominator = kernel
                .common_denominator()
                .to_biguint()
                .expect("positive denominator")
                .pow(steps as u32);
            DistVector {
                lattice: lattice.clone(),
                step: steps,
                values: DistValues::Exact {
                    numerators: state.values,
                    escaped: state.escaped,
                    denominator,
                },
            }
        }
        Mode::Float => {
            let mut state = DpState::<f64>::new(kernel, lattice, start, 1.0)?;
            for _ in 0..steps {
                state.step();
            }
            DistVector::from_float(lattice.clone(), steps, state.values, state.escaped)
        }
    };
    let escaped = dist.escaped();
    if escaped > tolerance {
        return Err(WalkError::TruncationExceeded { escaped, tolerance });
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::kernel::{avg_difference_kernel, potlach_kernels, srw_kernel};
    use num_traits::One;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn zero_steps_is_point_mass() {
        let k = avg_difference_kernel(2);
        let start = LatticePoint::new(vec![1, 2]).unwrap();
        let b = LatticeBox::absorbing(2, 6).unwrap();
        let dist = dp_distribution(&k, &start, 0, &b, Mode::Exact, 0.0).unwrap();
        assert_eq!(dist.exact_at(&start), Some(BigRational::one()));
        assert_eq!(dist.total_exact(), Some(BigRational::one()));
    }

    #[test]
    fn two_step_returns() {
        let o = LatticePoint::origin(1);
        let k = avg_difference_kernel(1);
        let b = LatticeBox::absorbing(1, exact_radius(&k, &o, 2)).unwrap();
        let dist = dp_distribution(&k, &o, 2, &b, Mode::Exact, 0.0).unwrap();
        assert_eq!(dist.exact_at(&o), Some(r(3, 8)));

        let k = srw_kernel(1);
        let b = LatticeBox::absorbing(1, exact_radius(&k, &o, 2)).unwrap();
        let dist = dp_distribution(&k, &o, 2, &b, Mode::Exact, 0.0).unwrap();
        assert_eq!(dist.exact_at(&o), Some(r(1, 2)));
        assert_eq!(dist.exact_at(&LatticePoint::new(vec![2]).unwrap()), Some(r(1, 4)));
    }

    #[test]
    fn exact_mass_is_conserved() {
        for d in 1..=3 {
            let k = avg_difference_kernel(d);
            let o = LatticePoint::origin(d);
            let b = LatticeBox::absorbing(d, exact_radius(&k, &o, 5)).unwrap();
            let dist = dp_distribution(&k, &o, 5, &b, Mode::Exact, 0.0).unwrap();
            assert_eq!(dist.total_exact(), Some(BigRational::one()));
            assert_eq!(dist.escaped_exact(), Some(BigRational::zero()));
        }
    }

    #[test]
    fn small_box_reports_escape() {
        let k = srw_kernel(1);
        let o = LatticePoint::origin(1);
        let b = LatticeBox::absorbing(1, 4).unwrap();
        let err = dp_distribution(&k, &o, 20, &b, Mode::Exact, 0.0).unwrap_err();
        match err {
            WalkError::TruncationExceeded { escaped, .. } => assert!(escaped > 0.0),
            other => panic!("unexpected error {other:?}"),
        }
        // same run in float mode: values plus escaped mass still total 1
        let dist = dp_distribution(&k, &o, 20, &b, Mode::Float, 1.0).unwrap();
        assert!((dist.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn float_matches_exact() {
        let k = avg_difference_kernel(2);
        let o = LatticePoint::origin(2);
        let b = LatticeBox::absorbing(2, exact_radius(&k, &o, 9)).unwrap();
        let exact = dp_distribution(&k, &o, 9, &b, Mode::Exact, 0.0).unwrap();
        let float = dp_distribution(&k, &o, 9, &b, Mode::Float, 0.0).unwrap();
        for i in 0..b.len() {
            assert!((exact.at_index(i) - float.at_index(i)).abs() < 1e-15);
        }
    }

    #[test]
    fn torus_distribution_is_stochastic() {
        let k = srw_kernel(2);
        let b = LatticeBox::torus(2, 3).unwrap();
        let start = LatticePoint::new(vec![3, -3]).unwrap();
        let dist = dp_distribution(&k, &start, 12, &b, Mode::Exact, 0.0).unwrap();
        assert_eq!(dist.total_exact(), Some(BigRational::one()));
    }

    #[test]
    fn potlach_coupled_two_steps() {
        let (_, k) = potlach_kernels(1);
        let o = LatticePoint::origin(1);
        let b = LatticeBox::absorbing(1, exact_radius(&k, &o, 2)).unwrap();
        let dist = dp_distribution(&k, &o, 2, &b, Mode::Exact, 0.0).unwrap();
        assert_eq!(dist.exact_at(&o), Some(r(9, 16)));
    }

    #[test]
    fn start_outside_box_is_an_error() {
        let k = srw_kernel(1);
        let b = LatticeBox::absorbing(1, 4).unwrap();
        let far = LatticePoint::new(vec![9]).unwrap();
        assert!(matches!(
            dp_distribution(&k, &far, 1, &b, Mode::Float, 1.0),
            Err(WalkError::StartOutsideBox(_))
        ));
        assert!(matches!(
            DpState::<f64>::new(&avg_difference_kernel(1), &LatticeBox::absorbing(1, 2).unwrap(), &LatticePoint::origin(1), 1.0),
            Err(WalkError::BoxTooSmall { .. })
        ));
    }

    #[test]
    fn float_radius_is_capped_by_exact_radius() {
        let k = srw_kernel(3);
        let o = LatticePoint::origin(3);
        assert_eq!(float_radius(&k, &o, 3, 1e-15), exact_radius(&k, &o, 3));
        assert!(float_radius(&k, &o, 400, 1e-15) < exact_radius(&k, &o, 400));
    }
}
