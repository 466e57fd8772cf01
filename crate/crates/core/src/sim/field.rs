//! Mass fields on a torus and the two local update rules.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::SimError;
use crate::lattice::{LatticeBox, LatticePoint};
use crate::stats::neumaier_sum;

/// Scalar type of a mass field: `f64`, or exact rationals for conservation checks.
pub trait FieldValue: Clone + Debug + PartialEq + Send + Sync {
    fn zero() -> Self;
    /// Exact conversion; `None` for non-finite input.
    fn from_f64(x: f64) -> Option<Self>;
    fn to_f64(&self) -> f64;
    fn is_zero(&self) -> bool;
    /// Replaces both values by their mean.
    fn average(a: &mut Self, b: &mut Self);
    /// `self / k`.
    fn divide(&self, k: usize) -> Self;
    fn add_assign(&mut self, other: &Self);
    fn sum<'a>(values: impl Iterator<Item = &'a Self>) -> Self
    where
        Self: 'a;
}

impl FieldValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_f64(x: f64) -> Option<Self> {
        x.is_finite().then_some(x)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn average(a: &mut Self, b: &mut Self) {
        let m = 0.5 * (*a + *b);
        *a = m;
        *b = m;
    }
    fn divide(&self, k: usize) -> Self {
        self / k as f64
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn sum<'a>(values: impl Iterator<Item = &'a Self>) -> Self {
        neumaier_sum(values.copied())
    }
}

impl FieldValue for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x)
    }
    fn to_f64(&self) -> f64 {
        crate::walk::kernel::to_f64(self)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn average(a: &mut Self, b: &mut Self) {
        let m = (&*a + &*b) / BigInt::from(2);
        *a = m.clone();
        *b = m;
    }
    fn divide(&self, k: usize) -> Self {
        self / BigInt::from(k)
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn sum<'a>(values: impl Iterator<Item = &'a Self>) -> Self {
        values.fold(<BigRational as Zero>::zero(), |acc, v| acc + v)
    }
}

/// Finitely supported initial configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// Unit mass at one site.
    Point(LatticePoint),
    /// `site: mass` pairs; masses must be nonnegative and sum to 1.
    Distribution(Vec<(LatticePoint, f64)>),
    /// Equal mass on every site of the torus.
    Uniform,
}

impl InitialCondition {
    pub fn origin(dim: usize) -> Self {
        InitialCondition::Point(LatticePoint::origin(dim))
    }

    /// `(site, mass)` pairs; `Uniform` has no finite description and yields `None`.
    pub fn atoms(&self) -> Option<Vec<(LatticePoint, f64)>> {
        match self {
            InitialCondition::Point(p) => Some(vec![(p.clone(), 1.0)]),
            InitialCondition::Distribution(d) => Some(d.clone()),
            InitialCondition::Uniform => None,
        }
    }

    /// Largest l-inf norm in the support.
    pub fn support_radius(&self) -> usize {
        self.atoms()
            .map(|a| a.iter().map(|(p, _)| p.linf_norm() as usize).max().unwrap_or(0))
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassField<T: FieldValue = f64> {
    lattice: LatticeBox,
    values: Vec<T>,
    time: f64,
}

impl<T: FieldValue> MassField<T> {
    pub fn new(lattice: LatticeBox, initial: &InitialCondition) -> Result<Self, SimError> {
        let mut values = vec![T::zero(); lattice.len()];
        match initial.atoms() {
            None => {
                let w = T::from_f64(1.0).expect("one is finite").divide(lattice.len());
                values.iter_mut().for_each(|v| *v = w.clone());
            }
            Some(atoms) => {
                let mut total = 0.0;
                for (p, m) in atoms {
                    if !(m >= 0.0) || !m.is_finite() {
                        return Err(SimError::BadInitial(format!("mass {m} at {p}")));
                    }
                    if p.dim() != lattice.dim() {
                        return Err(SimError::BadInitial(format!("site {p} has the wrong dimension")));
                    }
                    let idx = lattice
                        .to_index(&p)
                        .filter(|_| p.linf_norm() as usize <= lattice.radius())
                        .ok_or_else(|| SimError::BadInitial(format!("site {p} lies outside the torus")))?;
                    values[idx].add_assign(&T::from_f64(m).expect("finite"));
                    total += m;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(SimError::BadInitial(format!("masses sum to {total}, not 1")));
                }
            }
        }
        Ok(MassField { lattice, values, time: 0.0 })
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.lattice
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn at(&self, p: &LatticePoint) -> Option<&T> {
        self.lattice.to_index(p).map(|i| &self.values[i])
    }

    pub fn total(&self) -> T {
        T::sum(self.values.iter())
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.values.iter().map(T::to_f64).collect()
    }

    /// Both endpoints take the average of their masses.
    pub fn apply_edge_average(&mut self, x: usize, y: usize) -> Result<(), SimError> {
        if x >= self.values.len() || y >= self.values.len() || !self.lattice.neighbors(x).contains(&y) {
            return Err(SimError::NotAdjacent(x.to_string(), y.to_string()));
        }
        self.average_unchecked(x, y);
        Ok(())
    }

    /// Point-addressed form of [`Self::apply_edge_average`].
    pub fn average_points(&mut self, x: &LatticePoint, y: &LatticePoint) -> Result<(), SimError> {
        let not_adjacent = || SimError::NotAdjacent(x.to_string(), y.to_string());
        let i = self.lattice.to_index(x).ok_or_else(not_adjacent)?;
        let j = self.lattice.to_index(y).ok_or_else(not_adjacent)?;
        self.apply_edge_average(i, j).map_err(|_| not_adjacent())
    }

    pub(crate) fn average_unchecked(&mut self, x: usize, y: usize) {
        if x == y {
            return;
        }
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        let (a, b) = self.values.split_at_mut(hi);
        T::average(&mut a[lo], &mut b[0]);
    }

    /// The vertex sends all of its mass in equal shares to its `2d` neighbours.
    pub fn apply_vertex_potlach(&mut self, x: usize) {
        if self.values[x].is_zero() {
            return;
        }
        let neighbors = self.lattice.neighbors(x);
        self.potlach_unchecked(x, &neighbors);
    }

    pub(crate) fn potlach_unchecked(&mut self, x: usize, neighbors: &[usize]) {
        let mass = std::mem::replace(&mut self.values[x], T::zero());
        if mass.is_zero() {
            return;
        }
        let share = mass.divide(neighbors.len());
        for &y in neighbors {
            self.values[y].add_assign(&share);
        }
    }
}

impl MassField<f64> {
    pub fn l2_norm_sq(&self) -> f64 {
        neumaier_sum(self.values.iter().map(|v| v * v))
    }

    /// `sum_x (eta^x - reference^x)^2`.
    pub fn l2_dist_sq(&self, reference: &[f64]) -> f64 {
        neumaier_sum(self.values.iter().zip(reference).map(|(a, b)| (a - b) * (a - b)))
    }

    /// `sum_x |eta^x - reference^x|`.
    pub fn l1_dist(&self, reference: &[f64]) -> f64 {
        neumaier_sum(self.values.iter().zip(reference).map(|(a, b)| (a - b).abs()))
    }
}
