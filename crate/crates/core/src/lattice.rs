//! Integer lattice geometry: points, l1 spheres and balls, and finite boxes
//! (torus or absorbing) with a fixed row-major index layout.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::LatticeError;

/// A point of Z^d.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint(Vec<i64>);

impl LatticePoint {
    pub fn new(coords: Vec<i64>) -> Result<Self, LatticeError> {
        if coords.is_empty() {
            return Err(LatticeError::ZeroDimension);
        }
        Ok(LatticePoint(coords))
    }

    pub fn origin(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        LatticePoint(vec![0; dim])
    }

    /// `sign * e_axis`.
    pub fn unit(dim: usize, axis: usize, sign: i64) -> Self {
        let mut p = Self::origin(dim);
        p.0[axis] = sign;
        p
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn is_origin(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn l1_norm(&self) -> u64 {
        l1_norm(self)
    }

    pub fn linf_norm(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn is_adjacent(&self, other: &LatticePoint) -> bool {
        (self - other).l1_norm() == 1
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Add for &LatticePoint {
    type Output = LatticePoint;
    fn add(self, rhs: &LatticePoint) -> LatticePoint {
        debug_assert_eq!(self.dim(), rhs.dim());
        LatticePoint(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &LatticePoint {
    type Output = LatticePoint;
    fn sub(self, rhs: &LatticePoint) -> LatticePoint {
        debug_assert_eq!(self.dim(), rhs.dim());
        LatticePoint(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &LatticePoint {
    type Output = LatticePoint;
    fn neg(self) -> LatticePoint {
        LatticePoint(self.0.iter().map(|c| -c).collect())
    }
}

/// Sum of absolute coordinates.
pub fn l1_norm(p: &LatticePoint) -> u64 {
    p.0.iter().map(|c| c.unsigned_abs()).sum()
}

/// The 2d unit vectors, ordered `+e_0, -e_0, +e_1, -e_1, ...`.
pub fn unit_vectors(dim: usize) -> Vec<LatticePoint> {
    (0..dim)
        .flat_map(|axis| [LatticePoint::unit(dim, axis, 1), LatticePoint::unit(dim, axis, -1)])
        .collect()
}

/// All points at l1 distance exactly `r` from the origin, in lexicographic order.
pub fn sphere(dim: usize, r: u64) -> Vec<LatticePoint> {
    assert!(dim >= 1, "dimension must be at least 1");
    let mut out = Vec::new();
    let mut coords = vec![0i64; dim];
    fill_sphere(&mut coords, 0, r as i64, &mut out);
    out.sort();
    out
}

fn fill_sphere(coords: &mut [i64], axis: usize, remaining: i64, out: &mut Vec<LatticePoint>) {
    if axis + 1 == coords.len() {
        if remaining == 0 {
            coords[axis] = 0;
            out.push(LatticePoint(coords.to_vec()));
        } else {
            for c in [-remaining, remaining] {
                coords[axis] = c;
                out.push(LatticePoint(coords.to_vec()));
            }
        }
        return;
    }
    for c in -remaining..=remaining {
        coords[axis] = c;
        fill_sphere(coords, axis + 1, remaining - c.abs(), out);
    }
}

/// |B_d(r)|, counted by the recurrence over the last coordinate.
pub fn ball_volume(dim: usize, r: u64) -> u64 {
    assert!(dim >= 1, "dimension must be at least 1");
    // counts[k] = |B_j(k)| for the current j
    let mut counts: Vec<u64> = (0..=r).map(|k| 2 * k + 1).collect();
    for _ in 1..dim {
        let prev = counts.clone();
        for k in 0..=r as usize {
            counts[k] = prev[k] + 2 * prev[..k].iter().sum::<u64>();
        }
    }
    counts[r as usize]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Torus,
    Absorbing,
}

/// The cube `[-L, L]^d`, either wrapped into a torus or with an absorbing
/// outer layer.
///
/// Linear indices are row-major over coordinates shifted by `+L`, first
/// coordinate most significant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBox {
    dim: usize,
    radius: usize,
    topology: Topology,
    side: usize,
    len: usize,
}

impl LatticeBox {
    pub fn new(dim: usize, radius: usize, topology: Topology) -> Result<Self, LatticeError> {
        if dim == 0 {
            return Err(LatticeError::ZeroDimension);
        }
        if radius == 0 {
            return Err(LatticeError::ZeroRadius);
        }
        let side = 2 * radius + 1;
        let len = (0..dim)
            .try_fold(1usize, |acc, _| acc.checked_mul(side))
            .ok_or(LatticeError::TooLarge { dim, radius })?;
        Ok(LatticeBox { dim, radius, topology, side, len })
    }

    pub fn torus(dim: usize, radius: usize) -> Result<Self, LatticeError> {
        Self::new(dim, radius, Topology::Torus)
    }

    pub fn absorbing(dim: usize, radius: usize) -> Result<Self, LatticeError> {
        Self::new(dim, radius, Topology::Absorbing)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Number of sites, `(2L+1)^d`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Index distance of a unit step along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.side.pow((self.dim - 1 - axis) as u32)
    }

    /// Index of a point. On the torus coordinates wrap; in an absorbing box a
    /// point outside the cube has no index.
    pub fn to_index(&self, p: &LatticePoint) -> Option<usize> {
        if p.dim() != self.dim {
            return None;
        }
        let l = self.radius as i64;
        let side = self.side as i64;
        let mut idx = 0usize;
        for &c in p.coords() {
            let shifted = match self.topology {
                Topology::Torus => (c + l).rem_euclid(side),
                Topology::Absorbing => {
                    if c.abs() > l {
                        return None;
                    }
                    c + l
                }
            };
            idx = idx * self.side + shifted as usize;
        }
        Some(idx)
    }

    pub fn from_index(&self, mut idx: usize) -> LatticePoint {
        debug_assert!(idx < self.len);
        let mut coords = vec![0i64; self.dim];
        for slot in coords.iter_mut().rev() {
            *slot = (idx % self.side) as i64 - self.radius as i64;
            idx /= self.side;
        }
        LatticePoint(coords)
    }

    /// Representative of `p` in `[-L, L]^d` (torus wrap; identity for an
    /// absorbing box when `p` lies inside).
    pub fn wrap(&self, p: &LatticePoint) -> Option<LatticePoint> {
        self.to_index(p).map(|i| self.from_index(i))
    }

    /// Index reached from `idx` by adding `offset`, or `None` when it leaves
    /// an absorbing box.
    pub fn translate(&self, idx: usize, offset: &LatticePoint) -> Option<usize> {
        let p = self.from_index(idx);
        self.to_index(&(&p + offset))
    }

    /// True when the site lies on the outer layer `max |x_k| = L`.
    pub fn on_boundary(&self, idx: usize) -> bool {
        let mut rest = idx;
        for _ in 0..self.dim {
            let c = rest % self.side;
            if c == 0 || c == self.side - 1 {
                return true;
            }
            rest /= self.side;
        }
        false
    }

    /// Nearest-neighbour indices of `idx`, in [`unit_vectors`] order. Absorbing
    /// boxes drop neighbours outside the cube.
    pub fn neighbors(&self, idx: usize) -> Vec<usize> {
        unit_vectors(self.dim)
            .iter()
            .filter_map(|u| self.translate(idx, u))
            .collect()
    }

    /// Calls `f` with every index whose coordinates satisfy `|x_k| <= r` for all k.
    pub fn for_each_in_cube(&self, r: usize, mut f: impl FnMut(usize)) {
        let r = r.min(self.radius);
        let lo = self.radius - r;
        let width = 2 * r + 1;
        let inner = self.dim - 1;
        let mut counter = vec![0usize; inner];
        loop {
            let mut base = 0usize;
            for &c in &counter {
                base = base * self.side + lo + c;
            }
            let start = base * self.side + lo;
            for idx in start..start + width {
                f(idx);
            }
            // odometer over the leading coordinates
            let mut axis = inner;
            loop {
                if axis == 0 {
                    return;
                }
                axis -= 1;
                counter[axis] += 1;
                if counter[axis] < width {
                    break;
                }
                counter[axis] = 0;
            }
        }
    }

    pub fn points(&self) -> impl Iterator<Item = LatticePoint> + '_ {
        (0..self.len).map(move |i| self.from_index(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(c: &[i64]) -> LatticePoint {
        LatticePoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn l1_norm_examples() {
        assert_eq!(l1_norm(&LatticePoint::origin(3)), 0);
        assert_eq!(l1_norm(&pt(&[1, -1])), 2);
        assert_eq!(l1_norm(&pt(&[2, 0, 0])), 2);
    }

    #[test]
    fn sphere_examples() {
        let s = sphere(2, 1);
        assert_eq!(s.len(), 4);
        for p in [[1, 0], [-1, 0], [0, 1], [0, -1]] {
            assert!(s.contains(&pt(&p)));
        }
        assert_eq!(sphere(1, 2), vec![pt(&[-2]), pt(&[2])]);
        assert_eq!(sphere(3, 0), vec![LatticePoint::origin(3)]);
        for d in 1..=5 {
            assert_eq!(sphere(d, 1).len(), 2 * d);
        }
    }

    #[test]
    fn ball_volume_examples() {
        assert_eq!(ball_volume(1, 3), 7);
        assert_eq!(ball_volume(2, 1), 5);
        // brute-force count over the square [-2,2]^2
        let brute = (-2i64..=2)
            .flat_map(|x| (-2i64..=2).map(move |y| x.abs() + y.abs()))
            .filter(|&n| n <= 2)
            .count() as u64;
        assert_eq!(brute, 13);
        assert_eq!(ball_volume(2, 2), brute);
    }

    #[test]
    fn ball_is_union_of_spheres() {
        for d in 1..=4 {
            for r in 0..=6 {
                let total: u64 = (0..=r).map(|k| sphere(d, k).len() as u64).sum();
                assert_eq!(ball_volume(d, r), total, "d={d} r={r}");
            }
        }
    }

    #[test]
    fn row_major_layout() {
        let b = LatticeBox::torus(2, 1).unwrap();
        assert_eq!(b.len(), 9);
        assert_eq!(b.to_index(&pt(&[-1, -1])), Some(0));
        assert_eq!(b.to_index(&pt(&[-1, 0])), Some(1));
        assert_eq!(b.to_index(&pt(&[0, -1])), Some(3));
        assert_eq!(b.to_index(&pt(&[1, 1])), Some(8));
        assert_eq!(b.stride(0), 3);
        assert_eq!(b.stride(1), 1);
    }

    #[test]
    fn absorbing_box_rejects_outside() {
        let b = LatticeBox::absorbing(2, 2).unwrap();
        assert_eq!(b.to_index(&pt(&[3, 0])), None);
        let idx = b.to_index(&pt(&[2, 0])).unwrap();
        assert!(b.on_boundary(idx));
        assert!(!b.on_boundary(b.to_index(&pt(&[1, 1])).unwrap()));
        assert_eq!(b.neighbors(idx).len(), 3);
    }

    #[test]
    fn torus_wrap_returns_to_start() {
        let b = LatticeBox::torus(3, 2).unwrap();
        let start = pt(&[1, -2, 0]);
        let step = LatticePoint::unit(3, 1, 1);
        let mut idx = b.to_index(&start).unwrap();
        for _ in 0..b.side() {
            idx = b.translate(idx, &step).unwrap();
        }
        assert_eq!(b.from_index(idx), start);
    }

    #[test]
    fn cube_iteration_visits_subcube() {
        let b = LatticeBox::absorbing(3, 4).unwrap();
        let mut seen = Vec::new();
        b.for_each_in_cube(1, |i| seen.push(i));
        assert_eq!(seen.len(), 27);
        assert!(seen.windows(2).all(|w| w[0] < w[1]));
        assert!(seen.iter().all(|&i| b.from_index(i).linf_norm() <= 1));
    }

    #[test]
    fn bad_boxes_rejected() {
        assert!(LatticeBox::torus(0, 3).is_err());
        assert!(LatticeBox::torus(2, 0).is_err());
        assert!(LatticeBox::torus(64, 1000).is_err());
    }

    proptest! {
        #[test]
        fn index_bijection(d in 1usize..4, l in 1usize..5, raw in proptest::collection::vec(-10i64..10, 3)) {
            for topology in [Topology::Torus, Topology::Absorbing] {
                let b = LatticeBox::new(d, l, topology).unwrap();
                let coords: Vec<i64> = raw[..d].iter().map(|&c| c.clamp(-(l as i64), l as i64)).collect();
                let p = LatticePoint::new(coords).unwrap();
                let i = b.to_index(&p).unwrap();
                prop_assert!(i < b.len());
                prop_assert_eq!(b.from_index(i), p);
            }
        }

        #[test]
        fn every_index_round_trips(d in 1usize..4, l in 1usize..4) {
            let b = LatticeBox::torus(d, l).unwrap();
            for i in 0..b.len() {
                prop_assert_eq!(b.to_index(&b.from_index(i)), Some(i));
            }
        }
    }
}
