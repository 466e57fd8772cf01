//! Discrete-time transition kernels for the single walk and the difference
//! walks, plus the rate table of the coupled pair.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::WalkError;
use crate::lattice::{sphere, unit_vectors, LatticePoint};

/// One row of a kernel: offset from the current site and its probability.
pub type Row = Vec<(LatticePoint, BigRational)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    /// Simple random walk, the difference of two independent averaging walks.
    Srw,
    /// Difference of the coupled averaging pair.
    AvgDifference,
    /// Difference of two independent potlach tokens.
    PotlachIndependent,
    /// Difference of two potlach tokens sharing vertex clocks.
    PotlachCoupled,
}

impl KernelKind {
    /// Whether return probabilities of this kernel are the tilde sequences.
    pub fn is_coupled(self) -> bool {
        matches!(self, KernelKind::AvgDifference | KernelKind::PotlachCoupled)
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Srw => "srw",
            KernelKind::AvgDifference => "avg-diff",
            KernelKind::PotlachIndependent => "potlach-indep",
            KernelKind::PotlachCoupled => "potlach-coupled",
        }
    }

    pub fn build(self, dim: usize) -> TransitionKernel {
        match self {
            KernelKind::Srw => srw_kernel(dim),
            KernelKind::AvgDifference => avg_difference_kernel(dim),
            KernelKind::PotlachIndependent => potlach_kernels(dim).0,
            KernelKind::PotlachCoupled => potlach_kernels(dim).1,
        }
    }
}

impl std::str::FromStr for KernelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "srw" => Ok(KernelKind::Srw),
            "avg-diff" => Ok(KernelKind::AvgDifference),
            "potlach-indep" => Ok(KernelKind::PotlachIndependent),
            "potlach-coupled" => Ok(KernelKind::PotlachCoupled),
            other => Err(format!(
                "unknown kernel `{other}` (expected srw, avg-diff, potlach-indep, potlach-coupled)"
            )),
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A translation-invariant stencil with finitely many perturbed sites.
///
/// `rate` is the uniformization constant: the continuous-time walk with rate
/// matrix `rate * (P - I)` is recovered by running this chain at the event
/// times of a rate-`rate` Poisson process.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    kind: KernelKind,
    dim: usize,
    bulk: Row,
    perturbed: BTreeMap<LatticePoint, Row>,
    rate: f64,
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl TransitionKernel {
    /// Builds a kernel, rejecting rows that do not sum to exactly 1 or hold
    /// probabilities outside [0, 1].
    pub fn new(
        kind: KernelKind,
        dim: usize,
        bulk: Row,
        perturbed: BTreeMap<LatticePoint, Row>,
        rate: f64,
    ) -> Result<Self, WalkError> {
        let check = |site: String, row: &Row| -> Result<(), WalkError> {
            let sum: BigRational = row.iter().map(|(_, p)| p.clone()).sum();
            let bad = row.iter().any(|(_, p)| p.is_negative() || *p > BigRational::one());
            if !sum.is_one() || bad {
                return Err(WalkError::RowSum { site, sum: sum.to_string() });
            }
            Ok(())
        };
        check("bulk".into(), &bulk)?;
        for (site, row) in &perturbed {
            check(site.to_string(), row)?;
        }
        Ok(TransitionKernel { kind, dim, bulk, perturbed, rate })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Same stencil, different uniformization rate.
    pub fn with_rate(mut self, rate: f64) -> Self {
        self.rate = rate;
        self
    }

    pub fn bulk(&self) -> &Row {
        &self.bulk
    }

    pub fn perturbed(&self) -> &BTreeMap<LatticePoint, Row> {
        &self.perturbed
    }

    /// Offsets and probabilities used from `site`.
    pub fn row(&self, site: &LatticePoint) -> &Row {
        self.perturbed.get(site).unwrap_or(&self.bulk)
    }

    /// P(x, y).
    pub fn prob(&self, x: &LatticePoint, y: &LatticePoint) -> BigRational {
        let offset = y - x;
        self.row(x)
            .iter()
            .filter(|(o, _)| *o == offset)
            .map(|(_, p)| p.clone())
            .sum()
    }

    /// Largest l-infinity length of any offset.
    pub fn max_step(&self) -> usize {
        self.bulk
            .iter()
            .chain(self.perturbed.values().flatten())
            .map(|(o, _)| o.linf_norm() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Largest l-infinity norm of a perturbed site (0 when there are none).
    pub fn perturbation_radius(&self) -> usize {
        self.perturbed.keys().map(|s| s.linf_norm() as usize).max().unwrap_or(0)
    }

    /// Least common denominator of every probability in the kernel.
    pub fn common_denominator(&self) -> BigInt {
        self.bulk
            .iter()
            .chain(self.perturbed.values().flatten())
            .fold(BigInt::one(), |acc, (_, p)| acc.lcm(p.denom()))
    }

    /// Checks `P(x, y) = P(y, x)` for all `x, y` with l-infinity norm at most
    /// `radius`.
    pub fn is_symmetric_within(&self, radius: i64) -> bool {
        let sites = cube_points(self.dim, radius);
        sites.iter().all(|x| {
            self.row(x).iter().all(|(o, p)| {
                let y = x + o;
                *p == self.prob(&y, x)
            })
        })
    }

    /// Symmetry checked on a cube large enough to contain every perturbed
    /// row and its targets.
    pub fn is_symmetric(&self) -> bool {
        self.is_symmetric_within((self.perturbation_radius() + self.max_step() + 1) as i64)
    }

    /// Sum of every row touching the perturbation zone, as exact rationals.
    pub fn row_sums_exact(&self) -> bool {
        std::iter::once(&self.bulk)
            .chain(self.perturbed.values())
            .all(|row| row.iter().map(|(_, p)| p.clone()).sum::<BigRational>().is_one())
    }
}

fn cube_points(dim: usize, radius: i64) -> Vec<LatticePoint> {
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<i64>| {
                (-radius..=radius).map(move |c| {
                    let mut v = prefix.clone();
                    v.push(c);
                    v
                })
            })
            .collect();
    }
    out.into_iter().map(|c| LatticePoint::new(c).expect("dim >= 1")).collect()
}

fn uniform_unit_stencil(dim: usize) -> Row {
    let p = ratio(1, 2 * dim as i64);
    unit_vectors(dim).into_iter().map(|u| (u, p.clone())).collect()
}

/// Simple random walk: uniform over the 2d unit steps, uniformized at rate 1.
pub fn srw_kernel(dim: usize) -> TransitionKernel {
    assert!(dim >= 1, "dimension must be at least 1");
    TransitionKernel::new(KernelKind::Srw, dim, uniform_unit_stencil(dim), BTreeMap::new(), 1.0)
        .expect("uniform stencil is stochastic")
}

/// Difference of the coupled averaging pair: simple random walk outside the
/// unit ball, lazy at the origin, with reflections `x -> -x` on the unit sphere.
pub fn avg_difference_kernel(dim: usize) -> TransitionKernel {
    assert!(dim >= 1, "dimension must be at least 1");
    let d = dim as i64;
    let origin = LatticePoint::origin(dim);
    let mut perturbed = BTreeMap::new();

    let mut origin_row = vec![(origin.clone(), ratio(1, 2))];
    origin_row.extend(unit_vectors(dim).into_iter().map(|u| (u, ratio(1, 4 * d))));
    perturbed.insert(origin.clone(), origin_row);

    for x in sphere(dim, 1) {
        let back = -&x;
        let mut row = vec![
            (back.clone(), ratio(1, 4 * d)),
            (&back + &back, ratio(1, 8 * d)),
            (origin.clone(), ratio(1, 8 * d)),
        ];
        row.extend(
            unit_vectors(dim)
                .into_iter()
                .filter(|u| *u != back)
                .map(|u| (u, ratio(1, 2 * d))),
        );
        perturbed.insert(x, row);
    }

    TransitionKernel::new(KernelKind::AvgDifference, dim, uniform_unit_stencil(dim), perturbed, 1.0)
        .expect("averaging difference kernel is stochastic")
}

/// Difference kernels for two potlach tokens, both uniformized at rate 2.
///
/// Returns `(independent, coupled)`. Away from the origin both are simple
/// random walks. When the tokens share a vertex the shared clock (rate 1)
/// moves them to independent uniform neighbours, so the coupled origin row is
/// `1/2 law(Y1 - Y2) + 1/2 delta_0`.
pub fn potlach_kernels(dim: usize) -> (TransitionKernel, TransitionKernel) {
    assert!(dim >= 1, "dimension must be at least 1");
    let stencil = uniform_unit_stencil(dim);
    let independent =
        TransitionKernel::new(KernelKind::PotlachIndependent, dim, stencil.clone(), BTreeMap::new(), 2.0)
            .expect("uniform stencil is stochastic");

    let origin = LatticePoint::origin(dim);
    let mut law: BTreeMap<LatticePoint, BigRational> = BTreeMap::new();
    law.insert(origin.clone(), ratio(1, 2));
    let pair = ratio(1, 2 * (2 * dim as i64) * (2 * dim as i64));
    for y1 in unit_vectors(dim) {
        for y2 in unit_vectors(dim) {
            *law.entry(&y1 - &y2).or_insert_with(BigRational::zero) += pair.clone();
        }
    }
    let mut perturbed = BTreeMap::new();
    perturbed.insert(origin, law.into_iter().collect());
    let coupled = TransitionKernel::new(KernelKind::PotlachCoupled, dim, stencil, perturbed, 2.0)
        .expect("potlach coupled kernel is stochastic");
    (independent, coupled)
}

/// A state of the coupled pair `(W1, W2)`.
pub type PairState = (LatticePoint, LatticePoint);

/// Jump rates of the coupled pair of averaging walks on Z^d with edge rate
/// `1/(2d)`.
#[derive(Debug, Clone)]
pub struct PairRateTable {
    dim: usize,
    edge_rate: BigRational,
}

/// The eight transition cases, labelled, with their rates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRateCase {
    pub label: &'static str,
    pub rate: String,
}

pub fn coupled_pair_rates(dim: usize) -> PairRateTable {
    assert!(dim >= 1, "dimension must be at least 1");
    PairRateTable { dim, edge_rate: ratio(1, 2 * dim as i64) }
}

impl PairRateTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn edge_rate(&self) -> &BigRational {
        &self.edge_rate
    }

    pub fn cases(&self) -> Vec<PairRateCase> {
        let half = &self.edge_rate / BigInt::from(2);
        let quarter = &self.edge_rate / BigInt::from(4);
        let rows: [(&'static str, &BigRational); 8] = [
            ("(u,v)->(u,w)", &half),
            ("(u,v)->(w,v)", &half),
            ("(u,v)->(v,v)", &quarter),
            ("(u,v)->(u,u)", &quarter),
            ("(u,v)->(v,u)", &quarter),
            ("(u,u)->(u,v)", &quarter),
            ("(u,u)->(v,u)", &quarter),
            ("(u,u)->(v,v)", &quarter),
        ];
        rows.iter()
            .map(|(label, r)| PairRateCase { label, rate: r.to_string() })
            .collect()
    }

    /// All transitions out of `(u, v)` with positive rate.
    pub fn transitions(&self, state: &PairState) -> Vec<(PairState, BigRational)> {
        let (u, v) = state;
        let half = &self.edge_rate / BigInt::from(2);
        let quarter = &self.edge_rate / BigInt::from(4);
        let units = unit_vectors(self.dim);
        let mut out = Vec::new();
        if u == v {
            for e in &units {
                let w = u + e;
                out.push(((u.clone(), w.clone()), quarter.clone()));
                out.push(((w.clone(), u.clone()), quarter.clone()));
                out.push(((w.clone(), w), quarter.clone()));
            }
        } else {
            let adjacent = u.is_adjacent(v);
            if adjacent {
                out.push(((v.clone(), v.clone()), quarter.clone()));
                out.push(((u.clone(), u.clone()), quarter.clone()));
                out.push(((v.clone(), u.clone()), quarter.clone()));
            }
            for e in &units {
                let w = v + e;
                if !(adjacent && w == *u) {
                    out.push(((u.clone(), w), half.clone()));
                }
                let w = u + e;
                if !(adjacent && w == *v) {
                    out.push(((w, v.clone()), half.clone()));
                }
            }
        }
        out
    }

    pub fn total_rate(&self, state: &PairState) -> BigRational {
        self.transitions(state).into_iter().map(|(_, r)| r).sum()
    }

    /// Row of the difference walk `W1 - W2` at `x`, uniformized at rate 1.
    /// The result does not depend on which pair realises the difference.
    pub fn difference_row(&self, x: &LatticePoint) -> Row {
        let state = (x.clone(), LatticePoint::origin(self.dim));
        let mut by_offset: BTreeMap<LatticePoint, BigRational> = BTreeMap::new();
        let mut total = BigRational::zero();
        for ((a, b), r) in self.transitions(&state) {
            let offset = &(&a - &b) - x;
            total += r.clone();
            *by_offset.entry(offset).or_insert_with(BigRational::zero) += r;
        }
        *by_offset
            .entry(LatticePoint::origin(self.dim))
            .or_insert_with(BigRational::zero) += BigRational::one() - total;
        by_offset.into_iter().filter(|(_, p)| !p.is_zero()).collect()
    }
}

/// Row as a map with zero entries dropped, for comparisons.
pub fn row_map(row: &Row) -> BTreeMap<LatticePoint, BigRational> {
    let mut m: BTreeMap<LatticePoint, BigRational> = BTreeMap::new();
    for (o, p) in row {
        *m.entry(o.clone()).or_insert_with(BigRational::zero) += p.clone();
    }
    m.retain(|_, p| !p.is_zero());
    m
}

pub fn to_f64(p: &BigRational) -> f64 {
    p.to_f64().unwrap_or(f64::NAN)
}
