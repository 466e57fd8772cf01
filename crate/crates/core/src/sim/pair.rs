//! Direct simulation of the coupled pair of dual walks, and the check of
//! `E[eta_t^v eta_t^w]` against pair occupancies.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::SimError;
use crate::lattice::LatticePoint;
use crate::sim::estimate::for_each_trial;
use crate::sim::run::{simulate, SimConfig};
use crate::stats::RunningStats;
use crate::walk::kernel::to_f64;
use crate::walk::{coupled_pair_rates, PairRateTable, PairState};

/// Position of the pair at time `t`, by Gillespie's algorithm on Z^d.
pub fn run_pair(table: &PairRateTable, t: f64, start: &PairState, seed: u64) -> PairState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = start.clone();
    let mut now = 0.0;
    loop {
        let moves: Vec<(PairState, f64)> =
            table.transitions(&state).into_iter().map(|(s, r)| (s, to_f64(&r))).collect();
        let total: f64 = moves.iter().map(|(_, r)| r).sum();
        let wait: f64 = rng.sample(Exp1);
        now += wait / total;
        if now > t {
            return state;
        }
        let mut u = rng.random::<f64>() * total;
        let last = moves.len() - 1;
        for (i, (s, r)) in moves.into_iter().enumerate() {
            if u < r || i == last {
                state = s;
                break;
            }
            u -= r;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub d: usize,
    pub t: f64,
    pub trials: usize,
    pub coincidence: f64,
    pub coincidence_se: f64,
    /// Final positions with their counts.
    #[serde(skip)]
    pub occupancy: HashMap<PairState, u64>,
}

impl PairReport {
    /// Empirical `Pr(W1_t = v, W2_t = w)` and its standard error.
    pub fn occupancy_of(&self, v: &LatticePoint, w: &LatticePoint) -> (f64, f64) {
        let n = self.trials as f64;
        let count = self.occupancy.get(&(v.clone(), w.clone())).copied().unwrap_or(0);
        let p = count as f64 / n;
        (p, (p * (1.0 - p) / (n - 1.0)).sqrt())
    }
}

/// `trials` runs of the coupled pair from `start`, recording coincidences and
/// final positions.
pub fn coupled_pair_mc(dim: usize, t: f64, start: &PairState, trials: usize, seed: u64) -> Result<PairReport, SimError> {
    if trials < 1000 {
        return Err(SimError::TooFewTrials { required: 1000, got: trials });
    }
    if start.0.dim() != dim || start.1.dim() != dim {
        return Err(SimError::BadInitial(format!("start pair must lie in Z^{dim}")));
    }
    let table = coupled_pair_rates(dim);
    let mut occupancy: HashMap<PairState, u64> = HashMap::new();
    let mut hits = RunningStats::new();
    for_each_trial(
        trials,
        seed,
        |s| Ok(run_pair(&table, t, start, s)),
        |end| {
            hits.push(if end.0 == end.1 { 1.0 } else { 0.0 });
            *occupancy.entry(end).or_insert(0) += 1;
        },
    )?;
    Ok(PairReport { d: dim, t, trials, coincidence: hits.mean(), coincidence_se: hits.std_error(), occupancy })
}

#[derive(Debug, Clone, Serialize)]
pub struct SecondMomentCell {
    pub v: String,
    pub w: String,
    pub field_mean: f64,
    pub field_se: f64,
    pub pair_mean: f64,
    pub pair_se: f64,
    /// `|field - pair|` over the joint standard error.
    pub z: f64,
}

/// `E[eta_t^v eta_t^w]` from field simulations against `Pr(W~_t = (v, w))`
/// from pair simulations, both from a point mass at the origin, for `v, w`
/// on the first axis within `half_width` of the origin.
///
/// The pair rates are symmetric, so `Pr_(v,w)(W~_t = (0,0))`, which is the
/// dual expression for the second moment, equals `Pr_(0,0)(W~_t = (v,w))`.
pub fn compare_second_moments(
    config: &SimConfig,
    field_trials: usize,
    pair_trials: usize,
    half_width: i64,
) -> Result<Vec<SecondMomentCell>, SimError> {
    let dim = config.dim;
    let o = LatticePoint::origin(dim);
    let axis: Vec<LatticePoint> = (-half_width..=half_width)
        .map(|k| {
            let mut c = vec![0; dim];
            c[0] = k;
            LatticePoint::new(c).expect("dim >= 1")
        })
        .collect();
    let lattice = config.lattice()?;
    let idx: Vec<usize> = axis.iter().map(|p| lattice.to_index(p).expect("axis inside torus")).collect();
    let m = axis.len();
    let mut stats = vec![RunningStats::new(); m * m];
    for_each_trial(
        field_trials,
        config.seed,
        |s| {
            let f = simulate::<f64>(&config.with_seed(s))?;
            let vals = f.values();
            Ok(idx.iter().flat_map(|&i| idx.iter().map(move |&j| vals[i] * vals[j])).collect::<Vec<_>>())
        },
        |prods| stats.iter_mut().zip(prods).for_each(|(s, p)| s.push(p)),
    )?;
    let pair = coupled_pair_mc(dim, config.t, &(o.clone(), o), pair_trials, config.seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let mut cells = Vec::with_capacity(m * m);
    for (a, v) in axis.iter().enumerate() {
        for (b, w) in axis.iter().enumerate() {
            let s = &stats[a * m + b];
            let (pm, pse) = pair.occupancy_of(v, w);
            let se = (s.std_error().powi(2) + pse.powi(2)).sqrt();
            let diff = (s.mean() - pm).abs();
            let z = if se > 0.0 { diff / se } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
            cells.push(SecondMomentCell {
                v: v.to_string(),
                w: w.to_string(),
                field_mean: s.mean(),
                field_se: s.std_error(),
                pair_mean: pm,
                pair_se: pse,
                z,
            });
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::unit_vectors;
    use crate::walk::{avg_difference_kernel, poissonized_return, return_sequence};

    fn pt(c: &[i64]) -> LatticePoint {
        LatticePoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn zero_time_stays_put() {
        let s = (pt(&[2]), pt(&[2]));
        let r = coupled_pair_mc(1, 0.0, &s, 1000, 1).unwrap();
        assert_eq!(r.coincidence, 1.0);
        assert!(coupled_pair_mc(1, 1.0, &s, 999, 1).is_err());
    }

    #[test]
    fn pair_rates_are_symmetric() {
        for d in 1..=2 {
            let table = coupled_pair_rates(d);
            let o = LatticePoint::origin(d);
            let mut states = vec![(o.clone(), o.clone())];
            for e in unit_vectors(d) {
                states.push((o.clone(), e.clone()));
                states.push((e.clone(), e.clone()));
                states.push((&e + &e, o.clone()));
            }
            for s in &states {
                for (to, r) in table.transitions(s) {
                    let back: Vec<_> = table.transitions(&to).into_iter().filter(|(x, _)| x == s).collect();
                    assert_eq!(back.len(), 1, "{s:?} -> {to:?}");
                    assert_eq!(back[0].1, r);
                }
            }
        }
    }

    #[test]
    fn coincidence_matches_difference_walk() {
        let o = pt(&[0]);
        let r = coupled_pair_mc(1, 8.0, &(o.clone(), o), 20_000, 5).unwrap();
        let seq = return_sequence(&avg_difference_kernel(1), 80).unwrap();
        let oracle = poissonized_return(&seq, 1.0, 8.0, 1e-15).unwrap().value;
        assert!((r.coincidence - oracle).abs() <= 4.0 * r.coincidence_se, "{} vs {oracle}", r.coincidence);
    }

    #[test]
    fn second_moments_match_pair_occupancy() {
        let cfg = SimConfig::point(1, 4.0, 17);
        let cells = compare_second_moments(&cfg, 4000, 20_000, 2).unwrap();
        assert_eq!(cells.len(), 25);
        let bad: Vec<_> = cells.iter().filter(|c| c.z > 4.0).collect();
        assert!(bad.is_empty(), "{bad:?}");
    }
}
