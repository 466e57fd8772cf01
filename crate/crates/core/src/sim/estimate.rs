//! Monte Carlo estimators over independent trials, compared against the
//! exact heat kernel and the difference-walk return probabilities.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::lattice::{LatticeBox, LatticePoint};
use crate::sim::field::{InitialCondition, MassField};
use crate::sim::run::{simulate, SimConfig};
use crate::stats::{trial_seed, RunningStats};
use crate::walk::heat_kernel;

const BATCH: usize = 256;

/// Runs `trials` independent simulations with seeds split from `master`, and
/// feeds the results to `sink` in trial order. Batches run in parallel when
/// the `parallel` feature is on; the aggregate does not depend on threading.
pub fn for_each_trial<R: Send>(
    trials: usize,
    master: u64,
    run: impl Fn(u64) -> Result<R, SimError> + Sync,
    mut sink: impl FnMut(R),
) -> Result<(), SimError> {
    let mut start = 0;
    while start < trials {
        let end = (start + BATCH).min(trials);
        let results: Vec<Result<R, SimError>> = {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                (start..end).into_par_iter().map(|i| run(trial_seed(master, i as u64))).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                (start..end).map(|i| run(trial_seed(master, i as u64))).collect()
            }
        };
        for r in results {
            sink(r?);
        }
        start = end;
    }
    Ok(())
}

fn require_trials(trials: usize, required: usize) -> Result<(), SimError> {
    if trials < required {
        return Err(SimError::TooFewTrials { required, got: trials });
    }
    Ok(())
}

/// `E eta_t` for the configured dynamics. Dual walks of the averaging process
/// jump at rate 1/2, those of potlach at rate 1, so potlach uses `h_{2t}`.
pub fn expected_mean_field(config: &SimConfig, lattice: &LatticeBox) -> Result<Vec<f64>, SimError> {
    let heat_time = config.t * config.dynamics.max_walk_rate() / 0.5;
    expected_field(lattice, &config.initial, heat_time)
}

/// `sum_x eta_0(x) h_t(x, .)` on the torus, from the DP heat kernel.
pub fn expected_field(lattice: &LatticeBox, initial: &InitialCondition, t: f64) -> Result<Vec<f64>, SimError> {
    let Some(atoms) = initial.atoms() else {
        return Ok(vec![1.0 / lattice.len() as f64; lattice.len()]);
    };
    let h = heat_kernel(lattice.dim(), t, &LatticePoint::origin(lattice.dim()), lattice)?.to_f64_vec();
    let mut out = vec![0.0; lattice.len()];
    for (x, m) in atoms {
        let shift = -&x;
        for (v, o) in out.iter_mut().enumerate() {
            let idx = lattice.translate(v, &shift).expect("torus translation is total");
            *o += m * h[idx];
        }
    }
    Ok(out)
}

/// Estimator names used in CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    L2NormSq,
    L2DevSq,
    L1Dev,
    CltStat,
    PairOccupancy,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::L2NormSq => "l2_norm_sq",
            Estimator::L2DevSq => "l2_dev_sq",
            Estimator::L1Dev => "l1_dev",
            Estimator::CltStat => "clt_stat",
            Estimator::PairOccupancy => "pair_occupancy",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One Monte Carlo mean with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRecord {
    pub d: usize,
    pub t: f64,
    pub trials: usize,
    pub estimator: Estimator,
    pub mean: f64,
    pub std_error: f64,
    pub seed: u64,
}

impl StatRecord {
    pub fn from_stats(config: &SimConfig, estimator: Estimator, stats: &RunningStats) -> Self {
        StatRecord {
            d: config.dim,
            t: config.t,
            trials: stats.count() as usize,
            estimator,
            mean: stats.mean(),
            std_error: stats.std_error(),
            seed: config.seed,
        }
    }

    /// `|mean - target|` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.mean - target).abs();
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub const CSV_HEADER: &'static str = "d,t,trials,estimator,mean,std_error,seed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:e},{:e},{}",
            self.d, self.t, self.trials, self.estimator, self.mean, self.std_error, self.seed
        )
    }
}

/// Per-site Monte Carlo means against the heat kernel.
#[derive(Debug, Clone)]
pub struct MeanFieldReport {
    pub lattice: LatticeBox,
    pub trials: usize,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub expected: Vec<f64>,
    /// Sites of `B(2 sqrt t)` compared.
    pub sites_checked: usize,
    /// Of those, sites with `|mean - h_t| <= 4 SE`.
    pub sites_within: usize,
}

impl MeanFieldReport {
    pub fn fraction_within(&self) -> f64 {
        self.sites_within as f64 / self.sites_checked.max(1) as f64
    }

    pub fn passes(&self) -> bool {
        self.fraction_within() >= 0.95
    }
}

/// Mean field over `trials` runs, checked at every site of the l1 ball of
/// radius `2 sqrt t`.
pub fn estimate_mean_field(config: &SimConfig, trials: usize) -> Result<MeanFieldReport, SimError> {
    require_trials(trials, 100)?;
    let lattice = config.lattice()?;
    let mut stats = vec![RunningStats::new(); lattice.len()];
    for_each_trial(
        trials,
        config.seed,
        |seed| Ok(simulate::<f64>(&config.with_seed(seed))?.to_f64_vec()),
        |field| stats.iter_mut().zip(field).for_each(|(s, v)| s.push(v)),
    )?;
    let expected = expected_mean_field(config, &lattice)?;
    let ball = 2.0 * config.t.sqrt();
    let (mut checked, mut within) = (0, 0);
    for (i, s) in stats.iter().enumerate() {
        if lattice.from_index(i).l1_norm() as f64 > ball {
            continue;
        }
        checked += 1;
        // rounding slack for sites that no trial reached
        if (s.mean() - expected[i]).abs() <= 4.0 * s.std_error() + 1e-12 {
            within += 1;
        }
    }
    Ok(MeanFieldReport {
        lattice,
        trials,
        mean: stats.iter().map(RunningStats::mean).collect(),
        std_error: stats.iter().map(RunningStats::std_error).collect(),
        expected,
        sites_checked: checked,
        sites_within: within,
    })
}

/// `E ||eta_t||^2`, `E ||eta_t - E eta_t||^2` and `E |eta_t - E eta_t|`, with
/// `E eta_t` taken from the heat kernel.
pub fn estimate_moments(config: &SimConfig, trials: usize) -> Result<Vec<StatRecord>, SimError> {
    require_trials(trials, 2)?;
    let lattice = config.lattice()?;
    let expected = expected_mean_field(config, &lattice)?;
    let mut stats = [RunningStats::new(), RunningStats::new(), RunningStats::new()];
    for_each_trial(
        trials,
        config.seed,
        |seed| {
            let f = simulate::<f64>(&config.with_seed(seed))?;
            Ok([f.l2_norm_sq(), f.l2_dist_sq(&expected), f.l1_dist(&expected)])
        },
        |vals| stats.iter_mut().zip(vals).for_each(|(s, v)| s.push(v)),
    )?;
    Ok([Estimator::L2NormSq, Estimator::L2DevSq, Estimator::L1Dev]
        .into_iter()
        .zip(&stats)
        .map(|(e, s)| StatRecord::from_stats(config, e, s))
        .collect())
}

/// Test functions with known integrals against the standard Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    One,
    /// `cos(a x_1)`.
    Cos(f64),
    /// `tanh(x_1)`, odd.
    Tanh,
    /// Logistic smoothing of the indicator of `|x|_2 <= radius` with width `width`.
    SmoothBall { radius: f64, width: f64 },
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            TestFunction::One => 1.0,
            TestFunction::Cos(a) => (a * x[0]).cos(),
            TestFunction::Tanh => x[0].tanh(),
            TestFunction::SmoothBall { radius, width } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                logistic((radius - r) / width)
            }
        }
    }

    /// Integral against the standard Gaussian on `R^d`.
    pub fn gaussian_integral(&self, dim: usize) -> f64 {
        match *self {
            TestFunction::One => 1.0,
            TestFunction::Cos(a) => (-a * a / 2.0).exp(),
            TestFunction::Tanh => 0.0,
            TestFunction::SmoothBall { radius, width } => {
                chi_quadrature(dim, |r| logistic((radius - r) / width))
            }
        }
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `E g(|Z|)` for standard Gaussian `Z` in `R^d`, by composite Simpson on [0, 12].
fn chi_quadrature(dim: usize, g: impl Fn(f64) -> f64) -> f64 {
    let k = dim as f64;
    let norm = 2f64.powf(k / 2.0 - 1.0) * crate::series::asymptotics::gamma_half(dim as i64);
    let density = |r: f64| r.powf(k - 1.0) * (-r * r / 2.0).exp() / norm;
    let (n, hi) = (4000, 12.0);
    let h = hi / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let r = i as f64 * h;
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * density(r) * g(r);
    }
    acc * h / 3.0
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::One => write!(f, "one"),
            TestFunction::Cos(a) => write!(f, "cos:{a}"),
            TestFunction::Tanh => write!(f, "tanh"),
            TestFunction::SmoothBall { radius, width } => write!(f, "ball:{radius}:{width}"),
        }
    }
}

impl FromStr for TestFunction {
    type Err = SimError;
    /// `one`, `cos`, `cos:<a>`, `tanh`, `ball`, `ball:<radius>:<width>`.
    fn from_str(s: &str) -> Result<Self, SimError> {
        let unknown = || SimError::UnknownFunction(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| p.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(unknown);
        match parts.as_slice() {
            ["one"] => Ok(TestFunction::One),
            ["cos"] => Ok(TestFunction::Cos(1.0)),
            ["cos", a] => Ok(TestFunction::Cos(num(a)?)),
            ["tanh"] => Ok(TestFunction::Tanh),
            ["ball"] => Ok(TestFunction::SmoothBall { radius: 1.0, width: 0.1 }),
            ["ball", r, w] => {
                let (radius, width) = (num(r)?, num(w)?);
                if width <= 0.0 {
                    return Err(unknown());
                }
                Ok(TestFunction::SmoothBall { radius, width })
            }
            _ => Err(unknown()),
        }
    }
}

/// `sum_x f(x / sqrt(t/2)) eta^x`, with `t` the field's time.
pub fn clt_statistic(field: &MassField, f: &TestFunction) -> f64 {
    let lattice = field.lattice();
    let scale = if field.time() > 0.0 { (field.time() / 2.0).sqrt() } else { 1.0 };
    let mut x = vec![0.0; lattice.dim()];
    let terms = field.values().iter().enumerate().filter(|(_, m)| **m != 0.0).map(|(i, m)| {
        for (xi, c) in x.iter_mut().zip(lattice.from_index(i).coords()) {
            *xi = *c as f64 / scale;
        }
        f.eval(&x) * m
    });
    crate::stats::neumaier_sum(terms.collect::<Vec<_>>())
}

/// Per-trial CLT statistics.
#[derive(Debug, Clone, Serialize)]
pub struct CltReport {
    pub d: usize,
    pub t: f64,
    pub function: String,
    pub gaussian_integral: f64,
    pub values: Vec<f64>,
    pub mean: f64,
    pub std_dev: f64,
}

impl CltReport {
    /// Fraction of trials with `|statistic - integral| <= tol`.
    pub fn fraction_within(&self, tol: f64) -> f64 {
        let n = self.values.iter().filter(|v| (*v - self.gaussian_integral).abs() <= tol).count();
        n as f64 / self.values.len().max(1) as f64
    }

    pub fn record(&self, seed: u64) -> StatRecord {
        StatRecord {
            d: self.d,
            t: self.t,
            trials: self.values.len(),
            estimator: Estimator::CltStat,
            mean: self.mean,
            std_error: self.std_dev / (self.values.len() as f64).sqrt(),
            seed,
        }
    }
}

pub fn estimate_clt(config: &SimConfig, f: &TestFunction, trials: usize) -> Result<CltReport, SimError> {
    require_trials(trials, 2)?;
    let mut values = Vec::with_capacity(trials);
    for_each_trial(
        trials,
        config.seed,
        |seed| Ok(clt_statistic(&simulate::<f64>(&config.with_seed(seed))?, f)),
        |v| values.push(v),
    )?;
    let stats: RunningStats = values.iter().copied().collect();
    Ok(CltReport {
        d: config.dim,
        t: config.t,
        function: f.to_string(),
        gaussian_integral: f.gaussian_integral(config.dim),
        mean: stats.mean(),
        std_dev: stats.std_dev(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::run::Dynamics;
    use crate::walk::{avg_difference_kernel, poissonized_return_float, return_sequence_float};

    #[test]
    fn trial_results_do_not_depend_on_batching() {
        let mut a = Vec::new();
        for_each_trial(600, 9, |s| Ok(s), |s| a.push(s)).unwrap();
        let b: Vec<u64> = (0..600).map(|i| trial_seed(9, i)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn mean_field_matches_heat_kernel() {
        let cfg = SimConfig::point(1, 16.0, 1);
        let report = estimate_mean_field(&cfg, 2000).unwrap();
        assert!(report.passes(), "{} of {}", report.sites_within, report.sites_checked);
        let o = report.lattice.to_index(&LatticePoint::origin(1)).unwrap();
        assert!((report.mean[o] - report.expected[o]).abs() <= 4.0 * report.std_error[o]);
        // x and -x agree within noise
        for x in 1..6 {
            let i = report.lattice.to_index(&LatticePoint::new(vec![x]).unwrap()).unwrap();
            let j = report.lattice.to_index(&LatticePoint::new(vec![-x]).unwrap()).unwrap();
            let se = (report.std_error[i].powi(2) + report.std_error[j].powi(2)).sqrt();
            assert!((report.mean[i] - report.mean[j]).abs() <= 5.0 * se + 1e-12);
        }
    }

    #[test]
    fn mean_field_at_time_zero_is_exact() {
        let report = estimate_mean_field(&SimConfig::point(2, 0.0, 1), 100).unwrap();
        assert_eq!(report.mean, report.expected);
        assert!(estimate_mean_field(&SimConfig::point(2, 0.0, 1), 99).is_err());
    }

    #[test]
    fn second_moment_matches_difference_walk() {
        let cfg = SimConfig::point(1, 16.0, 2);
        let recs = estimate_moments(&cfg, 3000).unwrap();
        let pt = return_sequence_float(&avg_difference_kernel(1), 200, 1e-15).unwrap();
        let oracle = poissonized_return_float(&pt, 1.0, 16.0, 1e-15).unwrap().value;
        let l2 = recs.iter().find(|r| r.estimator == Estimator::L2NormSq).unwrap();
        assert!(l2.z_score(oracle) <= 4.0, "{} vs {oracle}", l2.mean);
        assert!(recs.iter().all(|r| r.trials == 3000));
        let l1 = recs.iter().find(|r| r.estimator == Estimator::L1Dev).unwrap();
        assert!(l1.mean <= 2.0);
    }

    #[test]
    fn test_function_integrals() {
        assert!((TestFunction::Cos(1.0).gaussian_integral(1) - (-0.5f64).exp()).abs() < 1e-15);
        // smoothed ball with a tiny width approaches Pr(|Z| <= 1) = erf(1/sqrt 2)
        let ball = TestFunction::SmoothBall { radius: 1.0, width: 1e-3 };
        assert!((ball.gaussian_integral(1) - 0.682_689_492_137_086).abs() < 1e-4);
        // Pr(|Z|^2 <= 1) for d = 2 is 1 - e^{-1/2}
        assert!((ball.gaussian_integral(2) - (1.0 - (-0.5f64).exp())).abs() < 1e-4);
        assert!((TestFunction::One.gaussian_integral(3) - 1.0).abs() < 1e-15);
        assert!((chi_quadrature(3, |_| 1.0) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn test_function_parsing() {
        assert_eq!("cos:2".parse::<TestFunction>().unwrap(), TestFunction::Cos(2.0));
        assert_eq!("one".parse::<TestFunction>().unwrap(), TestFunction::One);
        let f: TestFunction = "ball:1.5:0.2".parse().unwrap();
        assert_eq!(f.to_string().parse::<TestFunction>().unwrap(), f);
        assert!(matches!("sin".parse::<TestFunction>(), Err(SimError::UnknownFunction(_))));
        assert!("ball:1:0".parse::<TestFunction>().is_err());
    }

    #[test]
    fn clt_constant_function_is_total_mass() {
        let f: MassField = simulate(&SimConfig::point(2, 9.0, 4)).unwrap();
        assert!((clt_statistic(&f, &TestFunction::One) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clt_odd_function_averages_to_zero() {
        let cfg = SimConfig::point(1, 50.0, 8);
        let r = estimate_clt(&cfg, &TestFunction::Tanh, 400).unwrap();
        assert!(r.mean.abs() <= 4.0 * r.std_dev / 20.0 + 1e-12, "{}", r.mean);
    }

    #[test]
    fn general_initial_condition_expected_field() {
        let b = LatticeBox::torus(1, 30).unwrap();
        let p = |x| LatticePoint::new(vec![x]).unwrap();
        let init = InitialCondition::Distribution(vec![(p(-2), 0.25), (p(3), 0.75)]);
        let e = expected_field(&b, &init, 5.0).unwrap();
        assert!((e.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let h = heat_kernel(1, 5.0, &p(0), &b).unwrap();
        let i = b.to_index(&p(0)).unwrap();
        let expect = 0.25 * h.at(&p(2)) + 0.75 * h.at(&p(-3));
        assert!((e[i] - expect).abs() < 1e-15);
    }

    #[test]
    fn potlach_mean_field_is_rate_one_walk() {
        // each potlach dual walk jumps at rate 1, so E eta_t is h_{2t}
        let cfg = SimConfig { dynamics: Dynamics::Potlach, ..SimConfig::point(1, 4.0, 3) };
        let report = estimate_mean_field(&cfg, 2000).unwrap();
        assert!(report.passes(), "{} of {}", report.sites_within, report.sites_checked);
        let slow = expected_field(&report.lattice, &cfg.initial, 8.0).unwrap();
        assert_eq!(report.expected, slow);
    }
}
