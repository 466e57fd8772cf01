//! Monte Carlo simulation of the averaging and potlach dynamics on a torus.

pub mod estimate;
pub mod field;
pub mod pair;
pub mod run;

pub use estimate::{
    clt_statistic, estimate_clt, estimate_mean_field, estimate_moments, expected_field, expected_mean_field,
    for_each_trial, CltReport, Estimator, MeanFieldReport, StatRecord, TestFunction,
};
pub use field::{FieldValue, InitialCondition, MassField};
pub use pair::{compare_second_moments, coupled_pair_mc, run_pair, PairReport, SecondMomentCell};
pub use run::{default_radius, simulate, simulate_with, torus_edges, Dynamics, EventSchedule, SimConfig};
