//! Exact power series, the generating-function relations between the two
//! walks, and their asymptotic consequences.

pub mod asymptotics;
pub mod identities;
pub mod rational;

pub use asymptotics::{
    alpha_d, alpha_from_sequence, asymptotics_check, llt_scale, srw_llt_ratio, AlphaEstimate, AsymptoticConstants,
    AsymptoticRow, Interval,
};
pub use identities::{
    central_binomial_ratio, check_relations, potlach_residual, verify_closed_form_d1, verify_gf_relations,
    verify_first_passage_structure, verify_potlach_relation, GfReport,
    StructureCheck, GreenFunctions, IdentityCheck, WalkSequences,
};
pub use rational::{series_from_sequence, RationalSeries};
