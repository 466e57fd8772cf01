//! Difference-walk kernels, exact and floating dynamic programming, taboo
//! sequences and Poissonization.

pub mod dp;
pub mod kernel;
pub mod poisson;
pub mod sequences;

pub use dp::{dp_distribution, exact_radius, float_radius, DistValues, DistVector, DpState, Mode};
pub use kernel::{
    avg_difference_kernel, coupled_pair_rates, potlach_kernels, srw_kernel, KernelKind, PairRateTable,
    PairState, TransitionKernel,
};
pub use poisson::{
    heat_kernel, poissonized, poissonized_distribution, poissonized_return, poissonized_return_float, required_steps,
    Certified, PoissonWeights, DEFAULT_TAIL_TOL,
};
pub use sequences::{
    first_passage_sequences, return_sequence, return_sequence_float, FirstPassage, FloatSequence,
    SequenceName, SequenceTable,
};
