//! Simulation and exact verification of the averaging process on `Z^d`.
//!
//! The crate is organised bottom-up: [`lattice`] geometry, [`walk`] kernels
//! and dynamic programming for the difference walk, [`series`] for exact
//! generating-function checks and asymptotics, and [`sim`] for Monte Carlo
//! runs of the mass-redistribution dynamics.

pub mod error;
pub mod lattice;
pub mod series;
pub mod sim;
pub mod stats;
pub mod walk;

pub use error::{LatticeError, SeriesError, SimError, WalkError};
pub use lattice::{LatticeBox, LatticePoint, Topology};

/// Runs two closures, in parallel when the `parallel` feature is enabled.
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    {
        rayon::join(a, b)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (a(), b())
    }
}
