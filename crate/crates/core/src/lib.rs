//! No-U-turn sampling with locally adaptive step size.
//!
//! This crate implements NUTS as a Gibbs self-tuning (GIST) sampler: the
//! doubling directions, the orbit endpoints and the selected leapfrog index
//! are treated as auxiliary variables with an explicit conditional law, so
//! the step size can be refreshed per transition alongside them. A coarse
//! step size `h` stays fixed; each transition searches for a reduction
//! exponent `k` and integrates every coarse step with `2^k` fine leapfrog
//! steps of size `h / 2^k`. A Metropolis-within-Gibbs accept/reject step on
//! `k` restores exact reversibility.
//!
//! The crate is organised around four layers:
//!
//! * [`model`] — target distributions via potential energy and gradient
//!   (standard normal and the funnel benchmark are shipped),
//! * [`integrator`] — the leapfrog integrator with running energy extrema,
//! * [`orbit`] — orbit selection by random doubling, U-turn and sub-U-turn
//!   indicators, Boltzmann index selection and the direction-string
//!   combinatorics needed for reversibility,
//! * [`sampler`] — the fixed-step and step-size-adaptive transition kernels
//!   plus a deterministic single-chain runner.
//!
//! Everything is deterministic given a seed; the RNG consumption order per
//! transition is documented in [`sampler`]. The crate is `no_std`-compatible
//! (with `alloc`) when built without the default `std` feature.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod integrator;
mod math;
pub mod model;
pub mod orbit;
pub mod sampler;

pub use integrator::{leapfrog, leapfrog_refined, LeapfrogResult};
pub use model::{hamiltonian, BuiltinModel, Funnel, Model, PhasePoint, StdNormal};
pub use orbit::{
    b_star, beta_string, index_selection, indicator_sub_u_turn, indicator_u_turn, orbit_endpoints,
    orbit_selection, DirectionString, IndexSelection, Orbit, UTurnCheck,
};
pub use sampler::{
    adapt_nuts_step, adapt_nuts_transition, involution, nuts_step, nuts_transition, run_chain,
    AdaptiveConfig, ChainRun, EnlargedState, Mode, SamplerConfig, StepReduction, TransitionRecord,
};
