//! Transition kernels and chain running.
//!
//! Two kernels are provided. [`nuts_step`] is the fixed-step no-U-turn
//! transition: refresh the momentum and the direction string, select an
//! orbit, draw an iterate with Boltzmann weights, and accept it
//! unconditionally. [`adapt_nuts_step`] additionally treats the step-size
//! reduction exponent `k` as an auxiliary variable: a search finds the
//! smallest `k` whose orbit keeps the energy gap within the acceptance
//! threshold, the used `k` is drawn uniformly from the three-point window
//! around the search result, and a Metropolis-within-Gibbs step accepts the
//! proposal exactly when the sampled `k` also lies in the window of the
//! search rerun from the proposal. The rerun uses the reconstructed
//! direction string from [`b_star`], which grows the shifted orbit from the
//! proposal; this makes the enlarged-space map [`involution`] self-inverse
//! and the kernel reversible.
//!
//! Randomness per transition is consumed in a fixed order so runs are
//! reproducible given a seed:
//!
//! 1. `d` standard normal draws for the momentum,
//! 2. `M` booleans for the direction string,
//! 3. (adaptive only) one integer in `{0, 1, 2}` for the window draw,
//! 4. one uniform per orbit index after the first for index selection.
//!
//! Step-reduction searches consume no randomness, and rejected transitions
//! consume exactly the same stream as accepted ones.

use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::integrator::leapfrog_refined;
use crate::math;
use crate::model::{Model, PhasePoint};
use crate::orbit::{b_star, index_selection, orbit_selection, DirectionString, Orbit};

/// Configuration of the step-size-adaptive kernel.
#[derive(Clone, Copy, Debug)]
pub struct AdaptiveConfig {
    /// Coarse step size `h`; the orbit lives on the grid it defines.
    pub step_size: f64,
    /// At most `2^max_doublings` states per orbit.
    pub max_doublings: u32,
    /// Threshold `a_min` on `exp(-gap)` used by the step-reduction search.
    pub accept_threshold: f64,
    /// Cap on the searched reduction exponent. A capped search flags the
    /// transition and the chain treats it as a rejection.
    pub max_halvings: u32,
}

impl AdaptiveConfig {
    /// Uses the default search cap of 10 (finest step `h / 1024`).
    pub fn new(step_size: f64, max_doublings: u32, accept_threshold: f64) -> Self {
        Self {
            step_size,
            max_doublings,
            accept_threshold,
            max_halvings: 10,
        }
    }

    fn validate(&self) {
        assert!(self.step_size > 0.0, "step size must be positive");
        assert!(
            self.accept_threshold > 0.0 && self.accept_threshold < 1.0,
            "acceptance threshold must lie in (0, 1)"
        );
        assert!(self.max_halvings >= 1, "search cap must be at least 1");
        // The sampled exponent can exceed the search cap by one; orbit legs
        // must stay under the integrator's per-call fine-step cap.
        assert!(
            self.max_doublings + self.max_halvings <= 21,
            "max_doublings + max_halvings must not exceed 21"
        );
    }
}

/// Result of the step-reduction search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepReduction {
    /// Smallest exponent whose orbit met the threshold, or the cap.
    pub halvings: u32,
    /// Set when no exponent up to the cap met the threshold.
    pub capped: bool,
}

/// Finds the smallest `k >= 1` such that the orbit grown from `z` with
/// `2^k` fine steps per coarse step keeps `exp(-gap)` at or above the
/// threshold. Returns the cap, flagged, when no such `k` exists up to it.
pub fn step_reduction<M: Model + ?Sized>(
    model: &M,
    z: &PhasePoint,
    dirs: &DirectionString,
    step_size: f64,
    accept_threshold: f64,
    max_halvings: u32,
) -> StepReduction {
    for halvings in 1..=max_halvings {
        let orbit = orbit_selection(model, z, dirs, step_size, 1 << halvings);
        if math::exp(-orbit.energy_gap) >= accept_threshold {
            return StepReduction {
                halvings,
                capped: false,
            };
        }
    }
    StepReduction {
        halvings: max_halvings,
        capped: true,
    }
}

/// Everything recorded about one transition.
#[derive(Clone, Debug)]
pub struct TransitionRecord {
    /// The next chain position.
    pub position: Vec<f64>,
    /// False only for rejected adaptive transitions.
    pub accepted: bool,
    /// Fine-step refinement factor the orbit was integrated with.
    pub refinement: u32,
    /// Sampled reduction exponent (adaptive mode).
    pub k_used: Option<u32>,
    /// Step-reduction search at the initial point (adaptive mode).
    pub k_init: Option<StepReduction>,
    /// Search rerun at the proposal; `None` when it was skipped because the
    /// initial search already capped out.
    pub k_proposal: Option<StepReduction>,
    /// Accepted doublings of the selected orbit.
    pub doublings: u32,
    /// Number of states in the selected orbit.
    pub orbit_len: u64,
    /// Energy gap accumulated during orbit selection.
    pub energy_gap: f64,
    /// Selected leapfrog index.
    pub index: i64,
}

/// The auxiliary variables of one adaptive transition: the refreshed phase
/// point together with `(k, B, ell, a, b, L)`.
#[derive(Clone, Debug)]
pub struct EnlargedState {
    pub point: PhasePoint,
    pub k: u32,
    pub dirs: DirectionString,
    pub doublings: u32,
    pub a: i64,
    pub b: i64,
    pub index: i64,
}

/// The enlarged-space map underlying the adaptive kernel's accept/reject
/// step: move the phase point `index` coarse steps along the fine flow, keep
/// `k`, reconstruct the direction string with [`b_star`], shift the
/// endpoints and negate the index. Applying it twice is the identity, up to
/// integrator round-off in the phase point.
pub fn involution<M: Model + ?Sized>(
    model: &M,
    state: &EnlargedState,
    step_size: f64,
) -> EnlargedState {
    let refinement = 1u32 << state.k;
    let point = leapfrog_refined(model, &state.point, state.index, step_size, refinement).endpoint;
    EnlargedState {
        point,
        k: state.k,
        dirs: b_star(state.index, state.a, state.b, &state.dirs),
        doublings: state.doublings,
        a: state.a - state.index,
        b: state.b - state.index,
        index: -state.index,
    }
}

/// One fixed-step NUTS transition, returning the full record.
pub fn nuts_transition<M: Model + ?Sized, R: Rng + ?Sized>(
    model: &M,
    position: &[f64],
    step_size: f64,
    refinement: u32,
    max_doublings: u32,
    rng: &mut R,
) -> TransitionRecord {
    assert!(step_size > 0.0, "step size must be positive");
    assert!(refinement >= 1, "refinement must be at least 1");
    let z = PhasePoint::new(position.to_vec(), draw_momentum(model.dim(), rng));
    let dirs = DirectionString::random(max_doublings as usize, rng);
    let orbit = orbit_selection(model, &z, &dirs, step_size, refinement);
    let sel = index_selection(model, &z, orbit.a, orbit.b, step_size, refinement, rng);
    TransitionRecord {
        position: sel.endpoint.position,
        accepted: true,
        refinement,
        k_used: None,
        k_init: None,
        k_proposal: None,
        doublings: orbit.doublings,
        orbit_len: orbit.len(),
        energy_gap: orbit.energy_gap,
        index: sel.index,
    }
}

/// One fixed-step NUTS transition. The proposal is always accepted.
pub fn nuts_step<M: Model + ?Sized, R: Rng + ?Sized>(
    model: &M,
    position: &[f64],
    step_size: f64,
    refinement: u32,
    max_doublings: u32,
    rng: &mut R,
) -> Vec<f64> {
    nuts_transition(model, position, step_size, refinement, max_doublings, rng).position
}

/// A transition record together with the auxiliary variables that produced
/// it, as needed by reversibility checks.
#[derive(Clone, Debug)]
pub struct AdaptiveOutcome {
    pub record: TransitionRecord,
    pub state: EnlargedState,
}

/// One step-size-adaptive transition, returning the record plus the drawn
/// enlarged-space state.
pub fn adapt_nuts_transition<M: Model + ?Sized, R: Rng + ?Sized>(
    model: &M,
    position: &[f64],
    cfg: &AdaptiveConfig,
    rng: &mut R,
) -> AdaptiveOutcome {
    cfg.validate();
    let z = PhasePoint::new(position.to_vec(), draw_momentum(model.dim(), rng));
    let dirs = DirectionString::random(cfg.max_doublings as usize, rng);

    let init_search = step_reduction(
        model,
        &z,
        &dirs,
        cfg.step_size,
        cfg.accept_threshold,
        cfg.max_halvings,
    );
    // Window draw around the search result; k = 0 means a single coarse step.
    let k = init_search.halvings + rng.gen_range(0..3u32) - 1;
    let refinement = 1u32 << k;

    let orbit = orbit_selection(model, &z, &dirs, cfg.step_size, refinement);
    let sel = index_selection(model, &z, orbit.a, orbit.b, cfg.step_size, refinement, rng);
    let state = EnlargedState {
        point: z,
        k,
        dirs: dirs.clone(),
        doublings: orbit.doublings,
        a: orbit.a,
        b: orbit.b,
        index: sel.index,
    };

    if init_search.capped {
        // The conditional law of k is undefined past the cap; treat the
        // transition as rejected. The randomness above was already consumed,
        // so the stream stays aligned with the accepting path.
        return AdaptiveOutcome {
            record: rejected_record(
                position,
                refinement,
                k,
                init_search,
                None,
                &orbit,
                sel.index,
            ),
            state,
        };
    }

    let proposal_dirs = b_star(sel.index, orbit.a, orbit.b, &dirs);
    let proposal_search = step_reduction(
        model,
        &sel.endpoint,
        &proposal_dirs,
        cfg.step_size,
        cfg.accept_threshold,
        cfg.max_halvings,
    );

    // Metropolis-within-Gibbs on k: the density ratio of the three-point
    // window laws is 1 when the sampled k lies in the proposal's window and
    // 0 otherwise.
    let forward = window_density(k, init_search);
    let reverse = window_density(k, proposal_search);
    debug_assert!(forward > 0.0);
    let accepted = reverse > 0.0;
    assert_eq!(
        accepted,
        !proposal_search.capped && (k as i64 - proposal_search.halvings as i64).unsigned_abs() <= 1,
        "acceptance must match the window-overlap form"
    );

    let record = TransitionRecord {
        position: if accepted {
            sel.endpoint.position
        } else {
            position.to_vec()
        },
        accepted,
        refinement,
        k_used: Some(k),
        k_init: Some(init_search),
        k_proposal: Some(proposal_search),
        doublings: orbit.doublings,
        orbit_len: orbit.len(),
        energy_gap: orbit.energy_gap,
        index: sel.index,
    };
    AdaptiveOutcome { record, state }
}

/// One step-size-adaptive transition; on rejection the position is
/// unchanged.
pub fn adapt_nuts_step<M: Model + ?Sized, R: Rng + ?Sized>(
    model: &M,
    position: &[f64],
    cfg: &AdaptiveConfig,
    rng: &mut R,
) -> TransitionRecord {
    adapt_nuts_transition(model, position, cfg, rng).record
}

fn window_density(k: u32, search: StepReduction) -> f64 {
    if search.capped {
        return 0.0;
    }
    if (k as i64 - search.halvings as i64).unsigned_abs() <= 1 {
        1.0 / 3.0
    } else {
        0.0
    }
}

fn rejected_record(
    position: &[f64],
    refinement: u32,
    k: u32,
    init_search: StepReduction,
    proposal_search: Option<StepReduction>,
    orbit: &Orbit,
    index: i64,
) -> TransitionRecord {
    TransitionRecord {
        position: position.to_vec(),
        accepted: false,
        refinement,
        k_used: Some(k),
        k_init: Some(init_search),
        k_proposal: proposal_search,
        doublings: orbit.doublings,
        orbit_len: orbit.len(),
        energy_gap: orbit.energy_gap,
        index,
    }
}

fn draw_momentum<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Which transition kernel a chain runs.
#[derive(Clone, Copy, Debug)]
pub enum Mode {
    /// Fixed-step NUTS with the given refinement factor.
    Fixed { refinement: u32 },
    /// Step-size-adaptive NUTS.
    Adaptive {
        accept_threshold: f64,
        max_halvings: u32,
    },
}

/// Full configuration of a chain.
#[derive(Clone, Copy, Debug)]
pub struct SamplerConfig {
    pub step_size: f64,
    pub max_doublings: u32,
    pub mode: Mode,
}

impl SamplerConfig {
    pub fn adaptive_config(&self) -> Option<AdaptiveConfig> {
        match self.mode {
            Mode::Adaptive {
                accept_threshold,
                max_halvings,
            } => Some(AdaptiveConfig {
                step_size: self.step_size,
                max_doublings: self.max_doublings,
                accept_threshold,
                max_halvings,
            }),
            Mode::Fixed { .. } => None,
        }
    }
}

/// All records of one chain, in draw order.
#[derive(Clone, Debug)]
pub struct ChainRun {
    pub records: Vec<TransitionRecord>,
}

impl ChainRun {
    /// The draw matrix, one row per transition.
    pub fn draws(&self) -> impl Iterator<Item = &[f64]> {
        self.records.iter().map(|r| r.position.as_slice())
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.records.is_empty() {
            return f64::NAN;
        }
        self.records.iter().filter(|r| r.accepted).count() as f64 / self.records.len() as f64
    }
}

/// The RNG used by chains: chain `chain_index` of a run seeded with `seed`
/// uses the ChaCha8 stream with that index.
pub fn chain_rng(seed: u64, chain_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain_index);
    rng
}

/// Runs one chain of `n_draws` transitions from `initial`.
///
/// Deterministic given `(seed, chain_index)`; see [`chain_rng`] for the
/// splitting rule.
pub fn run_chain<M: Model + ?Sized>(
    model: &M,
    config: &SamplerConfig,
    initial: &[f64],
    n_draws: usize,
    seed: u64,
    chain_index: u64,
) -> ChainRun {
    assert!(n_draws >= 1, "need at least one draw");
    assert_eq!(
        initial.len(),
        model.dim(),
        "initial position dimension mismatch"
    );
    let mut rng = chain_rng(seed, chain_index);
    let mut position = initial.to_vec();
    let mut records = Vec::with_capacity(n_draws);
    match config.mode {
        Mode::Fixed { refinement } => {
            for _ in 0..n_draws {
                let record = nuts_transition(
                    model,
                    &position,
                    config.step_size,
                    refinement,
                    config.max_doublings,
                    &mut rng,
                );
                position.copy_from_slice(&record.position);
                records.push(record);
            }
        }
        Mode::Adaptive { .. } => {
            let cfg = config.adaptive_config().unwrap();
            for _ in 0..n_draws {
                let record = adapt_nuts_step(model, &position, &cfg, &mut rng);
                position.copy_from_slice(&record.position);
                records.push(record);
            }
        }
    }
    ChainRun { records }
}
