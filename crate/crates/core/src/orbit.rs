//! Orbit selection by random doubling and leapfrog index selection.
//!
//! An orbit is a set of consecutive leapfrog indices `[a:b]` with
//! `a <= 0 <= b`, grown by repeated doubling: doubling `i` proposes an
//! adjacent block of size `2^(i-1)` before (`B_i = 1`) or after (`B_i = 0`)
//! the current orbit. Doubling stops before the first extension whose
//! acceptance would create a U-turn on the current orbit or whose extension
//! contains a sub-U-turn. The next state is then drawn from the orbit's
//! iterates with Boltzmann weights `exp(-H)` in a single forward pass.
//!
//! Every coarse index `i` stands for `refinement` fine leapfrog steps of
//! size `step_size / refinement`; energy extrema always include the fine
//! gridpoints in between.
//!
//! [`orbit_selection`] caches the trajectory internally so each doubling
//! costs one block of integration plus dot products, but it is observably
//! identical (bit for bit) to re-deriving every check from the start state
//! with [`indicator_u_turn`] and [`indicator_sub_u_turn`]; the test suite
//! holds it to that.
//!
//! The direction-string utilities at the bottom ([`orbit_endpoints`],
//! [`beta_string`], [`b_star`]) tie an orbit back to the binary sequence
//! that produced it. They make it possible to reconstruct, for any selected
//! index `L`, the direction string under which the shifted start state
//! `Phi^(R L)(z)` grows exactly the shifted orbit `[a-L : b-L]`. That
//! reconstruction is what the step-size-adaptive sampler's accept/reject
//! step is built on.

use alloc::vec::Vec;

use rand::Rng;

use crate::integrator::leapfrog;
use crate::math;
use crate::model::{hamiltonian, Model, PhasePoint};

/// The binary sequence of potential doubling directions, of fixed length
/// `M`. Bit `i` (0-based) steers doubling `i + 1`: `true` grows the orbit
/// backward in time, `false` forward.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectionString {
    bits: Vec<bool>,
}

impl DirectionString {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Draws a uniformly random string of the given length, consuming one
    /// boolean per bit.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self {
            bits: (0..len).map(|_| rng.gen()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// 0-based access; `bit(i)` steers doubling `i + 1`.
    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn as_bits(&self) -> &[bool] {
        &self.bits
    }
}

/// A selected orbit: endpoints, number of accepted doublings and the energy
/// gap `H_max - H_min` accumulated over the doubling procedure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Orbit {
    pub a: i64,
    pub b: i64,
    /// Number of accepted doublings; the orbit holds `2^doublings` states.
    pub doublings: u32,
    /// `+inf` when the trajectory diverged during selection.
    pub energy_gap: f64,
}

#[allow(clippy::len_without_is_empty)] // an orbit always holds the start state
impl Orbit {
    pub fn len(&self) -> u64 {
        (self.b - self.a + 1) as u64
    }
}

/// Result of a U-turn check: the indicator plus the energy extrema gathered
/// over both integration legs.
#[derive(Clone, Copy, Debug)]
pub struct UTurnCheck {
    pub turning: bool,
    pub h_max: f64,
    pub h_min: f64,
}

/// The U-turn condition on endpoint states: the momentum at either endpoint
/// opposes the displacement between them.
#[inline]
fn turned(minus: &PhasePoint, plus: &PhasePoint) -> bool {
    let mut dot_plus = 0.0;
    let mut dot_minus = 0.0;
    for i in 0..minus.dim() {
        let dx = plus.position[i] - minus.position[i];
        dot_plus += plus.momentum[i] * dx;
        dot_minus += minus.momentum[i] * dx;
    }
    dot_plus < 0.0 || dot_minus < 0.0
}

/// Checks whether the orbit `[a:b]` started from `z` has a U-turn, by
/// integrating from `z` to both endpoints.
///
/// Returns the indicator together with the merged energy extrema of both
/// legs. A divergence on either leg forces the indicator to 1 and reports
/// `h_max = +inf`.
pub fn indicator_u_turn<M: Model + ?Sized>(
    model: &M,
    a: i64,
    b: i64,
    z: &PhasePoint,
    step_size: f64,
    refinement: u32,
) -> UTurnCheck {
    assert!(a <= b, "interval endpoints out of order");
    let r = refinement as i64;
    let fine = step_size / refinement as f64;
    let leg_minus = leapfrog(model, z, r * a, fine);
    let leg_plus = leapfrog(model, z, r * b, fine);
    let h_max = leg_minus.h_max.max(leg_plus.h_max);
    let h_min = leg_minus.h_min.min(leg_plus.h_min);
    let turning = if leg_minus.divergent() || leg_plus.divergent() {
        true
    } else {
        turned(&leg_minus.endpoint, &leg_plus.endpoint)
    };
    UTurnCheck {
        turning,
        h_max,
        h_min,
    }
}

/// Checks recursively whether any node interval of the balanced binary tree
/// over `[a:b]` has a U-turn. A single-state interval has none.
pub fn indicator_sub_u_turn<M: Model + ?Sized>(
    model: &M,
    a: i64,
    b: i64,
    z: &PhasePoint,
    step_size: f64,
    refinement: u32,
) -> bool {
    assert!(
        (b - a + 1) as u64 > 0 && ((b - a + 1) as u64).is_power_of_two(),
        "interval length must be a power of two"
    );
    if a == b {
        return false;
    }
    let m = (a + b).div_euclid(2);
    let full = indicator_u_turn(model, a, b, z, step_size, refinement).turning;
    let left = indicator_sub_u_turn(model, a, m, z, step_size, refinement);
    let right = indicator_sub_u_turn(model, m + 1, b, z, step_size, refinement);
    full || left || right
}

/// One coarse state of the cached trajectory together with the energy
/// extrema of the fine segment joining it to its neighbour toward index 0.
struct CachedState {
    point: PhasePoint,
    seg_max: f64,
    seg_min: f64,
}

/// Leapfrog states at coarse indices around 0, grown lazily in both
/// directions. States are produced by exact composition of the fine-step
/// map, so they equal what integration from index 0 would give.
struct Trajectory<'a, M: Model + ?Sized> {
    model: &'a M,
    fine_step: f64,
    refinement: i64,
    origin: PhasePoint,
    origin_energy: f64,
    forward: Vec<CachedState>,
    backward: Vec<CachedState>,
}

impl<'a, M: Model + ?Sized> Trajectory<'a, M> {
    fn new(model: &'a M, z: &PhasePoint, step_size: f64, refinement: u32) -> Self {
        Self {
            model,
            fine_step: step_size / refinement as f64,
            refinement: refinement as i64,
            origin: z.clone(),
            origin_energy: hamiltonian(model, z),
            forward: Vec::new(),
            backward: Vec::new(),
        }
    }

    fn point(&self, i: i64) -> &PhasePoint {
        if i == 0 {
            &self.origin
        } else if i > 0 {
            &self.forward[(i - 1) as usize].point
        } else {
            &self.backward[(-i - 1) as usize].point
        }
    }

    /// Extends the cache to cover `[lo, hi]`; false when the integration
    /// diverges before the range is covered.
    fn ensure(&mut self, lo: i64, hi: i64) -> bool {
        while (self.forward.len() as i64) < hi {
            let last = self.point(self.forward.len() as i64);
            let leg = leapfrog(self.model, last, self.refinement, self.fine_step);
            if leg.divergent() {
                return false;
            }
            self.forward.push(CachedState {
                point: leg.endpoint,
                seg_max: leg.h_max,
                seg_min: leg.h_min,
            });
        }
        while (self.backward.len() as i64) < -lo {
            let last = self.point(-(self.backward.len() as i64));
            let leg = leapfrog(self.model, last, -self.refinement, self.fine_step);
            if leg.divergent() {
                return false;
            }
            self.backward.push(CachedState {
                point: leg.endpoint,
                seg_max: leg.h_max,
                seg_min: leg.h_min,
            });
        }
        true
    }

    fn u_turn(&self, a: i64, b: i64) -> bool {
        turned(self.point(a), self.point(b))
    }

    /// Energy extrema over the two legs from index 0 out to `a` and `b`,
    /// fine gridpoints included. Requires `a <= 0 <= b` and a cache covering
    /// the range.
    fn leg_extrema(&self, a: i64, b: i64) -> (f64, f64) {
        let mut hi = self.origin_energy;
        let mut lo = self.origin_energy;
        for seg in &self.forward[..b as usize] {
            hi = hi.max(seg.seg_max);
            lo = lo.min(seg.seg_min);
        }
        for seg in &self.backward[..(-a) as usize] {
            hi = hi.max(seg.seg_max);
            lo = lo.min(seg.seg_min);
        }
        (hi, lo)
    }

    fn sub_u_turn(&self, a: i64, b: i64) -> bool {
        if a == b {
            return false;
        }
        let m = (a + b).div_euclid(2);
        self.u_turn(a, b) || self.sub_u_turn(a, m) || self.sub_u_turn(m + 1, b)
    }
}

/// Grows an orbit from `z` by up to `dirs.len()` doublings.
///
/// Doubling `i` proposes the adjacent block of size `2^(i-1)` on the side
/// given by `dirs.bit(i-1)`. The procedure stops before the first doubling
/// at which the current orbit has a U-turn or the proposed extension
/// contains a sub-U-turn. The reported energy gap is the difference of the
/// energy extrema accumulated over every U-turn check on the current orbit,
/// the start state included; a divergence anywhere in the checks stops the
/// doubling and reports an infinite gap.
///
/// The procedure consumes no randomness beyond the direction string.
pub fn orbit_selection<M: Model + ?Sized>(
    model: &M,
    z: &PhasePoint,
    dirs: &DirectionString,
    step_size: f64,
    refinement: u32,
) -> Orbit {
    assert!(refinement >= 1, "refinement must be at least 1");
    let mut traj = Trajectory::new(model, z, step_size, refinement);
    if traj.origin_energy == f64::INFINITY {
        return Orbit {
            a: 0,
            b: 0,
            doublings: 0,
            energy_gap: f64::INFINITY,
        };
    }

    let (mut a, mut b): (i64, i64) = (0, 0);
    let mut h_max = traj.origin_energy;
    let mut h_min = traj.origin_energy;
    let mut doublings = 0u32;
    let mut diverged = false;

    for i in 1..=dirs.len() as u32 {
        let span = 1i64 << (i - 1);
        let (ext_a, ext_b) = if dirs.bit((i - 1) as usize) {
            (a - span, b - span)
        } else {
            (a + span, b + span)
        };

        // U-turn check on the current orbit; its energy extrema feed the gap.
        let (leg_max, leg_min) = traj.leg_extrema(a, b);
        h_max = h_max.max(leg_max);
        h_min = h_min.min(leg_min);
        let turning = traj.u_turn(a, b);

        // Sub-U-turn check on the proposed extension.
        let sub_turning = if traj.ensure(a.min(ext_a), b.max(ext_b)) {
            traj.sub_u_turn(ext_a, ext_b)
        } else {
            diverged = true;
            true
        };

        if turning || sub_turning {
            break;
        }
        a = a.min(ext_a);
        b = b.max(ext_b);
        doublings = i;
    }

    Orbit {
        a,
        b,
        doublings,
        energy_gap: if diverged {
            f64::INFINITY
        } else {
            h_max - h_min
        },
    }
}

/// The iterate picked from an orbit, with its index.
#[derive(Clone, Debug)]
pub struct IndexSelection {
    pub index: i64,
    pub endpoint: PhasePoint,
}

/// Draws an index from `[a:b]` with Boltzmann weights `exp(-H)` in one
/// forward pass from the `a` endpoint, keeping memory constant in the orbit
/// length.
///
/// Index `i` replaces the current selection with probability
/// `exp(-H_i) / w_i` where `w_i` is the running weight sum, so the marginal
/// law of the returned index is the categorical Boltzmann distribution over
/// the orbit. Exactly `b - a` uniforms are consumed. If every weight
/// underflows to zero (or the weight sum is non-finite) the start index 0 is
/// returned, which is always a valid orbit member.
pub fn index_selection<M: Model + ?Sized, R: Rng + ?Sized>(
    model: &M,
    z: &PhasePoint,
    a: i64,
    b: i64,
    step_size: f64,
    refinement: u32,
    rng: &mut R,
) -> IndexSelection {
    assert!(a <= 0 && 0 <= b, "orbit must contain index 0");
    assert!(refinement >= 1, "refinement must be at least 1");
    let fine = step_size / refinement as f64;
    let r = refinement as i64;

    let mut current = leapfrog(model, z, r * a, fine).endpoint;
    let mut weight_sum = math::exp(-hamiltonian(model, &current));
    let mut selected = current.clone();
    let mut selected_index = a;

    for i in (a + 1)..=b {
        current = leapfrog(model, &current, r, fine).endpoint;
        let weight = math::exp(-hamiltonian(model, &current));
        weight_sum += weight;
        let replace = weight / weight_sum;
        let u: f64 = rng.gen();
        if u <= replace {
            selected_index = i;
            selected = current.clone();
        }
    }

    if weight_sum == 0.0 || !weight_sum.is_finite() {
        return IndexSelection {
            index: 0,
            endpoint: z.clone(),
        };
    }
    IndexSelection {
        index: selected_index,
        endpoint: selected,
    }
}

/// Orbit endpoints generated by a direction-string prefix:
/// `a = -sum 2^(j-1) B_j` and `b = sum 2^(j-1) (1 - B_j)`.
pub fn orbit_endpoints(prefix: &[bool]) -> (i64, i64) {
    assert!(prefix.len() < 63, "direction string too long");
    let mut a = 0i64;
    let mut b = 0i64;
    for (j, &bit) in prefix.iter().enumerate() {
        let span = 1i64 << j;
        if bit {
            a -= span;
        } else {
            b += span;
        }
    }
    (a, b)
}

/// The recursive bisection bits of `index` within `[a:b]`.
///
/// Bit `ell` (the last) is 1 exactly when `index` lies in the upper half;
/// the recursion then descends into the half containing `index` to fill the
/// lower bits. Requires `index` in `[a:b]` and `b - a + 1 = 2^ell`; a
/// single-state interval yields the empty string.
pub fn beta_string(index: i64, a: i64, b: i64) -> Vec<bool> {
    assert!(a <= index && index <= b, "index outside interval");
    let len = (b - a + 1) as u64;
    assert!(
        len.is_power_of_two(),
        "interval length must be a power of two"
    );
    let ell = len.trailing_zeros() as usize;

    let mut bits = alloc::vec![false; ell];
    let (mut lo, mut hi) = (a, b);
    for slot in (0..ell).rev() {
        let mid = (lo + hi).div_euclid(2);
        if index > mid {
            bits[slot] = true;
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    bits
}

/// The direction string that grows the shifted orbit from the iterate at
/// `index`: the first `ell` bits are replaced by `beta_string(index, a, b)`,
/// the remaining bits are copied from `dirs`.
pub fn b_star(index: i64, a: i64, b: i64, dirs: &DirectionString) -> DirectionString {
    let beta = beta_string(index, a, b);
    assert!(
        beta.len() <= dirs.len(),
        "orbit is larger than the direction string allows"
    );
    let mut bits = beta;
    bits.extend_from_slice(&dirs.as_bits()[bits.len()..]);
    DirectionString::from_bits(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StdNormal;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bits(raw: &[u8]) -> Vec<bool> {
        raw.iter().map(|&x| x != 0).collect()
    }

    #[test]
    fn endpoints_of_empty_prefix() {
        assert_eq!(orbit_endpoints(&[]), (0, 0));
    }

    #[test]
    fn endpoints_hand_values() {
        assert_eq!(orbit_endpoints(&bits(&[1, 0])), (-1, 2));
        assert_eq!(orbit_endpoints(&bits(&[0, 1, 1])), (-6, 1));
    }

    #[test]
    fn endpoints_size_is_power_of_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let n = rng.gen_range(0..10usize);
            let prefix: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            let (a, b) = orbit_endpoints(&prefix);
            assert!(a <= 0 && 0 <= b);
            assert_eq!(b - a + 1, 1i64 << n);
        }
    }

    #[test]
    fn single_point_interval_has_no_u_turn() {
        let model = StdNormal::new(2);
        let z = PhasePoint::new(vec![1.0, -0.4], vec![0.6, 0.2]);
        let check = indicator_u_turn(&model, 0, 0, &z, 0.5, 1);
        assert!(!check.turning);
        let h = hamiltonian(&model, &z);
        assert_eq!(check.h_max, h);
        assert_eq!(check.h_min, h);
    }

    #[test]
    fn half_period_orbit_turns() {
        // After about half an oscillation period the endpoint momentum
        // opposes the displacement. Derive the expected flag with a
        // hand-rolled stepper before asserting it on the implementation.
        let (mut theta, mut rho) = (1.0f64, 0.0f64);
        for _ in 0..7 {
            let half = rho - 0.25 * theta;
            theta += 0.5 * half;
            rho = half - 0.25 * theta;
        }
        let displacement = theta - 1.0;
        assert!(rho * displacement < 0.0 || 0.0 * displacement < 0.0);

        let model = StdNormal::new(1);
        let z = PhasePoint::new(vec![1.0], vec![0.0]);
        let check = indicator_u_turn(&model, 0, 7, &z, 0.5, 1);
        assert!(check.turning);
    }

    #[test]
    fn sub_u_turn_base_case() {
        let model = StdNormal::new(1);
        let z = PhasePoint::new(vec![1.0], vec![0.0]);
        assert!(!indicator_sub_u_turn(&model, 3, 3, &z, 0.5, 1));
        assert!(!indicator_sub_u_turn(&model, -2, -2, &z, 0.5, 1));
    }

    #[test]
    fn sub_u_turn_includes_full_interval() {
        let model = StdNormal::new(1);
        let z = PhasePoint::new(vec![1.0], vec![0.0]);
        assert!(indicator_u_turn(&model, 0, 7, &z, 0.5, 1).turning);
        assert!(indicator_sub_u_turn(&model, 0, 7, &z, 0.5, 1));
    }

    #[test]
    fn empty_direction_string_keeps_single_state_orbit() {
        let model = StdNormal::new(1);
        let z = PhasePoint::new(vec![1.0], vec![0.5]);
        let orbit = orbit_selection(&model, &z, &DirectionString::from_bits(vec![]), 0.5, 1);
        assert_eq!((orbit.a, orbit.b, orbit.doublings), (0, 0, 0));
        assert_eq!(orbit.energy_gap, 0.0);
    }

    #[test]
    fn forward_orbit_stops_near_half_period() {
        let model = StdNormal::new(1);
        let z = PhasePoint::new(vec![1.0], vec![0.0]);
        let dirs = DirectionString::from_bits(vec![false; 10]);
        let orbit = orbit_selection(&model, &z, &dirs, 0.5, 1);
        assert!(orbit.len() <= 8, "orbit length {}", orbit.len());
        assert!(orbit.energy_gap.is_finite());
    }

    #[test]
    fn orbit_matches_direction_string_prefix() {
        let model = StdNormal::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let z = PhasePoint::new(
                (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect(),
                (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            );
            let dirs = DirectionString::random(8, &mut rng);
            let orbit = orbit_selection(&model, &z, &dirs, 0.4, 1);
            let expected = orbit_endpoints(&dirs.as_bits()[..orbit.doublings as usize]);
            assert_eq!((orbit.a, orbit.b), expected);
        }
    }

    #[test]
    fn index_selection_single_candidate() {
        let model = StdNormal::new(2);
        let z = PhasePoint::new(vec![0.3, 0.1], vec![-0.2, 0.8]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sel = index_selection(&model, &z, 0, 0, 0.5, 1, &mut rng);
        assert_eq!(sel.index, 0);
        assert_eq!(sel.endpoint, z);
    }

    #[test]
    fn index_selection_degenerate_weights_return_start() {
        // A state with infinite energy drives every Boltzmann weight to zero.
        let model = crate::model::Funnel::new(1);
        let z = PhasePoint::new(vec![-800.0, 1.0], vec![0.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sel = index_selection(&model, &z, -2, 1, 0.5, 1, &mut rng);
        assert_eq!(sel.index, 0);
        assert_eq!(sel.endpoint, z);
    }

    #[test]
    fn index_selection_endpoint_tracks_the_flow_map() {
        let model = StdNormal::new(2);
        let z = PhasePoint::new(vec![0.9, -0.4], vec![0.3, 1.1]);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let sel = index_selection(&model, &z, -4, 3, 0.4, 2, &mut rng);
            let direct = crate::integrator::leapfrog_refined(&model, &z, sel.index, 0.4, 2);
            for i in 0..2 {
                assert!((sel.endpoint.position[i] - direct.endpoint.position[i]).abs() < 1e-10);
                assert!((sel.endpoint.momentum[i] - direct.endpoint.momentum[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn index_selection_consumes_one_uniform_per_candidate() {
        let model = StdNormal::new(1);
        let z = PhasePoint::new(vec![0.2], vec![0.4]);
        let mut rng_a = ChaCha8Rng::seed_from_u64(33);
        let mut rng_b = ChaCha8Rng::seed_from_u64(33);
        index_selection(&model, &z, -3, 4, 0.3, 1, &mut rng_a);
        for _ in 0..7 {
            let _: f64 = rng_b.gen();
        }
        assert_eq!(rng_a.gen::<u64>(), rng_b.gen::<u64>());
    }

    #[test]
    fn beta_string_known_example() {
        assert_eq!(beta_string(2, -3, 4), bits(&[1, 0, 1]));
    }

    #[test]
    fn beta_string_base_case_is_empty() {
        assert_eq!(beta_string(5, 5, 5), Vec::<bool>::new());
    }

    #[test]
    fn beta_string_endpoints_shift() {
        // The reconstructed prefix grows exactly the shifted orbit.
        for ell in 0..=5u32 {
            let size = 1i64 << ell;
            for a in -size..=0 {
                let b = a + size - 1;
                if b < 0 {
                    continue;
                }
                for index in a..=b {
                    let beta = beta_string(index, a, b);
                    assert_eq!(orbit_endpoints(&beta), (a - index, b - index));
                }
            }
        }
    }

    #[test]
    fn b_star_identity_for_single_state_orbit() {
        let dirs = DirectionString::from_bits(bits(&[1, 0, 1, 1]));
        assert_eq!(b_star(0, 0, 0, &dirs), dirs);
    }

    #[test]
    fn b_star_hand_value() {
        let dirs = DirectionString::from_bits(bits(&[1, 0]));
        let star = b_star(2, -1, 2, &dirs);
        assert_eq!(star.as_bits(), bits(&[1, 1]).as_slice());
    }

    #[test]
    fn b_star_is_an_involution_exhaustively() {
        // All direction strings with M <= 6, all doubling counts ell <= 4,
        // all indices in the generated orbit.
        for m in 0..=6usize {
            for raw in 0u32..(1 << m) {
                let dirs = DirectionString::from_bits((0..m).map(|i| raw >> i & 1 == 1).collect());
                for ell in 0..=m.min(4) {
                    let (a, b) = orbit_endpoints(&dirs.as_bits()[..ell]);
                    for index in a..=b {
                        let star = b_star(index, a, b, &dirs);
                        let back = b_star(-index, a - index, b - index, &star);
                        assert_eq!(back, dirs, "m={m} raw={raw:b} ell={ell} L={index}");
                    }
                }
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn prop_endpoints_match_inductive_construction(
            prefix in proptest::collection::vec(proptest::bool::ANY, 0..12)
        ) {
            // Inductive form: extend by a block of size 2^(j-1) on the side
            // given by the bit, keeping the other endpoint.
            let (mut a, mut b) = (0i64, 0i64);
            for (j, &bit) in prefix.iter().enumerate() {
                let span = 1i64 << j;
                let (ta, tb) = if bit { (a - span, b - span) } else { (a + span, b + span) };
                a = a.min(ta);
                b = b.max(tb);
            }
            proptest::prop_assert_eq!(orbit_endpoints(&prefix), (a, b));
        }

        #[test]
        fn prop_b_star_round_trip(raw in 0u64..(1 << 10), ell in 0usize..=4) {
            let dirs = DirectionString::from_bits((0..10).map(|i| raw >> i & 1 == 1).collect());
            let (a, b) = orbit_endpoints(&dirs.as_bits()[..ell]);
            for index in a..=b {
                let star = b_star(index, a, b, &dirs);
                proptest::prop_assert_eq!(b_star(-index, a - index, b - index, &star), dirs.clone());
            }
        }
    }
}
