//! Leapfrog integration with running energy extrema.
//!
//! Each step is the standard half-kick / drift / half-kick update. A negative
//! step count integrates the momentum-flipped state forward and flips the
//! momentum back at the end, which is the exact time reversal. The maximum
//! and minimum Hamiltonian over every visited state, the start included, are
//! tracked so that callers can bound the energy error along a path.

use crate::math;
use crate::model::{Model, PhasePoint};

/// Hard cap on fine steps per call. Guards against runaway loops from
/// misconfigured orbit or refinement parameters.
pub const MAX_FINE_STEPS: u64 = 1 << 22;

/// Endpoint of a leapfrog path together with the energy extrema over every
/// visited state.
#[derive(Clone, Debug)]
pub struct LeapfrogResult {
    pub endpoint: PhasePoint,
    /// Maximum Hamiltonian along the path; `+inf` flags a divergence.
    pub h_max: f64,
    /// Minimum Hamiltonian along the path.
    pub h_min: f64,
}

impl LeapfrogResult {
    /// True when a non-finite energy was encountered along the path.
    pub fn divergent(&self) -> bool {
        self.h_max == f64::INFINITY
    }
}

/// Runs `|steps|` leapfrog steps of size `step_size` from `start`, forward in
/// time for `steps >= 0` and backward otherwise.
///
/// Returns the endpoint and the max/min Hamiltonian over all `|steps| + 1`
/// visited states. If a non-finite energy shows up the integration stops
/// early and the result reports `h_max = +inf`; downstream code treats that
/// as a failed U-turn check and a failed energy threshold.
///
/// Panics if `step_size` is not positive, if dimensions disagree, or if
/// `|steps|` exceeds [`MAX_FINE_STEPS`].
pub fn leapfrog<M: Model + ?Sized>(
    model: &M,
    start: &PhasePoint,
    steps: i64,
    step_size: f64,
) -> LeapfrogResult {
    assert!(step_size > 0.0, "step size must be positive");
    assert_eq!(start.dim(), model.dim(), "phase point dimension mismatch");
    assert!(
        steps.unsigned_abs() <= MAX_FINE_STEPS,
        "leapfrog step count {steps} exceeds the {MAX_FINE_STEPS} cap"
    );

    let dim = start.dim();
    let mut position = start.position.clone();
    let mut momentum = start.momentum.clone();
    if steps < 0 {
        for p in momentum.iter_mut() {
            *p = -*p;
        }
    }

    let h0 = energy(model, &position, &momentum);
    let mut h_max = h0;
    let mut h_min = h0;

    let mut grad = alloc::vec![0.0; dim];
    model.gradient(&position, &mut grad);
    let half = 0.5 * step_size;

    for _ in 0..steps.unsigned_abs() {
        for i in 0..dim {
            momentum[i] -= half * grad[i];
        }
        for i in 0..dim {
            position[i] += step_size * momentum[i];
        }
        model.gradient(&position, &mut grad);
        for i in 0..dim {
            momentum[i] -= half * grad[i];
        }
        let h = energy(model, &position, &momentum);
        if h == f64::INFINITY {
            h_max = f64::INFINITY;
            break;
        }
        if h > h_max {
            h_max = h;
        }
        if h < h_min {
            h_min = h;
        }
    }

    if steps < 0 {
        for p in momentum.iter_mut() {
            *p = -*p;
        }
    }
    LeapfrogResult {
        endpoint: PhasePoint { position, momentum },
        h_max,
        h_min,
    }
}

/// Runs `coarse_steps` coarse steps of size `step_size`, each integrated with
/// `refinement` fine leapfrog steps of size `step_size / refinement`.
///
/// Identical to `leapfrog(model, start, refinement * coarse_steps,
/// step_size / refinement)`; the energy extrema span every fine gridpoint.
pub fn leapfrog_refined<M: Model + ?Sized>(
    model: &M,
    start: &PhasePoint,
    coarse_steps: i64,
    step_size: f64,
    refinement: u32,
) -> LeapfrogResult {
    assert!(refinement >= 1, "refinement must be at least 1");
    leapfrog(
        model,
        start,
        coarse_steps * refinement as i64,
        step_size / refinement as f64,
    )
}

#[inline]
fn energy<M: Model + ?Sized>(model: &M, position: &[f64], momentum: &[f64]) -> f64 {
    let h = model.potential(position) + math::half_sq_norm(momentum);
    if h.is_finite() {
        h
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{hamiltonian, StdNormal};
    use alloc::vec;
    use alloc::vec::Vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// One hand-rolled leapfrog step for the standard normal, used as an
    /// independent oracle (grad U = theta).
    fn std_normal_step(theta: &[f64], rho: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
        let mut r: Vec<f64> = theta
            .iter()
            .zip(rho)
            .map(|(&t, &p)| p - 0.5 * h * t)
            .collect();
        let t: Vec<f64> = theta.iter().zip(&r).map(|(&t, &p)| t + h * p).collect();
        for i in 0..r.len() {
            r[i] -= 0.5 * h * t[i];
        }
        (t, r)
    }

    #[test]
    fn zero_steps_returns_start() {
        let model = StdNormal::new(2);
        let z = PhasePoint::new(vec![1.0, -0.5], vec![0.25, 2.0]);
        let out = leapfrog(&model, &z, 0, 0.5);
        assert_eq!(out.endpoint, z);
        let h = hamiltonian(&model, &z);
        assert_eq!(out.h_max, h);
        assert_eq!(out.h_min, h);
    }

    #[test]
    fn single_step_hand_value() {
        let model = StdNormal::new(1);
        let z = PhasePoint::new(vec![1.0], vec![0.0]);
        let out = leapfrog(&model, &z, 1, 0.5);
        assert!((out.endpoint.position[0] - 0.875).abs() < 1e-15);
        assert!((out.endpoint.momentum[0] - (-0.46875)).abs() < 1e-15);
    }

    #[test]
    fn round_trip_reverses_to_start() {
        let model = StdNormal::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let z = PhasePoint::new(
                (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect(),
                (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            );
            let steps = rng.gen_range(1..40);
            let fwd = leapfrog(&model, &z, steps, 0.3);
            let back = leapfrog(&model, &fwd.endpoint, -steps, 0.3);
            for i in 0..3 {
                assert!((back.endpoint.position[i] - z.position[i]).abs() < 1e-10);
                assert!((back.endpoint.momentum[i] - z.momentum[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn backward_steps_match_flipped_forward() {
        let model = StdNormal::new(2);
        let z = PhasePoint::new(vec![0.8, -0.3], vec![0.1, 1.4]);
        let back = leapfrog(&model, &z, -7, 0.25);
        let flipped = leapfrog(&model, &z.flipped(), 7, 0.25);
        assert_eq!(back.endpoint.position, flipped.endpoint.position);
        let unflipped: Vec<f64> = flipped.endpoint.momentum.iter().map(|&p| -p).collect();
        assert_eq!(back.endpoint.momentum, unflipped);
        assert_eq!(back.h_max, flipped.h_max);
        assert_eq!(back.h_min, flipped.h_min);
    }

    #[test]
    fn refined_with_unit_refinement_is_plain_leapfrog() {
        let model = StdNormal::new(2);
        let z = PhasePoint::new(vec![1.0, 0.5], vec![-0.2, 0.9]);
        let a = leapfrog_refined(&model, &z, 5, 0.4, 1);
        let b = leapfrog(&model, &z, 5, 0.4);
        assert_eq!(a.endpoint, b.endpoint);
        assert_eq!(a.h_max, b.h_max);
        assert_eq!(a.h_min, b.h_min);
    }

    #[test]
    fn refined_composes_half_size_steps() {
        let model = StdNormal::new(2);
        let z = PhasePoint::new(vec![0.3, -1.1], vec![0.7, 0.2]);
        let refined = leapfrog_refined(&model, &z, 1, 0.5, 2);
        let (t1, r1) = std_normal_step(&z.position, &z.momentum, 0.25);
        let (t2, r2) = std_normal_step(&t1, &r1, 0.25);
        for i in 0..2 {
            assert!((refined.endpoint.position[i] - t2[i]).abs() < 1e-15);
            assert!((refined.endpoint.momentum[i] - r2[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn refined_extrema_cover_fine_gridpoints() {
        let model = StdNormal::new(1);
        let z = PhasePoint::new(vec![1.4], vec![0.3]);
        let refined = leapfrog_refined(&model, &z, 6, 1.2, 8);
        // Coarse-only extrema: evaluate H at the coarse gridpoints reached by
        // the same fine integrator.
        let mut coarse_max = hamiltonian(&model, &z);
        for i in 1..=6 {
            let state = leapfrog_refined(&model, &z, i, 1.2, 8).endpoint;
            coarse_max = coarse_max.max(hamiltonian(&model, &state));
        }
        assert!(refined.h_max >= coarse_max);
    }

    #[test]
    fn extrema_match_brute_force_recomputation() {
        let model = StdNormal::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let z = PhasePoint::new(
                (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect(),
                (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            );
            let steps = rng.gen_range(1..30);
            let h = rng.gen_range(0.05..1.0);
            let out = leapfrog(&model, &z, steps, h);
            let mut lo = hamiltonian(&model, &z);
            let mut hi = lo;
            for i in 1..=steps {
                let state = leapfrog(&model, &z, i, h).endpoint;
                let e = hamiltonian(&model, &state);
                lo = lo.min(e);
                hi = hi.max(e);
            }
            assert_eq!(out.h_max, hi);
            assert_eq!(out.h_min, lo);
        }
    }

    /// For the standard normal the integrator exactly preserves the modified
    /// Hamiltonian H_h = (1 - h^2/4) |theta|^2 / 2 + |rho|^2 / 2 when h < 2.
    fn modified_hamiltonian(z: &PhasePoint, h: f64) -> f64 {
        let theta_sq: f64 = z.position.iter().map(|&t| t * t).sum();
        let rho_sq: f64 = z.momentum.iter().map(|&p| p * p).sum();
        0.5 * (1.0 - h * h / 4.0) * theta_sq + 0.5 * rho_sq
    }

    #[test]
    fn modified_hamiltonian_is_conserved() {
        let model = StdNormal::new(1);
        for &h in &[1.85, 1.31, 0.925] {
            for start in [vec![2.0], vec![0.0]] {
                let momentum = if start[0] == 0.0 {
                    vec![2.0]
                } else {
                    vec![0.0]
                };
                let mut z = PhasePoint::new(start, momentum);
                let reference = modified_hamiltonian(&z, h);
                for _ in 0..1000 {
                    z = leapfrog(&model, &z, 1, h).endpoint;
                    let drift = (modified_hamiltonian(&z, h) - reference).abs() / reference;
                    assert!(drift <= 1e-10, "drift {drift} at h = {h}");
                }
            }
        }
    }

    #[test]
    fn energy_gap_bounded_by_modified_hamiltonian_envelope() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &dim in &[1usize, 3] {
            let model = StdNormal::new(dim);
            for _ in 0..10 {
                let z = PhasePoint::new(
                    (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect(),
                    (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect(),
                );
                let h = rng.gen_range(0.1..1.9);
                let bound = h * h / (4.0 - h * h) * modified_hamiltonian(&z, h);
                let fwd = leapfrog(&model, &z, 500, h);
                let back = leapfrog(&model, &z, -500, h);
                let gap = fwd.h_max.max(back.h_max) - fwd.h_min.min(back.h_min);
                assert!(
                    gap <= bound * (1.0 + 1e-9) + 1e-12,
                    "gap {gap} exceeds bound {bound} at h = {h}"
                );
            }
        }
    }

    #[test]
    fn divergence_is_flagged_with_infinite_max() {
        // The funnel blows up when integrated far below the stability limit.
        let model = crate::model::Funnel::new(2);
        let z = PhasePoint::new(vec![-9.0, 1.0, -1.0], vec![1.0, 1.0, 1.0]);
        let out = leapfrog(&model, &z, 200, 1.0);
        assert!(out.divergent());
        assert_eq!(out.h_max, f64::INFINITY);
    }

    #[test]
    #[should_panic(expected = "cap")]
    fn step_cap_is_enforced() {
        let model = StdNormal::new(1);
        let z = PhasePoint::new(vec![1.0], vec![0.0]);
        leapfrog(&model, &z, (MAX_FINE_STEPS + 1) as i64, 0.5);
    }
}
