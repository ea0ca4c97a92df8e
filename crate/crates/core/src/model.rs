//! Target distributions described by their potential energy.
//!
//! A target with density proportional to `exp(-U(theta))` is described by the
//! potential `U` and its gradient. All potentials drop additive normalization
//! constants; MCMC output is invariant to them and energy differences stay
//! constant-free. The momentum distribution is a standard normal (identity
//! mass matrix), so the Hamiltonian is `H(theta, rho) = U(theta) + |rho|^2/2`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// A target distribution with density proportional to `exp(-U(theta))`.
///
/// Implementations must be immutable after construction; a single model is
/// shared by all concurrently running chains.
pub trait Model: Sync {
    /// Dimension of the position vector.
    fn dim(&self) -> usize;

    /// Potential energy `U(theta)`, up to an additive constant.
    ///
    /// Non-finite values (overflow, NaN) are reported as `+inf`, which the
    /// samplers treat as a divergence.
    fn potential(&self, position: &[f64]) -> f64;

    /// Writes the gradient of the potential into `grad`.
    fn gradient(&self, position: &[f64], grad: &mut [f64]);
}

/// A position/momentum pair, both of dimension `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    pub position: Vec<f64>,
    pub momentum: Vec<f64>,
}

impl PhasePoint {
    pub fn new(position: Vec<f64>, momentum: Vec<f64>) -> Self {
        assert_eq!(
            position.len(),
            momentum.len(),
            "position and momentum must have equal dimension"
        );
        Self { position, momentum }
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }

    /// The same point with the momentum sign flipped.
    pub fn flipped(&self) -> Self {
        Self {
            position: self.position.clone(),
            momentum: self.momentum.iter().map(|&p| -p).collect(),
        }
    }
}

/// Total energy `U(theta) + |rho|^2 / 2`.
///
/// Any non-finite intermediate value is mapped to `+inf` so that divergences
/// propagate through energy comparisons instead of NaN.
pub fn hamiltonian<M: Model + ?Sized>(model: &M, z: &PhasePoint) -> f64 {
    assert_eq!(z.dim(), model.dim(), "phase point dimension mismatch");
    let h = model.potential(&z.position) + math::half_sq_norm(&z.momentum);
    if h.is_finite() {
        h
    } else {
        f64::INFINITY
    }
}

/// Standard normal target in `d` dimensions: `U(x) = |x|^2 / 2`.
#[derive(Clone, Copy, Debug)]
pub struct StdNormal {
    dim: usize,
}

impl StdNormal {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        Self { dim }
    }
}

impl Model for StdNormal {
    fn dim(&self) -> usize {
        self.dim
    }

    fn potential(&self, position: &[f64]) -> f64 {
        debug_assert_eq!(position.len(), self.dim);
        let u = math::half_sq_norm(position);
        if u.is_finite() {
            u
        } else {
            f64::INFINITY
        }
    }

    fn gradient(&self, position: &[f64], grad: &mut [f64]) {
        grad.copy_from_slice(position);
    }
}

/// The funnel benchmark: `omega ~ normal(0, 3)` and, given `omega`,
/// `x_i ~ normal(0, exp(omega / 2))` for `i in 1..=d`.
///
/// The position layout is `(omega, x_1, ..., x_d)`, so the total dimension is
/// `d + 1`. Dropping constants, the potential is
///
/// ```text
/// U(omega, x) = omega^2 / 18 + sum_i (x_i^2 exp(-omega) / 2 + omega / 2)
/// ```
///
/// For strongly negative `omega` the factor `exp(-omega)` overflows; the
/// potential then returns `+inf` and callers treat the state as divergent.
#[derive(Clone, Copy, Debug)]
pub struct Funnel {
    x_dim: usize,
}

impl Funnel {
    /// `x_dim` is the number of funnel variables `x_i`, not counting `omega`.
    pub fn new(x_dim: usize) -> Self {
        assert!(x_dim >= 1, "dimension must be positive");
        Self { x_dim }
    }

    /// Potential evaluated on split coordinates.
    pub fn potential_parts(omega: f64, x: &[f64]) -> f64 {
        let scale = math::exp(-omega);
        let mut u = omega * omega / 18.0;
        for &xi in x {
            u += 0.5 * xi * xi * scale + 0.5 * omega;
        }
        if u.is_finite() {
            u
        } else {
            f64::INFINITY
        }
    }
}

impl Model for Funnel {
    fn dim(&self) -> usize {
        self.x_dim + 1
    }

    fn potential(&self, position: &[f64]) -> f64 {
        debug_assert_eq!(position.len(), self.dim());
        Self::potential_parts(position[0], &position[1..])
    }

    fn gradient(&self, position: &[f64], grad: &mut [f64]) {
        let omega = position[0];
        let x = &position[1..];
        let scale = math::exp(-omega);
        let mut sum_sq = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            sum_sq += xi * xi;
            grad[i + 1] = xi * scale;
        }
        grad[0] = omega / 9.0 - 0.5 * scale * sum_sq + 0.5 * self.x_dim as f64;
    }
}

/// A shipped model selected by name, as used by chain configurations.
#[derive(Clone, Copy, Debug)]
pub enum BuiltinModel {
    StdNormal(StdNormal),
    Funnel(Funnel),
}

impl BuiltinModel {
    /// Looks up a model by name.
    ///
    /// `"std_normal"` takes `dim` as the full dimension; `"funnel"` takes
    /// `dim` as the number of `x` variables, giving total dimension
    /// `dim + 1`.
    pub fn from_name(name: &str, dim: usize) -> Result<Self, String> {
        match name {
            "std_normal" => Ok(Self::StdNormal(StdNormal::new(dim))),
            "funnel" => Ok(Self::Funnel(Funnel::new(dim))),
            other => Err(alloc::format!(
                "unknown model '{other}' (expected 'std_normal' or 'funnel')"
            )),
        }
    }

    /// Names of the position coordinates, used for output headers.
    pub fn coordinate_names(&self) -> Vec<String> {
        match self {
            Self::StdNormal(m) => (1..=m.dim()).map(|i| alloc::format!("x{i}")).collect(),
            Self::Funnel(m) => {
                let mut names = vec![String::from("omega")];
                names.extend((1..m.dim()).map(|i| alloc::format!("x{i}")));
                names
            }
        }
    }
}

impl Model for BuiltinModel {
    fn dim(&self) -> usize {
        match self {
            Self::StdNormal(m) => m.dim(),
            Self::Funnel(m) => m.dim(),
        }
    }

    fn potential(&self, position: &[f64]) -> f64 {
        match self {
            Self::StdNormal(m) => m.potential(position),
            Self::Funnel(m) => m.potential(position),
        }
    }

    fn gradient(&self, position: &[f64], grad: &mut [f64]) {
        match self {
            Self::StdNormal(m) => m.gradient(position, grad),
            Self::Funnel(m) => m.gradient(position, grad),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// Centered finite differences of the potential.
    fn fd_gradient<M: Model>(model: &M, position: &[f64], step: f64) -> Vec<f64> {
        let mut grad = vec![0.0; position.len()];
        let mut probe = position.to_vec();
        for i in 0..position.len() {
            probe[i] = position[i] + step;
            let up = model.potential(&probe);
            probe[i] = position[i] - step;
            let down = model.potential(&probe);
            probe[i] = position[i];
            grad[i] = (up - down) / (2.0 * step);
        }
        grad
    }

    fn assert_gradient_matches_fd<M: Model>(model: &M, position: &[f64]) {
        let mut grad = vec![0.0; position.len()];
        model.gradient(position, &mut grad);
        let fd = fd_gradient(model, position, 1e-6);
        for i in 0..grad.len() {
            let scale = 1.0_f64.max(grad[i].abs());
            assert!(
                (grad[i] - fd[i]).abs() / scale <= 1e-5,
                "gradient mismatch at {i}: analytic {} vs fd {}",
                grad[i],
                fd[i]
            );
        }
    }

    #[test]
    fn hamiltonian_std_normal_origin() {
        let model = StdNormal::new(1);
        let z = PhasePoint::new(vec![0.0], vec![0.0]);
        assert_eq!(hamiltonian(&model, &z), 0.0);
    }

    #[test]
    fn hamiltonian_std_normal_hand_value() {
        let model = StdNormal::new(2);
        let z = PhasePoint::new(vec![1.0, 0.0], vec![0.0, 2.0]);
        assert_eq!(hamiltonian(&model, &z), 2.5);
    }

    #[test]
    fn hamiltonian_funnel_origin() {
        let model = Funnel::new(1);
        let z = PhasePoint::new(vec![0.0, 0.0], vec![0.0, 0.0]);
        assert_eq!(hamiltonian(&model, &z), 0.0);
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn hamiltonian_rejects_dimension_mismatch() {
        let model = StdNormal::new(3);
        let z = PhasePoint::new(vec![0.0], vec![0.0]);
        hamiltonian(&model, &z);
    }

    #[test]
    #[should_panic(expected = "equal dimension")]
    fn phase_point_rejects_unequal_lengths() {
        PhasePoint::new(vec![0.0, 1.0], vec![0.0]);
    }

    #[test]
    fn funnel_potential_hand_values() {
        assert_eq!(Funnel::potential_parts(0.0, &[0.0; 10]), 0.0);
        let expected = 4.0 / 18.0 + 10.0;
        let got = Funnel::potential_parts(2.0, &[0.0; 10]);
        assert!((got - expected).abs() < 1e-14, "got {got}");
    }

    #[test]
    fn funnel_extreme_omega_overflows_to_infinity() {
        let u = Funnel::potential_parts(-800.0, &[0.0; 3]);
        assert_eq!(u, f64::INFINITY);
        let u = Funnel::potential_parts(-800.0, &[1.0; 3]);
        assert_eq!(u, f64::INFINITY);
    }

    #[test]
    fn std_normal_potential_hand_values() {
        let model = StdNormal::new(2);
        assert_eq!(model.potential(&[0.0, 0.0]), 0.0);
        assert_eq!(model.potential(&[3.0, 4.0]), 12.5);
    }

    #[test]
    fn std_normal_gradient_is_identity() {
        let model = StdNormal::new(4);
        let pos = [0.3, -1.7, 2.4, 0.0];
        let mut grad = [0.0; 4];
        model.gradient(&pos, &mut grad);
        assert_eq!(grad, pos);
    }

    #[test]
    fn funnel_gradient_matches_finite_differences() {
        let model = Funnel::new(10);
        let mut pos = vec![1.0];
        pos.extend(vec![1.0; 10]);
        assert_gradient_matches_fd(&model, &pos);
    }

    #[test]
    fn gradients_match_finite_differences_at_random_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let funnel = Funnel::new(5);
        let normal = StdNormal::new(5);
        for _ in 0..50 {
            let p6: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let p5: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
            assert_gradient_matches_fd(&funnel, &p6);
            assert_gradient_matches_fd(&normal, &p5);
        }
    }

    #[test]
    fn funnel_on_axis_hessian_diagonal() {
        // Along the omega axis the Hessian is diag(1/9, e^-omega, ...).
        let model = Funnel::new(3);
        let step = 1e-5;
        for &omega in &[-1.5, 0.0, 2.0] {
            let at = |w: f64, x1: f64| model.potential(&[w, x1, 0.0, 0.0]);
            let d2_omega = (at(omega + step, 0.0) - 2.0 * at(omega, 0.0) + at(omega - step, 0.0))
                / (step * step);
            let d2_x = (at(omega, step) - 2.0 * at(omega, 0.0) + at(omega, -step)) / (step * step);
            assert!((d2_omega - 1.0 / 9.0).abs() < 1e-4, "omega: {d2_omega}");
            assert!(
                (d2_x - math::exp(-omega)).abs() / math::exp(-omega) < 1e-4,
                "x at omega {omega}: {d2_x}"
            );
        }
    }

    #[test]
    fn builtin_lookup() {
        let m = BuiltinModel::from_name("funnel", 10).unwrap();
        assert_eq!(m.dim(), 11);
        assert_eq!(m.coordinate_names()[0], "omega");
        let m = BuiltinModel::from_name("std_normal", 3).unwrap();
        assert_eq!(m.dim(), 3);
        assert!(BuiltinModel::from_name("cauchy", 2).is_err());
    }
}
