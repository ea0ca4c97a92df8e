//! Independent oracles and statistical checks for the sampler.
//!
//! The oracles here deliberately re-derive quantities from their defining
//! formulas instead of reusing the incremental doubling loop: the orbit law
//! comes from explicit prefix endpoints plus the indicator functions, the
//! sub-U-turn flag from enumerating the full interval tree, and the index
//! law from freshly integrated Boltzmann weights. Statistical suites use
//! fixed seeds and a pre-registered significance of 1e-3; a failing check is
//! rerun once with an independent seed and only a double failure counts
//! ([`passes_with_retry`]).

use std::collections::BTreeMap;

use gist_nuts_core::{
    hamiltonian, indicator_sub_u_turn, indicator_u_turn, involution, leapfrog_refined,
    orbit_endpoints, orbit_selection, DirectionString, EnlargedState, Model, PhasePoint,
};
use rand::{Rng, SeedableRng};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Significance level shared by every statistical check.
pub const SIGNIFICANCE: f64 = 1e-3;

/// Exact orbit-selection law for a fixed start state, aggregated over all
/// direction strings of length `max_doublings` with weight `2^-M` each.
#[derive(Clone, Debug)]
pub struct KernelTable {
    /// Probability of each `(doublings, a, b)` outcome.
    pub entries: BTreeMap<(u32, i64, i64), f64>,
    pub step_size: f64,
    pub refinement: u32,
    pub max_doublings: u32,
}

impl KernelTable {
    /// Probabilities must sum to one and every outcome must be a valid
    /// doubling orbit.
    pub fn check_consistency(&self) -> Result<(), String> {
        let total: f64 = self.entries.values().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(format!("probabilities sum to {total}"));
        }
        for (&(doublings, a, b), &p) in &self.entries {
            if !(a <= 0 && 0 <= b) || b - a + 1 != 1i64 << doublings || p <= 0.0 {
                return Err(format!("inconsistent entry ({doublings}, {a}, {b}) -> {p}"));
            }
        }
        Ok(())
    }
}

/// Enumerates every direction string and runs orbit selection on each.
///
/// Feasible only for small `max_doublings`; the enumeration bound is 8.
pub fn brute_force_orbit_kernel<M: Model + ?Sized>(
    model: &M,
    z: &PhasePoint,
    step_size: f64,
    refinement: u32,
    max_doublings: u32,
) -> KernelTable {
    assert!(max_doublings <= 8, "enumeration bound is 8 doublings");
    let m = max_doublings as usize;
    let weight = 1.0 / (1u64 << m) as f64;
    let mut entries = BTreeMap::new();
    for raw in 0u64..(1 << m) {
        let dirs = DirectionString::from_bits((0..m).map(|i| raw >> i & 1 == 1).collect());
        let orbit = orbit_selection(model, z, &dirs, step_size, refinement);
        *entries
            .entry((orbit.doublings, orbit.a, orbit.b))
            .or_insert(0.0) += weight;
    }
    KernelTable {
        entries,
        step_size,
        refinement,
        max_doublings,
    }
}

/// The orbit a direction string produces, derived from the defining
/// formulas rather than the doubling loop: prefix endpoints in closed form,
/// the termination count as the smallest prefix length at which the current
/// orbit has a U-turn or the next extension has a sub-U-turn.
pub fn orbit_law_oracle<M: Model + ?Sized>(
    model: &M,
    z: &PhasePoint,
    dirs: &DirectionString,
    step_size: f64,
    refinement: u32,
) -> (u32, i64, i64) {
    let m = dirs.len() as u32;
    for ell in 1..m {
        let (a, b) = orbit_endpoints(&dirs.as_bits()[..ell as usize]);
        let turning = indicator_u_turn(model, a, b, z, step_size, refinement).turning;
        let span = 1i64 << ell;
        let (ext_a, ext_b) = if dirs.bit(ell as usize) {
            (a - span, b - span)
        } else {
            (a + span, b + span)
        };
        let sub = indicator_sub_u_turn(model, ext_a, ext_b, z, step_size, refinement);
        if turning || sub {
            return (ell, a, b);
        }
    }
    let (a, b) = orbit_endpoints(dirs.as_bits());
    (m, a, b)
}

/// Sub-U-turn by literal tree enumeration: the maximum of the U-turn
/// indicator over every node interval of the balanced binary tree.
pub fn sub_u_turn_tree_oracle<M: Model + ?Sized>(
    model: &M,
    a: i64,
    b: i64,
    z: &PhasePoint,
    step_size: f64,
    refinement: u32,
) -> bool {
    fn collect(a: i64, b: i64, out: &mut Vec<(i64, i64)>) {
        out.push((a, b));
        if a < b {
            let m = (a + b).div_euclid(2);
            collect(a, m, out);
            collect(m + 1, b, out);
        }
    }
    let mut nodes = Vec::new();
    collect(a, b, &mut nodes);
    nodes
        .iter()
        .any(|&(na, nb)| indicator_u_turn(model, na, nb, z, step_size, refinement).turning)
}

/// Boltzmann weights of the orbit iterates, each integrated freshly from
/// the start state.
pub fn boltzmann_weights<M: Model + ?Sized>(
    model: &M,
    z: &PhasePoint,
    a: i64,
    b: i64,
    step_size: f64,
    refinement: u32,
) -> Vec<f64> {
    let raw: Vec<f64> = (a..=b)
        .map(|i| {
            let state = leapfrog_refined(model, z, i, step_size, refinement).endpoint;
            (-hamiltonian(model, &state)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

/// Outcome of checking that the enlarged-space map is an involution.
#[derive(Clone, Debug, Serialize)]
pub struct InvolutionReport {
    pub cases: usize,
    pub max_position_dev: f64,
    pub max_momentum_dev: f64,
    pub discrete_mismatches: usize,
}

impl InvolutionReport {
    pub fn pass(&self, continuous_tol: f64) -> bool {
        self.discrete_mismatches == 0
            && self.max_position_dev <= continuous_tol
            && self.max_momentum_dev <= continuous_tol
    }
}

/// Applies the enlarged-space involution twice to every state and reports
/// the worst deviation from the identity. Discrete coordinates must come
/// back exactly; the phase point is allowed integrator round-off.
pub fn check_g_involution<M: Model + ?Sized>(
    model: &M,
    step_size: f64,
    states: &[EnlargedState],
) -> InvolutionReport {
    let mut report = InvolutionReport {
        cases: states.len(),
        max_position_dev: 0.0,
        max_momentum_dev: 0.0,
        discrete_mismatches: 0,
    };
    for state in states {
        let once = involution(model, state, step_size);
        let twice = involution(model, &once, step_size);
        let discrete_ok = twice.k == state.k
            && twice.dirs == state.dirs
            && twice.doublings == state.doublings
            && twice.a == state.a
            && twice.b == state.b
            && twice.index == state.index;
        if !discrete_ok {
            report.discrete_mismatches += 1;
        }
        for i in 0..state.point.dim() {
            let dp = (twice.point.position[i] - state.point.position[i]).abs();
            let dm = (twice.point.momentum[i] - state.point.momentum[i]).abs();
            report.max_position_dev = report.max_position_dev.max(dp);
            report.max_momentum_dev = report.max_momentum_dev.max(dm);
        }
    }
    report
}

/// Two-sided Kolmogorov-Smirnov test against an exact CDF.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KsReport {
    pub statistic: f64,
    pub p_value: f64,
    pub pass: bool,
}

/// Requires at least 1000 draws; passes when the p-value exceeds 1e-3.
pub fn ks_stationarity_test(draws: &[f64], exact_cdf: impl Fn(f64) -> f64) -> KsReport {
    assert!(draws.len() >= 1000, "need at least 1000 draws");
    let n = draws.len();
    let mut sorted = draws.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut statistic = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = exact_cdf(x);
        let hi = (i + 1) as f64 / n as f64 - f;
        let lo = f - i as f64 / n as f64;
        statistic = statistic.max(hi).max(lo);
    }
    let sqrt_n = (n as f64).sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * statistic;
    let p_value = kolmogorov_sf(lambda);
    KsReport {
        statistic,
        p_value,
        pass: p_value > SIGNIFICANCE,
    }
}

/// Asymptotic Kolmogorov survival function `Q(lambda)`.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j as f64) * (j as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Pearson goodness-of-fit test of observed counts against expected counts.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub pass: bool,
}

/// Cells with expected count below 5 are pooled so the asymptotic
/// distribution applies; passes when the p-value exceeds 1e-3.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> ChiSquareReport {
    assert_eq!(observed.len(), expected.len());
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pooled_obs = 0.0;
    let mut pooled_exp = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        if e >= 5.0 {
            cells.push((o as f64, e));
        } else {
            pooled_obs += o as f64;
            pooled_exp += e;
        }
    }
    if pooled_exp > 0.0 {
        if pooled_exp >= 5.0 || cells.is_empty() {
            cells.push((pooled_obs, pooled_exp));
        } else {
            let last = cells.len() - 1;
            cells[last].0 += pooled_obs;
            cells[last].1 += pooled_exp;
        }
    }
    assert!(cells.len() >= 2, "need at least two cells");
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len() - 1;
    let dist = ChiSquared::new(dof as f64).unwrap();
    let p_value = 1.0 - dist.cdf(statistic);
    ChiSquareReport {
        statistic,
        dof,
        p_value,
        pass: p_value > SIGNIFICANCE,
    }
}

/// Per-cell multinomial agreement within `sigmas` standard deviations.
///
/// Every observed outcome must appear in the expected law, and every
/// expected cell must be hit within the band.
pub fn multinomial_within_sigma(
    observed: &BTreeMap<(u32, i64, i64), u64>,
    expected: &BTreeMap<(u32, i64, i64), f64>,
    n: u64,
    sigmas: f64,
) -> Result<(), String> {
    for key in observed.keys() {
        if !expected.contains_key(key) {
            return Err(format!("outcome {key:?} observed but has probability 0"));
        }
    }
    for (key, &p) in expected {
        let obs = *observed.get(key).unwrap_or(&0) as f64;
        let mean = n as f64 * p;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        if (obs - mean).abs() > sigmas * sd {
            return Err(format!(
                "cell {key:?}: observed {obs}, expected {mean:.1} +- {sd:.1}"
            ));
        }
    }
    Ok(())
}

/// Runs a seeded check, retrying once with the second seed on failure.
/// Statistical suites at significance 1e-3 fail only on a double failure.
pub fn passes_with_retry(mut check: impl FnMut(u64) -> bool, seeds: (u64, u64)) -> bool {
    check(seeds.0) || check(seeds.1)
}

/// Case generator shared by the randomized suites: a phase point with
/// coordinates uniform in `[-scale, scale]`, a direction string, a step size
/// and a refinement factor.
pub fn random_case<R: rand::Rng>(
    dim: usize,
    scale: f64,
    max_doublings: usize,
    rng: &mut R,
) -> (PhasePoint, DirectionString, f64, u32) {
    let z = PhasePoint::new(
        (0..dim).map(|_| rng.gen_range(-scale..scale)).collect(),
        (0..dim).map(|_| rng.gen_range(-scale..scale)).collect(),
    );
    let dirs = DirectionString::random(max_doublings, rng);
    let step_size = rng.gen_range(0.2..0.8);
    let refinement = 1 << rng.gen_range(0..3u32);
    (z, dirs, step_size, refinement)
}

/// Checks on random cases that orbit selection agrees with the closed-form
/// law oracle. Returns the number of cases on success.
pub fn orbit_law_suite<M: Model + ?Sized>(
    model: &M,
    cases: usize,
    max_doublings: usize,
    seed: u64,
) -> Result<usize, String> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let (z, dirs, step_size, refinement) =
            random_case(model.dim(), 2.0, max_doublings, &mut rng);
        let orbit = orbit_selection(model, &z, &dirs, step_size, refinement);
        let oracle = orbit_law_oracle(model, &z, &dirs, step_size, refinement);
        if (orbit.doublings, orbit.a, orbit.b) != oracle {
            return Err(format!(
                "case {case}: selection gave ({}, {}, {}), oracle {oracle:?}",
                orbit.doublings, orbit.a, orbit.b
            ));
        }
    }
    Ok(cases)
}

/// Checks on random cases that the recursive sub-U-turn indicator equals
/// the tree-enumeration oracle.
pub fn sub_u_turn_suite<M: Model + ?Sized>(
    model: &M,
    cases: usize,
    seed: u64,
) -> Result<usize, String> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let (z, _, step_size, refinement) = random_case(model.dim(), 2.0, 0, &mut rng);
        let ell = rng.gen_range(0..5u32);
        let size = 1i64 << ell;
        let a = rng.gen_range(-size..=size.min(8));
        let b = a + size - 1;
        let recursive = indicator_sub_u_turn(model, a, b, &z, step_size, refinement);
        let oracle = sub_u_turn_tree_oracle(model, a, b, &z, step_size, refinement);
        if recursive != oracle {
            return Err(format!(
                "case {case}: recursive {recursive}, tree oracle {oracle} on [{a}:{b}]"
            ));
        }
    }
    Ok(cases)
}

/// For randomly selected orbits, reruns orbit selection from every iterate
/// with the reconstructed direction string; the endpoints must shift by
/// exactly the iterate's index and the doubling count must not change.
/// Returns the number of `(orbit, index)` pairs checked.
pub fn endpoint_shift_suite<M: Model + ?Sized>(
    model: &M,
    orbits: usize,
    max_doublings: usize,
    seed: u64,
) -> Result<usize, String> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0usize;
    for case in 0..orbits {
        let (z, dirs, step_size, refinement) =
            random_case(model.dim(), 2.0, max_doublings, &mut rng);
        let orbit = orbit_selection(model, &z, &dirs, step_size, refinement);
        if orbit.energy_gap == f64::INFINITY {
            continue;
        }
        for index in orbit.a..=orbit.b {
            let moved = leapfrog_refined(model, &z, index, step_size, refinement).endpoint;
            let star = gist_nuts_core::b_star(index, orbit.a, orbit.b, &dirs);
            let shifted = orbit_selection(model, &moved, &star, step_size, refinement);
            if (shifted.a, shifted.b, shifted.doublings)
                != (orbit.a - index, orbit.b - index, orbit.doublings)
            {
                return Err(format!(
                    "case {case}, index {index}: orbit ({}, {}, {}) became ({}, {}, {})",
                    orbit.a, orbit.b, orbit.doublings, shifted.a, shifted.b, shifted.doublings
                ));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

/// Numeric detailed-balance identity on one case: for every index `L` of
/// the selected orbit,
/// `exp(-H(z)) q(L | z) = exp(-H(z_L)) q(-L | z_L)` where `z_L` is the
/// iterate at `L`, the reverse law is taken over the shifted orbit grown
/// with the reconstructed direction string, and both sides are computed by
/// fresh integration. Returns the worst relative error.
pub fn detailed_balance_max_rel_err<M: Model + ?Sized>(
    model: &M,
    z: &PhasePoint,
    dirs: &DirectionString,
    step_size: f64,
    refinement: u32,
) -> Result<f64, String> {
    let orbit = orbit_selection(model, z, dirs, step_size, refinement);
    if orbit.energy_gap == f64::INFINITY {
        return Ok(0.0);
    }
    let weights = boltzmann_weights(model, z, orbit.a, orbit.b, step_size, refinement);
    let start_factor = (-hamiltonian(model, z)).exp();
    let mut worst = 0.0f64;
    for (offset, index) in (orbit.a..=orbit.b).enumerate() {
        let lhs = start_factor * weights[offset];
        let moved = leapfrog_refined(model, z, index, step_size, refinement).endpoint;
        let star = gist_nuts_core::b_star(index, orbit.a, orbit.b, dirs);
        let back = orbit_selection(model, &moved, &star, step_size, refinement);
        if (back.a, back.b) != (orbit.a - index, orbit.b - index) {
            return Err(format!("index {index}: shifted orbit mismatch"));
        }
        let back_weights = boltzmann_weights(model, &moved, back.a, back.b, step_size, refinement);
        let rhs = (-hamiltonian(model, &moved)).exp() * back_weights[(-orbit.a) as usize];
        let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs());
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Exhaustive check over every direction string up to `max_len` bits, every
/// doubling count up to `min(max_len, 4)` and every index of the generated
/// orbit: reconstructing twice returns the original string, and the
/// reconstructed prefix grows exactly the shifted orbit. Returns the number
/// of triples checked.
pub fn b_star_involution_exhaustive(max_len: usize) -> Result<usize, String> {
    use gist_nuts_core::{b_star, beta_string};
    let mut checks = 0usize;
    for m in 0..=max_len {
        for raw in 0u64..(1 << m) {
            let dirs = DirectionString::from_bits((0..m).map(|i| raw >> i & 1 == 1).collect());
            for ell in 0..=m.min(4) {
                let (a, b) = orbit_endpoints(&dirs.as_bits()[..ell]);
                for index in a..=b {
                    let star = b_star(index, a, b, &dirs);
                    if b_star(-index, a - index, b - index, &star) != dirs {
                        return Err(format!("double reconstruction broke at m={m} L={index}"));
                    }
                    if orbit_endpoints(&beta_string(index, a, b)) != (a - index, b - index) {
                        return Err(format!("prefix shift broke at m={m} L={index}"));
                    }
                    checks += 1;
                }
            }
        }
    }
    Ok(checks)
}

/// One named check of the verification report.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Outcome of the standard verification run, serialized for CI consumption.
#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub all_pass: bool,
    pub suites: Vec<SuiteResult>,
}

/// Runs the reversibility and oracle suites at a size suited to CI.
pub fn standard_verification(seed: u64) -> VerificationReport {
    use gist_nuts_core::{beta_string, AdaptiveConfig, Funnel, StdNormal};

    let mut suites = Vec::new();
    let mut add = |name: &str, outcome: Result<String, String>| {
        suites.push(match outcome {
            Ok(detail) => SuiteResult {
                name: name.to_string(),
                pass: true,
                detail,
            },
            Err(detail) => SuiteResult {
                name: name.to_string(),
                pass: false,
                detail,
            },
        });
    };

    // Direction-string combinatorics, exhaustive at small sizes.
    add("direction_combinatorics", {
        let beta = beta_string(2, -3, 4);
        if beta != vec![true, false, true] {
            Err(format!("beta(2, -3, 4) = {beta:?}"))
        } else {
            b_star_involution_exhaustive(6).map(|checks| format!("{checks} exhaustive checks"))
        }
    });

    let funnel = Funnel::new(3);
    let normal = StdNormal::new(2);

    add(
        "orbit_law_oracle",
        orbit_law_suite(&normal, 150, 6, seed)
            .and_then(|n| orbit_law_suite(&funnel, 150, 6, seed + 1).map(|m| n + m))
            .map(|n| format!("{n} cases")),
    );

    add(
        "sub_u_turn_tree_oracle",
        sub_u_turn_suite(&normal, 150, seed + 2)
            .and_then(|n| sub_u_turn_suite(&funnel, 150, seed + 3).map(|m| n + m))
            .map(|n| format!("{n} cases")),
    );

    add(
        "endpoint_shift",
        endpoint_shift_suite(&normal, 60, 6, seed + 4)
            .and_then(|n| endpoint_shift_suite(&funnel, 60, 6, seed + 5).map(|m| n + m))
            .map(|n| format!("{n} (orbit, index) pairs")),
    );

    add("g_involution", {
        let cfg = AdaptiveConfig::new(0.5, 6, 0.7);
        let states = crate::run::collect_enlarged_states(&funnel, &cfg, &[0.0; 4], 1000, seed + 6);
        let report = check_g_involution(&funnel, cfg.step_size, &states);
        if report.pass(1e-8) {
            Ok(format!(
                "{} states, max deviation {:.2e}",
                report.cases,
                report.max_position_dev.max(report.max_momentum_dev)
            ))
        } else {
            Err(format!("{report:?}"))
        }
    });

    add("detailed_balance", {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed + 7);
        let mut worst = 0.0f64;
        let mut err = None;
        for _ in 0..60 {
            let (z, dirs, step_size, refinement) = random_case(2, 1.5, 4, &mut rng);
            match detailed_balance_max_rel_err(&normal, &z, &dirs, step_size, refinement) {
                Ok(rel) => worst = worst.max(rel),
                Err(e) => {
                    err = Some(e);
                    break;
                }
            }
        }
        match err {
            Some(e) => Err(e),
            None if worst <= 1e-10 => Ok(format!("max relative error {worst:.2e}")),
            None => Err(format!("max relative error {worst:.2e} above 1e-10")),
        }
    });

    add("kernel_table", {
        let z = PhasePoint::new(vec![1.0], vec![0.0]);
        let model = StdNormal::new(1);
        let table = brute_force_orbit_kernel(&model, &z, 0.5, 1, 6);
        match table.check_consistency() {
            Err(e) => Err(e),
            Ok(()) => {
                let ok = passes_with_retry(
                    |s| empirical_kernel_matches(&model, &z, 0.5, 1, 6, 20_000, s, 4.0).is_ok(),
                    (seed + 8, seed + 9),
                );
                if ok {
                    Ok(format!("{} outcomes", table.entries.len()))
                } else {
                    empirical_kernel_matches(&model, &z, 0.5, 1, 6, 20_000, seed + 8, 4.0)
                        .map(|_| String::new())
                }
            }
        }
    });

    add("ks_stationarity", {
        let model = StdNormal::new(1);
        let cfg = AdaptiveConfig::new(0.5, 8, 0.7);
        let check = |s: u64| {
            let states = crate::run::collect_enlarged_states(&model, &cfg, &[0.0], 20_000, s);
            let draws: Vec<f64> = states.iter().map(|st| st.point.position[0]).collect();
            let normal_cdf = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
            ks_stationarity_test(&draws, |x| normal_cdf.cdf(x)).pass
        };
        if passes_with_retry(check, (seed + 10, seed + 11)) {
            Ok("adaptive draws match the exact law".to_string())
        } else {
            Err("KS test failed twice".to_string())
        }
    });

    let all_pass = suites.iter().all(|s| s.pass);
    VerificationReport {
        seed,
        all_pass,
        suites,
    }
}

/// Draws `n` random direction strings, bins the resulting orbits and
/// compares the empirical frequencies against the enumerated kernel within
/// `sigmas` multinomial standard deviations per cell.
#[allow(clippy::too_many_arguments)]
pub fn empirical_kernel_matches<M: Model + ?Sized>(
    model: &M,
    z: &PhasePoint,
    step_size: f64,
    refinement: u32,
    max_doublings: u32,
    n: u64,
    seed: u64,
    sigmas: f64,
) -> Result<(), String> {
    let table = brute_force_orbit_kernel(model, z, step_size, refinement, max_doublings);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut observed: BTreeMap<(u32, i64, i64), u64> = BTreeMap::new();
    for _ in 0..n {
        let dirs = DirectionString::random(max_doublings as usize, &mut rng);
        let orbit = orbit_selection(model, z, &dirs, step_size, refinement);
        *observed
            .entry((orbit.doublings, orbit.a, orbit.b))
            .or_insert(0) += 1;
    }
    multinomial_within_sigma(&observed, &table.entries, n, sigmas)
}
