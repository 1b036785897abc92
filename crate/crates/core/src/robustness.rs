//! Stability of the weak-value concurrence for nearly pure joint states.
//!
//! The mixedness `M(rho)` is the trace distance from `rho` to the nearest
//! pure state. It is certified here from above by an explicit pure witness,
//! which is all the inequalities below need:
//!
//! ```text
//! (1 - tr rho^2) / 4              <= M
//! |C(rho1) - C(rho2)|             <= 2 D(rho1, rho2)
//! |det z1 - det z2|               <= 2 D(rho1, rho2)
//! |C(rho)^2 - 4 det z|            <= 12 M
//! 4 (det z - 3M) <= C(rho)^2      <= 4 (det z + 3M)
//! ```
//!
//! where `z` is the reduced state of the first qubit.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::qubit_core::{
    concurrence_mixed, det2, partial_trace, purity, trace_distance, DensityMatrix, PureState, Subsystem,
    TwoQubitState,
};
use crate::random::{haar_state, hilbert_schmidt_state, stream_rng};

pub const DEFAULT_REFINE_ITERS: usize = 50;
const SEARCH_DIRECTIONS: usize = 8;
const INITIAL_STEP: f64 = 0.1;
/// Purity above which a state is treated as pure for the pure-reference bound.
const PURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixednessCertificate {
    /// Trace distance from `rho` to the witness projector.
    pub m_upper: f64,
    pub witness: PureState,
    /// Lower bound on the mixedness from the purity, `(1 - tr rho^2) / 4`.
    pub purity_lower: f64,
    /// Whether refinement was run.
    pub refined: bool,
    /// Accepted refinement steps (each strictly lowers `m_upper`).
    pub improvements: usize,
}

fn witness_distance(v: &[C64; 4], rho: &TwoQubitState) -> f64 {
    let proj = DensityMatrix::from_pure(v).expect("unit witness");
    trace_distance(&proj, rho)
}

fn normalize(v: [C64; 4]) -> [C64; 4] {
    let n = linalg::norm_sqr(&v).sqrt();
    v.map(|z| z / n)
}

/// Upper bound on the mixedness, with `refine_iters` rounds of direct search.
pub fn mixedness_upper(rho: &TwoQubitState, refine_iters: usize) -> MixednessCertificate {
    mixedness_upper_seeded(rho, refine_iters, 0)
}

/// As [`mixedness_upper`], with the search directions drawn from `seed`.
pub fn mixedness_upper_seeded(rho: &TwoQubitState, refine_iters: usize, seed: u64) -> MixednessCertificate {
    let eig = linalg::eigh(rho.matrix());
    let mut best = normalize(eig.vector(0));
    let mut best_d = witness_distance(&best, rho);
    let mut improvements = 0;

    let mut rng = stream_rng(seed, 0);
    let mut step = INITIAL_STEP;
    for _ in 0..refine_iters {
        let mut moved = false;
        for _ in 0..SEARCH_DIRECTIONS {
            let t: [C64; 4] = std::array::from_fn(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
            // tangent to the sphere at `best`
            let overlap = linalg::inner(&best, &t);
            let t: [C64; 4] = std::array::from_fn(|i| t[i] - overlap * best[i]);
            let tn = linalg::norm_sqr(&t).sqrt();
            if tn == 0.0 {
                continue;
            }
            let cand = normalize(std::array::from_fn(|i| best[i] + t[i] * (step / tn)));
            let d = witness_distance(&cand, rho);
            if d < best_d {
                best = cand;
                best_d = d;
                improvements += 1;
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }

    MixednessCertificate {
        m_upper: best_d,
        witness: PureState::new(best).expect("unit witness"),
        purity_lower: purity_lower_bound(rho),
        refined: refine_iters > 0,
        improvements,
    }
}

/// `(1 - tr rho^2) / 4`
pub fn purity_lower_bound(rho: &TwoQubitState) -> f64 {
    (1.0 - purity(rho)) / 4.0
}

/// Bounds on `C(rho)^2`; `c_minus` may be negative for strongly mixed states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceBounds {
    pub c_minus: f64,
    pub c_plus: f64,
}

impl ConcurrenceBounds {
    pub fn contains(&self, c_squared: f64, tol: f64) -> bool {
        self.c_minus - tol <= c_squared && c_squared <= self.c_plus + tol
    }
}

pub fn concurrence_bounds(rho: &TwoQubitState) -> ConcurrenceBounds {
    concurrence_bounds_with(rho, &mixedness_upper(rho, 0))
}

pub fn concurrence_bounds_with(rho: &TwoQubitState, cert: &MixednessCertificate) -> ConcurrenceBounds {
    let det = det2(&partial_trace(rho, Subsystem::A));
    ConcurrenceBounds { c_minus: 4.0 * (det - 3.0 * cert.m_upper), c_plus: 4.0 * (det + 3.0 * cert.m_upper) }
}

/// One inequality `lhs <= rhs`, with `slack = rhs - lhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl BoundCheck {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        Self { name: name.to_string(), lhs, rhs, slack: rhs - lhs }
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.slack >= -tol
    }
}

fn is_pure(rho: &TwoQubitState) -> bool {
    purity(rho) >= 1.0 - PURE_TOL
}

/// The two continuity bounds between `rho1` and `rho2`, plus the master
/// bound against `rho2` when `rho2` is pure.
pub fn verify_appendix_bounds(rho1: &TwoQubitState, rho2: &TwoQubitState) -> Vec<BoundCheck> {
    let d = trace_distance(rho1, rho2);
    let c1 = concurrence_mixed(rho1);
    let c2 = concurrence_mixed(rho2);
    let det1 = det2(&partial_trace(rho1, Subsystem::A));
    let det2_ = det2(&partial_trace(rho2, Subsystem::A));
    let mut out = vec![
        BoundCheck::new("concurrence_continuity", (c1 - c2).abs(), 2.0 * d),
        BoundCheck::new("determinant_continuity", (det1 - det2_).abs(), 2.0 * d),
    ];
    if is_pure(rho2) {
        out.push(BoundCheck::new("master_pure_reference", (c1 * c1 - 4.0 * det1).abs(), 12.0 * d));
    }
    out
}

/// Bounds that involve a single state through its mixedness certificate.
pub fn verify_state_bounds(rho: &TwoQubitState, cert: &MixednessCertificate) -> Vec<BoundCheck> {
    let c = concurrence_mixed(rho);
    let det = det2(&partial_trace(rho, Subsystem::A));
    let b = concurrence_bounds_with(rho, cert);
    vec![
        BoundCheck::new("purity_bound", cert.purity_lower, cert.m_upper),
        BoundCheck::new("master_mixedness", (c * c - 4.0 * det).abs(), 12.0 * cert.m_upper),
        BoundCheck::new("sandwich_lower", b.c_minus, c * c),
        BoundCheck::new("sandwich_upper", c * c, b.c_plus),
    ]
}

/// One sampled state of a campaign and all of its checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSample {
    pub index: usize,
    pub epsilon: f64,
    pub m_upper: f64,
    pub checks: Vec<BoundCheck>,
}

impl CampaignSample {
    pub fn violations(&self, tol: f64) -> usize {
        self.checks.iter().filter(|c| !c.holds(tol)).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub samples: usize,
    pub max_epsilon: f64,
    pub refine_iters: usize,
    pub seed: u64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self { samples: 1000, max_epsilon: 0.3, refine_iters: DEFAULT_REFINE_ITERS, seed: 0 }
    }
}

/// Mix a Haar pure state with Hilbert-Schmidt noise at a uniform weight in
/// `[0, max_epsilon]` and check every bound against the state and its pure part.
pub fn campaign(config: &CampaignConfig) -> Result<Vec<CampaignSample>> {
    if !(0.0..=1.0).contains(&config.max_epsilon) {
        return Err(Error::OutOfRange(format!("mixing weight {} outside [0, 1]", config.max_epsilon)));
    }
    (0..config.samples)
        .into_par_iter()
        .map(|index| {
            let mut rng = stream_rng(config.seed, index as u64);
            let psi = haar_state(&mut rng);
            let sigma = hilbert_schmidt_state(&mut rng);
            let epsilon = rng.random::<f64>() * config.max_epsilon;
            let pure = psi.projector();
            let rho = pure.mix(&sigma, epsilon)?;
            let cert = mixedness_upper_seeded(&rho, config.refine_iters, config.seed ^ index as u64);
            let mut checks = verify_state_bounds(&rho, &cert);
            checks.extend(verify_appendix_bounds(&rho, &pure));
            Ok(CampaignSample { index, epsilon, m_upper: cert.m_upper, checks })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit_core::werner;

    #[test]
    fn pure_state_has_zero_mixedness() {
        let cert = mixedness_upper(&PureState::bell_phi_plus().projector(), 10);
        assert!(cert.m_upper.abs() < 1e-12);
        assert!(cert.purity_lower.abs() < 1e-12);
        let b = concurrence_bounds(&PureState::bell_phi_plus().projector());
        assert!((b.c_minus - 1.0).abs() < 1e-12 && (b.c_plus - 1.0).abs() < 1e-12);
        let b = concurrence_bounds(&PureState::basis(0, 1).projector());
        assert!(b.c_minus.abs() < 1e-12 && b.c_plus.abs() < 1e-12);
    }

    #[test]
    fn werner_values() {
        let rho = werner(0.9).unwrap();
        let cert = mixedness_upper(&rho, 0);
        assert!((cert.m_upper - 0.075).abs() < 1e-12);
        assert!((cert.purity_lower - 0.035625).abs() < 1e-12);
        let phi = PureState::bell_phi_plus();
        let fid = linalg::inner(phi.amplitudes(), cert.witness.amplitudes()).norm();
        assert!((fid - 1.0).abs() < 1e-12);
        let b = concurrence_bounds(&rho);
        assert!((b.c_minus - 0.1).abs() < 1e-12 && (b.c_plus - 1.9).abs() < 1e-12);
        assert!(b.contains(0.7225, 0.0));
        let checks = verify_appendix_bounds(&rho, &phi.projector());
        let master = checks.iter().find(|c| c.name == "master_pure_reference").unwrap();
        assert!((master.lhs - 0.2775).abs() < 1e-12 && (master.rhs - 0.9).abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_mixedness() {
        let rho = DensityMatrix::<4>::maximally_mixed();
        let cert = mixedness_upper(&rho, 20);
        assert!((cert.m_upper - 0.75).abs() < 1e-12);
        assert!((purity_lower_bound(&rho) - 3.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn identical_states_have_full_slack() {
        let rho = werner(0.6).unwrap();
        for c in verify_appendix_bounds(&rho, &rho) {
            assert!(c.lhs.abs() < 1e-12);
            assert!((c.slack - c.rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn refinement_never_increases_the_bound() {
        let mut rng = stream_rng(4, 0);
        let rho = crate::random::near_pure_state(&mut rng, 0.25).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..6 {
            let m = mixedness_upper_seeded(&rho, k, 9).m_upper;
            assert!(m <= prev);
            prev = m;
        }
    }

    #[test]
    fn small_campaign_has_no_violations() {
        let cfg = CampaignConfig { samples: 40, refine_iters: 5, ..Default::default() };
        let rows = campaign(&cfg).unwrap();
        assert_eq!(rows.len(), 40);
        assert!(rows.iter().all(|r| r.violations(1e-10) == 0));
    }
}
