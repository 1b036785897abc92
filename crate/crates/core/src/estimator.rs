//! Concurrence from Alice's two sigma_x weak values.
//!
//! Dispatch follows the weak-value regime: the magnitude formula for regular
//! pairs, the post-selection probabilities when both weak values vanish, and
//! zero when a post-selection branch carries no signal at all.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::qubit_core::{entropy_from_concurrence, QubitState};
use crate::weak_values::{sigma_x_weak_pair_with, Regime, Thresholds, WeakValuePair};

/// Overshoot of `|w0| |w1|` above one that is still accepted (and clamped).
pub const PRODUCT_TOL: f64 = 1e-9;
/// Tolerance on `p0 w0 = conj(p1 w1)` when rebuilding a reduced state.
pub const RECONSTRUCTION_TOL: f64 = 1e-6;
/// `|m0 - m1|` below which the equatorial shortcut is reported.
const EQUATORIAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    WeakValueFormula,
    Equatorial,
    DiagonalIntensity,
    UndefinedLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub name: String,
    pub value: f64,
}

impl Diagnostic {
    pub fn new(name: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), value }
    }
}

/// Spread of a statistical estimate, on the concurrence scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Uncertainty {
    pub sigma: f64,
    pub lower: f64,
    pub upper: f64,
    pub resamples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub concurrence: f64,
    pub route: Route,
    pub entropy: f64,
    pub pair: WeakValuePair,
    pub reconstructed_rho: Option<QubitState>,
    pub diagnostics: Vec<Diagnostic>,
    pub warnings: Vec<String>,
    pub uncertainty: Option<Uncertainty>,
}

impl EstimateReport {
    pub fn diagnostic(&self, name: &str) -> Option<f64> {
        self.diagnostics.iter().find(|d| d.name == name).map(|d| d.value)
    }
}

fn check_magnitude(name: &str, m: f64) -> Result<()> {
    if !m.is_finite() || m < 0.0 {
        return Err(Error::OutOfRange(format!("{name} = {m} must be finite and nonnegative")));
    }
    Ok(())
}

/// `C^2 = 4 (1 - m0 m1) m0 m1 / (m0 + m1)^2` in terms of `m_i = |w_i|`.
pub fn concurrence_from_weak_values(m0: f64, m1: f64) -> Result<f64> {
    check_magnitude("m0", m0)?;
    check_magnitude("m1", m1)?;
    if m0 == 0.0 && m1 == 0.0 {
        return Err(Error::BothWeakValuesZero);
    }
    let product = m0 * m1;
    if product > 1.0 + PRODUCT_TOL {
        return Err(Error::ProductExceedsOne(product));
    }
    let product = product.min(1.0);
    let sum = m0 + m1;
    let c2 = 4.0 * (1.0 - product) * product / (sum * sum);
    Ok(c2.clamp(0.0, 1.0).sqrt())
}

/// The same formula for noisy magnitudes: the product is clamped to `[0, 1]`
/// instead of rejected. `None` when both magnitudes vanish.
pub fn concurrence_from_noisy_weak_values(m0: f64, m1: f64) -> Option<f64> {
    let sum = m0 + m1;
    if !(sum > 0.0) {
        return None;
    }
    let product = (m0 * m1).clamp(0.0, 1.0);
    let c2 = 4.0 * (1.0 - product) * product / (sum * sum);
    Some(c2.clamp(0.0, 1.0).sqrt())
}

/// `C = sqrt(1 - m^2)` on the line `|w0| = |w1| = m`.
pub fn concurrence_equatorial(m: f64) -> Result<f64> {
    check_magnitude("m", m)?;
    if m > 1.0 {
        return Err(Error::OutOfRange(format!("equatorial magnitude {m} exceeds 1")));
    }
    Ok(((1.0 - m) * (1.0 + m)).sqrt())
}

/// `C = 2 sqrt(p0 p1)` for a diagonal reduced state of a pure joint state.
pub fn concurrence_origin(p0: f64, p1: f64) -> Result<f64> {
    if p0 < 0.0 || p1 < 0.0 || !p0.is_finite() || !p1.is_finite() {
        return Err(Error::OutOfRange(format!("negative post-selection probability ({p0}, {p1})")));
    }
    if (p0 + p1 - 1.0).abs() > 1e-12 {
        return Err(Error::OutOfRange(format!("probabilities sum to {}", p0 + p1)));
    }
    Ok((2.0 * (p0 * p1).sqrt()).min(1.0))
}

/// Rebuild Alice's reduced state from the weak values and probabilities.
///
/// The off-diagonal entry is `rho_10 = p0 w0 = conj(p1 w1)`; when both are
/// available they are checked against each other and averaged.
pub fn reconstruct_reduced_state(pair: &WeakValuePair) -> Result<QubitState> {
    let from0 = pair.w0.map(|w| w * pair.p0);
    let from1 = pair.w1.map(|w| (w * pair.p1).conj());
    let rho10 = match (from0, from1) {
        (Some(a), Some(b)) => {
            let gap = (a - b).norm();
            if gap > RECONSTRUCTION_TOL {
                return Err(Error::InconsistentPair(format!(
                    "p0*w0 and conj(p1*w1) differ by {gap:.3e}"
                )));
            }
            0.5 * (a + b)
        }
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => return Err(Error::InconsistentPair("neither weak value is defined".into())),
    };
    QubitState::new([
        [C64::new(pair.p0, 0.0), rho10.conj()],
        [rho10, C64::new(pair.p1, 0.0)],
    ])
}

/// Full estimate from an exact reduced state.
pub fn estimate(rho_a: &QubitState) -> Result<EstimateReport> {
    estimate_with(rho_a, &Thresholds::default())
}

pub fn estimate_with(rho_a: &QubitState, thresholds: &Thresholds) -> Result<EstimateReport> {
    estimate_pair(&sigma_x_weak_pair_with(rho_a, thresholds))
}

/// Estimate from an already classified weak-value pair.
pub fn estimate_pair(pair: &WeakValuePair) -> Result<EstimateReport> {
    let mut diagnostics = vec![Diagnostic::new("p0", pair.p0), Diagnostic::new("p1", pair.p1)];
    let mut warnings = Vec::new();
    let (concurrence, route) = match pair.regime {
        Regime::Regular => {
            let (m0, m1) = pair.magnitudes().ok_or_else(|| {
                Error::InconsistentPair("regular regime without two defined weak values".into())
            })?;
            diagnostics.push(Diagnostic::new("m0", m0));
            diagnostics.push(Diagnostic::new("m1", m1));
            diagnostics.push(Diagnostic::new("m0_m1", m0 * m1));
            if (m0 - m1).abs() <= EQUATORIAL_TOL {
                (concurrence_equatorial((0.5 * (m0 + m1)).min(1.0))?, Route::Equatorial)
            } else {
                (concurrence_from_weak_values(m0, m1)?, Route::WeakValueFormula)
            }
        }
        Regime::OriginSingular => {
            diagnostics.push(Diagnostic::new("assumes_pure_joint_state", 1.0));
            warnings.push(
                "both weak values vanish: concurrence taken from the post-selection probabilities, \
                 valid only for a pure joint state"
                    .to_string(),
            );
            (concurrence_origin(pair.p0, pair.p1)?, Route::DiagonalIntensity)
        }
        Regime::Undefined => (0.0, Route::UndefinedLimit),
    };
    let reconstructed = reconstruct_reduced_state(pair)?;
    Ok(EstimateReport {
        concurrence,
        route,
        entropy: entropy_from_concurrence(concurrence)?,
        pair: *pair,
        reconstructed_rho: Some(reconstructed),
        diagnostics,
        warnings,
        uncertainty: None,
    })
}

/// One sample of the concurrence surface over `(|w0|, |w1|)`.
/// `concurrence` is `None` in the excluded region `m0 m1 > 1` and at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub m0: f64,
    pub m1: f64,
    pub concurrence: Option<f64>,
}

/// Uniform `n x n` grid over `[0, max]^2`, rows ordered by `m0`.
pub fn sweep_surface(n: usize, max: f64) -> Result<Vec<SweepPoint>> {
    if n < 2 {
        return Err(Error::OutOfRange(format!("sweep needs at least 2 points per axis, got {n}")));
    }
    if !(max.is_finite() && max > 0.0) {
        return Err(Error::OutOfRange(format!("sweep range {max} must be positive")));
    }
    let axis: Vec<f64> = (0..n).map(|i| max * i as f64 / (n - 1) as f64).collect();
    let rows: Vec<Vec<SweepPoint>> = axis
        .par_iter()
        .map(|&m0| {
            axis.iter()
                .map(|&m1| {
                    let concurrence = if m0 * m1 > 1.0 || (m0 == 0.0 && m1 == 0.0) {
                        None
                    } else {
                        concurrence_from_weak_values(m0, m1).ok()
                    };
                    SweepPoint { m0, m1, concurrence }
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}
