//! Post-selected weak values and the regime split used by the estimator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, C64};
use crate::qubit_core::QubitState;

/// Post-selection probability below which a weak value is undefined.
pub const EPS_DENOMINATOR: f64 = 1e-12;
/// Magnitude below which a weak value counts as vanishing.
pub const EPS_ORIGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub denominator: f64,
    pub origin: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { denominator: EPS_DENOMINATOR, origin: EPS_ORIGIN }
    }
}

/// A weak value together with its post-selection probability.
/// `value` is `None` exactly when the probability is below the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakValue {
    pub value: Option<C64>,
    pub denominator: f64,
}

impl WeakValue {
    pub fn is_defined(&self) -> bool {
        self.value.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Regular,
    OriginSingular,
    Undefined,
}

/// The two sigma_x weak values of a qubit post-selected on `|0>` and `|1>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakValuePair {
    pub w0: Option<C64>,
    pub w1: Option<C64>,
    pub p0: f64,
    pub p1: f64,
    pub regime: Regime,
}

impl WeakValuePair {
    /// Assemble a pair from measured or computed parts and classify it.
    ///
    /// Values whose probability falls below `thresholds.denominator` are
    /// dropped to the undefined marker.
    pub fn from_parts(w0: Option<C64>, w1: Option<C64>, p0: f64, p1: f64, thresholds: &Thresholds) -> Result<Self> {
        if !(p0.is_finite() && p1.is_finite()) || p0 < 0.0 || p1 < 0.0 {
            return Err(Error::OutOfRange(format!("post-selection probabilities ({p0}, {p1}) must be nonnegative")));
        }
        if (p0 + p1 - 1.0).abs() > 1e-12 {
            return Err(Error::InconsistentPair(format!("p0 + p1 = {} (expected 1)", p0 + p1)));
        }
        let keep = |w: Option<C64>, p: f64| if p < thresholds.denominator { None } else { w };
        let mut pair = Self { w0: keep(w0, p0), w1: keep(w1, p1), p0, p1, regime: Regime::Regular };
        pair.regime = classify_regime(&pair, thresholds);
        Ok(pair)
    }

    pub fn weak0(&self) -> WeakValue {
        WeakValue { value: self.w0, denominator: self.p0 }
    }

    pub fn weak1(&self) -> WeakValue {
        WeakValue { value: self.w1, denominator: self.p1 }
    }

    /// `(|w0|, |w1|)` when both are defined.
    pub fn magnitudes(&self) -> Option<(f64, f64)> {
        Some((self.w0?.norm(), self.w1?.norm()))
    }
}

pub fn sigma_x() -> Mat<2> {
    [[linalg::ZERO, linalg::ONE], [linalg::ONE, linalg::ZERO]]
}

/// General weak value `tr[A rho |phi><phi|] / tr[rho |phi><phi|]`.
pub fn weak_value(observable: &Mat<2>, rho: &QubitState, postselect: &[C64; 2]) -> Result<WeakValue> {
    weak_value_with(observable, rho, postselect, EPS_DENOMINATOR)
}

pub fn weak_value_with(observable: &Mat<2>, rho: &QubitState, postselect: &[C64; 2], eps_den: f64) -> Result<WeakValue> {
    let defect = linalg::hermiticity_defect(observable);
    if defect > 1e-12 || !linalg::is_finite(observable) {
        return Err(Error::NonHermitian(defect));
    }
    let norm = linalg::norm_sqr(postselect);
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnitVector(norm));
    }
    let rho_phi = linalg::mat_vec(rho.matrix(), postselect);
    let denominator = linalg::inner(postselect, &rho_phi).re.max(0.0);
    let numerator = linalg::inner(postselect, &linalg::mat_vec(observable, &rho_phi));
    let value = (denominator >= eps_den).then(|| numerator / denominator);
    Ok(WeakValue { value, denominator })
}

/// Alice's sigma_x weak values post-selected on `|0>` and `|1>`, read off the
/// entries of her reduced state.
pub fn sigma_x_weak_pair(rho_a: &QubitState) -> WeakValuePair {
    sigma_x_weak_pair_with(rho_a, &Thresholds::default())
}

pub fn sigma_x_weak_pair_with(rho_a: &QubitState, thresholds: &Thresholds) -> WeakValuePair {
    let p0 = rho_a.entry(0, 0).re.max(0.0);
    let p1 = rho_a.entry(1, 1).re.max(0.0);
    let w0 = (p0 >= thresholds.denominator).then(|| rho_a.entry(1, 0) / p0);
    let w1 = (p1 >= thresholds.denominator).then(|| rho_a.entry(0, 1) / p1);
    let mut pair = WeakValuePair { w0, w1, p0, p1, regime: Regime::Regular };
    pair.regime = classify_regime(&pair, thresholds);
    pair
}

pub fn classify_regime(pair: &WeakValuePair, thresholds: &Thresholds) -> Regime {
    match (pair.w0, pair.w1) {
        (Some(w0), Some(w1)) if pair.p0 >= thresholds.denominator && pair.p1 >= thresholds.denominator => {
            if w0.norm() < thresholds.origin && w1.norm() < thresholds.origin {
                Regime::OriginSingular
            } else {
                Regime::Regular
            }
        }
        _ => Regime::Undefined,
    }
}
