//! Two-qubit states, reduced states and the exact entanglement oracles.
//!
//! Basis ordering is `|00>, |01>, |10>, |11>` with the first factor
//! belonging to subsystem A (Alice) and the second to B (Bob). Amplitude
//! `a_ij` sits at index `2i + j`.
//!
//! Reduced states use the entry convention of the weak-value formulas: the
//! `(0, 1)` element of Alice's state is `a00* a10 + a01* a11`. That is the
//! transpose of the textbook partial trace; spectra, determinants, purities
//! and trace distances are unchanged by it, only the sign of imaginary
//! off-diagonal parts (and hence of `Im w`) follows the convention.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, C64, ONE, ZERO};

/// Allowed deviation of `sum |a_ij|^2` from one.
pub const NORM_TOL: f64 = 1e-12;
/// Allowed Hermiticity defect and trace deviation of a density matrix.
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
/// Most negative eigenvalue still accepted as positive. Such eigenvalues are
/// clamped to zero before any logarithm or square root.
pub const POSITIVITY_SLACK: f64 = -1e-10;

pub type ComplexAmplitude = C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

/// A normalized pure state `sum a_ij |ij>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState {
    amps: [C64; 4],
}

impl PureState {
    /// Validating constructor: amplitudes must be finite and unit-norm.
    pub fn new(amps: [C64; 4]) -> Result<Self> {
        check_finite(&amps)?;
        let norm = linalg::norm_sqr(&amps);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "norm invariant violated: sum |a_ij|^2 = {norm} (expected 1 within {NORM_TOL:e})"
            )));
        }
        Ok(Self { amps })
    }

    /// Rescale arbitrary nonzero amplitudes onto the unit sphere.
    pub fn normalized(amps: [C64; 4]) -> Result<Self> {
        check_finite(&amps)?;
        let norm = linalg::norm_sqr(&amps).sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("cannot normalize the zero vector".into()));
        }
        Ok(Self { amps: amps.map(|a| a / norm) })
    }

    /// `|ij>`
    pub fn basis(i: usize, j: usize) -> Self {
        assert!(i < 2 && j < 2, "basis index out of range");
        let mut amps = [ZERO; 4];
        amps[2 * i + j] = ONE;
        Self { amps }
    }

    /// `(|00> + |11>) / sqrt 2`
    pub fn bell_phi_plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { amps: [C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)] }
    }

    pub fn amplitude(&self, i: usize, j: usize) -> C64 {
        self.amps[2 * i + j]
    }

    pub fn amplitudes(&self) -> &[C64; 4] {
        &self.amps
    }

    pub fn projector(&self) -> DensityMatrix<4> {
        DensityMatrix { m: linalg::outer(&self.amps, &self.amps) }
    }

    /// Reduced density matrix written out entry by entry.
    pub fn reduced(&self, which: Subsystem) -> DensityMatrix<2> {
        let a = |i, j| self.amplitude(i, j);
        // swapping the roles of the indices turns Alice's formula into Bob's
        let amp = |first: usize, second: usize| match which {
            Subsystem::A => a(first, second),
            Subsystem::B => a(second, first),
        };
        let p0 = amp(0, 0).norm_sqr() + amp(0, 1).norm_sqr();
        let p1 = amp(1, 0).norm_sqr() + amp(1, 1).norm_sqr();
        let off = amp(0, 0).conj() * amp(1, 0) + amp(0, 1).conj() * amp(1, 1);
        DensityMatrix {
            m: [[C64::new(p0, 0.0), off], [off.conj(), C64::new(p1, 0.0)]],
        }
    }
}

fn check_finite(amps: &[C64]) -> Result<()> {
    if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(Error::InvalidState("finiteness invariant violated: amplitude is NaN or infinite".into()));
    }
    Ok(())
}

/// Hermitian, unit-trace, positive semidefinite `N x N` matrix (`N` = 2 or 4).
///
/// Serializes as row-major nested `[[re, im], ...]` arrays; deserializing
/// re-validates every invariant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<C64>>", try_from = "Vec<Vec<C64>>")]
pub struct DensityMatrix<const N: usize> {
    m: Mat<N>,
}

pub type QubitState = DensityMatrix<2>;
pub type TwoQubitState = DensityMatrix<4>;

impl<const N: usize> DensityMatrix<N> {
    /// Validate every density-matrix invariant and report the first one violated.
    pub fn new(m: Mat<N>) -> Result<Self> {
        if N != 2 && N != 4 {
            return Err(Error::InvalidState(format!("dimension invariant violated: {N} is neither 2 nor 4")));
        }
        if !linalg::is_finite(&m) {
            return Err(Error::InvalidState("finiteness invariant violated: entry is NaN or infinite".into()));
        }
        let herm = linalg::hermiticity_defect(&m);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "hermiticity invariant violated: max |rho_ij - conj(rho_ji)| = {herm:.3e}"
            )));
        }
        let tr = linalg::trace(&m).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace invariant violated: tr rho = {tr}")));
        }
        let min = *linalg::eigvalsh(&m).last().unwrap();
        if min < POSITIVITY_SLACK {
            return Err(Error::InvalidState(format!(
                "positivity invariant violated: smallest eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { m })
    }

    pub fn maximally_mixed() -> Self {
        Self { m: linalg::scale(&linalg::identity::<N>(), 1.0 / N as f64) }
    }

    /// `|v><v|` for a unit vector `v`.
    pub fn from_pure(v: &[C64; N]) -> Result<Self> {
        let norm = linalg::norm_sqr(v);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm invariant violated: |v|^2 = {norm}")));
        }
        Ok(Self { m: linalg::outer(v, v) })
    }

    /// `(1 - weight) * self + weight * other`, `weight` in `[0, 1]`.
    pub fn mix(&self, other: &Self, weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::OutOfRange(format!("mixing weight {weight} outside [0, 1]")));
        }
        let m = linalg::add(&linalg::scale(&self.m, 1.0 - weight), &linalg::scale(&other.m, weight));
        Ok(Self { m })
    }

    pub fn matrix(&self) -> &Mat<N> {
        &self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.m[i][j]
    }

    /// Spectrum, decreasing, with the tolerated negative slack clamped to zero.
    pub fn eigenvalues(&self) -> [f64; N] {
        linalg::eigvalsh(&self.m).map(|v| v.max(0.0))
    }

    pub fn purity(&self) -> f64 {
        purity(self)
    }
}

impl<const N: usize> From<DensityMatrix<N>> for Vec<Vec<C64>> {
    fn from(rho: DensityMatrix<N>) -> Self {
        rho.m.iter().map(|row| row.to_vec()).collect()
    }
}

impl<const N: usize> TryFrom<Vec<Vec<C64>>> for DensityMatrix<N> {
    type Error = Error;

    fn try_from(rows: Vec<Vec<C64>>) -> Result<Self> {
        if rows.len() != N || rows.iter().any(|r| r.len() != N) {
            let found = rows.iter().map(|r| r.len()).max().unwrap_or(0).max(rows.len());
            return Err(Error::DimensionMismatch(N, found));
        }
        let m: Mat<N> = std::array::from_fn(|i| std::array::from_fn(|j| rows[i][j]));
        Self::new(m)
    }
}

/// Anything that can be reduced to one qubit by a partial trace.
pub trait Bipartite {
    fn reduced_state(&self, which: Subsystem) -> QubitState;
}

impl Bipartite for PureState {
    fn reduced_state(&self, which: Subsystem) -> QubitState {
        self.reduced(which)
    }
}

impl Bipartite for TwoQubitState {
    fn reduced_state(&self, which: Subsystem) -> QubitState {
        partial_trace(self, which)
    }
}

/// Reduced one-qubit state of a pure or mixed two-qubit state.
pub fn reduced_state<S: Bipartite>(state: &S, which: Subsystem) -> QubitState {
    state.reduced_state(which)
}

/// Trace out the complement of `keep` (transposed, see the module docs).
pub fn partial_trace(rho: &TwoQubitState, keep: Subsystem) -> QubitState {
    let mut out = linalg::zeros::<2>();
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = (0..2)
                .map(|k| match keep {
                    Subsystem::A => rho.m[2 * c + k][2 * r + k],
                    Subsystem::B => rho.m[2 * k + c][2 * k + r],
                })
                .sum();
        }
    }
    DensityMatrix { m: out }
}

/// `2 |a00 a11 - a01 a10|`
pub fn concurrence_pure(state: &PureState) -> f64 {
    let a = |i, j| state.amplitude(i, j);
    2.0 * (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)).norm()
}

/// Spin-flip concurrence of a mixed two-qubit state.
///
/// With `rho = sum_k |v_k><v_k|` (subnormalized eigenvectors), the spin-flip
/// values `lambda_i` are the singular values of the symmetric matrix
/// `S_kl = v_k^T (sigma_y x sigma_y) v_l`; these coincide with the square
/// roots of the eigenvalues of `rho (sigma_y x sigma_y) rho* (sigma_y x sigma_y)`.
pub fn concurrence_mixed(rho: &TwoQubitState) -> f64 {
    // eigen-components below this weight change C by at most 2x their trace
    const RANK_CUTOFF: f64 = 1e-14;
    let eig = linalg::eigh(&rho.m);
    let vs: Vec<[C64; 4]> = (0..4)
        .filter(|&k| eig.values[k] > RANK_CUTOFF)
        .map(|k| {
            let s = eig.values[k].sqrt();
            eig.vector(k).map(|z| z * s)
        })
        .collect();
    // sigma_y x sigma_y is real: it reverses the basis with signs (-1, 1, 1, -1)
    let flip = |v: &[C64; 4]| [-v[3], v[2], v[1], -v[0]];
    let columns: Vec<[C64; 4]> = vs
        .iter()
        .map(|vl| {
            let f = flip(vl);
            let mut col = [ZERO; 4];
            for (k, vk) in vs.iter().enumerate() {
                col[k] = vk.iter().zip(&f).map(|(a, b)| a * b).sum();
            }
            col
        })
        .collect();
    let mut lambdas = linalg::singular_values(&columns);
    lambdas.resize(4, 0.0);
    (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0)
}

fn binary_entropy_terms(values: &[f64]) -> f64 {
    values
        .iter()
        .map(|&p| p.max(0.0))
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Entanglement entropy as a function of the concurrence.
pub fn entropy_from_concurrence(concurrence: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&concurrence) {
        return Err(Error::OutOfRange(format!("concurrence {concurrence} outside [0, 1]")));
    }
    let root = (1.0 - concurrence * concurrence).sqrt();
    let hi = 0.5 * (1.0 + root);
    let lo = 0.5 * (1.0 - root);
    Ok(binary_entropy_terms(&[hi, lo]))
}

/// Von Neumann entropy in bits, `0 log 0 = 0`.
pub fn entropy_direct<const N: usize>(rho: &DensityMatrix<N>) -> f64 {
    binary_entropy_terms(&rho.eigenvalues())
}

/// `1/2 tr |r1 - r2|`
pub fn trace_distance<const N: usize>(r1: &DensityMatrix<N>, r2: &DensityMatrix<N>) -> f64 {
    let diff = linalg::sub(&r1.m, &r2.m);
    0.5 * linalg::eigvalsh(&diff).iter().map(|v| v.abs()).sum::<f64>()
}

/// `tr rho^2`
pub fn purity<const N: usize>(rho: &DensityMatrix<N>) -> f64 {
    // tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
    rho.m.iter().flatten().map(|z| z.norm_sqr()).sum()
}

/// Determinant of a one-qubit state.
pub fn det2(zeta: &QubitState) -> f64 {
    (zeta.m[0][0] * zeta.m[1][1] - zeta.m[0][1] * zeta.m[1][0]).re
}

/// A density matrix of either supported dimension, as read from JSON.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnyDensityMatrix {
    Qubit(QubitState),
    TwoQubit(TwoQubitState),
}

impl AnyDensityMatrix {
    pub fn dim(&self) -> usize {
        match self {
            AnyDensityMatrix::Qubit(_) => 2,
            AnyDensityMatrix::TwoQubit(_) => 4,
        }
    }
}

/// Trace distance with the dimensions checked at run time.
pub fn trace_distance_any(r1: &AnyDensityMatrix, r2: &AnyDensityMatrix) -> Result<f64> {
    match (r1, r2) {
        (AnyDensityMatrix::Qubit(a), AnyDensityMatrix::Qubit(b)) => Ok(trace_distance(a, b)),
        (AnyDensityMatrix::TwoQubit(a), AnyDensityMatrix::TwoQubit(b)) => Ok(trace_distance(a, b)),
        _ => Err(Error::DimensionMismatch(r1.dim(), r2.dim())),
    }
}

/// Werner state `p |Phi+><Phi+| + (1 - p) I/4`.
pub fn werner(p: f64) -> Result<TwoQubitState> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("Werner weight {p} outside [0, 1]")));
    }
    PureState::bell_phi_plus().projector().mix(&DensityMatrix::maximally_mixed(), 1.0 - p)
}
