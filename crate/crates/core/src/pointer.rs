//! Weak measurement with a first-order Laguerre-Gaussian pointer.
//!
//! The qubit couples to the transverse momentum of the beam through
//! `exp(-i lambda sigma_x P_x)`, which shifts the pointer by `+lambda` on the
//! `sigma_x = +1` eigenspace and by `-lambda` on the other. After
//! post-selecting the qubit on `|phi>` the pointer intensity is the
//! double sum
//!
//! ```text
//! I(x, y) = sum_{j,k = +-1} <phi|P_j rho P_k|phi> u(x - j lambda, y) conj(u(x - k lambda, y))
//! ```
//!
//! evaluated here exactly on a grid, with shifted modes computed analytically
//! rather than resampled. To first order in `lambda` the intensity is the
//! unshifted mode displaced by `lambda * w`, so its centroid reads out
//! `(lambda Re w, lambda Im w)`.
//!
//! All lengths are in units of the mode scale (the field is
//! `(x - i y) exp(-(x^2 + y^2))` up to normalization).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, C64, ONE, ZERO};
use crate::qubit_core::QubitState;
use crate::weak_values::{Thresholds, WeakValue, WeakValuePair, EPS_DENOMINATOR};

pub const DEFAULT_GRID_N: usize = 512;
pub const DEFAULT_EXTENT: f64 = 6.0;
pub const DEFAULT_LAMBDA: f64 = 0.01;
pub const MIN_GRID_N: usize = 64;
pub const MIN_EXTENT: f64 = 4.0;
/// `lambda * max(1, |w|)` at or above this is flagged as outside the weak regime.
pub const WEAKNESS_THRESHOLD: f64 = 0.1;

/// `2 / sqrt(pi)`: unit norm for `(x +- i y) exp(-r^2)`.
const LG_NORM: f64 = 1.128_379_167_095_512_6;

/// Cell-centred sampling of `[-extent, extent]^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerGrid {
    nx: usize,
    ny: usize,
    extent: f64,
}

impl PointerGrid {
    pub fn new(nx: usize, ny: usize, extent: f64) -> Result<Self> {
        if nx < MIN_GRID_N || ny < MIN_GRID_N {
            return Err(Error::InvalidGrid(format!("{nx}x{ny} is below the {MIN_GRID_N}x{MIN_GRID_N} minimum")));
        }
        if !extent.is_finite() || extent < MIN_EXTENT {
            return Err(Error::InvalidGrid(format!("half-width {extent} is below {MIN_EXTENT}")));
        }
        Ok(Self { nx, ny, extent })
    }

    pub fn square(n: usize, extent: f64) -> Result<Self> {
        Self::new(n, n, extent)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.extent / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * self.extent / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.extent + (i as f64 + 0.5) * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        -self.extent + (j as f64 + 0.5) * self.dy()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for PointerGrid {
    fn default() -> Self {
        Self { nx: DEFAULT_GRID_N, ny: DEFAULT_GRID_N, extent: DEFAULT_EXTENT }
    }
}

/// Sign of the orbital angular momentum carried by the pointer mode.
///
/// `Minus` is `(x - i y) exp(-r^2)`; with it the y-centroid tracks `+Im w`.
/// `Plus` is `(x + i y) exp(-r^2)`, which mirrors the imaginary readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OamCharge {
    Plus,
    #[default]
    Minus,
}

impl OamCharge {
    /// Sign relating the y-moment to `Im w`.
    pub fn readout_sign(self) -> f64 {
        match self {
            OamCharge::Plus => -1.0,
            OamCharge::Minus => 1.0,
        }
    }

    fn vortex(self, x: C64, y: f64) -> C64 {
        match self {
            OamCharge::Plus => x + C64::new(0.0, y),
            OamCharge::Minus => x - C64::new(0.0, y),
        }
    }
}

/// Normalized LG amplitude at a (possibly complex) x coordinate.
pub fn lg_amplitude(x: C64, y: f64, charge: OamCharge) -> C64 {
    LG_NORM * charge.vortex(x, y) * (-(x * x) - y * y).exp()
}

fn lg_real(x: f64, y: f64, charge: OamCharge) -> C64 {
    let env = LG_NORM * (-(x * x + y * y)).exp();
    charge.vortex(C64::new(x, 0.0), y) * env
}

/// Interaction strength in mode units.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CouplingStrength(f64);

impl CouplingStrength {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::OutOfRange(format!("coupling strength {lambda} must be positive")));
        }
        Ok(Self(lambda))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `lambda * max(1, |w|)`; the weak regime needs this well below one.
    pub fn weakness_margin(self, w_magnitude: f64) -> f64 {
        self.0 * w_magnitude.max(1.0)
    }

    pub fn is_weak_for(self, w_magnitude: f64) -> bool {
        self.weakness_margin(w_magnitude) < WEAKNESS_THRESHOLD
    }

    pub fn weakness_warning(self, label: &str, w_magnitude: f64) -> Option<String> {
        let margin = self.weakness_margin(w_magnitude);
        (margin >= WEAKNESS_THRESHOLD).then(|| {
            format!("weakness condition violated for {label}: lambda*max(1,|w|) = {margin:.4} >= {WEAKNESS_THRESHOLD}")
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: PointerGrid,
    /// Row-major, `values[j * nx + i]` at `(x_i, y_j)`.
    pub values: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntensityImage {
    pub grid: PointerGrid,
    /// Row-major, `values[j * nx + i]` at `(x_i, y_j)`.
    pub values: Vec<f64>,
}

impl IntensityImage {
    pub fn new(grid: PointerGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(grid.len(), values.len()));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::OutOfRange(format!("intensity value {v} must be finite and nonnegative")));
        }
        Ok(Self { grid, values })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx + i]
    }
}

fn fill_rows<T: Send, F>(grid: &PointerGrid, f: F) -> Vec<T>
where
    T: Default + Clone,
    F: Fn(f64, f64) -> T + Sync,
{
    let mut out = vec![T::default(); grid.len()];
    out.par_chunks_mut(grid.nx).enumerate().for_each(|(j, row)| {
        let y = grid.y(j);
        for (i, v) in row.iter_mut().enumerate() {
            *v = f(grid.x(i), y);
        }
    });
    out
}

pub fn lg_mode_field(grid: &PointerGrid) -> ComplexField {
    lg_mode_field_with(grid, OamCharge::default())
}

pub fn lg_mode_field_with(grid: &PointerGrid, charge: OamCharge) -> ComplexField {
    ComplexField { grid: *grid, values: fill_rows(grid, |x, y| lg_real(x, y, charge)) }
}

pub fn field_intensity(field: &ComplexField) -> IntensityImage {
    IntensityImage { grid: field.grid, values: field.values.iter().map(|z| z.norm_sqr()).collect() }
}

fn check_postselect(phi: &[C64; 2]) -> Result<()> {
    let n = linalg::norm_sqr(phi);
    if !n.is_finite() || (n - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnitVector(n));
    }
    Ok(())
}

fn check_shift(lambda: CouplingStrength, grid: &PointerGrid) -> Result<()> {
    if lambda.value() >= grid.extent / 4.0 {
        return Err(Error::ShiftOffGrid { shift: lambda.value(), extent: grid.extent });
    }
    Ok(())
}

pub fn basis_postselection(k: usize) -> [C64; 2] {
    match k {
        0 => [ONE, ZERO],
        1 => [ZERO, ONE],
        _ => panic!("post-selection index {k} out of range"),
    }
}

/// `c[j][k] = <phi|P_j rho P_k|phi>` with index 0 for `+` and 1 for `-`.
fn branch_coefficients(rho: &QubitState, phi: &[C64; 2]) -> [[C64; 2]; 2] {
    // P_+- |phi> = (phi +- sigma_x phi) / 2
    let flipped = [phi[1], phi[0]];
    let u = [
        [0.5 * (phi[0] + flipped[0]), 0.5 * (phi[1] + flipped[1])],
        [0.5 * (phi[0] - flipped[0]), 0.5 * (phi[1] - flipped[1])],
    ];
    let mut c = [[ZERO; 2]; 2];
    for j in 0..2 {
        for k in 0..2 {
            c[j][k] = linalg::inner(&u[j], &linalg::mat_vec(rho.matrix(), &u[k]));
        }
    }
    c
}

/// The full double sum at one point, before taking the real part.
fn double_sum(c: &[[C64; 2]; 2], plus: C64, minus: C64) -> C64 {
    let f = [plus, minus];
    let mut acc = ZERO;
    for j in 0..2 {
        for k in 0..2 {
            acc += c[j][k] * f[j] * f[k].conj();
        }
    }
    acc
}

/// Exact post-selected pointer intensity.
pub fn exact_intensity(
    rho: &QubitState,
    postselect: &[C64; 2],
    lambda: CouplingStrength,
    grid: &PointerGrid,
) -> Result<IntensityImage> {
    exact_intensity_with(rho, postselect, lambda, grid, OamCharge::default())
}

pub fn exact_intensity_with(
    rho: &QubitState,
    postselect: &[C64; 2],
    lambda: CouplingStrength,
    grid: &PointerGrid,
    charge: OamCharge,
) -> Result<IntensityImage> {
    check_postselect(postselect)?;
    check_shift(lambda, grid)?;
    let c = branch_coefficients(rho, postselect);
    let l = lambda.value();
    let values = fill_rows(grid, |x, y| {
        let v = double_sum(&c, lg_real(x - l, y, charge), lg_real(x + l, y, charge)).re;
        // the sum is real up to roundoff; clamp the roundoff below zero
        v.max(0.0)
    });
    Ok(IntensityImage { grid: *grid, values })
}

/// Largest imaginary residue of the double sum relative to the peak intensity.
pub fn exact_intensity_residue(
    rho: &QubitState,
    postselect: &[C64; 2],
    lambda: CouplingStrength,
    grid: &PointerGrid,
    charge: OamCharge,
) -> Result<f64> {
    check_postselect(postselect)?;
    check_shift(lambda, grid)?;
    let c = branch_coefficients(rho, postselect);
    let l = lambda.value();
    let sums: Vec<(f64, f64)> = fill_rows(grid, |x, y| {
        let z = double_sum(&c, lg_real(x - l, y, charge), lg_real(x + l, y, charge));
        (z.re, z.im)
    });
    let peak = sums.iter().map(|s| s.0.abs()).fold(0.0, f64::max);
    let worst = sums.iter().map(|s| s.1.abs()).fold(0.0, f64::max);
    Ok(if peak > 0.0 { worst / peak } else { worst })
}

/// First-order intensity `p |u(x - lambda w, y)|^2`, the shift taken as a
/// complex displacement of the x argument and the result rescaled to total `p`.
pub fn approx_intensity(w: C64, p: f64, lambda: CouplingStrength, grid: &PointerGrid) -> Result<IntensityImage> {
    approx_intensity_with(w, p, lambda, grid, OamCharge::default())
}

pub fn approx_intensity_with(
    w: C64,
    p: f64,
    lambda: CouplingStrength,
    grid: &PointerGrid,
    charge: OamCharge,
) -> Result<IntensityImage> {
    if !(p.is_finite() && p >= 0.0) {
        return Err(Error::OutOfRange(format!("post-selection probability {p} must be nonnegative")));
    }
    if !(w.re.is_finite() && w.im.is_finite()) {
        return Err(Error::OutOfRange("weak value must be finite".into()));
    }
    check_shift(CouplingStrength(lambda.value() * w.norm().max(1.0)), grid)?;
    let shift = w * lambda.value();
    let mut values: Vec<f64> = fill_rows(grid, |x, y| lg_amplitude(C64::new(x, 0.0) - shift, y, charge).norm_sqr());
    let total = values.iter().sum::<f64>() * grid.cell_area();
    if total > 0.0 {
        let s = p / total;
        values.iter_mut().for_each(|v| *v *= s);
    }
    Ok(IntensityImage { grid: *grid, values })
}

/// Discrete plane integral.
pub fn total_intensity(image: &IntensityImage) -> f64 {
    image.values.iter().sum::<f64>() * image.grid.cell_area()
}

/// `(integral x I, integral y I)` by midpoint quadrature in a fixed order.
pub fn first_moments(image: &IntensityImage) -> (f64, f64) {
    let g = &image.grid;
    let mut mx = 0.0;
    let mut my = 0.0;
    for j in 0..g.ny {
        let y = g.y(j);
        let row = &image.values[j * g.nx..(j + 1) * g.nx];
        let mut row_sum = 0.0;
        let mut row_x = 0.0;
        for (i, v) in row.iter().enumerate() {
            row_sum += v;
            row_x += g.x(i) * v;
        }
        mx += row_x;
        my += y * row_sum;
    }
    let da = g.cell_area();
    (mx * da, my * da)
}

/// Intensity-weighted mean position.
pub fn centroid(image: &IntensityImage) -> Result<(f64, f64)> {
    let total = total_intensity(image);
    if !(total > 0.0) {
        return Err(Error::ZeroIntensity);
    }
    let (mx, my) = first_moments(image);
    Ok((mx / total, my / total))
}

/// `(qx + i qy) / lambda` from a single image; undefined when the image is dark.
pub fn extract_weak_value(image: &IntensityImage, lambda: CouplingStrength) -> WeakValue {
    extract_weak_value_with(image, lambda, OamCharge::default())
}

pub fn extract_weak_value_with(image: &IntensityImage, lambda: CouplingStrength, charge: OamCharge) -> WeakValue {
    let total = total_intensity(image);
    if total < EPS_DENOMINATOR {
        return WeakValue { value: None, denominator: total };
    }
    let (mx, my) = first_moments(image);
    let w = C64::new(mx, charge.readout_sign() * my) / (total * lambda.value());
    WeakValue { value: Some(w), denominator: total }
}

/// Overlap `<u(x + lambda)|u(x - lambda)>` of the two oppositely shifted
/// modes on the grid. Real for the LG mode (the imaginary part cancels by
/// symmetry); analytically `exp(-2 lambda^2)(1 - 2 lambda^2)`.
pub fn pointer_overlap(grid: &PointerGrid, lambda: CouplingStrength, charge: OamCharge) -> f64 {
    let l = lambda.value();
    let rows: Vec<f64> = (0..grid.ny)
        .into_par_iter()
        .map(|j| {
            let y = grid.y(j);
            (0..grid.nx)
                .map(|i| {
                    let x = grid.x(i);
                    (lg_real(x - l, y, charge) * lg_real(x + l, y, charge).conj()).re
                })
                .sum::<f64>()
        })
        .collect();
    rows.iter().sum::<f64>() * grid.cell_area()
}

/// What a detector records for one post-selection branch: the plane
/// integral and the two first moments of the intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchReadout {
    pub total: f64,
    pub moment_x: f64,
    pub moment_y: f64,
}

impl BranchReadout {
    pub fn from_image(image: &IntensityImage) -> Self {
        let (moment_x, moment_y) = first_moments(image);
        Self { total: total_intensity(image), moment_x, moment_y }
    }

    pub fn centroid(&self) -> Option<(f64, f64)> {
        (self.total > 0.0).then(|| (self.moment_x / self.total, self.moment_y / self.total))
    }
}

/// Post-selection probabilities recovered from the branch totals.
///
/// The coupling leaks a fraction of order `lambda^2` between branches:
/// `T0 - T1 = overlap * (p0 - p1)` exactly, with `T0 + T1 = 1`.
pub fn calibrated_probabilities(t0: f64, t1: f64, overlap: f64) -> (f64, f64) {
    let sum = t0 + t1;
    let diff = if sum > 0.0 { (t0 - t1) / sum } else { 0.0 };
    let p0 = (0.5 + 0.5 * diff / overlap).clamp(0.0, 1.0);
    (p0, 1.0 - p0)
}

/// Weak-value pair from two branch readouts: probabilities from the
/// calibrated totals, `w = (M_x + i M_y) / (lambda p)` from the moments.
pub fn pair_from_readouts(
    branches: [BranchReadout; 2],
    lambda: CouplingStrength,
    overlap: f64,
    charge: OamCharge,
    thresholds: &Thresholds,
) -> Result<WeakValuePair> {
    let (p0, p1) = calibrated_probabilities(branches[0].total, branches[1].total, overlap);
    let w = |b: &BranchReadout, p: f64| {
        (p >= thresholds.denominator)
            .then(|| C64::new(b.moment_x, charge.readout_sign() * b.moment_y) / (lambda.value() * p))
    };
    WeakValuePair::from_parts(w(&branches[0], p0), w(&branches[1], p1), p0, p1, thresholds)
}

/// Grid, coupling and readout conventions for one optical run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalSetup {
    pub grid: PointerGrid,
    pub lambda: CouplingStrength,
    pub charge: OamCharge,
    pub thresholds: Thresholds,
}

impl OpticalSetup {
    pub fn new(grid: PointerGrid, lambda: CouplingStrength) -> Self {
        Self { grid, lambda, charge: OamCharge::default(), thresholds: Thresholds::default() }
    }
}

/// The two post-selected images of a state.
pub fn branch_images(rho: &QubitState, setup: &OpticalSetup) -> Result<[IntensityImage; 2]> {
    let i0 = exact_intensity_with(rho, &basis_postselection(0), setup.lambda, &setup.grid, setup.charge)?;
    let i1 = exact_intensity_with(rho, &basis_postselection(1), setup.lambda, &setup.grid, setup.charge)?;
    Ok([i0, i1])
}

#[derive(Debug, Clone)]
pub struct OpticalRun {
    pub report: crate::estimator::EstimateReport,
    pub images: [IntensityImage; 2],
}

/// Simulate both post-selected images and estimate the concurrence from them.
pub fn simulate_optics(rho: &QubitState, setup: &OpticalSetup) -> Result<OpticalRun> {
    let images = branch_images(rho, setup)?;
    let report = estimate_from_images(&images, setup)?;
    Ok(OpticalRun { report, images })
}

/// Estimate from a pair of recorded images (`|0>` branch first).
pub fn estimate_from_images(images: &[IntensityImage; 2], setup: &OpticalSetup) -> Result<crate::estimator::EstimateReport> {
    use crate::estimator::{estimate_pair, Diagnostic};

    let readouts = [BranchReadout::from_image(&images[0]), BranchReadout::from_image(&images[1])];
    let overlap = pointer_overlap(&setup.grid, setup.lambda, setup.charge);
    let pair = pair_from_readouts(readouts, setup.lambda, overlap, setup.charge, &setup.thresholds)?;
    let mut report = estimate_pair(&pair)?;

    let mut diags = vec![
        Diagnostic::new("lambda", setup.lambda.value()),
        Diagnostic::new("pointer_overlap", overlap),
    ];
    for (b, r) in readouts.iter().enumerate() {
        diags.push(Diagnostic::new(format!("raw_total_{b}"), r.total));
        let (qx, qy) = r.centroid().unwrap_or((f64::NAN, f64::NAN));
        diags.push(Diagnostic::new(format!("centroid_x_{b}"), qx));
        diags.push(Diagnostic::new(format!("centroid_y_{b}"), qy));
    }
    for (b, w) in [(0, pair.w0), (1, pair.w1)] {
        match w {
            Some(w) => {
                diags.push(Diagnostic::new(format!("weakness_margin_{b}"), setup.lambda.weakness_margin(w.norm())));
                if let Some(msg) = setup.lambda.weakness_warning(&format!("branch {b}"), w.norm()) {
                    diags.push(Diagnostic::new(format!("weakness_violated_{b}"), 1.0));
                    report.warnings.push(msg);
                }
            }
            None => diags.push(Diagnostic::new(format!("zero_signal_branch_{b}"), 1.0)),
        }
    }
    report.diagnostics.extend(diags);
    Ok(report)
}

/// Concurrence from the exact optics of `rho_a`.
pub fn run_optical_estimate(
    rho_a: &QubitState,
    lambda: CouplingStrength,
    grid: &PointerGrid,
) -> Result<crate::estimator::EstimateReport> {
    Ok(simulate_optics(rho_a, &OpticalSetup::new(*grid, lambda))?.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::Route;
    use crate::qubit_core::{DensityMatrix, PureState, Subsystem};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn small_grid() -> PointerGrid {
        PointerGrid::square(128, 6.0).unwrap()
    }

    fn lam(v: f64) -> CouplingStrength {
        CouplingStrength::new(v).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(PointerGrid::square(32, 6.0).is_err());
        assert!(PointerGrid::square(64, 3.0).is_err());
        let g = PointerGrid::square(64, 4.0).unwrap();
        assert!((g.x(0) + g.x(63)).abs() < 1e-15);
        assert!((g.dx() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn lg_mode_examples() {
        let g = small_grid();
        assert_eq!(lg_real(0.0, 0.0, OamCharge::Minus), ZERO);
        let img = field_intensity(&lg_mode_field(&g));
        assert!((total_intensity(&img) - 1.0).abs() < 1e-9);
        let (qx, qy) = centroid(&img).unwrap();
        assert!(qx.abs() < 1e-12 && qy.abs() < 1e-12);
    }

    #[test]
    fn coupling_validation_and_weakness() {
        assert!(CouplingStrength::new(0.0).is_err());
        assert!(CouplingStrength::new(f64::NAN).is_err());
        let l = lam(0.01);
        assert!(l.is_weak_for(2.0));
        assert!(!lam(0.5).is_weak_for(0.1));
        assert!(lam(0.5).weakness_warning("b", 0.3).is_some());
    }

    #[test]
    fn exact_intensity_errors() {
        let rho = DensityMatrix::<2>::maximally_mixed();
        let g = small_grid();
        assert!(matches!(
            exact_intensity(&rho, &[ONE, ONE], lam(0.01), &g),
            Err(Error::NonUnitVector(_))
        ));
        assert!(matches!(
            exact_intensity(&rho, &[ONE, ZERO], lam(2.0), &g),
            Err(Error::ShiftOffGrid { .. })
        ));
    }

    #[test]
    fn vanishing_coupling_gives_the_unshifted_mode() {
        let t = 1.0 / 3f64.sqrt();
        let s = PureState::new([c(t, 0.0), c(t, 0.0), ZERO, c(t, 0.0)]).unwrap();
        let rho = s.reduced(Subsystem::A);
        let g = small_grid();
        let img = exact_intensity(&rho, &[ONE, ZERO], lam(1e-9), &g).unwrap();
        let mode = field_intensity(&lg_mode_field(&g));
        for (a, b) in img.values.iter().zip(&mode.values) {
            assert!((a - 2.0 / 3.0 * b).abs() < 1e-8);
        }
        let (qx, qy) = centroid(&img).unwrap();
        assert!(qx.abs() < 1e-8 && qy.abs() < 1e-8);
    }

    #[test]
    fn sigma_x_eigenstate_is_a_rigid_shift() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = DensityMatrix::from_pure(&[c(h, 0.0), c(h, 0.0)]).unwrap();
        let g = small_grid();
        let l = 0.05;
        let img = exact_intensity(&plus, &[ONE, ZERO], lam(l), &g).unwrap();
        for j in (0..g.ny()).step_by(7) {
            for i in (0..g.nx()).step_by(5) {
                let want = 0.5 * lg_real(g.x(i) - l, g.y(j), OamCharge::Minus).norm_sqr();
                assert!((img.get(i, j) - want).abs() < 1e-15);
            }
        }
        let (qx, qy) = centroid(&img).unwrap();
        assert!((qx - l).abs() < 1e-12 && qy.abs() < 1e-12);
    }

    #[test]
    fn approx_centroid_tracks_the_weak_value() {
        let g = PointerGrid::default();
        let l = lam(0.01);
        let (qx, qy) = centroid(&approx_intensity(ZERO, 1.0, l, &g).unwrap()).unwrap();
        assert!(qx.abs() < 1e-12 && qy.abs() < 1e-12);
        let (qx, qy) = centroid(&approx_intensity(ONE, 1.0, l, &g).unwrap()).unwrap();
        assert!((qx - 0.01).abs() < 1e-12 && qy.abs() < 1e-12);
        let (qx, qy) = centroid(&approx_intensity(c(0.0, 1.0), 1.0, l, &g).unwrap()).unwrap();
        assert!(qx.abs() < 1e-12 && (qy - 0.01).abs() < 1e-5);
        // the opposite vortex mirrors the imaginary readout
        let img = approx_intensity_with(c(0.0, 1.0), 1.0, l, &g, OamCharge::Plus).unwrap();
        let (_, qy) = centroid(&img).unwrap();
        assert!((qy + 0.01).abs() < 1e-5);
        let img = approx_intensity(c(0.3, 0.2), 0.4, l, &g).unwrap();
        assert!((total_intensity(&img) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn centroid_of_a_dark_image_is_an_error() {
        let g = small_grid();
        let dark = IntensityImage::new(g, vec![0.0; g.len()]).unwrap();
        assert!(matches!(centroid(&dark), Err(Error::ZeroIntensity)));
        assert_eq!(extract_weak_value(&dark, lam(0.01)).value, None);
    }

    #[test]
    fn extraction_inverts_the_centroid() {
        let g = PointerGrid::default();
        let l = lam(0.01);
        let w = extract_weak_value(&approx_intensity(ONE, 0.5, l, &g).unwrap(), l).value.unwrap();
        assert!((w - ONE).norm() < 1e-9);
        let w = extract_weak_value(&approx_intensity(c(0.0, 1.0), 0.5, l, &g).unwrap(), l).value.unwrap();
        assert!((w - c(0.0, 1.0)).norm() < 1e-3);
    }

    #[test]
    fn overlap_matches_closed_form() {
        let g = PointerGrid::default();
        for l in [0.01_f64, 0.04, 0.3] {
            let want = (-2.0 * l * l).exp() * (1.0 - 2.0 * l * l);
            let got = pointer_overlap(&g, lam(l), OamCharge::Minus);
            assert!((got - want).abs() < 1e-12, "lambda={l}: {got} vs {want}");
        }
    }

    #[test]
    fn calibration_inverts_the_leakage() {
        let g = 0.9996_f64;
        for p0 in [0.0, 0.2, 0.5, 1.0] {
            let d = g * (2.0 * p0 - 1.0);
            let (a, b) = calibrated_probabilities(0.5 + 0.5 * d, 0.5 - 0.5 * d, g);
            assert!((a - p0).abs() < 1e-15 && (a + b - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn bell_state_through_the_optics() {
        let rho = PureState::bell_phi_plus().reduced(Subsystem::A);
        let report = run_optical_estimate(&rho, lam(0.01), &small_grid()).unwrap();
        assert_eq!(report.route, Route::DiagonalIntensity);
        assert!((report.concurrence - 1.0).abs() < 1e-12);
    }
}
