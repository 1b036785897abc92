//! Finite photon counts on the pointer images.
//!
//! Photons land at positions drawn from the post-selected intensity. The
//! total illumination is fixed and split between the two post-selection
//! ports by their relative intensities; the centroids of the detected
//! positions replace the exact first moments, and a parametric bootstrap
//! turns their standard errors into an interval on the concurrence.
//!
//! Sampling is deterministic for a fixed seed. Every independent piece of
//! randomness (the port split, each chunk of each port, the bootstrap) draws
//! from its own ChaCha8 stream seeded by [`split_seed`], and chunk results are
//! concatenated in index order, so the thread count never changes a result.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Geometric, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{concurrence_from_noisy_weak_values, Diagnostic, EstimateReport, Route, Uncertainty};
use crate::linalg::C64;
use crate::pointer::{
    branch_images, calibrated_probabilities, pointer_overlap, CouplingStrength, IntensityImage, OpticalSetup,
    PointerGrid,
};
use crate::qubit_core::{entropy_from_concurrence, QubitState};
use crate::random::{split_seed, stream_rng};
use crate::weak_values::{Regime, WeakValuePair};

pub const DEFAULT_PHOTONS: usize = 1_000_000;
pub const DEFAULT_RESAMPLES: usize = 200;
/// A measured quantity within this many standard errors of zero counts as zero.
pub const DEFAULT_ORIGIN_SIGMA: f64 = 3.0;
/// Reported interval is `C +- INTERVAL_SIGMAS * sigma`, clipped to `[0, 1]`.
pub const INTERVAL_SIGMAS: f64 = 3.0;

const CHUNK: usize = 1 << 16;
const SPLIT_STREAM: u64 = 0;
const BOOTSTRAP_STREAM: u64 = 3;

fn branch_stream(b: usize) -> u64 {
    1 + b as u64
}

/// Inverse-CDF sampler over the flattened grid.
#[derive(Debug, Clone)]
pub struct IntensitySampler {
    grid: PointerGrid,
    cdf: Vec<f64>,
    guide: Vec<u32>,
    last_bright: usize,
}

impl IntensitySampler {
    pub fn new(image: &IntensityImage) -> Result<Self> {
        let mut acc = 0.0;
        let cdf: Vec<f64> = image
            .values
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect();
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(Error::ZeroIntensity);
        }
        let last_bright = image.values.iter().rposition(|v| *v > 0.0).unwrap_or(0);
        // guide[k] is the first cell whose cumulative weight exceeds k / m of the total
        let m = cdf.len();
        let mut guide = Vec::with_capacity(m);
        let mut idx = 0usize;
        for k in 0..m {
            let target = acc * k as f64 / m as f64;
            while idx < last_bright && cdf[idx] <= target {
                idx += 1;
            }
            guide.push(idx as u32);
        }
        Ok(Self { grid: image.grid, cdf, guide, last_bright })
    }

    fn total(&self) -> f64 {
        self.cdf[self.cdf.len() - 1]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let u: f64 = rng.random();
        let target = u * self.total();
        let k = ((u * self.guide.len() as f64) as usize).min(self.guide.len() - 1);
        let mut idx = self.guide[k] as usize;
        while idx < self.last_bright && self.cdf[idx] <= target {
            idx += 1;
        }
        let nx = self.grid.nx();
        let (i, j) = (idx % nx, idx / nx);
        let jx: f64 = rng.random();
        let jy: f64 = rng.random();
        (self.grid.x(i) + (jx - 0.5) * self.grid.dx(), self.grid.y(j) + (jy - 0.5) * self.grid.dy())
    }
}

/// Detected photon positions from one image.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRun {
    pub positions: Vec<(f64, f64)>,
    /// Photons that reached the detector, including undetected ones.
    pub emitted: u64,
    pub efficiency: f64,
    pub seed: u64,
}

impl DetectionRun {
    pub fn n_photons(&self) -> usize {
        self.positions.len()
    }
}

fn check_efficiency(efficiency: f64) -> Result<()> {
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(Error::OutOfRange(format!("detector efficiency {efficiency} outside (0, 1]")));
    }
    Ok(())
}

/// Draw `n` detected positions; each photon is detected with probability `efficiency`.
pub fn sample_positions(image: &IntensityImage, n: usize, efficiency: f64, seed: u64) -> Result<DetectionRun> {
    let sampler = IntensitySampler::new(image)?;
    sample_with(&sampler, n, efficiency, seed)
}

fn sample_with(sampler: &IntensitySampler, n: usize, efficiency: f64, seed: u64) -> Result<DetectionRun> {
    if n == 0 {
        return Err(Error::OutOfRange("at least one detection is required".into()));
    }
    check_efficiency(efficiency)?;
    let losses = (efficiency < 1.0).then(|| Geometric::new(efficiency).expect("efficiency in (0, 1)"));
    let chunks: Vec<(Vec<(f64, f64)>, u64)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(n - c * CHUNK);
            let mut rng = stream_rng(seed, c as u64);
            let mut emitted = len as u64;
            let mut out = Vec::with_capacity(len);
            for _ in 0..len {
                if let Some(g) = &losses {
                    emitted += g.sample(&mut rng);
                }
                out.push(sampler.sample(&mut rng));
            }
            (out, emitted)
        })
        .collect();
    let emitted = chunks.iter().map(|c| c.1).sum();
    let positions = chunks.into_iter().flat_map(|c| c.0).collect();
    Ok(DetectionRun { positions, emitted, efficiency, seed })
}

/// Sample means of the detected positions and their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McCentroid {
    pub qx: f64,
    pub qy: f64,
    pub se_x: f64,
    pub se_y: f64,
    pub n: usize,
}

pub fn mc_centroid(run: &DetectionRun) -> Result<McCentroid> {
    centroid_of(&run.positions)
}

fn centroid_of(positions: &[(f64, f64)]) -> Result<McCentroid> {
    let n = positions.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let nf = n as f64;
    let (sx, sy) = positions.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (qx, qy) = (sx / nf, sy / nf);
    let (vx, vy) = positions
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + (p.0 - qx).powi(2), a.1 + (p.1 - qy).powi(2)));
    let var = |v: f64| v / (nf - 1.0);
    Ok(McCentroid { qx, qy, se_x: (var(vx) / nf).sqrt(), se_y: (var(vy) / nf).sqrt(), n })
}

/// Photon budget and statistical settings of one simulated experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    /// Mean detections per port; the total `2 n` is split by relative intensity.
    pub photons_per_branch: usize,
    pub efficiency: f64,
    pub seed: u64,
    pub resamples: usize,
    pub origin_sigma: f64,
    pub debias_magnitudes: bool,
}

impl McConfig {
    pub fn new(photons_per_branch: usize, efficiency: f64, seed: u64) -> Result<Self> {
        if photons_per_branch == 0 {
            return Err(Error::OutOfRange("photon count must be positive".into()));
        }
        check_efficiency(efficiency)?;
        Ok(Self {
            photons_per_branch,
            efficiency,
            seed,
            resamples: DEFAULT_RESAMPLES,
            origin_sigma: DEFAULT_ORIGIN_SIGMA,
            debias_magnitudes: true,
        })
    }
}

/// Images, samplers and the pointer overlap of one setup, reusable across seeds.
#[derive(Debug, Clone)]
pub struct PreparedOptics {
    pub setup: OpticalSetup,
    pub images: [IntensityImage; 2],
    samplers: [Option<IntensitySampler>; 2],
    port_weight: [f64; 2],
    overlap: f64,
}

impl PreparedOptics {
    pub fn new(rho: &QubitState, setup: &OpticalSetup) -> Result<Self> {
        Self::from_images(branch_images(rho, setup)?, setup)
    }

    /// Use recorded images (`|0>` port first) as the detection densities.
    pub fn from_images(images: [IntensityImage; 2], setup: &OpticalSetup) -> Result<Self> {
        for img in &images {
            if img.grid != setup.grid {
                return Err(Error::InvalidGrid("image grid differs from the setup grid".into()));
            }
        }
        let totals = [images[0].values.iter().sum::<f64>(), images[1].values.iter().sum::<f64>()];
        let sum = totals[0] + totals[1];
        if !(sum > 0.0) {
            return Err(Error::ZeroIntensity);
        }
        let samplers = [IntensitySampler::new(&images[0]).ok(), IntensitySampler::new(&images[1]).ok()];
        let overlap = pointer_overlap(&setup.grid, setup.lambda, setup.charge);
        Ok(Self { setup: *setup, images, samplers, port_weight: [totals[0] / sum, totals[1] / sum], overlap })
    }

    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    /// Relative intensity of each port.
    pub fn port_weights(&self) -> [f64; 2] {
        self.port_weight
    }

    pub fn run(&self, config: &McConfig) -> Result<McRun> {
        check_efficiency(config.efficiency)?;
        let total = 2 * config.photons_per_branch as u64;
        let mut rng = stream_rng(config.seed, SPLIT_STREAM);
        let n0 = Binomial::new(total, self.port_weight[0])
            .map_err(|e| Error::OutOfRange(format!("port split: {e}")))?
            .sample(&mut rng);
        let counts = [n0, total - n0];

        let mut detections: [Option<DetectionRun>; 2] = [None, None];
        let mut centroids: [Option<McCentroid>; 2] = [None, None];
        for b in 0..2 {
            if counts[b] == 0 {
                continue;
            }
            let sampler = self.samplers[b].as_ref().ok_or(Error::ZeroIntensity)?;
            let run = sample_with(sampler, counts[b] as usize, config.efficiency, split_seed(config.seed, branch_stream(b)))?;
            centroids[b] = Some(centroid_of(&run.positions)?);
            detections[b] = Some(run);
        }

        let stats = PortStatistics::new(counts, centroids, self);
        let report = stats.report(config)?;
        Ok(McRun { report, detections })
    }
}

#[derive(Debug, Clone)]
pub struct McRun {
    pub report: EstimateReport,
    /// Detections per port; `None` for a port that received no photons.
    pub detections: [Option<DetectionRun>; 2],
}

/// Everything the estimate needs from the detected photons.
struct PortStatistics {
    counts: [u64; 2],
    centroids: [Option<McCentroid>; 2],
    lambda: f64,
    sign: f64,
    overlap: f64,
}

impl PortStatistics {
    fn new(counts: [u64; 2], centroids: [Option<McCentroid>; 2], optics: &PreparedOptics) -> Self {
        Self {
            counts,
            centroids,
            lambda: optics.setup.lambda.value(),
            sign: optics.setup.charge.readout_sign(),
            overlap: optics.overlap,
        }
    }

    fn total(&self) -> f64 {
        (self.counts[0] + self.counts[1]) as f64
    }

    fn probabilities(&self, n0: f64) -> (f64, f64) {
        let t0 = n0 / self.total();
        calibrated_probabilities(t0, 1.0 - t0, self.overlap)
    }

    /// Standard error of the calibrated `p0`.
    fn probability_se(&self) -> f64 {
        let t0 = self.counts[0] as f64 / self.total();
        (t0 * (1.0 - t0) / self.total()).sqrt() / (2.0 * self.overlap)
    }

    /// Weak value of port `b` from a centroid, its port share and calibrated probability.
    fn weak_value(&self, q: (f64, f64), share: f64, p: f64) -> C64 {
        C64::new(q.0, self.sign * q.1) * (share / (self.lambda * p))
    }

    /// Weak values, regime and concurrence for one realization of the port
    /// split and the two centroids.
    fn evaluate(&self, n0: f64, q: [Option<(f64, f64)>; 2], config: &McConfig) -> Evaluation {
        let k = config.origin_sigma;
        let (p0, p1) = self.probabilities(n0);
        let p = [p0, p1];
        let shares = [n0 / self.total(), 1.0 - n0 / self.total()];
        let p_se = self.probability_se();

        // a port is dark when its calibrated probability is statistically zero
        let mut w: [Option<C64>; 2] = [None, None];
        let mut w_se = [(0.0, 0.0); 2];
        for b in 0..2 {
            let (Some(c), Some(q)) = (self.centroids[b], q[b]) else { continue };
            if p[b] <= k * p_se || p[b] <= 0.0 {
                continue;
            }
            w[b] = Some(self.weak_value(q, shares[b], p[b]));
            let scale = shares[b] / (self.lambda * p[b]);
            w_se[b] = (c.se_x * scale, c.se_y * scale);
        }
        let vanishing = |b: usize| {
            w[b].is_some_and(|v| v.re.abs() <= k * w_se[b].0 && v.im.abs() <= k * w_se[b].1)
        };
        let regime = match (w[0], w[1]) {
            (Some(_), Some(_)) if vanishing(0) && vanishing(1) => Regime::OriginSingular,
            (Some(_), Some(_)) => Regime::Regular,
            _ => Regime::Undefined,
        };
        let origin = (2.0 * (p0 * p1).sqrt()).min(1.0);
        let (concurrence, route, product) = match regime {
            Regime::Regular => {
                let m = |b: usize| {
                    let v = w[b].unwrap();
                    if config.debias_magnitudes {
                        (v.norm_sqr() - w_se[b].0.powi(2) - w_se[b].1.powi(2)).max(0.0).sqrt()
                    } else {
                        v.norm()
                    }
                };
                let (m0, m1) = (m(0), m(1));
                let c = concurrence_from_noisy_weak_values(m0, m1).unwrap_or(origin);
                (c, Route::WeakValueFormula, m0 * m1)
            }
            Regime::OriginSingular => (origin, Route::DiagonalIntensity, 0.0),
            Regime::Undefined => (0.0, Route::UndefinedLimit, 0.0),
        };
        Evaluation { pair: WeakValuePair { w0: w[0], w1: w[1], p0, p1, regime }, concurrence, route, product, p_se }
    }

    fn point_centroids(&self) -> [Option<(f64, f64)>; 2] {
        self.centroids.map(|c| c.map(|c| (c.qx, c.qy)))
    }

    fn report(&self, config: &McConfig) -> Result<EstimateReport> {
        let eval = self.evaluate(self.counts[0] as f64, self.point_centroids(), config);
        let Evaluation { pair, concurrence, route, product, p_se } = eval;
        let (p0, p1, regime) = (pair.p0, pair.p1, pair.regime);
        let w = [pair.w0, pair.w1];
        let mut warnings = Vec::new();
        match route {
            Route::WeakValueFormula if product > 1.0 => {
                warnings.push(format!("|w0||w1| = {product:.6} exceeds 1 by sampling noise; clamped"));
            }
            Route::DiagonalIntensity => warnings.push(
                "both weak values are consistent with zero: concurrence taken from the port intensities, \
                 valid only for a pure joint state"
                    .to_string(),
            ),
            _ => {}
        }

        let uncertainty = self.bootstrap(config, concurrence);

        let mut diagnostics = vec![
            Diagnostic::new("p0", p0),
            Diagnostic::new("p1", p1),
            Diagnostic::new("p0_standard_error", p_se),
            Diagnostic::new("pointer_overlap", self.overlap),
            Diagnostic::new("photons_per_branch", config.photons_per_branch as f64),
            Diagnostic::new("efficiency", config.efficiency),
        ];
        for b in 0..2 {
            diagnostics.push(Diagnostic::new(format!("detected_{b}"), self.counts[b] as f64));
            if let Some(c) = self.centroids[b] {
                diagnostics.push(Diagnostic::new(format!("centroid_x_{b}"), c.qx));
                diagnostics.push(Diagnostic::new(format!("centroid_y_{b}"), c.qy));
                diagnostics.push(Diagnostic::new(format!("centroid_se_x_{b}"), c.se_x));
                diagnostics.push(Diagnostic::new(format!("centroid_se_y_{b}"), c.se_y));
            }
            if w[b].is_none() {
                diagnostics.push(Diagnostic::new(format!("zero_signal_branch_{b}"), 1.0));
            }
        }
        if regime == Regime::OriginSingular {
            diagnostics.push(Diagnostic::new("assumes_pure_joint_state", 1.0));
        }

        let reconstructed_rho = noisy_reconstruction(&pair);
        if reconstructed_rho.is_none() && regime != Regime::Undefined {
            warnings.push("reconstructed reduced state is not positive semidefinite".into());
        }

        Ok(EstimateReport {
            concurrence,
            route,
            entropy: entropy_from_concurrence(concurrence)?,
            pair,
            reconstructed_rho,
            diagnostics,
            warnings,
            uncertainty: Some(uncertainty),
        })
    }

    /// Parametric bootstrap: the port split is redrawn from its binomial and
    /// each centroid from a normal with its standard error, and every
    /// replicate goes through the full classification again.
    fn bootstrap(&self, config: &McConfig, point: f64) -> Uncertainty {
        let mut rng = stream_rng(config.seed, BOOTSTRAP_STREAM);
        let total = self.counts[0] + self.counts[1];
        let split = Binomial::new(total, self.counts[0] as f64 / self.total()).expect("share in [0, 1]");
        let mut samples = Vec::with_capacity(config.resamples);
        for _ in 0..config.resamples {
            let n0 = split.sample(&mut rng) as f64;
            let q = self.centroids.map(|c| {
                c.map(|c| {
                    let zx: f64 = rng.sample(StandardNormal);
                    let zy: f64 = rng.sample(StandardNormal);
                    (c.qx + c.se_x * zx, c.qy + c.se_y * zy)
                })
            });
            samples.push(self.evaluate(n0, q, config).concurrence.clamp(0.0, 1.0));
        }
        let n = samples.len() as f64;
        let sigma = if samples.len() > 1 {
            let mean = samples.iter().sum::<f64>() / n;
            (samples.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Uncertainty {
            sigma,
            lower: (point - INTERVAL_SIGMAS * sigma).max(0.0),
            upper: (point + INTERVAL_SIGMAS * sigma).min(1.0),
            resamples: config.resamples,
        }
    }
}

struct Evaluation {
    pair: WeakValuePair,
    concurrence: f64,
    route: Route,
    product: f64,
    p_se: f64,
}

/// Reduced state from noisy weak values, or `None` if it is not a state.
fn noisy_reconstruction(pair: &WeakValuePair) -> Option<QubitState> {
    let from0 = pair.w0.map(|w| w * pair.p0);
    let from1 = pair.w1.map(|w| (w * pair.p1).conj());
    let rho10 = match (from0, from1) {
        (Some(a), Some(b)) => 0.5 * (a + b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => return None,
    };
    QubitState::new([[C64::new(pair.p0, 0.0), rho10.conj()], [rho10, C64::new(pair.p1, 0.0)]]).ok()
}

/// Concurrence with a bootstrap interval from `2 n_per_branch` simulated photons.
pub fn mc_estimate(
    rho_a: &QubitState,
    lambda: CouplingStrength,
    grid: &PointerGrid,
    n_per_branch: usize,
    efficiency: f64,
    seed: u64,
) -> Result<EstimateReport> {
    let optics = PreparedOptics::new(rho_a, &OpticalSetup::new(*grid, lambda))?;
    Ok(optics.run(&McConfig::new(n_per_branch, efficiency, seed)?)?.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointer::{field_intensity, lg_mode_field};
    use crate::qubit_core::{PureState, Subsystem};

    fn grid() -> PointerGrid {
        PointerGrid::square(128, 6.0).unwrap()
    }

    #[test]
    fn uniform_image_moments() {
        let g = grid();
        let img = IntensityImage::new(g, vec![1.0; g.len()]).unwrap();
        let run = sample_positions(&img, 200_000, 1.0, 5).unwrap();
        let c = mc_centroid(&run).unwrap();
        assert!(c.qx.abs() < 5.0 * c.se_x && c.qy.abs() < 5.0 * c.se_y);
        let sd = c.se_x * (c.n as f64).sqrt();
        assert!((sd - 6.0 / 3f64.sqrt()).abs() < 0.02);
        assert!(run.positions.iter().all(|p| p.0.abs() <= 6.0 && p.1.abs() <= 6.0));
    }

    #[test]
    fn lg_centroid_is_centred() {
        let img = field_intensity(&lg_mode_field(&grid()));
        let c = mc_centroid(&sample_positions(&img, 1_000_000, 1.0, 11).unwrap()).unwrap();
        assert!(c.qx.abs() < 5.0 * c.se_x && c.qy.abs() < 5.0 * c.se_y);
    }

    #[test]
    fn thinning_counts_emitted_photons() {
        let img = field_intensity(&lg_mode_field(&grid()));
        let run = sample_positions(&img, 100_000, 0.5, 2).unwrap();
        assert_eq!(run.n_photons(), 100_000);
        let ratio = run.emitted as f64 / 100_000.0;
        assert!((ratio - 2.0).abs() < 0.03, "{ratio}");
        assert!(sample_positions(&img, 10, 0.0, 2).is_err());
        assert!(sample_positions(&img, 10, 1.5, 2).is_err());
    }

    #[test]
    fn centroid_edge_cases() {
        let run = DetectionRun { positions: vec![(0.5, 0.0), (-0.5, 0.0)], emitted: 2, efficiency: 1.0, seed: 0 };
        let c = mc_centroid(&run).unwrap();
        assert_eq!((c.qx, c.qy), (0.0, 0.0));
        let one = DetectionRun { positions: vec![(0.5, 0.0)], ..run };
        assert!(matches!(mc_centroid(&one), Err(Error::InsufficientSamples { .. })));
        let g = grid();
        let dark = IntensityImage::new(g, vec![0.0; g.len()]).unwrap();
        assert!(matches!(sample_positions(&dark, 5, 1.0, 0), Err(Error::ZeroIntensity)));
    }

    #[test]
    fn deterministic_for_a_fixed_seed() {
        let img = field_intensity(&lg_mode_field(&grid()));
        let a = sample_positions(&img, 150_000, 0.7, 99).unwrap();
        let b = sample_positions(&img, 150_000, 0.7, 99).unwrap();
        assert_eq!(a, b);
        let c = sample_positions(&img, 150_000, 0.7, 100).unwrap();
        assert_ne!(a.positions, c.positions);
    }

    #[test]
    fn bell_state_uses_the_port_intensities() {
        let rho = PureState::bell_phi_plus().reduced(Subsystem::A);
        let lam = CouplingStrength::new(0.01).unwrap();
        let r = mc_estimate(&rho, lam, &grid(), 200_000, 1.0, 4).unwrap();
        assert_eq!(r.route, Route::DiagonalIntensity);
        let u = r.uncertainty.unwrap();
        assert!((r.concurrence - 1.0).abs() <= 3.0 * u.sigma + 1e-12);
    }
}
