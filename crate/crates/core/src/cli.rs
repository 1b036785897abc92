//! Command-line front end. Every command is a thin adapter over the
//! library: it parses a state, runs one pipeline and prints JSON or CSV.
//!
//! Exit codes: 0 on success, 2 for invalid input, 3 for numerical failures
//! such as a dark image.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{estimate_with, sweep_surface, Diagnostic, EstimateReport};
use crate::io::{self, StateInput};
use crate::photon_mc::{McConfig, PreparedOptics, DEFAULT_PHOTONS};
use crate::pointer::{
    simulate_optics, CouplingStrength, OpticalSetup, PointerGrid, DEFAULT_EXTENT, DEFAULT_GRID_N, DEFAULT_LAMBDA,
};
use crate::qubit_core::{concurrence_mixed, partial_trace, purity, AnyDensityMatrix, QubitState, Subsystem, TwoQubitState};
use crate::robustness::{
    campaign, mixedness_upper_seeded, verify_appendix_bounds, verify_state_bounds, BoundCheck, CampaignConfig,
    DEFAULT_REFINE_ITERS,
};
use crate::weak_values::{Thresholds, EPS_ORIGIN};

pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "weak-concurrence", version, about = "Two-qubit concurrence from weak measurements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Concurrence from the exact weak values of a state.
    Estimate(EstimateArgs),
    /// Simulate the pointer images and estimate from their centroids.
    Simulate(SimulateArgs),
    /// Finite photon-count simulation with a bootstrap interval.
    Mc(McArgs),
    /// Concurrence surface over (|w0|, |w1|) as CSV.
    Sweep(SweepArgs),
    /// Mixedness bounds for one state, or a random campaign as CSV.
    Robustness(RobustnessArgs),
}

#[derive(Debug, Args)]
pub struct StateArgs {
    /// State JSON, inline or as a file path.
    #[arg(long)]
    pub state: String,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write the result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct OpticsArgs {
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value_t = DEFAULT_GRID_N)]
    pub grid_n: usize,
    #[arg(long, default_value_t = DEFAULT_EXTENT)]
    pub extent: f64,
    #[arg(long, default_value_t = EPS_ORIGIN)]
    pub epsilon_origin: f64,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, default_value_t = EPS_ORIGIN)]
    pub epsilon_origin: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[command(flatten)]
    pub optics: OpticsArgs,
    /// Directory for both post-selected images (CSV and raw).
    #[arg(long)]
    pub dump_images: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// State JSON, inline or as a file path.
    #[arg(long, required_unless_present = "images")]
    pub state: Option<String>,
    /// Sample from images written by `simulate --dump-images` instead of a state.
    #[arg(long, conflicts_with = "state")]
    pub images: Option<PathBuf>,
    #[command(flatten)]
    pub optics: OpticsArgs,
    /// Mean detections per post-selection port.
    #[arg(long, default_value_t = DEFAULT_PHOTONS)]
    pub photons: usize,
    #[arg(long, default_value_t = 1.0)]
    pub efficiency: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for the detected positions of both ports.
    #[arg(long)]
    pub dump_positions: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Points per axis.
    #[arg(long, default_value_t = 201)]
    pub sweep_n: usize,
    /// Largest magnitude on each axis.
    #[arg(long, default_value_t = 2.0)]
    pub sweep_max: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    /// Two-qubit state to certify; without it a random campaign is run.
    #[arg(long)]
    pub state: Option<String>,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0.3)]
    pub max_epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_REFINE_ITERS)]
    pub refine_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Run parameters echoed into every JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct Parameters {
    pub command: &'static str,
    pub lambda: f64,
    pub grid_n: usize,
    pub extent: f64,
    pub photons: usize,
    pub efficiency: f64,
    pub seed: u64,
    pub epsilon_origin: f64,
    pub refine_iters: usize,
}

impl Parameters {
    fn defaults(command: &'static str) -> Self {
        Self {
            command,
            lambda: DEFAULT_LAMBDA,
            grid_n: DEFAULT_GRID_N,
            extent: DEFAULT_EXTENT,
            photons: DEFAULT_PHOTONS,
            efficiency: 1.0,
            seed: 0,
            epsilon_origin: EPS_ORIGIN,
            refine_iters: DEFAULT_REFINE_ITERS,
        }
    }

    fn with_optics(mut self, o: &OpticsArgs) -> Self {
        self.lambda = o.lambda;
        self.grid_n = o.grid_n;
        self.extent = o.extent;
        self.epsilon_origin = o.epsilon_origin;
        self
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    parameters: &'a Parameters,
    report: &'a T,
}

fn envelope<T: Serialize>(parameters: &Parameters, report: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Envelope { parameters, report })?;
    s.push('\n');
    Ok(s)
}

fn thresholds(epsilon_origin: f64) -> Result<Thresholds> {
    if !(epsilon_origin.is_finite() && epsilon_origin >= 0.0) {
        return Err(Error::OutOfRange(format!("origin threshold {epsilon_origin} must be nonnegative")));
    }
    Ok(Thresholds { origin: epsilon_origin, ..Thresholds::default() })
}

/// Alice's reduced state of the input, with a note when the joint state is mixed.
struct ReducedInput {
    rho_a: QubitState,
    joint: Option<TwoQubitState>,
}

fn reduced_input(source: &str) -> Result<ReducedInput> {
    Ok(match io::load_state(source)? {
        StateInput::Pure(s) => ReducedInput { rho_a: s.reduced(Subsystem::A), joint: Some(s.projector()) },
        StateInput::Mixed(AnyDensityMatrix::TwoQubit(rho)) => {
            ReducedInput { rho_a: partial_trace(&rho, Subsystem::A), joint: Some(rho) }
        }
        StateInput::Mixed(AnyDensityMatrix::Qubit(rho)) => ReducedInput { rho_a: rho, joint: None },
    })
}

/// Flag a mixed joint state: the weak-value formula assumes purity.
fn annotate_joint(report: &mut EstimateReport, joint: Option<&TwoQubitState>) {
    let Some(rho) = joint else { return };
    let p = purity(rho);
    if p < 1.0 - 1e-10 {
        report.diagnostics.push(Diagnostic::new("joint_purity", p));
        report.diagnostics.push(Diagnostic::new("joint_concurrence", concurrence_mixed(rho)));
        report.warnings.push(format!(
            "joint state is mixed (purity {p:.6}); the weak-value concurrence assumes a pure joint state"
        ));
    }
}

fn optics_setup(o: &OpticsArgs) -> Result<OpticalSetup> {
    let grid = PointerGrid::square(o.grid_n, o.extent)?;
    let mut setup = OpticalSetup::new(grid, CouplingStrength::new(o.lambda)?);
    setup.thresholds = thresholds(o.epsilon_origin)?;
    Ok(setup)
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<String> {
    let input = reduced_input(&args.state.state)?;
    let mut report = estimate_with(&input.rho_a, &thresholds(args.epsilon_origin)?)?;
    annotate_joint(&mut report, input.joint.as_ref());
    let mut params = Parameters::defaults("estimate");
    params.epsilon_origin = args.epsilon_origin;
    envelope(&params, &report)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<String> {
    let input = reduced_input(&args.state.state)?;
    let setup = optics_setup(&args.optics)?;
    let run = simulate_optics(&input.rho_a, &setup)?;
    let mut report = run.report;
    annotate_joint(&mut report, input.joint.as_ref());
    if let Some(dir) = &args.dump_images {
        for (b, img) in run.images.iter().enumerate() {
            io::dump_image(img, dir, &format!("image_{b}"))?;
        }
    }
    envelope(&Parameters::defaults("simulate").with_optics(&args.optics), &report)
}

pub fn cmd_mc(args: &McArgs) -> Result<String> {
    let config = McConfig::new(args.photons, args.efficiency, args.seed)?;
    let mut params = Parameters::defaults("mc").with_optics(&args.optics);
    let (run, joint) = match (&args.state, &args.images) {
        (Some(source), _) => {
            let input = reduced_input(source)?;
            let setup = optics_setup(&args.optics)?;
            (PreparedOptics::new(&input.rho_a, &setup)?.run(&config)?, input.joint)
        }
        (None, Some(dir)) => {
            let images = [
                io::read_image_raw(&dir.join("image_0.bin"))?,
                io::read_image_raw(&dir.join("image_1.bin"))?,
            ];
            let grid = images[0].grid;
            params.grid_n = grid.nx();
            params.extent = grid.extent();
            let mut setup = OpticalSetup::new(grid, CouplingStrength::new(args.optics.lambda)?);
            setup.thresholds = thresholds(args.optics.epsilon_origin)?;
            (PreparedOptics::from_images(images, &setup)?.run(&config)?, None)
        }
        (None, None) => return Err(Error::Parse("either --state or --images is required".into())),
    };
    let mut report = run.report;
    annotate_joint(&mut report, joint.as_ref());
    if let Some(dir) = &args.dump_positions {
        fs::create_dir_all(dir)?;
        for (b, det) in run.detections.iter().enumerate() {
            let positions = det.as_ref().map_or(&[][..], |d| &d.positions[..]);
            io::write_positions(std::io::BufWriter::new(fs::File::create(dir.join(format!("positions_{b}.bin")))?), positions)?;
        }
    }
    params.photons = args.photons;
    params.efficiency = args.efficiency;
    params.seed = args.seed;
    envelope(&params, &report)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<String> {
    Ok(io::sweep_to_csv(&sweep_surface(args.sweep_n, args.sweep_max)?))
}

#[derive(Serialize)]
struct StateBounds {
    m_upper: f64,
    purity_lower: f64,
    witness: Vec<crate::linalg::C64>,
    refinement_improvements: usize,
    checks: Vec<BoundCheck>,
}

pub fn cmd_robustness(args: &RobustnessArgs) -> Result<String> {
    match &args.state {
        Some(source) => {
            let rho = match io::load_state(source)? {
                StateInput::Pure(s) => s.projector(),
                StateInput::Mixed(AnyDensityMatrix::TwoQubit(rho)) => rho,
                StateInput::Mixed(AnyDensityMatrix::Qubit(_)) => return Err(Error::DimensionMismatch(4, 2)),
            };
            let cert = mixedness_upper_seeded(&rho, args.refine_iters, args.seed);
            let mut checks = verify_state_bounds(&rho, &cert);
            checks.extend(verify_appendix_bounds(&rho, &cert.witness.projector()));
            let out = StateBounds {
                m_upper: cert.m_upper,
                purity_lower: cert.purity_lower,
                witness: cert.witness.amplitudes().to_vec(),
                refinement_improvements: cert.improvements,
                checks,
            };
            let mut params = Parameters::defaults("robustness");
            params.refine_iters = args.refine_iters;
            params.seed = args.seed;
            envelope(&params, &out)
        }
        None => {
            let cfg = CampaignConfig {
                samples: args.samples,
                max_epsilon: args.max_epsilon,
                refine_iters: args.refine_iters,
                seed: args.seed,
            };
            Ok(io::campaign_to_csv(&campaign(&cfg)?))
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    let (text, out) = match &cli.command {
        Command::Estimate(a) => (cmd_estimate(a)?, &a.output),
        Command::Simulate(a) => (cmd_simulate(a)?, &a.output),
        Command::Mc(a) => (cmd_mc(a)?, &a.output),
        Command::Sweep(a) => (cmd_sweep(a)?, &a.output),
        Command::Robustness(a) => (cmd_robustness(a)?, &a.output),
    };
    emit(out.out.as_deref(), &text)
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INVALID
    }
}

/// Parse arguments, run, report errors on stderr and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
