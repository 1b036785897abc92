//! Finite photon statistics: the estimate and its bootstrap interval as the
//! photon budget grows.

use std::time::Instant;

use weak_concurrence::linalg::C64;
use weak_concurrence::photon_mc::{McConfig, PreparedOptics};
use weak_concurrence::pointer::{CouplingStrength, OpticalSetup, PointerGrid};
use weak_concurrence::qubit_core::{concurrence_pure, PureState, Subsystem};

fn main() -> weak_concurrence::Result<()> {
    let t = 1.0 / 3f64.sqrt();
    let z = C64::new(0.0, 0.0);
    let psi = PureState::new([C64::new(t, 0.0), C64::new(t, 0.0), z, C64::new(t, 0.0)])?;
    let setup = OpticalSetup::new(PointerGrid::default(), CouplingStrength::new(0.05)?);
    let optics = PreparedOptics::new(&psi.reduced(Subsystem::A), &setup)?;
    println!("exact C = {:.6}", concurrence_pure(&psi));
    println!("{:>9} {:>9} {:>9} {:>20} {:>8}", "photons", "C", "sigma", "interval", "seconds");
    for n in [10_000, 100_000, 1_000_000] {
        let start = Instant::now();
        let run = optics.run(&McConfig::new(n, 1.0, 42)?)?;
        let u = run.report.uncertainty.expect("bootstrap interval");
        println!(
            "{n:>9} {:>9.4} {:>9.4} {:>20} {:>8.2}",
            run.report.concurrence,
            u.sigma,
            format!("[{:.4}, {:.4}]", u.lower, u.upper),
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
