//! Weak values read from simulated pointer images, and how the coupling
//! strength trades signal against the weak-measurement approximation.

use weak_concurrence::linalg::C64;
use weak_concurrence::pointer::{simulate_optics, CouplingStrength, OpticalSetup, PointerGrid};
use weak_concurrence::qubit_core::{concurrence_pure, PureState, Subsystem};

fn main() -> weak_concurrence::Result<()> {
    let c = |re: f64, im: f64| C64::new(re, im);
    let psi = PureState::new([c(std::f64::consts::FRAC_1_SQRT_2, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.5)])?;
    let rho_a = psi.reduced(Subsystem::A);
    println!("exact C = {:.6}", concurrence_pure(&psi));
    println!("{:>8} {:>10} {:>10} {:>18} {:>18}", "lambda", "C", "error", "w0", "w1");
    for lambda in [0.001, 0.01, 0.05, 0.1, 0.3] {
        let setup = OpticalSetup::new(PointerGrid::default(), CouplingStrength::new(lambda)?);
        let run = simulate_optics(&rho_a, &setup)?;
        let r = &run.report;
        let show = |w: Option<C64>| w.map_or("-".to_string(), |w| format!("{:+.4}{:+.4}i", w.re, w.im));
        println!(
            "{lambda:>8} {:>10.6} {:>10.2e} {:>18} {:>18}",
            r.concurrence,
            r.concurrence - concurrence_pure(&psi),
            show(r.pair.w0),
            show(r.pair.w1)
        );
        for w in &r.warnings {
            println!("         warning: {w}");
        }
    }
    Ok(())
}
