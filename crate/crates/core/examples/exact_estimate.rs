//! Concurrence of a few pure states from their exact sigma_x weak values.

use weak_concurrence::estimator::estimate;
use weak_concurrence::linalg::C64;
use weak_concurrence::qubit_core::{concurrence_pure, PureState, Subsystem};

fn main() -> weak_concurrence::Result<()> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let t = 1.0 / 3f64.sqrt();
    let c = |re: f64, im: f64| C64::new(re, im);
    let states = [
        ("bell", PureState::bell_phi_plus()),
        ("product", PureState::basis(0, 1)),
        ("three-term", PureState::new([c(t, 0.0), c(t, 0.0), c(0.0, 0.0), c(t, 0.0)])?),
        ("complex", PureState::new([c(h, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.5)])?),
    ];
    println!("{:<12} {:>10} {:>10} {:>10}  route", "state", "C", "C_exact", "entropy");
    for (name, psi) in &states {
        let report = estimate(&psi.reduced(Subsystem::A))?;
        println!(
            "{name:<12} {:>10.6} {:>10.6} {:>10.6}  {:?}",
            report.concurrence,
            concurrence_pure(psi),
            report.entropy,
            report.route
        );
        if let (Some(w0), Some(w1)) = (report.pair.w0, report.pair.w1) {
            let show = |w: C64| format!("{:+.4}{:+.4}i", w.re + 0.0, w.im + 0.0);
            println!("{:<12} w0 = {}, w1 = {}", "", show(w0), show(w1));
        }
    }
    Ok(())
}
