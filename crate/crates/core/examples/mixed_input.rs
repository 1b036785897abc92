//! A mixed joint state run through the pure-state estimator: the weak-value
//! estimate against the true concurrence as white noise is added.

use weak_concurrence::estimator::estimate;
use weak_concurrence::qubit_core::{concurrence_mixed, partial_trace, purity, werner, Subsystem};

fn main() -> weak_concurrence::Result<()> {
    println!("{:>6} {:>8} {:>10} {:>10}", "p", "purity", "C_true", "C_weak");
    for p in [1.0, 0.95, 0.8, 0.5, 1.0 / 3.0, 0.0] {
        let rho = werner(p)?;
        let report = estimate(&partial_trace(&rho, Subsystem::A))?;
        println!("{p:>6.3} {:>8.4} {:>10.4} {:>10.4}", purity(&rho), concurrence_mixed(&rho), report.concurrence);
    }
    Ok(())
}
