//! Certified bounds for near-pure states: a mixedness certificate for one
//! noisy Bell state, then a randomized campaign over many states.

use weak_concurrence::qubit_core::{concurrence_mixed, werner};
use weak_concurrence::robustness::{campaign, concurrence_bounds_with, mixedness_upper, CampaignConfig};

fn main() -> weak_concurrence::Result<()> {
    let rho = werner(0.95)?;
    let cert = mixedness_upper(&rho, 50);
    let bounds = concurrence_bounds_with(&rho, &cert);
    let c = concurrence_mixed(&rho);
    println!("werner(0.95): {:.4} <= M <= {:.4}", cert.purity_lower, cert.m_upper);
    println!("  C^2 = {:.4} in [{:.4}, {:.4}]: {}", c * c, bounds.c_minus, bounds.c_plus, bounds.contains(c * c, 1e-12));

    let config = CampaignConfig { samples: 500, ..CampaignConfig::default() };
    let rows = campaign(&config)?;
    let violations: usize = rows.iter().map(|r| r.violations(1e-12)).sum();
    let names: Vec<&str> = rows[0].checks.iter().map(|c| c.name.as_str()).collect();
    println!("campaign: {} states, {} checks each, {violations} violations", rows.len(), names.len());
    for (i, name) in names.iter().enumerate() {
        let min_slack = rows.iter().map(|r| r.checks[i].slack).fold(f64::INFINITY, f64::min);
        println!("  {name:<24} min slack {min_slack:.3e}");
    }
    Ok(())
}
