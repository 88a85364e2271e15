//! Compares how much BS-side information the satellite receives: a report
//! per block, a long-term average, or nothing.
//!
//! ```bash
//! cargo run --example report_mechanisms
//! ```

use stin::decouple::Mechanism;
use stin::harness::{Method, TrialContext};
use stin::scenario::SystemConfig;

fn main() -> stin::Result<()> {
    let cfg = SystemConfig {
        m1: 4,
        m2: 4,
        ks: 4,
        kt: 3,
        kt_int: 2,
        snr_db: 25.0,
        report_samples: 100,
        ..SystemConfig::default()
    };
    let mut ctx = TrialContext::new(&cfg, 5)?;
    let avg = ctx.average_reports()?.clone();
    println!("long-term report: epsilon {:?}", avg.epsilon);
    println!("                  omega   {:?}", avg.omega);
    for mechanism in [Mechanism::Instantaneous, Mechanism::Average, Mechanism::Zero] {
        let (r, _) = ctx.evaluate(Method::Gpi(mechanism))?;
        println!(
            "{:<14} sum rate {:7.3}  iterations {:>4}  converged {}",
            mechanism.as_str(),
            r.sum_rate,
            r.iterations,
            r.converged
        );
    }
    Ok(())
}
