//! Default-size system (25 satellite antennas, 10 satellite users) at 30 dB,
//! rate-splitting GPI against the baselines. The trial count is the first
//! argument.
//!
//! ```bash
//! cargo run --release --example full_scale_comparison -- 50
//! ```

use stin::baselines::Baseline;
use stin::decouple::Mechanism;
use stin::harness::{sweep, Axis, Method, SweepSpec};
use stin::scenario::SystemConfig;

fn main() -> stin::Result<()> {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    let methods = vec![
        Method::Gpi(Mechanism::Instantaneous),
        Method::Gpi(Mechanism::Average),
        Method::Baseline(Baseline::Slnr),
        Method::Baseline(Baseline::Zf),
        Method::Baseline(Baseline::ZfLocal),
    ];
    let spec = SweepSpec::new(Axis::Snr, vec![30.0], trials, methods, SystemConfig::default());
    let table = sweep(&spec)?;
    let slnr = table
        .summary
        .iter()
        .find(|r| r.method == "slnr")
        .map(|r| r.mean_sum_rate)
        .unwrap_or(f64::NAN);
    for row in &table.summary {
        println!(
            "{:<9} {:7.3} ± {:.3}  ({:+.1}% vs slnr)",
            row.method,
            row.mean_sum_rate,
            row.stderr,
            100.0 * (row.mean_sum_rate / slnr - 1.0)
        );
    }
    Ok(())
}
