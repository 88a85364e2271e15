//! Monte-Carlo SNR sweep over several methods, written to CSV.
//!
//! ```bash
//! cargo run --release --example snr_sweep
//! ```

use stin::baselines::Baseline;
use stin::decouple::Mechanism;
use stin::harness::{sweep, write_outputs, Axis, Method, SweepSpec};
use stin::scenario::SystemConfig;

fn main() -> stin::Result<()> {
    let base = SystemConfig {
        m1: 3,
        m2: 3,
        n1: 2,
        n2: 2,
        ks: 3,
        kt: 2,
        kt_int: 1,
        report_samples: 50,
        ..SystemConfig::default()
    };
    let methods = vec![
        Method::Gpi(Mechanism::Instantaneous),
        Method::Gpi(Mechanism::Average),
        Method::Baseline(Baseline::Slnr),
        Method::Baseline(Baseline::Zf),
    ];
    let mut spec = SweepSpec::new(Axis::Snr, vec![0.0, 10.0, 20.0, 30.0], 20, methods, base);
    spec.keep_trace = true;
    let table = sweep(&spec)?;
    for row in &table.summary {
        println!(
            "snr {:>4}  {:<9} {:7.3} ± {:.3}",
            row.axis_value, row.method, row.mean_sum_rate, row.stderr
        );
    }
    let prefix = std::env::temp_dir().join("stin_snr_sweep");
    for path in write_outputs(&table, &prefix)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
