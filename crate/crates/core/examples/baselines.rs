//! Distributed baselines without rate splitting, scored on the true channels.
//!
//! ```bash
//! cargo run --example baselines
//! ```

use stin::baselines::{design, Baseline};
use stin::harness::TrialContext;
use stin::rates::true_instantaneous_rates;
use stin::scenario::SystemConfig;

fn main() -> stin::Result<()> {
    let cfg = SystemConfig {
        m1: 4,
        m2: 4,
        ks: 4,
        kt: 3,
        kt_int: 2,
        tau_p: f64::INFINITY,
        ..SystemConfig::default()
    };
    let ctx = TrialContext::new(&cfg, 9)?;
    for which in [Baseline::Slnr, Baseline::Zf, Baseline::ZfLocal] {
        let p = design(which, &ctx.csit, &cfg);
        let rates = true_instantaneous_rates(&ctx.real, &p.f, &p.v, &cfg, false)?;
        let leak: f64 = ctx
            .csit
            .interfered
            .iter()
            .map(|&k| {
                (0..cfg.ks)
                    .map(|u| ctx.csit.z_hat.column(k).dotc(&p.f.column(u)).norm_sqr())
                    .sum::<f64>()
            })
            .sum();
        println!(
            "{which:?}: sum rate {:7.3}  satellite leakage to interfered users {:.2e}  regularised {}",
            rates.sum, leak, p.regularized
        );
    }
    Ok(())
}
