//! Jensen lower bounds through the quadratic forms, next to the rates the
//! same precoders achieve on the true channels.
//!
//! ```bash
//! cargo run --example lower_bounds
//! ```

use stin::gpi::mrt_precoders;
use stin::harness::TrialContext;
use stin::rates::{lower_bound_rates, true_instantaneous_rates};
use stin::scenario::SystemConfig;

fn main() -> stin::Result<()> {
    for tau_p in [0.5, 2.0, 8.0, f64::INFINITY] {
        let cfg = SystemConfig {
            m1: 4,
            m2: 4,
            ks: 4,
            kt: 3,
            kt_int: 1,
            tau_p,
            ..SystemConfig::default()
        };
        let ctx = TrialContext::new(&cfg, 3)?;
        let p = mrt_precoders(&ctx.csit)?;
        let bound = lower_bound_rates(&ctx.forms, &p)?;
        let (f, v) = p.unstack();
        let actual = true_instantaneous_rates(&ctx.real, &f, &v, &cfg, true)?;
        println!(
            "tau_p {tau_p:>4}: bound {:7.3}  true {:7.3}  (common {:.3} / {:.3})",
            bound.sum, actual.sum, bound.r_c, actual.r_c
        );
    }
    Ok(())
}
