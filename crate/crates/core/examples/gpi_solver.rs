//! Runs the two-stage generalized power iteration on one instance and shows
//! how the objectives and residuals evolve.
//!
//! ```bash
//! cargo run --example gpi_solver
//! ```

use stin::decouple::ReportValues;
use stin::gpi::{bs_objective, mrt_precoders, run_stin_gpi, sat_objective_min, GpiSettings, StageTag};
use stin::harness::TrialContext;
use stin::scenario::SystemConfig;

fn main() -> stin::Result<()> {
    let cfg = SystemConfig {
        m1: 4,
        m2: 4,
        ks: 4,
        kt: 3,
        kt_int: 1,
        snr_db: 20.0,
        ..SystemConfig::default()
    };
    let ctx = TrialContext::new(&cfg, 11)?;
    let init = mrt_precoders(&ctx.csit)?;
    let reports = ReportValues::instantaneous(&ctx.forms.bs, &init.v);
    let settings = GpiSettings::from(&cfg);
    let (p, trace) = run_stin_gpi(&ctx.forms, &reports, &settings, &init)?;

    for r in trace.records.iter().filter(|r| r.iter % 10 == 1) {
        let res = match r.stage {
            StageTag::Sat => r.res_sat,
            StageTag::Bs => r.res_bs,
        };
        println!(
            "{:>3} {:>4}  mu {:.3}  step {:.2e}  objective {:9.4}  residual {:.2e}",
            r.stage.as_str(),
            r.iter,
            r.mu,
            r.displacement,
            r.objective,
            res
        );
    }
    println!(
        "satellite stage: {} iterations, converged {}; BS stage: {} iterations, converged {}",
        trace.sat_iterations, trace.sat_converged, trace.bs_iterations, trace.bs_converged
    );
    println!(
        "satellite objective {:.4} (MRT {:.4}); BS objective {:.4} (MRT {:.4})",
        sat_objective_min(&ctx.forms.sat, &reports, &p.f),
        sat_objective_min(&ctx.forms.sat, &reports, &init.f),
        bs_objective(&ctx.forms.bs, &p.v),
        bs_objective(&ctx.forms.bs, &init.v)
    );
    Ok(())
}
