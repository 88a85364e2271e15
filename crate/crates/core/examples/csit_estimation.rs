//! LMMSE channel estimation: error power versus pilot length, and an
//! empirical check of the error covariance.
//!
//! ```bash
//! cargo run --example csit_estimation
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stin::channel::{draw_channels, spatial_covariances, Lmmse};
use stin::linalg::{outer, CMat, C64};
use stin::scenario::{link_budget, place_users, SystemConfig};

fn main() {
    let cfg = SystemConfig {
        m1: 3,
        m2: 3,
        n1: 2,
        n2: 2,
        ks: 2,
        kt: 2,
        ..SystemConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let placement = place_users(&cfg, &mut rng);
    let gains = link_budget(&cfg, &placement).normalized(&cfg);
    let covs = spatial_covariances(&cfg, &placement, &gains);

    println!("{:>8}  {:>14}  {:>14}", "tau_p", "tr(Psi) SU0", "tr(Phi_bs) TU0");
    for tau in [0.0, 0.5, 1.0, 2.0, 8.0, 32.0, f64::INFINITY] {
        let sat = Lmmse::new(&covs.q_sat[0], tau).error_covariance(cfg.m()).trace().re;
        let bs = Lmmse::new(&covs.r_bs[0], tau).error_covariance(cfg.n()).trace().re;
        println!("{tau:>8}  {sat:>14.5}  {bs:>14.5}");
    }

    let filter = Lmmse::new(&covs.r_bs[0], 2.0);
    let samples = 20_000;
    let mut acc = CMat::zeros(cfg.n(), cfg.n());
    for _ in 0..samples {
        let h = draw_channels(&cfg, &covs, &mut rng).h.column(0).into_owned();
        let e = &h - filter.estimate(&h, &mut rng);
        acc += outer(&e);
    }
    let empirical = acc / C64::from(samples as f64);
    let model = filter.error_covariance(cfg.n());
    println!(
        "empirical vs closed-form error covariance at tau_p = 2: relative Frobenius gap {:.4}",
        (&empirical - &model).norm() / model.norm()
    );
}
