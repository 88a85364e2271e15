//! Places users, evaluates the link budget and draws one block of channels.
//!
//! ```bash
//! cargo run --example channel_synthesis
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stin::channel::{draw_channels, spatial_covariances, upa_response};
use stin::scenario::{link_budget, place_users, SystemConfig};

fn main() {
    let cfg = SystemConfig {
        m1: 4,
        m2: 4,
        ks: 4,
        kt: 3,
        kt_int: 2,
        ..SystemConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let placement = place_users(&cfg, &mut rng);
    let raw = link_budget(&cfg, &placement);
    let gains = raw.normalized(&cfg);

    println!("satellite users");
    for (u, su) in placement.sat_users.iter().enumerate() {
        println!(
            "  SU{u}: slant {:7.1} km  theta {:6.3} rad  alpha {:.3e} (normalised {:.3})",
            su.slant_distance / 1e3,
            su.theta,
            raw.alpha_sat[u],
            gains.alpha_sat[u]
        );
    }
    println!("terrestrial users (interfered: {:?})", placement.interfered());
    for (k, tu) in placement.terrestrial_users.iter().enumerate() {
        println!(
            "  TU{k}: BS distance {:6.2} km  beta {:.3}  {} paths",
            tu.bs_distance / 1e3,
            gains.beta[k],
            tu.paths.len()
        );
    }

    let covs = spatial_covariances(&cfg, &placement, &gains);
    let real = draw_channels(&cfg, &covs, &mut rng);
    println!("channel norms");
    for u in 0..cfg.ks {
        println!("  |g_{u}|^2 = {:.3}", real.g.column(u).norm_squared());
    }
    for k in 0..cfg.kt {
        println!(
            "  |z_{k}|^2 = {:.3}  |h_{k}|^2 = {:.3}",
            real.z.column(k).norm_squared(),
            real.h.column(k).norm_squared()
        );
    }

    let a = upa_response(0.3, 1.1, cfg.d1_sat, cfg.d2_sat, cfg.m1, cfg.m2);
    println!("UPA response at (0.3, 1.1): {} entries, first {:.3}", a.len(), a[0]);
}
