//! Instance builders shared by the integration tests.
#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stin::channel::{draw_channels, spatial_covariances, ChannelRealization, CovarianceSet, CsitEstimate, Estimator};
use stin::linalg::{complex_normal_vec, CVec};
use stin::rates::{build_quadratic_forms, QuadraticFormSet, StackedPrecoders};
use stin::scenario::{link_budget, place_users, SystemConfig};

pub struct Instance {
    pub cfg: SystemConfig,
    pub covs: CovarianceSet,
    pub real: ChannelRealization,
    pub csit: CsitEstimate,
    pub forms: QuadraticFormSet,
}

/// `M1·M2 = m1*m2`, `N = n1*n2`, users as given.
pub fn small_cfg(m1: usize, m2: usize, ks: usize, kt: usize, kt_int: usize) -> SystemConfig {
    SystemConfig {
        m1,
        m2,
        n1: 2,
        n2: 2,
        ks,
        kt,
        kt_int,
        ..SystemConfig::default()
    }
}

pub fn instance(cfg: &SystemConfig, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let placement = place_users(cfg, &mut rng);
    let gains = link_budget(cfg, &placement).normalized(cfg);
    let covs = spatial_covariances(cfg, &placement, &gains);
    let real = draw_channels(cfg, &covs, &mut rng);
    let csit = Estimator::new(&covs, cfg.tau_p).estimate(&real, &mut rng);
    let forms = build_quadratic_forms(&csit, cfg).unwrap();
    Instance {
        cfg: cfg.clone(),
        covs,
        real,
        csit,
        forms,
    }
}

pub fn random_unit(rng: &mut ChaCha8Rng, len: usize) -> CVec {
    complex_normal_vec(rng, len, 1.0).normalize()
}

pub fn random_precoders(cfg: &SystemConfig, rng: &mut ChaCha8Rng) -> StackedPrecoders {
    let f = random_unit(rng, cfg.m() * (cfg.ks + 1));
    let v = random_unit(rng, cfg.n() * cfg.kt);
    StackedPrecoders::new(f, v, cfg.m(), cfg.n()).unwrap()
}
