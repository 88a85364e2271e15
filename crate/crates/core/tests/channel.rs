mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stin::channel::{draw_channels, Estimator, Lmmse};
use stin::linalg::{outer, CMat, C64};

fn rel(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn channel_second_moments_match_covariances() {
    let cfg = common::small_cfg(2, 2, 2, 2, 1);
    let inst = common::instance(&cfg, 1);
    let k = inst.covs.interfered()[0];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 50_000;
    let mut g = CMat::zeros(cfg.m(), cfg.m());
    let mut z = CMat::zeros(cfg.m(), cfg.m());
    let mut h = CMat::zeros(cfg.n(), cfg.n());
    for _ in 0..n {
        let real = draw_channels(&cfg, &inst.covs, &mut rng);
        g += outer(&real.g.column(1).into_owned());
        z += outer(&real.z.column(k).into_owned());
        h += outer(&real.h.column(0).into_owned());
    }
    let scale = C64::from(1.0 / n as f64);
    assert!(rel(&(g * scale), &inst.covs.q_sat[1]) < 0.03);
    assert!(rel(&(z * scale), &inst.covs.r_sat[k]) < 0.03);
    assert!(rel(&(h * scale), &inst.covs.r_bs[0]) < 0.03);
}

#[test]
fn estimate_is_orthogonal_to_its_error() {
    let cfg = common::small_cfg(2, 2, 2, 2, 1);
    let inst = common::instance(&cfg, 3);
    let filter = Lmmse::new(&inst.covs.r_bs[1], 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 50_000;
    let mut cross = CMat::zeros(cfg.n(), cfg.n());
    let mut second = CMat::zeros(cfg.n(), cfg.n());
    for _ in 0..n {
        let x = draw_channels(&cfg, &inst.covs, &mut rng).h.column(1).into_owned();
        let est = filter.estimate(&x, &mut rng);
        cross += &est * (&x - &est).adjoint();
        second += outer(&x);
    }
    assert!(cross.norm() / second.norm() < 0.02);
}

#[test]
fn longer_pilots_shrink_the_error() {
    let cfg = common::small_cfg(2, 2, 2, 2, 1);
    let inst = common::instance(&cfg, 5);
    let traces: Vec<f64> = [0.0, 0.5, 2.0, 8.0, 32.0, f64::INFINITY]
        .iter()
        .map(|&t| Lmmse::new(&inst.covs.r_bs[0], t).error_covariance(cfg.n()).trace().re)
        .collect();
    assert!(traces.windows(2).all(|w| w[1] < w[0] || w[1] == 0.0), "{traces:?}");
    assert!((traces[0] - inst.covs.r_bs[0].trace().re).abs() < 1e-12);
    assert_eq!(*traces.last().unwrap(), 0.0);
}

#[test]
fn estimates_keep_shapes_and_interference_pattern() {
    let cfg = common::small_cfg(2, 2, 3, 4, 2);
    let inst = common::instance(&cfg, 6);
    let est = Estimator::new(&inst.covs, 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let csit = est.estimate(&inst.real, &mut rng);
    assert_eq!((csit.m(), csit.n(), csit.ks(), csit.kt()), (4, 4, 3, 4));
    assert_eq!(csit.interfered.len(), 2);
    for k in 0..cfg.kt {
        let zero = csit.z_hat.column(k).iter().all(|v| v.norm() == 0.0);
        assert_eq!(zero, !csit.interfered.contains(&k));
        assert_eq!(csit.phi_sat[k].norm() == 0.0, zero);
    }
}
