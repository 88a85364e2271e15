mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stin::baselines::{design, slnr_max, zf_local, zf_single_cell, Baseline};
use stin::channel::CsitEstimate;
use stin::linalg::{add_identity, outer, quad, CMat, CVec};
use stin::scenario::{SystemConfig, NOISE_POWER};

fn col(m: &CMat, j: usize) -> CVec {
    m.column(j).into_owned()
}

/// Direct SLNR of a BS beam for user `k`.
fn bs_slnr(csit: &CsitEstimate, cfg: &SystemConfig, k: usize, v: &CVec) -> f64 {
    let kt = csit.kt();
    let mut leak = CMat::zeros(csit.n(), csit.n());
    for j in (0..kt).filter(|&j| j != k) {
        leak += outer(&col(&csit.h_hat, j)) + &csit.phi_bs[j];
    }
    let leak = add_identity(&leak, NOISE_POWER / cfg.pt() * kt as f64);
    quad(&outer(&col(&csit.h_hat, k)), v) / quad(&leak, v)
}

/// Direct SLNR of a satellite beam for user `u`, cross-system leakage included.
fn sat_slnr(csit: &CsitEstimate, cfg: &SystemConfig, u: usize, f: &CVec) -> f64 {
    let ks = csit.ks();
    let mut leak = CMat::zeros(csit.m(), csit.m());
    for i in (0..ks).filter(|&i| i != u) {
        leak += outer(&col(&csit.g_hat, i)) + &csit.psi[i];
    }
    let scale = cfg.pt() / cfg.ps();
    for &k in &csit.interfered {
        leak += (outer(&col(&csit.z_hat, k)) + &csit.phi_sat[k]) * stin::linalg::C64::from(scale);
    }
    let leak = add_identity(&leak, NOISE_POWER / cfg.ps() * ks as f64);
    quad(&outer(&col(&csit.g_hat, u)), f) / quad(&leak, f)
}

#[test]
fn slnr_beats_random_and_matched_directions() {
    let mut cfg = common::small_cfg(3, 3, 3, 3, 2);
    cfg.power_ratio = 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for seed in 0..5u64 {
        let inst = common::instance(&cfg, seed);
        let p = slnr_max(&inst.csit, &cfg);
        for k in 0..cfg.kt {
            let best = bs_slnr(&inst.csit, &cfg, k, &col(&p.v, k));
            assert!(best >= bs_slnr(&inst.csit, &cfg, k, &col(&inst.csit.h_hat, k)) * (1.0 - 1e-12));
            for _ in 0..100 {
                let r = common::random_unit(&mut rng, cfg.n());
                assert!(best >= bs_slnr(&inst.csit, &cfg, k, &r) * (1.0 - 1e-12));
            }
        }
        for u in 0..cfg.ks {
            let best = sat_slnr(&inst.csit, &cfg, u, &col(&p.f, u));
            assert!(best >= sat_slnr(&inst.csit, &cfg, u, &col(&inst.csit.g_hat, u)) * (1.0 - 1e-12));
            for _ in 0..100 {
                let r = common::random_unit(&mut rng, cfg.m());
                assert!(best >= sat_slnr(&inst.csit, &cfg, u, &r) * (1.0 - 1e-12));
            }
        }
    }
}

#[test]
fn zero_forcing_cancels_intra_cell_interference() {
    let mut cfg = common::small_cfg(3, 3, 3, 3, 1);
    cfg.n1 = 3;
    cfg.n2 = 3;
    cfg.tau_p = f64::INFINITY;
    for seed in 0..5u64 {
        let inst = common::instance(&cfg, 10 + seed);
        let p = zf_single_cell(&inst.csit, &cfg);
        assert!(!p.regularized);
        for k in 0..3 {
            let h = col(&inst.csit.h_hat, k);
            let signal = h.dotc(&col(&p.v, k)).norm_sqr();
            let iui: f64 = (0..3)
                .filter(|&j| j != k)
                .map(|j| h.dotc(&col(&p.v, j)).norm_sqr())
                .sum();
            assert!(iui <= 1e-18 * signal, "iui {iui} signal {signal}");
        }
    }
}

#[test]
fn local_zf_at_full_spatial_load() {
    let mut cfg = common::small_cfg(2, 2, 3, 2, 1);
    cfg.tau_p = f64::INFINITY;
    for seed in 0..5u64 {
        let inst = common::instance(&cfg, 20 + seed);
        let p = zf_local(&inst.csit, &cfg);
        assert!(!p.regularized, "Ks + Kt_int = M admits exact nulling");
        let k = inst.csit.interfered[0];
        let z = col(&inst.csit.z_hat, k);
        for u in 0..cfg.ks {
            let f = col(&p.f, u);
            assert!(z.dotc(&f).norm() <= 1e-9 * z.norm());
            for i in (0..cfg.ks).filter(|&i| i != u) {
                let g = col(&inst.csit.g_hat, i);
                assert!(g.dotc(&f).norm() <= 1e-9 * g.norm());
            }
        }
    }
}

#[test]
fn local_zf_beyond_spatial_load_is_flagged() {
    let mut cfg = common::small_cfg(2, 2, 3, 2, 2);
    cfg.tau_p = f64::INFINITY;
    let inst = common::instance(&cfg, 30);
    let p = zf_local(&inst.csit, &cfg);
    assert!(p.regularized);
    assert!((p.f.norm_squared() - 1.0).abs() < 1e-12);
}

#[test]
fn every_baseline_has_equal_power_private_columns() {
    let cfg = common::small_cfg(3, 3, 4, 3, 1);
    let inst = common::instance(&cfg, 40);
    for which in [Baseline::Slnr, Baseline::Zf, Baseline::ZfLocal] {
        let p = design(which, &inst.csit, &cfg);
        assert_eq!(p.f.ncols(), cfg.ks, "no common column");
        for j in 0..cfg.ks {
            assert!((p.f.column(j).norm_squared() - 0.25).abs() < 1e-12);
        }
        for j in 0..cfg.kt {
            assert!((p.v.column(j).norm_squared() - 1.0 / 3.0).abs() < 1e-12);
        }
    }
}

#[test]
fn baseline_tags_parse() {
    assert_eq!("zf-local".parse::<Baseline>().unwrap(), Baseline::ZfLocal);
    assert!("mmse".parse::<Baseline>().unwrap_err().is_config());
}
