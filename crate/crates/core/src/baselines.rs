//! Distributed baselines without rate splitting.
//!
//! Every baseline returns `F` (`M × Ks`) and `V` (`N × Kt`) with unit-norm
//! columns scaled to equal power and total power one per transmitter.

use std::str::FromStr;

use crate::channel::CsitEstimate;
use crate::error::{Error, Result};
use crate::linalg::{add_identity, hpd_inverse, hpd_solve, normalized, outer, principal_eigvec, CMat, CVec, C64};
use crate::scenario::{SystemConfig, NOISE_POWER};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Baseline {
    Slnr,
    Zf,
    ZfLocal,
}

impl FromStr for Baseline {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slnr" => Ok(Baseline::Slnr),
            "zf" => Ok(Baseline::Zf),
            "zf-local" => Ok(Baseline::ZfLocal),
            _ => Err(Error::UnknownTag {
                kind: "baseline",
                value: s.into(),
            }),
        }
    }
}

/// Precoders of a baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct BaselinePrecoders {
    pub f: CMat,
    pub v: CMat,
    /// Set when a regularised inverse replaced exact zero-forcing.
    pub regularized: bool,
}

pub fn design(which: Baseline, csit: &CsitEstimate, cfg: &SystemConfig) -> BaselinePrecoders {
    match which {
        Baseline::Slnr => slnr_max(csit, cfg),
        Baseline::Zf => zf_single_cell(csit, cfg),
        Baseline::ZfLocal => zf_local(csit, cfg),
    }
}

/// Normalises every column and scales to equal power, trace one. Columns with
/// no direction fall back to the principal eigenvector of `fallback[j]`.
fn equal_power(cols: Vec<CVec>, fallback: &[CMat]) -> CMat {
    let k = cols.len();
    let dim = fallback.first().map_or(0, |m| m.nrows());
    let mut out = CMat::zeros(dim, k);
    let scale = 1.0 / (k.max(1) as f64).sqrt();
    for (j, c) in cols.into_iter().enumerate() {
        let unit = normalized(&c).unwrap_or_else(|| principal_eigvec(&fallback[j]));
        out.set_column(j, &(unit * C64::from(scale)));
    }
    out
}

fn columns(m: &CMat) -> Vec<CVec> {
    (0..m.ncols()).map(|j| m.column(j).into_owned()).collect()
}

/// Maximises each stream's signal-to-leakage-plus-noise ratio.
pub fn slnr_max(csit: &CsitEstimate, cfg: &SystemConfig) -> BaselinePrecoders {
    let (m, n, ks, kt) = (csit.m(), csit.n(), csit.ks(), csit.kt());
    let g = columns(&csit.g_hat);
    let h = columns(&csit.h_hat);

    let mut cross = CMat::zeros(m, m);
    for &k in &csit.interfered {
        cross += outer(&csit.z_hat.column(k).into_owned()) + &csit.phi_sat[k];
    }
    cross *= C64::from(cfg.pt() / cfg.ps());
    let sat_all: CMat = (0..ks).fold(CMat::zeros(m, m), |acc, i| acc + outer(&g[i]) + &csit.psi[i]);
    let f_cols = (0..ks)
        .map(|u| {
            let own = outer(&g[u]) + &csit.psi[u];
            let q = add_identity(&(&sat_all - own + &cross), NOISE_POWER / cfg.ps() * ks as f64);
            hpd_solve(&q, &g[u])
        })
        .collect();

    let bs_all: CMat = (0..kt).fold(CMat::zeros(n, n), |acc, j| acc + outer(&h[j]) + &csit.phi_bs[j]);
    let v_cols = (0..kt)
        .map(|k| {
            let own = outer(&h[k]) + &csit.phi_bs[k];
            let q = add_identity(&(&bs_all - own), NOISE_POWER / cfg.pt() * kt as f64);
            hpd_solve(&q, &h[k])
        })
        .collect();

    BaselinePrecoders {
        f: equal_power(f_cols, &csit.psi),
        v: equal_power(v_cols, &csit.phi_bs),
        regularized: false,
    }
}

/// `X (XᴴX)⁻¹`, or the regularised `X (XᴴX + δI)⁻¹` when `XᴴX` is singular
/// or `X` has more columns than rows.
fn zero_forcing(x: &CMat, delta: f64) -> (CMat, bool) {
    if x.ncols() == 0 {
        return (x.clone(), false);
    }
    let gram = x.adjoint() * x;
    if x.ncols() <= x.nrows() {
        if let Some(inv) = hpd_inverse(&gram) {
            let cond_ok = inv.iter().all(|z| z.re.is_finite() && z.im.is_finite());
            if cond_ok {
                return (x * inv, false);
            }
        }
    }
    let reg = add_identity(&gram, delta.max(1e-12));
    let inv = hpd_inverse(&reg).expect("regularised Gram matrix is positive definite");
    (x * inv, true)
}

/// Zero-forcing of each transmitter's own users only.
pub fn zf_single_cell(csit: &CsitEstimate, cfg: &SystemConfig) -> BaselinePrecoders {
    let ks = csit.ks().max(1) as f64;
    let kt = csit.kt().max(1) as f64;
    let (f, rf) = zero_forcing(&csit.g_hat, NOISE_POWER / cfg.ps() * ks);
    let (v, rv) = zero_forcing(&csit.h_hat, NOISE_POWER / cfg.pt() * kt);
    BaselinePrecoders {
        f: equal_power(columns(&f), &csit.psi),
        v: equal_power(columns(&v), &csit.phi_bs),
        regularized: rf || rv,
    }
}

/// Satellite streams additionally nulled towards the interfered terrestrial
/// users; the BS side is single-cell ZF.
pub fn zf_local(csit: &CsitEstimate, cfg: &SystemConfig) -> BaselinePrecoders {
    let (m, ks) = (csit.m(), csit.ks());
    let ni = csit.interfered.len();
    let mut aug = CMat::zeros(m, ks + ni);
    aug.columns_mut(0, ks).copy_from(&csit.g_hat);
    for (j, &k) in csit.interfered.iter().enumerate() {
        aug.set_column(ks + j, &csit.z_hat.column(k));
    }
    let delta = NOISE_POWER / cfg.ps() * (ks + ni).max(1) as f64;
    let (full, rf) = zero_forcing(&aug, delta);
    let f = full.columns(0, ks).into_owned();
    let single = zf_single_cell(csit, cfg);
    BaselinePrecoders {
        f: equal_power(columns(&f), &csit.psi),
        v: single.v,
        regularized: rf || single.regularized,
    }
}
