//! Interference reports and the decoupled per-transmitter objectives.
//!
//! The BS reports three kinds of scalars to the satellite: the interference
//! plus noise seen by each terrestrial private stream (`epsilon`), the same at
//! each interfered user's common stream (`omega`), and the summed log of the
//! former (`epsilon_hat`). With them, the satellite objective no longer
//! depends on `v̄`.

use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_channels, CovarianceSet, Estimator};
use crate::error::{Error, Result};
use crate::gpi::{bs_stage, mrt_bs, GpiSettings};
use crate::linalg::{neumaier_sum, CVec};
use crate::rates::{bs_forms, log2_ratio, BsForms, SatelliteForms, FORM_FLOOR};
use crate::scenario::SystemConfig;
use crate::seeding::{substream, Stream};

/// How often the BS delivers its report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    /// Long-term statistics, computed once per placement.
    Average,
    /// Exact values of the current block.
    Instantaneous,
    /// No report at all.
    Zero,
}

impl Mechanism {
    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::Average => "average",
            Mechanism::Instantaneous => "instantaneous",
            Mechanism::Zero => "zero",
        }
    }
}

impl std::fmt::Display for Mechanism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mechanism {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "average" | "avg" => Ok(Mechanism::Average),
            "instantaneous" | "ins" => Ok(Mechanism::Instantaneous),
            "zero" => Ok(Mechanism::Zero),
            _ => Err(Error::UnknownTag {
                kind: "mechanism",
                value: s.to_string(),
            }),
        }
    }
}

/// Scalars reported by the BS. Vectors are indexed by terrestrial user;
/// `omega` is zero for users outside the satellite beam.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportValues {
    pub mechanism: Mechanism,
    pub epsilon: Vec<f64>,
    pub omega: Vec<f64>,
    pub epsilon_hat: f64,
}

impl ReportValues {
    pub fn zero(kt: usize) -> Self {
        Self {
            mechanism: Mechanism::Zero,
            epsilon: vec![0.0; kt],
            omega: vec![0.0; kt],
            epsilon_hat: 0.0,
        }
    }

    /// Exact report for the given BS precoder.
    pub fn instantaneous(bs: &BsForms, v: &CVec) -> Self {
        let epsilon: Vec<f64> = bs.users.iter().map(|u| u.u_private.quad(v)).collect();
        let omega = bs
            .users
            .iter()
            .map(|u| u.u_common.as_ref().map_or(0.0, |c| c.quad(v)))
            .collect();
        let epsilon_hat = epsilon.iter().map(|e| e.max(FORM_FLOOR).log2()).sum();
        Self {
            mechanism: Mechanism::Instantaneous,
            epsilon,
            omega,
            epsilon_hat,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report values serialise")
    }

    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigParse {
            path: origin.into(),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }
}

/// Long-term report: the mean of the instantaneous report over `samples`
/// independent blocks, each with its own estimate and BS-stage design.
///
/// Samples run in parallel on derived streams and are reduced in order, so the
/// result does not depend on the thread count.
pub fn average_reports(
    cfg: &SystemConfig,
    covs: &CovarianceSet,
    estimator: &Estimator,
    settings: &GpiSettings,
    samples: usize,
    seed: u64,
) -> Result<ReportValues> {
    if samples == 0 {
        return Err(Error::NoSamples);
    }
    let draws: Vec<ReportValues> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = substream(seed, Stream::Reports, s as u64);
            let real = draw_channels(cfg, covs, &mut rng);
            let est = estimator.estimate(&real, &mut rng);
            let forms = bs_forms(&est, cfg)?;
            let v0 = mrt_bs(&est);
            let v = bs_stage(&forms, settings, &v0).x;
            Ok(ReportValues::instantaneous(&forms, &v))
        })
        .collect::<Result<_>>()?;
    let kt = covs.kt();
    let n = samples as f64;
    let mean_of = |pick: &dyn Fn(&ReportValues) -> f64| neumaier_sum(draws.iter().map(pick)) / n;
    Ok(ReportValues {
        mechanism: Mechanism::Average,
        epsilon: (0..kt).map(|k| mean_of(&|r| r.epsilon[k])).collect(),
        omega: (0..kt).map(|k| mean_of(&|r| r.omega[k])).collect(),
        epsilon_hat: mean_of(&|r| r.epsilon_hat),
    })
}

/// Dispatches on the mechanism. `current` is the BS forms and precoder of
/// the present block, needed by the instantaneous mechanism.
pub fn compute_reports<R: Rng + ?Sized>(
    mechanism: Mechanism,
    cfg: &SystemConfig,
    covs: &CovarianceSet,
    current: Option<(&BsForms, &CVec)>,
    mc_samples: usize,
    rng: &mut R,
) -> Result<ReportValues> {
    match mechanism {
        Mechanism::Zero => Ok(ReportValues::zero(covs.kt())),
        Mechanism::Instantaneous => {
            let (forms, v) = current.ok_or(Error::Empty("current BS design"))?;
            Ok(ReportValues::instantaneous(forms, v))
        }
        Mechanism::Average => {
            let estimator = Estimator::new(covs, cfg.tau_p);
            average_reports(cfg, covs, &estimator, &GpiSettings::from(cfg), mc_samples, rng.random())
        }
    }
}

/// Leakage factors that enter the satellite objective. A factor whose matrix
/// and report are both zero is dropped.
pub fn active_leakage(sat: &SatelliteForms, reports: &ReportValues) -> Vec<bool> {
    sat.leakage
        .iter()
        .zip(&reports.epsilon)
        .map(|(c, &e)| e > 0.0 || !c.is_zero())
        .collect()
}

/// `Σ_j log2(f̄ᴴ(C_j + ε_j I)f̄ / ‖f̄‖²)` over the active factors.
pub fn leakage_log2(sat: &SatelliteForms, reports: &ReportValues, active: &[bool], f: &CVec) -> f64 {
    let nrm = f.norm_squared();
    sat.leakage
        .iter()
        .zip(&reports.epsilon)
        .zip(active)
        .filter(|(_, &on)| on)
        .map(|((c, &e), _)| ((c.quad(f) + e * nrm) / nrm).max(FORM_FLOOR).log2())
        .sum()
}

/// Decoupled private objective of every satellite user.
pub fn gamma_private_su(sat: &SatelliteForms, f: &CVec, reports: &ReportValues) -> Vec<f64> {
    if sat.ks == 0 {
        return Vec::new();
    }
    let ks = sat.ks as f64;
    let active = active_leakage(sat, reports);
    let leak = leakage_log2(sat, reports, &active, f);
    sat.sat_users
        .iter()
        .map(|s| {
            let u = s.u_private.quad(f);
            reports.epsilon_hat / ks + log2_ratio(u + s.s_private.quad(f), u) - leak / ks
        })
        .collect()
}

/// Decoupled private objective of every terrestrial user. May be negative.
pub fn gamma_private_tu(bs: &BsForms, v: &CVec) -> Vec<f64> {
    bs.users
        .iter()
        .map(|u| log2_ratio(u.s_private.quad(v), u.u_private.quad(v)))
        .collect()
}

/// Decoupled common-stream objective of every interfered user, in the order
/// of `sat.interfered`.
pub fn gamma_common_tu(sat: &SatelliteForms, f: &CVec, reports: &ReportValues) -> Vec<f64> {
    let nrm = f.norm_squared();
    sat.interfered
        .iter()
        .map(|t| {
            let y = t.c_common.quad(f) + reports.omega[t.user] * nrm;
            log2_ratio(y + t.s_common.quad(f), y)
        })
        .collect()
}
