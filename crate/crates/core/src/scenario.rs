//! System configuration, user placement and link budget.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BOLTZMANN: f64 = 1.380649e-23;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Receiver noise power; transmit powers are expressed relative to it.
pub const NOISE_POWER: f64 = 1.0;

/// How raw link-budget gains are scaled before channels are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GainNormalization {
    /// Satellite gains relative to the nadir link, terrestrial gains relative
    /// to a user on the BS cell edge. `snr_db` is then the nadir / cell-edge SNR.
    #[default]
    Reference,
    /// Raw link-budget values in units of the thermal noise power.
    Absolute,
}

/// Every scenario constant. Keys of the config file match the field names
/// given in the `rename` attributes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Satellite array elements along the horizontal axis.
    #[serde(rename = "M1")]
    pub m1: usize,
    /// Satellite array elements along the vertical axis.
    #[serde(rename = "M2")]
    pub m2: usize,
    /// BS array elements along the horizontal axis.
    #[serde(rename = "N1")]
    pub n1: usize,
    /// BS array elements along the vertical axis.
    #[serde(rename = "N2")]
    pub n2: usize,
    /// Satellite users.
    #[serde(rename = "Ks")]
    pub ks: usize,
    /// Terrestrial users.
    #[serde(rename = "Kt")]
    pub kt: usize,
    /// Terrestrial users that also receive the satellite beam.
    #[serde(rename = "Kt_int")]
    pub kt_int: usize,
    /// Carrier frequency (Hz).
    pub fc: f64,
    /// Bandwidth (Hz).
    #[serde(rename = "Bw")]
    pub bw: f64,
    /// Satellite altitude (m).
    pub d0_sat: f64,
    pub sat_coverage_radius: f64,
    pub bs_coverage_radius: f64,
    /// Horizontal distance from the satellite nadir to the BS (m).
    pub bs_offset: f64,
    pub bs_height: f64,
    /// Antenna gains (dBi).
    #[serde(rename = "G_sat")]
    pub g_sat: f64,
    #[serde(rename = "G_user")]
    pub g_user: f64,
    #[serde(rename = "G_bs")]
    pub g_bs: f64,
    /// Rician factor of the satellite links (linear, may be `inf`).
    pub kappa_s: f64,
    /// Terrestrial NLoS paths per user.
    #[serde(rename = "Lt")]
    pub lt: usize,
    /// Terrestrial path-loss exponent.
    pub rho: f64,
    /// Element spacings in wavelengths.
    pub d1_sat: f64,
    pub d2_sat: f64,
    pub d1_bs: f64,
    pub d2_bs: f64,
    /// Pilot energy; `inf` gives perfect CSIT.
    pub tau_p: f64,
    /// Satellite transmit SNR in dB.
    pub snr_db: f64,
    /// Satellite over BS transmit power (linear).
    pub power_ratio: f64,
    /// Receiver noise temperature (K).
    pub noise_temp: f64,
    pub gain_normalization: GainNormalization,
    /// Initial smoothing parameter of the soft minimum.
    pub mu0: f64,
    /// Multiplier applied to the smoothing parameter on slow convergence.
    pub mu_factor: f64,
    /// Non-converged inner iterations before the smoothing parameter moves.
    pub mu_trigger: usize,
    /// Lower clamp of the smoothing parameter.
    pub mu_min: f64,
    /// Upper clamp of the smoothing parameter.
    pub mu_max: f64,
    /// Convergence tolerance on the precoder displacement.
    pub zeta: f64,
    pub t_max: usize,
    pub inner_max: usize,
    /// Channel samples used by the average report mechanism.
    pub report_samples: usize,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            m1: 5,
            m2: 5,
            n1: 3,
            n2: 3,
            ks: 10,
            kt: 3,
            kt_int: 1,
            fc: 20e9,
            bw: 800e6,
            d0_sat: 1_000e3,
            sat_coverage_radius: 500e3,
            bs_coverage_radius: 50e3,
            bs_offset: 250e3,
            bs_height: 30.0,
            g_sat: 6.0,
            g_user: 0.0,
            g_bs: 0.0,
            kappa_s: 10.0,
            lt: 10,
            rho: 4.0,
            d1_sat: 1.0,
            d2_sat: 1.0,
            d1_bs: 0.5,
            d2_bs: 0.5,
            tau_p: 2.0,
            snr_db: 15.0,
            power_ratio: 1.0,
            noise_temp: 290.0,
            gain_normalization: GainNormalization::Reference,
            mu0: 0.1,
            mu_factor: 0.5,
            mu_trigger: 30,
            mu_min: 1e-3,
            mu_max: 1.0,
            zeta: 0.01,
            t_max: 1000,
            inner_max: 200,
            report_samples: 1000,
            seed: 0,
        }
    }
}

impl SystemConfig {
    /// Satellite antennas `M1·M2`.
    pub fn m(&self) -> usize {
        self.m1 * self.m2
    }

    /// BS antennas `N1·N2`.
    pub fn n(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.fc
    }

    /// Satellite transmit power.
    pub fn ps(&self) -> f64 {
        NOISE_POWER * 10f64.powf(self.snr_db / 10.0)
    }

    /// BS transmit power.
    pub fn pt(&self) -> f64 {
        self.ps() / self.power_ratio
    }

    pub fn perfect_csit(&self) -> bool {
        self.tau_p.is_infinite()
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(field: &'static str, reason: impl Into<String>) -> Result<()> {
            Err(Error::InvalidConfig {
                field,
                reason: reason.into(),
            })
        }
        let counts = [
            ("M1", self.m1),
            ("M2", self.m2),
            ("N1", self.n1),
            ("N2", self.n2),
            ("Ks", self.ks),
            ("Kt", self.kt),
            ("Lt", self.lt),
            ("t_max", self.t_max),
            ("inner_max", self.inner_max),
            ("mu_trigger", self.mu_trigger),
            ("report_samples", self.report_samples),
        ];
        for (field, v) in counts {
            if v == 0 {
                return bad(field, "must be at least 1");
            }
        }
        if self.kt_int > self.kt {
            return bad("Kt_int", format!("{} exceeds Kt = {}", self.kt_int, self.kt));
        }
        let positive = [
            ("fc", self.fc),
            ("Bw", self.bw),
            ("d0_sat", self.d0_sat),
            ("sat_coverage_radius", self.sat_coverage_radius),
            ("bs_coverage_radius", self.bs_coverage_radius),
            ("bs_height", self.bs_height),
            ("rho", self.rho),
            ("d1_sat", self.d1_sat),
            ("d2_sat", self.d2_sat),
            ("d1_bs", self.d1_bs),
            ("d2_bs", self.d2_bs),
            ("power_ratio", self.power_ratio),
            ("noise_temp", self.noise_temp),
            ("mu0", self.mu0),
            ("mu_factor", self.mu_factor),
            ("mu_min", self.mu_min),
            ("mu_max", self.mu_max),
            ("zeta", self.zeta),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(field, format!("must be finite and > 0, got {v}"));
            }
        }
        if self.mu_max < self.mu_min {
            return bad("mu_max", "must be >= mu_min");
        }
        if !(self.bs_offset.is_finite() && self.bs_offset >= 0.0) {
            return bad("bs_offset", "must be finite and >= 0");
        }
        if self.kappa_s.is_nan() || self.kappa_s < 0.0 {
            return bad("kappa_s", "must be >= 0");
        }
        if self.tau_p.is_nan() || self.tau_p < 0.0 {
            return bad("tau_p", "must be >= 0 (inf for perfect CSIT)");
        }
        for (field, v) in [
            ("snr_db", self.snr_db),
            ("G_sat", self.g_sat),
            ("G_user", self.g_user),
            ("G_bs", self.g_bs),
        ] {
            if !v.is_finite() {
                return bad(field, "must be finite");
            }
        }
        Ok(())
    }
}

/// Parses and validates a config from TOML text. Missing keys take defaults.
pub fn parse_config(text: &str, origin: &str) -> Result<SystemConfig> {
    let cfg: SystemConfig = toml::from_str(text).map_err(|e| Error::ConfigParse {
        path: origin.into(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<SystemConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, &path.display().to_string())
}

/// Long-term geometry of one satellite user.
#[derive(Clone, Debug, PartialEq)]
pub struct SatUser {
    pub position: (f64, f64),
    pub theta: f64,
    pub phi: f64,
    pub slant_distance: f64,
}

/// Long-term geometry of one terrestrial user.
#[derive(Clone, Debug, PartialEq)]
pub struct TerrestrialUser {
    pub position: (f64, f64),
    /// Distance to the BS antenna, including its height.
    pub bs_distance: f64,
    /// `(θ, φ)` of each NLoS path leaving the BS.
    pub paths: Vec<(f64, f64)>,
    /// `(θ, φ)` towards the satellite when the user is inside the beam.
    pub sat_aod: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UserPlacement {
    pub sat_users: Vec<SatUser>,
    pub terrestrial_users: Vec<TerrestrialUser>,
}

impl UserPlacement {
    pub fn interfered(&self) -> Vec<usize> {
        self.terrestrial_users
            .iter()
            .enumerate()
            .filter_map(|(k, t)| t.sat_aod.map(|_| k))
            .collect()
    }

    pub fn is_interfered(&self, k: usize) -> bool {
        self.terrestrial_users[k].sat_aod.is_some()
    }
}

fn uniform_disc<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> (f64, f64) {
    let r = radius * rng.random::<f64>().sqrt();
    let a = 2.0 * PI * rng.random::<f64>();
    (r * a.cos(), r * a.sin())
}

fn sat_aod(cfg: &SystemConfig, (x, y): (f64, f64)) -> (f64, f64) {
    let ground = x.hypot(y);
    let theta = ground.atan2(cfg.d0_sat);
    let phi = if ground > 0.0 {
        y.atan2(x).rem_euclid(2.0 * PI)
    } else {
        0.0
    };
    (theta, phi)
}

/// Places users uniformly on their coverage discs. The satellite nadir is the
/// origin; the BS sits `bs_offset` metres along the x axis.
pub fn place_users<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> UserPlacement {
    let sat_users = (0..cfg.ks)
        .map(|_| {
            let position = uniform_disc(rng, cfg.sat_coverage_radius);
            let (theta, phi) = sat_aod(cfg, position);
            SatUser {
                position,
                theta,
                phi,
                slant_distance: cfg.d0_sat.hypot(position.0.hypot(position.1)),
            }
        })
        .collect();

    let mut interfered = vec![false; cfg.kt];
    for k in rand::seq::index::sample(rng, cfg.kt, cfg.kt_int.min(cfg.kt)) {
        interfered[k] = true;
    }
    let terrestrial_users = interfered
        .into_iter()
        .map(|hit| {
            let (dx, dy) = uniform_disc(rng, cfg.bs_coverage_radius);
            let position = (cfg.bs_offset + dx, dy);
            let paths = (0..cfg.lt)
                .map(|_| (PI * rng.random::<f64>(), 2.0 * PI * rng.random::<f64>()))
                .collect();
            TerrestrialUser {
                position,
                bs_distance: dx.hypot(dy).hypot(cfg.bs_height),
                paths,
                sat_aod: hit.then(|| sat_aod(cfg, position)),
            }
        })
        .collect();

    UserPlacement {
        sat_users,
        terrestrial_users,
    }
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Average channel powers of every link.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkBudget {
    /// Satellite to satellite user.
    pub alpha_sat: Vec<f64>,
    /// Satellite to terrestrial user; zero outside the beam.
    pub alpha_terrestrial: Vec<f64>,
    /// BS to terrestrial user.
    pub beta: Vec<f64>,
}

/// Free-space satellite link power at the given distance.
pub fn satellite_gain(cfg: &SystemConfig, distance: f64) -> f64 {
    let g = db_to_linear(cfg.g_sat) * db_to_linear(cfg.g_user);
    g / (BOLTZMANN * cfg.noise_temp * cfg.bw) * (SPEED_OF_LIGHT / (4.0 * PI * cfg.fc * distance)).powi(2)
}

/// Terrestrial link power with path-loss exponent `rho`.
pub fn terrestrial_gain(cfg: &SystemConfig, distance: f64) -> f64 {
    let g = db_to_linear(cfg.g_bs) * db_to_linear(cfg.g_user);
    g / (BOLTZMANN * cfg.noise_temp * cfg.bw) * (SPEED_OF_LIGHT / (4.0 * PI * cfg.fc)).powi(2) * distance.powf(-cfg.rho)
}

/// Raw link budget. Every satellite link uses the altitude as its distance.
pub fn link_budget(cfg: &SystemConfig, placement: &UserPlacement) -> LinkBudget {
    let alpha = satellite_gain(cfg, cfg.d0_sat);
    LinkBudget {
        alpha_sat: vec![alpha; placement.sat_users.len()],
        alpha_terrestrial: placement
            .terrestrial_users
            .iter()
            .map(|t| if t.sat_aod.is_some() { alpha } else { 0.0 })
            .collect(),
        beta: placement
            .terrestrial_users
            .iter()
            .map(|t| terrestrial_gain(cfg, t.bs_distance))
            .collect(),
    }
}

impl LinkBudget {
    /// Applies the configured [`GainNormalization`].
    pub fn normalized(&self, cfg: &SystemConfig) -> LinkBudget {
        match cfg.gain_normalization {
            GainNormalization::Absolute => self.clone(),
            GainNormalization::Reference => {
                let a0 = satellite_gain(cfg, cfg.d0_sat);
                let edge = cfg.bs_coverage_radius.hypot(cfg.bs_height);
                let b0 = terrestrial_gain(cfg, edge);
                LinkBudget {
                    alpha_sat: self.alpha_sat.iter().map(|a| a / a0).collect(),
                    alpha_terrestrial: self.alpha_terrestrial.iter().map(|a| a / a0).collect(),
                    beta: self.beta.iter().map(|b| b / b0).collect(),
                }
            }
        }
    }
}
