//! Channel synthesis and linear-MMSE CSIT estimation.
//!
//! Satellite links are Rician along a single line-of-sight direction, so both
//! `G` and `Z` have rank-one covariances. Terrestrial links are a sum of `Lt`
//! Rayleigh-faded NLoS paths.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{complex_normal, hermitize, outer, CMat, CVec, C64};
use crate::scenario::{LinkBudget, SystemConfig, UserPlacement, NOISE_POWER};

fn centred_phases(n: usize, spacing: f64, direction: f64) -> CVec {
    let centre = (n as f64 - 1.0) / 2.0;
    CVec::from_fn(n, |m, _| {
        C64::from_polar(1.0, 2.0 * PI * (m as f64 - centre) * spacing * direction)
    })
}

/// Uniform planar array response `a_h(θ, φ) ⊗ a_v(θ)` with element spacings in
/// wavelengths. Phases are centred on the middle of each axis.
pub fn upa_response(theta: f64, phi: f64, d1: f64, d2: f64, n1: usize, n2: usize) -> CVec {
    let horizontal = centred_phases(n1, d1, theta.sin() * phi.cos());
    let vertical = centred_phases(n2, d2, theta.cos());
    horizontal.kronecker(&vertical)
}

/// Long-term spatial covariances and the steering vectors behind them.
#[derive(Clone, Debug)]
pub struct CovarianceSet {
    /// Per satellite user, `α_u a_u a_uᴴ`.
    pub q_sat: Vec<CMat>,
    /// Per terrestrial user, `α_k a_k a_kᴴ`; zero outside the satellite beam.
    pub r_sat: Vec<CMat>,
    /// Per terrestrial user, `(β_k/Lt) Σ_l a_{k,l} a_{k,l}ᴴ`.
    pub r_bs: Vec<CMat>,
    pub sat_steering: Vec<CVec>,
    pub tu_sat_steering: Vec<Option<CVec>>,
    pub bs_steering: Vec<Vec<CVec>>,
    pub gains: LinkBudget,
}

impl CovarianceSet {
    pub fn m(&self) -> usize {
        self.sat_steering
            .first()
            .map(|a| a.len())
            .or_else(|| self.r_sat.first().map(|r| r.nrows()))
            .unwrap_or(0)
    }

    pub fn ks(&self) -> usize {
        self.q_sat.len()
    }

    pub fn kt(&self) -> usize {
        self.r_bs.len()
    }

    pub fn interfered(&self) -> Vec<usize> {
        self.tu_sat_steering
            .iter()
            .enumerate()
            .filter_map(|(k, a)| a.as_ref().map(|_| k))
            .collect()
    }
}

/// Builds the covariances from the placement and (already normalised) gains.
pub fn spatial_covariances(cfg: &SystemConfig, placement: &UserPlacement, gains: &LinkBudget) -> CovarianceSet {
    let (m1, m2, n1, n2) = (cfg.m1, cfg.m2, cfg.n1, cfg.n2);
    let sat = |theta, phi| upa_response(theta, phi, cfg.d1_sat, cfg.d2_sat, m1, m2);

    let sat_steering: Vec<CVec> = placement.sat_users.iter().map(|u| sat(u.theta, u.phi)).collect();
    let q_sat = sat_steering
        .iter()
        .zip(&gains.alpha_sat)
        .map(|(a, &alpha)| outer(a) * C64::from(alpha))
        .collect();

    let tu_sat_steering: Vec<Option<CVec>> = placement
        .terrestrial_users
        .iter()
        .map(|t| t.sat_aod.map(|(theta, phi)| sat(theta, phi)))
        .collect();
    let m = m1 * m2;
    let r_sat = tu_sat_steering
        .iter()
        .zip(&gains.alpha_terrestrial)
        .map(|(a, &alpha)| match a {
            Some(a) => outer(a) * C64::from(alpha),
            None => CMat::zeros(m, m),
        })
        .collect();

    let bs_steering: Vec<Vec<CVec>> = placement
        .terrestrial_users
        .iter()
        .map(|t| {
            t.paths
                .iter()
                .map(|&(theta, phi)| upa_response(theta, phi, cfg.d1_bs, cfg.d2_bs, n1, n2))
                .collect()
        })
        .collect();
    let n = n1 * n2;
    let r_bs = bs_steering
        .iter()
        .zip(&gains.beta)
        .map(|(paths, &beta)| {
            let mut r = CMat::zeros(n, n);
            for a in paths {
                r += outer(a);
            }
            r * C64::from(beta / paths.len().max(1) as f64)
        })
        .collect();

    CovarianceSet {
        q_sat,
        r_sat,
        r_bs,
        sat_steering,
        tu_sat_steering,
        bs_steering,
        gains: gains.clone(),
    }
}

/// True channels of one coherence block.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    /// `M × Ks`, satellite to satellite users.
    pub g: CMat,
    /// `M × Kt`, satellite to terrestrial users.
    pub z: CMat,
    /// `N × Kt`, BS to terrestrial users.
    pub h: CMat,
}

fn rician_gain<R: Rng + ?Sized>(rng: &mut R, alpha: f64, kappa: f64) -> C64 {
    if kappa.is_infinite() {
        return C64::new(alpha.sqrt(), 0.0);
    }
    let mean = (kappa * alpha / (1.0 + kappa)).sqrt();
    C64::new(mean, 0.0) + complex_normal(rng, alpha / (1.0 + kappa))
}

/// Draws one block of small-scale fading on top of the long-term geometry.
pub fn draw_channels<R: Rng + ?Sized>(cfg: &SystemConfig, covs: &CovarianceSet, rng: &mut R) -> ChannelRealization {
    let m = cfg.m();
    let n = cfg.n();
    let (ks, kt) = (covs.ks(), covs.kt());

    let mut g = CMat::zeros(m, ks);
    for (u, a) in covs.sat_steering.iter().enumerate() {
        let gain = rician_gain(rng, covs.gains.alpha_sat[u], cfg.kappa_s);
        g.set_column(u, &(a * gain));
    }

    let mut z = CMat::zeros(m, kt);
    for (k, a) in covs.tu_sat_steering.iter().enumerate() {
        if let Some(a) = a {
            let gain = rician_gain(rng, covs.gains.alpha_terrestrial[k], cfg.kappa_s);
            z.set_column(k, &(a * gain));
        }
    }

    let mut h = CMat::zeros(n, kt);
    for (k, paths) in covs.bs_steering.iter().enumerate() {
        let beta = covs.gains.beta[k];
        let mut col = CVec::zeros(n);
        for a in paths {
            col += a * complex_normal(rng, beta);
        }
        h.set_column(k, &(col / C64::from((paths.len().max(1) as f64).sqrt())));
    }

    ChannelRealization { g, z, h }
}

/// Channel estimates and error covariances for one block.
#[derive(Clone, Debug, PartialEq)]
pub struct CsitEstimate {
    pub g_hat: CMat,
    pub z_hat: CMat,
    pub h_hat: CMat,
    /// Error covariance of each satellite-user estimate.
    pub psi: Vec<CMat>,
    /// Error covariance of each satellite-to-TU estimate.
    pub phi_sat: Vec<CMat>,
    /// Error covariance of each BS-to-TU estimate.
    pub phi_bs: Vec<CMat>,
    /// Users whose satellite channel is non-zero.
    pub interfered: Vec<usize>,
}

impl CsitEstimate {
    pub fn m(&self) -> usize {
        self.g_hat.nrows()
    }
    pub fn n(&self) -> usize {
        self.h_hat.nrows()
    }
    pub fn ks(&self) -> usize {
        self.g_hat.ncols()
    }
    pub fn kt(&self) -> usize {
        self.h_hat.ncols()
    }

    /// Perfect knowledge of the given channels.
    pub fn perfect(real: &ChannelRealization, interfered: Vec<usize>) -> Self {
        let m = real.g.nrows();
        let n = real.h.nrows();
        Self {
            g_hat: real.g.clone(),
            z_hat: real.z.clone(),
            h_hat: real.h.clone(),
            psi: vec![CMat::zeros(m, m); real.g.ncols()],
            phi_sat: vec![CMat::zeros(m, m); real.z.ncols()],
            phi_bs: vec![CMat::zeros(n, n); real.h.ncols()],
            interfered,
        }
    }
}

/// LMMSE filter for one channel vector observed as `y = x + w`.
#[derive(Clone, Debug)]
pub enum Lmmse {
    /// Noise-free pilots.
    Exact,
    /// No pilot energy: estimate zero, error equals the prior.
    Blind {
        error: CMat,
    },
    Filter {
        gain: CMat,
        error: CMat,
        noise_var: f64,
    },
}

impl Lmmse {
    pub fn new(cov: &CMat, tau_p: f64) -> Self {
        if tau_p.is_infinite() {
            return Lmmse::Exact;
        }
        if tau_p == 0.0 {
            return Lmmse::Blind { error: cov.clone() };
        }
        let noise_var = NOISE_POWER / tau_p;
        let mut reg = cov.clone();
        for i in 0..reg.nrows() {
            reg[(i, i)] += C64::from(noise_var);
        }
        let chol = reg
            .cholesky()
            .expect("covariance plus positive noise is positive definite");
        // R (R + sI)⁻¹ = ((R + sI)⁻¹ R)ᴴ for Hermitian R.
        let gain = chol.solve(cov).adjoint();
        let mut error = cov - &gain * cov;
        hermitize(&mut error);
        Lmmse::Filter { gain, error, noise_var }
    }

    pub fn error_covariance(&self, dim: usize) -> CMat {
        match self {
            Lmmse::Exact => CMat::zeros(dim, dim),
            Lmmse::Blind { error } | Lmmse::Filter { error, .. } => error.clone(),
        }
    }

    /// Synthesises the pilot observation and returns the estimate.
    pub fn estimate<R: Rng + ?Sized>(&self, x: &CVec, rng: &mut R) -> CVec {
        match self {
            Lmmse::Exact => x.clone(),
            Lmmse::Blind { .. } => CVec::zeros(x.len()),
            Lmmse::Filter { gain, noise_var, .. } => {
                let y = CVec::from_fn(x.len(), |i, _| x[i] + complex_normal(rng, *noise_var));
                gain * y
            }
        }
    }
}

/// Per-user LMMSE filters, computed once per placement.
#[derive(Clone, Debug)]
pub struct Estimator {
    sat: Vec<Lmmse>,
    tu_sat: Vec<Lmmse>,
    bs: Vec<Lmmse>,
    interfered: Vec<usize>,
    m: usize,
    n: usize,
}

impl Estimator {
    pub fn new(covs: &CovarianceSet, tau_p: f64) -> Self {
        Self {
            sat: covs.q_sat.iter().map(|q| Lmmse::new(q, tau_p)).collect(),
            tu_sat: covs.r_sat.iter().map(|r| Lmmse::new(r, tau_p)).collect(),
            bs: covs.r_bs.iter().map(|r| Lmmse::new(r, tau_p)).collect(),
            interfered: covs.interfered(),
            m: covs.r_sat.first().map(|r| r.nrows()).unwrap_or(covs.m()),
            n: covs.r_bs.first().map(|r| r.nrows()).unwrap_or(0),
        }
    }

    pub fn estimate<R: Rng + ?Sized>(&self, real: &ChannelRealization, rng: &mut R) -> CsitEstimate {
        let est = |filters: &[Lmmse], x: &CMat, rng: &mut R| {
            let mut out = CMat::zeros(x.nrows(), x.ncols());
            for (j, f) in filters.iter().enumerate() {
                out.set_column(j, &f.estimate(&x.column(j).into_owned(), rng));
            }
            out
        };
        let g_hat = est(&self.sat, &real.g, rng);
        let z_hat = est(&self.tu_sat, &real.z, rng);
        let h_hat = est(&self.bs, &real.h, rng);
        CsitEstimate {
            g_hat,
            z_hat,
            h_hat,
            psi: self.sat.iter().map(|f| f.error_covariance(self.m)).collect(),
            phi_sat: self.tu_sat.iter().map(|f| f.error_covariance(self.m)).collect(),
            phi_bs: self.bs.iter().map(|f| f.error_covariance(self.n)).collect(),
            interfered: self.interfered.clone(),
        }
    }
}

/// One-shot estimate; prefer [`Estimator`] when estimating many blocks.
pub fn mmse_estimate<R: Rng + ?Sized>(
    real: &ChannelRealization,
    covs: &CovarianceSet,
    cfg: &SystemConfig,
    rng: &mut R,
) -> CsitEstimate {
    Estimator::new(covs, cfg.tau_p).estimate(real, rng)
}

/// Row-major text dump, one row per line, entries like `0.5-1.25j`.
pub fn format_complex_matrix(m: &CMat) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            if c > 0 {
                out.push(' ');
            }
            let sign = if z.im.is_sign_negative() { '-' } else { '+' };
            let _ = write!(out, "{}{}{}j", z.re, sign, z.im.abs());
        }
        out.push('\n');
    }
    out
}

fn parse_complex(token: &str) -> Option<C64> {
    let body = token.strip_suffix('j')?;
    // The imaginary sign is the last '+' or '-' not following an exponent marker.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'))?;
    let re = body[..split].parse().ok()?;
    let im = body[split..].parse().ok()?;
    Some(C64::new(re, im))
}

/// Inverse of [`format_complex_matrix`].
pub fn parse_complex_matrix(text: &str) -> Result<CMat> {
    let rows: Vec<Vec<C64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split_whitespace()
                .map(|t| parse_complex(t).ok_or_else(|| Error::Dimension(format!("bad complex token {t:?}"))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension("ragged complex matrix".into()));
    }
    Ok(CMat::from_fn(rows.len(), ncols, |r, c| rows[r][c]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{link_budget, place_users};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(cfg: &SystemConfig, seed: u64) -> CovarianceSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = place_users(cfg, &mut rng);
        let lb = link_budget(cfg, &p).normalized(cfg);
        spatial_covariances(cfg, &p, &lb)
    }

    #[test]
    fn upa_zero_angle() {
        let a = upa_response(0.0, 1.3, 1.0, 0.5, 3, 4);
        // a_h all ones, so each vertical pattern repeats.
        for m in 0..3 {
            for n in 0..4 {
                let expect = C64::from_polar(1.0, 2.0 * PI * 0.5 * (n as f64 - 1.5));
                assert!((a[m * 4 + n] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn upa_half_wavelength_broadside() {
        let a = upa_response(PI / 2.0, 0.0, 0.5, 0.5, 3, 1);
        let expect = [-1.0, 1.0, -1.0];
        for (z, e) in a.iter().zip(expect) {
            assert!((z - C64::from(e)).norm() < 1e-12);
        }
    }

    #[test]
    fn covariance_traces_and_ranks() {
        let cfg = SystemConfig {
            lt: 1,
            ..SystemConfig::default()
        };
        let covs = setup(&cfg, 2);
        let m = cfg.m() as f64;
        for (q, a) in covs.q_sat.iter().zip(&covs.gains.alpha_sat) {
            assert!((q.trace().re - m * a).abs() < 1e-9 * m * a);
            let (vals, _) = crate::linalg::hermitian_eigen(q);
            assert!(vals[1].abs() < 1e-9 * vals[0]);
        }
        for r in &covs.r_bs {
            let (vals, _) = crate::linalg::hermitian_eigen(r);
            assert!(vals[1].abs() < 1e-9 * vals[0]);
        }
    }

    #[test]
    fn infinite_kappa_is_deterministic() {
        let cfg = SystemConfig {
            kappa_s: f64::INFINITY,
            ..SystemConfig::default()
        };
        let covs = setup(&cfg, 4);
        let a = draw_channels(&cfg, &covs, &mut ChaCha8Rng::seed_from_u64(1));
        let b = draw_channels(&cfg, &covs, &mut ChaCha8Rng::seed_from_u64(2));
        assert_eq!(a.g, b.g);
        let expect = &covs.sat_steering[0] * C64::from(covs.gains.alpha_sat[0].sqrt());
        assert!((a.g.column(0) - expect).norm() < 1e-12);
    }

    #[test]
    fn non_interfered_columns_are_zero() {
        let cfg = SystemConfig::default();
        let covs = setup(&cfg, 5);
        let real = draw_channels(&cfg, &covs, &mut ChaCha8Rng::seed_from_u64(3));
        for k in 0..cfg.kt {
            let zero = real.z.column(k).iter().all(|z| *z == C64::new(0.0, 0.0));
            assert_eq!(zero, covs.tu_sat_steering[k].is_none());
        }
    }

    #[test]
    fn perfect_csit_limits() {
        let cfg = SystemConfig {
            tau_p: f64::INFINITY,
            ..SystemConfig::default()
        };
        let covs = setup(&cfg, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let real = draw_channels(&cfg, &covs, &mut rng);
        let est = mmse_estimate(&real, &covs, &cfg, &mut rng);
        assert_eq!(est.h_hat, real.h);
        assert!(est.phi_bs.iter().all(|p| p.camax() == 0.0));
    }

    #[test]
    fn zero_pilot_energy_returns_prior() {
        let cfg = SystemConfig {
            tau_p: 0.0,
            ..SystemConfig::default()
        };
        let covs = setup(&cfg, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let real = draw_channels(&cfg, &covs, &mut rng);
        let est = mmse_estimate(&real, &covs, &cfg, &mut rng);
        assert_eq!(est.h_hat.camax(), 0.0);
        assert_eq!(est.phi_bs[0], covs.r_bs[0]);
    }

    #[test]
    fn error_covariance_below_prior() {
        let cfg = SystemConfig::default();
        for seed in 0..5 {
            let covs = setup(&cfg, seed);
            let est = Estimator::new(&covs, 2.0);
            for (f, r) in est.bs.iter().zip(&covs.r_bs) {
                let diff = r - f.error_covariance(r.nrows());
                assert!(crate::linalg::min_eigenvalue(&diff) > -1e-10);
            }
        }
    }

    #[test]
    fn text_dump_round_trips() {
        let m = CMat::from_fn(2, 3, |r, c| C64::new(r as f64 - 0.5, 1e-20 * c as f64 - 2.0));
        let back = parse_complex_matrix(&format_complex_matrix(&m)).unwrap();
        assert_eq!(m, back);
    }
}
