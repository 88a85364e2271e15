//! Stacked precoders, quadratic-form matrices and rate evaluation.
//!
//! The satellite vector is `f̄ = [f_c; f_p1; …; f_pKs]` and the BS vector is
//! `v̄ = [v_1; …; v_Kt]`. Every rate is a log-ratio of Hermitian quadratic
//! forms in one or both of them. TU-side quantities of the common stream are
//! expressed relative to the satellite power `Ps`, private TU quantities
//! relative to the BS power `Pt`.

use crate::channel::{ChannelRealization, CsitEstimate};
use crate::error::{Error, Result};
use crate::linalg::{outer, BlockDiag, CMat, CVec};
use crate::scenario::{SystemConfig, NOISE_POWER};

/// Tolerance on `‖f̄‖ = ‖v̄‖ = 1`.
pub const NORM_TOL: f64 = 1e-9;
/// Floor applied to quadratic forms before taking logarithms.
pub const FORM_FLOOR: f64 = 1e-30;

/// `log2(num / den)` with both sides floored at [`FORM_FLOOR`].
pub fn log2_ratio(num: f64, den: f64) -> f64 {
    (num.max(FORM_FLOOR) / den.max(FORM_FLOOR)).log2()
}

/// Unit-norm stacked precoders of the satellite and the BS.
#[derive(Clone, Debug, PartialEq)]
pub struct StackedPrecoders {
    pub f: CVec,
    pub v: CVec,
    pub m: usize,
    pub n: usize,
}

fn check_unit(x: &CVec) -> Result<()> {
    if x.is_empty() {
        return Ok(());
    }
    let norm = x.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotUnitNorm { norm });
    }
    Ok(())
}

impl StackedPrecoders {
    pub fn new(f: CVec, v: CVec, m: usize, n: usize) -> Result<Self> {
        if m == 0 || !f.len().is_multiple_of(m) || (n > 0 && !v.len().is_multiple_of(n)) {
            return Err(Error::Dimension(format!(
                "stacked lengths {} / {} incompatible with M = {m}, N = {n}",
                f.len(),
                v.len()
            )));
        }
        check_unit(&f)?;
        check_unit(&v)?;
        Ok(Self { f, v, m, n })
    }

    /// Stacks the columns of `F` (common stream first) and `V`, normalising each
    /// to unit norm. Returns the precoders and the two Frobenius norms removed.
    pub fn stack(f: &CMat, v: &CMat) -> Result<(Self, f64, f64)> {
        let sf = f.norm();
        if sf == 0.0 || !sf.is_finite() {
            return Err(Error::ZeroPrecoder);
        }
        let sv = v.norm();
        if v.ncols() > 0 && (sv == 0.0 || !sv.is_finite()) {
            return Err(Error::ZeroPrecoder);
        }
        let fv = CVec::from_column_slice(f.as_slice()).unscale(sf);
        let vv = if v.ncols() > 0 {
            CVec::from_column_slice(v.as_slice()).unscale(sv)
        } else {
            CVec::zeros(0)
        };
        Ok((
            Self {
                f: fv,
                v: vv,
                m: f.nrows(),
                n: v.nrows(),
            },
            sf,
            sv,
        ))
    }

    /// `(F, V)` with one column per stream.
    pub fn unstack(&self) -> (CMat, CMat) {
        let f = CMat::from_column_slice(self.m, self.f.len() / self.m, self.f.as_slice());
        let cols = self.v.len().checked_div(self.n).unwrap_or(0);
        let v = CMat::from_column_slice(self.n, cols, self.v.as_slice());
        (f, v)
    }

    pub fn common(&self) -> CVec {
        self.f.rows(0, self.m).into_owned()
    }

    pub fn private(&self, u: usize) -> CVec {
        self.f.rows((u + 1) * self.m, self.m).into_owned()
    }

    pub fn bs(&self, k: usize) -> CVec {
        self.v.rows(k * self.n, self.n).into_owned()
    }
}

/// `[false, true, …, true]`: private blocks of the satellite vector.
pub fn private_mask(ks: usize) -> Vec<bool> {
    (0..=ks).map(|b| b > 0).collect()
}

/// Forms of one satellite user.
#[derive(Clone, Debug)]
pub struct SatUserForms {
    pub s_common: BlockDiag,
    pub u_common: BlockDiag,
    pub s_private: BlockDiag,
    pub u_private: BlockDiag,
}

/// Satellite-side forms of one interfered terrestrial user.
#[derive(Clone, Debug)]
pub struct InterferedForms {
    pub user: usize,
    pub s_common: BlockDiag,
    pub c_common: BlockDiag,
}

/// Everything the satellite needs; built from satellite-side CSIT only.
#[derive(Clone, Debug)]
pub struct SatelliteForms {
    pub m: usize,
    pub ks: usize,
    pub sat_users: Vec<SatUserForms>,
    pub interfered: Vec<InterferedForms>,
    /// Private-stream leakage into every terrestrial user, in BS power units.
    pub leakage: Vec<BlockDiag>,
}

/// Forms of one terrestrial user on the BS side.
#[derive(Clone, Debug)]
pub struct BsUserForms {
    pub s_private: BlockDiag,
    pub u_private: BlockDiag,
    /// BS interference at the common stream, in satellite power units.
    /// Present only for interfered users.
    pub u_common: Option<BlockDiag>,
}

/// Everything the BS needs; built from BS-side CSIT only.
#[derive(Clone, Debug)]
pub struct BsForms {
    pub n: usize,
    pub kt: usize,
    pub users: Vec<BsUserForms>,
}

#[derive(Clone, Debug)]
pub struct QuadraticFormSet {
    pub sat: SatelliteForms,
    pub bs: BsForms,
}

fn check_csit(csit: &CsitEstimate, cfg: &SystemConfig) -> Result<()> {
    let ok = csit.m() == cfg.m()
        && csit.n() == cfg.n()
        && csit.z_hat.nrows() == cfg.m()
        && csit.z_hat.ncols() == csit.kt()
        && csit.psi.len() == csit.ks()
        && csit.phi_sat.len() == csit.kt()
        && csit.phi_bs.len() == csit.kt();
    if ok {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "CSIT is {}x{} / {}x{} but config has M = {}, N = {}",
            csit.m(),
            csit.ks(),
            csit.n(),
            csit.kt(),
            cfg.m(),
            cfg.n()
        )))
    }
}

/// Satellite-side forms from `Ĝ`, `Ẑ`, `Ψ`, `Φ_sat`.
pub fn satellite_forms(csit: &CsitEstimate, cfg: &SystemConfig) -> Result<SatelliteForms> {
    check_csit(csit, cfg)?;
    let (m, ks, kt) = (csit.m(), csit.ks(), csit.kt());
    let blocks = ks + 1;
    let noise = NOISE_POWER / cfg.ps();
    let ratio = cfg.power_ratio;
    let pmask = private_mask(ks);

    let sat_users = (0..ks)
        .map(|u| {
            let g = csit.g_hat.column(u).into_owned();
            let gg = outer(&g);
            let full = &gg + &csit.psi[u];
            let s_common = BlockDiag::single(blocks, 0, &gg);
            let mut u_common = BlockDiag::repeated(blocks, &full);
            u_common.add_identity(noise);
            u_common.axpy(-1.0, &s_common);
            let s_private = BlockDiag::single(blocks, u + 1, &gg);
            let mut u_private = BlockDiag::masked(&pmask, &full);
            u_private.add_identity(noise);
            u_private.axpy(-1.0, &s_private);
            SatUserForms {
                s_common,
                u_common,
                s_private,
                u_private,
            }
        })
        .collect();

    let interfered = csit
        .interfered
        .iter()
        .map(|&k| {
            let z = csit.z_hat.column(k).into_owned();
            let zz = outer(&z);
            let s_common = BlockDiag::single(blocks, 0, &zz);
            let mut c_common = BlockDiag::repeated(blocks, &(&zz + &csit.phi_sat[k]));
            c_common.axpy(-1.0, &s_common);
            InterferedForms {
                user: k,
                s_common,
                c_common,
            }
        })
        .collect();

    let leakage = (0..kt)
        .map(|k| {
            let z = csit.z_hat.column(k).into_owned();
            let x = (outer(&z) + &csit.phi_sat[k]) * crate::linalg::C64::from(ratio);
            BlockDiag::masked(&pmask, &x)
        })
        .collect();

    Ok(SatelliteForms {
        m,
        ks,
        sat_users,
        interfered,
        leakage,
    })
}

/// BS-side forms from `Ĥ` and `Φ_bs`.
pub fn bs_forms(csit: &CsitEstimate, cfg: &SystemConfig) -> Result<BsForms> {
    check_csit(csit, cfg)?;
    let (n, kt) = (csit.n(), csit.kt());
    let noise_t = NOISE_POWER / cfg.pt();
    let noise_s = NOISE_POWER / cfg.ps();
    let users = (0..kt)
        .map(|k| {
            let h = csit.h_hat.column(k).into_owned();
            let hh = outer(&h);
            let full = &hh + &csit.phi_bs[k];
            let s_private = BlockDiag::single(kt, k, &hh);
            let mut u_private = BlockDiag::repeated(kt, &full);
            u_private.add_identity(noise_t);
            u_private.axpy(-1.0, &s_private);
            let u_common = csit.interfered.contains(&k).then(|| {
                let mut u = BlockDiag::repeated(kt, &(full.clone() / crate::linalg::C64::from(cfg.power_ratio)));
                u.add_identity(noise_s);
                u
            });
            BsUserForms {
                s_private,
                u_private,
                u_common,
            }
        })
        .collect();
    Ok(BsForms { n, kt, users })
}

pub fn build_quadratic_forms(csit: &CsitEstimate, cfg: &SystemConfig) -> Result<QuadraticFormSet> {
    Ok(QuadraticFormSet {
        sat: satellite_forms(csit, cfg)?,
        bs: bs_forms(csit, cfg)?,
    })
}

/// Per-stream spectral efficiencies (bits/s/Hz).
#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    /// Common-stream rate, the minimum over every user decoding it.
    pub r_c: f64,
    /// Common-stream rate achievable at each satellite user.
    pub common_su: Vec<f64>,
    /// Common-stream rate at each interfered terrestrial user, in the order of
    /// `interfered`.
    pub common_tu: Vec<f64>,
    pub interfered: Vec<usize>,
    pub r_p_su: Vec<f64>,
    pub r_p_tu: Vec<f64>,
    pub sum: f64,
}

impl RateReport {
    fn assemble(
        common_su: Vec<f64>,
        common_tu: Vec<f64>,
        interfered: Vec<usize>,
        r_p_su: Vec<f64>,
        r_p_tu: Vec<f64>,
    ) -> Self {
        let r_c = common_su
            .iter()
            .chain(&common_tu)
            .copied()
            .reduce(f64::min)
            .unwrap_or(0.0);
        let sum = r_c + r_p_su.iter().sum::<f64>() + r_p_tu.iter().sum::<f64>();
        Self {
            r_c,
            common_su,
            common_tu,
            interfered,
            r_p_su,
            r_p_tu,
            sum,
        }
    }

    /// Rate of every user, satellite users first. The common rate is split
    /// equally among satellite users.
    pub fn per_user(&self) -> Vec<f64> {
        let ks = self.r_p_su.len();
        let share = if ks > 0 { self.r_c / ks as f64 } else { 0.0 };
        self.r_p_su
            .iter()
            .map(|r| r + share)
            .chain(self.r_p_tu.iter().copied())
            .collect()
    }
}

/// Jensen lower bounds evaluated through the quadratic forms.
pub fn lower_bound_rates(forms: &QuadraticFormSet, p: &StackedPrecoders) -> Result<RateReport> {
    check_unit(&p.f)?;
    check_unit(&p.v)?;
    let (f, v) = (&p.f, &p.v);
    let sat = &forms.sat;
    let bs = &forms.bs;

    let common_su = sat
        .sat_users
        .iter()
        .map(|s| {
            let u = s.u_common.quad(f);
            log2_ratio(u + s.s_common.quad(f), u).max(0.0)
        })
        .collect();
    let common_tu = sat
        .interfered
        .iter()
        .map(|t| {
            let iui = bs.users[t.user].u_common.as_ref().map(|u| u.quad(v)).unwrap_or(0.0);
            let c = t.c_common.quad(f);
            log2_ratio(iui + t.s_common.quad(f) + c, iui + c).max(0.0)
        })
        .collect();
    let r_p_su = sat
        .sat_users
        .iter()
        .map(|s| {
            let u = s.u_private.quad(f);
            log2_ratio(u + s.s_private.quad(f), u).max(0.0)
        })
        .collect();
    let r_p_tu = bs
        .users
        .iter()
        .zip(&sat.leakage)
        .map(|(b, leak)| {
            let u = b.u_private.quad(v) + leak.quad(f);
            log2_ratio(u + b.s_private.quad(v), u).max(0.0)
        })
        .collect();
    let interfered = sat.interfered.iter().map(|t| t.user).collect();
    Ok(RateReport::assemble(common_su, common_tu, interfered, r_p_su, r_p_tu))
}

fn abs2(a: &CVec, b: impl Iterator<Item = crate::linalg::C64> + Clone) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.conj() * y)
        .sum::<crate::linalg::C64>()
        .norm_sqr()
}

/// Instantaneous rates on the true channels.
///
/// With `rs` set, `F` has `Ks + 1` columns with the common precoder first;
/// otherwise it has `Ks` private columns and the common rate is zero.
/// Terrestrial users with a non-zero column in `Z` take part in common-stream
/// decoding.
pub fn true_instantaneous_rates(
    real: &ChannelRealization,
    f: &CMat,
    v: &CMat,
    cfg: &SystemConfig,
    rs: bool,
) -> Result<RateReport> {
    let ks = real.g.ncols();
    let kt = real.h.ncols();
    let offset = usize::from(rs);
    if f.ncols() != ks + offset || v.ncols() != kt || f.nrows() != real.g.nrows() || v.nrows() != real.h.nrows() {
        return Err(Error::Dimension(format!(
            "precoders {}x{} / {}x{} do not match channels",
            f.nrows(),
            f.ncols(),
            v.nrows(),
            v.ncols()
        )));
    }
    for m in [f, v] {
        let trace = m.norm_squared();
        if trace > 1.0 + 1e-9 {
            return Err(Error::PowerViolation { trace });
        }
    }
    let (ps, pt, noise) = (cfg.ps(), cfg.pt(), NOISE_POWER);
    let col = |m: &CMat, j: usize| m.column(j).into_owned();
    let gain = |ch: &CVec, m: &CMat, j: usize| abs2(ch, m.column(j).iter().copied());

    let g: Vec<CVec> = (0..ks).map(|u| col(&real.g, u)).collect();
    let z: Vec<CVec> = (0..kt).map(|k| col(&real.z, k)).collect();
    let h: Vec<CVec> = (0..kt).map(|k| col(&real.h, k)).collect();
    let interfered: Vec<usize> = (0..kt).filter(|&k| z[k].iter().any(|x| x.norm() > 0.0)).collect();

    let sat_private = |ch: &CVec| -> Vec<f64> { (0..ks).map(|i| gain(ch, f, i + offset)).collect() };
    let bs_power = |ch: &CVec| -> Vec<f64> { (0..kt).map(|j| gain(ch, v, j)).collect() };

    let mut common_su = Vec::new();
    let mut r_p_su = Vec::with_capacity(ks);
    for (u, gu) in g.iter().enumerate() {
        let p = sat_private(gu);
        let total: f64 = p.iter().sum();
        if rs {
            let sig = ps * gain(gu, f, 0);
            common_su.push((1.0 + sig / (ps * total + noise)).log2());
        }
        let sig = ps * p[u];
        r_p_su.push((1.0 + sig / (ps * (total - p[u]) + noise)).log2());
    }

    let mut common_tu = Vec::new();
    let mut r_p_tu = Vec::with_capacity(kt);
    for k in 0..kt {
        let b = bs_power(&h[k]);
        let b_total: f64 = b.iter().sum();
        let leak: f64 = sat_private(&z[k]).iter().sum();
        if rs && interfered.contains(&k) {
            let sig = ps * gain(&z[k], f, 0);
            common_tu.push((1.0 + sig / (pt * b_total + ps * leak + noise)).log2());
        }
        let sig = pt * b[k];
        r_p_tu.push((1.0 + sig / (pt * (b_total - b[k]) + ps * leak + noise)).log2());
    }
    let interfered = if rs { interfered } else { Vec::new() };
    Ok(RateReport::assemble(common_su, common_tu, interfered, r_p_su, r_p_tu))
}
