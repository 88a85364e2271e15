//! Two-stage generalized power iteration.
//!
//! Each stage maximises a sum of log-ratios of quadratic forms on the unit
//! sphere. Its stationarity condition has the form `A(x) x = λ B(x) x`, so the
//! iteration `x ← B(x)⁻¹A(x)x / ‖·‖` is run until the iterate stops moving.
//!
//! Satellite stage, with softmax weights `w_i` over every common-stream term:
//!
//! ```text
//! A = Σ_i w_i X_i/(f̄ᴴX_i f̄) + Σ_u (S+U)_pu/(f̄ᴴ(S+U)_pu f̄) + n_leak·I
//! B = Σ_i w_i Y_i/(f̄ᴴY_i f̄) + Σ_u U_pu/(f̄ᴴU_pu f̄) + Σ_j C̃_j/(f̄ᴴC̃_j f̄)
//! ```
//!
//! The `n_leak·I` term comes from measuring each leakage factor relative to
//! `‖f̄‖²`, which leaves the objective unchanged on the sphere and makes
//! `(A − B)f̄` its exact tangent gradient (times `ln 2`).
//!
//! BS stage: `C = Σ_k S_pk/(v̄ᴴS_pk v̄)`, `D = Σ_k U_pk/(v̄ᴴU_pk v̄)`.

use serde::Serialize;

use crate::channel::CsitEstimate;
use crate::decouple::{active_leakage, gamma_private_su, gamma_private_tu, ReportValues};
use crate::error::{Error, Result};
use crate::linalg::{align_phase, normalized, outer, principal_eigvec, BlockDiag, CMat, CVec, C64};
use crate::rates::{log2_ratio, BsForms, QuadraticFormSet, SatelliteForms, StackedPrecoders};
use crate::scenario::SystemConfig;

/// Solver parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct GpiSettings {
    /// Initial smoothing of the soft minimum.
    pub mu: f64,
    pub zeta: f64,
    /// Iteration cap of each stage.
    pub inner_max: usize,
    /// Global iteration bound; each stage runs at most `min(inner_max, t_max)`.
    pub t_max: usize,
    pub mu_factor: f64,
    pub mu_trigger: usize,
    pub mu_min: f64,
    pub mu_max: f64,
}

impl From<&SystemConfig> for GpiSettings {
    fn from(cfg: &SystemConfig) -> Self {
        Self {
            mu: cfg.mu0,
            zeta: cfg.zeta,
            inner_max: cfg.inner_max,
            t_max: cfg.t_max,
            mu_factor: cfg.mu_factor,
            mu_trigger: cfg.mu_trigger,
            mu_min: cfg.mu_min,
            mu_max: cfg.mu_max,
        }
    }
}

impl Default for GpiSettings {
    fn default() -> Self {
        Self::from(&SystemConfig::default())
    }
}

impl GpiSettings {
    fn cap(&self) -> usize {
        self.inner_max.min(self.t_max).max(1)
    }
}

/// `−μ·ln(mean(exp(−x/μ)))`, a smooth lower-biased minimum.
pub fn lse_soft_min(values: &[f64], mu: f64) -> Result<f64> {
    let lo = values
        .iter()
        .copied()
        .reduce(f64::min)
        .ok_or(Error::Empty("soft-min input"))?;
    let k = values.len() as f64;
    let s: f64 = values.iter().map(|x| (-(x - lo) / mu).exp()).sum();
    // The clamp absorbs last-ulp rounding of the logarithm.
    Ok((lo - mu * (s / k).ln()).clamp(lo, lo + mu * k.ln()))
}

/// Weights `∂ lse / ∂ x_i`, a softmax of `−x/μ`.
pub fn softmin_weights(values: &[f64], mu: f64) -> Vec<f64> {
    let Some(lo) = values.iter().copied().reduce(f64::min) else {
        return Vec::new();
    };
    let e: Vec<f64> = values.iter().map(|x| (-(x - lo) / mu).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Next smoothing parameter once `stalled` iterations passed without convergence.
pub fn mu_schedule(mu: f64, stalled: usize, settings: &GpiSettings) -> f64 {
    if stalled >= settings.mu_trigger {
        (mu * settings.mu_factor).clamp(settings.mu_min, settings.mu_max)
    } else {
        mu
    }
}

/// Common-stream log-ratios at `f̄`: interfered users first, then satellite users.
fn common_terms(sat: &SatelliteForms, reports: &ReportValues, f: &CVec) -> Vec<(f64, f64)> {
    let nrm = f.norm_squared();
    let mut out = Vec::with_capacity(sat.interfered.len() + sat.ks);
    for t in &sat.interfered {
        let y = t.c_common.quad(f) + reports.omega[t.user] * nrm;
        out.push((y + t.s_common.quad(f), y));
    }
    for s in &sat.sat_users {
        let y = s.u_common.quad(f);
        out.push((y + s.s_common.quad(f), y));
    }
    out
}

/// Satellite objective with the soft minimum (`f_1`).
pub fn sat_objective(sat: &SatelliteForms, reports: &ReportValues, f: &CVec, mu: f64) -> f64 {
    let x: Vec<f64> = common_terms(sat, reports, f)
        .into_iter()
        .map(|(n, d)| log2_ratio(n, d))
        .collect();
    let common = if x.is_empty() {
        0.0
    } else {
        lse_soft_min(&x, mu).unwrap_or(0.0)
    };
    common + gamma_private_su(sat, f, reports).iter().sum::<f64>()
}

/// Satellite objective with the exact minimum; independent of `μ`.
pub fn sat_objective_min(sat: &SatelliteForms, reports: &ReportValues, f: &CVec) -> f64 {
    let common = common_terms(sat, reports, f)
        .into_iter()
        .map(|(n, d)| log2_ratio(n, d))
        .reduce(f64::min)
        .unwrap_or(0.0);
    common + gamma_private_su(sat, f, reports).iter().sum::<f64>()
}

/// BS objective (`f_2`).
pub fn bs_objective(bs: &BsForms, v: &CVec) -> f64 {
    gamma_private_tu(bs, v).iter().sum()
}

fn floored(x: f64) -> f64 {
    x.max(crate::rates::FORM_FLOOR)
}

/// Assembles `(A, B)` at `f̄`.
pub fn assemble_sat_matrices(
    sat: &SatelliteForms,
    reports: &ReportValues,
    f: &CVec,
    mu: f64,
) -> Result<(BlockDiag, BlockDiag)> {
    let blocks = sat.ks + 1;
    let mut a = BlockDiag::zeros(blocks, sat.m);
    let mut b = BlockDiag::zeros(blocks, sat.m);
    let nrm = f.norm_squared();

    let terms = common_terms(sat, reports, f);
    let x: Vec<f64> = terms.iter().map(|&(n, d)| log2_ratio(n, d)).collect();
    let w = softmin_weights(&x, mu);
    let ni = sat.interfered.len();
    for (t, (&(num, den), wi)) in sat.interfered.iter().zip(terms.iter().zip(&w)) {
        let omega = reports.omega[t.user];
        let (ca, cb) = (wi / floored(num), wi / floored(den));
        a.axpy(ca, &t.s_common);
        a.axpy(ca, &t.c_common);
        a.add_identity(ca * omega);
        b.axpy(cb, &t.c_common);
        b.add_identity(cb * omega);
    }
    for (s, (&(num, den), wi)) in sat.sat_users.iter().zip(terms[ni..].iter().zip(&w[ni..])) {
        let (ca, cb) = (wi / floored(num), wi / floored(den));
        a.axpy(ca, &s.s_common);
        a.axpy(ca, &s.u_common);
        b.axpy(cb, &s.u_common);
    }

    for s in &sat.sat_users {
        let u = s.u_private.quad(f);
        let num = u + s.s_private.quad(f);
        let ca = 1.0 / floored(num);
        a.axpy(ca, &s.s_private);
        a.axpy(ca, &s.u_private);
        b.axpy(1.0 / floored(u), &s.u_private);
    }

    if sat.ks > 0 {
        let active = active_leakage(sat, reports);
        let mut n_leak = 0usize;
        for ((c, &e), &on) in sat.leakage.iter().zip(&reports.epsilon).zip(&active) {
            if !on {
                continue;
            }
            n_leak += 1;
            let q = floored(c.quad(f) + e * nrm);
            b.axpy(1.0 / q, c);
            b.add_identity(e / q);
        }
        a.add_identity(n_leak as f64 / nrm);
    }

    a.hermitize();
    b.hermitize();
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::NonFinite("satellite pencil"));
    }
    Ok((a, b))
}

/// Assembles `(C, D)` at `v̄`.
pub fn assemble_bs_matrices(bs: &BsForms, v: &CVec) -> Result<(BlockDiag, BlockDiag)> {
    let mut c = BlockDiag::zeros(bs.kt, bs.n);
    let mut d = BlockDiag::zeros(bs.kt, bs.n);
    for u in &bs.users {
        c.axpy(1.0 / floored(u.s_private.quad(v)), &u.s_private);
        d.axpy(1.0 / floored(u.u_private.quad(v)), &u.u_private);
    }
    c.hermitize();
    d.hermitize();
    if !(c.is_finite() && d.is_finite()) {
        return Err(Error::NonFinite("BS pencil"));
    }
    Ok((c, d))
}

/// `‖y − (xᴴy)x‖/‖y‖` for `y = B⁻¹Ax` and unit `x`.
pub fn pencil_residual(a: &BlockDiag, b: &BlockDiag, x: &CVec) -> f64 {
    let y = b.solve(&a.mul_vec(x));
    let lambda = x.dotc(&y);
    let r = &y - x * lambda;
    let ny = y.norm();
    if ny > 0.0 {
        r.norm() / ny
    } else {
        f64::INFINITY
    }
}

/// KKT residuals of both stages at `p`.
pub fn kkt_residual(
    forms: &QuadraticFormSet,
    reports: &ReportValues,
    p: &StackedPrecoders,
    settings: &GpiSettings,
) -> Result<(f64, f64)> {
    let (a, b) = assemble_sat_matrices(&forms.sat, reports, &p.f, settings.mu)?;
    let res_sat = pencil_residual(&a, &b, &p.f);
    let res_bs = if p.v.is_empty() {
        0.0
    } else {
        let (c, d) = assemble_bs_matrices(&forms.bs, &p.v)?;
        pencil_residual(&c, &d, &p.v)
    };
    Ok((res_sat, res_bs))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StageTag {
    Sat,
    Bs,
}

impl StageTag {
    pub fn as_str(self) -> &'static str {
        match self {
            StageTag::Sat => "sat",
            StageTag::Bs => "bs",
        }
    }
}

/// One iteration. Objective and residual are those of the iterate entering
/// the step; the residual of the other stage is NaN.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub stage: StageTag,
    pub iter: usize,
    pub mu: f64,
    pub displacement: f64,
    pub objective: f64,
    pub res_sat: f64,
    pub res_bs: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct GpiTrace {
    pub records: Vec<TraceRecord>,
    pub sat_converged: bool,
    pub bs_converged: bool,
    pub sat_iterations: usize,
    pub bs_iterations: usize,
    pub final_mu: f64,
    pub final_res_sat: f64,
    pub final_res_bs: f64,
}

impl GpiTrace {
    pub fn converged(&self) -> bool {
        self.sat_converged && self.bs_converged
    }
}

/// Result of one stage.
#[derive(Clone, Debug, PartialEq)]
pub struct StageOutcome {
    pub x: CVec,
    pub converged: bool,
    pub iterations: usize,
    pub final_mu: f64,
    pub records: Vec<TraceRecord>,
}

/// Smallest damping factor applied after the objective drops.
const MIN_STEP: f64 = 1.0 / 64.0;

/// Power iteration shared by both stages. The step towards `B⁻¹Ax` is halved
/// each time the objective decreases at fixed `μ`, which breaks two-cycles;
/// convergence is judged on the undamped displacement. `step(x, mu)` returns `(A, B,
/// objective, score)` where `score` ranks fallback iterates.
fn power_iterate<F>(init: &CVec, settings: &GpiSettings, adapt_mu: bool, tag: StageTag, mut step: F) -> StageOutcome
where
    F: FnMut(&CVec, f64) -> Option<(BlockDiag, BlockDiag, f64, f64)>,
{
    let mut x = normalized(init).unwrap_or_else(|| init.clone());
    let mut mu = settings.mu;
    let mut stalled = 0usize;
    let mut records = Vec::new();
    let mut best: Option<(f64, CVec)> = None;
    let mut iterations = 0usize;
    let mut converged = false;
    let mut step_size: f64 = 1.0;
    let mut previous: Option<(f64, f64)> = None;

    for iter in 1..=settings.cap() {
        let Some((a, b, objective, score)) = step(&x, mu) else {
            break;
        };
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, x.clone()));
        }
        if let Some((prev_obj, prev_mu)) = previous {
            if prev_mu == mu && objective < prev_obj - 1e-12 * prev_obj.abs().max(1.0) {
                step_size = (step_size * 0.5).max(MIN_STEP);
            }
        }
        previous = Some((objective, mu));
        let y = b.solve(&a.mul_vec(&x));
        let lambda = x.dotc(&y);
        let ny = y.norm();
        let residual = if ny > 0.0 {
            (&y - &x * lambda).norm() / ny
        } else {
            f64::INFINITY
        };
        let Some(mut target) = normalized(&y) else { break };
        align_phase(&mut target, &x);
        let displacement = (&target - &x).norm();
        let next = if step_size < 1.0 {
            normalized(&(&x + (&target - &x) * C64::from(step_size))).unwrap_or(target)
        } else {
            target
        };
        let (res_sat, res_bs) = match tag {
            StageTag::Sat => (residual, f64::NAN),
            StageTag::Bs => (f64::NAN, residual),
        };
        records.push(TraceRecord {
            stage: tag,
            iter,
            mu,
            displacement,
            objective,
            res_sat,
            res_bs,
        });
        x = next;
        iterations = iter;
        if displacement < settings.zeta {
            converged = true;
            break;
        }
        if adapt_mu {
            stalled += 1;
            let new_mu = mu_schedule(mu, stalled, settings);
            if stalled >= settings.mu_trigger {
                stalled = 0;
            }
            mu = new_mu;
        }
    }

    if !converged {
        if let Some((_, _, _, score)) = step(&x, mu) {
            if best.as_ref().is_none_or(|(s, _)| score > *s) {
                best = Some((score, x.clone()));
            }
        }
        if let Some((_, bx)) = best {
            x = bx;
        }
    }
    StageOutcome {
        x,
        converged,
        iterations,
        final_mu: mu,
        records,
    }
}

/// Satellite stage: uses only satellite-side forms and the BS report.
pub fn sat_stage(sat: &SatelliteForms, reports: &ReportValues, settings: &GpiSettings, init: &CVec) -> StageOutcome {
    power_iterate(init, settings, true, StageTag::Sat, |f, mu| {
        let (a, b) = assemble_sat_matrices(sat, reports, f, mu).ok()?;
        let obj = sat_objective(sat, reports, f, mu);
        let score = sat_objective_min(sat, reports, f);
        Some((a, b, obj, score))
    })
}

/// BS stage: uses only BS-side forms.
pub fn bs_stage(bs: &BsForms, settings: &GpiSettings, init: &CVec) -> StageOutcome {
    if init.is_empty() {
        return StageOutcome {
            x: init.clone(),
            converged: true,
            iterations: 0,
            final_mu: settings.mu,
            records: Vec::new(),
        };
    }
    power_iterate(init, settings, false, StageTag::Bs, |v, _| {
        let (c, d) = assemble_bs_matrices(bs, v).ok()?;
        let obj = bs_objective(bs, v);
        Some((c, d, obj, obj))
    })
}

/// Runs both stages from `init` and returns the precoders with their trace.
pub fn run_stin_gpi(
    forms: &QuadraticFormSet,
    reports: &ReportValues,
    settings: &GpiSettings,
    init: &StackedPrecoders,
) -> Result<(StackedPrecoders, GpiTrace)> {
    let sat = sat_stage(&forms.sat, reports, settings, &init.f);
    let bs = bs_stage(&forms.bs, settings, &init.v);
    combine_stages(forms, reports, settings, sat, bs)
}

/// Joins two finished stages into precoders and a trace with the final KKT
/// residuals. Satellite rows come first.
pub fn combine_stages(
    forms: &QuadraticFormSet,
    reports: &ReportValues,
    settings: &GpiSettings,
    sat: StageOutcome,
    bs: StageOutcome,
) -> Result<(StackedPrecoders, GpiTrace)> {
    let p = StackedPrecoders::new(sat.x, bs.x, forms.sat.m, forms.bs.n)?;
    let final_settings = GpiSettings {
        mu: sat.final_mu,
        ..settings.clone()
    };
    let (final_res_sat, final_res_bs) = kkt_residual(forms, reports, &p, &final_settings)?;
    let trace = GpiTrace {
        records: sat.records.into_iter().chain(bs.records).collect(),
        sat_converged: sat.converged,
        bs_converged: bs.converged,
        sat_iterations: sat.iterations,
        bs_iterations: bs.iterations,
        final_mu: sat.final_mu,
        final_res_sat,
        final_res_bs,
    };
    Ok((p, trace))
}

fn unit_or_fallback(x: CVec, fallback: &CMat) -> CVec {
    normalized(&x).unwrap_or_else(|| principal_eigvec(fallback))
}

/// MRT satellite precoder from `Ĝ` and `Ẑ`: private blocks along `ĝ_u`,
/// common block along the dominant direction of all satellite channels.
/// Blocks get equal power.
pub fn mrt_satellite(csit: &CsitEstimate) -> CVec {
    let (m, ks) = (csit.m(), csit.ks());
    let mut gram = CMat::zeros(m, m);
    let mut err = CMat::zeros(m, m);
    for u in 0..ks {
        gram += outer(&csit.g_hat.column(u).into_owned());
        err += &csit.psi[u];
    }
    for &k in &csit.interfered {
        gram += outer(&csit.z_hat.column(k).into_owned());
        err += &csit.phi_sat[k];
    }
    let common = if gram.iter().any(|z| z.norm() > 0.0) {
        principal_eigvec(&gram)
    } else if err.iter().any(|z| z.norm() > 0.0) {
        principal_eigvec(&err)
    } else {
        CVec::from_element(m, crate::linalg::ONE).unscale((m as f64).sqrt())
    };
    let mut f = CVec::zeros(m * (ks + 1));
    f.rows_mut(0, m).copy_from(&common);
    for u in 0..ks {
        let g = unit_or_fallback(csit.g_hat.column(u).into_owned(), &csit.psi[u]);
        f.rows_mut((u + 1) * m, m).copy_from(&g);
    }
    f.unscale(((ks + 1) as f64).sqrt())
}

/// MRT BS precoder from `Ĥ`, equal power per user.
pub fn mrt_bs(csit: &CsitEstimate) -> CVec {
    let (n, kt) = (csit.n(), csit.kt());
    let mut v = CVec::zeros(n * kt);
    for k in 0..kt {
        let h = unit_or_fallback(csit.h_hat.column(k).into_owned(), &csit.phi_bs[k]);
        v.rows_mut(k * n, n).copy_from(&h);
    }
    if kt > 0 {
        v.unscale_mut((kt as f64).sqrt());
    }
    v
}

/// MRT starting point of both stages.
pub fn mrt_precoders(csit: &CsitEstimate) -> Result<StackedPrecoders> {
    StackedPrecoders::new(mrt_satellite(csit), mrt_bs(csit), csit.m(), csit.n())
}
