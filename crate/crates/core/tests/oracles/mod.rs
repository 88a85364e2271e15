//! Scalar re-implementations of the objectives, written directly from the
//! per-stream SINR expressions rather than from the block matrices.
#![allow(dead_code)]

use rand_chacha::ChaCha8Rng;
use stin::channel::CsitEstimate;
use stin::decouple::ReportValues;
use stin::linalg::{complex_normal_vec, hermitian_eigen, CMat, CVec, C64};
use stin::rates::StackedPrecoders;
use stin::scenario::SystemConfig;

fn ip(a: &CVec, b: &CVec) -> f64 {
    a.dotc(b).norm_sqr()
}

fn qf(m: &CMat, x: &CVec) -> f64 {
    x.dotc(&(m * x)).re
}

pub fn blocks(f: &CVec, m: usize) -> Vec<CVec> {
    (0..f.len() / m).map(|b| f.rows(b * m, m).into_owned()).collect()
}

fn lse(x: &[f64], mu: f64) -> f64 {
    let s: f64 = x.iter().map(|v| (-v / mu).exp()).sum::<f64>() / x.len() as f64;
    -mu * s.ln()
}

/// Satellite objective as printed, evaluated for any (not necessarily unit) `f`.
pub fn f1(csit: &CsitEstimate, cfg: &SystemConfig, rep: &ReportValues, f: &CVec, mu: f64) -> f64 {
    let m = csit.m();
    let ks = csit.ks();
    let fb = blocks(f, m);
    let nrm = f.norm_squared();
    let ns = 1.0 / cfg.ps();
    let r = cfg.power_ratio;
    let mut common = Vec::new();
    for &k in &csit.interfered {
        let z = csit.z_hat.column(k).into_owned();
        let phi = &csit.phi_sat[k];
        let all: f64 = fb.iter().map(|b| ip(&z, b) + qf(phi, b)).sum::<f64>() + rep.omega[k] * nrm;
        common.push((all / (all - ip(&z, &fb[0]))).log2());
    }
    for u in 0..ks {
        let g = csit.g_hat.column(u).into_owned();
        let psi = &csit.psi[u];
        let all: f64 = fb.iter().map(|b| ip(&g, b) + qf(psi, b)).sum::<f64>() + ns * nrm;
        common.push((all / (all - ip(&g, &fb[0]))).log2());
    }
    let mut total = if common.is_empty() { 0.0 } else { lse(&common, mu) };
    let mut log_l = 0.0;
    for j in 0..csit.kt() {
        let z = csit.z_hat.column(j).into_owned();
        let phi = &csit.phi_sat[j];
        let c: f64 = r * fb[1..].iter().map(|b| ip(&z, b) + qf(phi, b)).sum::<f64>();
        let zero = z.iter().all(|x| *x == C64::new(0.0, 0.0)) && phi.iter().all(|x| *x == C64::new(0.0, 0.0));
        if zero && rep.epsilon[j] == 0.0 {
            continue;
        }
        log_l += (c + rep.epsilon[j] * nrm).log2() / ks as f64;
    }
    for u in 0..ks {
        let g = csit.g_hat.column(u).into_owned();
        let psi = &csit.psi[u];
        let all: f64 = fb[1..].iter().map(|b| ip(&g, b) + qf(psi, b)).sum::<f64>() + ns * nrm;
        let den = all - ip(&g, &fb[u + 1]);
        total += rep.epsilon_hat / ks as f64 + (all / den).log2() - log_l;
    }
    total
}

/// BS objective as printed.
pub fn f2(csit: &CsitEstimate, cfg: &SystemConfig, v: &CVec) -> f64 {
    let n = csit.n();
    let vb = blocks(v, n);
    let nt = 1.0 / cfg.pt();
    let nrm = v.norm_squared();
    (0..csit.kt())
        .map(|k| {
            let h = csit.h_hat.column(k).into_owned();
            let phi = &csit.phi_bs[k];
            let sig = ip(&h, &vb[k]);
            let all: f64 = vb.iter().map(|b| ip(&h, b) + qf(phi, b)).sum::<f64>() + nt * nrm;
            (sig / (all - sig)).log2()
        })
        .sum()
}

/// Central-difference gradient over real and imaginary parts, projected on
/// the tangent space of the unit sphere at `x`.
pub fn tangent_fd_gradient(x: &CVec, h: f64, fun: impl Fn(&CVec) -> f64) -> CVec {
    let mut g = CVec::zeros(x.len());
    for i in 0..x.len() {
        let d = |delta: C64| {
            let mut p = x.clone();
            let mut q = x.clone();
            p[i] += delta;
            q[i] -= delta;
            (fun(&p) - fun(&q)) / (2.0 * h)
        };
        let re = d(C64::new(h, 0.0));
        let im = d(C64::new(0.0, h));
        g[i] = C64::new(re, im);
    }
    let radial = x.dotc(&g).re;
    g - x * C64::from(radial)
}

/// Per-stream rates in bits/s/Hz; terrestrial common rates in `interfered` order.
#[derive(Clone, Debug, Default)]
pub struct Streams {
    pub common_su: Vec<f64>,
    pub common_tu: Vec<f64>,
    pub private_su: Vec<f64>,
    pub private_tu: Vec<f64>,
}

impl Streams {
    pub fn flat(&self) -> Vec<f64> {
        [&self.common_su, &self.common_tu, &self.private_su, &self.private_tu]
            .into_iter()
            .flatten()
            .copied()
            .collect()
    }
}

fn rate(num: f64, den: f64) -> f64 {
    (1.0 + num / den).log2()
}

/// Closed-form lower bounds straight from the scalar SINR expressions, with
/// each SINR written over the power of its own transmitter.
pub fn scalar_bounds(csit: &CsitEstimate, cfg: &SystemConfig, p: &StackedPrecoders) -> Streams {
    let (ks, kt) = (csit.ks(), csit.kt());
    let ns = 1.0 / cfg.ps();
    let nt = 1.0 / cfg.pt();
    let ratio = cfg.ps() / cfg.pt();
    let fc = p.common();
    let fp: Vec<CVec> = (0..ks).map(|u| p.private(u)).collect();
    let v: Vec<CVec> = (0..kt).map(|k| p.bs(k)).collect();
    let mut out = Streams::default();
    for u in 0..ks {
        let g = csit.g_hat.column(u).into_owned();
        let psi = &csit.psi[u];
        let priv_all: f64 = fp.iter().map(|f| ip(&g, f) + qf(psi, f)).sum();
        out.common_su.push(rate(ip(&g, &fc), priv_all + qf(psi, &fc) + ns));
        let own = ip(&g, &fp[u]);
        out.private_su.push(rate(own, priv_all - own + ns));
    }
    for k in 0..kt {
        let z = csit.z_hat.column(k).into_owned();
        let h = csit.h_hat.column(k).into_owned();
        let (phi_s, phi_b) = (&csit.phi_sat[k], &csit.phi_bs[k]);
        let ici: f64 = fp.iter().map(|f| ip(&z, f) + qf(phi_s, f)).sum();
        let bs_all: f64 = v.iter().map(|x| ip(&h, x) + qf(phi_b, x)).sum();
        if csit.interfered.contains(&k) {
            out.common_tu
                .push(rate(ip(&z, &fc), bs_all / ratio + qf(phi_s, &fc) + ici + ns));
        }
        let own = ip(&h, &v[k]);
        out.private_tu.push(rate(own, bs_all - own + ratio * ici + nt));
    }
    out
}

/// `L` with `L Lᴴ = cov` for a positive semidefinite `cov`.
fn sqrt_factor(cov: &CMat) -> CMat {
    let (vals, vecs) = hermitian_eigen(cov);
    let mut l = vecs;
    for (j, lam) in vals.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        l.column_mut(j).scale_mut(s);
    }
    l
}

fn draw(l: &CMat, rng: &mut ChaCha8Rng) -> CVec {
    l * complex_normal_vec(rng, l.ncols(), 1.0)
}

/// Monte-Carlo mean and standard error of the rate inside the expectation,
/// with the estimation errors drawn from their Gaussian error models.
pub fn mc_rates(
    csit: &CsitEstimate,
    cfg: &SystemConfig,
    p: &StackedPrecoders,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> (Streams, Streams) {
    let (ks, kt) = (csit.ks(), csit.kt());
    let ns = 1.0 / cfg.ps();
    let nt = 1.0 / cfg.pt();
    let ratio = cfg.ps() / cfg.pt();
    let fc = p.common();
    let fp: Vec<CVec> = (0..ks).map(|u| p.private(u)).collect();
    let v: Vec<CVec> = (0..kt).map(|k| p.bs(k)).collect();
    let l_psi: Vec<CMat> = csit.psi.iter().map(sqrt_factor).collect();
    let l_sat: Vec<CMat> = csit.phi_sat.iter().map(sqrt_factor).collect();
    let l_bs: Vec<CMat> = csit.phi_bs.iter().map(sqrt_factor).collect();

    let mut draws: Vec<Streams> = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut s = Streams::default();
        for u in 0..ks {
            let g = csit.g_hat.column(u).into_owned();
            let q = draw(&l_psi[u], rng);
            let actual = &g + &q;
            let priv_all: f64 = fp.iter().map(|f| ip(&actual, f)).sum();
            s.common_su.push(rate(ip(&g, &fc), priv_all + ip(&q, &fc) + ns));
            let own = ip(&actual, &fp[u]);
            s.private_su
                .push(rate(ip(&g, &fp[u]), priv_all - own + ip(&q, &fp[u]) + ns));
        }
        for k in 0..kt {
            let z = csit.z_hat.column(k).into_owned();
            let h = csit.h_hat.column(k).into_owned();
            let e_sat = draw(&l_sat[k], rng);
            let e_bs = draw(&l_bs[k], rng);
            let z_act = &z + &e_sat;
            let h_act = &h + &e_bs;
            let ici: f64 = fp.iter().map(|f| ip(&z_act, f)).sum();
            let bs_all: f64 = v.iter().map(|x| ip(&h_act, x)).sum();
            if csit.interfered.contains(&k) {
                s.common_tu
                    .push(rate(ip(&z, &fc), bs_all / ratio + ip(&e_sat, &fc) + ici + ns));
            }
            let own = ip(&h_act, &v[k]);
            s.private_tu
                .push(rate(ip(&h, &v[k]), bs_all - own + ip(&e_bs, &v[k]) + ratio * ici + nt));
        }
        draws.push(s);
    }

    let pick = |f: &dyn Fn(&Streams) -> &Vec<f64>| -> (Vec<f64>, Vec<f64>) {
        let len = draws.first().map_or(0, |d| f(d).len());
        (0..len)
            .map(|i| {
                let xs: Vec<f64> = draws.iter().map(|d| f(d)[i]).collect();
                let n = xs.len() as f64;
                let mean = xs.iter().sum::<f64>() / n;
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (mean, (var / n).sqrt())
            })
            .unzip()
    };
    let (m_csu, s_csu) = pick(&|d| &d.common_su);
    let (m_ctu, s_ctu) = pick(&|d| &d.common_tu);
    let (m_psu, s_psu) = pick(&|d| &d.private_su);
    let (m_ptu, s_ptu) = pick(&|d| &d.private_tu);
    (
        Streams {
            common_su: m_csu,
            common_tu: m_ctu,
            private_su: m_psu,
            private_tu: m_ptu,
        },
        Streams {
            common_su: s_csu,
            common_tu: s_ctu,
            private_su: s_psu,
            private_tu: s_ptu,
        },
    )
}
