//! Monte-Carlo evaluation: one trial per seed, sweeps over one system
//! parameter, aggregation and CSV output.
//!
//! A trial runs placement, channel draw, CSIT estimation, precoder design and
//! scoring on the true channels. Every method in a sweep sees the same
//! realisation at a given (axis point, trial), so method differences are
//! paired.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{design, Baseline};
use crate::channel::{draw_channels, spatial_covariances, ChannelRealization, CovarianceSet, CsitEstimate, Estimator};
use crate::decouple::{average_reports, Mechanism, ReportValues};
use crate::error::{Error, Result};
use crate::gpi::{bs_stage, combine_stages, mrt_bs, mrt_satellite, sat_stage, GpiSettings, GpiTrace, TraceRecord};
use crate::linalg::neumaier_sum;
use crate::rates::{build_quadratic_forms, true_instantaneous_rates, QuadraticFormSet};
use crate::scenario::{link_budget, place_users, SystemConfig};
use crate::seeding::{stream, trial_seed, Stream};

/// Precoder design under evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Gpi(Mechanism),
    Baseline(Baseline),
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Gpi(Mechanism::Instantaneous),
        Method::Gpi(Mechanism::Average),
        Method::Gpi(Mechanism::Zero),
        Method::Baseline(Baseline::Slnr),
        Method::Baseline(Baseline::Zf),
        Method::Baseline(Baseline::ZfLocal),
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Gpi(Mechanism::Instantaneous) => "gpi-ins",
            Method::Gpi(Mechanism::Average) => "gpi-avg",
            Method::Gpi(Mechanism::Zero) => "gpi-zero",
            Method::Baseline(Baseline::Slnr) => "slnr",
            Method::Baseline(Baseline::Zf) => "zf",
            Method::Baseline(Baseline::ZfLocal) => "zf-local",
        }
    }

    /// Report mechanism, or `"none"` for baselines.
    pub fn mechanism_tag(self) -> &'static str {
        match self {
            Method::Gpi(m) => m.as_str(),
            Method::Baseline(_) => "none",
        }
    }

    pub fn mechanism(self) -> Option<Mechanism> {
        match self {
            Method::Gpi(m) => Some(m),
            Method::Baseline(_) => None,
        }
    }

    /// Parses a method tag; a bare `gpi` takes `mechanism` (average when
    /// absent), and `mechanism` overrides the suffix of a `gpi-*` tag.
    pub fn parse_with(tag: &str, mechanism: Option<Mechanism>) -> Result<Self> {
        let base = if tag == "gpi" {
            Method::Gpi(Mechanism::Average)
        } else {
            tag.parse()?
        };
        Ok(match (base, mechanism) {
            (Method::Gpi(_), Some(m)) => Method::Gpi(m),
            _ => base,
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::UnknownTag {
                kind: "method",
                value: s.into(),
            })
    }
}

/// Parses a comma-separated method list.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

/// Outcome of one method on one realisation.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub method: Method,
    pub snr_db: f64,
    pub sum_rate: f64,
    /// Satellite users first; the common rate is split equally among them.
    pub per_user: Vec<f64>,
    /// Iterations of both stages; zero for baselines.
    pub iterations: usize,
    /// Both stages converged (always true for baselines).
    pub converged: bool,
    /// A baseline fell back to a regularised inverse.
    pub regularized: bool,
    pub seed: u64,
}

/// One realisation shared by all methods of a trial.
pub struct TrialContext {
    pub cfg: SystemConfig,
    pub seed: u64,
    pub covs: CovarianceSet,
    pub real: ChannelRealization,
    pub csit: CsitEstimate,
    pub forms: QuadraticFormSet,
    estimator: Estimator,
    average: Option<ReportValues>,
}

impl TrialContext {
    pub fn new(cfg: &SystemConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let placement = place_users(cfg, &mut stream(seed, Stream::Placement));
        let gains = link_budget(cfg, &placement).normalized(cfg);
        let covs = spatial_covariances(cfg, &placement, &gains);
        let real = draw_channels(cfg, &covs, &mut stream(seed, Stream::Channel));
        let estimator = Estimator::new(&covs, cfg.tau_p);
        let csit = estimator.estimate(&real, &mut stream(seed, Stream::Estimation));
        let forms = build_quadratic_forms(&csit, cfg)?;
        Ok(Self {
            cfg: cfg.clone(),
            seed,
            covs,
            real,
            csit,
            forms,
            estimator,
            average: None,
        })
    }

    /// Long-term report of this placement, computed on first use.
    pub fn average_reports(&mut self) -> Result<&ReportValues> {
        if self.average.is_none() {
            let r = average_reports(
                &self.cfg,
                &self.covs,
                &self.estimator,
                &GpiSettings::from(&self.cfg),
                self.cfg.report_samples,
                self.seed,
            )?;
            self.average = Some(r);
        }
        Ok(self.average.as_ref().expect("just filled"))
    }

    /// Designs and scores one method. The trace is `None` for baselines.
    pub fn evaluate(&mut self, method: Method) -> Result<(TrialResult, Option<GpiTrace>)> {
        let cfg = self.cfg.clone();
        let (f, v, rs, iterations, converged, regularized, trace) = match method {
            Method::Baseline(b) => {
                let p = design(b, &self.csit, &cfg);
                (p.f, p.v, false, 0, true, p.regularized, None)
            }
            Method::Gpi(mechanism) => {
                let settings = GpiSettings::from(&cfg);
                let bs = bs_stage(&self.forms.bs, &settings, &mrt_bs(&self.csit));
                let reports = match mechanism {
                    Mechanism::Instantaneous => ReportValues::instantaneous(&self.forms.bs, &bs.x),
                    Mechanism::Average => self.average_reports()?.clone(),
                    Mechanism::Zero => ReportValues::zero(cfg.kt),
                };
                let sat = sat_stage(&self.forms.sat, &reports, &settings, &mrt_satellite(&self.csit));
                let (p, trace) = combine_stages(&self.forms, &reports, &settings, sat, bs)?;
                let (f, v) = p.unstack();
                let it = trace.sat_iterations + trace.bs_iterations;
                (f, v, true, it, trace.converged(), false, Some(trace))
            }
        };
        let rates = true_instantaneous_rates(&self.real, &f, &v, &cfg, rs)?;
        let result = TrialResult {
            method,
            snr_db: cfg.snr_db,
            sum_rate: rates.sum,
            per_user: rates.per_user(),
            iterations,
            converged,
            regularized,
            seed: self.seed,
        };
        Ok((result, trace))
    }
}

/// Runs one method on the realisation derived from `seed`.
pub fn run_trial(cfg: &SystemConfig, method: Method, seed: u64) -> Result<TrialResult> {
    Ok(TrialContext::new(cfg, seed)?.evaluate(method)?.0)
}

/// Parameter varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Snr,
    SatAntennas,
    KtInt,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Snr => "snr",
            Axis::SatAntennas => "sat_antennas",
            Axis::KtInt => "kt_int",
        }
    }

    /// Copy of `base` with this axis set to `value`. Antenna counts must be
    /// perfect squares and are laid out as square arrays.
    pub fn apply(self, base: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut cfg = base.clone();
        let whole = |field| -> Result<usize> {
            if value >= 0.0 && value.fract() == 0.0 && value.is_finite() {
                Ok(value as usize)
            } else {
                Err(Error::InvalidConfig {
                    field,
                    reason: format!("sweep value {value} is not a non-negative integer"),
                })
            }
        };
        match self {
            Axis::Snr => cfg.snr_db = value,
            Axis::SatAntennas => {
                let m = whole("M1")?;
                let side = (m as f64).sqrt().round() as usize;
                if side * side != m || m == 0 {
                    return Err(Error::InvalidConfig {
                        field: "M1",
                        reason: format!("antenna count {m} is not a perfect square"),
                    });
                }
                cfg.m1 = side;
                cfg.m2 = side;
            }
            Axis::KtInt => cfg.kt_int = whole("Kt_int")?,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr" => Ok(Axis::Snr),
            "sat_antennas" | "m" | "M" => Ok(Axis::SatAntennas),
            "kt_int" | "Kt_int" => Ok(Axis::KtInt),
            _ => Err(Error::UnknownTag {
                kind: "axis",
                value: s.into(),
            }),
        }
    }
}

/// Parses `start:step:stop` (inclusive) or a comma-separated list.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let bad = |reason: String| Error::InvalidConfig {
        field: "values",
        reason,
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(format!("`{s}` is not a number")))
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [a, s, b] = parts[..] else {
            return Err(bad(format!("`{text}` is not start:step:stop")));
        };
        let (a, s, b) = (num(a)?, num(s)?, num(b)?);
        if s.is_nan() || s <= 0.0 || b < a {
            return Err(bad(format!("`{text}` needs a positive step and start ≤ stop")));
        }
        let count = ((b - a) / s + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| a + i as f64 * s).collect())
    } else {
        text.split(',').filter(|p| !p.trim().is_empty()).map(num).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub base: SystemConfig,
    pub seed: u64,
    /// Worker threads; zero uses the rayon default.
    pub workers: usize,
    /// Keep the solver trace of the first GPI trial at the last axis point.
    pub keep_trace: bool,
}

impl SweepSpec {
    pub fn new(axis: Axis, values: Vec<f64>, trials: usize, methods: Vec<Method>, base: SystemConfig) -> Self {
        let seed = base.seed;
        Self {
            axis,
            values,
            trials,
            methods,
            base,
            seed,
            workers: 0,
            keep_trace: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |field| Error::InvalidConfig {
            field,
            reason: "must not be empty".into(),
        };
        if self.values.is_empty() {
            return Err(empty("values"));
        }
        if self.methods.is_empty() {
            return Err(empty("methods"));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig {
                field: "trials",
                reason: "at least one trial is required".into(),
            });
        }
        for &v in &self.values {
            self.axis.apply(&self.base, v)?;
        }
        Ok(())
    }
}

/// Aggregate of one (axis value, method) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub axis: String,
    pub axis_value: f64,
    pub method: String,
    pub mechanism: String,
    pub mean_sum_rate: f64,
    pub stderr: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    pub method: String,
    pub user_rate: f64,
}

/// Results of one axis point, indexed `[method][trial]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointResults {
    pub axis_value: f64,
    pub trials: Vec<Vec<TrialResult>>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SweepTable {
    pub summary: Vec<SummaryRow>,
    /// Per-user rates at the last axis point.
    pub cdf: Vec<CdfRow>,
    pub trace: Option<GpiTrace>,
    pub points: Vec<PointResults>,
}

/// Mean and standard error (`std/√n`, zero for a single sample).
pub fn mean_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = neumaier_sum(samples.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = neumaier_sum(samples.iter().map(|x| (x - mean).powi(2))) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs every (axis value, trial) job in parallel and reduces in index
/// order, so the table does not depend on the worker count.
pub fn sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let configs: Vec<SystemConfig> = spec
        .values
        .iter()
        .map(|&v| spec.axis.apply(&spec.base, v))
        .collect::<Result<_>>()?;
    let trace_point = configs.len() - 1;
    let trace_method = spec.methods.iter().position(|m| matches!(m, Method::Gpi(_)));

    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|a| (0..spec.trials).map(move |t| (a, t)))
        .collect();
    let run = || {
        jobs.par_iter()
            .map(|&(a, t)| {
                let seed = trial_seed(spec.seed, a as u64, t as u64);
                let mut ctx = TrialContext::new(&configs[a], seed)?;
                let mut trace = None;
                let mut out = Vec::with_capacity(spec.methods.len());
                for (mi, &m) in spec.methods.iter().enumerate() {
                    let (r, tr) = ctx.evaluate(m)?;
                    if spec.keep_trace && a == trace_point && t == 0 && Some(mi) == trace_method {
                        trace = tr;
                    }
                    out.push(r);
                }
                Ok((out, trace))
            })
            .collect::<Result<Vec<_>>>()
    };
    let results = if spec.workers == 0 {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(spec.workers)
            .build()
            .map_err(|e| Error::InvalidConfig {
                field: "workers",
                reason: e.to_string(),
            })?
            .install(run)?
    };

    let mut table = SweepTable::default();
    let mut iter = results.into_iter();
    for (a, &value) in spec.values.iter().enumerate() {
        let mut per_method: Vec<Vec<TrialResult>> = vec![Vec::with_capacity(spec.trials); spec.methods.len()];
        for _ in 0..spec.trials {
            let (row, trace) = iter.next().expect("one result per job");
            if trace.is_some() {
                table.trace = trace;
            }
            for (mi, r) in row.into_iter().enumerate() {
                per_method[mi].push(r);
            }
        }
        for (mi, &m) in spec.methods.iter().enumerate() {
            let sums: Vec<f64> = per_method[mi].iter().map(|r| r.sum_rate).collect();
            let (mean, se) = mean_stderr(&sums);
            table.summary.push(SummaryRow {
                axis: spec.axis.as_str().into(),
                axis_value: value,
                method: m.tag().into(),
                mechanism: m.mechanism_tag().into(),
                mean_sum_rate: mean,
                stderr: se,
                n: sums.len(),
            });
            if a == trace_point {
                for r in &per_method[mi] {
                    table.cdf.extend(r.per_user.iter().map(|&u| CdfRow {
                        method: m.tag().into(),
                        user_rate: u,
                    }));
                }
            }
        }
        table.points.push(PointResults {
            axis_value: value,
            trials: per_method,
        });
    }
    Ok(table)
}

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub const SUMMARY_HEADER: [&str; 7] = [
    "axis",
    "axis_value",
    "method",
    "mechanism",
    "mean_sum_rate",
    "stderr",
    "n",
];
pub const CDF_HEADER: [&str; 2] = ["method", "user_rate"];
pub const TRACE_HEADER: [&str; 7] = ["stage", "iter", "mu", "displacement", "objective", "res_sat", "res_bs"];

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn write_trace(path: &Path, records: &[TraceRecord]) -> Result<()> {
    write_rows(path, &TRACE_HEADER, records)
}

/// Writes `<prefix>_summary.csv`, `<prefix>_cdf.csv` and, when the table
/// holds a trace, `<prefix>_trace.csv`. Returns the written paths.
pub fn write_outputs(table: &SweepTable, prefix: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let prefix = prefix.as_ref();
    let summary = with_suffix(prefix, "_summary.csv");
    let cdf = with_suffix(prefix, "_cdf.csv");
    write_rows(&summary, &SUMMARY_HEADER, &table.summary)?;
    write_rows(&cdf, &CDF_HEADER, &table.cdf)?;
    let mut written = vec![summary, cdf];
    if let Some(trace) = &table.trace {
        let path = with_suffix(prefix, "_trace.csv");
        write_trace(&path, &trace.records)?;
        written.push(path);
    }
    Ok(written)
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .map(|r| r.map_err(csv_err))
        .collect()
}

pub fn read_summary(path: impl AsRef<Path>) -> Result<Vec<SummaryRow>> {
    read_rows(path.as_ref())
}

pub fn read_cdf(path: impl AsRef<Path>) -> Result<Vec<CdfRow>> {
    read_rows(path.as_ref())
}
