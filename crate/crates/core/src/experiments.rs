//! Exact comparison sweeps. Every number here is an expectation computed
//! from closed forms, tables or quadrature; nothing is simulated.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{inverse_prob_coeffs, mle_coeffs, statistic_moments, MomentTable};
use crate::freq::{compute_pdfs, SanitizerTable};
use crate::keys::compute_pi;
use crate::privacy::PrivacyParams;
use crate::sampling::{FrequencyFn, FrequencyHistogram, SamplingScheme};
use crate::sbh::{sampled_sbh_report_prob, sbh_moment_table, sbh_report_prob, SbhConfig};

/// Rank `r` gets frequency `max(1, round(w_max · r^{−α}))`.
pub fn zipf_histogram(n_keys: u64, alpha: f64, w_max: u64) -> FrequencyHistogram {
    let mut h = FrequencyHistogram::new();
    for r in 1..=n_keys {
        let w = (w_max as f64 * (r as f64).powf(-alpha)).round().max(1.0) as u64;
        h.add(w, 1).expect("frequency is at least 1");
    }
    h
}

/// `n_keys` spread as evenly as possible over `lo..=hi`; leftovers go to the
/// smallest frequencies.
pub fn uniform_histogram(n_keys: u64, lo: u64, hi: u64) -> Result<FrequencyHistogram> {
    if lo == 0 || hi < lo {
        return Err(Error::InvalidParameter(format!("bad frequency range [{lo}, {hi}]")));
    }
    let span = hi - lo + 1;
    let (each, extra) = (n_keys / span, n_keys % span);
    FrequencyHistogram::from_counts((lo..=hi).map(|w| (w, each + u64::from(w - lo < extra))))
}

/// `Σ_i n_i p_i / Σ_i n_i`.
pub fn expected_reported_fraction<F: Fn(u64) -> f64>(histogram: &FrequencyHistogram, report_prob: F) -> Result<f64> {
    let n = histogram.total_keys();
    if n == 0 {
        return Err(Error::InvalidParameter("empty histogram".into()));
    }
    let reported: f64 = histogram.iter().map(|(w, c)| c as f64 * report_prob(w)).sum();
    Ok(reported / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    PwsKeys,
    PwsFreqMle,
    Sbh,
    SampledSbh,
    Nonprivate,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::PwsKeys,
        Method::PwsFreqMle,
        Method::Sbh,
        Method::SampledSbh,
        Method::Nonprivate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::PwsKeys => "pws-keys",
            Method::PwsFreqMle => "pws-freq-mle",
            Method::Sbh => "sbh",
            Method::SampledSbh => "sampled-sbh",
            Method::Nonprivate => "nonprivate",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    /// Expected fraction of the distribution's keys that are reported.
    ReportedFraction,
    /// NRMSE of `Σ g(w_x)` over the distribution's keys.
    Nrmse,
    /// Per-frequency end-to-end reporting probability.
    ReportProb,
    /// Per-frequency `Bias_i / g(i)`.
    NormalizedBias,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::ReportedFraction, Metric::Nrmse, Metric::ReportProb, Metric::NormalizedBias];

    pub fn name(self) -> &'static str {
        match self {
            Metric::ReportedFraction => "reported-fraction",
            Metric::Nrmse => "nrmse",
            Metric::ReportProb => "report-prob",
            Metric::NormalizedBias => "normalized-bias",
        }
    }

    fn per_frequency(self) -> bool {
        matches!(self, Metric::ReportProb | Metric::NormalizedBias)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown metric `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Delta(Vec<f64>),
    Tau(Vec<f64>),
    /// Per-frequency metrics at the configured parameters.
    Frequency(Vec<u64>),
}

impl Grid {
    pub fn name(&self) -> &'static str {
        match self {
            Grid::Delta(_) => "delta",
            Grid::Tau(_) => "tau",
            Grid::Frequency(_) => "frequency",
        }
    }

    fn len(&self) -> usize {
        match self {
            Grid::Delta(v) | Grid::Tau(v) => v.len(),
            Grid::Frequency(v) => v.len(),
        }
    }
}

/// `1, 10^{-1}, …, 10^{-8}`.
pub fn default_delta_grid() -> Vec<f64> {
    (0..=8).map(|k| 10f64.powi(-k)).collect()
}

/// `1, 0.5, 0.2, 0.1, …, 10^{-5}`.
pub fn default_tau_grid() -> Vec<f64> {
    let mut out = vec![1.0];
    for k in 0..5 {
        let s = 10f64.powi(-k);
        out.extend([0.5 * s, 0.2 * s, 0.1 * s]);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    Zipf { n_keys: u64, alpha: f64, w_max: u64 },
    Uniform { n_keys: u64, lo: u64, hi: u64 },
    /// Aggregated `key<TAB>frequency` file.
    File(PathBuf),
    Histogram(FrequencyHistogram),
}

impl DistributionSpec {
    pub fn histogram(&self) -> Result<FrequencyHistogram> {
        match self {
            DistributionSpec::Zipf { n_keys, alpha, w_max } => {
                if !(alpha.is_finite() && *alpha >= 0.0) || *w_max == 0 {
                    return Err(Error::InvalidParameter("zipf needs alpha >= 0 and w_max >= 1".into()));
                }
                Ok(zipf_histogram(*n_keys, *alpha, *w_max))
            }
            DistributionSpec::Uniform { n_keys, lo, hi } => uniform_histogram(*n_keys, *lo, *hi),
            DistributionSpec::File(path) => Ok(crate::io::read_histogram_file(path)?.to_counts()),
            DistributionSpec::Histogram(h) => Ok(h.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub grid: Grid,
    pub distribution: DistributionSpec,
    pub methods: Vec<Method>,
    pub metrics: Vec<Metric>,
    pub params: PrivacyParams,
    pub scheme: SamplingScheme,
    /// The statistic's `g` for error metrics.
    pub g: FrequencyFn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sweep_var: &'static str,
    pub value: f64,
    pub method: Method,
    pub metric: Metric,
    /// `None` where the method has no estimate or the estimate is undefined.
    pub result: Option<f64>,
}

// Per-frequency quantities for one (params, scheme) point, computed once.
struct Point<'a> {
    params: PrivacyParams,
    scheme: SamplingScheme,
    g: &'a FrequencyFn,
    max_frequency: u64,
}

impl Point<'_> {
    fn report_probs(&self, method: Method) -> Result<Vec<f64>> {
        let m = self.max_frequency;
        let sbh = SbhConfig::new(self.params);
        Ok(match method {
            Method::PwsKeys | Method::PwsFreqMle => compute_pi(&self.params, &self.scheme, m as usize).as_slice().to_vec(),
            Method::Sbh => (0..=m).map(|i| if i == 0 { 0.0 } else { sbh_report_prob(&sbh, i as f64) }).collect(),
            Method::SampledSbh => (0..=m)
                .into_par_iter()
                .map(|i| if i == 0 { Ok(0.0) } else { sampled_sbh_report_prob(&sbh, &self.scheme, i as f64) })
                .collect::<Result<_>>()?,
            Method::Nonprivate => (0..=m).map(|i| self.scheme.inclusion_prob(i)).collect(),
        })
    }

    fn moments(&self, method: Method) -> Result<Option<MomentTable>> {
        let m = self.max_frequency;
        let sbh = SbhConfig::new(self.params);
        Ok(Some(match method {
            Method::PwsKeys => return Ok(None),
            Method::PwsFreqMle => pws_mle_moments(&self.params, &self.scheme, self.g, m)?,
            Method::Sbh => sbh_moment_table(&sbh, &SamplingScheme::none(), self.g, m)?,
            Method::SampledSbh => sbh_moment_table(&sbh, &self.scheme, self.g, m)?,
            Method::Nonprivate => {
                let table = SanitizerTable::nonprivate(&self.scheme, m as usize);
                MomentTable::compute(&table, &inverse_prob_coeffs(&self.scheme, self.g, m as usize)?)?
            }
        }))
    }
}

/// Extra rows past the largest frequency of interest so that the argmax
/// behind each MLE coefficient is not cut off by the table edge.
pub fn mle_margin(params: &PrivacyParams) -> u64 {
    4 * params.l_value().max(0.0).ceil() as u64 + 8
}

/// Per-key moments of the MLE estimator for frequencies `0..=max`, on the
/// discretized density table. Sweeps use this table at every point, `q ≡ 1`
/// included, so that points along a τ grid come from one table family.
pub fn pws_mle_moments(params: &PrivacyParams, scheme: &SamplingScheme, g: &FrequencyFn, max_frequency: u64) -> Result<MomentTable> {
    let rows = (max_frequency + mle_margin(params)) as usize;
    let table = compute_pdfs(params, scheme, rows)?.discretize();
    pws_mle_moments_on(&table, params, scheme, g, max_frequency)
}

/// Same as [`pws_mle_moments`] on a caller-chosen table with at least
/// `max + mle_margin` rows.
pub fn pws_mle_moments_on(
    table: &SanitizerTable,
    params: &PrivacyParams,
    scheme: &SamplingScheme,
    g: &FrequencyFn,
    max_frequency: u64,
) -> Result<MomentTable> {
    let rows = table.max_frequency();
    if (rows as u64) < max_frequency + mle_margin(params) {
        return Err(Error::FrequencyOutOfRange {
            frequency: max_frequency + mle_margin(params),
            max_frequency: rows as u64,
        });
    }
    let rv = compute_pi(params, scheme, rows);
    let coeffs = mle_coeffs(table, &rv, g)?;
    let all = MomentTable::compute(table, &coeffs)?;
    MomentTable::from_rows(all.rows()[..=max_frequency as usize].to_vec())
}

fn eval_point(cfg: &SweepConfig, hist: &FrequencyHistogram, point: &Point, var: &'static str, value: f64) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for &metric in &cfg.metrics {
        if metric.per_frequency() {
            continue;
        }
        for &method in &cfg.methods {
            let result = match metric {
                Metric::ReportedFraction => point
                    .report_probs(method)
                    .and_then(|p| expected_reported_fraction(hist, |w| p[w as usize]))
                    .ok(),
                Metric::Nrmse => point
                    .moments(method)
                    .ok()
                    .flatten()
                    .and_then(|mt| statistic_moments(hist, &mt, point.g).ok())
                    .and_then(|s| s.nrmse),
                _ => unreachable!(),
            };
            rows.push(SweepRow {
                sweep_var: var,
                value,
                method,
                metric,
                result,
            });
        }
    }
    rows
}

fn eval_frequencies(cfg: &SweepConfig, point: &Point, freqs: &[u64]) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for &metric in &cfg.metrics {
        if !metric.per_frequency() {
            continue;
        }
        for &method in &cfg.methods {
            let values: Option<Vec<f64>> = match metric {
                Metric::ReportProb => point.report_probs(method).ok(),
                Metric::NormalizedBias => point.moments(method).ok().flatten().map(|mt| {
                    mt.rows()
                        .iter()
                        .map(|r| {
                            let g = point.g.eval(r.frequency);
                            if g > 0.0 { r.bias / g } else { f64::NAN }
                        })
                        .collect()
                }),
                _ => unreachable!(),
            };
            for &i in freqs {
                let result = values.as_ref().and_then(|v| v.get(i as usize).copied()).filter(|x| x.is_finite());
                rows.push(SweepRow {
                    sweep_var: "frequency",
                    value: i as f64,
                    method,
                    metric,
                    result,
                });
            }
        }
    }
    rows
}

/// Evaluates every method and metric at every grid point. Rows come out in
/// grid order, then metric, then method. Points where a method has no
/// defined value carry `result: None`. A frequency grid evaluates only the
/// per-frequency metrics and ignores the distribution.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.grid.len() == 0 || cfg.methods.is_empty() || cfg.metrics.is_empty() {
        return Err(Error::InvalidParameter("sweep needs a grid, methods and metrics".into()));
    }
    let hist = match cfg.grid {
        Grid::Frequency(_) => FrequencyHistogram::new(),
        _ => cfg.distribution.histogram()?,
    };
    let hist_max = hist.max_frequency().unwrap_or(0);
    let point = |params: PrivacyParams, scheme: SamplingScheme, max_frequency: u64| Point {
        params,
        scheme,
        g: &cfg.g,
        max_frequency,
    };
    let chunks: Vec<Vec<SweepRow>> = match &cfg.grid {
        Grid::Delta(ds) => ds
            .par_iter()
            .map(|&d| {
                let params = cfg.params.with_delta(d)?;
                Ok(eval_point(cfg, &hist, &point(params, cfg.scheme.clone(), hist_max), "delta", d))
            })
            .collect::<Result<_>>()?,
        Grid::Tau(ts) => ts
            .par_iter()
            .map(|&t| {
                let scheme = cfg.scheme.with_tau(t)?;
                Ok(eval_point(cfg, &hist, &point(cfg.params, scheme, hist_max), "tau", t))
            })
            .collect::<Result<_>>()?,
        Grid::Frequency(fs) => {
            let top = fs.iter().copied().max().unwrap_or(0);
            vec![eval_frequencies(cfg, &point(cfg.params, cfg.scheme.clone(), top), fs)]
        }
    };
    Ok(chunks.into_iter().flatten().collect())
}

/// NRMSE of `Σ g(w_x)` over the selection, across the configured τ grid.
pub fn nrmse_experiment(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if !matches!(cfg.grid, Grid::Tau(_)) {
        return Err(Error::InvalidParameter("the NRMSE experiment sweeps tau".into()));
    }
    let cfg = SweepConfig {
        metrics: vec![Metric::Nrmse],
        ..cfg.clone()
    };
    run_sweep(&cfg)
}
