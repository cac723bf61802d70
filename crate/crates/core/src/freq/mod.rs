//! Sanitized frequencies.
//!
//! A key of true frequency `i` is reported with an opaque ordered token `j`
//! drawn from the row `π_{i,•}`; token 0 means "not reported". Two builders
//! produce such tables: [`compute_pij`] works on the integer grid `1..=i`, and
//! [`compute_pdfs`] builds piecewise-constant densities on `(0, i]` that
//! [`discretize_pdfs`] turns into interval tokens.

mod discrete;
mod pdf;

pub use discrete::compute_pij;
pub use pdf::{compute_pdfs, discretize_pdfs, PdfFamily, PiecewisePdf, Segment};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::keys::check_scheme;
use crate::privacy::{verify_rows, DiscreteDistribution, DpReport, PrivacyParams};
use crate::rng::{key_stream, open_unit, Purpose};
use crate::sampling::{SamplingScheme, WeightedSample};

/// One output law, stored as a band of positive tokens `first..first + len`.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    not_reported: f64,
    first: usize,
    probs: Vec<f64>,
}

impl TableRow {
    /// `dense[0]` is the not-reported mass; leading and trailing zero tokens
    /// are dropped.
    pub fn from_dense(dense: &[f64]) -> Self {
        let not_reported = dense.first().copied().unwrap_or(1.0);
        let tail = dense.get(1..).unwrap_or(&[]);
        match tail.iter().position(|&p| p != 0.0) {
            None => Self {
                not_reported,
                first: 1,
                probs: Vec::new(),
            },
            Some(lo) => {
                let hi = tail.iter().rposition(|&p| p != 0.0).unwrap();
                Self {
                    not_reported,
                    first: lo + 1,
                    probs: tail[lo..=hi].to_vec(),
                }
            }
        }
    }

    pub fn not_reported(&self) -> f64 {
        self.not_reported
    }

    /// Smallest stored positive token.
    pub fn first_token(&self) -> usize {
        self.first
    }

    /// Largest stored positive token; `None` when nothing is reported.
    pub fn last_token(&self) -> Option<usize> {
        (!self.probs.is_empty()).then(|| self.first + self.probs.len() - 1)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, token: usize) -> f64 {
        if token == 0 {
            return self.not_reported;
        }
        token
            .checked_sub(self.first)
            .and_then(|k| self.probs.get(k))
            .copied()
            .unwrap_or(0.0)
    }

    /// `Σ_{j≥1} π_{i,j}`.
    pub fn reported_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `(token, prob)` over stored positive tokens.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs.iter().enumerate().map(move |(k, &p)| (self.first + k, p))
    }

    fn write_dense(&self, out: &mut [f64]) {
        out.fill(0.0);
        out[0] = self.not_reported;
        out[self.first..self.first + self.probs.len()].copy_from_slice(&self.probs);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    /// Token `j` is the integer frequency estimate `j`.
    Discrete,
    /// Token `k` is the interval `(x_{k−1}, x_k]` of a discretized density.
    Intervals,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SanitizerTable {
    rows: Vec<TableRow>,
    tokens: usize,
    edges: Option<Vec<f64>>,
    params: Option<PrivacyParams>,
    scheme: Option<SamplingScheme>,
}

impl SanitizerTable {
    pub(crate) fn new(
        rows: Vec<TableRow>,
        tokens: usize,
        edges: Option<Vec<f64>>,
        params: Option<PrivacyParams>,
        scheme: Option<SamplingScheme>,
    ) -> Self {
        Self {
            rows,
            tokens,
            edges,
            params,
            scheme,
        }
    }

    /// The non-private sampler as a table: token `i` (the true frequency)
    /// with probability `q_i`, otherwise not sampled.
    pub fn nonprivate(scheme: &SamplingScheme, max_frequency: usize) -> Self {
        let rows = (0..=max_frequency)
            .map(|i| {
                let q = scheme.inclusion_prob(i as u64);
                let (first, probs) = if q > 0.0 { (i, vec![q]) } else { (1, Vec::new()) };
                TableRow {
                    not_reported: 1.0 - q,
                    first,
                    probs,
                }
            })
            .collect();
        Self::new(rows, max_frequency, None, None, Some(scheme.clone()))
    }

    /// Builds a bare table from dense rows (`rows[i][0]` is not-reported),
    /// e.g. one read back from CSV. Each row must be a distribution.
    pub fn from_dense_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let tokens = rows.iter().map(|r| r.len().saturating_sub(1)).max().unwrap_or(0);
        let rows = rows
            .iter()
            .map(|r| {
                DiscreteDistribution::new(r.clone())?;
                Ok(TableRow::from_dense(r))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(rows, tokens, None, None, None))
    }

    pub fn kind(&self) -> TableKind {
        if self.edges.is_some() {
            TableKind::Intervals
        } else {
            TableKind::Discrete
        }
    }

    pub fn max_frequency(&self) -> usize {
        self.rows.len() - 1
    }

    /// Number of positive tokens `t`; tokens are `0..=t`.
    pub fn num_tokens(&self) -> usize {
        self.tokens
    }

    pub fn rows(&self) -> &[TableRow] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> Option<&TableRow> {
        self.rows.get(i)
    }

    pub fn prob(&self, i: usize, token: usize) -> f64 {
        self.rows.get(i).map_or(0.0, |r| r.prob(token))
    }

    pub fn params(&self) -> Option<&PrivacyParams> {
        self.params.as_ref()
    }

    pub fn scheme(&self) -> Option<&SamplingScheme> {
        self.scheme.as_ref()
    }

    /// Interval `(x_{k−1}, x_k]` behind token `k` for discretized densities.
    pub fn token_interval(&self, token: usize) -> Option<(f64, f64)> {
        let edges = self.edges.as_ref()?;
        (token >= 1 && token < edges.len()).then(|| (edges[token - 1], edges[token]))
    }

    /// A representative real value for a token: `j` itself for integer
    /// tokens, the right end of the interval otherwise.
    pub fn token_value(&self, token: usize) -> Option<f64> {
        if token == 0 || token > self.tokens {
            return None;
        }
        match &self.edges {
            None => Some(token as f64),
            Some(e) => Some(e[token]),
        }
    }

    pub fn dense_row(&self, i: usize) -> Option<Vec<f64>> {
        let row = self.rows.get(i)?;
        let mut out = vec![0.0; self.tokens + 1];
        row.write_dense(&mut out);
        Some(out)
    }

    pub fn distribution(&self, i: usize) -> Result<DiscreteDistribution> {
        let dense = self.dense_row(i).ok_or(Error::FrequencyOutOfRange {
            frequency: i as u64,
            max_frequency: self.max_frequency() as u64,
        })?;
        DiscreteDistribution::new(dense)
    }

    /// Adjacent-row hockey-stick check in both directions.
    pub fn verify_dp(&self, params: &PrivacyParams) -> DpReport {
        let dense: Vec<Vec<f64>> = (0..self.rows.len())
            .into_par_iter()
            .map(|i| self.dense_row(i).unwrap())
            .collect();
        verify_rows(dense.iter().map(Vec::as_slice), params)
    }

    /// `Σ_{j≥h} π_{i,j}` for `h = 1..=t`; entry `h − 1` holds the tail from `h`.
    pub fn suffix_masses(&self, i: usize) -> Option<Vec<f64>> {
        let dense = self.dense_row(i)?;
        let mut out = vec![0.0; self.tokens];
        let mut acc = 0.0;
        for h in (1..=self.tokens).rev() {
            acc += dense[h];
            out[h - 1] = acc;
        }
        Some(out)
    }

    /// `max_{i,h} (Σ_{j≥h} π_{i−1,j} − Σ_{j≥h} π_{i,j})`; non-positive when
    /// every row dominates its predecessor.
    pub fn dominance_violation(&self) -> f64 {
        (1..self.rows.len())
            .into_par_iter()
            .map(|i| {
                let prev = self.suffix_masses(i - 1).unwrap();
                let cur = self.suffix_masses(i).unwrap();
                prev.iter()
                    .zip(&cur)
                    .map(|(a, b)| a - b)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .reduce(|| f64::NEG_INFINITY, f64::max)
    }

    fn lookup(&self, frequency: u64) -> Result<&TableRow> {
        usize::try_from(frequency)
            .ok()
            .and_then(|i| self.rows.get(i))
            .ok_or(Error::FrequencyOutOfRange {
                frequency,
                max_frequency: self.max_frequency() as u64,
            })
    }
}

/// The integer-token table when nothing is sampled out (`q_i = 1` for all
/// `i ≤ max`), the discretized densities otherwise.
pub fn default_table(params: &PrivacyParams, scheme: &SamplingScheme, max_frequency: usize) -> Result<SanitizerTable> {
    if (1..=max_frequency as u64).all(|i| scheme.inclusion_prob(i) >= 1.0) {
        Ok(compute_pij(params, scheme, max_frequency))
    } else {
        Ok(compute_pdfs(params, scheme, max_frequency)?.discretize())
    }
}

/// Replaces each sampled key's frequency by a token drawn from
/// `π_{w,•} / q_w`, so that sampling followed by sanitization has law
/// `π_{w,•}`. Keys drawing token 0 are dropped. Output is in sample order.
pub fn sanitize_frequencies(
    sample: &WeightedSample,
    table: &SanitizerTable,
    seed: u64,
) -> Result<Vec<(String, usize)>> {
    match table.scheme() {
        Some(s) => check_scheme(sample.scheme(), s)?,
        None => {
            return Err(Error::UnsupportedTable(
                "table carries no sampling scheme; rebuild it rather than importing it".into(),
            ))
        }
    }
    let out: Vec<Option<(String, usize)>> = sample
        .pairs()
        .par_iter()
        .map(|(key, w)| {
            let row = table.lookup(*w)?;
            let q = sample.scheme().inclusion_prob(*w);
            if q <= 0.0 {
                return Err(Error::ZeroInclusion {
                    key: key.clone(),
                    frequency: *w,
                });
            }
            let mut rng = key_stream(seed, Purpose::FrequencySanitizer, key);
            let u = open_unit(&mut rng) * q;
            let mut acc = 0.0;
            for (token, p) in row.iter() {
                acc += p;
                if u < acc {
                    return Ok(Some((key.clone(), token)));
                }
            }
            Ok(None)
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().flatten().collect())
}
