//! Threshold weighted sampling and the frequency containers it operates on.
//!
//! A threshold scheme draws `u_x ~ D` independently per key and keeps the key
//! iff `u_x < f(w_x) · τ`. With `D = Exp(1)` this is ppswor, with
//! `D = U[0, 1]` it is Poisson PPS. A key of frequency `i` is therefore kept
//! with probability `q_i = Pr[u < f(i) τ]`.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{key_stream, open_unit, Purpose};

/// A non-negative function of frequency, used both as the sampling weight `f`
/// and as the statistic `g`.
#[derive(Debug, Clone, PartialEq)]
pub enum FrequencyFn {
    Identity,
    /// `w^p`.
    Power(f64),
    /// Values for frequencies `1..=len`; frequencies past the end reuse the
    /// last value.
    Tabulated(Vec<f64>),
}

impl FrequencyFn {
    pub fn eval(&self, i: u64) -> f64 {
        if i == 0 {
            return 0.0;
        }
        match self {
            FrequencyFn::Identity => i as f64,
            FrequencyFn::Power(p) => (i as f64).powf(*p),
            FrequencyFn::Tabulated(values) => {
                let idx = (i as usize).min(values.len());
                values.get(idx.wrapping_sub(1)).copied().unwrap_or(0.0)
            }
        }
    }

    /// Evaluation at a real-valued (sanitized) frequency. Tabulated functions
    /// have no real extension.
    pub fn eval_real(&self, w: f64) -> Option<f64> {
        match self {
            _ if w <= 0.0 => Some(0.0),
            FrequencyFn::Identity => Some(w),
            FrequencyFn::Power(p) => Some(w.powf(*p)),
            FrequencyFn::Tabulated(_) => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            FrequencyFn::Identity => Ok(()),
            FrequencyFn::Power(p) if p.is_finite() && *p >= 0.0 => Ok(()),
            FrequencyFn::Power(p) => Err(Error::InvalidParameter(format!(
                "power must be finite and non-negative, got {p}"
            ))),
            FrequencyFn::Tabulated(v) => {
                if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(Error::InvalidParameter(
                        "tabulated values must be finite and non-negative".into(),
                    ));
                }
                if v.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::InvalidParameter(
                        "tabulated values must be non-decreasing".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    /// `D = Exp(1)`: `q_i = 1 − e^{−f(i)τ}`.
    Ppswor,
    /// `D = U[0, 1]`: `q_i = min(1, f(i)τ)`.
    Pps,
    /// No sampling: `q_i = 1`.
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingScheme {
    kind: SchemeKind,
    weight: FrequencyFn,
    tau: f64,
}

impl SamplingScheme {
    pub fn none() -> Self {
        Self {
            kind: SchemeKind::None,
            weight: FrequencyFn::Identity,
            tau: f64::INFINITY,
        }
    }

    pub fn ppswor(tau: f64) -> Result<Self> {
        Self::threshold(SchemeKind::Ppswor, FrequencyFn::Identity, tau)
    }

    pub fn pps(tau: f64) -> Result<Self> {
        Self::threshold(SchemeKind::Pps, FrequencyFn::Identity, tau)
    }

    /// Sampling weights as powers `w^p` are restricted to `p ∈ [0, 2]`, the
    /// moments that admit small sketches on unaggregated data.
    pub fn threshold(kind: SchemeKind, weight: FrequencyFn, tau: f64) -> Result<Self> {
        if kind == SchemeKind::None {
            return Ok(Self::none());
        }
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tau must be finite and non-negative, got {tau}"
            )));
        }
        weight.validate()?;
        if let FrequencyFn::Power(p) = weight {
            if p > 2.0 {
                return Err(Error::InvalidParameter(format!(
                    "sampling power must lie in [0, 2], got {p}"
                )));
            }
        }
        Ok(Self { kind, weight, tau })
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn weight(&self) -> &FrequencyFn {
        &self.weight
    }

    /// `+∞` for the no-sampling scheme.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Same distribution and weight, different threshold.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::threshold(self.kind, self.weight.clone(), tau)
    }

    /// `q_i`; `q_0 = 0` by convention.
    pub fn inclusion_prob(&self, i: u64) -> f64 {
        if i == 0 {
            return 0.0;
        }
        self.prob_for_weight(self.weight.eval(i))
    }

    /// `q(w)` at a real frequency, as used when sampling sanitized values.
    pub fn inclusion_prob_real(&self, w: f64) -> Option<f64> {
        if w <= 0.0 {
            return Some(0.0);
        }
        match self.kind {
            SchemeKind::None => Some(1.0),
            _ => self.weight.eval_real(w).map(|fw| self.prob_for_weight(fw)),
        }
    }

    fn prob_for_weight(&self, fw: f64) -> f64 {
        match self.kind {
            SchemeKind::None => 1.0,
            SchemeKind::Ppswor => -(-fw * self.tau).exp_m1(),
            SchemeKind::Pps => (fw * self.tau).min(1.0),
        }
    }

    /// One threshold-sampling decision for a key with weight `f(w)`.
    pub(crate) fn decide<R: rand::Rng>(&self, rng: &mut R, fw: f64) -> bool {
        let u = match self.kind {
            SchemeKind::None => return fw > 0.0,
            SchemeKind::Ppswor => -open_unit(rng).ln(),
            SchemeKind::Pps => open_unit(rng),
        };
        u < fw * self.tau
    }
}

/// Count form: frequency → number of distinct keys with that frequency.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyHistogram {
    counts: BTreeMap<u64, u64>,
}

impl FrequencyHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Zero frequencies are not representable and are rejected.
    pub fn add(&mut self, frequency: u64, count: u64) -> Result<()> {
        if frequency == 0 {
            return Err(Error::InvalidParameter("frequencies must be >= 1".into()));
        }
        if count > 0 {
            *self.counts.entry(frequency).or_insert(0) += count;
        }
        Ok(())
    }

    pub fn from_counts<I: IntoIterator<Item = (u64, u64)>>(counts: I) -> Result<Self> {
        let mut h = Self::new();
        for (f, c) in counts {
            h.add(f, c)?;
        }
        Ok(h)
    }

    /// `(frequency, count)` in increasing frequency.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&f, &c)| (f, c))
    }

    pub fn count(&self, frequency: u64) -> u64 {
        self.counts.get(&frequency).copied().unwrap_or(0)
    }

    pub fn distinct_frequencies(&self) -> usize {
        self.counts.len()
    }

    /// Number of keys `n`.
    pub fn total_keys(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Number of elements `Σ w_x`.
    pub fn total_mass(&self) -> u64 {
        self.iter().map(|(f, c)| f * c).sum()
    }

    pub fn max_frequency(&self) -> Option<u64> {
        self.counts.keys().next_back().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn merge(&mut self, other: &FrequencyHistogram) {
        for (f, c) in other.iter() {
            *self.counts.entry(f).or_insert(0) += c;
        }
    }
}

/// Keyed form: key → frequency, in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyedHistogram {
    entries: IndexMap<String, u64>,
}

impl KeyedHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, K>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, u64)>,
        K: Into<String>,
    {
        let mut h = Self::new();
        for (k, w) in pairs {
            let k = k.into();
            if w == 0 {
                return Err(Error::InvalidParameter(format!(
                    "key `{k}` has frequency 0"
                )));
            }
            if h.entries.insert(k.clone(), w).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate key `{k}`")));
            }
        }
        Ok(h)
    }

    /// Adds one element of `key`.
    pub fn observe(&mut self, key: &str) {
        if let Some(w) = self.entries.get_mut(key) {
            *w += 1;
        } else {
            self.entries.insert(key.to_owned(), 1);
        }
    }

    pub fn get(&self, key: &str) -> Option<u64> {
        self.entries.get(key).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> + '_ {
        self.entries.iter().map(|(k, &w)| (k.as_str(), w))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_counts(&self) -> FrequencyHistogram {
        let mut h = FrequencyHistogram::new();
        for (_, w) in self.iter() {
            h.add(w, 1).expect("keyed frequencies are positive");
        }
        h
    }

    /// Sums frequencies key-wise; used to combine separately aggregated streams.
    pub fn merge(&mut self, other: &KeyedHistogram) {
        for (k, w) in other.iter() {
            *self.entries.entry(k.to_owned()).or_insert(0) += w;
        }
    }
}

/// Single pass over an element stream.
pub fn aggregate_elements<I, S>(stream: I) -> KeyedHistogram
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut h = KeyedHistogram::new();
    for key in stream {
        h.observe(key.as_ref());
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    pairs: Vec<(String, u64)>,
    scheme: SamplingScheme,
}

impl WeightedSample {
    pub fn new(pairs: Vec<(String, u64)>, scheme: SamplingScheme) -> Result<Self> {
        let h = KeyedHistogram::from_pairs(pairs.iter().map(|(k, w)| (k.as_str(), *w)))?;
        debug_assert_eq!(h.len(), pairs.len());
        Ok(Self { pairs, scheme })
    }

    pub fn pairs(&self) -> &[(String, u64)] {
        &self.pairs
    }

    pub fn scheme(&self) -> &SamplingScheme {
        &self.scheme
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Threshold sampling over aggregated data.
pub fn draw_sample(data: &KeyedHistogram, scheme: &SamplingScheme, seed: u64) -> WeightedSample {
    let entries: Vec<(&str, u64)> = data.iter().collect();
    let pairs = entries
        .par_iter()
        .filter(|(key, w)| {
            let mut rng = key_stream(seed, Purpose::Sampling, key);
            scheme.decide(&mut rng, scheme.weight.eval(*w))
        })
        .map(|(key, w)| (key.to_string(), *w))
        .collect();
    WeightedSample {
        pairs,
        scheme: scheme.clone(),
    }
}
