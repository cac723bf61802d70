//! Optimal key-reporting probabilities.
//!
//! `π_i` is the end-to-end probability that a key of frequency `i` is sampled
//! and then reported; a sampled key is kept with `p_i = π_i / q_i`. The
//! largest `π_i` compatible with `(ε, δ)`-DP, given `π_{i−1}`, is the
//! three-way minimum in [`next_reporting_prob`]. Iterating it from `π_0 = 0`
//! gives a non-decreasing sequence that is optimal at every frequency.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::privacy::PrivacyParams;
use crate::rng::{key_stream, open_unit, Purpose};
use crate::sampling::{FrequencyFn, SamplingScheme, SchemeKind, WeightedSample};

/// `min{q_i, e^ε π_{i−1} + δ, 1 + e^{−ε}(π_{i−1} + δ − 1)}`.
pub fn next_reporting_prob(params: &PrivacyParams, prev: f64, q: f64) -> f64 {
    let eps = params.epsilon();
    let delta = params.delta();
    q.min(eps.exp() * prev + delta)
        .min(1.0 + (-eps).exp() * (prev + delta - 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportingVector {
    pi: Vec<f64>,
    q: Vec<f64>,
    params: PrivacyParams,
    scheme: SamplingScheme,
}

impl ReportingVector {
    pub fn compute(params: &PrivacyParams, scheme: &SamplingScheme, max_frequency: usize) -> Self {
        let mut rv = Self {
            pi: vec![0.0],
            q: vec![0.0],
            params: *params,
            scheme: scheme.clone(),
        };
        rv.extend_to(max_frequency);
        rv
    }

    /// Continues the recurrence up to `max_frequency`; no-op if already there.
    pub fn extend_to(&mut self, max_frequency: usize) {
        for i in self.pi.len()..=max_frequency {
            let q = self.scheme.inclusion_prob(i as u64);
            let prev = self.pi[i - 1];
            self.pi.push(next_reporting_prob(&self.params, prev, q));
            self.q.push(q);
        }
    }

    pub fn max_frequency(&self) -> usize {
        self.pi.len() - 1
    }

    pub fn params(&self) -> &PrivacyParams {
        &self.params
    }

    pub fn scheme(&self) -> &SamplingScheme {
        &self.scheme
    }

    /// `π_0..=π_max`.
    pub fn as_slice(&self) -> &[f64] {
        &self.pi
    }

    pub fn pi(&self, i: usize) -> Option<f64> {
        self.pi.get(i).copied()
    }

    pub fn q(&self, i: usize) -> Option<f64> {
        self.q.get(i).copied()
    }

    /// Conditional keep probability `p_i = π_i / q_i` for a sampled key.
    pub fn keep_prob(&self, i: usize) -> Option<f64> {
        let (pi, q) = (self.pi(i)?, self.q(i)?);
        Some(if q > 0.0 { (pi / q).min(1.0) } else { 0.0 })
    }

    /// Number of frequencies `1..=max` with `π_i < q_i`.
    pub fn deficit_count(&self) -> usize {
        (1..self.pi.len()).filter(|&i| self.pi[i] < self.q[i]).count()
    }

    fn lookup(&self, frequency: u64) -> Result<(f64, f64)> {
        let i = usize::try_from(frequency).unwrap_or(usize::MAX);
        match (self.pi(i), self.q(i)) {
            (Some(pi), Some(q)) => Ok((pi, q)),
            _ => Err(Error::FrequencyOutOfRange {
                frequency,
                max_frequency: self.max_frequency() as u64,
            }),
        }
    }
}

pub fn compute_pi(params: &PrivacyParams, scheme: &SamplingScheme, max_frequency: usize) -> ReportingVector {
    ReportingVector::compute(params, scheme, max_frequency)
}

/// The published three-branch closed form for `q ≡ 1`, with `L` from
/// [`PrivacyParams::l_value`]:
///
/// ```text
///   δ (e^{εi} − 1)/(e^ε − 1)              i ≤ L + 1
///   1 − δ (e^{ε(2L+2−i)} − 1)/(e^ε − 1)   L + 1 ≤ i ≤ 2L + 1
///   1                                     i ≥ 2L + 2
/// ```
///
/// It agrees with the recurrence for `i ≤ L + 1` and for `i ≥ 2L + 2`. Solving
/// the recurrence forward instead gives `1 − δ(e^{ε(2L+1−i)} − 1)/(e^ε − 1)`
/// on the middle range with saturation at `2L + 1`, so the middle branch is
/// off by one frequency. [`compute_pi`] is authoritative.
pub fn pi_star_closed_form(params: &PrivacyParams, i: u64) -> f64 {
    let eps = params.epsilon();
    let delta = params.delta();
    let l = params.l_value();
    let i = i as f64;
    let em1 = eps.exp_m1();
    if i <= l + 1.0 {
        delta * (eps * i).exp_m1() / em1
    } else if i <= 2.0 * l + 1.0 {
        1.0 - delta * (eps * (2.0 * l + 2.0 - i)).exp_m1() / em1
    } else {
        1.0
    }
}

/// Two-phase shape of the ppswor solution: the `q ≡ 1` solution `π*` below
/// the crossover `ℓ = min{i : π*_i > q_i}` and `q` from `ℓ` on.
#[derive(Debug, Clone, PartialEq)]
pub struct PpsworStructure {
    /// `None` when `π*_i ≤ q_i` for every frequency in range.
    pub crossover: Option<usize>,
    /// `max_i |π_i − expected_i|` over `1..=max_frequency`.
    pub max_deviation: f64,
}

impl PpsworStructure {
    pub fn holds(&self) -> bool {
        self.max_deviation <= 1e-12
    }
}

/// Uses the `q ≡ 1` recurrence output as `π*`.
pub fn ppswor_structure(
    params: &PrivacyParams,
    scheme: &SamplingScheme,
    max_frequency: usize,
) -> Result<PpsworStructure> {
    if scheme.kind() != SchemeKind::Ppswor || *scheme.weight() != FrequencyFn::Identity {
        return Err(Error::NotPpsworIdentity);
    }
    let star = compute_pi(params, &SamplingScheme::none(), max_frequency);
    let rv = compute_pi(params, scheme, max_frequency);
    let crossover = (1..=max_frequency).find(|&i| star.pi[i] > rv.q[i]);
    let max_deviation = (1..=max_frequency)
        .map(|i| {
            let expect = match crossover {
                Some(l) if i >= l => rv.q[i],
                _ => star.pi[i],
            };
            (rv.pi[i] - expect).abs()
        })
        .fold(0.0, f64::max);
    Ok(PpsworStructure {
        crossover,
        max_deviation,
    })
}

pub(crate) fn check_scheme(sample: &SamplingScheme, table: &SamplingScheme) -> Result<()> {
    if sample != table {
        return Err(Error::InvalidParameter(format!(
            "sample was drawn with {sample:?} but the table was built for {table:?}"
        )));
    }
    Ok(())
}

/// Keeps each sampled key independently with probability `π_{w_x} / q_{w_x}`.
/// The output is a subset of the sampled keys, in sample order.
pub fn sanitize_keys(sample: &WeightedSample, rv: &ReportingVector, seed: u64) -> Result<Vec<String>> {
    check_scheme(sample.scheme(), rv.scheme())?;
    let decisions: Vec<Option<String>> = sample
        .pairs()
        .par_iter()
        .map(|(key, w)| {
            let (pi, q) = rv.lookup(*w)?;
            if q <= 0.0 {
                return Err(Error::ZeroInclusion {
                    key: key.clone(),
                    frequency: *w,
                });
            }
            let keep = pi / q;
            if keep >= 1.0 {
                return Ok(Some(key.clone()));
            }
            let mut rng = key_stream(seed, Purpose::KeySanitizer, key);
            Ok((open_unit(&mut rng) < keep).then(|| key.clone()))
        })
        .collect::<Result<_>>()?;
    Ok(decisions.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(e: f64, d: f64) -> PrivacyParams {
        PrivacyParams::new(e, d).unwrap()
    }

    #[test]
    fn recurrence_first_steps() {
        let p = params(0.1, 0.01);
        let rv = compute_pi(&p, &SamplingScheme::none(), 10);
        assert_eq!(rv.pi(0), Some(0.0));
        assert!((rv.pi(1).unwrap() - 0.01).abs() < 1e-18);
        let expect = 0.01 * (0.1f64.exp() + 1.0);
        assert!((rv.pi(2).unwrap() - expect).abs() < 1e-17);
        assert!((rv.pi(2).unwrap() - 0.021_051_709_180_756_5).abs() < 1e-15);
    }

    #[test]
    fn ppswor_small_tau_reports_q() {
        let p = params(0.1, 0.01);
        let s = SamplingScheme::ppswor(0.01).unwrap();
        let rv = compute_pi(&p, &s, 50);
        assert_eq!(rv.pi(1), rv.q(1));
        assert_eq!(rv.keep_prob(1), Some(1.0));
    }

    #[test]
    fn closed_form_examples() {
        let p = params(0.1, 0.01);
        assert!((pi_star_closed_form(&p, 1) - 0.01).abs() < 1e-17);
        let two = 0.01 * (0.2f64.exp() - 1.0) / (0.1f64.exp() - 1.0);
        assert!((pi_star_closed_form(&p, 2) - two).abs() < 1e-16);
        let rv = compute_pi(&p, &SamplingScheme::none(), 2);
        assert!((pi_star_closed_form(&p, 2) - rv.pi(2).unwrap()).abs() < 1e-16);
        let l = p.l_value();
        let sat = (2.0 * l + 2.0).ceil() as u64;
        for i in sat..sat + 20 {
            assert_eq!(pi_star_closed_form(&p, i), 1.0);
        }
    }

    #[test]
    fn closed_form_seam_deviates_by_one_step() {
        // L = 4 exactly; the recurrence saturates at 2L + 1 = 9.
        let p = params(2f64.ln(), 1.0 / 46.0);
        let rv = compute_pi(&p, &SamplingScheme::none(), 12);
        assert_eq!(rv.pi(9), Some(1.0));
        assert!(rv.pi(8).unwrap() < 1.0);
        // middle branch at i = L + 2 = 6: closed form 1 - 15/46, recurrence 1 - 7/46
        assert!((pi_star_closed_form(&p, 6) - (1.0 - 15.0 / 46.0)).abs() < 1e-12);
        assert!((rv.pi(6).unwrap() - (1.0 - 7.0 / 46.0)).abs() < 1e-12);
    }

    #[test]
    fn extend_matches_direct() {
        let p = params(0.3, 1e-3);
        let s = SamplingScheme::pps(0.02).unwrap();
        let mut rv = compute_pi(&p, &s, 10);
        rv.extend_to(100);
        assert_eq!(rv, compute_pi(&p, &s, 100));
        rv.extend_to(50);
        assert_eq!(rv.max_frequency(), 100);
    }

    #[test]
    fn ppswor_structure_examples() {
        let p = params(0.1, 0.01);
        let s = SamplingScheme::ppswor(0.01).unwrap();
        let st = ppswor_structure(&p, &s, 500).unwrap();
        assert_eq!(st.crossover, Some(1));
        assert!(st.holds());

        let p = params(0.1, 0.001);
        let s = SamplingScheme::ppswor(1.0).unwrap();
        let st = ppswor_structure(&p, &s, 500).unwrap();
        let star = compute_pi(&p, &SamplingScheme::none(), 500);
        let scan = (1..=500).find(|&i| star.pi(i).unwrap() > 1.0 - (-(i as f64)).exp());
        assert_eq!(st.crossover, scan);
        assert!(st.holds());

        // q_1 far above π*_1 and a range too short to catch up
        let s = SamplingScheme::ppswor(5.0).unwrap();
        let st = ppswor_structure(&p, &s, 3).unwrap();
        assert_eq!(st.crossover, None);
        assert!(st.holds());

        assert!(matches!(
            ppswor_structure(&p, &SamplingScheme::pps(0.1).unwrap(), 10),
            Err(Error::NotPpsworIdentity)
        ));
    }

    #[test]
    fn sanitize_keys_edge_cases() {
        let p = params(0.1, 0.01);
        let s = SamplingScheme::ppswor(0.01).unwrap();
        let rv = compute_pi(&p, &s, 100);
        let empty = WeightedSample::new(vec![], s.clone()).unwrap();
        assert!(sanitize_keys(&empty, &rv, 1).unwrap().is_empty());

        // π = q at small τ, so every sampled key survives
        let sample = WeightedSample::new(
            (1..=100).map(|i| (format!("k{i}"), i)).collect(),
            s.clone(),
        )
        .unwrap();
        assert_eq!(sanitize_keys(&sample, &rv, 1).unwrap().len(), 100);

        let big = WeightedSample::new(vec![("x".into(), 101)], s).unwrap();
        assert!(matches!(
            sanitize_keys(&big, &rv, 1),
            Err(Error::FrequencyOutOfRange { frequency: 101, max_frequency: 100 })
        ));
    }

    #[test]
    fn sanitize_keys_rejects_scheme_mismatch() {
        let p = params(0.1, 0.01);
        let rv = compute_pi(&p, &SamplingScheme::none(), 10);
        let sample = WeightedSample::new(vec![("a".into(), 3)], SamplingScheme::pps(0.1).unwrap()).unwrap();
        assert!(sanitize_keys(&sample, &rv, 0).is_err());
    }

    #[test]
    fn keep_rate_matches_conditional_probability() {
        let p = params(0.1, 0.01);
        let s = SamplingScheme::ppswor(0.2).unwrap();
        let rv = compute_pi(&p, &s, 30);
        let i = 12u64;
        let keep = rv.keep_prob(i as usize).unwrap();
        assert!(keep < 1.0 && keep > 0.0);
        let n = 1_000_000usize;
        let sample = WeightedSample::new((0..n).map(|k| (format!("k{k}"), i)).collect(), s).unwrap();
        let kept = sanitize_keys(&sample, &rv, 5).unwrap().len() as f64;
        let sd = (n as f64 * keep * (1.0 - keep)).sqrt();
        assert!((kept - n as f64 * keep).abs() < 4.0 * sd, "kept {kept}, expected {}", n as f64 * keep);
    }
}
