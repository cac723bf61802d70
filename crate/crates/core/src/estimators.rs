//! Per-key estimates for linear statistics `s = Σ_x L(x) g(w_x)`.
//!
//! Every estimator here assigns a value `a_j` to each output token and
//! estimates `s` by `Σ L(x) a_{j_x}` over reported keys. Exact moments follow
//! from the output law of each frequency; statistic-level moments add up over
//! a frequency histogram without enumerating keys.

use crate::error::{Error, Result};
use crate::freq::{SanitizerTable, TableKind};
use crate::keys::ReportingVector;
use crate::sampling::{FrequencyFn, FrequencyHistogram, SamplingScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffKind {
    InverseProbability,
    Unbiased,
    MaxLikelihood,
}

/// `a_j` per token; `None` for tokens no row ever emits.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorCoeffs {
    kind: CoeffKind,
    g: FrequencyFn,
    values: Vec<Option<f64>>,
}

impl EstimatorCoeffs {
    pub fn kind(&self) -> CoeffKind {
        self.kind
    }

    pub fn g(&self) -> &FrequencyFn {
        &self.g
    }

    /// Token 0 always estimates 0.
    pub fn get(&self, token: usize) -> Option<f64> {
        if token == 0 {
            return Some(0.0);
        }
        self.values.get(token).copied().flatten()
    }

    pub fn value(&self, token: usize) -> Result<f64> {
        self.get(token).ok_or(Error::UnknownToken(token))
    }

    /// `(token, a_j)` over tokens `1..` that have a coefficient.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .skip(1)
            .filter_map(|(j, a)| a.map(|a| (j, a)))
    }

    pub fn num_tokens(&self) -> usize {
        self.values.len().saturating_sub(1)
    }
}

/// `a_i = g(i) / q_i` on the non-private sample, whose tokens are the true
/// frequencies `1..=max_frequency`.
pub fn inverse_prob_coeffs(scheme: &SamplingScheme, g: &FrequencyFn, max_frequency: usize) -> Result<EstimatorCoeffs> {
    let mut values = vec![Some(0.0)];
    for i in 1..=max_frequency as u64 {
        let q = scheme.inclusion_prob(i);
        let gi = g.eval(i);
        let a = if q > 0.0 {
            gi / q
        } else if gi == 0.0 {
            0.0
        } else {
            return Err(Error::Inestimable { frequency: i });
        };
        values.push(Some(a));
    }
    Ok(EstimatorCoeffs {
        kind: CoeffKind::InverseProbability,
        g: g.clone(),
        values,
    })
}

/// The unique unbiased coefficients of a lower-triangular integer-token
/// table, by forward substitution on `Σ_{j≤i} π_{i,j} a_j = g(i)`.
pub fn unbiased_coeffs(table: &SanitizerTable, g: &FrequencyFn) -> Result<EstimatorCoeffs> {
    if table.kind() != TableKind::Discrete {
        return Err(Error::UnsupportedTable(
            "unbiased coefficients need a square integer-token table".into(),
        ));
    }
    let m = table.max_frequency();
    let mut values = vec![Some(0.0); m + 1];
    for i in 1..=m {
        let row = table.row(i).unwrap();
        if row.last_token().is_some_and(|j| j > i) {
            return Err(Error::UnsupportedTable(format!("row {i} reports tokens above {i}")));
        }
        let diag = row.prob(i);
        if diag <= 0.0 {
            return Err(Error::ZeroDiagonal(i as u64));
        }
        let known: f64 = row
            .iter()
            .filter(|&(j, _)| j < i)
            .map(|(j, p)| p * values[j].unwrap())
            .sum();
        values[i] = Some((g.eval(i as u64) - known) / diag);
    }
    Ok(EstimatorCoeffs {
        kind: CoeffKind::Unbiased,
        g: g.clone(),
        values,
    })
}

/// `a_j = g(i*) / π_{i*}` with `i* = argmax_h π_{h,j}`, ties to the smaller `h`.
pub fn mle_coeffs(table: &SanitizerTable, rv: &ReportingVector, g: &FrequencyFn) -> Result<EstimatorCoeffs> {
    let values = mle_argmax(table)
        .into_iter()
        .enumerate()
        .map(|(j, h)| match (j, h) {
            (0, _) => Ok(Some(0.0)),
            (_, None) => Ok(None),
            (_, Some(h)) => {
                let pi = rv.pi(h).ok_or(Error::FrequencyOutOfRange {
                    frequency: h as u64,
                    max_frequency: rv.max_frequency() as u64,
                })?;
                Ok(Some(g.eval(h as u64) / pi))
            }
        })
        .collect::<Result<_>>()?;
    Ok(EstimatorCoeffs {
        kind: CoeffKind::MaxLikelihood,
        g: g.clone(),
        values,
    })
}

/// `i* = argmax_h π_{h,j}` for every token, `None` if no row emits it.
pub fn mle_argmax(table: &SanitizerTable) -> Vec<Option<usize>> {
    let t = table.num_tokens();
    let mut best = vec![(0.0f64, None); t + 1];
    for (h, row) in table.rows().iter().enumerate().skip(1) {
        for (j, p) in row.iter() {
            if p > best[j].0 {
                best[j] = (p, Some(h));
            }
        }
    }
    best.into_iter().map(|(_, h)| h).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerKeyMoments {
    pub frequency: u64,
    pub expectation: f64,
    pub bias: f64,
    pub variance: f64,
    pub mse: f64,
}

impl PerKeyMoments {
    /// Assembles moments from `E_i` and `Var_i`.
    pub fn from_mean_var(frequency: u64, g: f64, expectation: f64, variance: f64) -> Self {
        let bias = expectation - g;
        let variance = variance.max(0.0);
        Self {
            frequency,
            expectation,
            bias,
            variance,
            mse: variance + bias * bias,
        }
    }
}

/// Exact moments of the per-key estimate for true frequency `i`.
pub fn per_key_moments(table: &SanitizerTable, coeffs: &EstimatorCoeffs, i: u64) -> Result<PerKeyMoments> {
    let row = usize::try_from(i)
        .ok()
        .and_then(|i| table.row(i))
        .ok_or(Error::FrequencyOutOfRange {
            frequency: i,
            max_frequency: table.max_frequency() as u64,
        })?;
    let g = coeffs.g().eval(i);
    let mut mean = 0.0;
    for (j, p) in row.iter() {
        if p > 0.0 {
            mean += p * coeffs.value(j)?;
        }
    }
    let mut var = row.not_reported() * mean * mean;
    for (j, p) in row.iter() {
        if p > 0.0 {
            var += p * (coeffs.value(j)? - mean).powi(2);
        }
    }
    Ok(PerKeyMoments::from_mean_var(i, g, mean, var))
}

/// Per-key moments for frequencies `0..=max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    rows: Vec<PerKeyMoments>,
}

impl MomentTable {
    pub fn from_rows(rows: Vec<PerKeyMoments>) -> Result<Self> {
        if rows.iter().enumerate().any(|(i, r)| r.frequency != i as u64) {
            return Err(Error::InvalidParameter("moment rows must be indexed 0, 1, 2, ...".into()));
        }
        Ok(Self { rows })
    }

    pub fn compute(table: &SanitizerTable, coeffs: &EstimatorCoeffs) -> Result<Self> {
        let rows = (0..=table.max_frequency() as u64)
            .map(|i| per_key_moments(table, coeffs, i))
            .collect::<Result<_>>()?;
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[PerKeyMoments] {
        &self.rows
    }

    pub fn get(&self, i: u64) -> Option<&PerKeyMoments> {
        usize::try_from(i).ok().and_then(|i| self.rows.get(i))
    }

    pub fn max_frequency(&self) -> u64 {
        self.rows.len() as u64 - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatisticMoments {
    /// `s = Σ L(x) g(w_x)`.
    pub value: f64,
    pub bias: f64,
    pub variance: f64,
    pub mse: f64,
    /// `√MSE / s`; undefined when `s = 0`.
    pub nrmse: Option<f64>,
}

/// Moments of `ŝ` for a selection given as `(frequency, L(x), multiplicity)`.
pub fn weighted_statistic_moments<I>(items: I, moments: &MomentTable, g: &FrequencyFn) -> Result<StatisticMoments>
where
    I: IntoIterator<Item = (u64, f64, u64)>,
{
    let (mut value, mut bias, mut variance) = (0.0, 0.0, 0.0);
    for (w, weight, count) in items {
        let m = moments.get(w).ok_or(Error::FrequencyOutOfRange {
            frequency: w,
            max_frequency: moments.max_frequency(),
        })?;
        let c = count as f64;
        value += c * weight * g.eval(w);
        bias += c * weight * m.bias;
        variance += c * weight * weight * m.variance;
    }
    let mse = variance + bias * bias;
    Ok(StatisticMoments {
        value,
        bias,
        variance,
        mse,
        nrmse: (value > 0.0).then(|| mse.sqrt() / value),
    })
}

/// Selection with unit weights, in count form.
pub fn statistic_moments(selection: &FrequencyHistogram, moments: &MomentTable, g: &FrequencyFn) -> Result<StatisticMoments> {
    weighted_statistic_moments(selection.iter().map(|(w, c)| (w, 1.0, c)), moments, g)
}

/// `Σ L(x) a_{j_x}` over a sanitized output; keys with `L(x) = None` are
/// outside the selection. True frequencies are never consulted.
pub fn estimate_statistic<'a, I, F>(output: I, coeffs: &EstimatorCoeffs, weight: F) -> Result<f64>
where
    I: IntoIterator<Item = (&'a str, usize)>,
    F: Fn(&str) -> Option<f64>,
{
    let mut total = 0.0;
    for (key, token) in output {
        if let Some(l) = weight(key) {
            total += l * coeffs.value(token)?;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq::compute_pij;
    use crate::keys::compute_pi;
    use crate::privacy::PrivacyParams;

    fn p(e: f64, d: f64) -> PrivacyParams {
        PrivacyParams::new(e, d).unwrap()
    }

    #[test]
    fn inverse_prob_examples() {
        let c = inverse_prob_coeffs(&SamplingScheme::none(), &FrequencyFn::Identity, 10).unwrap();
        assert!((1..=10).all(|i| c.get(i) == Some(i as f64)));

        let s = SamplingScheme::ppswor(0.01).unwrap();
        let c = inverse_prob_coeffs(&s, &FrequencyFn::Identity, 5).unwrap();
        let expect = 1.0 / (1.0 - (-0.01f64).exp());
        assert!((c.get(1).unwrap() - expect).abs() < 1e-12);
        assert!((c.get(1).unwrap() - 100.5).abs() < 0.01);

        let zero = SamplingScheme::pps(0.0).unwrap();
        assert!(matches!(
            inverse_prob_coeffs(&zero, &FrequencyFn::Identity, 3),
            Err(Error::Inestimable { frequency: 1 })
        ));
    }

    #[test]
    fn inverse_prob_variance_formula() {
        let s = SamplingScheme::ppswor(0.05).unwrap();
        let g = FrequencyFn::Power(0.5);
        let table = SanitizerTable::nonprivate(&s, 60);
        let c = inverse_prob_coeffs(&s, &g, 60).unwrap();
        for i in 1..=60u64 {
            let m = per_key_moments(&table, &c, i).unwrap();
            let q = s.inclusion_prob(i);
            let gi = g.eval(i);
            assert!(m.bias.abs() <= 1e-12 * gi);
            assert!((m.variance - gi * gi * (1.0 / q - 1.0)).abs() <= 1e-9 * m.variance);
        }
    }

    #[test]
    fn unbiased_first_coefficient_and_negativity() {
        let params = p(0.1, 0.01);
        let table = compute_pij(&params, &SamplingScheme::none(), 200);
        let c = unbiased_coeffs(&table, &FrequencyFn::Identity).unwrap();
        assert!((c.get(1).unwrap() - 100.0).abs() < 1e-9);
        assert!(c.iter().any(|(_, a)| a < 0.0));
        for i in 1..=200u64 {
            let m = per_key_moments(&table, &c, i).unwrap();
            assert!(m.bias.abs() <= 1e-9 * i as f64, "i = {i}: {}", m.bias);
        }
    }

    #[test]
    fn zero_diagonal_is_reported() {
        let t = SanitizerTable::from_dense_rows(&[vec![1.0, 0.0, 0.0], vec![0.5, 0.5, 0.0], vec![0.5, 0.5, 0.0]]).unwrap();
        assert!(matches!(
            unbiased_coeffs(&t, &FrequencyFn::Identity),
            Err(Error::ZeroDiagonal(2))
        ));
    }

    #[test]
    fn mle_integral_l_argmax() {
        let params = p(2f64.ln(), 1.0 / 46.0);
        let m = 40;
        let table = compute_pij(&params, &SamplingScheme::none(), m);
        let rv = compute_pi(&params, &SamplingScheme::none(), m);
        let c = mle_coeffs(&table, &rv, &FrequencyFn::Identity).unwrap();
        let arg = mle_argmax(&table);
        for j in 1..=m - 4 {
            assert_eq!(arg[j], Some(j + 4), "token {j}");
            let expect = (j + 4) as f64 / rv.pi(j + 4).unwrap();
            assert!((c.get(j).unwrap() - expect).abs() < 1e-12);
        }
        assert!(c.iter().all(|(_, a)| a >= 0.0));
    }

    #[test]
    fn zero_row_moments() {
        let t = SanitizerTable::from_dense_rows(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let c = EstimatorCoeffs {
            kind: CoeffKind::Unbiased,
            g: FrequencyFn::Identity,
            values: vec![Some(0.0), Some(3.0)],
        };
        let m = per_key_moments(&t, &c, 1).unwrap();
        assert_eq!((m.expectation, m.bias, m.mse, m.variance), (0.0, -1.0, 1.0, 0.0));
    }

    #[test]
    fn statistic_additivity() {
        let params = p(0.1, 0.01);
        let s = SamplingScheme::none();
        let table = compute_pij(&params, &s, 50);
        let rv = compute_pi(&params, &s, 50);
        let c = mle_coeffs(&table, &rv, &FrequencyFn::Identity).unwrap();
        let mt = MomentTable::compute(&table, &c).unwrap();

        let one = FrequencyHistogram::from_counts([(17, 1)]).unwrap();
        let st = statistic_moments(&one, &mt, &FrequencyFn::Identity).unwrap();
        let pk = mt.get(17).unwrap();
        assert_eq!((st.bias, st.variance), (pk.bias, pk.variance));

        let h = FrequencyHistogram::from_counts([(3, 5), (20, 2), (45, 7)]).unwrap();
        let h2 = FrequencyHistogram::from_counts([(3, 10), (20, 4), (45, 14)]).unwrap();
        let a = statistic_moments(&h, &mt, &FrequencyFn::Identity).unwrap();
        let b = statistic_moments(&h2, &mt, &FrequencyFn::Identity).unwrap();
        assert!((b.bias - 2.0 * a.bias).abs() < 1e-9 * a.bias.abs());
        assert!((b.variance - 2.0 * a.variance).abs() < 1e-9 * a.variance);

        let u = unbiased_coeffs(&table, &FrequencyFn::Identity).unwrap();
        let mu = MomentTable::compute(&table, &u).unwrap();
        let a = statistic_moments(&h, &mu, &FrequencyFn::Identity).unwrap();
        let b = statistic_moments(&h2, &mu, &FrequencyFn::Identity).unwrap();
        assert!((b.nrmse.unwrap() - a.nrmse.unwrap() / 2f64.sqrt()).abs() < 1e-9);

        let empty = FrequencyHistogram::new();
        assert_eq!(statistic_moments(&empty, &mu, &FrequencyFn::Identity).unwrap().nrmse, None);
    }

    #[test]
    fn estimate_uses_only_tokens() {
        let c = inverse_prob_coeffs(&SamplingScheme::pps(0.5).unwrap(), &FrequencyFn::Identity, 4).unwrap();
        let out = [("a", 1usize), ("b", 4)];
        let est = estimate_statistic(out.iter().map(|(k, t)| (*k, *t)), &c, |k| (k == "a").then_some(1.0)).unwrap();
        assert_eq!(est, 2.0);
        let bad = [("a", 9usize)];
        assert!(estimate_statistic(bad.iter().map(|(k, t)| (*k, *t)), &c, |_| Some(1.0)).is_err());
    }
}
