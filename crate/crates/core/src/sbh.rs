//! Stability-based histograms: add `Lap(1/ε)` to each frequency and report
//! the keys whose noisy value reaches `T = (1/ε) ln(1/δ) + 1`. The sampled
//! variant sanitizes first and then samples the noisy values as if they were
//! frequencies.

use quadrature::double_exponential;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{MomentTable, PerKeyMoments};
use crate::expint::{integrate_pieces, laplace_cdf, laplace_density, monomial, multiply, ExpTerm, Pieces};
use crate::ordinal::OutputLaw;
use crate::privacy::PrivacyParams;
use crate::rng::{key_stream, laplace, Purpose};
use crate::sampling::{FrequencyFn, KeyedHistogram, SamplingScheme, SchemeKind};

/// Laplace tails beyond this many noise scales are dropped in quadrature.
const TAIL_SCALES: f64 = 60.0;
const QUAD_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbhConfig {
    params: PrivacyParams,
    threshold: f64,
}

impl SbhConfig {
    pub fn new(params: PrivacyParams) -> Self {
        let eps = params.epsilon();
        Self {
            params,
            threshold: (1.0 / params.delta()).ln() / eps + 1.0,
        }
    }

    pub fn params(&self) -> &PrivacyParams {
        &self.params
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Laplace scale `1/ε`.
    pub fn scale(&self) -> f64 {
        1.0 / self.params.epsilon()
    }
}

/// `φ_i = Pr[i + Lap(1/ε) ≥ T]`.
pub fn sbh_report_prob(config: &SbhConfig, i: f64) -> f64 {
    let eps = config.params.epsilon();
    let t = config.threshold;
    if i <= t {
        0.5 * (-eps * (t - i)).exp()
    } else {
        1.0 - 0.5 * (-eps * (i - t)).exp()
    }
}

/// `(key, w + Lap(1/ε))` for keys whose noisy value reaches `T`, in input order.
pub fn sbh_sanitize(data: &KeyedHistogram, config: &SbhConfig, seed: u64) -> Vec<(String, f64)> {
    let entries: Vec<(&str, u64)> = data.iter().collect();
    entries
        .par_iter()
        .filter_map(|&(key, w)| {
            let mut rng = key_stream(seed, Purpose::LaplaceNoise, key);
            let noisy = w as f64 + laplace(&mut rng, config.scale());
            (noisy >= config.threshold).then(|| (key.to_owned(), noisy))
        })
        .collect()
}

/// A sample over real-valued (sanitized) frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSample {
    pairs: Vec<(String, f64)>,
    scheme: SamplingScheme,
}

impl RealSample {
    /// Wraps pairs read back from disk, e.g. a saved sampled-SbH output.
    pub fn new(pairs: Vec<(String, f64)>, scheme: SamplingScheme) -> Self {
        Self { pairs, scheme }
    }

    pub fn pairs(&self) -> &[(String, f64)] {
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

fn require_real(scheme: &SamplingScheme) -> Result<()> {
    if scheme.kind() != SchemeKind::None && matches!(scheme.weight(), FrequencyFn::Tabulated(_)) {
        return Err(Error::InvalidParameter(
            "tabulated sampling weights have no value at non-integer frequencies".into(),
        ));
    }
    Ok(())
}

/// SbH followed by threshold sampling of the noisy values.
pub fn sampled_sbh(data: &KeyedHistogram, config: &SbhConfig, scheme: &SamplingScheme, seed: u64) -> Result<RealSample> {
    require_real(scheme)?;
    let sanitized = sbh_sanitize(data, config, seed);
    let pairs = sanitized
        .into_par_iter()
        .filter(|(key, w)| {
            let mut rng = key_stream(seed, Purpose::Sampling, key);
            let fw = scheme.weight().eval_real(*w).unwrap_or(0.0);
            scheme.decide(&mut rng, fw)
        })
        .collect();
    Ok(RealSample {
        pairs,
        scheme: scheme.clone(),
    })
}

// q(w) as exponential pieces, when it has that form.
fn inclusion_pieces(scheme: &SamplingScheme) -> Option<Pieces> {
    let full = f64::INFINITY;
    match (scheme.kind(), scheme.weight()) {
        (SchemeKind::None, _) => Some(monomial(1.0, 0)),
        (SchemeKind::Ppswor, FrequencyFn::Identity) => Some(vec![(
            f64::NEG_INFINITY,
            full,
            vec![ExpTerm::new(1.0, 0, 0.0, 0.0), ExpTerm::new(-1.0, 0, -scheme.tau(), 0.0)],
        )]),
        (SchemeKind::Pps, FrequencyFn::Identity) => {
            let tau = scheme.tau();
            if tau == 0.0 {
                return Some(vec![]);
            }
            Some(vec![
                (f64::NEG_INFINITY, 1.0 / tau, vec![ExpTerm::new(tau, 1, 0.0, 0.0)]),
                (1.0 / tau, full, vec![ExpTerm::new(1.0, 0, 0.0, 0.0)]),
            ])
        }
        _ => None,
    }
}

// Where f(w) τ = 1, if the sampling law has a kink there.
fn inclusion_kink(scheme: &SamplingScheme) -> Option<f64> {
    if scheme.kind() != SchemeKind::Pps || scheme.tau() == 0.0 {
        return None;
    }
    match scheme.weight() {
        FrequencyFn::Identity => Some(1.0 / scheme.tau()),
        FrequencyFn::Power(p) if *p > 0.0 => Some(scheme.tau().powf(-1.0 / p)),
        _ => None,
    }
}

/// `∫_T^∞ h(w) Lap(w − i) dw` by double-exponential quadrature, split at the
/// kinks of the integrand and cut where the Laplace tail is negligible.
fn quad_over_support<F: Fn(f64) -> f64 + Sync>(config: &SbhConfig, scheme: &SamplingScheme, i: f64, h: F) -> f64 {
    let t = config.threshold;
    let b = config.scale();
    let hi = t.max(i) + TAIL_SCALES * b;
    let mut cuts = vec![t, hi];
    if i > t {
        cuts.push(i);
    }
    if let Some(k) = inclusion_kink(scheme) {
        if k > t && k < hi {
            cuts.push(k);
        }
    }
    cuts.sort_by(f64::total_cmp);
    let f = |w: f64| h(w) * 0.5 / b * (-(w - i).abs() / b).exp();
    let run = |tol: f64| -> f64 {
        cuts.windows(2)
            .map(|c| double_exponential::integrate(f, c[0], c[1], tol).integral)
            .sum()
    };
    let rough = run(1e-6);
    run((QUAD_RTOL * 1e-3 * rough.abs()).max(1e-300))
}

/// End-to-end reporting probability of sampled SbH at frequency `i`:
/// `∫_T^∞ q(w) Lap(w − i) dw`. Closed form for identity weights.
pub fn sampled_sbh_report_prob(config: &SbhConfig, scheme: &SamplingScheme, i: f64) -> Result<f64> {
    require_real(scheme)?;
    if let Some(q) = inclusion_pieces(scheme) {
        let integrand = multiply(&q, &laplace_density(i, config.scale()));
        return Ok(integrate_pieces(&integrand, config.threshold, f64::INFINITY));
    }
    Ok(quad_over_support(config, scheme, i, |w| {
        scheme.inclusion_prob_real(w).unwrap_or(0.0)
    }))
}

/// Moments of the inverse-probability estimate `g(w*) / q(w*)` on reported
/// and sampled keys, at true frequency `i`.
pub fn sbh_moments(config: &SbhConfig, scheme: &SamplingScheme, g: &FrequencyFn, i: u64) -> Result<PerKeyMoments> {
    require_real(scheme)?;
    let t = config.threshold;
    let q_at_t = scheme.inclusion_prob_real(t).unwrap_or(0.0);
    if q_at_t <= 0.0 {
        return Err(Error::NonIntegrable(format!(
            "inclusion probability vanishes at the threshold {t}; g / q is unbounded on the reported range"
        )));
    }
    if g.eval_real(t).is_none() {
        return Err(Error::NonIntegrable("g must be defined at non-integer frequencies".into()));
    }
    let gr = |w: f64| g.eval_real(w).unwrap_or(0.0);
    let x = i as f64;
    let mean = quad_over_support(config, scheme, x, gr);
    let second = quad_over_support(config, scheme, x, |w| {
        let gw = gr(w);
        gw * gw / scheme.inclusion_prob_real(w).unwrap_or(1.0)
    });
    Ok(PerKeyMoments::from_mean_var(i, g.eval(i), mean, second - mean * mean))
}

/// [`sbh_moments`] for frequencies `0..=max`.
pub fn sbh_moment_table(config: &SbhConfig, scheme: &SamplingScheme, g: &FrequencyFn, max_frequency: u64) -> Result<MomentTable> {
    let rows = (0..=max_frequency)
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                // a frequency-0 key does not exist and contributes nothing
                Ok(PerKeyMoments::from_mean_var(0, 0.0, 0.0, 0.0))
            } else {
                sbh_moments(config, scheme, g, i)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    MomentTable::from_rows(rows)
}

/// `Σ L(x) g(w*) / q(w*)` over a sampled-SbH output.
pub fn sbh_estimate<F>(sample: &RealSample, g: &FrequencyFn, weight: F) -> Result<f64>
where
    F: Fn(&str) -> Option<f64>,
{
    let mut total = 0.0;
    for (key, w) in sample.pairs() {
        if let Some(l) = weight(key) {
            let q = sample.scheme().inclusion_prob_real(*w).unwrap_or(0.0);
            let gw = g
                .eval_real(*w)
                .ok_or_else(|| Error::InvalidParameter("g must be defined at non-integer frequencies".into()))?;
            if q <= 0.0 {
                return Err(Error::ZeroInclusion {
                    key: key.clone(),
                    frequency: w.round() as u64,
                });
            }
            total += l * gw / q;
        }
    }
    Ok(total)
}

/// The SbH output law: not reported with probability `1 − φ_i`, otherwise
/// the continuous value `i + Lap(1/ε)` conditioned on reaching `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbhLaw {
    config: SbhConfig,
}

impl SbhLaw {
    pub fn new(config: SbhConfig) -> Self {
        Self { config }
    }
}

impl OutputLaw for SbhLaw {
    fn max_frequency(&self) -> Option<u64> {
        None
    }

    fn concordance_ordered(&self, i1: u64, i2: u64) -> Result<f64> {
        let (x1, x2) = (i1 as f64, i2 as f64);
        let t = self.config.threshold;
        let b = self.config.scale();
        let (p1, p2) = (sbh_report_prob(&self.config, x1), sbh_report_prob(&self.config, x2));
        // Pr[both reported, X1 > X2] = ∫_T^∞ p1(x) (F2(x) − F2(T)) dx
        let f2_t = 1.0 - p2;
        let inner = multiply(&laplace_density(x1, b), &laplace_cdf(x2, b));
        let both = integrate_pieces(&inner, t, f64::INFINITY) - p1 * f2_t;
        let greater = p1 * (1.0 - p2) + both;
        let less = (1.0 - p1) * p2 + (p1 * p2 - both);
        Ok(0.5 + 0.5 * (greater - less))
    }
}
