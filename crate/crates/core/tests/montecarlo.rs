//! Simulation checks of the exact formulas, run through the public
//! sampling and sanitizing entry points. Tolerances are 4σ.

mod common;

use common::mean_var;
use pws::estimators::{mle_coeffs, per_key_moments};
use pws::sbh::{sampled_sbh, sampled_sbh_report_prob, sbh_moments, SbhConfig};
use pws::*;

fn keyed(n: usize, w: u64) -> KeyedHistogram {
    KeyedHistogram::from_pairs((0..n).map(|k| (format!("key-{k}"), w))).unwrap()
}

fn within(count: usize, n: usize, p: f64) -> bool {
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    (count as f64 - n as f64 * p).abs() <= 4.0 * sd + 1e-9
}

#[test]
fn disjoint_keys_are_sampled_independently() {
    let data = KeyedHistogram::from_pairs([("left", 3u64), ("right", 3u64)]).unwrap();
    let scheme = SamplingScheme::ppswor(0.2).unwrap();
    let q = scheme.inclusion_prob(3);
    let trials = 100_000;
    let (mut a, mut b, mut ab) = (0.0, 0.0, 0.0);
    for seed in 0..trials {
        let s = draw_sample(&data, &scheme, seed);
        let l = s.pairs().iter().any(|p| p.0 == "left") as u8 as f64;
        let r = s.pairs().iter().any(|p| p.0 == "right") as u8 as f64;
        a += l;
        b += r;
        ab += l * r;
    }
    let n = trials as f64;
    let cov = ab / n - (a / n) * (b / n);
    // under independence the covariance estimate has sd ≈ q(1 − q)/√n
    let sd = q * (1.0 - q) / n.sqrt();
    assert!(cov.abs() <= 4.0 * sd, "covariance {cov}, sd {sd}");
}

#[test]
fn end_to_end_key_reporting_matches_pi() {
    let params = PrivacyParams::new(0.1, 0.01).unwrap();
    let scheme = SamplingScheme::ppswor(0.05).unwrap();
    let rv = compute_pi(&params, &scheme, 100);
    let n = 200_000;
    for w in [1u64, 10, 25, 40, 100] {
        let sample = draw_sample(&keyed(n, w), &scheme, 17 + w);
        let kept = sanitize_keys(&sample, &rv, 99 + w).unwrap().len();
        let p = rv.pi(w as usize).unwrap();
        assert!(within(kept, n, p), "w={w}: kept {kept} of {n}, expected rate {p}");
    }
}

#[test]
fn end_to_end_tokens_follow_the_table_row() {
    let params = PrivacyParams::new(0.1, 0.01).unwrap();
    let n = 200_000;
    for scheme in [SamplingScheme::none(), SamplingScheme::ppswor(0.1).unwrap()] {
        let table = pws::freq::default_table(&params, &scheme, 60).unwrap();
        for w in [5u64, 20, 60] {
            let sample = draw_sample(&keyed(n, w), &scheme, 5 * w);
            let out = sanitize_frequencies(&sample, &table, 11 * w).unwrap();
            let mut counts = vec![0usize; table.num_tokens() + 1];
            for (_, j) in &out {
                counts[*j] += 1;
            }
            counts[0] = n - out.len();
            let row = table.dense_row(w as usize).unwrap();
            for (j, (&c, &p)) in counts.iter().zip(&row).enumerate() {
                assert!(within(c, n, p), "{scheme:?} w={w} token {j}: {c} vs {}", n as f64 * p);
            }
        }
    }
}

#[test]
fn mle_moments_match_simulation() {
    let params = PrivacyParams::new(0.1, 0.01).unwrap();
    let scheme = SamplingScheme::ppswor(0.05).unwrap();
    let m = 120;
    let table = pws::freq::default_table(&params, &scheme, m).unwrap();
    let coeffs = mle_coeffs(&table, &compute_pi(&params, &scheme, m), &FrequencyFn::Identity).unwrap();
    let n = 400_000;
    for w in [3u64, 30, 80] {
        let exact = per_key_moments(&table, &coeffs, w).unwrap();
        let sample = draw_sample(&keyed(n, w), &scheme, w);
        let out = sanitize_frequencies(&sample, &table, 1000 + w).unwrap();
        let mut values = vec![0.0; n];
        for (k, (_, j)) in out.iter().enumerate() {
            values[k] = coeffs.value(*j).unwrap();
        }
        let (mean, _) = mean_var(&values);
        let se = (exact.variance / n as f64).sqrt();
        assert!((mean - exact.expectation).abs() <= 4.0 * se, "w={w}: {mean} vs {}", exact.expectation);
    }
}

#[test]
fn sampled_sbh_matches_its_moments_at_the_threshold() {
    let config = SbhConfig::new(PrivacyParams::new(0.1, 0.01).unwrap());
    let scheme = SamplingScheme::pps(0.02).unwrap();
    let w = config.threshold().ceil() as u64;
    let n = 1_000_000;
    let sample = sampled_sbh(&keyed(n, w), &config, &scheme, 2024).unwrap();

    let p = sampled_sbh_report_prob(&config, &scheme, w as f64).unwrap();
    assert!(within(sample.len(), n, p), "reported {} of {n}, rate {p}", sample.len());

    let mut values = vec![0.0; n];
    for (k, (_, x)) in sample.pairs().iter().enumerate() {
        values[k] = x / scheme.inclusion_prob_real(*x).unwrap();
    }
    let (mean, var) = mean_var(&values);
    let exact = sbh_moments(&config, &scheme, &FrequencyFn::Identity, w).unwrap();
    let se = (exact.variance / n as f64).sqrt();
    assert!((mean - exact.expectation).abs() <= 4.0 * se, "mean {mean} vs {}", exact.expectation);
    // loose spread check on the variance: relative error of a sample
    // variance is about sqrt(2/n) times the kurtosis factor
    assert!((var / exact.variance - 1.0).abs() < 0.05, "var {var} vs {}", exact.variance);
}

#[test]
fn unsampled_sbh_reports_at_phi() {
    let config = SbhConfig::new(PrivacyParams::new(0.1, 0.01).unwrap());
    let n = 300_000;
    for w in [10u64, 47, 80] {
        let out = pws::sbh::sbh_sanitize(&keyed(n, w), &config, w);
        let p = pws::sbh::sbh_report_prob(&config, w as f64);
        assert!(within(out.len(), n, p), "w={w}: {} vs rate {p}", out.len());
    }
}
