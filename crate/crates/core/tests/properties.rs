mod common;

use common::l_oracle;
use proptest::prelude::*;
use pws::ordinal::concordance_prob;
use pws::sbh::{sbh_report_prob, SbhConfig};
use pws::*;

fn distribution(len: usize) -> impl Strategy<Value = DiscreteDistribution> {
    prop::collection::vec(0.0f64..1.0, len).prop_filter_map("all zero", |raw| {
        let total: f64 = raw.iter().sum();
        (total > 1e-9).then(|| DiscreteDistribution::new(raw.iter().map(|x| x / total).collect()).ok())?
    })
}

fn pair(max_len: usize) -> impl Strategy<Value = (DiscreteDistribution, DiscreteDistribution)> {
    (1..=max_len).prop_flat_map(|n| (distribution(n), distribution(n)))
}

fn params() -> impl Strategy<Value = PrivacyParams> {
    (0.01f64..2.0, -7.0f64..0.0).prop_map(|(e, d)| PrivacyParams::new(e, 10f64.powf(d)).unwrap())
}

fn scheme() -> impl Strategy<Value = SamplingScheme> {
    prop_oneof![
        Just(SamplingScheme::none()),
        (1e-4f64..2.0).prop_map(|t| SamplingScheme::ppswor(t).unwrap()),
        (1e-4f64..2.0).prop_map(|t| SamplingScheme::pps(t).unwrap()),
        (1e-4f64..2.0, 0.0f64..2.0)
            .prop_map(|(t, p)| SamplingScheme::threshold(SchemeKind::Ppswor, FrequencyFn::Power(p), t).unwrap()),
    ]
}

// max over all output sets S of P(S) − e^ε Q(S)
fn brute_force_divergence(p: &[f64], q: &[f64], eps: f64) -> f64 {
    let n = p.len();
    (0u32..1 << n)
        .map(|mask| {
            (0..n)
                .filter(|&j| mask & (1 << j) != 0)
                .map(|j| p[j] - eps.exp() * q[j])
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn hockey_stick_is_the_worst_output_set((p, q) in pair(15), eps in 0.0f64..3.0) {
        let fast = hockey_stick(&p, &q, eps).unwrap();
        let slow = brute_force_divergence(p.probs(), q.probs(), eps);
        prop_assert!((fast - slow).abs() <= 1e-12, "{fast} vs {slow}");
    }

    #[test]
    fn hockey_stick_shrinks_with_epsilon((p, q) in pair(12), a in 0.0f64..2.0, b in 0.0f64..2.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(hockey_stick(&p, &q, hi).unwrap() <= hockey_stick(&p, &q, lo).unwrap() + 1e-15);
        prop_assert_eq!(hockey_stick(&p, &p, lo).unwrap(), 0.0);
    }

    #[test]
    fn reporting_probabilities_are_the_largest_dp_step(p in params(), s in scheme(), m in 1usize..400) {
        let rv = compute_pi(&p, &s, m);
        let (e, d) = (p.epsilon().exp(), p.delta());
        prop_assert_eq!(rv.pi(0), Some(0.0));
        for i in 1..=m {
            let (prev, cur, q) = (rv.pi(i - 1).unwrap(), rv.pi(i).unwrap(), rv.q(i).unwrap());
            prop_assert!(cur <= q);
            prop_assert!(cur <= e * prev + d + 1e-15);
            prop_assert!(1.0 - prev <= e * (1.0 - cur) + d + 1e-12);
            // one of the three constraints is tight
            let bound = q.min(e * prev + d).min(1.0 + (prev + d - 1.0) / e);
            prop_assert!((cur - bound).abs() <= 1e-15, "i={i}: {cur} vs {bound}");
            prop_assert!(cur >= prev - 1e-15);
        }
    }

    #[test]
    fn deficits_are_bounded(p in params(), s in scheme()) {
        let l = l_oracle(p.epsilon(), p.delta()).ceil() as usize;
        let rv = compute_pi(&p, &s, 2 * l + 600);
        prop_assert!(rv.deficit_count() <= 2 * l + 1, "{} > {}", rv.deficit_count(), 2 * l + 1);
    }

    #[test]
    fn larger_delta_never_reports_less(e in 0.01f64..1.0, d1 in -8.0f64..0.0, d2 in -8.0f64..0.0, s in scheme()) {
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let a = compute_pi(&PrivacyParams::new(e, 10f64.powf(lo)).unwrap(), &s, 300);
        let b = compute_pi(&PrivacyParams::new(e, 10f64.powf(hi)).unwrap(), &s, 300);
        for i in 0..=300 {
            prop_assert!(b.pi(i).unwrap() >= a.pi(i).unwrap() - 1e-15);
        }
    }

    #[test]
    fn inclusion_is_monotone(s in scheme(), factor in 1.0f64..5.0, i in 0u64..10_000) {
        prop_assert!(s.inclusion_prob(i + 1) >= s.inclusion_prob(i));
        if s.kind() != SchemeKind::None {
            let bigger = s.with_tau(s.tau() * factor).unwrap();
            prop_assert!(bigger.inclusion_prob(i) >= s.inclusion_prob(i));
        }
    }

    #[test]
    fn ppswor_identity_is_memoryless(tau in 1e-5f64..3.0, i in 1u64..500) {
        let s = SamplingScheme::ppswor(tau).unwrap();
        let q1 = s.inclusion_prob(1);
        let want = 1.0 - (1.0 - q1).powi(i as i32);
        prop_assert!((s.inclusion_prob(i) - want).abs() <= 1e-12);
    }

    #[test]
    fn concordance_is_antisymmetric((p, q) in pair(10)) {
        let a = concordance_prob(&p, &q).unwrap();
        let b = concordance_prob(&q, &p).unwrap();
        prop_assert_eq!(a + b, 1.0);
        prop_assert_eq!(concordance_prob(&p, &p).unwrap(), 0.5);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn dominance_implies_concordance(q in (1usize..10).prop_flat_map(distribution)) {
        // q shifted up by one token dominates q
        let n = q.len();
        let mut up = vec![0.0; n + 1];
        for (j, &x) in q.probs().iter().enumerate() {
            up[j + 1] += x;
        }
        let mut same = q.probs().to_vec();
        same.push(0.0);
        let up = DiscreteDistribution::new(up).unwrap();
        let same = DiscreteDistribution::new(same).unwrap();
        prop_assert!(concordance_prob(&up, &same).unwrap() >= 0.5);
    }

    #[test]
    fn tables_are_private_and_ordered(p in params(), s in scheme(), m in 1usize..40) {
        let rv = compute_pi(&p, &s, m);
        for t in [compute_pij(&p, &s, m), compute_pdfs(&p, &s, m).unwrap().discretize()] {
            prop_assert!(t.verify_dp(&p).satisfied, "{:?}", t.verify_dp(&p).worst);
            prop_assert!(t.dominance_violation() <= 1e-12);
            for i in 0..=m {
                prop_assert!((t.row(i).unwrap().reported_mass() - rv.pi(i).unwrap()).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn interval_tables_use_at_most_three_tokens_per_frequency(p in params(), s in scheme(), m in 1usize..60) {
        let t = compute_pdfs(&p, &s, m).unwrap().discretize();
        prop_assert!(t.num_tokens() <= 3 * m);
    }

    #[test]
    fn sbh_reporting_is_monotone(p in params(), i in 1u32..2000) {
        let c = SbhConfig::new(p);
        let (a, b) = (sbh_report_prob(&c, f64::from(i)), sbh_report_prob(&c, f64::from(i + 1)));
        prop_assert!(a <= b && b <= 1.0);
    }

    #[test]
    fn reals_survive_text(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(pws::io::fmt_real(x).parse::<f64>().unwrap(), x);
    }
}
