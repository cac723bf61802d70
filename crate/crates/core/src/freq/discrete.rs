use crate::keys::compute_pi;
use crate::privacy::PrivacyParams;
use crate::sampling::SamplingScheme;

use super::{SanitizerTable, TableRow};

/// Integer-token table. Row `i` puts `1 − π_i` on token 0 and splits `π_i`
/// over tokens `1..=i`: a lower-bound pass first places the least mass each
/// token needs so that row `i − 1` cannot exceed `e^ε` times row `i` by more
/// than `δ` on any prefix, then the remaining mass is pushed down from token
/// `i`, each token filled to the most row `i − 1` allows.
pub fn compute_pij(params: &PrivacyParams, scheme: &SamplingScheme, max_frequency: usize) -> SanitizerTable {
    let rv = compute_pi(params, scheme, max_frequency);
    let pi = rv.as_slice();
    let e = params.epsilon().exp();
    let e_inv = 1.0 / e;
    let delta = params.delta();

    let mut rows = vec![TableRow::from_dense(&[1.0])];
    let mut prev = vec![1.0];
    for i in 1..=max_frequency {
        let mut cur = vec![0.0; i + 1];
        cur[0] = 1.0 - pi[i];

        let extra = (e_inv * prev[0] - cur[0]).max(0.0);
        let mut prev_prefix = 0.0;
        let mut cur_prefix = 0.0;
        for j in 1..i {
            prev_prefix += prev[j];
            let v = e_inv * (prev_prefix - delta) - cur_prefix + extra;
            cur[j] = v.max(0.0);
            cur_prefix += cur[j];
        }

        let mut remaining = pi[i] - cur_prefix;
        let mut prev_suffix = 0.0;
        let mut cur_suffix = 0.0;
        for j in (1..=i).rev() {
            if remaining <= 0.0 {
                break;
            }
            if j < i {
                prev_suffix += prev[j];
            }
            let cap = e * prev_suffix + delta - cur_suffix;
            if cap - cur[j] <= remaining {
                remaining -= cap - cur[j];
                cur[j] = cap;
            } else {
                cur[j] += remaining;
                remaining = 0.0;
            }
            cur_suffix += cur[j];
        }

        rows.push(TableRow::from_dense(&cur));
        prev = cur;
    }
    SanitizerTable::new(rows, max_frequency, None, Some(*params), Some(scheme.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(e: f64, d: f64) -> PrivacyParams {
        PrivacyParams::new(e, d).unwrap()
    }

    #[test]
    fn first_row_is_all_top() {
        let params = p(0.1, 0.01);
        let t = compute_pij(&params, &SamplingScheme::none(), 5);
        let r = t.row(1).unwrap();
        assert!((r.prob(1) - 0.01).abs() < 1e-18);
        assert!((r.not_reported() - 0.99).abs() < 1e-15);
        assert_eq!(t.num_tokens(), 5);
    }

    #[test]
    fn marginals_and_dp() {
        for params in [p(0.1, 0.01), p(0.5, 0.05), p(1.0, 1e-4)] {
            for scheme in [
                SamplingScheme::none(),
                SamplingScheme::ppswor(0.1).unwrap(),
                SamplingScheme::pps(0.05).unwrap(),
            ] {
                let m = 150;
                let t = compute_pij(&params, &scheme, m);
                let rv = compute_pi(&params, &scheme, m);
                for i in 0..=m {
                    let r = t.row(i).unwrap();
                    assert!((r.reported_mass() - rv.pi(i).unwrap()).abs() < 1e-12, "row {i}");
                    assert!(r.last_token().is_none_or(|j| j <= i));
                    assert!(r.probs().iter().all(|&x| x >= 0.0));
                }
                assert!(t.verify_dp(&params).satisfied);
                assert!(t.dominance_violation() <= 1e-12);
            }
        }
    }

    #[test]
    fn lower_triangular_closed_form() {
        // L = 4: π_{i,j} = δ e^{dε} for d = i − j ≤ L, δ e^{(2L−d)ε} up to 2L, then 0
        let params = p(2f64.ln(), 1.0 / 46.0);
        let t = compute_pij(&params, &SamplingScheme::none(), 30);
        for i in 1..=30usize {
            for j in 1..=i {
                let d = (i - j) as i32;
                let expect = match d {
                    0..=4 => 2f64.powi(d) / 46.0,
                    5..=8 => 2f64.powi(8 - d) / 46.0,
                    _ => 0.0,
                };
                assert!((t.prob(i, j) - expect).abs() < 1e-12, "({i}, {j})");
            }
        }
    }
}
