// Estimate a subset sum from a private release with the MLE and the unbiased
// coefficients, and compare with the exact moments. The unbiased coefficients
// need the square integer-token table, and their variance grows
// exponentially with the frequency range.

use pws::estimators::{estimate_statistic, mle_coeffs, statistic_moments, unbiased_coeffs, MomentTable};
use pws::freq::default_table;
use pws::*;

fn main() -> Result<()> {
    let params = PrivacyParams::new(0.5, 0.01)?;
    let scheme = SamplingScheme::ppswor(0.1)?;
    let data = KeyedHistogram::from_pairs((0..20_000u64).map(|k| (format!("k{k}"), 1 + (k * k) % 40)))?;
    let m = 40;

    let rv = compute_pi(&params, &scheme, m);
    let g = FrequencyFn::Identity;
    let even = |key: &str| key[1..].parse::<u64>().ok().filter(|k| k % 2 == 0).map(|_| 1.0);
    let truth: u64 = data.iter().filter(|(k, _)| even(k).is_some()).map(|(_, w)| w).sum();

    let sample = draw_sample(&data, &scheme, 11);
    let selection = FrequencyHistogram::from_counts(
        data.iter().filter(|(k, _)| even(k).is_some()).map(|(_, w)| (w, 1)),
    )?;
    let (auto, integer) = (default_table(&params, &scheme, m)?, compute_pij(&params, &scheme, m));
    for (name, table, coeffs) in [
        ("mle", &auto, mle_coeffs(&auto, &rv, &g)?),
        ("unbiased", &integer, unbiased_coeffs(&integer, &g)?),
    ] {
        let out = sanitize_frequencies(&sample, table, 12)?;
        let est = estimate_statistic(out.iter().map(|(k, j)| (k.as_str(), *j)), &coeffs, even)?;
        let exact = statistic_moments(&selection, &MomentTable::compute(table, &coeffs)?, &g)?;
        println!(
            "{name:>8}: estimate {est:.0} truth {truth} bias {:.1} nrmse {:.4}",
            exact.bias,
            exact.nrmse.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
