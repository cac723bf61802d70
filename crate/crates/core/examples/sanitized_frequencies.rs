// Frequency tables: the integer-token table and the interval table built from
// piecewise-constant densities, then one sanitized release.

use pws::*;

fn main() -> Result<()> {
    let params = PrivacyParams::new(0.5, 0.05)?;
    let scheme = SamplingScheme::ppswor(0.2)?;
    let m = 12;

    let integer = compute_pij(&params, &scheme, m);
    let family = compute_pdfs(&params, &scheme, m)?;
    let intervals = family.discretize();
    for (name, t) in [("integer", &integer), ("intervals", &intervals)] {
        let report = t.verify_dp(&params);
        println!("{name}: {} tokens, private={}, worst={:.2e}", t.num_tokens(), report.satisfied, report.worst_divergence());
    }

    let pdf = family.get(6).unwrap();
    println!("density for i=6: atom at 0 = {:.4}", pdf.atom0());
    for s in pdf.segments() {
        println!("  ({:.3}, {:.3}] density {:.5}", s.left, s.right, s.density);
    }

    let data = KeyedHistogram::from_pairs((0..20u64).map(|k| (format!("user{k}"), 1 + k % m as u64)))?;
    let sample = draw_sample(&data, &scheme, 3);
    for (key, token) in sanitize_frequencies(&sample, &intervals, 4)? {
        let (lo, hi) = intervals.token_interval(token).unwrap();
        println!("{key}: token {token} in ({lo:.2}, {hi:.2}]");
    }
    Ok(())
}
