// ppswor and pps inclusion curves, and how sampling lifts the reporting
// probabilities at low frequency.

use pws::*;

fn main() -> Result<()> {
    let params = PrivacyParams::new(0.1, 0.01)?;
    let schemes = [
        ("none", SamplingScheme::none()),
        ("ppswor 0.05", SamplingScheme::ppswor(0.05)?),
        ("pps 0.05", SamplingScheme::pps(0.05)?),
        ("ppswor w^0.5", SamplingScheme::threshold(SchemeKind::Ppswor, FrequencyFn::Power(0.5), 0.2)?),
    ];
    println!("{:>14} {:>6} {:>10} {:>10}", "scheme", "i", "q_i", "pi_i");
    for (name, s) in &schemes {
        let rv = compute_pi(&params, s, 200);
        for i in [1usize, 10, 20, 50, 100, 200] {
            println!("{name:>14} {i:>6} {:>10.5} {:>10.5}", rv.q(i).unwrap(), rv.pi(i).unwrap());
        }
    }

    let data = KeyedHistogram::from_pairs((1..=5000u64).map(|k| (format!("k{k}"), 1 + k % 90)))?;
    let sample = draw_sample(&data, &schemes[1].1, 7);
    println!("ppswor kept {} of {} keys", sample.len(), data.len());
    Ok(())
}
