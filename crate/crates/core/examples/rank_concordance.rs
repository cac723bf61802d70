// How often a private release keeps two keys in frequency order, for the
// table release and the Laplace-threshold baseline.

use pws::experiments::uniform_histogram;
use pws::ordinal::{concordance, expected_kendall_tau};
use pws::sbh::{SbhConfig, SbhLaw};
use pws::*;

fn main() -> Result<()> {
    let params = PrivacyParams::new(0.1, 0.01)?;
    let m = 150;
    let table = compute_pdfs(&params, &SamplingScheme::none(), m)?.discretize();
    let sbh = SbhLaw::new(SbhConfig::new(params));

    println!("{:>5} {:>5} {:>8} {:>8}", "i1", "i2", "table", "sbh");
    for (a, b) in [(2, 1), (20, 10), (80, 79), (150, 100)] {
        println!("{a:>5} {b:>5} {:>8.4} {:>8.4}", concordance(&table, a, b)?, concordance(&sbh, a, b)?);
    }

    let hist = uniform_histogram(2000, 1, m as u64)?;
    let tau = |t: Option<f64>| t.map_or("undefined".into(), |v| format!("{v:.4}"));
    println!("expected Kendall tau: table {} sbh {}", tau(expected_kendall_tau(&hist, &table)?), tau(expected_kendall_tau(&hist, &sbh)?));
    Ok(())
}
