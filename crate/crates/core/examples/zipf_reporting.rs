// Fraction of keys of a Zipf dataset that get reported, across delta.

use pws::experiments::{default_delta_grid, run_sweep, DistributionSpec, Grid, Method, Metric, SweepConfig};
use pws::*;

fn main() -> Result<()> {
    let cfg = SweepConfig {
        grid: Grid::Delta(default_delta_grid()),
        distribution: DistributionSpec::Zipf { n_keys: 100_000, alpha: 1.0, w_max: 10_000 },
        methods: vec![Method::PwsKeys, Method::Sbh],
        metrics: vec![Metric::ReportedFraction],
        params: PrivacyParams::new(0.1, 0.01)?,
        scheme: SamplingScheme::none(),
        g: FrequencyFn::Identity,
    };
    let rows = run_sweep(&cfg)?;
    println!("{:>8} {:>10} {:>10} {:>8}", "delta", "pws-keys", "sbh", "gain");
    for pair in rows.chunks(2) {
        let (p, s) = (pair[0].result.unwrap(), pair[1].result.unwrap());
        println!("{:>8.0e} {p:>10.5} {s:>10.5} {:>7.1}%", pair[0].value, 100.0 * (p / s - 1.0));
    }
    Ok(())
}
