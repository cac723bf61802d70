// Error of a sum estimate as the sampling threshold shrinks.

use pws::experiments::{default_tau_grid, nrmse_experiment, DistributionSpec, Grid, Method, Metric, SweepConfig};
use pws::*;

fn main() -> Result<()> {
    let methods = vec![Method::Nonprivate, Method::PwsFreqMle, Method::SampledSbh];
    let cfg = SweepConfig {
        grid: Grid::Tau(default_tau_grid()),
        distribution: DistributionSpec::Uniform { n_keys: 200_000, lo: 1, hi: 200 },
        methods: methods.clone(),
        metrics: vec![Metric::Nrmse],
        params: PrivacyParams::new(0.1, 0.01)?,
        scheme: SamplingScheme::pps(1.0)?,
        g: FrequencyFn::Identity,
    };
    let rows = nrmse_experiment(&cfg)?;
    print!("{:>8}", "tau");
    for m in &methods {
        print!(" {:>14}", m.name());
    }
    println!();
    for chunk in rows.chunks(methods.len()) {
        print!("{:>8.0e}", chunk[0].value);
        for r in chunk {
            print!(" {:>14}", r.result.map_or("-".into(), |v| format!("{v:.3e}")));
        }
        println!();
    }
    Ok(())
}
