// Check an arbitrary output table for (eps, delta)-privacy between adjacent
// frequencies, and show how a broken table is caught.

use pws::*;

fn main() -> Result<()> {
    let params = PrivacyParams::new(0.2, 0.01)?;
    let table = compute_pij(&params, &SamplingScheme::none(), 60);
    let ok = table.verify_dp(&params);
    println!("computed table: private={} worst={:.3e}", ok.satisfied, ok.worst_divergence());
    let tighter = table.verify_dp(&params.with_delta(0.005)?);
    println!("same table at delta=0.005: private={}", tighter.satisfied);

    // non-private release: frequency reported exactly
    let rows: Vec<DiscreteDistribution> = (0..4).map(|i| DiscreteDistribution::point_mass(i, 4)).collect();
    let bad = verify_dp(&rows, &params);
    println!("exact release: private={} worst={:?}", bad.satisfied, bad.worst);

    let p = DiscreteDistribution::new(vec![0.5, 0.3, 0.2])?;
    let q = DiscreteDistribution::new(vec![0.6, 0.3, 0.1])?;
    println!("hockey stick at eps=0.2: {:.4}", hockey_stick(&p, &q, 0.2)?);
    Ok(())
}
