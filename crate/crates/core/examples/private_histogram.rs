// Release which keys of a small dataset appear, with no sampling.

use pws::*;

fn main() -> Result<()> {
    let text = "the cat sat on the mat the end the cat";
    let data = aggregate_elements(text.split(' '));
    let params = PrivacyParams::new(1.0, 0.05)?;
    let scheme = SamplingScheme::none();

    let max = data.iter().map(|(_, w)| w as usize).max().unwrap_or(0);
    let rv = compute_pi(&params, &scheme, max);
    for (key, w) in data.iter() {
        println!("{key:>4} w={w} reported with prob {:.4}", rv.pi(w as usize).unwrap());
    }

    let sample = draw_sample(&data, &scheme, 1);
    let released = sanitize_keys(&sample, &rv, 2)?;
    println!("released: {released:?}");
    Ok(())
}
