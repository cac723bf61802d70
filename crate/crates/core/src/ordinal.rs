//! Rank agreement between true frequencies and sanitized outputs.
//!
//! For independent outputs `J1`, `J2` of keys with true frequencies
//! `i1 > i2`, the pair is concordant when `J1 > J2`; equal outputs count one
//! half. Not being reported is the smallest possible output.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::freq::{SanitizerTable, TableRow};
use crate::privacy::DiscreteDistribution;
use crate::sampling::FrequencyHistogram;

// Pr[A > B] for independent token draws.
fn greater(a: &[f64], b: &[f64]) -> f64 {
    let mut below = 0.0;
    let mut acc = 0.0;
    for (pa, pb) in a.iter().zip(b) {
        acc += pa * below;
        below += pb;
    }
    acc
}

/// `Pr[J1 > J2] + ½ Pr[J1 = J2]`, computed as `½ (1 + Pr[J1 > J2] − Pr[J1 < J2])`.
/// Swapping the arguments gives exactly `1 −` the result.
pub fn concordance_prob(row1: &DiscreteDistribution, row2: &DiscreteDistribution) -> Result<f64> {
    if row1.len() != row2.len() {
        return Err(Error::SupportMismatch {
            left: row1.len(),
            right: row2.len(),
        });
    }
    let (a, b) = (row1.probs(), row2.probs());
    Ok(match a.iter().map(|x| x.to_bits()).cmp(b.iter().map(|x| x.to_bits())) {
        std::cmp::Ordering::Equal => 0.5,
        std::cmp::Ordering::Greater => 1.0 - concordance_raw(b, a),
        std::cmp::Ordering::Less => concordance_raw(a, b),
    })
}

fn concordance_raw(a: &[f64], b: &[f64]) -> f64 {
    0.5 + 0.5 * (greater(a, b) - greater(b, a))
}

/// A per-frequency output law that can be compared across frequencies.
pub trait OutputLaw: Sync {
    fn max_frequency(&self) -> Option<u64>;

    /// Concordance for `i1 > i2`; callers go through [`concordance`].
    fn concordance_ordered(&self, i1: u64, i2: u64) -> Result<f64>;
}

/// `c(i1, i2)`, with `c(i, i) = ½` and `c(i2, i1) = 1 − c(i1, i2)`.
pub fn concordance<L: OutputLaw + ?Sized>(law: &L, i1: u64, i2: u64) -> Result<f64> {
    if let Some(m) = law.max_frequency() {
        if let Some(&f) = [i1, i2].iter().find(|&&f| f > m) {
            return Err(Error::FrequencyOutOfRange {
                frequency: f,
                max_frequency: m,
            });
        }
    }
    match i1.cmp(&i2) {
        std::cmp::Ordering::Equal => Ok(0.5),
        std::cmp::Ordering::Greater => law.concordance_ordered(i1, i2),
        std::cmp::Ordering::Less => Ok(1.0 - law.concordance_ordered(i2, i1)?),
    }
}

// Pr[A > B] over band rows.
fn greater_rows(a: &TableRow, b: &TableRow) -> f64 {
    let mut acc = 0.0;
    let mut below = b.not_reported();
    let mut next = b.first_token();
    for (j, pa) in a.iter() {
        while next < j {
            below += b.prob(next);
            next += 1;
        }
        acc += pa * below;
    }
    acc
}

impl OutputLaw for SanitizerTable {
    fn max_frequency(&self) -> Option<u64> {
        Some(SanitizerTable::max_frequency(self) as u64)
    }

    fn concordance_ordered(&self, i1: u64, i2: u64) -> Result<f64> {
        let (a, b) = (self.row(i1 as usize).unwrap(), self.row(i2 as usize).unwrap());
        Ok(0.5 + 0.5 * (greater_rows(a, b) - greater_rows(b, a)))
    }
}

/// `(i1, i2, c(i1, i2))` for all ordered pairs `i1 ≠ i2` in `1..=max`.
pub fn concordance_pairs<L: OutputLaw + ?Sized>(law: &L, max_frequency: u64) -> Result<Vec<(u64, u64, f64)>> {
    let pairs: Vec<(u64, u64)> = (1..=max_frequency)
        .flat_map(|a| (1..a).map(move |b| (a, b)))
        .collect();
    let upper: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, b)| concordance(law, a, b))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(2 * pairs.len());
    for (&(a, b), c) in pairs.iter().zip(upper) {
        out.push((a, b, c));
        out.push((b, a, 1.0 - c));
    }
    out.sort_by_key(|&(a, b, _)| (a, b));
    Ok(out)
}

/// Expected Kendall τ-a over key pairs with distinct true frequency,
/// `Σ n_a n_b (2 c(a, b) − 1) / Σ n_a n_b` over frequencies `a > b`.
/// `None` when no such pair exists.
pub fn expected_kendall_tau<L: OutputLaw + ?Sized>(histogram: &FrequencyHistogram, law: &L) -> Result<Option<f64>> {
    let freqs: Vec<(u64, u64)> = histogram.iter().collect();
    let terms: Vec<(f64, f64)> = (0..freqs.len())
        .into_par_iter()
        .map(|x| {
            let (a, na) = freqs[x];
            let mut num = 0.0;
            let mut den = 0.0;
            for &(b, nb) in &freqs[..x] {
                let w = na as f64 * nb as f64;
                num += w * (2.0 * concordance(law, a, b)? - 1.0);
                den += w;
            }
            Ok((num, den))
        })
        .collect::<Result<_>>()?;
    let (num, den) = terms.iter().fold((0.0, 0.0), |(n, d), (a, b)| (n + a, d + b));
    Ok((den > 0.0).then(|| num / den))
}
