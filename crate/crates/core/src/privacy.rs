//! Privacy parameters and a hockey-stick divergence oracle for mechanisms with
//! discrete outputs.
//!
//! A mechanism `M` is `(ε, δ)`-DP when for neighboring inputs `w`, `w'` and
//! every output set `T`:
//!
//! ```text
//!   Pr[M(w) ∈ T] ≤ e^ε · Pr[M(w') ∈ T] + δ
//! ```
//!
//! For discrete output laws `p`, `q` the worst set is `{j : p_j > e^ε q_j}`,
//! so the condition reduces to `Σ_j max(0, p_j − e^ε q_j) ≤ δ`.
//!
//! Neighboring datasets differ by one element of one key, so for per-key
//! mechanisms it is enough to check the output laws of frequencies `i − 1`
//! and `i` in both directions.

use crate::error::{Error, Result};

/// Additive slack used whenever a computed divergence is compared against δ.
pub const DP_SLACK: f64 = 1e-12;

/// Tolerance on the total mass of a [`DiscreteDistribution`].
pub const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyParams {
    epsilon: f64,
    delta: f64,
}

impl PrivacyParams {
    /// Requires `ε > 0` and `0 < δ ≤ 1`.
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be a finite positive number, got {epsilon}"
            )));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1], got {delta}"
            )));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.epsilon, delta)
    }

    /// Length of the phase transition of the optimal reporting curve:
    ///
    /// ```text
    ///   L(ε, δ) = (1/ε) · ln((e^ε − 1 + 2δ) / (δ(e^ε + 1)))
    /// ```
    ///
    /// Not necessarily an integer.
    pub fn l_value(&self) -> f64 {
        let e = self.epsilon.exp();
        ((e - 1.0 + 2.0 * self.delta) / (self.delta * (e + 1.0))).ln() / self.epsilon
    }

    /// The small-parameter approximation `(1/ε) · ln(min(1, ε/2) / δ)`.
    pub fn l_approx(&self) -> f64 {
        (1.0f64.min(self.epsilon / 2.0) / self.delta).ln() / self.epsilon
    }
}

/// A probability vector over tokens `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if let Some((j, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(**p >= 0.0 && **p <= 1.0))
        {
            return Err(Error::InvalidParameter(format!(
                "probability of token {j} is {p}, outside [0, 1]"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    /// All mass on `token`, over `len` tokens.
    pub fn point_mass(token: usize, len: usize) -> Self {
        assert!(token < len, "token {token} outside 0..{len}");
        let mut probs = vec![0.0; len];
        probs[token] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// `Σ_j max(0, p_j − e^ε q_j)`, the smallest δ for which `p` is
/// `(ε, δ)`-indistinguishable from `q` in the `p → q` direction.
pub fn hockey_stick(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    epsilon: f64,
) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::SupportMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(hockey_stick_padded(p.probs(), q.probs(), epsilon))
}

/// Same as [`hockey_stick`] but treats missing trailing tokens as zero.
pub(crate) fn hockey_stick_padded(p: &[f64], q: &[f64], epsilon: f64) -> f64 {
    let scale = epsilon.exp();
    p.iter()
        .enumerate()
        .map(|(j, &pj)| (pj - scale * q.get(j).copied().unwrap_or(0.0)).max(0.0))
        .sum()
}

/// The adjacent pair with the largest divergence, in the direction measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstPair {
    pub from: usize,
    pub to: usize,
    pub divergence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpReport {
    pub satisfied: bool,
    pub delta: f64,
    pub worst: Option<WorstPair>,
}

impl DpReport {
    pub fn worst_divergence(&self) -> f64 {
        self.worst.map_or(0.0, |w| w.divergence)
    }
}

/// Checks every adjacent pair `(i − 1, i)` of per-frequency output laws in
/// both directions. `rows[0]` is expected to be the law of frequency 0.
pub fn verify_dp(rows: &[DiscreteDistribution], params: &PrivacyParams) -> DpReport {
    verify_rows(rows.iter().map(|r| r.probs()), params)
}

pub(crate) fn verify_rows<'a, I>(rows: I, params: &PrivacyParams) -> DpReport
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let eps = params.epsilon();
    let mut worst: Option<WorstPair> = None;
    let mut prev: Option<&[f64]> = None;
    for (i, row) in rows.into_iter().enumerate() {
        if let Some(prev) = prev {
            for (from, to, d) in [
                (i - 1, i, hockey_stick_padded(prev, row, eps)),
                (i, i - 1, hockey_stick_padded(row, prev, eps)),
            ] {
                if worst.is_none_or(|w| d > w.divergence) {
                    worst = Some(WorstPair {
                        from,
                        to,
                        divergence: d,
                    });
                }
            }
        }
        prev = Some(row);
    }
    DpReport {
        satisfied: worst.is_none_or(|w| w.divergence <= params.delta() + DP_SLACK),
        delta: params.delta(),
        worst,
    }
}
