//! Differentially private post-processing of weighted samples.
//!
//! A weighted sample of `(key, frequency)` pairs is turned into an
//! element-level `(ε, δ)`-DP output: keys are reported with the largest
//! probabilities the privacy budget allows, and their frequencies are replaced
//! by ordered tokens drawn from tables that maximize separation between
//! frequencies. Estimators, rank analysis and a Laplace-threshold baseline are
//! included for comparison.

pub mod cli;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod freq;
pub mod io;
pub mod keys;
pub mod ordinal;
pub mod privacy;
pub mod sampling;
pub mod sbh;

mod expint;
mod rng;

pub use error::{Error, Result};
pub use freq::{
    compute_pdfs, compute_pij, discretize_pdfs, sanitize_frequencies, PdfFamily, PiecewisePdf, SanitizerTable,
    Segment, TableKind, TableRow,
};
pub use keys::{compute_pi, pi_star_closed_form, ppswor_structure, sanitize_keys, PpsworStructure, ReportingVector};
pub use privacy::{hockey_stick, verify_dp, DiscreteDistribution, DpReport, PrivacyParams};
pub use sampling::{
    aggregate_elements, draw_sample, FrequencyFn, FrequencyHistogram, KeyedHistogram, SamplingScheme, SchemeKind,
    WeightedSample,
};
