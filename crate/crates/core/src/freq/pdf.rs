//! Sanitized-frequency densities.
//!
//! `f_i` is an atom `1 − π_i` at 0 plus a piecewise-constant density on
//! `(0, i]`. Each step keeps the top unit `(i − 1, i]` at density
//! `min{π_i, δ}` and fills `(0, i − 1]` with the largest upper tail that
//! stays within `(ε, δ)` of `f_{i−1}`: the lower envelope `f_L` up to a
//! crossover `c_i`, and `e^ε f_{i−1}` above it.

use crate::error::{Error, Result};
use crate::keys::compute_pi;
use crate::privacy::{PrivacyParams, MASS_TOLERANCE};
use crate::sampling::SamplingScheme;

use super::{SanitizerTable, TableRow};

const MERGE_RTOL: f64 = 1e-12;

/// Constant density on `(left, right]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub left: f64,
    pub right: f64,
    pub density: f64,
}

impl Segment {
    pub fn mass(&self) -> f64 {
        (self.right - self.left) * self.density
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePdf {
    frequency: usize,
    atom0: f64,
    segments: Vec<Segment>,
}

impl PiecewisePdf {
    pub fn new(frequency: usize, atom0: f64, segments: Vec<Segment>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidParameter(format!("pdf for frequency {frequency}: {msg}")));
        if !(0.0..=1.0).contains(&atom0) {
            return bad(format!("atom {atom0} outside [0, 1]"));
        }
        let mut at = 0.0;
        for s in &segments {
            if !(s.left >= at && s.right > s.left && s.density >= 0.0) {
                return bad(format!("segment ({}, {}] with density {} is out of order or negative", s.left, s.right, s.density));
            }
            at = s.right;
        }
        if at > frequency as f64 {
            return bad(format!("support reaches {at}"));
        }
        let pdf = Self {
            frequency,
            atom0,
            segments,
        };
        if (pdf.total_mass() - 1.0).abs() > MASS_TOLERANCE {
            return bad(format!("total mass {}", pdf.total_mass()));
        }
        Ok(pdf)
    }

    pub fn point_mass_at_zero() -> Self {
        Self {
            frequency: 0,
            atom0: 1.0,
            segments: Vec::new(),
        }
    }

    pub fn frequency(&self) -> usize {
        self.frequency
    }

    pub fn atom0(&self) -> f64 {
        self.atom0
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn reported_mass(&self) -> f64 {
        self.segments.iter().map(Segment::mass).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.atom0 + self.reported_mass()
    }

    /// Density at `x > 0`, with segments closed on the right.
    pub fn density_at(&self, x: f64) -> f64 {
        self.segments
            .iter()
            .find(|s| s.left < x && x <= s.right)
            .map_or(0.0, |s| s.density)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdfFamily {
    pdfs: Vec<PiecewisePdf>,
    params: PrivacyParams,
    scheme: SamplingScheme,
}

impl PdfFamily {
    /// `f_0..=f_max`.
    pub fn pdfs(&self) -> &[PiecewisePdf] {
        &self.pdfs
    }

    pub fn get(&self, i: usize) -> Option<&PiecewisePdf> {
        self.pdfs.get(i)
    }

    pub fn max_frequency(&self) -> usize {
        self.pdfs.len() - 1
    }

    pub fn params(&self) -> &PrivacyParams {
        &self.params
    }

    pub fn scheme(&self) -> &SamplingScheme {
        &self.scheme
    }

    pub fn discretize(&self) -> SanitizerTable {
        let (rows, edges) = discretize_rows(&self.pdfs);
        let tokens = edges.len() - 1;
        SanitizerTable::new(rows, tokens, Some(edges), Some(self.params), Some(self.scheme.clone()))
    }
}

// A stretch of (0, i − 1] on which both f_L and f_{i−1} are constant.
struct Piece {
    left: f64,
    right: f64,
    lower: f64,
    prev: f64,
}

impl Piece {
    fn len(&self) -> f64 {
        self.right - self.left
    }
}

/// `f_L`: zero up to the smallest `b` with `x + ∫_0^b f_{i−1} = δ`, then
/// `e^{−ε} f_{i−1}`; identically zero if that mass is never reached.
fn lower_envelope(prev: &[Segment], x: f64, delta: f64, e_inv: f64) -> Vec<Piece> {
    let total: f64 = prev.iter().map(Segment::mass).sum();
    let mut pieces = Vec::with_capacity(prev.len() + 1);
    let mut cum = x;
    let mut found = x + total <= delta;
    let mut zeroed = found;
    for s in prev {
        if found {
            let lower = if zeroed { 0.0 } else { s.density * e_inv };
            pieces.push(Piece { left: s.left, right: s.right, lower, prev: s.density });
            continue;
        }
        let m = s.mass();
        if cum + m >= delta {
            let b = if s.density > 0.0 {
                (s.left + (delta - cum).max(0.0) / s.density).min(s.right)
            } else {
                s.left
            };
            if b > s.left {
                pieces.push(Piece { left: s.left, right: b, lower: 0.0, prev: s.density });
            }
            if s.right > b {
                pieces.push(Piece { left: b, right: s.right, lower: s.density * e_inv, prev: s.density });
            }
            found = true;
            zeroed = false;
        } else {
            cum += m;
            pieces.push(Piece { left: s.left, right: s.right, lower: 0.0, prev: s.density });
        }
    }
    pieces
}

fn merge_equal(segments: Vec<Segment>) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::with_capacity(segments.len());
    for s in segments {
        if let Some(last) = out.last_mut() {
            let scale = last.density.abs().max(s.density.abs());
            if last.right == s.left && (last.density - s.density).abs() <= MERGE_RTOL * scale {
                let mass = last.mass() + s.mass();
                last.right = s.right;
                last.density = mass / (last.right - last.left);
                continue;
            }
        }
        out.push(s);
    }
    out
}

/// `f_0..=f_max` for the given privacy parameters and sampling scheme.
pub fn compute_pdfs(params: &PrivacyParams, scheme: &SamplingScheme, max_frequency: usize) -> Result<PdfFamily> {
    let rv = compute_pi(params, scheme, max_frequency);
    let pi = rv.as_slice();
    let e = params.epsilon().exp();
    let e_inv = 1.0 / e;
    let delta = params.delta();

    let mut pdfs = Vec::with_capacity(max_frequency + 1);
    pdfs.push(PiecewisePdf::point_mass_at_zero());
    for i in 1..=max_frequency {
        let prev = &pdfs[i - 1];
        let atom0 = 1.0 - pi[i];
        let top = pi[i].min(delta);
        // Atom mass of f_{i−1} that f_i cannot cover within e^ε.
        let x = (prev.atom0 - e * atom0).max(0.0);
        let pieces = lower_envelope(&prev.segments, x, delta, e_inv);

        // G(z) = ∫_0^z f_L + e^ε ∫_z^{i−1} f_{i−1} is non-increasing and
        // piecewise linear; take the smallest z with G(z) = target.
        let target = pi[i] - top;
        let g0: f64 = pieces.iter().map(|p| e * p.prev * p.len()).sum();
        let mut g = g0;
        let mut c = None;
        for p in &pieces {
            let slope = p.lower - e * p.prev;
            let g_right = g + slope * p.len();
            if g_right <= target {
                let z = if slope < 0.0 { p.left + (g - target) / -slope } else { p.left };
                c = Some(z.clamp(p.left, p.right));
                break;
            }
            g = g_right;
        }
        let tol = MASS_TOLERANCE * g0.max(1.0);
        let c = match c {
            Some(z) if g >= target - tol => z,
            None if (g - target).abs() <= tol => (i - 1) as f64,
            _ => {
                return Err(Error::NoBreakpoint {
                    row: i,
                    what: "crossover",
                    upper: (i - 1) as f64,
                    target,
                    low: g,
                    high: g0,
                })
            }
        };

        let mut segments = Vec::with_capacity(pieces.len() + 2);
        for p in &pieces {
            if p.right <= c {
                segments.push(Segment { left: p.left, right: p.right, density: p.lower });
            } else if p.left >= c {
                segments.push(Segment { left: p.left, right: p.right, density: e * p.prev });
            } else {
                segments.push(Segment { left: p.left, right: c, density: p.lower });
                segments.push(Segment { left: c, right: p.right, density: e * p.prev });
            }
        }
        segments.push(Segment {
            left: (i - 1) as f64,
            right: i as f64,
            density: top,
        });
        segments.retain(|s| s.right > s.left);
        pdfs.push(PiecewisePdf {
            frequency: i,
            atom0,
            segments: merge_equal(segments),
        });
    }
    Ok(PdfFamily {
        pdfs,
        params: *params,
        scheme: scheme.clone(),
    })
}

fn discretize_rows(pdfs: &[PiecewisePdf]) -> (Vec<TableRow>, Vec<f64>) {
    let mut edges: Vec<f64> = std::iter::once(0.0)
        .chain(pdfs.iter().flat_map(|p| p.segments.iter().flat_map(|s| [s.left, s.right])))
        .collect();
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let tokens = edges.len() - 1;
    let mut dense = vec![0.0; tokens + 1];
    let rows = pdfs
        .iter()
        .map(|pdf| {
            dense.fill(0.0);
            dense[0] = pdf.atom0;
            for s in &pdf.segments {
                let mut k = edges.partition_point(|&x| x < s.left);
                while k < tokens && edges[k] < s.right {
                    dense[k + 1] = s.density * (edges[k + 1] - edges[k]);
                    k += 1;
                }
            }
            TableRow::from_dense(&dense)
        })
        .collect();
    (rows, edges)
}

/// Interval-token table over the union of all breakpoints; `pdfs[i]` becomes
/// row `i` and token `k` is the `k`-th interval from the left.
pub fn discretize_pdfs(pdfs: &[PiecewisePdf]) -> SanitizerTable {
    let (rows, edges) = discretize_rows(pdfs);
    let tokens = edges.len() - 1;
    SanitizerTable::new(rows, tokens, Some(edges), None, None)
}
