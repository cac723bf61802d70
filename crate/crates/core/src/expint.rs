//! Exact integrals of `c · x^k · exp(r (x − x0) + φ0)`.
//!
//! Laplace densities and CDFs are exponential on each side of their center,
//! so every quantity the baseline needs in closed form (reporting
//! probabilities, concordance, the no-sampling moments) is a sum of such
//! terms over a few intervals. Exponents are carried relative to an anchor
//! so nothing overflows for large frequencies.

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ExpTerm {
    pub coef: f64,
    pub power: u32,
    pub rate: f64,
    pub anchor: f64,
    pub offset: f64,
}

impl ExpTerm {
    /// `coef · x^power · exp(rate · (x − anchor))`.
    pub fn new(coef: f64, power: u32, rate: f64, anchor: f64) -> Self {
        Self {
            coef,
            power,
            rate,
            anchor,
            offset: 0.0,
        }
    }

    /// Pointwise product; powers add.
    pub fn times(&self, other: &ExpTerm) -> ExpTerm {
        // r1 (x − a1) + o1 + r2 (x − a2) + o2 = (r1 + r2)(x − a1) + r2 (a1 − a2) + o1 + o2
        ExpTerm {
            coef: self.coef * other.coef,
            power: self.power + other.power,
            rate: self.rate + other.rate,
            anchor: self.anchor,
            offset: self.offset + other.offset + other.rate * (self.anchor - other.anchor),
        }
    }

    fn exponent(&self, x: f64) -> f64 {
        self.rate * (x - self.anchor) + self.offset
    }

    #[cfg(test)]
    pub fn eval(&self, x: f64) -> f64 {
        self.coef * x.powi(self.power as i32) * self.exponent(x).exp()
    }

    // An antiderivative at x; finite x only.
    fn primitive(&self, x: f64) -> f64 {
        let k = self.power as i32;
        if self.rate == 0.0 {
            return self.coef * self.exponent(x).exp() * x.powi(k + 1) / f64::from(k + 1);
        }
        let r = self.rate;
        // Σ_m (−1)^m k!/(k−m)! x^{k−m} / r^{m+1}
        let mut poly = 0.0;
        let mut fall = 1.0;
        for m in 0..=k {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            poly += sign * fall * x.powi(k - m) / r.powi(m + 1);
            fall *= f64::from(k - m);
        }
        self.coef * self.exponent(x).exp() * poly
    }

    /// `∫_a^b`; an infinite limit needs the exponential to decay towards it.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        if !(b > a) || self.coef == 0.0 {
            return 0.0;
        }
        let upper = if b.is_infinite() {
            assert!(self.rate < 0.0, "divergent upper tail");
            0.0
        } else {
            self.primitive(b)
        };
        let lower = if a.is_infinite() {
            assert!(self.rate > 0.0, "divergent lower tail");
            0.0
        } else {
            self.primitive(a)
        };
        upper - lower
    }
}

/// A piecewise sum of terms: `(lo, hi, terms)` on disjoint `[lo, hi)`.
pub(crate) type Pieces = Vec<(f64, f64, Vec<ExpTerm>)>;

/// Pointwise product over the common refinement.
pub(crate) fn multiply(a: &Pieces, b: &Pieces) -> Pieces {
    let mut out = Vec::new();
    for (alo, ahi, at) in a {
        for (blo, bhi, bt) in b {
            let (lo, hi) = (alo.max(*blo), ahi.min(*bhi));
            if hi > lo {
                let terms = at.iter().flat_map(|x| bt.iter().map(move |y| x.times(y))).collect();
                out.push((lo, hi, terms));
            }
        }
    }
    out
}

/// `∫_lo^hi` of a piecewise sum.
pub(crate) fn integrate_pieces(p: &Pieces, lo: f64, hi: f64) -> f64 {
    p.iter()
        .map(|(a, b, terms)| {
            let (a, b) = (a.max(lo), b.min(hi));
            terms.iter().map(|t| t.integrate(a, b)).sum::<f64>()
        })
        .sum()
}

/// Laplace(center, scale) density.
pub(crate) fn laplace_density(center: f64, scale: f64) -> Pieces {
    let c = 0.5 / scale;
    vec![
        (f64::NEG_INFINITY, center, vec![ExpTerm::new(c, 0, 1.0 / scale, center)]),
        (center, f64::INFINITY, vec![ExpTerm::new(c, 0, -1.0 / scale, center)]),
    ]
}

/// Laplace(center, scale) CDF.
pub(crate) fn laplace_cdf(center: f64, scale: f64) -> Pieces {
    vec![
        (f64::NEG_INFINITY, center, vec![ExpTerm::new(0.5, 0, 1.0 / scale, center)]),
        (
            center,
            f64::INFINITY,
            vec![ExpTerm::new(1.0, 0, 0.0, center), ExpTerm::new(-0.5, 0, -1.0 / scale, center)],
        ),
    ]
}

/// `c · x^k` on the whole line.
pub(crate) fn monomial(coef: f64, power: u32) -> Pieces {
    vec![(f64::NEG_INFINITY, f64::INFINITY, vec![ExpTerm::new(coef, power, 0.0, 0.0)])]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn matches_simpson() {
        for &(c, k, r, anchor) in &[(1.5, 0u32, 0.3, 2.0), (0.7, 1, -0.5, 10.0), (2.0, 2, 0.0, 1.0), (1.0, 2, -1.3, 4.0)] {
            let t = ExpTerm::new(c, k, r, anchor);
            let exact = t.integrate(1.0, 6.0);
            let approx = simpson(|x| t.eval(x), 1.0, 6.0, 2000);
            assert!((exact - approx).abs() < 1e-9 * approx.abs().max(1.0), "{t:?}: {exact} vs {approx}");
        }
    }

    #[test]
    fn products_and_tails() {
        let a = ExpTerm::new(2.0, 1, 0.4, 3.0);
        let b = ExpTerm::new(0.5, 1, -0.9, 7.0);
        let p = a.times(&b);
        for x in [0.5, 3.0, 8.0] {
            assert!((p.eval(x) - a.eval(x) * b.eval(x)).abs() < 1e-12 * p.eval(x).abs());
        }
        // ∫_0^∞ x e^{−x} = 1, ∫_0^∞ x² e^{−x} = 2
        assert!((ExpTerm::new(1.0, 1, -1.0, 0.0).integrate(0.0, f64::INFINITY) - 1.0).abs() < 1e-15);
        assert!((ExpTerm::new(1.0, 2, -1.0, 0.0).integrate(0.0, f64::INFINITY) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn laplace_pieces_normalize() {
        let density = laplace_density(50.0, 10.0);
        assert!((integrate_pieces(&density, f64::NEG_INFINITY, f64::INFINITY) - 1.0).abs() < 1e-15);
        // mean and second moment: 50, 50² + 2·10²
        let m1 = integrate_pieces(&multiply(&density, &monomial(1.0, 1)), f64::NEG_INFINITY, f64::INFINITY);
        let m2 = integrate_pieces(&multiply(&density, &monomial(1.0, 2)), f64::NEG_INFINITY, f64::INFINITY);
        assert!((m1 - 50.0).abs() < 1e-12);
        assert!((m2 - 2700.0).abs() < 1e-9);

        let cdf = laplace_cdf(50.0, 10.0);
        let at = |x: f64| -> f64 {
            cdf.iter()
                .find(|(lo, hi, _)| *lo <= x && x < *hi)
                .map(|(_, _, ts)| ts.iter().map(|t| t.eval(x)).sum())
                .unwrap()
        };
        assert!((at(50.0) - 0.5).abs() < 1e-15);
        assert!((at(60.0) - (1.0 - 0.5 * (-1.0f64).exp())).abs() < 1e-15);
        assert!((at(40.0) - 0.5 * (-1.0f64).exp()).abs() < 1e-15);
    }
}
