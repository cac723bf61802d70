#![allow(dead_code)]

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};

/// L(ε, δ), written out independently of the library.
pub fn l_oracle(eps: f64, delta: f64) -> f64 {
    let e = eps.exp();
    ((e - 1.0 + 2.0 * delta) / (delta * (e + 1.0))).ln() / eps
}

/// First-phase reporting probability with no sampling: δ(e^{εi} − 1)/(e^ε − 1).
pub fn phase1(eps: f64, delta: f64, i: u64) -> f64 {
    delta * ((eps * i as f64).exp() - 1.0) / (eps.exp() - 1.0)
}

/// Largest `Σ_{k≥split} P_k` over distributions `P` on tokens
/// `0..=support` (a prefix of `0..prev.len()`) with `P_0 = 1 − reported`,
/// `Σ_{k≥1} P_k = reported`, and hockey-stick divergence at most `δ`
/// against `prev` in both directions.
pub fn lp_max_suffix(prev: &[f64], reported: f64, eps: f64, delta: f64, split: usize, support: usize) -> f64 {
    let n = prev.len();
    let e = eps.exp();
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let p: Vec<_> = (0..n)
        .map(|k| {
            let upper = if k <= support { 1.0 } else { 0.0 };
            lp.add_var(if k >= split && k >= 1 { 1.0 } else { 0.0 }, (0.0, upper))
        })
        .collect();
    // s_k ≥ P_k − e^ε Q_k and t_k ≥ Q_k − e^ε P_k
    let s: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let t: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    lp.add_constraint([(p[0], 1.0)], ComparisonOp::Eq, 1.0 - reported);
    let mut mass = LinearExpr::empty();
    for &v in &p[1..] {
        mass.add(v, 1.0);
    }
    lp.add_constraint(mass, ComparisonOp::Eq, reported);
    for k in 0..n {
        lp.add_constraint([(s[k], 1.0), (p[k], -1.0)], ComparisonOp::Ge, -e * prev[k]);
        lp.add_constraint([(t[k], 1.0), (p[k], e)], ComparisonOp::Ge, prev[k]);
    }
    let mut sum_s = LinearExpr::empty();
    let mut sum_t = LinearExpr::empty();
    for k in 0..n {
        sum_s.add(s[k], 1.0);
        sum_t.add(t[k], 1.0);
    }
    lp.add_constraint(sum_s, ComparisonOp::Le, delta);
    lp.add_constraint(sum_t, ComparisonOp::Le, delta);
    lp.solve().expect("the table's own row is feasible").objective()
}

/// Sample mean and variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Sorted union of the breakpoints of two densities.
pub fn union_edges(a: &pws::PiecewisePdf, b: &pws::PiecewisePdf) -> Vec<f64> {
    let mut edges: Vec<f64> = a
        .segments()
        .iter()
        .chain(b.segments())
        .flat_map(|s| [s.left, s.right])
        .chain([0.0])
        .collect();
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs().max(1.0));
    edges
}

/// `[atom0, mass on (e_0, e_1], mass on (e_1, e_2], …]`.
pub fn cell_masses(pdf: &pws::PiecewisePdf, edges: &[f64]) -> Vec<f64> {
    let mut out = vec![pdf.atom0()];
    for w in edges.windows(2) {
        let m: f64 = pdf
            .segments()
            .iter()
            .map(|s| (s.right.min(w[1]) - s.left.max(w[0])).max(0.0) * s.density)
            .sum();
        out.push(m);
    }
    out
}
