//! Independent reference implementations shared by the oracle tests and
//! the acceptance suite. Nothing here calls into the library.
#![allow(dead_code)]

/// Plain recursive Cox-de Boor definition, half-open support intervals.
pub fn cox_de_boor(knots: &[f64], i: usize, degree: usize, x: f64) -> f64 {
    if degree == 0 {
        return if knots[i] <= x && x < knots[i + 1] { 1.0 } else { 0.0 };
    }
    let mut value = 0.0;
    let left_den = knots[i + degree] - knots[i];
    if left_den != 0.0 {
        value += (x - knots[i]) / left_den * cox_de_boor(knots, i, degree - 1, x);
    }
    let right_den = knots[i + degree + 1] - knots[i + 1];
    if right_den != 0.0 {
        value += (knots[i + degree + 1] - x) / right_den * cox_de_boor(knots, i + 1, degree - 1, x);
    }
    value
}

/// Knots rebuilt from scratch so the oracle does not read the grid's own layout.
pub fn oracle_knots(g: usize, k: usize, lo: f64, hi: f64) -> Vec<f64> {
    let h = (hi - lo) / g as f64;
    (0..g + 2 * k + 1).map(|j| lo + (j as f64 - k as f64) * h).collect()
}

pub fn oracle_basis(g: usize, k: usize, lo: f64, hi: f64, x: f64) -> Vec<f64> {
    let knots = oracle_knots(g, k, lo, hi);
    (0..g + k).map(|i| cox_de_boor(&knots, i, k, x)).collect()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// One statistic at a time, straight from the definitions.
pub fn feature_oracle(x: &[f64]) -> [f64; 12] {
    let n = x.len() as f64;
    let xbar = mean(x);
    let mav = x.iter().map(|v| v.abs()).sum::<f64>() / n;
    let sigma = (x.iter().map(|v| (v - xbar).powi(2)).sum::<f64>() / n).sqrt();
    let skew = x.iter().map(|v| ((v - xbar) / sigma).powi(3)).sum::<f64>() / n;
    let kurt = x.iter().map(|v| ((v - xbar) / sigma).powi(4)).sum::<f64>() / n - 3.0;
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / 16.0;
    let mut counts = [0usize; 16];
    for &v in x {
        let mut j = 0;
        while j < 15 && v >= lo + (j + 1) as f64 * width {
            j += 1;
        }
        counts[j] += 1;
    }
    let entropy = -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| (c as f64 / n) * (c as f64 / n).ln())
        .sum::<f64>();
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let xmax = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let p2p = hi - lo;
    let clearance = (x.iter().map(|v| v.abs().sqrt()).sum::<f64>() / n).powi(2);
    [
        mav,
        sigma,
        skew,
        kurt,
        entropy,
        rms,
        xmax,
        p2p,
        xmax / rms,
        clearance,
        rms / mav,
        xmax / mav,
    ]
}

/// Relative difference, exact zero when both sides agree bitwise.
pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
