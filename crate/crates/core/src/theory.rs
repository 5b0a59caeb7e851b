//! Analytical predictions: invocation counts, error bound, per-level cost
//! exponents and the min-max choice of subdivision exponents.
//!
//! With subdivision exponents `b_1 >= ... >= b_{k-1}`, a level-`(j+1)` cell
//! holds `n^{b_j}` nodes. Gossip at level `j` then costs `n^{e_j}` messages
//! (up to a `log(1/eps)` factor), with
//!
//! ```text
//! e_1 = 2 - 1.5 b_1
//! e_j = 1 + b_{j-1} - 1.5 b_j      (1 < j < k)
//! e_k = 1 + b_{k-1}
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real-valued number of gossip invocations `1 + sum_{j<k} n^(1 - a^j)`.
pub fn g_count(n: usize, a: f64, k: usize) -> f64 {
    let n = n as f64;
    1.0 + (1..k).map(|j| n.powf(1.0 - a.powi(j as i32))).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPrediction {
    pub bound: f64,
    pub g: f64,
    pub success_probability_lower: f64,
}

pub fn error_bound(n: usize, k: usize, epsilon: f64, a: f64) -> ErrorPrediction {
    let g = g_count(n, a, k);
    ErrorPrediction {
        bound: 2f64.sqrt() * n as f64 * epsilon,
        g,
        success_probability_lower: (1.0 - epsilon).max(0.0).powf(g),
    }
}

/// Per-level exponents for subdivision exponents `b` (length `k - 1`).
pub fn level_exponents(b: &[f64]) -> Result<Vec<f64>> {
    if b.iter().any(|v| !(0.0..=1.0).contains(v)) || b.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::invalid(
            "subdivision exponents must satisfy 1 >= b_1 >= ... >= 0",
        ));
    }
    let Some((&last, _)) = b.split_last() else {
        return Ok(vec![2.0]);
    };
    let mut e = Vec::with_capacity(b.len() + 1);
    e.push(2.0 - 1.5 * b[0]);
    for w in b.windows(2) {
        e.push(1.0 + (w[0] - 1.5 * w[1]));
    }
    e.push(1.0 + last);
    Ok(e)
}

/// `b_j = a^j` for `j = 1..k-1`.
pub fn geometric_exponents(a: f64, k: usize) -> Vec<f64> {
    (1..k).map(|j| a.powi(j as i32)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdivisionOptimum {
    pub b: Vec<f64>,
    pub exponent: f64,
    /// Whether `b_j = (2/3)^j` keeps every level but the last at most linear.
    pub geometric_all_linear: bool,
}

/// Smallest exponents meeting every level's bound `t` except the last, or
/// `None` when even those leave the last level above `t`.
fn minimal_b(k: usize, t: f64) -> Option<Vec<f64>> {
    let mut b = Vec::with_capacity(k - 1);
    let mut prev = ((2.0 - t) / 1.5).clamp(0.0, 1.0);
    b.push(prev);
    for _ in 2..k {
        prev = ((1.0 + prev - t) / 1.5).max(0.0);
        b.push(prev);
    }
    (1.0 + prev <= t).then_some(b)
}

/// Minimises the largest level exponent over monotone `b` by bisecting on
/// the common bound. Lowering any `b_j` only relaxes the later levels, so
/// the smallest admissible `b` decides feasibility.
pub fn optimal_subdivision(k: usize) -> Result<SubdivisionOptimum> {
    if k < 2 {
        return Err(Error::invalid("optimal_subdivision needs k >= 2"));
    }
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if minimal_b(k, mid).is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let b = minimal_b(k, hi).expect("upper end stays feasible");
    let exponent = level_exponents(&b)?.into_iter().fold(f64::MIN, f64::max);
    let geo = level_exponents(&geometric_exponents(2.0 / 3.0, k))?;
    let geometric_all_linear = geo[..k - 1].iter().all(|&e| e <= 1.0 + 1e-12);
    Ok(SubdivisionOptimum {
        b,
        exponent,
        geometric_all_linear,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostPrediction {
    pub n: usize,
    pub k: usize,
    pub a: f64,
    pub epsilon: f64,
    pub level_exponents: Vec<f64>,
    pub dominant_exponent: f64,
    /// `((k - 1) n + n^(1 + a^(k-1))) ln(1/eps)`, constants dropped.
    pub predicted_total_shape: f64,
}

pub fn predicted_cost(n: usize, k: usize, epsilon: f64, a: f64) -> Result<CostPrediction> {
    if k == 0 || !(a > 0.0 && a < 1.0) || !(epsilon > 0.0) {
        return Err(Error::invalid("predicted_cost needs k >= 1, a in (0, 1), eps > 0"));
    }
    let level_exponents = level_exponents(&geometric_exponents(a, k))?;
    let dominant_exponent = level_exponents.iter().copied().fold(f64::MIN, f64::max);
    let nf = n as f64;
    let shape = ((k - 1) as f64 * nf + nf.powf(1.0 + a.powi(k as i32 - 1))) * (1.0 / epsilon).ln();
    Ok(CostPrediction {
        n,
        k,
        a,
        epsilon,
        level_exponents,
        dominant_exponent,
        predicted_total_shape: shape,
    })
}

/// Combined prediction record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub n: usize,
    pub k: usize,
    pub a: f64,
    pub epsilon: f64,
    pub level_exponents: Vec<f64>,
    pub dominant_exponent: f64,
    pub g: f64,
    pub bound: f64,
    pub success_probability_lower: f64,
}

pub fn predict(n: usize, k: usize, epsilon: f64, a: f64) -> Result<Prediction> {
    let cost = predicted_cost(n, k, epsilon, a)?;
    let err = error_bound(n, k, epsilon, a);
    Ok(Prediction {
        n,
        k,
        a,
        epsilon,
        level_exponents: cost.level_exponents,
        dominant_exponent: cost.dominant_exponent,
        g: err.g,
        bound: err.bound,
        success_probability_lower: err.success_probability_lower,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
