use crate::error::{Error, Result};

use super::euclidean_norm;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// The pair of weight vectors `a ∈ R^m_{>0}`, `b ∈ R^n_{>0}`, each summing
/// to one. Parameterises every quasi-norm, flow and region in the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPair {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl WeightPair {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        for (name, w) in [("a", &a), ("b", &b)] {
            if w.is_empty() {
                return Err(Error::invalid(format!("weight vector {name} is empty")));
            }
            if w.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(Error::invalid(format!("weight vector {name} has a non-positive entry")));
            }
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                return Err(Error::invalid(format!("weight vector {name} sums to {sum}, expected 1")));
            }
        }
        Ok(Self { a, b })
    }

    /// The equal-weights case `a = (1/m, …, 1/m)`, `b = (1/n, …, 1/n)`.
    pub fn equal(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::invalid("m and n must be positive"));
        }
        Self::new(vec![1.0 / m as f64; m], vec![1.0 / n as f64; n])
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    pub fn d(&self) -> usize {
        self.a.len() + self.b.len()
    }

    pub fn is_equal_weights(&self) -> bool {
        let m = self.m() as f64;
        let n = self.n() as f64;
        self.a.iter().all(|&x| (x - 1.0 / m).abs() <= WEIGHT_SUM_TOLERANCE)
            && self.b.iter().all(|&y| (y - 1.0 / n).abs() <= WEIGHT_SUM_TOLERANCE)
    }

    /// Splits a point of `R^d` into its `(x, y)` blocks.
    pub fn split<'v>(&self, v: &'v [f64]) -> (&'v [f64], &'v [f64]) {
        v.split_at(self.m())
    }

    /// Diagonal exponents of `g_t`: `a_i t` then `-b_j t`.
    pub fn flow_exponents(&self, t: f64) -> Vec<f64> {
        self.a.iter().map(|&a| a * t).chain(self.b.iter().map(|&b| -b * t)).collect()
    }
}

fn check_len(x: &[f64], w: &[f64]) -> Result<()> {
    if x.len() != w.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: vector has {} entries, weights have {}",
            x.len(),
            w.len()
        )));
    }
    Ok(())
}

/// `max_i |x_i|^{1/w_i}`.
pub fn quasi_norm(x: &[f64], w: &[f64]) -> Result<f64> {
    check_len(x, w)?;
    Ok(quasi_norm_unchecked(x, w))
}

#[inline]
pub(crate) fn quasi_norm_unchecked(x: &[f64], w: &[f64]) -> f64 {
    let mut best = 0.0f64;
    for (&xi, &wi) in x.iter().zip(w) {
        let ax = xi.abs();
        if ax == 0.0 {
            continue;
        }
        let v = if wi == 1.0 { ax } else { ax.powf(1.0 / wi) };
        if v > best {
            best = v;
        }
    }
    best
}

/// The weighted flow `(e^{w_1 t} x_1, …, e^{w_k t} x_k)`.
pub fn weighted_flow(x: &[f64], w: &[f64], t: f64) -> Result<Vec<f64>> {
    check_len(x, w)?;
    Ok(x.iter().zip(w).map(|(&xi, &wi)| (wi * t).exp() * xi).collect())
}

/// The unique point where the weighted-flow orbit of `x` meets the unit
/// sphere. The orbit norm is strictly increasing in the flow time, so the
/// crossing is found by bisection.
pub fn project_to_sphere(x: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    check_len(x, w)?;
    if w.iter().any(|&wi| !(wi > 0.0)) {
        return Err(Error::invalid("weights must be positive"));
    }
    let scale = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::Domain("projection undefined at origin".into()));
    }
    if !scale.is_finite() {
        return Err(Error::invalid("vector has non-finite entries"));
    }
    // scaled so that ‖x‖² cannot underflow or overflow
    let scaled: Vec<f64> = x.iter().map(|v| v / scale).collect();
    let log_norm = scale.ln() + euclidean_norm(&scaled).ln();
    let w_min = w.iter().cloned().fold(f64::INFINITY, f64::min);
    // For t ≥ 0 every factor is ≥ e^{w_min t}, for t ≤ 0 every factor is
    // ≤ e^{w_min t}, hence the crossing lies between 0 and -ln‖x‖/w_min.
    let pivot = -log_norm / w_min;
    let mut lo = pivot.min(0.0) - 1.0;
    let mut hi = pivot.max(0.0) + 1.0;
    // log-space evaluation keeps e^{w t} x finite across the whole bracket
    let flowed = |t: f64| -> Vec<f64> {
        x.iter()
            .zip(w)
            .map(|(&xi, &wi)| if xi == 0.0 { xi } else { xi.signum() * (wi * t + xi.abs().ln()).exp() })
            .collect()
    };
    let excess = |t: f64| -> f64 { flowed(t).iter().map(|v| v * v).sum::<f64>() - 1.0 };
    // Bisect until the bracket collapses to adjacent floats; this is always
    // more than 60 halvings for brackets of width ≥ 2.
    for _ in 0..2200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = if excess(lo).abs() < excess(hi).abs() { lo } else { hi };
    Ok(flowed(t))
}
