use crate::error::{Error, Result};

use super::WeightPair;

/// Applies `g_t = diag(e^{a_1 t}, …, e^{a_m t}, e^{-b_1 t}, …, e^{-b_n t})`.
pub fn diagonal_flow(v: &[f64], wp: &WeightPair, t: f64) -> Result<Vec<f64>> {
    if v.len() != wp.d() {
        return Err(Error::invalid(format!("point has {} entries, expected d = {}", v.len(), wp.d())));
    }
    Ok(v.iter().zip(wp.flow_exponents(t)).map(|(x, e)| e.exp() * x).collect())
}

/// Splitting `g_t = g'_t · g''_t` where `g'_t` is the equal-weights flow
/// `diag(e^{n b t} 1_m, e^{-m b t} 1_n)` with `b = min{a_i/n, b_j/m}` and
/// `g''_t = g_t g'_{-t}` expands (resp. contracts) weakly on the first `m`
/// (resp. last `n`) coordinates for `t ≥ 0`.
///
/// Diagonal entries are stored alongside their exponents; `gt` is built as
/// `exp(prime + dblprime)` so the reconstruction is exact entrywise.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowDecomposition {
    pub t: f64,
    pub b_min: f64,
    pub gt: Vec<f64>,
    pub gt_prime: Vec<f64>,
    pub gt_dblprime: Vec<f64>,
    pub prime_exponents: Vec<f64>,
    pub dblprime_exponents: Vec<f64>,
}

impl FlowDecomposition {
    pub fn exponents(&self) -> Vec<f64> {
        self.prime_exponents.iter().zip(&self.dblprime_exponents).map(|(p, q)| p + q).collect()
    }
}

pub fn flow_decomposition(wp: &WeightPair, t: f64) -> FlowDecomposition {
    let (m, n) = (wp.m() as f64, wp.n() as f64);
    let b_min = wp
        .a()
        .iter()
        .map(|a| a / n)
        .chain(wp.b().iter().map(|b| b / m))
        .fold(f64::INFINITY, f64::min);
    let full = wp.flow_exponents(t);
    let prime_exponents: Vec<f64> = (0..wp.d())
        .map(|k| if k < wp.m() { n * b_min * t } else { -m * b_min * t })
        .collect();
    // b_min ≤ a_i/n and b_min ≤ b_j/m, so the differences have a definite
    // sign; clamping removes rounding residue of the wrong sign.
    let dblprime_exponents: Vec<f64> = full
        .iter()
        .zip(&prime_exponents)
        .enumerate()
        .map(|(k, (e, p))| {
            let diff = e - p;
            let expanding = (k < wp.m()) == (t >= 0.0);
            if expanding {
                diff.max(0.0)
            } else {
                diff.min(0.0)
            }
        })
        .collect();
    let gt = prime_exponents.iter().zip(&dblprime_exponents).map(|(p, q)| (p + q).exp()).collect();
    FlowDecomposition {
        t,
        b_min,
        gt,
        gt_prime: prime_exponents.iter().map(|e| e.exp()).collect(),
        gt_dblprime: dblprime_exponents.iter().map(|e| e.exp()).collect(),
        prime_exponents,
        dblprime_exponents,
    }
}
