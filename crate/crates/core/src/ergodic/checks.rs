use rayon::prelude::*;

use super::dyadic::{dyadic_family, DyadicSums};
use super::process::{DecayBound, ProcessEnsemble, Trajectory};
use crate::error::{Error, Result};
use crate::stats;

/// Composite midpoint rule for `∫_b^c f`, with the step shrunk to divide
/// the interval evenly.
pub fn window_integral<F: Fn(f64) -> f64>(f: F, b: f64, c: f64, step: f64) -> Result<f64> {
    if !(b < c) || !b.is_finite() || !c.is_finite() {
        return Err(Error::invalid("window needs b < c"));
    }
    if !(step > 0.0) || step > (c - b) / 4.0 {
        return Err(Error::invalid("quadrature step must be positive and at most (c − b)/4"));
    }
    let cells = ((c - b) / step).ceil() as usize;
    let h = (c - b) / cells as f64;
    Ok((0..cells).map(|k| f(b + (k as f64 + 0.5) * h)).sum::<f64>() * h)
}

fn is_integer(v: f64) -> bool {
    v.fract() == 0.0 && v >= 0.0
}

/// `∫_b^c F` for one trajectory: sums of unit integrals on integer windows,
/// direct quadrature otherwise.
fn trajectory_integral(tr: &Trajectory, units: &[f64], b: f64, c: f64, step: f64) -> Result<f64> {
    if is_integer(b) && is_integer(c) {
        Ok(units[b as usize..c as usize].iter().sum())
    } else {
        window_integral(|t| tr.value(t), b, c, step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceReport {
    pub second_moment: f64,
    pub std_error: f64,
    pub bound: f64,
    pub pass: bool,
}

/// `E[(∫_b^c F)²] ≤ 4Cδ^{−1}(c − b)` within three standard errors.
pub fn variance_bound_check(
    ens: &ProcessEnsemble,
    b: f64,
    c: f64,
    trials: usize,
    seed: u64,
    step: f64,
) -> Result<VarianceReport> {
    let decay = ens.require_decay()?;
    if !(b >= 0.0 && b < c) || !c.is_finite() {
        return Err(Error::invalid("window needs 0 ≤ b < c"));
    }
    if trials < 2 {
        return Err(Error::invalid("need at least two trials"));
    }
    let horizon = c.ceil() as usize;
    let squares: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let tr = ens.sample(seed, k as u64, horizon);
            let units = tr.unit_integrals(step)?;
            Ok(trajectory_integral(&tr, &units, b, c, step)?.powi(2))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (second_moment, std_error) = stats::mean_and_se(&squares);
    let bound = decay.variance_constant() * (c - b);
    Ok(VarianceReport { second_moment, std_error, bound, pass: second_moment <= bound + 3.0 * std_error })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExceptionalReport {
    pub s: u32,
    pub epsilon: f64,
    /// Share of trajectories in `Y_s`.
    pub empirical_fraction: f64,
    pub fraction_std_error: f64,
    /// `4Cδ^{−1} s^{−(1+2ε)}`.
    pub bound: f64,
    /// `2^s s^{2+2ε}`.
    pub threshold: f64,
    /// Mean of `Σ_{I∈L_s} (∫_I F)²` and its standard error.
    pub aggregate_second_moment: f64,
    pub aggregate_std_error: f64,
    /// `4Cδ^{−1} s 2^s`.
    pub aggregate_bound: f64,
    /// `(∫_0^k F)² ≤ s Σ_{I∈L_s}(∫_I F)²` for every trajectory and `k < 2^s`.
    pub cauchy_schwarz_holds: bool,
    /// `|∫_0^k F| ≤ 2^{s/2} s^{3/2+ε}` for every trajectory outside `Y_s`.
    pub outside_bound_holds: bool,
}

impl ExceptionalReport {
    pub fn fraction_pass(&self) -> bool {
        self.empirical_fraction <= self.bound + 3.0 * self.fraction_std_error
    }

    pub fn aggregate_pass(&self) -> bool {
        self.aggregate_second_moment <= self.aggregate_bound + 3.0 * self.aggregate_std_error
    }
}

struct TrialOutcome {
    sum_sq: f64,
    exceptional: bool,
    cauchy_schwarz: bool,
    outside_bound: bool,
}

/// Samples trajectories on `[0, 2^s − 1]` and classifies them against the
/// exceptional set `Y_s = {Σ_{I∈L_s}(∫_I F)² > 2^s s^{2+2ε}}`.
pub fn exceptional_fraction(
    ens: &ProcessEnsemble,
    s: u32,
    epsilon: f64,
    trials: usize,
    seed: u64,
    step: f64,
) -> Result<ExceptionalReport> {
    let decay = ens.require_decay()?;
    if !(epsilon > 0.0) {
        return Err(Error::invalid("ε must be positive"));
    }
    if trials < 2 {
        return Err(Error::invalid("need at least two trials"));
    }
    let family_len = dyadic_family(s)?.len();
    debug_assert!(family_len > 0);
    let sf = s as f64;
    let threshold = 2f64.powi(s as i32) * sf.powf(2.0 + 2.0 * epsilon);
    let pointwise = 2f64.powf(sf / 2.0) * sf.powf(1.5 + epsilon);
    let horizon = (1usize << s) - 1;
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let units = ens.sample(seed, k as u64, horizon).unit_integrals(step)?;
            let sums = DyadicSums::new(s, &units)?;
            let sum_sq = sums.sum_of_squares();
            let exceptional = sum_sq > threshold;
            let mut cauchy_schwarz = true;
            let mut outside_bound = true;
            for kk in 1..(1u64 << s) {
                let integral = sums.integral_to(kk)?;
                if integral * integral > sf * sum_sq {
                    cauchy_schwarz = false;
                }
                if !exceptional && integral.abs() > pointwise {
                    outside_bound = false;
                }
            }
            Ok(TrialOutcome { sum_sq, exceptional, cauchy_schwarz, outside_bound })
        })
        .collect::<Result<Vec<_>>>()?;
    let flags: Vec<f64> = outcomes.iter().map(|o| f64::from(u8::from(o.exceptional))).collect();
    let (empirical_fraction, fraction_std_error) = stats::mean_and_se(&flags);
    let sums: Vec<f64> = outcomes.iter().map(|o| o.sum_sq).collect();
    let (aggregate_second_moment, aggregate_std_error) = stats::mean_and_se(&sums);
    let vc = decay.variance_constant();
    Ok(ExceptionalReport {
        s,
        epsilon,
        empirical_fraction,
        fraction_std_error,
        bound: vc * sf.powf(-(1.0 + 2.0 * epsilon)),
        threshold,
        aggregate_second_moment,
        aggregate_std_error,
        aggregate_bound: vc * sf * 2f64.powi(s as i32),
        cauchy_schwarz_holds: outcomes.iter().all(|o| o.cauchy_schwarz),
        outside_bound_holds: outcomes.iter().all(|o| o.outside_bound),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub t: f64,
    /// Median over trajectories of `|T^{−1} ∫_0^T F|`.
    pub median_abs_error: f64,
    /// Median of `|T^{−1} ∫_0^T F| · T^{1/2} / (log T)^{3/2+ε}`.
    pub normalized_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    /// Slope of `log median_abs_error` against `log T`.
    pub slope: f64,
    pub r2: f64,
}

/// Time averages along sampled trajectories on an integer grid of horizons.
pub fn pointwise_rate_check(
    ens: &ProcessEnsemble,
    t_grid: &[f64],
    trials: usize,
    seed: u64,
    step: f64,
    epsilon: f64,
) -> Result<RateReport> {
    if t_grid.len() < 5 {
        return Err(Error::invalid("rate check needs at least five grid points"));
    }
    if t_grid.iter().any(|&t| !is_integer(t) || t < 2.0) || t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("rate grid must be increasing integers ≥ 2"));
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let horizon = *t_grid.last().expect("non-empty") as usize;
    let averages: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let units = ens.sample(seed, k as u64, horizon).unit_integrals(step)?;
            let mut acc = 0.0;
            let mut next = 0usize;
            let mut out = Vec::with_capacity(t_grid.len());
            for &t in t_grid {
                let end = t as usize;
                acc += units[next..end].iter().sum::<f64>();
                next = end;
                out.push((acc / t).abs());
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<RateRow> = t_grid
        .iter()
        .enumerate()
        .map(|(g, &t)| {
            let abs: Vec<f64> = averages.iter().map(|a| a[g]).collect();
            let norm = t.sqrt() / t.ln().powf(1.5 + epsilon);
            let normalized: Vec<f64> = abs.iter().map(|v| v * norm).collect();
            RateRow { t, median_abs_error: stats::median(&abs), normalized_error: stats::median(&normalized) }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.median_abs_error > 0.0).map(|r| (r.t.ln(), r.median_abs_error.ln())).unzip();
    let (slope, r2) = match stats::linear_fit(&xs, &ys) {
        Some(fit) if xs.len() >= 2 => (fit.slope, fit.r2),
        _ => (f64::NAN, f64::NAN),
    };
    Ok(RateReport { rows, slope, r2 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub bound: DecayBound,
    /// Mean of `∫_n^{n+1}F · ∫_{n+τ}^{n+τ+1}F` per lag `τ`.
    pub correlations: Vec<f64>,
    pub std_errors: Vec<f64>,
}

/// Fits `C e^{−δτ}` to the unit-block correlations: `δ` from a log-linear fit
/// over the significantly positive lags, then `C` as the smallest constant
/// dominating every significant lag.
pub fn fit_decay_bound(
    ens: &ProcessEnsemble,
    trials: usize,
    seed: u64,
    horizon: usize,
    max_lag: usize,
    step: f64,
) -> Result<DecayFit> {
    if trials < 2 || max_lag == 0 || horizon <= max_lag {
        return Err(Error::invalid("decay fit needs two trials and horizon > max lag > 0"));
    }
    let per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let u = ens.sample(seed, k as u64, horizon).unit_integrals(step)?;
            let span = horizon - max_lag;
            Ok((0..=max_lag).map(|lag| (0..span).map(|n| u[n] * u[n + lag]).sum::<f64>() / span as f64).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut correlations = Vec::with_capacity(max_lag + 1);
    let mut std_errors = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let vals: Vec<f64> = per_trial.iter().map(|v| v[lag]).collect();
        let (m, se) = stats::mean_and_se(&vals);
        correlations.push(m);
        std_errors.push(se);
    }
    let significant: Vec<(f64, f64)> = correlations
        .iter()
        .zip(&std_errors)
        .enumerate()
        .filter(|(_, (c, se))| **c > 3.0 * **se && **c > 0.0)
        .map(|(lag, (c, _))| (lag as f64, *c))
        .collect();
    let delta = if significant.len() >= 2 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = significant.iter().map(|(l, c)| (*l, c.ln())).unzip();
        stats::linear_fit(&xs, &ys).map_or(1.0, |f| -f.slope)
    } else {
        1.0
    }
    .max(0.05);
    let c = correlations
        .iter()
        .enumerate()
        .map(|(lag, v)| v.abs() * (delta * lag as f64).exp())
        .take(significant.iter().map(|(l, _)| *l as usize + 1).max().unwrap_or(1))
        .fold(f64::MIN_POSITIVE, f64::max);
    Ok(DecayFit { bound: DecayBound::new(c, delta)?, correlations, std_errors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_integral_examples() {
        assert_eq!(window_integral(|_| 0.0, 0.0, 1.0, 0.1).unwrap(), 0.0);
        assert!((window_integral(|_| 1.0, 0.0, 2.0, 0.25).unwrap() - 2.0).abs() < 1e-12);
        let v = window_integral(f64::sin, 0.0, std::f64::consts::PI, 1e-3).unwrap();
        assert!((v - 2.0).abs() < 1e-5);
        assert!(window_integral(f64::sin, 1.0, 1.0, 0.1).is_err());
        assert!(window_integral(f64::sin, 0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn zero_process_reports() {
        let z = ProcessEnsemble::zero();
        let v = variance_bound_check(&z, 0.0, 8.0, 10, 1, 1.0).unwrap();
        assert!(v.second_moment == 0.0 && v.bound > 0.0 && v.pass);
        let e = exceptional_fraction(&z, 6, 0.25, 10, 1, 1.0).unwrap();
        assert_eq!(e.empirical_fraction, 0.0);
        let grid: Vec<f64> = (4..9).map(|k| f64::from(1 << k)).collect();
        let r = pointwise_rate_check(&z, &grid, 4, 1, 1.0, 0.25).unwrap();
        assert!(r.rows.iter().all(|row| row.median_abs_error == 0.0));
    }

    #[test]
    fn iid_block_second_moment() {
        let v = variance_bound_check(&ProcessEnsemble::iid_block(), 0.0, 8.0, 4000, 3, 1.0).unwrap();
        assert!((v.second_moment - 8.0).abs() < 4.0 * v.std_error);
        assert!(v.pass);
        let threshold = exceptional_fraction(&ProcessEnsemble::iid_block(), 10, 0.25, 20, 2, 1.0).unwrap().threshold;
        assert!((threshold - 1024.0 * 10f64.powf(2.5)).abs() < 1e-6);
    }

    #[test]
    fn markov_decay_fit_recovers_rate() {
        let ens = ProcessEnsemble::markov(0.2).unwrap();
        let fit = fit_decay_bound(&ens, 200, 4, 400, 6, 1.0).unwrap();
        // correlations (0.6)^τ
        assert!((fit.bound.delta - (-(0.6f64).ln())).abs() < 0.1, "{fit:?}");
    }
}
