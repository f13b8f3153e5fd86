//! Weighted Schmidt-type counting on `Λ_θ`, the exact time integral of
//! indicator Siegel transforms along `g_t`, the sandwich inequality linking
//! the two, and the asymptotic-ratio experiments.

mod annulus;

use rayon::prelude::*;

pub use annulus::{annulus_birkhoff_average, annulus_time_in_region};

use crate::error::{Error, Result};
use crate::geometry::quasi_norm_unchecked;
use crate::geometry::{DirectionSet, Region, VolumeMethod, WeightPair};
use crate::lattice::{apply_flow, enumerate_points, unipotent_lattice, Backend, LatticeBasis, ThetaMatrix};
use crate::rng;
use crate::stats::{self, Quantiles};

/// Solutions of `‖θq − p‖_a < c/‖q‖_b`, `1 ≤ ‖q‖_b < e^T` with direction
/// constraints, optionally on the reflected matrix `ζ_I θ η_J`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountQuery {
    pub theta: ThetaMatrix,
    pub c: f64,
    pub t_max: f64,
    pub a_dirs: DirectionSet,
    pub b_dirs: DirectionSet,
    /// Rows `I` of `θ` to negate.
    pub flip_rows: Vec<usize>,
    /// Columns `J` of `θ` to negate.
    pub flip_cols: Vec<usize>,
}

impl CountQuery {
    /// Full direction sets, no reflection.
    pub fn plain(theta: ThetaMatrix, c: f64, t_max: f64) -> Self {
        let (m, n) = (theta.weights().m(), theta.weights().n());
        Self {
            theta,
            c,
            t_max,
            a_dirs: DirectionSet::full(m),
            b_dirs: DirectionSet::full(n),
            flip_rows: Vec::new(),
            flip_cols: Vec::new(),
        }
    }

    /// Both direction sets the closed positive orthants.
    pub fn positive(theta: ThetaMatrix, c: f64, t_max: f64) -> Self {
        let (m, n) = (theta.weights().m(), theta.weights().n());
        Self {
            a_dirs: DirectionSet::positive_orthant(m),
            b_dirs: DirectionSet::positive_orthant(n),
            ..Self::plain(theta, c, t_max)
        }
    }

    fn region(&self) -> Result<Region> {
        Region::y_shell(
            self.theta.weights().clone(),
            self.t_max,
            self.c,
            self.a_dirs.clone(),
            self.b_dirs.clone(),
        )
    }

    fn validate(&self) -> Result<()> {
        let wp = self.theta.weights();
        if self.flip_rows.iter().any(|&i| i >= wp.m()) || self.flip_cols.iter().any(|&j| j >= wp.n()) {
            return Err(Error::invalid("reflection index out of range"));
        }
        Ok(())
    }
}

/// `♯(Λ_{ζ_Iθη_J} ∩ E_{T,c}(A, B))`.
pub fn count_solutions(q: &CountQuery) -> Result<u64> {
    q.validate()?;
    let region = q.region()?;
    let theta = q.theta.flip(&q.flip_rows, &q.flip_cols);
    let basis = unipotent_lattice(&theta);
    Ok(enumerate_points(&basis, &region, Backend::Structured, false)?.len() as u64)
}

/// The positive-orthant count computed straight from the inequalities,
/// looping over `q ≥ 0` and the admissible `p` per coordinate.
pub fn count_positive_direct(theta: &ThetaMatrix, c: f64, t_max: f64) -> Result<u64> {
    if !(c > 0.0) || !(t_max > 0.0) {
        return Err(Error::invalid("c and T must be positive"));
    }
    let wp = theta.weights();
    let (m, n) = (wp.m(), wp.n());
    let q_max: Vec<i64> = wp.b().iter().map(|b| (b * t_max).exp().floor() as i64).collect();
    let mut q = vec![0i64; n];
    let mut total = 0u64;
    loop {
        let qf: Vec<f64> = q.iter().map(|&v| v as f64).collect();
        let nq = quasi_norm_unchecked(&qf, wp.b());
        if nq >= 1.0 && nq.ln() < t_max {
            let bound = c / nq;
            // x_i = (θq)_i − p_i must lie in [0, bound^{a_i})
            let ranges: Vec<(f64, i64, i64)> = (0..m)
                .map(|i| {
                    let tq: f64 = (0..n).map(|j| theta.get(i, j) * qf[j]).sum();
                    let w = bound.powf(wp.a()[i]);
                    (tq, (tq - w).floor() as i64, tq.floor() as i64)
                })
                .collect();
            let mut p: Vec<i64> = ranges.iter().map(|r| r.1).collect();
            'p: loop {
                let x: Vec<f64> = ranges.iter().zip(&p).map(|(r, &pi)| r.0 - pi as f64).collect();
                if x.iter().all(|&v| v >= 0.0) && x.iter().any(|&v| v != 0.0) && quasi_norm_unchecked(&x, wp.a()) * nq < c {
                    total += 1;
                }
                for i in 0..m {
                    if p[i] < ranges[i].2 {
                        p[i] += 1;
                        continue 'p;
                    }
                    p[i] = ranges[i].1;
                }
                break;
            }
        }
        let mut j = 0;
        loop {
            if j == n {
                return Ok(total);
            }
            if q[j] < q_max[j] {
                q[j] += 1;
                break;
            }
            q[j] = 0;
            j += 1;
        }
    }
}

/// `|(ly − r, ly] ∩ [0, T]|`.
pub fn window_overlap(ly: f64, r: f64, t: f64) -> f64 {
    (ly.min(t) - (ly - r).max(0.0)).max(0.0)
}

fn backend_for(basis: &LatticeBasis, wp: &WeightPair) -> Backend {
    match basis.structured() {
        Some(s) if s.theta().weights() == wp => Backend::Structured,
        _ => Backend::Generic,
    }
}

/// `log ‖y‖_b` for every lattice point of `E_{T,c}(A, B)`.
fn shell_logs(basis: &LatticeBasis, region: &Region) -> Result<Vec<f64>> {
    let wp = region.weights();
    let pts = enumerate_points(basis, region, backend_for(basis, wp), false)?;
    Ok(pts.iter().map(|p| quasi_norm_unchecked(wp.split(&p.embedding).1, wp.b()).ln()).collect())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::invalid(format!("{name} must be positive and finite")));
    }
    Ok(())
}

/// `∫_0^T f̂_{A,B,r,c}(g_t Λ) dt` in closed form: a point with
/// `‖y‖_b = e^{ly}` lies in `g_{−t}E_{r,c}` exactly for `t ∈ (ly − r, ly]`.
pub fn birkhoff_indicator_integral(
    basis: &LatticeBasis,
    wp: &WeightPair,
    a_dirs: &DirectionSet,
    b_dirs: &DirectionSet,
    r: f64,
    c: f64,
    t: f64,
) -> Result<f64> {
    check_positive("r", r)?;
    check_positive("T", t)?;
    let region = Region::y_shell(wp.clone(), t + r, c, a_dirs.clone(), b_dirs.clone())?;
    Ok(shell_logs(basis, &region)?.iter().map(|&ly| window_overlap(ly, r, t)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sandwich {
    pub lower: u64,
    pub middle: f64,
    pub upper: u64,
    pub holds: bool,
}

pub const SANDWICH_TOLERANCE: f64 = 1e-9;

impl Sandwich {
    pub fn evaluate(lower: u64, middle: f64, upper: u64) -> Self {
        let holds = lower as f64 <= middle + SANDWICH_TOLERANCE && middle <= upper as f64 + SANDWICH_TOLERANCE;
        Self { lower, middle, upper, holds }
    }
}

/// `♯(Λ ∩ E_T∖E_r) ≤ (1/r)∫_0^T f̂(g_tΛ) dt ≤ ♯(Λ ∩ E_{r+T})`.
pub fn sandwich_check(
    basis: &LatticeBasis,
    wp: &WeightPair,
    a_dirs: &DirectionSet,
    b_dirs: &DirectionSet,
    r: f64,
    c: f64,
    t: f64,
) -> Result<Sandwich> {
    check_positive("r", r)?;
    check_positive("T", t)?;
    if t <= r {
        return Err(Error::invalid(format!("sandwich needs T > r, got T = {t}, r = {r}")));
    }
    let upper_region = Region::y_shell(wp.clone(), t + r, c, a_dirs.clone(), b_dirs.clone())?;
    let logs = shell_logs(basis, &upper_region)?;
    let lower = logs.iter().filter(|&&ly| ly >= r && ly < t).count() as u64;
    let middle = logs.iter().map(|&ly| window_overlap(ly, r, t)).sum::<f64>() / r;
    Ok(Sandwich::evaluate(lower, middle, logs.len() as u64))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentKind {
    EPlain,
    EPositiveOrthants,
    /// `♯(g_T Λ_θ ∩ F_{T,c})`.
    F,
    EDirectional { a_dirs: DirectionSet, b_dirs: DirectionSet },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub samples: usize,
    pub seed: u64,
    pub weights: WeightPair,
    pub c: f64,
    pub t_grid: Vec<f64>,
    pub kind: ExperimentKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRow {
    pub theta_id: usize,
    pub t: f64,
    pub count: u64,
    pub predicted: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSummary {
    pub t: f64,
    pub ratio: Quantiles,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountReport {
    pub rows: Vec<CountRow>,
    pub summaries: Vec<GridSummary>,
    /// `b` differs from `(1/n, …, 1/n)`.
    pub extended_case: bool,
}

/// Monte Carlo samples are doubled until the standard error drops below
/// this share of the estimate.
const DIRECTIONAL_REL_SE: f64 = 0.01;

fn directional_rate(wp: &WeightPair, c: f64, a: &DirectionSet, b: &DirectionSet, seed: u64) -> Result<f64> {
    // |E_{T,c}(A,B)| = T·|E_{1,c}(A,B)|
    let unit = Region::y_shell(wp.clone(), 1.0, c, a.clone(), b.clone())?;
    let mut samples = 1u64 << 18;
    loop {
        let est = unit.volume(VolumeMethod::MonteCarlo { samples, seed: rng::derive_seed(seed, 0xD1) })?;
        if est.std_error <= DIRECTIONAL_REL_SE * est.value || samples >= 1 << 24 {
            return Ok(est.value);
        }
        samples *= 2;
    }
}

/// Counts on the grid from sorted shell logs: `♯{ly < T}`.
fn grid_counts(sorted_logs: &[f64], grid: &[f64]) -> Vec<u64> {
    grid.iter().map(|&t| sorted_logs.partition_point(|&ly| ly < t) as u64).collect()
}

/// Draws `θ` uniformly on `[0,1)^{mn}` per sample and compares counts on the
/// grid with the volume growth. E-type counts enumerate the largest shell
/// once and bucket by `log ‖y‖_b`.
pub fn schmidt_experiment(spec: &ExperimentSpec) -> Result<CountReport> {
    if spec.samples == 0 {
        return Err(Error::invalid("samples must be at least 1"));
    }
    if spec.t_grid.is_empty() {
        return Err(Error::invalid("T grid is empty"));
    }
    if spec.t_grid.iter().any(|t| !(*t > 0.0) || !t.is_finite()) || spec.t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("T grid must be positive and strictly increasing"));
    }
    check_positive("c", spec.c)?;
    let wp = &spec.weights;
    let d = wp.d();
    let (m, n) = (wp.m(), wp.n());
    let t_max = *spec.t_grid.last().expect("non-empty");
    let two_d = 2f64.powi(d as i32);
    let (a_dirs, b_dirs, rate) = match &spec.kind {
        ExperimentKind::EPlain | ExperimentKind::F => (DirectionSet::full(m), DirectionSet::full(n), two_d * spec.c),
        ExperimentKind::EPositiveOrthants => {
            (DirectionSet::positive_orthant(m), DirectionSet::positive_orthant(n), spec.c)
        }
        ExperimentKind::EDirectional { a_dirs, b_dirs } => {
            let rate = directional_rate(wp, spec.c, a_dirs, b_dirs, spec.seed)?;
            (a_dirs.clone(), b_dirs.clone(), rate)
        }
    };
    let shell = Region::y_shell(wp.clone(), t_max, spec.c, a_dirs, b_dirs)?;
    let per_sample: Vec<Result<Vec<u64>>> = (0..spec.samples)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(spec.seed, i as u64);
            let theta = ThetaMatrix::random(wp.clone(), &mut r);
            let basis = unipotent_lattice(&theta);
            match spec.kind {
                ExperimentKind::F => spec
                    .t_grid
                    .iter()
                    .map(|&t| {
                        let flowed = apply_flow(&basis, wp, t)?;
                        let f = Region::x_shell(wp.clone(), t, spec.c)?;
                        Ok(enumerate_points(&flowed, &f, Backend::Structured, false)?.len() as u64)
                    })
                    .collect(),
                _ => {
                    let mut logs = shell_logs(&basis, &shell)?;
                    logs.sort_by(f64::total_cmp);
                    Ok(grid_counts(&logs, &spec.t_grid))
                }
            }
        })
        .collect();
    let mut rows = Vec::with_capacity(spec.samples * spec.t_grid.len());
    for (i, counts) in per_sample.into_iter().enumerate() {
        for (&t, count) in spec.t_grid.iter().zip(counts?) {
            let predicted = rate * t;
            rows.push(CountRow { theta_id: i, t, count, predicted, ratio: count as f64 / predicted });
        }
    }
    let summaries = spec
        .t_grid
        .iter()
        .map(|&t| {
            let ratios: Vec<f64> = rows.iter().filter(|r| r.t == t).map(|r| r.ratio).collect();
            GridSummary { t, ratio: Quantiles::of(&ratios) }
        })
        .collect();
    let extended_case = !WeightPair::equal(m, n).map(|e| e.b() == wp.b()).unwrap_or(false);
    Ok(CountReport { rows, summaries, extended_case })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub r2: f64,
    /// Samples with enough nonzero errors to fit.
    pub fitted_samples: usize,
}

/// Per-sample least-squares slope of `log|count − predicted|` against
/// `log T`, then medians across samples.
pub fn error_exponent_fit(rows: &[CountRow]) -> Result<ExponentFit> {
    let mut ids: Vec<usize> = rows.iter().map(|r| r.theta_id).collect();
    ids.sort_unstable();
    ids.dedup();
    let mut slopes = Vec::new();
    let mut r2s = Vec::new();
    for id in ids {
        let (xs, ys): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| r.theta_id == id)
            .filter_map(|r| {
                let err = (r.count as f64 - r.predicted).abs();
                (err > 0.0).then(|| (r.t.ln(), err.ln()))
            })
            .unzip();
        if xs.len() < 5 {
            continue;
        }
        if let Some(fit) = stats::linear_fit(&xs, &ys) {
            slopes.push(fit.slope);
            r2s.push(fit.r2);
        }
    }
    if slopes.is_empty() {
        return Err(Error::UndefinedFit("no sample has five grid points with nonzero error".into()));
    }
    Ok(ExponentFit { slope: stats::median(&slopes), r2: stats::median(&r2s), fitted_samples: slopes.len() })
}
