use latorbit_core::counting::{
    error_exponent_fit, sandwich_check, schmidt_experiment, ExperimentKind, ExperimentSpec, Sandwich,
};
use latorbit_core::ergodic::{
    double_equi_grid, dyadic_cover, pointwise_rate_check, DynamicalProcess, MeanEstimate, Observable,
    ProcessEnsemble, ThetaDensity,
};
use latorbit_core::geometry::{Region, VolumeMethod, WeightPair};
use latorbit_core::lattice::{alpha, apply_flow, unipotent_lattice, LatticeBasis, ThetaMatrix};
use latorbit_core::rng;
use latorbit_core::siegel::{theta_average_identity, theta_average_monte_carlo, RiemannFunction};
use latorbit_core::stats::Quantiles;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{
    CountKind, ExperimentConfig, LatticeSource, MethodChoice, ProcessChoice, RegionChoice, DYADIC_EXHAUSTIVE_MAX,
};
use crate::error::CliError;
use crate::output::Table;

pub const COUNT_COLUMNS: &[&str] = &["theta_id", "T", "count", "predicted", "ratio"];
pub const SANDWICH_COLUMNS: &[&str] = &["instance", "T", "lower", "middle", "upper", "holds"];
pub const ALPHA_COLUMNS: &[&str] = &["lattice_id", "alpha", "rank", "exact"];
pub const SIEGEL_COLUMNS: &[&str] = &["region", "param", "analytic", "monte_carlo", "std_error"];
pub const VOLUME_COLUMNS: &[&str] = &["region", "method", "value", "std_error"];
pub const DYADIC_COLUMNS: &[&str] = &["s", "k", "cover_size"];
pub const RATE_COLUMNS: &[&str] = &["T", "median_abs_error", "normalized_error"];
pub const DOUBLE_EQUI_COLUMNS: &[&str] = &["t", "w", "estimate", "std_error", "deviation"];

/// Stream tags separating the random draws of different stages.
const TAG_REGION_MC: u64 = 0x5245;
const TAG_DYNAMICAL_MEAN: u64 = 0x4d45;

pub struct Report {
    pub table: Table,
    pub summary: Value,
    /// Set when a checked inequality failed.
    pub violation: Option<String>,
}

impl Report {
    fn ok(table: Table, summary: Value) -> Self {
        Self { table, summary, violation: None }
    }
}

fn quantiles_json(q: &Quantiles) -> Value {
    json!({ "median": q.median, "q05": q.q05, "q95": q.q95 })
}

pub fn count(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let wp = cfg.weight_pair()?;
    let t_grid = cfg.require_t_grid()?.to_vec();
    let (a, b) = cfg.directions(&wp)?;
    let full = a.is_full() && b.is_full();
    let kind = match cfg.count.kind {
        CountKind::E if full => ExperimentKind::EPlain,
        CountKind::E => ExperimentKind::EDirectional { a_dirs: a, b_dirs: b },
        _ if !full => return Err(CliError::Config("count kinds E_positive and F take no direction sets".into())),
        CountKind::EPositive => ExperimentKind::EPositiveOrthants,
        CountKind::F => ExperimentKind::F,
    };
    let is_e = !matches!(kind, ExperimentKind::F);
    let spec = ExperimentSpec { samples: cfg.samples, seed: cfg.seed, weights: wp, c: cfg.c, t_grid, kind };
    let report = schmidt_experiment(&spec)?;
    let mut table = Table::new(COUNT_COLUMNS);
    for r in &report.rows {
        table.push(vec![r.theta_id.into(), r.t.into(), r.count.into(), r.predicted.into(), r.ratio.into()]);
    }
    let per_t: Vec<Value> = report
        .summaries
        .iter()
        .map(|s| json!({ "T": s.t, "ratio": quantiles_json(&s.ratio) }))
        .collect();
    let exponent = match error_exponent_fit(&report.rows) {
        Ok(fit) if is_e => json!({ "median_slope": fit.slope, "median_r2": fit.r2, "fitted_samples": fit.fitted_samples }),
        _ => Value::Null,
    };
    Ok(Report::ok(
        table,
        json!({ "per_T": per_t, "extended_case": report.extended_case, "error_exponent": exponent }),
    ))
}

/// The first failing instance, if any.
pub fn sandwich_violation(results: &[(usize, f64, Sandwich)]) -> Option<String> {
    let failures: Vec<&(usize, f64, Sandwich)> = results.iter().filter(|(_, _, s)| !s.holds).collect();
    let (i, t, s) = failures.first()?;
    Some(format!(
        "{} of {} sandwich instances violated, first at instance {i}, T = {t}: {} <= {} <= {} fails",
        failures.len(),
        results.len(),
        s.lower,
        s.middle,
        s.upper
    ))
}

pub fn sandwich(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let wp = cfg.weight_pair()?;
    let t_grid = cfg.require_t_grid()?;
    if let Some(t) = t_grid.iter().find(|&&t| t <= cfg.r) {
        return Err(CliError::Config(format!("sandwich needs every T > r, got T = {t}, r = {}", cfg.r)));
    }
    let (a, b) = cfg.directions(&wp)?;
    let results = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let theta = ThetaMatrix::random(wp.clone(), &mut rng::stream(cfg.seed, i as u64));
            let basis = unipotent_lattice(&theta);
            t_grid
                .iter()
                .map(|&t| Ok((i, t, sandwich_check(&basis, &wp, &a, &b, cfg.r, cfg.c, t)?)))
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<Vec<_>, CliError>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();
    let mut table = Table::new(SANDWICH_COLUMNS);
    for (i, t, s) in &results {
        table.push(vec![(*i).into(), (*t).into(), s.lower.into(), s.middle.into(), s.upper.into(), s.holds.into()]);
    }
    let failures = results.iter().filter(|(_, _, s)| !s.holds).count();
    let summary = json!({ "instances": results.len(), "failures": failures });
    Ok(Report { table, summary, violation: sandwich_violation(&results) })
}

pub fn alpha_cmd(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let wp = cfg.weight_pair()?;
    let d = wp.d();
    let lattices: Vec<LatticeBasis> = match cfg.alpha.source {
        LatticeSource::Identity => vec![LatticeBasis::identity(d)],
        LatticeSource::Random => (0..cfg.samples)
            .map(|i| LatticeBasis::random(d, &mut rng::stream(cfg.seed, i as u64)))
            .collect(),
        LatticeSource::Flow => cfg
            .require_t_grid()?
            .iter()
            .map(|&t| apply_flow(&LatticeBasis::identity(d), &wp, t))
            .collect::<Result<_, _>>()?,
    };
    let results = lattices.par_iter().map(alpha).collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(ALPHA_COLUMNS);
    for (i, r) in results.iter().enumerate() {
        table.push(vec![i.into(), r.value.into(), r.best_rank.into(), r.exact.into()]);
    }
    let values: Vec<f64> = results.iter().map(|r| r.value).collect();
    let exact = results.iter().filter(|r| r.exact).count();
    Ok(Report::ok(table, json!({ "alpha": quantiles_json(&Quantiles::of(&values)), "exact": exact })))
}

/// The configured regions with the parameter that distinguishes them.
fn regions(cfg: &ExperimentConfig, choice: RegionChoice) -> Result<Vec<(f64, Region)>, CliError> {
    let wp = cfg.weight_pair()?;
    Ok(match choice {
        RegionChoice::E => {
            let (a, b) = cfg.directions(&wp)?;
            cfg.require_t_grid()?
                .iter()
                .map(|&t| Ok((t, Region::y_shell(wp.clone(), t, cfg.c, a.clone(), b.clone())?)))
                .collect::<Result<_, CliError>>()?
        }
        RegionChoice::F => vec![(cfg.r, Region::x_shell(wp, cfg.r, cfg.c)?)],
        RegionChoice::Annulus => vec![(cfg.r, Region::annulus(wp, cfg.r)?)],
        RegionChoice::Ball => vec![(cfg.r, Region::ball(wp, cfg.r)?)],
    })
}

pub fn siegel(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    if cfg.samples < 2 {
        return Err(CliError::Config("siegel needs at least two samples".into()));
    }
    let mut table = Table::new(SIEGEL_COLUMNS);
    let mut deviations = Vec::new();
    for (i, (param, region)) in regions(cfg, cfg.siegel.region)?.into_iter().enumerate() {
        let label = region.label();
        let f = RiemannFunction::indicator(region);
        let exact = theta_average_identity(&f)?;
        let mc = theta_average_monte_carlo(&f, cfg.samples, rng::derive_seed(cfg.seed, i as u64))?;
        deviations.push(if mc.std_error > 0.0 { (mc.mean - exact.analytic).abs() / mc.std_error } else { 0.0 });
        table.push(vec![label.into(), param.into(), exact.analytic.into(), mc.mean.into(), mc.std_error.into()]);
    }
    let worst = deviations.iter().cloned().fold(0.0, f64::max);
    Ok(Report::ok(table, json!({ "max_sigma_deviation": worst })))
}

pub fn volume(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    if cfg.volume.methods.is_empty() {
        return Err(CliError::Config("volume.methods is empty".into()));
    }
    let mut table = Table::new(VOLUME_COLUMNS);
    for (i, (_, region)) in regions(cfg, cfg.volume.region)?.into_iter().enumerate() {
        for m in &cfg.volume.methods {
            let (name, method) = match m {
                MethodChoice::ClosedForm => ("closed_form", VolumeMethod::ClosedForm),
                MethodChoice::MonteCarlo => (
                    "monte_carlo",
                    VolumeMethod::MonteCarlo {
                        samples: cfg.samples as u64,
                        seed: rng::derive_seed(cfg.seed, TAG_REGION_MC + i as u64),
                    },
                ),
            };
            let v = region.volume(method)?;
            table.push(vec![region.label().into(), name.into(), v.value.into(), v.std_error.into()]);
        }
    }
    let rows = table.rows.len();
    Ok(Report::ok(table, json!({ "rows": rows })))
}

pub fn dyadic(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let s = cfg.dyadic.s;
    let ks: Vec<u64> = match &cfg.dyadic.k {
        Some(ks) => ks.clone(),
        None if s <= DYADIC_EXHAUSTIVE_MAX => (1..1u64 << s).collect(),
        None => {
            return Err(CliError::Config(format!(
                "listing every k needs s <= {DYADIC_EXHAUSTIVE_MAX}; give dyadic.k explicitly"
            )))
        }
    };
    let mut table = Table::new(DYADIC_COLUMNS);
    let mut largest = 0;
    for k in ks {
        let size = dyadic_cover(k, s)?.len();
        largest = largest.max(size);
        table.push(vec![s.into(), k.into(), size.into()]);
    }
    Ok(Report::ok(table, json!({ "s": s, "max_cover_size": largest, "within_bound": largest <= s as usize })))
}

pub fn rate(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let opts = &cfg.rate;
    let ens = match opts.process {
        ProcessChoice::Zero => ProcessEnsemble::zero(),
        ProcessChoice::IidBlock => ProcessEnsemble::iid_block(),
        ProcessChoice::Markov => ProcessEnsemble::markov(opts.p)?,
        ProcessChoice::Dynamical => {
            let estimate =
                MeanEstimate { seed: rng::derive_seed(cfg.seed, TAG_DYNAMICAL_MEAN), ..MeanEstimate::default() };
            ProcessEnsemble::dynamical(DynamicalProcess::new(cfg.weight_pair()?, opts.radius, estimate)?)
        }
    };
    let report = pointwise_rate_check(&ens, cfg.require_t_grid()?, cfg.samples, cfg.seed, opts.step, opts.epsilon)?;
    let mut table = Table::new(RATE_COLUMNS);
    for r in &report.rows {
        table.push(vec![r.t.into(), r.median_abs_error.into(), r.normalized_error.into()]);
    }
    Ok(Report::ok(table, json!({ "slope": report.slope, "r2": report.r2 })))
}

pub fn double_equi(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let wp: WeightPair = cfg.weight_pair()?;
    let opts = &cfg.double_equi;
    let t_grid = cfg.require_t_grid()?;
    let w_grid = opts.w_grid.as_deref().unwrap_or(t_grid);
    if w_grid.is_empty() {
        return Err(CliError::Config("double_equi.w_grid is empty".into()));
    }
    let mn = wp.m() * wp.n();
    let support: Vec<(f64, f64)> = match &opts.support {
        Some(s) => s.iter().map(|&[lo, hi]| (lo, hi)).collect(),
        None => vec![(0.2, 0.7); mn],
    };
    let f = ThetaDensity::normalized_box(vec![(0.0, 1.0); mn], support)?;
    let phi = Observable::exp_neg_siegel(RiemannFunction::indicator(Region::ball(wp.clone(), opts.radius)?));
    let z = LatticeBasis::identity(wp.d());
    let (rows, trend) = double_equi_grid(
        &wp,
        &z,
        &z,
        &f,
        &phi,
        &phi,
        t_grid,
        w_grid,
        cfg.samples,
        cfg.seed,
        (opts.t_ref, opts.mean_samples),
    )?;
    let mut table = Table::new(DOUBLE_EQUI_COLUMNS);
    for r in &rows {
        table.push(vec![r.t.into(), r.w.into(), r.estimate.into(), r.std_error.into(), r.deviation.into()]);
    }
    let deviations: Vec<f64> = rows.iter().map(|r| r.deviation).collect();
    Ok(Report::ok(
        table,
        json!({ "spearman_trend": trend, "deviation": quantiles_json(&Quantiles::of(&deviations)) }),
    ))
}
