use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::WeightPair;
use crate::lattice::{apply_flow, unipotent_image, LatticeBasis, ThetaMatrix};
use crate::rng;
use crate::siegel::{siegel_transform, RiemannFunction};
use crate::stats;

/// `f = Σ coeff_k 1_{box_k}` on the `θ` space `R^{mn}`, sampled uniformly
/// from a bounding domain box containing every term.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaDensity {
    domain: Vec<(f64, f64)>,
    terms: Vec<(f64, Vec<(f64, f64)>)>,
}

fn box_volume(b: &[(f64, f64)]) -> f64 {
    b.iter().map(|(lo, hi)| hi - lo).product()
}

fn in_box(b: &[(f64, f64)], x: &[f64]) -> bool {
    b.iter().zip(x).all(|(&(lo, hi), &v)| lo <= v && v <= hi)
}

impl ThetaDensity {
    pub fn new(domain: Vec<(f64, f64)>, terms: Vec<(f64, Vec<(f64, f64)>)>) -> Result<Self> {
        if domain.is_empty() || domain.iter().any(|&(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(Error::invalid("sampling domain must be a non-degenerate box"));
        }
        for (c, b) in &terms {
            if !c.is_finite() || b.len() != domain.len() {
                return Err(Error::invalid("density term has the wrong dimension or coefficient"));
            }
            let inside = b.iter().zip(&domain).all(|(&(lo, hi), &(dlo, dhi))| dlo <= lo && lo <= hi && hi <= dhi);
            if !inside {
                return Err(Error::invalid("density box must lie inside the sampling domain"));
            }
        }
        Ok(Self { domain, terms })
    }

    /// `1_{box} / vol(box)`.
    pub fn normalized_box(domain: Vec<(f64, f64)>, support: Vec<(f64, f64)>) -> Result<Self> {
        let v = box_volume(&support);
        if !(v > 0.0) {
            return Err(Error::invalid("density box has zero volume"));
        }
        Self::new(domain, vec![(1.0 / v, support)])
    }

    pub fn evaluate(&self, theta: &[f64]) -> f64 {
        self.terms.iter().filter(|(_, b)| in_box(b, theta)).map(|(c, _)| c).sum()
    }

    pub fn integral(&self) -> f64 {
        self.terms.iter().map(|(c, b)| c * box_volume(b)).sum()
    }

    pub fn domain_volume(&self) -> f64 {
        box_volume(&self.domain)
    }

    pub fn dimension(&self) -> usize {
        self.domain.len()
    }

    fn sample<R: Rng + ?Sized>(&self, r: &mut R) -> Vec<f64> {
        self.domain.iter().map(|&(lo, hi)| lo + (hi - lo) * r.random::<f64>()).collect()
    }

    /// `∫ f` and its dual form `a·f + b·g` share the sampling domain.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.domain != other.domain {
            return Err(Error::invalid("densities must share a sampling domain"));
        }
        let terms = self
            .terms
            .iter()
            .map(|(c, bx)| (a * c, bx.clone()))
            .chain(other.terms.iter().map(|(c, bx)| (b * c, bx.clone())))
            .collect();
        Self::new(self.domain.clone(), terms)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObservableTerm {
    One,
    /// `Λ ↦ exp(−f̂(Λ))`.
    ExpNegSiegel(RiemannFunction),
}

/// A bounded function of a lattice: `Σ κ_k term_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    terms: Vec<(f64, ObservableTerm)>,
}

impl Observable {
    pub fn one() -> Self {
        Self { terms: vec![(1.0, ObservableTerm::One)] }
    }

    pub fn exp_neg_siegel(f: RiemannFunction) -> Self {
        Self { terms: vec![(1.0, ObservableTerm::ExpNegSiegel(f))] }
    }

    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(k, t)| (a * k, t.clone()))
            .chain(other.terms.iter().map(|(k, t)| (b * k, t.clone())))
            .collect();
        Self { terms }
    }

    pub fn evaluate(&self, basis: &LatticeBasis) -> Result<f64> {
        let mut total = 0.0;
        for (k, term) in &self.terms {
            total += k * match term {
                ObservableTerm::One => 1.0,
                ObservableTerm::ExpNegSiegel(f) => (-siegel_transform(f, basis)?).exp(),
            };
        }
        Ok(total)
    }

    fn is_constant_one(&self) -> bool {
        self.terms == [(1.0, ObservableTerm::One)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquiEstimate {
    pub value: f64,
    pub std_error: f64,
}

fn theta_matrix(wp: &WeightPair, flat: &[f64]) -> Result<ThetaMatrix> {
    ThetaMatrix::new(wp.clone(), flat.chunks(wp.n()).map(<[f64]>::to_vec).collect())
}

fn check_dims(wp: &WeightPair, f: &ThetaDensity, bases: &[&LatticeBasis]) -> Result<()> {
    if f.dimension() != wp.m() * wp.n() {
        return Err(Error::invalid("density dimension must be mn"));
    }
    if bases.iter().any(|b| b.dim() != wp.d()) {
        return Err(Error::invalid("lattice dimension must be m + n"));
    }
    Ok(())
}

fn estimate(values: Vec<f64>, scale: f64) -> EquiEstimate {
    let (mean, se) = stats::mean_and_se(&values);
    EquiEstimate { value: scale * mean, std_error: scale * se }
}

/// Monte Carlo estimate of `∫ f(θ) φ(g_t u(θ)Δ) ψ(g_w u(θ)Λ) dθ`. Draw `k`
/// uses stream `(seed, k)`, so different `(t, w)` share their `θ` samples.
#[allow(clippy::too_many_arguments)]
pub fn double_equi_estimate(
    wp: &WeightPair,
    delta: &LatticeBasis,
    lambda: &LatticeBasis,
    f: &ThetaDensity,
    phi: &Observable,
    psi: &Observable,
    t: f64,
    w: f64,
    samples: usize,
    seed: u64,
) -> Result<EquiEstimate> {
    check_dims(wp, f, &[delta, lambda])?;
    if samples < 2 {
        return Err(Error::invalid("need at least two Monte Carlo samples"));
    }
    let values = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(seed, k as u64);
            let flat = f.sample(&mut r);
            let weight = f.evaluate(&flat);
            if weight == 0.0 {
                return Ok(0.0);
            }
            let theta = theta_matrix(wp, &flat)?;
            let a = if phi.is_constant_one() {
                1.0
            } else {
                phi.evaluate(&apply_flow(&unipotent_image(&theta, delta)?, wp, t)?)?
            };
            let b = psi.evaluate(&apply_flow(&unipotent_image(&theta, lambda)?, wp, w)?)?;
            Ok(weight * a * b)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(estimate(values, f.domain_volume()))
}

/// `∫ f(θ) ψ(g_w u(θ)Λ) dθ` with the same draws as
/// [`double_equi_estimate`].
pub fn single_equi_estimate(
    wp: &WeightPair,
    lambda: &LatticeBasis,
    f: &ThetaDensity,
    psi: &Observable,
    w: f64,
    samples: usize,
    seed: u64,
) -> Result<EquiEstimate> {
    check_dims(wp, f, &[lambda])?;
    if samples < 2 {
        return Err(Error::invalid("need at least two Monte Carlo samples"));
    }
    let values = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(seed, k as u64);
            let flat = f.sample(&mut r);
            let weight = f.evaluate(&flat);
            if weight == 0.0 {
                return Ok(0.0);
            }
            let theta = theta_matrix(wp, &flat)?;
            Ok(weight * psi.evaluate(&apply_flow(&unipotent_image(&theta, lambda)?, wp, w)?)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(estimate(values, f.domain_volume()))
}

/// Stand-in for `∫ φ dμ`: the average of `φ(g_{t_ref} u(θ)Z^d)` over
/// `θ ∈ [0,1)^{mn}`.
pub fn empirical_mean(wp: &WeightPair, phi: &Observable, t_ref: f64, samples: usize, seed: u64) -> Result<EquiEstimate> {
    let unit: Vec<(f64, f64)> = vec![(0.0, 1.0); wp.m() * wp.n()];
    let f = ThetaDensity::new(unit.clone(), vec![(1.0, unit)])?;
    single_equi_estimate(wp, &LatticeBasis::identity(wp.d()), &f, phi, t_ref, samples, seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleEquiRow {
    pub t: f64,
    pub w: f64,
    pub estimate: f64,
    pub std_error: f64,
    /// `|I − ∫f · ∫φ dμ_emp · ∫ψ dμ_emp|`.
    pub deviation: f64,
}

impl DoubleEquiRow {
    pub fn separation(&self) -> f64 {
        self.t.min(self.w).min((self.w - self.t).abs())
    }
}

/// Evaluates the integral on `t_grid × w_grid` and its deviation from the
/// product of empirical means.
#[allow(clippy::too_many_arguments)]
pub fn double_equi_grid(
    wp: &WeightPair,
    delta: &LatticeBasis,
    lambda: &LatticeBasis,
    f: &ThetaDensity,
    phi: &Observable,
    psi: &Observable,
    t_grid: &[f64],
    w_grid: &[f64],
    samples: usize,
    seed: u64,
    reference: (f64, usize),
) -> Result<(Vec<DoubleEquiRow>, f64)> {
    let (t_ref, mean_samples) = reference;
    let mean_seed = rng::derive_seed(seed, 0xE9);
    let m_phi = empirical_mean(wp, phi, t_ref, mean_samples, mean_seed)?.value;
    let m_psi = empirical_mean(wp, psi, t_ref, mean_samples, mean_seed)?.value;
    let target = f.integral() * m_phi * m_psi;
    let mut rows = Vec::with_capacity(t_grid.len() * w_grid.len());
    for &t in t_grid {
        for &w in w_grid {
            let e = double_equi_estimate(wp, delta, lambda, f, phi, psi, t, w, samples, seed)?;
            rows.push(DoubleEquiRow { t, w, estimate: e.value, std_error: e.std_error, deviation: (e.value - target).abs() });
        }
    }
    let trend = decay_trend(&rows);
    Ok((rows, trend))
}

/// Spearman correlation between `log deviation` and `min(t, w, |w − t|)`.
pub fn decay_trend(rows: &[DoubleEquiRow]) -> f64 {
    let xs: Vec<f64> = rows.iter().map(DoubleEquiRow::separation).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.deviation.max(f64::MIN_POSITIVE).ln()).collect();
    stats::spearman(&xs, &ys)
}
