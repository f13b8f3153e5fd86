//! Siegel transforms of finite indicator combinations, their exact average
//! over the unipotent slice, and the comparison of ball counts with α.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{ball_volume, quasi_norm, DirectionSet, PointSet, Region, RegionKind, WeightPair};
use crate::lattice::{alpha, enumerate_points, unipotent_lattice, Backend, LatticeBasis, ThetaMatrix};
use crate::{rng, stats};

/// `f = Σ coeff_k · 1_{R_k}` with every region on one weight pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannFunction {
    weights: WeightPair,
    terms: Vec<(f64, Region)>,
}

impl RiemannFunction {
    pub fn new(weights: WeightPair, terms: Vec<(f64, Region)>) -> Result<Self> {
        for (c, r) in &terms {
            if !c.is_finite() {
                return Err(Error::invalid("coefficient must be finite"));
            }
            if r.weights() != &weights {
                return Err(Error::invalid("all regions must share the function's weight pair"));
            }
        }
        Ok(Self { weights, terms })
    }

    pub fn zero(weights: WeightPair) -> Self {
        Self { weights, terms: Vec::new() }
    }

    pub fn indicator(region: Region) -> Self {
        Self { weights: region.weights().clone(), terms: vec![(1.0, region)] }
    }

    pub fn weights(&self) -> &WeightPair {
        &self.weights
    }

    pub fn terms(&self) -> &[(f64, Region)] {
        &self.terms
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|(c, r)| (a * c, r.clone()))
            .chain(other.terms.iter().map(|(c, r)| (b * c, r.clone())))
            .collect();
        Self::new(self.weights.clone(), terms)
    }

    pub fn evaluate(&self, v: &[f64]) -> f64 {
        self.terms.iter().filter(|(_, r)| r.contains(v)).map(|(c, _)| c).sum()
    }

    /// A radius containing the support.
    pub fn support_radius(&self) -> f64 {
        self.terms.iter().map(|(_, r)| r.euclidean_bound()).fold(0.0, f64::max)
    }
}

fn backend_for(basis: &LatticeBasis, region: &Region) -> Backend {
    match basis.structured() {
        Some(s) if s.theta().weights() == region.weights() => Backend::Structured,
        _ => Backend::Generic,
    }
}

/// Number of nonzero lattice points in `region`.
pub fn count_nonzero(basis: &LatticeBasis, region: &Region) -> Result<usize> {
    Ok(enumerate_points(basis, region, backend_for(basis, region), false)?.len())
}

/// `f̂(Λ) = Σ_{v ∈ Λ∖{0}} f(v)`.
pub fn siegel_transform(f: &RiemannFunction, basis: &LatticeBasis) -> Result<f64> {
    let mut total = 0.0;
    for (c, r) in &f.terms {
        total += c * count_nonzero(basis, r)? as f64;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaAverage {
    pub analytic: f64,
    /// `Σ_{q≠0} ∫ f(x, q) dx`.
    pub slice_part: f64,
    /// `Σ_{p≠0} f(−p, 0)`.
    pub axis_part: f64,
}

/// The exact mean of `f̂(Λ_θ)` over `θ ∈ [0,1)^{mn}`: for `q ≠ 0`, `θq mod Z^m`
/// is uniform, so each such fibre contributes its slice integral.
pub fn theta_average_identity(f: &RiemannFunction) -> Result<ThetaAverage> {
    let wp = &f.weights;
    let (m, n) = (wp.m(), wp.n());
    let mut slice_part = 0.0;
    let mut axis_part = 0.0;
    for (c, region) in &f.terms {
        let bbox = region.bounding_box();
        let q_bounds: Vec<i64> = bbox[m..].iter().map(|h| h.floor() as i64).collect();
        let mut s = 0.0;
        for_each_integer(&q_bounds, |q| {
            if q.iter().any(|&v| v != 0) {
                let y: Vec<f64> = q.iter().map(|&v| v as f64).collect();
                s += slice_volume(region, &y)?;
            }
            Ok(())
        })?;
        let p_bounds: Vec<i64> = bbox[..m].iter().map(|h| h.floor() as i64).collect();
        let mut a = 0.0;
        for_each_integer(&p_bounds, |p| {
            if p.iter().any(|&v| v != 0) {
                let v: Vec<f64> = p.iter().map(|&v| -v as f64).chain(std::iter::repeat_n(0.0, n)).collect();
                if region.contains(&v) {
                    a += 1.0;
                }
            }
            Ok(())
        })?;
        slice_part += c * s;
        axis_part += c * a;
    }
    Ok(ThetaAverage { analytic: slice_part + axis_part, slice_part, axis_part })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloMean {
    pub mean: f64,
    pub std_error: f64,
}

/// Sample mean of `f̂(Λ_θ)` over uniform `θ ∈ [0,1)^{mn}`; draw `k` uses
/// stream `(seed, k)`.
pub fn theta_average_monte_carlo(f: &RiemannFunction, samples: usize, seed: u64) -> Result<MonteCarloMean> {
    if samples < 2 {
        return Err(Error::invalid("need at least two Monte Carlo samples"));
    }
    let values = (0..samples)
        .into_par_iter()
        .map(|k| {
            let theta = ThetaMatrix::random(f.weights.clone(), &mut rng::stream(seed, k as u64));
            siegel_transform(f, &unipotent_lattice(&theta))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, std_error) = stats::mean_and_se(&values);
    Ok(MonteCarloMean { mean, std_error })
}

fn for_each_integer<F: FnMut(&[i64]) -> Result<()>>(bounds: &[i64], mut f: F) -> Result<()> {
    let mut v: Vec<i64> = bounds.iter().map(|b| -b).collect();
    if bounds.iter().any(|&b| b < 0) {
        return Ok(());
    }
    loop {
        f(&v)?;
        let mut i = 0;
        loop {
            if i == v.len() {
                return Ok(());
            }
            if v[i] < bounds[i] {
                v[i] += 1;
                break;
            }
            v[i] = -bounds[i];
            i += 1;
        }
    }
}

/// `vol_m{x : (x, y) ∈ R}`.
fn slice_volume(region: &Region, y: &[f64]) -> Result<f64> {
    let wp = region.weights();
    let m = wp.m();
    let two_m = 2f64.powi(m as i32);
    let y_sq: f64 = y.iter().map(|v| v * v).sum();
    let disk = |r2: f64| if r2 > 0.0 { ball_volume(m, r2.sqrt()) } else { 0.0 };
    Ok(match region.kind() {
        RegionKind::YShell { t_max, c, a_dirs, b_dirs } => {
            let ny = quasi_norm(y, wp.b())?;
            if !(ny >= 1.0) || !(ny.ln() < *t_max) || !b_dirs.admits(y, wp.b()) {
                return Ok(0.0);
            }
            // {‖x‖_a < s} is a box of volume 2^m s
            two_m * (c / ny) * direction_fraction(a_dirs)?
        }
        RegionKind::XShell { r, c } => {
            let ny = quasi_norm(y, wp.b())?;
            let top = r.exp().min(c / ny);
            two_m * (top - 1.0).max(0.0)
        }
        RegionKind::Ball { radius } => disk(radius * radius - y_sq),
        RegionKind::Annulus { outer } => {
            let d = wp.d() as f64;
            disk(outer * outer - y_sq) - disk(d * d - y_sq)
        }
        RegionKind::Box { half_widths } => {
            if y.iter().zip(&half_widths[m..]).any(|(v, h)| v.abs() > *h) {
                0.0
            } else {
                half_widths[..m].iter().map(|h| 2.0 * h).product()
            }
        }
    })
}

/// Share of a centred box picked out by a direction set.
fn direction_fraction(dirs: &DirectionSet) -> Result<f64> {
    if dirs.is_full() {
        return Ok(1.0);
    }
    match dirs.sign_patterns() {
        Some(p) => Ok(p.len() as f64 / 2f64.powi(dirs.dimension() as i32)),
        None => Err(Error::UnsupportedMethod("slice integral of a box direction set".into())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlichfeldtRatio {
    pub ratio: f64,
    pub ball_count: usize,
    pub alpha: f64,
    pub alpha_exact: bool,
}

/// `1̂_{B_r}(Λ) / α(Λ)`.
pub fn blichfeldt_ratio(basis: &LatticeBasis, r: f64) -> Result<BlichfeldtRatio> {
    let d = basis.dim();
    if d < 2 {
        return Err(Error::invalid("dimension must be at least 2"));
    }
    let wp = WeightPair::equal(1, d - 1)?;
    let ball = Region::ball(wp, r)?;
    let ball_count = count_nonzero(basis, &ball)?;
    let a = alpha(basis)?;
    Ok(BlichfeldtRatio { ratio: ball_count as f64 / a.value, ball_count, alpha: a.value, alpha_exact: a.exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Sign;
    use crate::lattice::apply_flow;

    fn wp11() -> WeightPair {
        WeightPair::equal(1, 1).unwrap()
    }

    #[test]
    fn transform_examples() {
        let z2 = LatticeBasis::identity(2);
        let f = RiemannFunction::indicator(Region::ball(wp11(), 1.5).unwrap());
        assert_eq!(siegel_transform(&f, &z2).unwrap(), 8.0);
        assert_eq!(siegel_transform(&RiemannFunction::zero(wp11()), &z2).unwrap(), 0.0);
        let g = RiemannFunction::indicator(Region::ball(wp11(), 0.5).unwrap());
        assert_eq!(siegel_transform(&g, &z2).unwrap(), 0.0);
        let h = f.combine(3.0, &g, -2.0).unwrap();
        assert_eq!(siegel_transform(&h, &z2).unwrap(), 24.0);
    }

    #[test]
    fn theta_average_examples() {
        let f = RiemannFunction::indicator(Region::cube(wp11(), vec![0.25, 2.5]).unwrap());
        let avg = theta_average_identity(&f).unwrap();
        assert!((avg.analytic - 2.0).abs() < 1e-12 && avg.axis_part == 0.0);
        assert_eq!(theta_average_identity(&RiemannFunction::zero(wp11())).unwrap().analytic, 0.0);
        // ball of radius 1.5: slices at q = ±1 of length 2√1.25, axis points p = ±1
        let f = RiemannFunction::indicator(Region::ball(wp11(), 1.5).unwrap());
        let avg = theta_average_identity(&f).unwrap();
        assert!((avg.analytic - (2.0 * 5f64.sqrt() + 2.0)).abs() < 1e-12);
        // plain shell T = 2, c = 1: Σ_{1 ≤ |q| < e²} 2/|q| = 4 H_7
        let f = RiemannFunction::indicator(Region::y_shell_full(wp11(), 2.0, 1.0).unwrap());
        let h7: f64 = (1..=7).map(|k| 1.0 / k as f64).sum();
        assert!((theta_average_identity(&f).unwrap().analytic - 4.0 * h7).abs() < 1e-12);
    }

    #[test]
    fn theta_average_rejects_box_directions() {
        let dirs = DirectionSet::boxes(1, vec![vec![(0.0, 1.0)]]).unwrap();
        let r = Region::y_shell(wp11(), 1.0, 1.0, dirs, DirectionSet::full(1)).unwrap();
        assert!(matches!(
            theta_average_identity(&RiemannFunction::indicator(r)),
            Err(Error::UnsupportedMethod(_))
        ));
        let pos = DirectionSet::orthants(1, vec![vec![Sign::Plus]]).unwrap();
        let r = Region::y_shell(wp11(), 2.0, 1.0, pos, DirectionSet::full(1)).unwrap();
        let h7: f64 = (1..=7).map(|k| 1.0 / k as f64).sum();
        assert!((theta_average_identity(&RiemannFunction::indicator(r)).unwrap().analytic - 2.0 * h7).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_matches_theta_average() {
        let f = RiemannFunction::indicator(Region::ball(wp11(), 1.5).unwrap());
        let target = theta_average_identity(&f).unwrap().analytic;
        let MonteCarloMean { mean, std_error: se } = theta_average_monte_carlo(&f, 4000, 21).unwrap();
        assert!((mean - target).abs() < 3.0 * se, "{mean} ± {se} vs {target}");
    }

    #[test]
    fn blichfeldt_examples() {
        let r = blichfeldt_ratio(&LatticeBasis::identity(2), 1.5).unwrap();
        assert_eq!((r.ratio, r.ball_count, r.alpha), (8.0, 8, 1.0));
        let wp = wp11();
        for t in [1.0, 3.0, 5.0] {
            let b = apply_flow(&LatticeBasis::identity(2), &wp, t).unwrap();
            let r = blichfeldt_ratio(&b, 2.0).unwrap();
            assert!(r.ratio > 0.0 && r.alpha_exact);
        }
    }
}
