use crate::error::{Error, Result};
use crate::geometry::{PointSet, Region, WeightPair};
use crate::lattice::{enumerate_points, Backend, LatticeBasis};

const GOLDEN_ITERS: usize = 200;
const BISECT_ITERS: usize = 200;
const TANGENCY_TOLERANCE: f64 = 1e-9;
const FALLBACK_STEPS: usize = 20_000;

/// `‖g_s v‖²`, a convex function of `s`.
fn flowed_norm2(v: &[f64], exps: &[f64], s: f64) -> f64 {
    v.iter().zip(exps).map(|(x, e)| (2.0 * e * s).exp() * x * x).sum()
}

/// Measure of `{s ∈ [0, T] : ‖g_s v‖ ∈ (inner, outer)}`. The squared norm is
/// convex along the orbit, so each sublevel set is an interval located by a
/// golden-section minimum and two bisections; near-tangent cases fall back
/// to midpoint quadrature.
pub fn annulus_time_in_region(v: &[f64], wp: &WeightPair, inner: f64, outer: f64, t: f64) -> f64 {
    let exps = wp.flow_exponents(1.0);
    let h = |s: f64| flowed_norm2(v, &exps, s);
    let (mut lo, mut hi) = (0.0, t);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..GOLDEN_ITERS {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if h(a) <= h(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let s_min = 0.5 * (lo + hi);
    let h_min = h(s_min).min(h(0.0)).min(h(t));
    let near = |level: f64| (h_min - level).abs() <= TANGENCY_TOLERANCE * level;
    if near(inner * inner) || near(outer * outer) {
        let ds = t / FALLBACK_STEPS as f64;
        let inside = (0..FALLBACK_STEPS)
            .filter(|&k| {
                let n2 = h((k as f64 + 0.5) * ds);
                n2 > inner * inner && n2 < outer * outer
            })
            .count();
        return inside as f64 * ds;
    }
    let below = |level: f64| -> f64 {
        if h_min >= level {
            return 0.0;
        }
        let left = if h(0.0) < level { 0.0 } else { crossing(&h, 0.0, s_min, level) };
        let right = if h(t) < level { t } else { crossing(&h, t, s_min, level) };
        (right - left).max(0.0)
    };
    below(outer * outer) - below(inner * inner)
}

/// Point between `outside` (h ≥ level) and `inside` (h < level) where `h`
/// crosses `level`.
fn crossing<H: Fn(f64) -> f64>(h: &H, mut outside: f64, mut inside: f64, level: f64) -> f64 {
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (outside + inside);
        if mid == outside || mid == inside {
            break;
        }
        if h(mid) < level {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    0.5 * (outside + inside)
}

/// Points `v` for which some `s ∈ [0, T]` has `|x_i| e^{a_i s} ≤ R` and
/// `|y_j| e^{-b_j s} ≤ R` for all coordinates. Every vector whose orbit meets
/// the ball of radius `R` before time `T` lies here.
struct Reach<'w> {
    wp: &'w WeightPair,
    radius: f64,
    t: f64,
}

impl Reach<'_> {
    fn entry_time(&self, y: &[f64]) -> f64 {
        y.iter()
            .zip(self.wp.b())
            .map(|(v, b)| (v.abs() / self.radius).ln() / b)
            .fold(0.0, f64::max)
    }
}

const REACH_SLACK: f64 = 1e-9;

impl PointSet for Reach<'_> {
    fn split(&self) -> (usize, usize) {
        (self.wp.m(), self.wp.n())
    }

    fn bounding_box(&self) -> Vec<f64> {
        let r = self.radius;
        self.wp.a().iter().map(|_| r).chain(self.wp.b().iter().map(|b| r * (b * self.t).exp())).collect()
    }

    fn x_bounds_given_y(&self, y: &[f64], out: &mut [f64]) -> bool {
        let s = self.entry_time(y);
        if s > self.t + REACH_SLACK {
            return false;
        }
        for (o, a) in out.iter_mut().zip(self.wp.a()) {
            *o = self.radius * (-a * s).exp();
        }
        true
    }

    fn contains(&self, v: &[f64]) -> bool {
        let (x, y) = self.wp.split(v);
        let exit = x
            .iter()
            .zip(self.wp.a())
            .map(|(v, a)| (self.radius / v.abs()).ln() / a)
            .fold(self.t, f64::min);
        self.entry_time(y) <= exit + REACH_SLACK
    }
}

/// `(1/T) ∫_0^T 1̂_A(g_t Λ) dt` for the annulus `A = {d < ‖v‖ < outer}`.
pub fn annulus_birkhoff_average(basis: &LatticeBasis, wp: &WeightPair, outer: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid("T must be positive and finite"));
    }
    // validates outer > d
    Region::annulus(wp.clone(), outer)?;
    let inner = wp.d() as f64;
    let candidates = Reach { wp, radius: outer, t };
    let backend = match basis.structured() {
        Some(s) if s.theta().weights() == wp => Backend::Structured,
        _ => Backend::Generic,
    };
    let pts = enumerate_points(basis, &candidates, backend, false)?;
    let total: f64 = pts.iter().map(|p| annulus_time_in_region(&p.embedding, wp, inner, outer, t)).sum();
    Ok(total / t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{apply_flow, unipotent_lattice, ThetaMatrix};
    use crate::rng;
    use crate::siegel::count_nonzero;

    #[test]
    fn single_vector_times() {
        let wp = WeightPair::equal(1, 1).unwrap();
        // ‖g_s(0, y)‖ = y e^{-s}: inside (2, 4) for s ∈ (ln(y/4), ln(y/2))
        let dt = annulus_time_in_region(&[0.0, 16.0], &wp, 2.0, 4.0, 5.0);
        assert!((dt - 2f64.ln()).abs() < 1e-12);
        // x-only vector leaves after ln(4/3)
        let dt = annulus_time_in_region(&[3.0, 0.0], &wp, 2.0, 4.0, 5.0);
        assert!((dt - (4.0f64 / 3.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn matches_quadrature_of_counts() {
        let wp = WeightPair::equal(1, 1).unwrap();
        let mut r = rng::stream(6, 0);
        let basis = unipotent_lattice(&ThetaMatrix::random(wp.clone(), &mut r));
        let t = 3.0;
        let exact = annulus_birkhoff_average(&basis, &wp, 4.0, t).unwrap();
        let steps = 3000;
        let ann = Region::annulus(wp.clone(), 4.0).unwrap();
        let quad: f64 = (0..steps)
            .map(|k| {
                let s = (k as f64 + 0.5) * t / steps as f64;
                count_nonzero(&apply_flow(&basis, &wp, s).unwrap(), &ann).unwrap() as f64
            })
            .sum::<f64>()
            / steps as f64;
        assert!((exact - quad).abs() < 2e-2 * exact.max(1.0), "{exact} vs {quad}");
    }

    #[test]
    fn reach_set_keeps_every_contributing_point() {
        let wp = WeightPair::new(vec![0.4, 0.6], vec![1.0]).unwrap();
        let mut r = rng::stream(2, 0);
        let basis = unipotent_lattice(&ThetaMatrix::random(wp.clone(), &mut r));
        let (outer, t) = (4.5, 4.0);
        let reach = Reach { wp: &wp, radius: outer, t };
        let cube: Vec<f64> = reach.bounding_box();
        let all = enumerate_points(&basis, &Region::cube(wp.clone(), cube).unwrap(), Backend::Structured, false).unwrap();
        let kept = enumerate_points(&basis, &reach, Backend::Structured, false).unwrap();
        assert!(kept.len() < all.len());
        let total = |pts: &[crate::lattice::LatticePoint]| -> f64 {
            pts.iter().map(|p| annulus_time_in_region(&p.embedding, &wp, 3.0, outer, t)).sum()
        };
        assert_eq!(total(&all), total(&kept));
    }
}
