use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;

use super::weights::quasi_norm_unchecked;
use super::{ball_volume, euclidean_norm, DirectionSet, WeightPair};

/// A bounded subset of `R^d = R^m × R^n` presented fibre-wise over the `y`
/// block, which is what the lattice enumerators consume.
///
/// Both bounds are necessary conditions only; final membership is always
/// decided by [`PointSet::contains`].
pub trait PointSet: Sync {
    fn split(&self) -> (usize, usize);

    /// Half-widths `h` with `v ∈ S ⇒ |v_k| ≤ h_k`.
    fn bounding_box(&self) -> Vec<f64>;

    /// Writes half-widths for the `x` block of points of the set lying over
    /// `y` into `out`; returns `false` when the fibre is empty.
    fn x_bounds_given_y(&self, y: &[f64], out: &mut [f64]) -> bool;

    fn contains(&self, v: &[f64]) -> bool;
}

#[derive(Debug, Clone, PartialEq)]
pub enum RegionKind {
    /// `‖x‖_a < c/‖y‖_b`, `1 ≤ ‖y‖_b < e^T`, `π_a(x) ∈ A`, `π_b(y) ∈ B`.
    YShell { t_max: f64, c: f64, a_dirs: DirectionSet, b_dirs: DirectionSet },
    /// `‖x‖_a ‖y‖_b < c`, `1 ≤ ‖x‖_a < e^r`.
    XShell { r: f64, c: f64 },
    /// Open Euclidean annulus `d < ‖v‖ < outer`.
    Annulus { outer: f64 },
    /// Open Euclidean ball `‖v‖ < radius`.
    Ball { radius: f64 },
    /// Closed centred box `|v_k| ≤ h_k`.
    Box { half_widths: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    kind: RegionKind,
    weights: WeightPair,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VolumeMethod {
    ClosedForm,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate {
    pub value: f64,
    pub std_error: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

const MC_BLOCK: u64 = 1 << 16;

impl Region {
    pub fn y_shell(weights: WeightPair, t_max: f64, c: f64, a_dirs: DirectionSet, b_dirs: DirectionSet) -> Result<Self> {
        positive("T", t_max)?;
        positive("c", c)?;
        if a_dirs.dimension() != weights.m() || b_dirs.dimension() != weights.n() {
            return Err(Error::invalid("direction set dimensions must be (m, n)"));
        }
        Ok(Self { kind: RegionKind::YShell { t_max, c, a_dirs, b_dirs }, weights })
    }

    /// The plain region with both direction sets equal to the full sphere.
    pub fn y_shell_full(weights: WeightPair, t_max: f64, c: f64) -> Result<Self> {
        let (m, n) = (weights.m(), weights.n());
        Self::y_shell(weights, t_max, c, DirectionSet::full(m), DirectionSet::full(n))
    }

    pub fn x_shell(weights: WeightPair, r: f64, c: f64) -> Result<Self> {
        positive("r", r)?;
        positive("c", c)?;
        Ok(Self { kind: RegionKind::XShell { r, c }, weights })
    }

    pub fn annulus(weights: WeightPair, outer: f64) -> Result<Self> {
        let inner = weights.d() as f64;
        if !(outer > inner) || !outer.is_finite() {
            return Err(Error::invalid(format!("annulus outer radius {outer} must exceed d = {inner}")));
        }
        Ok(Self { kind: RegionKind::Annulus { outer }, weights })
    }

    pub fn ball(weights: WeightPair, radius: f64) -> Result<Self> {
        positive("radius", radius)?;
        Ok(Self { kind: RegionKind::Ball { radius }, weights })
    }

    pub fn cube(weights: WeightPair, half_widths: Vec<f64>) -> Result<Self> {
        if half_widths.len() != weights.d() {
            return Err(Error::invalid("box needs d half-widths"));
        }
        for &h in &half_widths {
            positive("half-width", h)?;
        }
        Ok(Self { kind: RegionKind::Box { half_widths }, weights })
    }

    pub fn kind(&self) -> &RegionKind {
        &self.kind
    }

    pub fn weights(&self) -> &WeightPair {
        &self.weights
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            RegionKind::YShell { .. } => "E",
            RegionKind::XShell { .. } => "F",
            RegionKind::Annulus { .. } => "annulus",
            RegionKind::Ball { .. } => "ball",
            RegionKind::Box { .. } => "box",
        }
    }

    /// Origin symmetry of the region (every variant except direction
    /// constrained shells).
    pub fn is_symmetric(&self) -> bool {
        match &self.kind {
            RegionKind::YShell { a_dirs, b_dirs, .. } => a_dirs.is_full() && b_dirs.is_full(),
            _ => true,
        }
    }

    pub fn contains_origin(&self) -> bool {
        self.contains(&vec![0.0; self.weights.d()])
    }

    /// Upper bound on the Euclidean norm of any member.
    pub fn euclidean_bound(&self) -> f64 {
        euclidean_norm(&self.bounding_box())
    }

    pub fn volume(&self, method: VolumeMethod) -> Result<VolumeEstimate> {
        match method {
            VolumeMethod::ClosedForm => self.closed_form_volume().map(|value| VolumeEstimate { value, std_error: 0.0 }),
            VolumeMethod::MonteCarlo { samples, seed } => self.monte_carlo_volume(samples, seed),
        }
    }

    fn closed_form_volume(&self) -> Result<f64> {
        let d = self.weights.d();
        let two_d = 2f64.powi(d as i32);
        match &self.kind {
            RegionKind::YShell { t_max, c, a_dirs, b_dirs } => {
                if !(a_dirs.is_full() && b_dirs.is_full()) {
                    return Err(Error::UnsupportedMethod(
                        "closed-form volume is only available for full direction sets".into(),
                    ));
                }
                Ok(two_d * c * t_max)
            }
            RegionKind::XShell { r, c } => Ok(two_d * c * r),
            RegionKind::Annulus { outer } => Ok(ball_volume(d, *outer) - ball_volume(d, d as f64)),
            RegionKind::Ball { radius } => Ok(ball_volume(d, *radius)),
            RegionKind::Box { half_widths } => Ok(half_widths.iter().map(|h| 2.0 * h).product()),
        }
    }

    /// Uniform sampling of the bounding box; binomial standard error.
    fn monte_carlo_volume(&self, samples: u64, seed: u64) -> Result<VolumeEstimate> {
        if samples == 0 {
            return Err(Error::invalid("Monte Carlo volume needs at least one sample"));
        }
        let bbox = self.bounding_box();
        let box_volume: f64 = bbox.iter().map(|h| 2.0 * h).product();
        let blocks = samples.div_ceil(MC_BLOCK);
        let hits: u64 = (0..blocks)
            .into_par_iter()
            .map(|block| {
                let mut rng = rng::stream(seed, block);
                let count = MC_BLOCK.min(samples - block * MC_BLOCK);
                let mut v = vec![0.0; bbox.len()];
                let mut hits = 0u64;
                for _ in 0..count {
                    for (vk, h) in v.iter_mut().zip(&bbox) {
                        *vk = (2.0 * rng.random::<f64>() - 1.0) * h;
                    }
                    if self.contains(&v) {
                        hits += 1;
                    }
                }
                hits
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        let p = hits as f64 / samples as f64;
        Ok(VolumeEstimate {
            value: box_volume * p,
            std_error: box_volume * (p * (1.0 - p) / samples as f64).sqrt(),
        })
    }
}

impl PointSet for Region {
    fn split(&self) -> (usize, usize) {
        (self.weights.m(), self.weights.n())
    }

    fn bounding_box(&self) -> Vec<f64> {
        let (a, b) = (self.weights.a(), self.weights.b());
        let d = self.weights.d();
        match &self.kind {
            // ‖y‖_b < e^T, ‖x‖_a < c/‖y‖_b ≤ c
            RegionKind::YShell { t_max, c, .. } => {
                a.iter().map(|ai| c.powf(*ai)).chain(b.iter().map(|bj| (bj * t_max).exp())).collect()
            }
            // ‖x‖_a < e^r, ‖y‖_b < c/‖x‖_a ≤ c
            RegionKind::XShell { r, c } => {
                a.iter().map(|ai| (ai * r).exp()).chain(b.iter().map(|bj| c.powf(*bj))).collect()
            }
            RegionKind::Annulus { outer } => vec![*outer; d],
            RegionKind::Ball { radius } => vec![*radius; d],
            RegionKind::Box { half_widths } => half_widths.clone(),
        }
    }

    fn x_bounds_given_y(&self, y: &[f64], out: &mut [f64]) -> bool {
        let (a, b) = (self.weights.a(), self.weights.b());
        match &self.kind {
            RegionKind::YShell { t_max, c, .. } => {
                let ny = quasi_norm_unchecked(y, b);
                // loose upper cut; exact membership is decided by `contains`
                if !(ny >= 1.0) || !(ny <= (t_max * (1.0 + 1e-12)).exp()) {
                    return false;
                }
                fill_powers(out, c / ny, a);
                true
            }
            RegionKind::XShell { r, c } => {
                let ny = quasi_norm_unchecked(y, b);
                if !(ny < *c) {
                    return false;
                }
                for (o, ai) in out.iter_mut().zip(a) {
                    let shell = (ai * r).exp();
                    *o = if ny > 0.0 { shell.min((c / ny).powf(*ai)) } else { shell };
                }
                true
            }
            RegionKind::Annulus { outer: radius } | RegionKind::Ball { radius } => {
                let rest = radius * radius - y.iter().map(|v| v * v).sum::<f64>();
                if rest <= 0.0 {
                    return false;
                }
                out.fill(rest.sqrt());
                true
            }
            RegionKind::Box { half_widths } => {
                let (hx, hy) = half_widths.split_at(a.len());
                if y.iter().zip(hy).any(|(v, h)| v.abs() > *h) {
                    return false;
                }
                out.copy_from_slice(hx);
                true
            }
        }
    }

    fn contains(&self, v: &[f64]) -> bool {
        let (a, b) = (self.weights.a(), self.weights.b());
        let (x, y) = self.weights.split(v);
        match &self.kind {
            RegionKind::YShell { t_max, c, a_dirs, b_dirs } => {
                let ny = quasi_norm_unchecked(y, b);
                if !(ny >= 1.0) || !(ny.ln() < *t_max) {
                    return false;
                }
                let nx = quasi_norm_unchecked(x, a);
                nx * ny < *c && a_dirs.admits(x, a) && b_dirs.admits(y, b)
            }
            RegionKind::XShell { r, c } => {
                let nx = quasi_norm_unchecked(x, a);
                if !(nx >= 1.0) || !(nx.ln() < *r) {
                    return false;
                }
                nx * quasi_norm_unchecked(y, b) < *c
            }
            RegionKind::Annulus { outer } => {
                let norm = euclidean_norm(v);
                norm > self.weights.d() as f64 && norm < *outer
            }
            RegionKind::Ball { radius } => euclidean_norm(v) < *radius,
            RegionKind::Box { half_widths } => v.iter().zip(half_widths).all(|(x, h)| x.abs() <= *h),
        }
    }
}

fn fill_powers(out: &mut [f64], base: f64, exps: &[f64]) {
    for (o, e) in out.iter_mut().zip(exps) {
        *o = if *e == 1.0 { base } else { base.powf(*e) };
    }
}
