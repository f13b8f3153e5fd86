use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::WeightPair;
use crate::lattice::reduce::{self, Columns, Visit};
use crate::lattice::{determinant, unipotent_lattice, ThetaMatrix};
use crate::rng;
use crate::stats;

/// `|E[F(t)F(w)]| ≤ C e^{−δ min(t, w−t)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayBound {
    pub c: f64,
    pub delta: f64,
}

impl DecayBound {
    pub fn new(c: f64, delta: f64) -> Result<Self> {
        if !(c > 0.0 && delta > 0.0) || !c.is_finite() || !delta.is_finite() {
            return Err(Error::invalid("decay constants C and δ must be positive"));
        }
        Ok(Self { c, delta })
    }

    /// `4Cδ^{−1}`.
    pub fn variance_constant(&self) -> f64 {
        4.0 * self.c / self.delta
    }
}

/// Observable `φ(Λ) = exp(−♯(Λ ∩ B_ρ ∖ {0}))` along `g_t u(θ)Z^d`, centred by
/// a long-orbit estimate of its mean.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicalProcess {
    weights: WeightPair,
    radius: f64,
    mean: f64,
    mean_std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub orbit_length: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for MeanEstimate {
    fn default() -> Self {
        Self { orbit_length: 1 << 15, samples: 64, seed: 0x6d65_616e }
    }
}

impl DynamicalProcess {
    pub fn new(weights: WeightPair, radius: f64, estimate: MeanEstimate) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid("ball radius must be positive"));
        }
        if estimate.orbit_length == 0 || estimate.samples < 2 {
            return Err(Error::invalid("mean estimate needs a positive orbit length and two samples"));
        }
        let uncentred = Self { weights, radius, mean: 0.0, mean_std_error: 0.0 };
        // one reading per unit time, at the unit midpoints
        let averages: Vec<f64> = (0..estimate.samples)
            .into_par_iter()
            .map(|k| {
                let mut r = rng::stream(estimate.seed, k as u64);
                let orbit = uncentred.orbit(&mut r, estimate.orbit_length);
                let total: f64 = orbit.iter().map(|b| uncentred.observe(b, 0.5)).sum();
                total / estimate.orbit_length as f64
            })
            .collect();
        let (mean, mean_std_error) = stats::mean_and_se(&averages);
        Ok(Self { mean, mean_std_error, ..uncentred })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn mean_std_error(&self) -> f64 {
        self.mean_std_error
    }

    pub fn weights(&self) -> &WeightPair {
        &self.weights
    }

    /// Reduced bases of `g_n u(θ)Z^d` at integer times `n < len`: flowed one
    /// unit at a time, LLL-reduced and rescaled to determinant one.
    fn orbit<R: Rng + ?Sized>(&self, r: &mut R, len: usize) -> Vec<Columns> {
        let theta = ThetaMatrix::random(self.weights.clone(), r);
        let mut b: Columns = unipotent_lattice(&theta).columns().to_vec();
        let unit: Vec<f64> = self.weights.flow_exponents(1.0).iter().map(|e| e.exp()).collect();
        let d = b.len();
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            reduce::lll(&mut b);
            out.push(b.clone());
            for col in b.iter_mut() {
                for (v, s) in col.iter_mut().zip(&unit) {
                    *v *= s;
                }
            }
            let det = determinant(&b);
            let s = det.abs().powf(-1.0 / d as f64);
            b.iter_mut().flatten().for_each(|v| *v *= s);
        }
        out
    }

    /// `φ(g_s Λ)` for a snapshot basis `Λ` and `0 ≤ s ≤ 1`.
    fn observe(&self, snapshot: &Columns, s: f64) -> f64 {
        let scale: Vec<f64> = self.weights.flow_exponents(s).iter().map(|e| e.exp()).collect();
        let b: Columns = snapshot.iter().map(|c| c.iter().zip(&scale).map(|(v, k)| v * k).collect()).collect();
        let r2 = self.radius * self.radius;
        let mut count = 0u32;
        reduce::enumerate_ball(&b, r2, 0, |z| {
            let v = reduce::real_combination(&b, z);
            if reduce::dot(&v, &v) < r2 {
                count += 1;
            }
            Visit::Continue
        });
        (-(count as f64)).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProcessKind {
    Zero,
    /// `±1` with equal probability, constant on unit blocks, independent.
    IidBlock,
    /// Stationary `±1` chain on unit blocks flipping with the given probability.
    Markov { flip_probability: f64 },
    Dynamical(DynamicalProcess),
}

/// A law on trajectories `t ↦ F(y, t)` with `|F| ≤ bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessEnsemble {
    kind: ProcessKind,
    bound: f64,
    decay: Option<DecayBound>,
}

impl ProcessEnsemble {
    pub fn zero() -> Self {
        Self { kind: ProcessKind::Zero, bound: 0.0, decay: Some(DecayBound { c: 1.0, delta: 1.0 }) }
    }

    /// Correlations vanish across blocks and are 1 within one, so the decay
    /// hypothesis holds with `δ = 1`, `C = e`.
    pub fn iid_block() -> Self {
        Self {
            kind: ProcessKind::IidBlock,
            bound: 1.0,
            decay: Some(DecayBound { c: std::f64::consts::E, delta: 1.0 }),
        }
    }

    /// Block correlations `ρ^k` with `ρ = 1 − 2p` give `C = 1/ρ`, `δ = −ln ρ`.
    pub fn markov(flip_probability: f64) -> Result<Self> {
        if !(flip_probability > 0.0 && flip_probability < 0.5) {
            return Err(Error::invalid("flip probability must lie in (0, 1/2)"));
        }
        let rho = 1.0 - 2.0 * flip_probability;
        Ok(Self {
            kind: ProcessKind::Markov { flip_probability },
            bound: 1.0,
            decay: Some(DecayBound { c: 1.0 / rho, delta: -rho.ln() }),
        })
    }

    /// No decay constants are claimed; attach fitted ones with
    /// [`ProcessEnsemble::with_decay`].
    pub fn dynamical(process: DynamicalProcess) -> Self {
        let bound = process.mean.max(1.0 - process.mean);
        Self { kind: ProcessKind::Dynamical(process), bound, decay: None }
    }

    pub fn with_decay(mut self, decay: DecayBound) -> Self {
        self.decay = Some(decay);
        self
    }

    pub fn kind(&self) -> &ProcessKind {
        &self.kind
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn decay(&self) -> Option<DecayBound> {
        self.decay
    }

    pub(crate) fn require_decay(&self) -> Result<DecayBound> {
        self.decay.ok_or_else(|| Error::invalid("process has no decay bound"))
    }

    /// Trajectory number `trial` over `[0, horizon]`.
    pub fn sample(&self, seed: u64, trial: u64, horizon: usize) -> Trajectory {
        let mut r = rng::stream(seed, trial);
        let path = match &self.kind {
            ProcessKind::Zero => Path::Blocks(vec![0.0; horizon]),
            ProcessKind::IidBlock => {
                Path::Blocks((0..horizon).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect())
            }
            ProcessKind::Markov { flip_probability } => {
                let mut s = if r.random::<bool>() { 1.0 } else { -1.0 };
                Path::Blocks(
                    (0..horizon)
                        .map(|_| {
                            let v = s;
                            if r.random::<f64>() < *flip_probability {
                                s = -s;
                            }
                            v
                        })
                        .collect(),
                )
            }
            ProcessKind::Dynamical(p) => Path::Orbit { snapshots: p.orbit(&mut r, horizon), process: p.clone() },
        };
        Trajectory { horizon, path }
    }
}

#[derive(Debug, Clone)]
enum Path {
    Blocks(Vec<f64>),
    Orbit { snapshots: Vec<Columns>, process: DynamicalProcess },
}

/// One sampled trajectory on `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    horizon: usize,
    path: Path,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `F(y, t)` for `0 ≤ t < horizon`.
    pub fn value(&self, t: f64) -> f64 {
        let n = (t.floor().max(0.0) as usize).min(self.horizon.saturating_sub(1));
        match &self.path {
            Path::Blocks(v) => v[n],
            Path::Orbit { snapshots, process } => process.observe(&snapshots[n], t - n as f64) - process.mean,
        }
    }

    /// `∫_n^{n+1} F` for every unit, by midpoint quadrature with the given
    /// step (exact for block processes).
    pub fn unit_integrals(&self, step: f64) -> Result<Vec<f64>> {
        match &self.path {
            Path::Blocks(v) => Ok(v.clone()),
            Path::Orbit { snapshots, process } => {
                let cells = cells_per_unit(step)?;
                let h = 1.0 / cells as f64;
                Ok(snapshots
                    .iter()
                    .map(|b| {
                        (0..cells).map(|k| process.observe(b, (k as f64 + 0.5) * h) - process.mean).sum::<f64>() * h
                    })
                    .collect())
            }
        }
    }
}

fn cells_per_unit(step: f64) -> Result<usize> {
    let cells = (1.0 / step).round();
    if !(step > 0.0) || cells < 1.0 || ((cells * step) - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!("quadrature step {step} must divide one unit")));
    }
    Ok(cells as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_processes_are_bounded_and_reproducible() {
        for ens in [ProcessEnsemble::iid_block(), ProcessEnsemble::markov(0.2).unwrap()] {
            let a = ens.sample(3, 1, 64).unit_integrals(1.0 / 64.0).unwrap();
            let b = ens.sample(3, 1, 64).unit_integrals(1.0 / 64.0).unwrap();
            assert_eq!(a, b);
            assert!(a.iter().all(|v| v.abs() <= ens.bound()));
        }
        let z = ProcessEnsemble::zero().sample(1, 0, 8);
        assert_eq!(z.value(3.5), 0.0);
        assert!(ProcessEnsemble::markov(0.5).is_err());
    }

    #[test]
    fn dynamical_observable_is_centred_and_bounded() {
        let wp = WeightPair::equal(1, 1).unwrap();
        let p = DynamicalProcess::new(wp, 1.0, MeanEstimate { orbit_length: 256, samples: 8, seed: 1 }).unwrap();
        assert!(p.mean() > 0.0 && p.mean() < 1.0);
        let ens = ProcessEnsemble::dynamical(p);
        let tr = ens.sample(5, 0, 32);
        let units = tr.unit_integrals(1.0 / 8.0).unwrap();
        assert_eq!(units.len(), 32);
        assert!(units.iter().all(|v| v.abs() <= ens.bound() + 1e-12));
        assert!(tr.value(3.25).abs() <= ens.bound() + 1e-12);
        assert!(tr.unit_integrals(0.3).is_err());
    }

    #[test]
    fn orbit_bases_stay_unimodular() {
        let wp = WeightPair::equal(1, 1).unwrap();
        let p = DynamicalProcess { weights: wp, radius: 1.0, mean: 0.0, mean_std_error: 0.0 };
        let mut r = rng::stream(2, 0);
        for b in p.orbit(&mut r, 200) {
            assert!((determinant(&b).abs() - 1.0).abs() < 1e-9);
        }
    }
}
