//! Unimodular lattices in `R^d`, the unipotent family `u(θ)Z^d`, the diagonal
//! flow acting on them, exact enumeration in bounded sets, successive minima
//! and the α function.

mod enumerate;
mod minima;
pub(crate) mod reduce;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::WeightPair;

pub use enumerate::{enumerate_points, Backend, LatticePoint};

pub use minima::{alpha, successive_minima, AlphaResult, MinimaResult, ALPHA_EXACT_MAX_DIM, MINIMA_MAX_DIM};

const UNIMODULAR_TOLERANCE: f64 = 1e-9;

/// An `m × n` real matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaMatrix {
    entries: Vec<f64>,
    wp: WeightPair,
}

impl ThetaMatrix {
    pub fn new(wp: WeightPair, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != wp.m() || rows.iter().any(|r| r.len() != wp.n()) {
            return Err(Error::invalid(format!("θ must be {}×{}", wp.m(), wp.n())));
        }
        let entries: Vec<f64> = rows.into_iter().flatten().collect();
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("θ has non-finite entries"));
        }
        Ok(Self { entries, wp })
    }

    pub fn zeros(wp: WeightPair) -> Self {
        let entries = vec![0.0; wp.m() * wp.n()];
        Self { entries, wp }
    }

    /// Uniform on `[0,1)^{mn}`.
    pub fn random<R: Rng + ?Sized>(wp: WeightPair, rng: &mut R) -> Self {
        let entries = (0..wp.m() * wp.n()).map(|_| rng.random::<f64>()).collect();
        Self { entries, wp }
    }

    pub fn weights(&self) -> &WeightPair {
        &self.wp
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.wp.n() + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.wp.n()).map(<[f64]>::to_vec).collect()
    }

    /// Negates rows in `rows` and columns in `cols`, i.e. `ζ_I θ η_J`.
    pub fn flip(&self, rows: &[usize], cols: &[usize]) -> Self {
        let n = self.wp.n();
        let entries = self
            .entries
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let s = (rows.contains(&(k / n)) as u8 + cols.contains(&(k % n)) as u8) % 2;
                if s == 1 {
                    -v
                } else {
                    v
                }
            })
            .collect();
        Self { entries, wp: self.wp.clone() }
    }
}

/// `g_t u(θ)` acting on the standard basis; scales cached per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredForm {
    theta: ThetaMatrix,
    t_applied: f64,
    x_scale: Vec<f64>,
    y_scale: Vec<f64>,
}

impl StructuredForm {
    fn new(theta: ThetaMatrix, t_applied: f64) -> Self {
        let wp = theta.weights();
        let x_scale = wp.a().iter().map(|a| (a * t_applied).exp()).collect();
        let y_scale = wp.b().iter().map(|b| (-b * t_applied).exp()).collect();
        Self { theta, t_applied, x_scale, y_scale }
    }

    pub fn theta(&self) -> &ThetaMatrix {
        &self.theta
    }

    pub fn t_applied(&self) -> f64 {
        self.t_applied
    }

    pub(crate) fn x_scale(&self) -> &[f64] {
        &self.x_scale
    }

    pub(crate) fn y_scale(&self) -> &[f64] {
        &self.y_scale
    }

    /// `(θ q)_i` accumulated in column order.
    #[inline]
    pub(crate) fn theta_q(&self, i: usize, q: &[i64]) -> f64 {
        let mut s = 0.0;
        for (j, &qj) in q.iter().enumerate() {
            s += self.theta.get(i, j) * qj as f64;
        }
        s
    }
}

/// A basis of a unimodular lattice, stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeBasis {
    columns: Vec<Vec<f64>>,
    structured: Option<StructuredForm>,
}

pub(crate) fn determinant(columns: &[Vec<f64>]) -> f64 {
    let d = columns.len();
    DMatrix::from_fn(d, d, |i, j| columns[j][i]).determinant()
}

impl LatticeBasis {
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let d = columns.len();
        if d == 0 || columns.iter().any(|c| c.len() != d) {
            return Err(Error::invalid("basis must be d columns of length d"));
        }
        if columns.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("basis has non-finite entries"));
        }
        let det = determinant(&columns);
        if (det - 1.0).abs() > UNIMODULAR_TOLERANCE {
            return Err(Error::invalid(format!("basis determinant {det} is not 1")));
        }
        Ok(Self { columns, structured: None })
    }

    pub fn identity(d: usize) -> Self {
        let columns = (0..d).map(|j| (0..d).map(|i| f64::from(u8::from(i == j))).collect()).collect();
        Self { columns, structured: None }
    }

    /// A random unimodular basis: Gaussian entries rescaled to determinant 1.
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        loop {
            let mut columns: Vec<Vec<f64>> =
                (0..d).map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()).collect();
            let det = determinant(&columns);
            if det.abs() < 1e-3 {
                continue;
            }
            if det < 0.0 {
                columns[0].iter_mut().for_each(|v| *v = -*v);
            }
            let s = det.abs().powf(-1.0 / d as f64);
            columns.iter_mut().flatten().for_each(|v| *v *= s);
            return Self { columns, structured: None };
        }
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn structured(&self) -> Option<&StructuredForm> {
        self.structured.as_ref()
    }

    pub fn determinant(&self) -> f64 {
        determinant(&self.columns)
    }

    /// The lattice point with the given integer coordinates. For structured
    /// bases the `u(θ)` form is evaluated directly, so every consumer sees
    /// bitwise identical embeddings.
    pub fn embed(&self, coords: &[i64]) -> Vec<f64> {
        match &self.structured {
            Some(s) => {
                let m = s.x_scale.len();
                let (c, q) = coords.split_at(m);
                let mut v = Vec::with_capacity(coords.len());
                for (i, (scale, &ci)) in s.x_scale.iter().zip(c).enumerate() {
                    v.push(scale * (ci as f64 + s.theta_q(i, q)));
                }
                for (j, &qj) in q.iter().enumerate() {
                    v.push(s.y_scale[j] * qj as f64);
                }
                v
            }
            None => reduce::real_combination(&self.columns, coords),
        }
    }

    /// Basis of the dual lattice, `B^{-T}`.
    pub fn dual(&self) -> Result<Vec<Vec<f64>>> {
        let d = self.dim();
        let m = DMatrix::from_fn(d, d, |i, j| self.columns[j][i]);
        let inv = m.try_inverse().ok_or_else(|| Error::Domain("singular basis".into()))?;
        // columns of B^{-T} are the rows of B^{-1}
        Ok((0..d).map(|j| (0..d).map(|i| inv[(j, i)]).collect()).collect())
    }
}

/// The basis `u(θ)e_1, …, u(θ)e_d` of `{(θq − p, q)}`; integer coordinates
/// are `(−p, q)`.
pub fn unipotent_lattice(theta: &ThetaMatrix) -> LatticeBasis {
    structured_basis(StructuredForm::new(theta.clone(), 0.0))
}

fn structured_basis(form: StructuredForm) -> LatticeBasis {
    let wp = form.theta.weights();
    let (m, d) = (wp.m(), wp.d());
    let mut columns = Vec::with_capacity(d);
    for i in 0..m {
        let mut col = vec![0.0; d];
        col[i] = form.x_scale[i];
        columns.push(col);
    }
    for j in 0..wp.n() {
        let mut col = vec![0.0; d];
        for (i, cell) in col.iter_mut().take(m).enumerate() {
            *cell = form.x_scale[i] * form.theta.get(i, j);
        }
        col[m + j] = form.y_scale[j];
        columns.push(col);
    }
    LatticeBasis { columns, structured: Some(form) }
}

/// `u(θ)Λ`; stays structured when `Λ` is the standard lattice.
pub fn unipotent_image(theta: &ThetaMatrix, basis: &LatticeBasis) -> Result<LatticeBasis> {
    let wp = theta.weights();
    if basis.dim() != wp.d() {
        return Err(Error::invalid("θ does not match the lattice dimension"));
    }
    if basis.structured.is_none() && basis == &LatticeBasis::identity(basis.dim()) {
        return Ok(unipotent_lattice(theta));
    }
    let m = wp.m();
    let columns = basis
        .columns
        .iter()
        .map(|c| {
            let mut out = c.clone();
            for (i, o) in out.iter_mut().enumerate().take(m) {
                *o += (0..wp.n()).map(|j| theta.get(i, j) * c[m + j]).sum::<f64>();
            }
            out
        })
        .collect();
    Ok(LatticeBasis { columns, structured: None })
}

/// `g_t Λ`. Structured bases accumulate the flow time instead of compounding
/// rounding.
pub fn apply_flow(basis: &LatticeBasis, wp: &WeightPair, t: f64) -> Result<LatticeBasis> {
    if wp.d() != basis.dim() {
        return Err(Error::invalid("weight pair dimension does not match the lattice"));
    }
    if !t.is_finite() {
        return Err(Error::invalid("flow time must be finite"));
    }
    if let Some(form) = &basis.structured {
        if form.theta.weights() == wp {
            return Ok(structured_basis(StructuredForm::new(form.theta.clone(), form.t_applied + t)));
        }
    }
    let exps = wp.flow_exponents(t);
    let columns = basis
        .columns
        .iter()
        .map(|c| c.iter().zip(&exps).map(|(v, e)| v * e.exp()).collect())
        .collect();
    Ok(LatticeBasis { columns, structured: None })
}
