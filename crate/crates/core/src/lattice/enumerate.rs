use rayon::prelude::*;

use super::reduce::{self, Visit};
use super::{LatticeBasis, StructuredForm};
use crate::error::{Error, Result};
use crate::geometry::PointSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Per-`q` enumeration on `g_t u(θ)Z^d`.
    Structured,
    /// LLL plus ball enumeration on any basis.
    Generic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    pub coords: Vec<i64>,
    pub embedding: Vec<f64>,
}

const CANDIDATE_SLACK: f64 = 1e-9;

/// All lattice points in `set`, sorted by integer coordinates. The origin is
/// reported only if `include_origin` is set and the set contains it.
pub fn enumerate_points<S: PointSet + ?Sized>(
    basis: &LatticeBasis,
    set: &S,
    backend: Backend,
    include_origin: bool,
) -> Result<Vec<LatticePoint>> {
    let (m, n) = set.split();
    let d = basis.dim();
    if m + n != d {
        return Err(Error::invalid(format!("set lives in dimension {}, lattice in {d}", m + n)));
    }
    let bbox = set.bounding_box();
    if bbox.iter().any(|h| !h.is_finite() || *h < 0.0) {
        return Err(Error::invalid("set is not bounded"));
    }
    let mut points = match backend {
        Backend::Structured => {
            let form = basis
                .structured()
                .ok_or_else(|| Error::invalid("structured backend needs a u(θ) basis"))?;
            if form.x_scale().len() != m {
                return Err(Error::invalid("set split does not match the lattice's (m, n)"));
            }
            structured(basis, form, set, &bbox)
        }
        Backend::Generic => generic(basis, set, &bbox),
    };
    if include_origin {
        let zero = vec![0i64; d];
        let origin = basis.embed(&zero);
        if set.contains(&origin) {
            points.push(LatticePoint { coords: zero, embedding: origin });
        }
    }
    points.sort_by(|a, b| a.coords.cmp(&b.coords));
    Ok(points)
}

fn integer_range(centre: f64, half: f64) -> (i64, i64) {
    let h = half * (1.0 + CANDIDATE_SLACK) + CANDIDATE_SLACK;
    ((centre - h).ceil() as i64, (centre + h).floor() as i64)
}

/// Outer `q_0` values handled by one parallel task.
const OUTER_CHUNK: i64 = 4096;

fn structured<S: PointSet + ?Sized>(
    basis: &LatticeBasis,
    form: &StructuredForm,
    set: &S,
    bbox: &[f64],
) -> Vec<LatticePoint> {
    let m = form.x_scale().len();
    let q_bounds: Vec<i64> = bbox[m..]
        .iter()
        .zip(form.y_scale())
        .map(|(h, s)| integer_range(0.0, h / s).1)
        .collect();
    let outer = q_bounds[0];
    let chunks = (2 * outer + 1 + OUTER_CHUNK - 1) / OUTER_CHUNK;
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let from = -outer + k * OUTER_CHUNK;
            let to = (from + OUTER_CHUNK - 1).min(outer);
            let mut scan = FibreScan::new(basis, form, set);
            let mut q = vec![0i64; q_bounds.len()];
            for q0 in from..=to {
                q[0] = q0;
                for_each_in_box(&mut q, 1, &q_bounds, &mut |q| scan.run(q));
            }
            scan.out
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn for_each_in_box<F: FnMut(&[i64])>(v: &mut Vec<i64>, k: usize, bounds: &[i64], f: &mut F) {
    if k == v.len() {
        f(v);
        return;
    }
    for x in -bounds[k]..=bounds[k] {
        v[k] = x;
        for_each_in_box(v, k + 1, bounds, f);
    }
}

/// Reusable buffers for scanning the `p` block over a fixed `q`.
struct FibreScan<'a, S: ?Sized> {
    basis: &'a LatticeBasis,
    form: &'a StructuredForm,
    set: &'a S,
    y: Vec<f64>,
    xb: Vec<f64>,
    lo: Vec<i64>,
    hi: Vec<i64>,
    coords: Vec<i64>,
    out: Vec<LatticePoint>,
}

impl<'a, S: PointSet + ?Sized> FibreScan<'a, S> {
    fn new(basis: &'a LatticeBasis, form: &'a StructuredForm, set: &'a S) -> Self {
        let (m, n) = (form.x_scale().len(), form.y_scale().len());
        Self {
            basis,
            form,
            set,
            y: vec![0.0; n],
            xb: vec![0.0; m],
            lo: vec![0; m],
            hi: vec![0; m],
            coords: vec![0; m + n],
            out: Vec::new(),
        }
    }

    fn run(&mut self, q: &[i64]) {
        let form = self.form;
        for ((y, &qj), s) in self.y.iter_mut().zip(q).zip(form.y_scale()) {
            *y = s * qj as f64;
        }
        if !self.set.x_bounds_given_y(&self.y, &mut self.xb) {
            return;
        }
        let m = self.xb.len();
        for i in 0..m {
            // x_i = s_i (c_i + (θq)_i), |x_i| ≤ xb_i
            let (a, b) = integer_range(-form.theta_q(i, q), self.xb[i] / form.x_scale()[i]);
            if a > b {
                return;
            }
            self.lo[i] = a;
            self.hi[i] = b;
        }
        self.coords[..m].copy_from_slice(&self.lo);
        self.coords[m..].copy_from_slice(q);
        loop {
            if self.coords.iter().any(|&c| c != 0) {
                let v = self.basis.embed(&self.coords);
                if self.set.contains(&v) {
                    self.out.push(LatticePoint { coords: self.coords.clone(), embedding: v });
                }
            }
            // odometer over the p block
            let mut i = 0;
            loop {
                if i == m {
                    return;
                }
                if self.coords[i] < self.hi[i] {
                    self.coords[i] += 1;
                    break;
                }
                self.coords[i] = self.lo[i];
                i += 1;
            }
        }
    }
}

fn generic<S: PointSet + ?Sized>(basis: &LatticeBasis, set: &S, bbox: &[f64]) -> Vec<LatticePoint> {
    let d = basis.dim();
    if bbox.contains(&0.0) {
        return Vec::new();
    }
    // rescale so the bounding box becomes the unit cube, inside the ball of radius √d
    let mut scaled: reduce::Columns =
        basis.columns().iter().map(|c| c.iter().zip(bbox).map(|(v, h)| v / h).collect()).collect();
    let u = reduce::lll(&mut scaled);
    let mut out = Vec::new();
    reduce::enumerate_ball(&scaled, d as f64, 0, |z| {
        let coords = reduce::int_combination(&u, z);
        let v = basis.embed(&coords);
        if set.contains(&v) {
            out.push(LatticePoint { coords, embedding: v });
        }
        Visit::Continue
    });
    out
}
