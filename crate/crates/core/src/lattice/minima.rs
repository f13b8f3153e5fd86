use nalgebra::DMatrix;

use super::reduce::{self, Columns, IntMatrix, Visit};
use super::LatticeBasis;
use crate::error::{Error, Result};
use crate::geometry::ball_volume;

pub const MINIMA_MAX_DIM: usize = 6;
pub const ALPHA_EXACT_MAX_DIM: usize = 4;

/// Cap on the candidate list of the rank-2 subgroup search.
const PAIR_SEARCH_CAP: usize = 6000;
const HERMITE_2: f64 = 1.154_700_538_379_251_5; // 2/√3

#[derive(Debug, Clone, PartialEq)]
pub struct MinimaResult {
    pub lambdas: Vec<f64>,
    /// Integer coordinates of vectors realising each minimum.
    pub witnesses: Vec<Vec<i64>>,
    pub gauge_radius: f64,
    pub exact: bool,
}

impl MinimaResult {
    /// `λ_1 ⋯ λ_d · vol(gauge ball)`, which lies in `[2^d/d!, 2^d]`.
    pub fn minkowski_product(&self) -> f64 {
        let d = self.lambdas.len();
        self.lambdas.iter().product::<f64>() * ball_volume(d, self.gauge_radius)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaResult {
    pub value: f64,
    pub best_rank: usize,
    pub best_subgroup_basis: Vec<Vec<i64>>,
    pub exact: bool,
}

/// An LLL-reduced copy of a basis with its integer transform.
struct Reduced {
    b: Columns,
    u: IntMatrix,
}

impl Reduced {
    fn new(columns: &[Vec<f64>]) -> Self {
        let mut b = columns.to_vec();
        let u = reduce::lll(&mut b);
        Self { b, u }
    }

    fn to_original(&self, z: &[i64]) -> Vec<i64> {
        reduce::int_combination(&self.u, z)
    }

    /// Shortest vector outside the rational span of `witnesses` (reduced
    /// coordinates), with its squared norm.
    fn shortest_outside(&self, witnesses: &[Vec<i64>]) -> (Vec<i64>, f64) {
        let d = self.b.len();
        let k = witnesses.len();
        let (_, inv) = reduce::adapted_unimodular(witnesses, d);
        let mut c: Columns = inv.iter().map(|col| reduce::real_combination(&self.b, col)).collect();
        let mut t = reduce::identity_int(d);
        if k > 0 {
            reduce::lll_block(&mut c, &mut t, 0, k);
        }
        reduce::lll_block(&mut c, &mut t, k, d);
        // columns k.. lie outside the span, so the shortest of them bounds the search
        let (mut best_z, mut best) = (k..d)
            .map(|j| {
                let mut z = vec![0i64; d];
                z[j] = 1;
                (z, reduce::dot(&c[j], &c[j]))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("k < d");
        reduce::enumerate_ball(&c, best, k, |z| {
            let v = reduce::real_combination(&c, z);
            let n2 = reduce::dot(&v, &v);
            if n2 < best {
                best = n2;
                best_z = z.to_vec();
                Visit::Shrink(n2)
            } else {
                Visit::Continue
            }
        });
        let in_adapted = reduce::int_combination(&t, &best_z);
        (reduce::int_combination(&inv, &in_adapted), best)
    }
}

fn norm_of(basis: &LatticeBasis, coords: &[i64]) -> f64 {
    let v = basis.embed(coords);
    reduce::dot(&v, &v).sqrt()
}

/// Successive minima with respect to the Euclidean ball of radius
/// `gauge_radius`: repeatedly takes the shortest lattice vector outside the
/// span of the previous witnesses.
pub fn successive_minima(basis: &LatticeBasis, gauge_radius: f64) -> Result<MinimaResult> {
    let d = basis.dim();
    if d > MINIMA_MAX_DIM {
        return Err(Error::UnsupportedDimension { dim: d, max: MINIMA_MAX_DIM });
    }
    if !(gauge_radius > 0.0) || !gauge_radius.is_finite() {
        return Err(Error::invalid("gauge radius must be positive"));
    }
    let red = Reduced::new(basis.columns());
    let mut reduced_witnesses: Vec<Vec<i64>> = Vec::with_capacity(d);
    let mut lambdas = Vec::with_capacity(d);
    let mut witnesses = Vec::with_capacity(d);
    for _ in 0..d {
        let (z, _) = red.shortest_outside(&reduced_witnesses);
        let coords = red.to_original(&z);
        let lambda = norm_of(basis, &coords) / gauge_radius;
        // guard against rounding in nearly tied minima
        let lambda = lambdas.last().map_or(lambda, |&prev: &f64| lambda.max(prev));
        lambdas.push(lambda);
        witnesses.push(coords);
        reduced_witnesses.push(z);
    }
    Ok(MinimaResult { lambdas, witnesses, gauge_radius, exact: true })
}

/// Covolume of the subgroup spanned by `coords`, from its Gram determinant.
pub(crate) fn covolume(basis: &LatticeBasis, coords: &[Vec<i64>]) -> f64 {
    let vs: Vec<Vec<f64>> = coords.iter().map(|c| basis.embed(c)).collect();
    let k = vs.len();
    let g = DMatrix::from_fn(k, k, |i, j| reduce::dot(&vs[i], &vs[j]));
    g.determinant().max(0.0).sqrt()
}

struct Candidate {
    rank: usize,
    covolume: f64,
    basis: Vec<Vec<i64>>,
}

/// `α(Λ) = max 1/covol(Λ')` over subgroups. Ranks 1 and `d−1` come from
/// the shortest primal and dual vectors (for primitive `Λ'`,
/// `covol(Λ') = covol(Λ* ∩ Λ'^⊥)` at determinant one), rank `d` is `Λ`
/// itself, and for `d = 4` rank 2 is searched exhaustively: a Lagrange
/// reduced basis `v_1, v_2` of a rank-2 subgroup satisfies
/// `|v_1||v_2| ≤ (2/√3) covol`, so a subgroup beating the incumbent `D` has
/// `|v_2| ≤ (2/√3) D / λ_1`. Higher dimensions return the best of the ranks
/// tried with `exact = false`.
pub fn alpha(basis: &LatticeBasis) -> Result<AlphaResult> {
    let d = basis.dim();
    let identity: Vec<Vec<i64>> = reduce::identity_int(d);
    let mut best = Candidate { rank: d, covolume: 1.0, basis: identity };
    let mut exact = d <= ALPHA_EXACT_MAX_DIM;
    if d == 1 {
        return Ok(AlphaResult { value: 1.0, best_rank: 1, best_subgroup_basis: best.basis, exact });
    }
    let mut candidates = Vec::new();

    let red = Reduced::new(basis.columns());
    let (z1, _) = red.shortest_outside(&[]);
    let v1 = red.to_original(&z1);
    let lambda1 = norm_of(basis, &v1);
    candidates.push(Candidate { rank: 1, covolume: lambda1, basis: vec![v1.clone()] });

    if d > 2 {
        let dual = Reduced::new(&basis.dual()?);
        let (zd, _) = dual.shortest_outside(&[]);
        let star = dual.to_original(&zd);
        // rows 1.. of the unimodular L with L·star = (g, 0, …) span star^⊥ ∩ Z^d
        let (l, _) = reduce::adapted_unimodular(&[star], d);
        let sub: Vec<Vec<i64>> = l[1..].to_vec();
        let cov = covolume(basis, &sub);
        candidates.push(Candidate { rank: d - 1, covolume: cov, basis: sub });
    }

    if d == 4 {
        let (z2, _) = red.shortest_outside(std::slice::from_ref(&z1));
        let v2 = red.to_original(&z2);
        let pair = vec![v1.clone(), v2];
        let pair_cov = covolume(basis, &pair);
        let incumbent = candidates.iter().map(|c| c.covolume).fold(1.0f64, f64::min);
        let mut bound = pair_cov.min(incumbent);
        let mut best_pair = Candidate { rank: 2, covolume: pair_cov, basis: pair };
        match short_vectors(&red, HERMITE_2 * bound / lambda1, PAIR_SEARCH_CAP) {
            Some(vs) => {
                let vecs: Vec<(Vec<i64>, Vec<f64>, f64)> = vs
                    .into_iter()
                    .map(|c| {
                        let v = basis.embed(&c);
                        let n = reduce::dot(&v, &v).sqrt();
                        (c, v, n)
                    })
                    .collect();
                for i in 0..vecs.len() {
                    if vecs[i].2 * vecs[i].2 > HERMITE_2 * bound * (1.0 + 1e-9) {
                        break;
                    }
                    for j in (i + 1)..vecs.len() {
                        if vecs[i].2 * vecs[j].2 > HERMITE_2 * bound * (1.0 + 1e-9) {
                            break;
                        }
                        let (a, b) = (vecs[i].2.powi(2), vecs[j].2.powi(2));
                        let c = reduce::dot(&vecs[i].1, &vecs[j].1);
                        let det = a * b - c * c;
                        if det <= 1e-12 * a * b {
                            continue;
                        }
                        let cov = det.sqrt();
                        if cov < bound {
                            bound = cov;
                            let sub = vec![vecs[i].0.clone(), vecs[j].0.clone()];
                            best_pair = Candidate { rank: 2, covolume: covolume(basis, &sub), basis: sub };
                        }
                    }
                }
            }
            None => exact = false,
        }
        candidates.push(best_pair);
    }

    candidates.sort_by_key(|c| c.rank);
    for c in candidates {
        let better = c.covolume < best.covolume * (1.0 - 1e-12);
        let tie_lower_rank = c.covolume <= best.covolume * (1.0 + 1e-12) && c.rank < best.rank;
        if better || tie_lower_rank {
            best = c;
        }
    }
    let value = if best.rank == d { 1.0 } else { (1.0 / best.covolume).max(1.0) };
    Ok(AlphaResult { value, best_rank: best.rank, best_subgroup_basis: best.basis, exact })
}

/// All nonzero lattice vectors of norm at most `radius`, one of each `±v`
/// pair, sorted by norm, or `None` beyond `cap` vectors.
fn short_vectors(red: &Reduced, radius: f64, cap: usize) -> Option<Vec<Vec<i64>>> {
    let mut out: Vec<(Vec<i64>, f64)> = Vec::new();
    let r2 = radius * radius * (1.0 + 1e-9);
    let mut overflow = false;
    reduce::enumerate_ball(&red.b, r2, 0, |z| {
        if overflow {
            return Visit::Shrink(0.0);
        }
        let first = z.iter().find(|&&c| c != 0).copied().unwrap_or(0);
        if first > 0 {
            let v = reduce::real_combination(&red.b, z);
            let n2 = reduce::dot(&v, &v);
            if n2 <= r2 {
                out.push((red.to_original(z), n2));
                if out.len() > cap {
                    overflow = true;
                }
            }
        }
        Visit::Continue
    });
    if overflow {
        return None;
    }
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    Some(out.into_iter().map(|(c, _)| c).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::WeightPair;
    use crate::lattice::apply_flow;
    use crate::rng;

    fn diag3() -> LatticeBasis {
        let wp = WeightPair::equal(1, 1).unwrap();
        apply_flow(&LatticeBasis::identity(2), &wp, 3f64.ln()).unwrap()
    }

    #[test]
    fn minima_examples() {
        for d in 2..=4 {
            let r = successive_minima(&LatticeBasis::identity(d), 1.0).unwrap();
            assert!(r.lambdas.iter().all(|&l| (l - 1.0).abs() < 1e-12));
        }
        let r = successive_minima(&diag3(), 1.0).unwrap();
        assert!((r.lambdas[0] - 1.0 / 3.0).abs() < 1e-12 && (r.lambdas[1] - 3.0).abs() < 1e-12);
        let r = successive_minima(&diag3(), 2.0).unwrap();
        assert!((r.lambdas[0] - 1.0 / 6.0).abs() < 1e-12);
        assert!(matches!(
            successive_minima(&LatticeBasis::identity(7), 1.0),
            Err(Error::UnsupportedDimension { dim: 7, max: 6 })
        ));
    }

    #[test]
    fn minima_on_random_lattices() {
        let mut r = rng::stream(2, 0);
        for d in 2..=5 {
            for _ in 0..10 {
                let b = LatticeBasis::random(d, &mut r);
                let res = successive_minima(&b, 1.0).unwrap();
                assert!(res.lambdas.windows(2).all(|w| w[0] <= w[1]));
                assert_eq!(reduce::int_rank(&res.witnesses), d);
                let p = res.minkowski_product();
                let lower = 2f64.powi(d as i32) / (1..=d).product::<usize>() as f64;
                assert!(p >= lower * (1.0 - 1e-9) && p <= 2f64.powi(d as i32) * (1.0 + 1e-9), "{p}");
            }
        }
    }

    #[test]
    fn alpha_examples() {
        for d in 2..=5 {
            let a = alpha(&LatticeBasis::identity(d)).unwrap();
            assert_eq!((a.value, a.best_rank), (1.0, 1));
        }
        let a = alpha(&diag3()).unwrap();
        assert!((a.value - 3.0).abs() < 1e-12 && a.best_rank == 1 && a.exact);
        assert!(!alpha(&LatticeBasis::identity(5)).unwrap().exact);
    }

    #[test]
    fn alpha_finds_dual_and_pair_subgroups() {
        // diag(e, e, e^{-2}) : the best subgroup is Z e_3, covolume e^{-2};
        // diag(e^2, e^{-2}·…) style in d = 4: two short axes give rank 2
        let wp = WeightPair::equal(2, 1).unwrap();
        let b = apply_flow(&LatticeBasis::identity(3), &wp, -3.0).unwrap();
        // flow: x scaled e^{-1.5}, y scaled e^{3}; rank 2 (the x plane) has covolume e^{-3}
        let a = alpha(&b).unwrap();
        assert!((a.value - 3f64.exp()).abs() < 1e-9 * 3f64.exp());
        assert_eq!(a.best_rank, 2);
        assert!((1.0 / covolume(&b, &a.best_subgroup_basis) - a.value).abs() < 1e-9 * a.value);

        let wp = WeightPair::equal(2, 2).unwrap();
        let b = apply_flow(&LatticeBasis::identity(4), &wp, -2.0).unwrap();
        let a = alpha(&b).unwrap();
        assert!((a.value - 2f64.exp()).abs() < 1e-9 * 2f64.exp());
        assert_eq!(a.best_rank, 2);
        assert!(a.exact);
    }

    #[test]
    fn alpha_at_least_inverse_first_minimum() {
        let mut r = rng::stream(3, 0);
        for d in 2..=4 {
            for _ in 0..20 {
                let b = LatticeBasis::random(d, &mut r);
                let a = alpha(&b).unwrap();
                let l1 = successive_minima(&b, 1.0).unwrap().lambdas[0];
                assert!(a.value >= 1.0);
                assert!(a.value >= 1.0 / l1 * (1.0 - 1e-12));
            }
        }
    }
}
