//! LLL reduction, Gram-Schmidt data and Fincke-Pohst style enumeration on
//! small real bases. Bases are lists of columns.

pub(crate) type Columns = Vec<Vec<f64>>;
pub(crate) type IntMatrix = Vec<Vec<i64>>;

pub(crate) fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub(crate) fn identity_int(d: usize) -> IntMatrix {
    (0..d).map(|i| (0..d).map(|j| i64::from(i == j)).collect()).collect()
}

/// `M z` for an integer matrix stored as columns.
pub(crate) fn int_combination(cols: &IntMatrix, z: &[i64]) -> Vec<i64> {
    let d = cols[0].len();
    let mut out = vec![0i64; d];
    for (col, &zk) in cols.iter().zip(z) {
        if zk != 0 {
            for (o, c) in out.iter_mut().zip(col) {
                *o += zk * c;
            }
        }
    }
    out
}

/// `Σ z_k b_k` for real columns.
pub(crate) fn real_combination(cols: &Columns, z: &[i64]) -> Vec<f64> {
    let d = cols[0].len();
    let mut out = vec![0.0; d];
    for (col, &zk) in cols.iter().zip(z) {
        if zk != 0 {
            let s = zk as f64;
            for (o, c) in out.iter_mut().zip(col) {
                *o += s * c;
            }
        }
    }
    out
}

pub(crate) struct GramSchmidt {
    /// `mu[i][j]` for `j < i`.
    pub mu: Vec<Vec<f64>>,
    /// `‖b*_i‖²`.
    pub norms2: Vec<f64>,
}

pub(crate) fn gram_schmidt(b: &Columns) -> GramSchmidt {
    let d = b.len();
    let mut star: Columns = Vec::with_capacity(d);
    let mut mu = vec![vec![0.0; d]; d];
    let mut norms2 = vec![0.0; d];
    for i in 0..d {
        let mut v = b[i].clone();
        for j in 0..i {
            mu[i][j] = dot(&b[i], &star[j]) / norms2[j];
            for (vk, sk) in v.iter_mut().zip(&star[j]) {
                *vk -= mu[i][j] * sk;
            }
        }
        norms2[i] = dot(&v, &v);
        star.push(v);
    }
    GramSchmidt { mu, norms2 }
}

const LLL_DELTA: f64 = 0.99;

/// LLL-reduces `b` in place and returns the integer transform `U` (columns)
/// with `b_reduced = b_original · U`.
pub(crate) fn lll(b: &mut Columns) -> IntMatrix {
    let d = b.len();
    let mut u = identity_int(d);
    lll_block(b, &mut u, 0, d);
    u
}

/// Reduces columns `from..to`, size-reducing them against everything before.
pub(crate) fn lll_block(b: &mut Columns, u: &mut IntMatrix, from: usize, to: usize) {
    if from > 0 && from < to {
        let gs = gram_schmidt(b);
        size_reduce(b, u, from, &gs.mu);
    }
    let mut k = from + 1;
    let mut guard = 0usize;
    while k < to {
        guard += 1;
        if guard > 100_000 {
            break;
        }
        let gs = gram_schmidt(b);
        size_reduce(b, u, k, &gs.mu);
        let gs = gram_schmidt(b);
        let lhs = gs.norms2[k];
        let rhs = (LLL_DELTA - gs.mu[k][k - 1].powi(2)) * gs.norms2[k - 1];
        if lhs >= rhs {
            k += 1;
        } else {
            b.swap(k, k - 1);
            u.swap(k, k - 1);
            k = (k - 1).max(from + 1);
        }
    }
}

fn size_reduce(b: &mut Columns, u: &mut IntMatrix, k: usize, mu: &[Vec<f64>]) {
    let mut mu_k = mu[k].clone();
    for j in (0..k).rev() {
        let r = mu_k[j].round();
        if r == 0.0 {
            continue;
        }
        let ri = r as i64;
        let (head, tail) = b.split_at_mut(k);
        for (x, y) in tail[0].iter_mut().zip(&head[j]) {
            *x -= r * y;
        }
        let (uh, ut) = u.split_at_mut(k);
        for (x, y) in ut[0].iter_mut().zip(&uh[j]) {
            *x -= ri * y;
        }
        // mu_{k,l} changes by r·mu_{j,l} for l < j, and mu_{k,j} by r
        mu_k[j] -= r;
        for l in 0..j {
            mu_k[l] -= r * mu[j][l];
        }
    }
}

/// Control returned by an enumeration visitor.
pub(crate) enum Visit {
    Continue,
    /// Shrink the squared search radius.
    Shrink(f64),
}

/// Depth-first enumeration of all `z ∈ Z^d ∖ {0}` with `‖B z‖² ≤ radius2`,
/// visiting coordinates in zig-zag order around the projected centre.
///
/// When `outer_from > 0`, subtrees whose coordinates `outer_from..d` are all
/// zero are skipped, so only vectors outside the span of the first
/// `outer_from` columns are visited.
pub(crate) fn enumerate_ball<F>(b: &Columns, radius2: f64, outer_from: usize, mut visit: F)
where
    F: FnMut(&[i64]) -> Visit,
{
    let d = b.len();
    if d == 0 {
        return;
    }
    let gs = gram_schmidt(b);
    let mut state = Search {
        mu: gs.mu,
        norms2: gs.norms2,
        radius2,
        z: vec![0i64; d],
        outer_from,
    };
    state.level(d - 1, 0.0, &mut visit);
}

struct Search {
    mu: Vec<Vec<f64>>,
    norms2: Vec<f64>,
    radius2: f64,
    z: Vec<i64>,
    outer_from: usize,
}

const PRUNE_SLACK: f64 = 1e-9;

impl Search {
    fn level<F>(&mut self, k: usize, partial: f64, visit: &mut F)
    where
        F: FnMut(&[i64]) -> Visit,
    {
        let d = self.z.len();
        if self.outer_from > 0 && k + 1 == self.outer_from && self.z[self.outer_from..].iter().all(|&v| v == 0) {
            return;
        }
        let centre: f64 = -((k + 1)..d).map(|j| self.mu[j][k] * self.z[j] as f64).sum::<f64>();
        let nk = self.norms2[k];
        let fits = |this: &Self, zk: i64| -> Option<f64> {
            let diff = zk as f64 - centre;
            let p = partial + diff * diff * nk;
            (p <= this.radius2 * (1.0 + PRUNE_SLACK) + 1e-300).then_some(p)
        };
        let start = centre.round() as i64;
        let mut up = start;
        let mut down = start - 1;
        let mut up_open = true;
        let mut down_open = true;
        while up_open || down_open {
            // pick the closer side first
            let take_up = if up_open && down_open {
                (up as f64 - centre).abs() <= (centre - down as f64).abs()
            } else {
                up_open
            };
            let zk = if take_up { up } else { down };
            match fits(self, zk) {
                None => {
                    if take_up {
                        up_open = false;
                    } else {
                        down_open = false;
                    }
                    continue;
                }
                Some(p) => {
                    self.z[k] = zk;
                    if k == 0 {
                        if self.z.iter().any(|&v| v != 0) {
                            if let Visit::Shrink(r2) = visit(&self.z) {
                                self.radius2 = self.radius2.min(r2);
                            }
                        }
                    } else {
                        self.level(k - 1, p, visit);
                    }
                }
            }
            if take_up {
                up += 1;
            } else {
                down -= 1;
            }
        }
        self.z[k] = 0;
    }
}

/// Unimodular `L` (rows) and `L^{-1}` (columns of the adapted basis) such
/// that `L w_i` vanishes below row `k` for every witness, `k` = number of
/// witnesses. Witnesses must be linearly independent.
pub(crate) fn adapted_unimodular(witnesses: &[Vec<i64>], d: usize) -> (IntMatrix, IntMatrix) {
    // w[row][col]
    let k = witnesses.len();
    let mut w: Vec<Vec<i64>> = (0..d).map(|r| witnesses.iter().map(|c| c[r]).collect()).collect();
    let mut l = identity_int(d);
    // columns of L^{-1}, stored as inv[col][row]
    let mut inv = identity_int(d);
    for j in 0..k.min(d) {
        for r in (j + 1)..d {
            let (a, b) = (w[j][j], w[r][j]);
            if b == 0 {
                continue;
            }
            let (g, x, y) = ext_gcd(a, b);
            let (ag, bg) = (a / g, b / g);
            combine_rows(&mut w, j, r, x, y, -bg, ag);
            combine_rows(&mut l, j, r, x, y, -bg, ag);
            // inverse column op: c_j ← ag c_j + bg c_r, c_r ← -y c_j + x c_r
            let cj = inv[j].clone();
            let cr = inv[r].clone();
            inv[j] = cj.iter().zip(&cr).map(|(p, q)| ag * p + bg * q).collect();
            inv[r] = cj.iter().zip(&cr).map(|(p, q)| -y * p + x * q).collect();
        }
    }
    (l, inv)
}

fn combine_rows(m: &mut [Vec<i64>], r1: usize, r2: usize, x: i64, y: i64, s: i64, t: i64) {
    let a = m[r1].clone();
    let b = m[r2].clone();
    m[r1] = a.iter().zip(&b).map(|(p, q)| x * p + y * q).collect();
    m[r2] = a.iter().zip(&b).map(|(p, q)| s * p + t * q).collect();
}

/// `(g, x, y)` with `a x + b y = g = gcd(a, b) > 0`.
pub(crate) fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i64, 0i64);
    let (mut old_t, mut t) = (0i64, 1i64);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
/// Rank of a small integer matrix given as rows, by fraction-free elimination.
pub(crate) fn int_rank(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    if m.is_empty() {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| m[r][c] != 0) else { continue };
        m.swap(rank, p);
        for r in (rank + 1)..m.len() {
            if m[r][c] != 0 {
                let (a, b) = (m[rank][c], m[r][c]);
                let g = gcd128(a, b);
                let (fa, fb) = (b / g, a / g);
                for k in 0..cols {
                    m[r][k] = m[r][k] * fb - m[rank][k] * fa;
                }
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
fn gcd128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;

    #[test]
    fn ext_gcd_identity() {
        for (a, b) in [(12, 18), (-7, 3), (0, 5), (5, 0), (-4, -6)] {
            let (g, x, y) = ext_gcd(a, b);
            assert_eq!(a * x + b * y, g);
            assert!(g > 0);
        }
    }

    #[test]
    fn lll_transform_reproduces_basis() {
        let orig: Columns = vec![vec![1.0, 0.0, 0.0], vec![17.0, 1.0, 0.0], vec![4.0, -9.0, 1.0]];
        let mut b = orig.clone();
        let u = lll(&mut b);
        for (col, ucol) in b.iter().zip(&u) {
            let expect = real_combination(&orig, ucol);
            for (x, y) in col.iter().zip(&expect) {
                assert!((x - y).abs() < 1e-9);
            }
        }
        // reduced basis of Z^3 is unit vectors up to sign
        for col in &b {
            assert!((dot(col, col) - 1.0).abs() < 1e-9, "{b:?}");
        }
    }

    #[test]
    fn ball_enumeration_counts_z2_points() {
        let b: Columns = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let mut n = 0;
        enumerate_ball(&b, 2.0, 0, |_| {
            n += 1;
            Visit::Continue
        });
        assert_eq!(n, 8);
        let mut n = 0;
        enumerate_ball(&b, 4.0, 1, |z| {
            assert!(z[1] != 0);
            n += 1;
            Visit::Continue
        });
        // (x, ±1) with x² ≤ 3 and (0, ±2)
        assert_eq!(n, 8);
    }

    #[test]
    fn adapted_basis_separates_span() {
        let w = vec![vec![2, 4, 6]];
        let (l, inv) = adapted_unimodular(&w, 3);
        let lw: Vec<i64> = (0..3).map(|r| (0..3).map(|c| l[r][c] * w[0][c]).sum()).collect();
        assert_eq!(&lw[1..], &[0, 0]);
        // L · L^{-1} = I
        for r in 0..3 {
            for c in 0..3 {
                let v: i64 = (0..3).map(|k| l[r][k] * inv[c][k]).sum();
                assert_eq!(v, i64::from(r == c));
            }
        }
    }

    #[test]
    fn integer_rank() {
        assert_eq!(int_rank(&[vec![1, 2], vec![2, 4]]), 1);
        assert_eq!(int_rank(&[vec![1, 2, 3], vec![0, 1, 1], vec![1, 3, 4]]), 2);
        assert_eq!(int_rank(&[vec![3, 0], vec![0, 5]]), 2);
    }
}
