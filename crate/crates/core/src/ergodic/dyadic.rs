use crate::error::{Error, Result};

/// `[2^i j, 2^i (j+1)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicInterval {
    pub i: u32,
    pub j: u64,
}

impl DyadicInterval {
    pub fn start(&self) -> u64 {
        self.j << self.i
    }

    pub fn end(&self) -> u64 {
        (self.j + 1) << self.i
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u64 {
        1 << self.i
    }
}

pub const MAX_DYADIC_SCALE: u32 = 40;

fn check_scale(s: u32) -> Result<()> {
    if s == 0 || s > MAX_DYADIC_SCALE {
        return Err(Error::invalid(format!("dyadic scale s must be in 1..={MAX_DYADIC_SCALE}, got {s}")));
    }
    Ok(())
}

/// `L_s`: all intervals with `2^i (j+1) < 2^s`, ordered by `i` then `j`.
pub fn dyadic_family(s: u32) -> Result<Vec<DyadicInterval>> {
    check_scale(s)?;
    let top = 1u64 << s;
    let mut out = Vec::new();
    for i in 0..s {
        let mut j = 0u64;
        while ((j + 1) << i) < top {
            out.push(DyadicInterval { i, j });
            j += 1;
        }
    }
    Ok(out)
}

/// Cover of `[0, k]` by intervals of `L_s`, one per set bit of `k`, longest
/// first.
pub fn dyadic_cover(k: u64, s: u32) -> Result<Vec<DyadicInterval>> {
    check_scale(s)?;
    if k == 0 || k >= 1u64 << s {
        return Err(Error::invalid(format!("cover needs 1 ≤ k < 2^s, got k = {k}, s = {s}")));
    }
    let mut out = Vec::with_capacity(k.count_ones() as usize);
    let mut start = 0u64;
    for i in (0..s).rev() {
        if k >> i & 1 == 1 {
            out.push(DyadicInterval { i, j: start >> i });
            start += 1 << i;
        }
    }
    Ok(out)
}

/// Window integrals over every interval of `L_s`, built bottom-up from the
/// unit integrals so that longer windows are exact sums of shorter ones.
#[derive(Debug, Clone)]
pub struct DyadicSums {
    s: u32,
    levels: Vec<Vec<f64>>,
}

impl DyadicSums {
    /// Needs at least `2^s − 1` unit integrals.
    pub fn new(s: u32, unit_integrals: &[f64]) -> Result<Self> {
        check_scale(s)?;
        let span = (1usize << s) - 1;
        if unit_integrals.len() < span {
            return Err(Error::invalid(format!("need {span} unit integrals, got {}", unit_integrals.len())));
        }
        let mut levels = vec![unit_integrals[..span].to_vec()];
        for i in 1..s as usize {
            let prev = &levels[i - 1];
            let count = ((1usize << s) - 1) >> i;
            let next: Vec<f64> = (0..count).map(|j| prev[2 * j] + prev[2 * j + 1]).collect();
            levels.push(next);
        }
        Ok(Self { s, levels })
    }

    pub fn scale(&self) -> u32 {
        self.s
    }

    pub fn value(&self, iv: DyadicInterval) -> f64 {
        self.levels[iv.i as usize][iv.j as usize]
    }

    /// `Σ_{I ∈ L_s} (∫_I F)²`.
    pub fn sum_of_squares(&self) -> f64 {
        self.levels.iter().flatten().map(|v| v * v).sum()
    }

    /// `∫_0^k F` assembled from the cover of `[0, k]`.
    pub fn integral_to(&self, k: u64) -> Result<f64> {
        Ok(dyadic_cover(k, self.s)?.into_iter().map(|iv| self.value(iv)).sum())
    }
}
