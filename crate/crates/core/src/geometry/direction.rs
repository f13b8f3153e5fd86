use crate::error::{Error, Result};

use super::project_to_sphere;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn admits(self, x: f64) -> bool {
        match self {
            Sign::Plus => x >= 0.0,
            Sign::Minus => x <= 0.0,
        }
    }

    fn flipped(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Full,
    /// Union of closed coordinate orthants.
    Orthants(Vec<Vec<Sign>>),
    /// Union of coordinate boxes `[lo_k, hi_k]` intersected with the sphere.
    Boxes(Vec<Vec<(f64, f64)>>),
}

/// A subset of the unit sphere `S^{k-1}` with exactly decidable membership
/// and a measure-zero boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    dim: usize,
    shape: Shape,
}

impl DirectionSet {
    pub fn full(dim: usize) -> Self {
        Self { dim, shape: Shape::Full }
    }

    /// The closed nonnegative orthant `S^{k-1}_+`.
    pub fn positive_orthant(dim: usize) -> Self {
        Self { dim, shape: Shape::Orthants(vec![vec![Sign::Plus; dim]]) }
    }

    pub fn orthants(dim: usize, patterns: Vec<Vec<Sign>>) -> Result<Self> {
        if patterns.is_empty() {
            return Err(Error::invalid("orthant union needs at least one sign pattern"));
        }
        for (i, p) in patterns.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::invalid(format!("sign pattern has {} entries, expected {dim}", p.len())));
            }
            if patterns[..i].contains(p) {
                return Err(Error::invalid("duplicate sign pattern in orthant union"));
            }
        }
        Ok(Self { dim, shape: Shape::Orthants(patterns) })
    }

    pub fn boxes(dim: usize, boxes: Vec<Vec<(f64, f64)>>) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::invalid("box union needs at least one box"));
        }
        for b in &boxes {
            if b.len() != dim {
                return Err(Error::invalid(format!("box has {} intervals, expected {dim}", b.len())));
            }
            if b.iter().any(|&(lo, hi)| !(lo <= hi)) {
                return Err(Error::invalid("box interval with lower > upper"));
            }
        }
        Ok(Self { dim, shape: Shape::Boxes(boxes) })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn is_full(&self) -> bool {
        matches!(self.shape, Shape::Full)
    }

    pub fn sign_patterns(&self) -> Option<&[Vec<Sign>]> {
        match &self.shape {
            Shape::Orthants(p) => Some(p),
            _ => None,
        }
    }

    pub fn box_list(&self) -> Option<&[Vec<(f64, f64)>]> {
        match &self.shape {
            Shape::Boxes(b) => Some(b),
            _ => None,
        }
    }

    /// Membership of a point already on the unit sphere.
    pub fn contains(&self, u: &[f64]) -> bool {
        match &self.shape {
            Shape::Full => true,
            Shape::Orthants(patterns) => {
                patterns.iter().any(|p| p.iter().zip(u).all(|(s, &x)| s.admits(x)))
            }
            Shape::Boxes(boxes) => {
                boxes.iter().any(|b| b.iter().zip(u).all(|(&(lo, hi), &x)| lo <= x && x <= hi))
            }
        }
    }

    /// Whether the weighted projection of a raw vector lies in the set. The
    /// zero vector has no projection and is rejected by every proper subset.
    pub fn admits(&self, x: &[f64], weights: &[f64]) -> bool {
        match &self.shape {
            Shape::Full => true,
            // the weighted flow preserves coordinate signs
            Shape::Orthants(_) => x.iter().any(|&v| v != 0.0) && self.contains(x),
            Shape::Boxes(_) => match project_to_sphere(x, weights) {
                Ok(u) => self.contains(&u),
                Err(_) => false,
            },
        }
    }

    /// Image under the reflection flipping the coordinates in `mask`.
    pub fn reflect(&self, mask: &[usize]) -> Self {
        let flip = |k: usize| mask.contains(&k);
        let shape = match &self.shape {
            Shape::Full => Shape::Full,
            Shape::Orthants(patterns) => Shape::Orthants(
                patterns
                    .iter()
                    .map(|p| p.iter().enumerate().map(|(k, &s)| if flip(k) { s.flipped() } else { s }).collect())
                    .collect(),
            ),
            Shape::Boxes(boxes) => Shape::Boxes(
                boxes
                    .iter()
                    .map(|b| b.iter().enumerate().map(|(k, &(lo, hi))| if flip(k) { (-hi, -lo) } else { (lo, hi) }).collect())
                    .collect(),
            ),
        };
        Self { dim: self.dim, shape }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthant_membership_is_closed() {
        let pos = DirectionSet::positive_orthant(2);
        assert!(pos.contains(&[1.0, 0.0]));
        assert!(pos.contains(&[0.6, 0.8]));
        assert!(!pos.contains(&[-0.6, 0.8]));
        assert!(pos.admits(&[3.0, 0.0], &[0.5, 0.5]));
        assert!(!pos.admits(&[0.0, 0.0], &[0.5, 0.5]));
        assert!(DirectionSet::full(2).admits(&[0.0, 0.0], &[0.5, 0.5]));
    }

    #[test]
    fn validation() {
        use Sign::*;
        assert!(DirectionSet::orthants(1, vec![vec![Plus], vec![Plus]]).is_err());
        assert!(DirectionSet::orthants(2, vec![vec![Plus]]).is_err());
        assert!(DirectionSet::boxes(1, vec![vec![(0.5, 0.1)]]).is_err());
        assert!(DirectionSet::boxes(2, vec![vec![(0.0, 1.0), (-1.0, 1.0)]]).is_ok());
    }

    #[test]
    fn box_membership_uses_weighted_projection() {
        // right half of the circle with y ≥ 0
        let set = DirectionSet::boxes(2, vec![vec![(0.0, 1.0), (0.0, 1.0)]]).unwrap();
        assert!(set.admits(&[5.0, 0.1], &[0.3, 0.7]));
        assert!(!set.admits(&[5.0, -0.1], &[0.3, 0.7]));
        assert!(!set.admits(&[0.0, 0.0], &[0.3, 0.7]));
    }

    #[test]
    fn reflection_flips_selected_coordinates() {
        use Sign::*;
        let set = DirectionSet::orthants(2, vec![vec![Plus, Minus]]).unwrap();
        let r = set.reflect(&[1]);
        assert_eq!(r.sign_patterns().unwrap(), &[vec![Plus, Plus]]);
        let b = DirectionSet::boxes(1, vec![vec![(0.2, 0.9)]]).unwrap().reflect(&[0]);
        assert_eq!(b.box_list().unwrap(), &[vec![(-0.9, -0.2)]]);
    }
}
