//! Weighted geometry of `R^d = R^m × R^n`: quasi-norms, weighted flows,
//! sphere projections, the diagonal flow, direction sets and the bounded
//! regions whose lattice points are counted.

mod direction;
mod flow;
mod region;
mod weights;

pub use direction::{DirectionSet, Sign};
pub use flow::{diagonal_flow, flow_decomposition, FlowDecomposition};
pub use region::{PointSet, Region, RegionKind, VolumeEstimate, VolumeMethod};
pub(crate) use weights::quasi_norm_unchecked;
pub use weights::{project_to_sphere, quasi_norm, weighted_flow, WeightPair};

/// Lebesgue volume of the Euclidean ball of the given radius in `R^dim`.
pub fn ball_volume(dim: usize, radius: f64) -> f64 {
    // V_0 = 1, V_1 = 2, V_k = 2π/k · V_{k-2}
    let mut even = 1.0;
    let mut odd = 2.0;
    let unit = if dim.is_multiple_of(2) {
        for k in (2..=dim).step_by(2) {
            even *= 2.0 * std::f64::consts::PI / k as f64;
        }
        even
    } else {
        for k in (3..=dim).step_by(2) {
            odd *= 2.0 * std::f64::consts::PI / k as f64;
        }
        odd
    };
    unit * radius.powi(dim as i32)
}

pub(crate) fn euclidean_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_ball_volumes() {
        assert_eq!(ball_volume(1, 1.0), 2.0);
        assert!((ball_volume(2, 1.0) - PI).abs() < 1e-15);
        assert!((ball_volume(3, 1.0) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((ball_volume(4, 2.0) - PI * PI / 2.0 * 16.0).abs() < 1e-12);
    }
}
