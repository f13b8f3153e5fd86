//! Dyadic window machinery for effective pointwise ergodic theorems, seeded
//! process ensembles (synthetic and lattice-orbit), and Monte Carlo estimates
//! of double equidistribution integrals.

mod checks;
mod double_equi;
mod dyadic;
mod process;

pub use checks::{
    exceptional_fraction, fit_decay_bound, pointwise_rate_check, variance_bound_check, window_integral, DecayFit,
    ExceptionalReport, RateReport, RateRow, VarianceReport,
};
pub use double_equi::{
    double_equi_estimate, double_equi_grid, empirical_mean, single_equi_estimate, DoubleEquiRow, EquiEstimate,
    Observable, ObservableTerm, ThetaDensity,
};
pub use dyadic::{dyadic_cover, dyadic_family, DyadicInterval, DyadicSums, MAX_DYADIC_SCALE};
pub use process::{DecayBound, DynamicalProcess, MeanEstimate, ProcessEnsemble, ProcessKind, Trajectory};
