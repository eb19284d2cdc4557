//! Continuous measurement of a double-dot charge qubit by a point-contact
//! detector, simulated through number-resolved Bloch rate equations.
//!
//! An electron shared between two coupled quantum dots shifts the tunneling
//! current of a nearby point contact, so counting the electrons that arrive
//! in the collector reads the qubit out — and dephases it at the rate
//! `Γ_d = (sqrt(D1) - sqrt(D2))²`. This crate propagates that physics at
//! three levels of detail and uses them to locate the precision limit of
//! the measurement:
//!
//! * [`reduced`] — the traced-out two-level master equation, with closed
//!   forms for aligned levels and for the strong-measurement (Zeno) regime.
//! * [`ladder`] — the full hierarchy of charge-conditioned blocks
//!   `σ^(n)(t)`, the electron counting distribution `P_n(t)`, and an exact
//!   counting-field oracle for cross-checking it.
//! * [`moments`] — the closed `n`- and `n²`-weighted hierarchies giving
//!   mean collected charge, its variance and the current-estimate
//!   dispersion without ever building the ladder.
//! * [`limit`] — shot noise and measurement back-action combined into a
//!   total error over the measurement window, its numerical minimization,
//!   and the closed-form optimal windows for both regimes.
//!
//! All numerics are generic over the floating-point type through
//! [`Scalar`]; the `*64`/`*32` aliases below pin the common choices.

pub mod error;
pub mod ladder;
pub mod limit;
pub mod moments;
mod ode;
pub mod params;
pub mod reduced;
pub mod scalar;

// Complex appears throughout the public API.
pub use num_complex;

pub use error::{Error, Result};
pub use ladder::{
    choose_n_max, counting_field_distribution, counting_field_distribution_with,
    electron_distribution, evolve_ladder, evolve_ladder_with, total_variation,
    CountingDistribution, LadderBlock, LadderTrajectory, NumberLadder, LOST_MASS_LIMIT,
};
pub use limit::{
    backaction_error, closed_form_weak, closed_form_zeno, optimize_measurement_time,
    sample_error_curve, single_run_visibility, total_error_sq, ErrorCurve, ErrorMode,
    PrecisionLimit, Regime,
};
pub use moments::{
    current_dispersion, current_dispersion_with, evolve_moments, evolve_moments_with,
    mean_and_variance, Dispersion, MomentState, MomentTrajectory,
};
pub use ode::IntegratorOpts;
pub use params::{
    derive_rates, rabi_frequency, rates_from_microscopic, DerivedRates, QubitState, RabiMode,
    SystemParams,
};
pub use reduced::{
    average_current, evolve_reduced, evolve_reduced_with, sigma11_aligned_closed, zeno_sigma11,
    QubitTrajectory,
};
pub use scalar::Scalar;

pub type SystemParams64 = SystemParams<f64>;
pub type SystemParams32 = SystemParams<f32>;
pub type QubitState64 = QubitState<f64>;
pub type QubitState32 = QubitState<f32>;
pub type DerivedRates64 = DerivedRates<f64>;
pub type NumberLadder64 = NumberLadder<f64>;
pub type CountingDistribution64 = CountingDistribution<f64>;
pub type MomentState64 = MomentState<f64>;
pub type ErrorCurve64 = ErrorCurve<f64>;
pub type PrecisionLimit64 = PrecisionLimit<f64>;
