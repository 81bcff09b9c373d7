//! Transmit optimization with improper Gaussian signaling for Gaussian
//! interference channels.
//!
//! The crate is organized bottom-up:
//!
//! - [`signal_model`]: channel instances, covariance/pseudo-covariance pairs,
//!   validity checks, received second-order statistics and the mapping between
//!   a complex SISO strategy and its real-composite 2×2 covariance.
//! - [`rate`]: achievable rates with interference treated as noise, split into
//!   the proper part and the improper correction.
//! - [`widely_linear`]: the conjugate-structured square root of an augmented
//!   covariance and the precoder `x = B1 d + B2 conj(d)`.
//! - [`conic`]: tiny fixed-shape feasibility solvers (2-variable LP and SOCP,
//!   a phase-I barrier SDP) and the bisection driver.
//! - [`joint`]: semidefinite relaxation of the joint covariance and
//!   pseudo-covariance problem with Gaussian randomization.
//! - [`separate`]: proper power control followed by pseudo-covariance design
//!   over a finite set of candidate phases.
//! - [`oracle`]: brute-force grid search and TDMA reference points.
//!
//! Data-parallel loops (grid search, randomization trials, candidate phases)
//! go through [`par`], which uses rayon when the `parallel` feature is on and
//! falls back to plain iterators otherwise.

pub mod conic;
pub mod joint;
pub mod oracle;
pub mod par;
pub mod profile;
pub mod rate;
pub mod separate;
pub mod signal_model;
pub mod widely_linear;

pub use num_complex::Complex64;

pub use joint::{joint_pareto_point, JointOptions};
pub use oracle::{
    grid_oracle, maxmin_point, min_rate, tdma_maxmin, GridSpec, MaxMinMethod, MaxMinOptions,
};
pub use profile::{ParetoPoint, PointDiagnostics, RateProfile};
pub use rate::{siso_rate, siso_rates, RateBreakdown, RateUnit};
pub use separate::{improper_pareto_point, proper_pareto_point, SeparateOptions};
pub use signal_model::{SignalStrategy, SisoIcInstance, SisoStrategy};

/// Natural log of 2, used to convert nats to bits.
pub const LN_2: f64 = std::f64::consts::LN_2;

/// Converts a rate in nats to bits.
#[inline]
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / LN_2
}

/// Converts a rate in bits to nats.
#[inline]
pub fn bits_to_nats(bits: f64) -> f64 {
    bits * LN_2
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(angle: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut a = angle.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    a
}

/// Distance between two angles modulo `2 pi`.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_phase_range() {
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(0.25 + 4.0 * PI) - 0.25).abs() < 1e-12);
        assert!(phase_distance(PI - 1e-3, -PI + 1e-3) < 2.1e-3);
    }

    #[test]
    fn unit_conversion() {
        assert!((nats_to_bits(LN_2) - 1.0).abs() < 1e-15);
        assert!((bits_to_nats(nats_to_bits(1.7)) - 1.7).abs() < 1e-15);
    }
}
