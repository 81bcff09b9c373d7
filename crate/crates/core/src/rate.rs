//! Achievable rates under improper Gaussian signaling, interference treated
//! as Gaussian noise.
//!
//! Every rate is computed twice: the total from the augmented-covariance
//! determinants, and the split into the proper rate (covariances only) plus
//! the improper correction. The two routes agree to round-off, which the
//! tests rely on.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal_model::{
    augmented_matrix, received_stats, MimoIcInstance, ModelError, SignalStrategy, SisoIcInstance,
    SisoStrategy,
};
use crate::LN_2;

/// Rates with magnitude below this are reported as exactly zero.
const ZERO_CLAMP: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateUnit {
    #[default]
    Nats,
    Bits,
}

impl RateUnit {
    /// Converts a value in nats into this unit.
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            RateUnit::Nats => nats,
            RateUnit::Bits => nats / LN_2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RateUnit::Nats => "nats",
            RateUnit::Bits => "bits",
        }
    }
}

#[derive(Debug, Error)]
pub enum RateError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("user index {0} out of range")]
    UserIndex(usize),
    #[error("augmented covariance at receiver {0} is numerically singular")]
    Singular(usize),
}

/// A rate split into the proper part and the improper correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBreakdown {
    pub total: f64,
    pub proper_part: f64,
    pub improper_part: f64,
    pub unit: RateUnit,
}

impl RateBreakdown {
    fn from_nats(total: f64, proper_part: f64, improper_part: f64) -> Self {
        let clamp = |x: f64| if x.abs() < ZERO_CLAMP { 0.0 } else { x };
        RateBreakdown {
            total: clamp(total),
            proper_part: clamp(proper_part),
            improper_part: clamp(improper_part),
            unit: RateUnit::Nats,
        }
    }

    /// Same breakdown expressed in `unit`.
    pub fn to_unit(self, unit: RateUnit) -> Self {
        let back = match self.unit {
            RateUnit::Nats => 1.0,
            RateUnit::Bits => LN_2,
        };
        let f = |x: f64| unit.from_nats(x * back);
        RateBreakdown {
            total: f(self.total),
            proper_part: f(self.proper_part),
            improper_part: f(self.improper_part),
            unit,
        }
    }

    pub fn in_bits(self) -> Self {
        self.to_unit(RateUnit::Bits)
    }
}

/// `ln det` of a Hermitian positive definite matrix via Cholesky.
fn hermitian_logdet(m: DMatrix<Complex64>) -> Option<f64> {
    let chol = m.cholesky()?;
    let l = chol.l_dirty();
    Some(2.0 * (0..l.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>())
}

/// `ln det(I - C^-1 Ct C^-T Ct^H)`, the improper correction factor.
fn correction_logdet(c: &DMatrix<Complex64>, ct: &DMatrix<Complex64>) -> Option<f64> {
    let n = c.nrows();
    let inv = c.clone().try_inverse()?;
    let inv_t = inv.transpose();
    let m = DMatrix::<Complex64>::identity(n, n) - &inv * ct * inv_t * ct.adjoint();
    let det = m.determinant();
    (det.re > 0.0).then(|| det.re.ln())
}

/// Rate of user `k` in a K-user MIMO interference channel (nats).
pub fn mimo_rate(
    instance: &MimoIcInstance,
    strategies: &[SignalStrategy],
    k: usize,
) -> Result<RateBreakdown, RateError> {
    if k >= instance.users() {
        return Err(RateError::UserIndex(k));
    }
    let stats = received_stats(instance, strategies)?;
    let st = &stats[k];
    let y_aug =
        hermitian_logdet(augmented_matrix(&st.cy, &st.cty)).ok_or(RateError::Singular(k))?;
    let s_aug =
        hermitian_logdet(augmented_matrix(&st.cs, &st.cts)).ok_or(RateError::Singular(k))?;
    let total = 0.5 * (y_aug - s_aug);
    let proper = hermitian_logdet(st.cy.clone()).ok_or(RateError::Singular(k))?
        - hermitian_logdet(st.cs.clone()).ok_or(RateError::Singular(k))?;
    let improper = 0.5
        * (correction_logdet(&st.cy, &st.cty).ok_or(RateError::Singular(k))?
            - correction_logdet(&st.cs, &st.cts).ok_or(RateError::Singular(k))?);
    Ok(RateBreakdown::from_nats(total, proper, improper))
}

/// Rate of user `k` in the two-user SISO interference channel (nats).
///
/// Uses the scalar closed forms; agrees with [`mimo_rate`] on the 1×1 view.
pub fn siso_rate(
    instance: &SisoIcInstance,
    strategies: &[SisoStrategy; 2],
    k: usize,
) -> RateBreakdown {
    let st = instance.received_stats(strategies)[k];
    let total = 0.5 * (st.received_det() / st.interference_det()).ln();
    let proper = (st.cy / st.cs).ln();
    let improper = 0.5
        * ((1.0 - st.cty.norm_sqr() / (st.cy * st.cy))
            / (1.0 - st.cts.norm_sqr() / (st.cs * st.cs)))
            .ln();
    RateBreakdown::from_nats(total, proper, improper)
}

/// Total rates of both users in nats (fast path).
#[inline]
pub fn siso_rates(instance: &SisoIcInstance, strategies: &[SisoStrategy; 2]) -> [f64; 2] {
    let st = instance.received_stats(strategies);
    st.map(|s| {
        let r = 0.5 * (s.received_det() / s.interference_det()).ln();
        if r.abs() < ZERO_CLAMP {
            0.0
        } else {
            r
        }
    })
}

/// Rate pairs (nats) achieved by each strategy pair of `grid`.
pub fn rate_region_sample(
    instance: &SisoIcInstance,
    grid: &[[SisoStrategy; 2]],
) -> Vec<(f64, f64)> {
    grid.iter()
        .map(|s| {
            let r = siso_rates(instance, s);
            (r[0], r[1])
        })
        .collect()
}

/// Largest single-user rate bound `max_k (1/alpha_k) ln(1 + |h_kk|^2 P_k / sigma^2)`.
///
/// Improper signaling cannot beat the interference-free point-to-point rate,
/// so this brackets every profile-scaled sum rate from above.
pub fn single_user_bound(instance: &SisoIcInstance, alpha: [f64; 2]) -> f64 {
    (0..2)
        .map(|k| (instance.gain_sq(k, k) * instance.power(k) / instance.noise()).ln_1p() / alpha[k])
        .fold(0.0, f64::max)
}
