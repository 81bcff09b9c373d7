//! Channel instances, transmit strategies and their second-order statistics.
//!
//! Users are indexed from zero in code: user `0` is "user 1" of the two-user
//! interference channel and `h[k][j]` is the gain from transmitter `j` to
//! receiver `k`.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wrap_phase;

/// Minimum eigenvalue accepted for an augmented covariance.
pub const PSD_TOL: f64 = 1e-9;
/// Hermitian / symmetric tolerance on input matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Slack on the trace power constraint.
pub const POWER_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("covariance is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("pseudo-covariance is not symmetric (max deviation {0:e})")]
    NotSymmetric(f64),
    #[error("real-composite matrix is not symmetric (deviation {0:e})")]
    NonSymmetricComposite(f64),
    #[error("noise power must be positive and finite, got {0}")]
    InvalidNoise(f64),
    #[error("power budget of user {user} must be nonnegative, got {value}")]
    NegativePower { user: usize, value: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

/// Rectangular complex number as stored in channel and strategy files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexRepr {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexRepr {
    fn from(z: Complex64) -> Self {
        ComplexRepr { re: z.re, im: z.im }
    }
}

impl From<ComplexRepr> for Complex64 {
    fn from(z: ComplexRepr) -> Self {
        Complex64::new(z.re, z.im)
    }
}

// ---------------------------------------------------------------------------
// Instances
// ---------------------------------------------------------------------------

/// K-user MIMO interference channel, `y_k = sum_j H_kj x_j + n_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoIcInstance {
    tx_antennas: usize,
    rx_antennas: usize,
    channels: Vec<Vec<DMatrix<Complex64>>>,
    noise: f64,
    power: Vec<f64>,
}

impl MimoIcInstance {
    /// `channels[k][j]` is the `N x M` matrix from transmitter `j` to receiver `k`.
    pub fn new(
        channels: Vec<Vec<DMatrix<Complex64>>>,
        noise: f64,
        power: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let users = channels.len();
        if users == 0 {
            return Err(ModelError::DimensionMismatch("no users".into()));
        }
        if power.len() != users {
            return Err(ModelError::DimensionMismatch(format!(
                "{} power budgets for {} users",
                power.len(),
                users
            )));
        }
        if !(noise > 0.0 && noise.is_finite()) {
            return Err(ModelError::InvalidNoise(noise));
        }
        for (user, &value) in power.iter().enumerate() {
            if !(value >= 0.0) {
                return Err(ModelError::NegativePower { user, value });
            }
        }
        let (rx, tx) = channels[0]
            .first()
            .map(|h| h.shape())
            .ok_or_else(|| ModelError::DimensionMismatch("empty channel row".into()))?;
        for row in &channels {
            if row.len() != users {
                return Err(ModelError::DimensionMismatch(format!(
                    "channel row has {} entries for {} users",
                    row.len(),
                    users
                )));
            }
            for h in row {
                if h.shape() != (rx, tx) {
                    return Err(ModelError::DimensionMismatch(format!(
                        "channel matrix {:?}, expected {:?}",
                        h.shape(),
                        (rx, tx)
                    )));
                }
                if h.iter().any(|z| !z.is_finite()) {
                    return Err(ModelError::NonFinite("channel matrix"));
                }
            }
        }
        Ok(MimoIcInstance {
            tx_antennas: tx,
            rx_antennas: rx,
            channels,
            noise,
            power,
        })
    }

    pub fn users(&self) -> usize {
        self.channels.len()
    }

    pub fn tx_antennas(&self) -> usize {
        self.tx_antennas
    }

    pub fn rx_antennas(&self) -> usize {
        self.rx_antennas
    }

    pub fn channel(&self, k: usize, j: usize) -> &DMatrix<Complex64> {
        &self.channels[k][j]
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn power(&self, k: usize) -> f64 {
        self.power[k]
    }
}

/// Two-user SISO interference channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SisoChannelFile", into = "SisoChannelFile")]
pub struct SisoIcInstance {
    gains: [[Complex64; 2]; 2],
    phases: [[f64; 2]; 2],
    noise: f64,
    power: [f64; 2],
}

impl SisoIcInstance {
    pub fn new(
        gains: [[Complex64; 2]; 2],
        noise: f64,
        power: [f64; 2],
    ) -> Result<Self, ModelError> {
        if !(noise > 0.0 && noise.is_finite()) {
            return Err(ModelError::InvalidNoise(noise));
        }
        for (user, &value) in power.iter().enumerate() {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(ModelError::NegativePower { user, value });
            }
        }
        if gains.iter().flatten().any(|z| !z.is_finite()) {
            return Err(ModelError::NonFinite("channel gain"));
        }
        let phase = |z: Complex64| wrap_phase(z.arg());
        let phases = [
            [phase(gains[0][0]), phase(gains[0][1])],
            [phase(gains[1][0]), phase(gains[1][1])],
        ];
        Ok(SisoIcInstance {
            gains,
            phases,
            noise,
            power,
        })
    }

    /// Builds an instance from `(magnitude, phase)` pairs.
    pub fn from_polar(
        polar: [[(f64, f64); 2]; 2],
        noise: f64,
        power: [f64; 2],
    ) -> Result<Self, ModelError> {
        let z = |(r, p): (f64, f64)| Complex64::from_polar(r, p);
        Self::new(
            [
                [z(polar[0][0]), z(polar[0][1])],
                [z(polar[1][0]), z(polar[1][1])],
            ],
            noise,
            power,
        )
    }

    /// Same channel with a different noise level and power budgets.
    pub fn with_budget(&self, noise: f64, power: [f64; 2]) -> Result<Self, ModelError> {
        Self::new(self.gains, noise, power)
    }

    pub fn gain(&self, k: usize, j: usize) -> Complex64 {
        self.gains[k][j]
    }

    pub fn gains(&self) -> [[Complex64; 2]; 2] {
        self.gains
    }

    /// `|h_kj|^2`.
    pub fn gain_sq(&self, k: usize, j: usize) -> f64 {
        self.gains[k][j].norm_sqr()
    }

    /// Phase of `h_kj` in `(-pi, pi]`.
    pub fn phase(&self, k: usize, j: usize) -> f64 {
        self.phases[k][j]
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn power(&self, k: usize) -> f64 {
        self.power[k]
    }

    pub fn powers(&self) -> [f64; 2] {
        self.power
    }

    /// `|h_{k,other}|^2 / |h_kk|^2`, infinite when the direct gain vanishes.
    pub fn interference_ratio(&self, k: usize) -> f64 {
        let direct = self.gain_sq(k, k);
        let cross = self.gain_sq(k, 1 - k);
        if direct == 0.0 {
            if cross == 0.0 {
                return 0.0;
            }
            return f64::INFINITY;
        }
        cross / direct
    }

    /// Second-order statistics at both receivers.
    pub fn received_stats(&self, s: &[SisoStrategy; 2]) -> [SisoStats; 2] {
        [0, 1].map(|k| {
            let o = 1 - k;
            let (hk, ho) = (self.gains[k][k], self.gains[k][o]);
            let cs = self.gain_sq(k, o) * s[o].power + self.noise;
            let cts = ho * ho * s[o].pseudo;
            SisoStats {
                cy: self.gain_sq(k, k) * s[k].power + cs,
                cty: hk * hk * s[k].pseudo + cts,
                cs,
                cts,
            }
        })
    }

    /// 1×1 MIMO view of this channel.
    pub fn to_mimo(&self) -> MimoIcInstance {
        let m = |z: Complex64| DMatrix::from_element(1, 1, z);
        MimoIcInstance::new(
            vec![
                vec![m(self.gains[0][0]), m(self.gains[0][1])],
                vec![m(self.gains[1][0]), m(self.gains[1][1])],
            ],
            self.noise,
            self.power.to_vec(),
        )
        .expect("a valid SISO instance is a valid MIMO instance")
    }
}

/// On-disk layout of a SISO channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SisoChannelFile {
    pub h: [[ComplexRepr; 2]; 2],
    pub noise: f64,
    pub power: [f64; 2],
}

impl TryFrom<SisoChannelFile> for SisoIcInstance {
    type Error = ModelError;

    fn try_from(f: SisoChannelFile) -> Result<Self, ModelError> {
        let g = f.h.map(|row| row.map(Complex64::from));
        SisoIcInstance::new(g, f.noise, f.power)
    }
}

impl From<SisoIcInstance> for SisoChannelFile {
    fn from(i: SisoIcInstance) -> Self {
        SisoChannelFile {
            h: i.gains.map(|row| row.map(ComplexRepr::from)),
            noise: i.noise,
            power: i.power,
        }
    }
}

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

/// Outcome of a validity check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Validity {
    /// `trace(C)`, the transmit power.
    pub power: f64,
    pub budget: f64,
    /// Smallest eigenvalue of the augmented covariance.
    pub min_eigenvalue: f64,
}

impl Validity {
    pub fn power_ok(&self) -> bool {
        self.power <= self.budget + POWER_TOL
    }

    pub fn psd_ok(&self) -> bool {
        self.min_eigenvalue >= -PSD_TOL
    }

    pub fn is_valid(&self) -> bool {
        self.power_ok() && self.psd_ok()
    }
}

/// Covariance and pseudo-covariance of a scalar transmit signal.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(into = "SisoStrategyFile", from = "SisoStrategyFile")]
pub struct SisoStrategy {
    /// `C = E|x|^2`.
    pub power: f64,
    /// `Ct = E[x^2]`.
    pub pseudo: Complex64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct SisoStrategyFile {
    c: f64,
    ct: ComplexRepr,
}

impl From<SisoStrategy> for SisoStrategyFile {
    fn from(s: SisoStrategy) -> Self {
        SisoStrategyFile {
            c: s.power,
            ct: s.pseudo.into(),
        }
    }
}

impl From<SisoStrategyFile> for SisoStrategy {
    fn from(f: SisoStrategyFile) -> Self {
        SisoStrategy {
            power: f.c,
            pseudo: f.ct.into(),
        }
    }
}

impl SisoStrategy {
    pub fn new(power: f64, pseudo: Complex64) -> Self {
        SisoStrategy { power, pseudo }
    }

    pub fn proper(power: f64) -> Self {
        SisoStrategy {
            power,
            pseudo: Complex64::new(0.0, 0.0),
        }
    }

    /// Strategy with `|Ct| = magnitude` at phase `phase`.
    pub fn polar(power: f64, magnitude: f64, phase: f64) -> Self {
        SisoStrategy {
            power,
            pseudo: Complex64::from_polar(magnitude, phase),
        }
    }

    /// `|Ct| / C`, zero for a silent transmitter.
    pub fn improperness(&self) -> f64 {
        if self.power > 0.0 {
            self.pseudo.norm() / self.power
        } else {
            0.0
        }
    }

    /// Scalar validity test `C >= 0`, `|Ct| <= C`, `C <= P`.
    ///
    /// The augmented matrix `[[C, Ct], [conj Ct, C]]` has eigenvalues
    /// `C +- |Ct|`, so its smallest eigenvalue is reported directly.
    pub fn validate(&self, budget: f64) -> Validity {
        Validity {
            power: self.power,
            budget,
            min_eigenvalue: self.power - self.pseudo.norm(),
        }
    }

    pub fn to_matrix(&self) -> SignalStrategy {
        SignalStrategy {
            cov: DMatrix::from_element(1, 1, Complex64::new(self.power, 0.0)),
            pseudo: DMatrix::from_element(1, 1, self.pseudo),
        }
    }
}

/// Covariance and pseudo-covariance of an `M`-antenna transmit signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalStrategy {
    cov: DMatrix<Complex64>,
    pseudo: DMatrix<Complex64>,
}

fn max_deviation(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

impl SignalStrategy {
    /// Checks shapes, Hermitian `C` and symmetric `Ct`.
    pub fn new(cov: DMatrix<Complex64>, pseudo: DMatrix<Complex64>) -> Result<Self, ModelError> {
        let m = cov.nrows();
        if cov.ncols() != m || pseudo.shape() != (m, m) {
            return Err(ModelError::DimensionMismatch(format!(
                "covariance {:?}, pseudo-covariance {:?}",
                cov.shape(),
                pseudo.shape()
            )));
        }
        if cov.iter().chain(pseudo.iter()).any(|z| !z.is_finite()) {
            return Err(ModelError::NonFinite("strategy"));
        }
        let scale = cov.norm().max(pseudo.norm()).max(1.0);
        let herm = max_deviation(&cov, &cov.adjoint());
        if herm > SYMMETRY_TOL * scale {
            return Err(ModelError::NotHermitian(herm));
        }
        let sym = max_deviation(&pseudo, &pseudo.transpose());
        if sym > SYMMETRY_TOL * scale {
            return Err(ModelError::NotSymmetric(sym));
        }
        Ok(SignalStrategy { cov, pseudo })
    }

    /// Proper strategy with the given covariance.
    pub fn proper(cov: DMatrix<Complex64>) -> Result<Self, ModelError> {
        let m = cov.nrows();
        Self::new(cov, DMatrix::zeros(m, m))
    }

    pub fn dim(&self) -> usize {
        self.cov.nrows()
    }

    pub fn cov(&self) -> &DMatrix<Complex64> {
        &self.cov
    }

    pub fn pseudo(&self) -> &DMatrix<Complex64> {
        &self.pseudo
    }

    /// Augmented covariance `[[C, Ct], [conj Ct, conj C]]`.
    pub fn augmented(&self) -> DMatrix<Complex64> {
        augmented_matrix(&self.cov, &self.pseudo)
    }

    pub fn validate(&self, budget: f64) -> Validity {
        let power = self.cov.diagonal().iter().map(|z| z.re).sum();
        let eig = self.augmented().symmetric_eigenvalues();
        Validity {
            power,
            budget,
            min_eigenvalue: eig.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }
}

/// `[[a, b], [conj b, conj a]]` for square blocks `a`, `b`.
pub fn augmented_matrix(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let m = a.nrows();
    let mut out = DMatrix::zeros(2 * m, 2 * m);
    out.view_mut((0, 0), (m, m)).copy_from(a);
    out.view_mut((0, m), (m, m)).copy_from(b);
    out.view_mut((m, 0), (m, m)).copy_from(&b.conjugate());
    out.view_mut((m, m), (m, m)).copy_from(&a.conjugate());
    out
}

// ---------------------------------------------------------------------------
// Received statistics
// ---------------------------------------------------------------------------

/// Second-order statistics of `y_k` and of the interference-plus-noise `s_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderStats {
    pub cy: DMatrix<Complex64>,
    pub cty: DMatrix<Complex64>,
    pub cs: DMatrix<Complex64>,
    pub cts: DMatrix<Complex64>,
}

/// Scalar specialization of [`SecondOrderStats`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SisoStats {
    pub cy: f64,
    pub cty: Complex64,
    pub cs: f64,
    pub cts: Complex64,
}

impl SisoStats {
    /// `Cy^2 - |Cty|^2`, bounded below by `sigma^4` for feasible strategies.
    pub fn received_det(&self) -> f64 {
        self.cy * self.cy - self.cty.norm_sqr()
    }

    /// `Cs^2 - |Cts|^2`.
    pub fn interference_det(&self) -> f64 {
        self.cs * self.cs - self.cts.norm_sqr()
    }
}

/// `C_y`, `Ct_y`, `C_s`, `Ct_s` at every receiver.
pub fn received_stats(
    instance: &MimoIcInstance,
    strategies: &[SignalStrategy],
) -> Result<Vec<SecondOrderStats>, ModelError> {
    let users = instance.users();
    if strategies.len() != users {
        return Err(ModelError::DimensionMismatch(format!(
            "{} strategies for {} users",
            strategies.len(),
            users
        )));
    }
    let m = instance.tx_antennas();
    if let Some(s) = strategies.iter().find(|s| s.dim() != m) {
        return Err(ModelError::DimensionMismatch(format!(
            "strategy of size {} for {} transmit antennas",
            s.dim(),
            m
        )));
    }
    let n = instance.rx_antennas();
    let noise = DMatrix::<Complex64>::identity(n, n) * Complex64::new(instance.noise(), 0.0);
    Ok((0..users)
        .map(|k| {
            let mut cs = noise.clone();
            let mut cts = DMatrix::zeros(n, n);
            for (j, s) in strategies.iter().enumerate().filter(|&(j, _)| j != k) {
                let h = instance.channel(k, j);
                cs += h * s.cov() * h.adjoint();
                cts += h * s.pseudo() * h.transpose();
            }
            let h = instance.channel(k, k);
            let s = &strategies[k];
            SecondOrderStats {
                cy: &cs + h * s.cov() * h.adjoint(),
                cty: &cts + h * s.pseudo() * h.transpose(),
                cs,
                cts,
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Real-composite form
// ---------------------------------------------------------------------------

/// Covariance of `[Re x; Im x]` for a scalar strategy.
///
/// `Q = 1/2 [[Re(C + Ct), Im Ct], [Im Ct, Re(C - Ct)]]`, so `trace Q = C`.
pub fn complex_to_real(s: &SisoStrategy) -> Matrix2<f64> {
    let (c, ct) = (s.power, s.pseudo);
    0.5 * Matrix2::new(c + ct.re, ct.im, ct.im, c - ct.re)
}

/// Inverse of [`complex_to_real`].
pub fn real_to_complex(q: &Matrix2<f64>) -> Result<SisoStrategy, ModelError> {
    let dev = (q[(0, 1)] - q[(1, 0)]).abs();
    if dev > SYMMETRY_TOL * q.abs().max().max(1.0) {
        return Err(ModelError::NonSymmetricComposite(dev));
    }
    let off = 0.5 * (q[(0, 1)] + q[(1, 0)]);
    Ok(SisoStrategy {
        power: q[(0, 0)] + q[(1, 1)],
        pseudo: Complex64::new(q[(0, 0)] - q[(1, 1)], 2.0 * off),
    })
}
