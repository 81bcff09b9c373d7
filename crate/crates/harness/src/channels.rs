//! Channel ensembles and the fixed example channels.

use improper_core::par::stream_rng;
use improper_core::{Complex64, SisoIcInstance};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Built-in channel realizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ChannelName {
    /// Strong mutual interference; improper signaling enlarges the region.
    H1,
    /// Weak interference at user 1; improper signaling barely helps.
    H2,
    /// The channel of the sum-rate comparison case.
    Table,
}

pub fn named_channel(name: ChannelName) -> [[Complex64; 2]; 2] {
    let p = Complex64::from_polar;
    let c = Complex64::new;
    match name {
        ChannelName::H1 => [
            [p(2.0310, -0.6858), p(1.4766, 2.6452)],
            [p(0.7280, 1.9726), p(0.9935, -0.6676)],
        ],
        ChannelName::H2 => [
            [p(4.0, 1.7730), p(0.90, 1.6744)],
            [p(0.80, 0.6249), p(1.50, 2.1057)],
        ],
        ChannelName::Table => [
            [c(2.7388, -0.2498), c(0.9956, 1.8047)],
            [c(0.6680, -1.6470), c(0.4760, 1.2706)],
        ],
    }
}

/// `CN(0, var)` sample.
fn cscg(rng: &mut impl rand::Rng, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// Gains of channel `index` of an ensemble: direct links `CN(0, var_direct)`,
/// cross links `CN(0, var_cross)`. Draw order is `h11, h12, h21, h22`.
pub fn channel_gains(
    seed: u64,
    index: usize,
    var_direct: f64,
    var_cross: f64,
) -> [[Complex64; 2]; 2] {
    let mut rng = stream_rng(seed, index as u64);
    let mut draw = |k: usize, j: usize| {
        let v = if k == j { var_direct } else { var_cross };
        cscg(&mut rng, v)
    };
    let h11 = draw(0, 0);
    let h12 = draw(0, 1);
    let h21 = draw(1, 0);
    let h22 = draw(1, 1);
    [[h11, h12], [h21, h22]]
}

/// `count` channels with unit noise and unit power; rescale with
/// [`SisoIcInstance::with_budget`].
pub fn gen_channels(
    seed: u64,
    count: usize,
    var_direct: f64,
    var_cross: f64,
) -> Vec<SisoIcInstance> {
    assert!(
        var_direct >= 0.0 && var_cross >= 0.0,
        "variances must be nonnegative"
    );
    (0..count)
        .map(|i| {
            SisoIcInstance::new(
                channel_gains(seed, i, var_direct, var_cross),
                1.0,
                [1.0, 1.0],
            )
            .expect("finite gains and unit budget")
        })
        .collect()
}

/// Instance with unit noise and both powers set from `snr_db`.
pub fn at_snr(gains: [[Complex64; 2]; 2], snr_db: f64) -> SisoIcInstance {
    let p = crate::config::power_from_snr(snr_db);
    SisoIcInstance::new(gains, 1.0, [p, p]).expect("finite gains and positive budget")
}
