//! Monte Carlo simulator for a two-hop MIMO relay link with partial
//! decode-and-forward (PDF) relaying over correlated Rayleigh fading.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`). The aliases
//! at the bottom of this file fix it to `f64`, which is what the CLI uses.
//!
//! Module map:
//! - [`mathcore`]: dense complex matrices, Hermitian eigensolver, Kronecker product.
//! - [`channel`]: Kronecker-correlated channel draws and path loss.
//! - [`precoder`]: equalizing source/relay precoders, stream split, power split search.
//! - [`protocol`]: per-realization SINRs and outage flags for PDF and baselines.
//! - [`outage`]: parallel, reproducible outage estimation and SNR sweeps.
//! - [`config`], [`report`]: TOML configuration, CSV and gain summaries.

pub mod channel;
pub mod config;
pub mod error;
pub mod mathcore;
pub mod outage;
pub mod precoder;
pub mod protocol;
pub mod report;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type CMatrix = mathcore::Matrix<f64>;
pub type HermitianEig = mathcore::HermitianEig<f64>;
pub type LinkCorrelation = channel::LinkCorrelation<f64>;
pub type ChannelModel = channel::ChannelModel<f64>;
pub type ChannelRealization = channel::ChannelRealization<f64>;
pub type PowerSplit = precoder::PowerSplit<f64>;
pub type StreamSplit = precoder::StreamSplit<f64>;
pub type PrecoderPair = precoder::PrecoderPair<f64>;
pub type PrecoderShape = precoder::PrecoderShape<f64>;
pub type PrecoderScaling = precoder::PrecoderScaling<f64>;
pub type RhoParams = precoder::RhoParams<f64>;
pub type StreamGains = protocol::StreamGains<f64>;
pub type SerModel = protocol::SerModel<f64>;
pub type LinkParams = protocol::LinkParams<f64>;
pub type GainBank = outage::GainBank<f64>;
pub type Simulator = outage::Simulator<f64>;
