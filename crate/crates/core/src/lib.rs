//! Rate–distortion and power–distortion trade-offs for a state-dependent
//! fading Gaussian channel where transmitter and receiver must agree on a
//! common reconstruction of the state.
//!
//! The channel is `Y = G X + S + Z` with state `S ~ N(0, Q)` known
//! non-causally at the encoder, fading `G` known at both ends and noise
//! `Z ~ N(0, sigma_z^2)`. The crate provides
//!
//! - [`rate`]: the per-state achievable rate, outer-bound quantities and
//!   feasibility checks;
//! - [`oracle`]: an independent covariance-algebra and Monte-Carlo path that
//!   reproduces every closed form;
//! - [`quadrature`]: expectations over the fading law;
//! - [`optimize`]: ergodic rate maximization under an average power budget,
//!   the rate–distortion frontier and the power–distortion inversion;
//! - [`cli`]: the command implementations behind the `crfade` binary.

pub mod cli;
pub mod error;
pub mod model;
pub mod optimize;
pub mod oracle;
pub mod quadrature;
pub mod rate;

pub use error::{Error, Result};
pub use model::{ChannelParams, CodingParams, Config, FadingModel, LogBase, PerStatePolicy};
