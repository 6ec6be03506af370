//! One-way secret key rates for BB84 and 6-state QKD with noisy
//! preprocessing and repetition-code ("cat code") advantage distillation.
//!
//! All entropies are in bits. The crate evaluates the asymptotic rate
//! `I(X:Y) - I(X:E)` for collective attacks and optimizes it over the
//! preprocessing noise.

pub mod bb84;
pub mod combinatorics;
pub mod entropy;
pub mod error;
pub mod iterated;
pub mod optimizer;
pub mod oracle;
pub mod protocol;
pub mod qubit;
pub mod report;
pub mod schur;
pub mod sixstate;
pub mod validation;

pub use bb84::{BitPhaseDistribution, RateComponents};
pub use error::{Error, Result};
pub use iterated::IteratedParams;
pub use optimizer::{OptimizationResult, Optimization2dResult, ThresholdResult};
pub use protocol::{NoiseChoice, Protocol};
pub use qubit::QubitDensity;
pub use report::RatePoint;
pub use sixstate::SixStateChannel;
