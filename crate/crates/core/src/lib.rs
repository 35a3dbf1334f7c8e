//! Locally private convex risk minimization.
//!
//! Data owners perturb their subgradients through a privacy channel before a
//! learner ever sees them. This crate provides the channels (mutual-information
//! optimal and differentially private), the stochastic optimizers that consume
//! the perturbed subgradients, exact information certificates, and the
//! minimax lower/upper bound curves that say how much accuracy privacy costs.

pub mod channels;
pub mod error;
pub mod geometry;
pub mod information;
pub mod losses;
pub mod lp_oracle;
pub mod minimax;
pub mod numeric;
pub mod optimizers;
pub mod protocol;
pub mod rng;

pub use channels::{Channel, ChannelConfig, ChannelKind, PrivacyCertificate};
pub use error::{Error, Result};
pub use geometry::{Norm, NormBall, Packing, Vector};
pub use information::{DiscreteDist, InfoReport};
pub use losses::{DataDist, LossFn, LossKind, RiskSpec};
pub use optimizers::{GradOracle, Method, OptimizerConfig, OptimizerRun};
pub use protocol::{DataOwner, PrivateGradStream, StreamMode};
pub use rng::Rng;
