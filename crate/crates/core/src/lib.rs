//! Joint beam selection, UE-AP assignment and max-min fair uplink power
//! control for a simulated mmWave network.
//!
//! For a fixed receive-beam configuration the optimal common rate fraction
//! and power vector come from a normalized fixed-point iteration
//! ([`fixedpoint`]). Beam configurations are found by exhaustive search,
//! simulated annealing ([`beamsearch`]) or predicted in one shot by a small
//! multi-head classifier ([`mlp`]). [`dataset`] produces labeled data and
//! [`eval`] measures solution efficiency against the exhaustive optimum.
//!
//! The numeric kernels are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix them to `f64`, which the file formats and experiments use.

pub mod beamsearch;
pub mod channel;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod fixedpoint;
pub mod mlp;
pub mod scalar;
pub mod scenario;

pub use config::{NetworkConfig, Point};
pub use error::{Error, ErrorKind, Result};
pub use scalar::Scalar;
pub use scenario::{BeamConfig, Scenario, UeState};

pub type ChannelMatrix64 = channel::ChannelMatrix<f64>;
pub type ChannelMatrix32 = channel::ChannelMatrix<f32>;
pub type Allocation64 = fixedpoint::Allocation<f64>;
pub type Allocation32 = fixedpoint::Allocation<f32>;
pub type Instance64 = beamsearch::Instance<f64>;
pub type SearchResult64 = beamsearch::SearchResult<f64>;
pub type MlpModel64 = mlp::MlpModel<f64>;
pub type MlpModel32 = mlp::MlpModel<f32>;
