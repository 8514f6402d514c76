//! Error-exponent bounds for two-user multiple-access channels with noiseless
//! feedback, and a simulator for the two-stage (data + confirmation) scheme.
//!
//! The channel model, divergences and the max-min solver are generic over the
//! floating-point type; the concrete aliases below fix `f64` (and `f32` where
//! useful). Bounds and simulation work in `f64`.

pub mod bounds;
pub mod channel;
pub mod channel_file;
pub mod info;
pub mod maxmin;
pub mod scalar;
pub mod sim;

pub use scalar::Scalar;

pub type Channel = channel::Channel<f64>;
pub type Channel32 = channel::Channel<f32>;
pub type PtpChannel = channel::PtpChannel<f64>;
pub type PtpChannel32 = channel::PtpChannel<f32>;
pub type QuadDistribution = info::QuadDistribution<f64>;
pub type InputProduct = info::InputProduct<f64>;
pub type PayoffMatrix = maxmin::PayoffMatrix<f64>;
pub type MaxMinSolution = maxmin::MaxMinSolution<f64>;
