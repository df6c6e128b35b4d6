//! The signed distance network.

pub mod activation;
pub mod checkpoint;
pub mod mlp;

pub use mlp::{Linear, MlpField, NetConfig, SdfSample};
