//! Learning neural signed distance functions from raw, unoriented point
//! clouds with implicit bilateral filtering of level sets.
//!
//! Pipeline: [`geom`] loads, normalizes and samples the cloud, [`net`] holds
//! the network, [`autodiff`] differentiates losses that depend on the field
//! gradient, [`filter`] defines those losses, [`trainer`] optimizes them,
//! [`mesher`] extracts an iso-surface and [`metrics`] scores it.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases below name the common instantiations.

pub mod autodiff;
pub mod error;
pub mod filter;
pub mod geom;
pub mod io;
pub mod mesher;
pub mod metrics;
pub mod net;
pub mod scalar;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Field32 = net::MlpField<f32>;
pub type Field64 = net::MlpField<f64>;
pub type Cloud3<T = f64> = geom::PointCloud<T, 3>;
pub type Cloud2<T = f64> = geom::PointCloud<T, 2>;
