//! Point clouds, nearest-neighbour search and query sampling.

pub mod cloud;
pub mod kdtree;
pub mod sampling;
pub mod shapes;
pub mod vector;

pub use cloud::{NormalizationTransform, PointCloud};
pub use kdtree::KdTree;
pub use sampling::{sample_queries, sample_sigmas, QueryBatch, SamplingConfig};
pub use vector::Point;
