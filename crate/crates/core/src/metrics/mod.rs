//! Reconstruction metrics on sampled point sets.

mod distance;
mod report;

pub use distance::{
    chamfer, edge_chamfer, edge_points, f_score, hausdorff, nearest_neighbors, normal_consistency,
    one_sided_chamfer, one_sided_hausdorff, ChamferOrder, EdgeChamfer, FScore,
};
pub use report::{evaluate, EdgeParams, EvalOptions, MetricsReport, SurfaceSample};
