//! Bilateral filtering of the field's level sets.
//!
//! Queries are pulled onto the zero level set and compared against the
//! input points around their nearest neighbour. The unpulled queries are
//! compared against the same neighbours moved onto the query's own level
//! set. A Chamfer (or pull) constraint keeps the field from collapsing.

pub mod config;
pub mod losses;
pub mod patch;

pub use config::{Constraint, FilterConfig, FilterKind, LossCombo, SigmaPolicy};
pub use losses::{
    combine, loss_cd, loss_dist, loss_field, loss_pull, loss_zero, project_neighbors, pull, total_loss, FilterLoss,
    FilterTermBreakdown,
};
pub use patch::{average_filter_baseline, bilateral_distance, patch_distance, weight_normal, weight_spatial, Patch, PatchGrad, PatchParams};
