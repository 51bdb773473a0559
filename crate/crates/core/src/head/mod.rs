//! The calculation model: per-pixel species probabilities with a learnable
//! plant threshold, aggregation into cover percentages, the MAE loss and its
//! hand-derived gradient.

mod backward;
mod forward;
mod kernel;
mod params;
mod segmap;

pub use backward::{backward, backward_with, Backward, ZERO_RESIDUAL};
pub use forward::{
    forward, loss_mae, predict, predict_with, AggregateAreas, ProbabilityMaps, Workspace,
    MIN_DENOMINATOR,
};
pub use params::{logistic, softplus, HeadParams, KAPPA_RAW_INIT, PARAMS_FORMAT_VERSION};
pub use segmap::{
    segmentation_map, SegmentationMap, BACKGROUND_LABEL_RGB, IRRELEVANT_LABEL_RGB, SPECIES_PALETTE,
};

use crate::error::Result;
use crate::features::FeatureMap;

/// Forward pass straight to hard labels.
pub fn segment(features: &FeatureMap, params: &HeadParams) -> Result<SegmentationMap> {
    let (maps, _, _) = forward(features, params)?;
    Ok(segmentation_map(&maps))
}
