//! Occlusion-aware plant cover estimation.
//!
//! A linear head scores every pixel of a feature map for each species plus
//! background and irrelevant classes. Species probabilities are independent
//! logistic outputs, so overlapping plants may all be counted, and a learned
//! threshold `kappa` decides how much plant mass a pixel needs before it counts
//! as vegetation. Image-level cover percentages follow from summing the
//! per-pixel probabilities, and the head is trained from those percentages
//! alone.
//!
//! The crate also contains a synthetic scene simulator with exact ground
//! truth, a handcrafted feature extractor, the training loop, metrics and a
//! cross-validation harness.

pub mod cover;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod head;
pub mod image;
pub mod kv;
pub mod metrics;
mod par;
pub mod registry;
pub mod schmidt;
pub mod simulator;
pub mod trainer;

pub use cover::{Annotation, CoverVector, MAX_WEEK};
pub use error::{Error, Result};
pub use features::{FeatureMap, NormStats};
pub use head::HeadParams;
pub use image::RgbImage;
pub use registry::SpeciesRegistry;
