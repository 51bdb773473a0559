use super::{annotate_series_with_truth, generate_dataset, occlusion_stats, render, SimConfig};
use crate::cover::CoverVector;
use crate::error::Result;
use crate::image::RgbImage;
use crate::par;

/// Default relative annotation noise.
pub const ANNOTATION_NOISE_SD: f64 = 0.1;

/// A rendered scene with its annotation and exact ground truth.
#[derive(Debug, Clone)]
pub struct SimulatedImage {
    pub unit: u32,
    pub camera: u32,
    pub week: u32,
    pub image: RgbImage,
    /// Noisy Schmidt-scale annotation.
    pub annotation: CoverVector,
    /// Exact occlusion-ignoring cover.
    pub truth: CoverVector,
    /// Fraction of summed plant area hidden under other plants.
    pub occluded_fraction: f64,
}

/// Generates, renders and annotates every scene of a dataset, ordered by
/// unit, camera and week.
pub fn simulate_images(
    config: &SimConfig,
    seed: u64,
    noise_sd: f64,
) -> Result<Vec<SimulatedImage>> {
    let units = generate_dataset(config, seed)?;
    let per_unit = par::map(&units, |series| -> Result<Vec<SimulatedImage>> {
        let annotated = annotate_series_with_truth(series, noise_sd, seed)?;
        series
            .scenes()
            .zip(annotated)
            .map(|((camera, scene), (ann, truth))| {
                Ok(SimulatedImage {
                    unit: series.unit_id,
                    camera,
                    week: scene.week,
                    image: render(scene)?,
                    annotation: ann.cover,
                    truth,
                    occluded_fraction: occlusion_stats(scene)?.occluded_fraction,
                })
            })
            .collect()
    });
    let mut out = Vec::new();
    for images in per_unit {
        out.extend(images?);
    }
    Ok(out)
}
