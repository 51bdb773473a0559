use serde::{Deserialize, Serialize};

use super::Scene;
use crate::cover::CoverVector;
use crate::error::{Error, Result};

/// Pixel counts behind a scene's exact cover.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthAreas {
    /// Relevant pixels inside the union of the species' leaves, hidden or not.
    pub plant: Vec<u64>,
    /// Relevant pixels outside that union.
    pub uncovered: Vec<u64>,
    /// Non-wall pixel count.
    pub relevant: u64,
}

/// Per-species footprint masks over relevant pixels, ignoring occlusion.
fn footprints(scene: &Scene) -> Vec<Vec<bool>> {
    let (w, h) = (scene.width, scene.height);
    let mut masks = vec![vec![false; w * h]; scene.species_count];
    for leaf in &scene.leaves {
        let m = &mut masks[leaf.species];
        leaf.for_each_pixel(w, h, |x, y| m[y * w + x] = true);
    }
    let wall = scene.wall_mask();
    for m in &mut masks {
        for (px, &is_wall) in m.iter_mut().zip(&wall) {
            *px &= !is_wall;
        }
    }
    masks
}

fn relevant_pixels(scene: &Scene) -> Result<u64> {
    let n = scene.wall_mask().iter().filter(|&&w| !w).count() as u64;
    if n == 0 {
        Err(Error::DegenerateScene)
    } else {
        Ok(n)
    }
}

/// Occlusion-ignored cover: `100 * A_plant / A_relevant` per species.
pub fn true_cover(scene: &Scene) -> Result<(CoverVector, GroundTruthAreas)> {
    let relevant = relevant_pixels(scene)?;
    scene.validate()?;
    let wall = scene.wall_mask();
    let masks = footprints(scene);
    let plant: Vec<u64> = masks
        .iter()
        .map(|m| m.iter().filter(|&&b| b).count() as u64)
        .collect();
    let uncovered = masks
        .iter()
        .map(|m| m.iter().zip(&wall).filter(|&(&b, &w)| !b && !w).count() as u64)
        .collect();
    let cover = plant
        .iter()
        .map(|&p| 100.0 * p as f64 / relevant as f64)
        .collect();
    Ok((
        CoverVector(cover),
        GroundTruthAreas {
            plant,
            uncovered,
            relevant,
        },
    ))
}

/// Per-pixel top-most class: `Some(species)` or `None` for soil and walls.
pub(crate) fn top_species(scene: &Scene) -> Vec<Option<usize>> {
    let (w, h) = (scene.width, scene.height);
    let mut top = vec![None; w * h];
    for leaf in &scene.leaves {
        leaf.for_each_pixel(w, h, |x, y| top[y * w + x] = Some(leaf.species));
    }
    for (t, is_wall) in top.iter_mut().zip(scene.wall_mask()) {
        if is_wall {
            *t = None;
        }
    }
    top
}

/// Cover of the pixels where each species is the top-most visible class.
pub fn visible_cover(scene: &Scene) -> Result<CoverVector> {
    let relevant = relevant_pixels(scene)?;
    scene.validate()?;
    let mut counts = vec![0u64; scene.species_count];
    for s in top_species(scene).into_iter().flatten() {
        counts[s] += 1;
    }
    Ok(CoverVector(
        counts
            .iter()
            .map(|&c| 100.0 * c as f64 / relevant as f64)
            .collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcclusionStats {
    /// Sum of occlusion-ignored covers, percent.
    pub true_sum: f64,
    /// Sum of visible covers (= percent of relevant area showing any plant).
    pub visible_sum: f64,
    /// Share of the summed plant footprint that is hidden by another species.
    pub occluded_fraction: f64,
}

pub fn occlusion_stats(scene: &Scene) -> Result<OcclusionStats> {
    let true_sum = true_cover(scene)?.0.sum();
    let visible_sum = visible_cover(scene)?.sum();
    let occluded_fraction = if true_sum > 0.0 {
        1.0 - visible_sum / true_sum
    } else {
        0.0
    };
    Ok(OcclusionStats {
        true_sum,
        visible_sum,
        occluded_fraction,
    })
}
