//! Procedural EcoUnit image series with exact occlusion-ignored ground truth.
//!
//! Plants are drawn as rotated elliptical leaves. Each camera owns a fixed
//! list of leaves whose order is the z-order (later leaves occlude earlier
//! ones). Leaves emerge, grow logistically week over week, and a fraction of
//! them senesce into dead litter towards the end of the series.

mod annotate;
mod config;
mod dataset;
mod generate;
mod render;
mod truth;

use serde::{Deserialize, Serialize};

pub use annotate::{annotate_series, annotate_series_with_truth};
pub use config::SimConfig;
pub use dataset::{simulate_images, SimulatedImage, ANNOTATION_NOISE_SD};
pub use generate::{generate_dataset, generate_series};
pub use render::{leaf_color, render, species_base_color, BACKGROUND_RGB, WALL_RGB};
pub use truth::{occlusion_stats, true_cover, visible_cover, GroundTruthAreas, OcclusionStats};

use crate::error::{Error, Result};

/// Irrelevant border frame, thickness in pixels per side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WallFrame {
    pub left: u32,
    pub right: u32,
    pub top: u32,
    pub bottom: u32,
}

impl WallFrame {
    pub fn uniform(thickness: u32) -> Self {
        Self {
            left: thickness,
            right: thickness,
            top: thickness,
            bottom: thickness,
        }
    }

    #[inline]
    pub fn is_wall(&self, width: usize, height: usize, x: usize, y: usize) -> bool {
        x < self.left as usize
            || y < self.top as usize
            || x + (self.right as usize) >= width
            || y + (self.bottom as usize) >= height
    }

    /// Row-major boolean grid, `true` where the pixel is wall.
    pub fn mask(&self, width: usize, height: usize) -> Vec<bool> {
        let mut m = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                m.push(self.is_wall(width, height, x, y));
            }
        }
        m
    }

    fn interior(&self, width: usize, height: usize) -> Option<[f64; 4]> {
        let x0 = self.left as f64;
        let x1 = width as f64 - self.right as f64;
        let y0 = self.top as f64;
        let y1 = height as f64 - self.bottom as f64;
        (x1 > x0 && y1 > y0).then_some([x0, x1, y0, y1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafInstance {
    /// Registry index of the class this leaf counts towards.
    pub species: usize,
    /// Pixel coordinates; pixel (i, j) has its center at (i + 0.5, j + 0.5).
    pub center: [f64; 2],
    pub radii: [f64; 2],
    pub angle: f64,
    pub color_seed: u64,
    /// Registry index of the living species the leaf started as. Equal to
    /// `species` unless the leaf has senesced.
    pub origin_species: usize,
}

impl LeafInstance {
    #[inline]
    pub fn contains(&self, px: f64, py: f64) -> bool {
        let (s, c) = self.angle.sin_cos();
        let dx = px - self.center[0];
        let dy = py - self.center[1];
        let u = (dx * c + dy * s) / self.radii[0];
        let v = (-dx * s + dy * c) / self.radii[1];
        u * u + v * v <= 1.0
    }

    /// Inclusive pixel bounding box clipped to the image, or `None` if the
    /// ellipse lies entirely outside.
    pub fn pixel_bounds(&self, width: usize, height: usize) -> Option<[usize; 4]> {
        let (s, c) = self.angle.sin_cos();
        let [a, b] = self.radii;
        let ex = ((a * c).powi(2) + (b * s).powi(2)).sqrt();
        let ey = ((a * s).powi(2) + (b * c).powi(2)).sqrt();
        let x0 = (self.center[0] - ex - 0.5).floor().max(0.0);
        let y0 = (self.center[1] - ey - 0.5).floor().max(0.0);
        let x1 = (self.center[0] + ex - 0.5).ceil().min(width as f64 - 1.0);
        let y1 = (self.center[1] + ey - 0.5).ceil().min(height as f64 - 1.0);
        (x1 >= x0 && y1 >= y0).then_some([x0 as usize, y0 as usize, x1 as usize, y1 as usize])
    }

    /// Visits every pixel whose center lies inside the ellipse.
    pub fn for_each_pixel(&self, width: usize, height: usize, mut f: impl FnMut(usize, usize)) {
        let Some([x0, y0, x1, y1]) = self.pixel_bounds(width, height) else {
            return;
        };
        for y in y0..=y1 {
            for x in x0..=x1 {
                if self.contains(x as f64 + 0.5, y as f64 + 0.5) {
                    f(x, y);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub width: usize,
    pub height: usize,
    pub week: u32,
    pub species_count: usize,
    pub wall: WallFrame,
    /// z-order: later leaves are drawn on top.
    pub leaves: Vec<LeafInstance>,
}

impl Scene {
    pub fn empty(width: usize, height: usize, wall: WallFrame, species_count: usize) -> Self {
        Self {
            width,
            height,
            week: 1,
            species_count,
            wall,
            leaves: Vec::new(),
        }
    }

    pub fn wall_mask(&self) -> Vec<bool> {
        self.wall.mask(self.width, self.height)
    }

    #[inline]
    pub fn is_wall(&self, x: usize, y: usize) -> bool {
        self.wall.is_wall(self.width, self.height, x, y)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::config(
                "scene.size",
                "width and height must be positive",
            ));
        }
        let Some([x0, x1, y0, y1]) = self.wall.interior(self.width, self.height) else {
            return Err(Error::DegenerateScene);
        };
        for (i, leaf) in self.leaves.iter().enumerate() {
            if leaf.species >= self.species_count || leaf.origin_species >= self.species_count {
                return Err(Error::config(
                    format!("leaves[{i}].species"),
                    format!(
                        "index {} outside registry of {}",
                        leaf.species, self.species_count
                    ),
                ));
            }
            if !(leaf.radii[0] > 0.0 && leaf.radii[1] > 0.0) || !leaf.angle.is_finite() {
                return Err(Error::config(
                    format!("leaves[{i}].radii"),
                    "radii must be positive",
                ));
            }
            let [cx, cy] = leaf.center;
            if !(cx >= x0 && cx <= x1 && cy >= y0 && cy <= y1) {
                return Err(Error::config(
                    format!("leaves[{i}].center"),
                    format!("({cx}, {cy}) lies outside the non-wall region"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSeries {
    pub camera: u32,
    /// One scene per week, week 1 first.
    pub scenes: Vec<Scene>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcoUnitSeries {
    pub unit_id: u32,
    pub config: SimConfig,
    /// Per-unit living-species leaf weights actually used (a jittered copy of
    /// the configured mixture).
    pub abundance: Vec<f64>,
    pub cameras: Vec<CameraSeries>,
}

impl EcoUnitSeries {
    pub fn scenes(&self) -> impl Iterator<Item = (u32, &Scene)> {
        self.cameras
            .iter()
            .flat_map(|c| c.scenes.iter().map(move |s| (c.camera, s)))
    }
}
