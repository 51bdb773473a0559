//! Browser demo over the core crate. [`DemoState`] holds the logic and is
//! usable natively; [`Demo`] is its wasm-bindgen face.
//!
//! Three operations: render one synthetic scene, train a head on a small
//! simulated dataset, and segment the current scene with the trained head at
//! a user-chosen plant threshold.

use coverhead::features::{extract, fit_normalizer, ExtractorConfig, FeatureMap};
use coverhead::head::{forward, segmentation_map, HeadParams, SPECIES_PALETTE};
use coverhead::simulator::{
    generate_series, occlusion_stats, render, simulate_images, true_cover, SimConfig,
};
use coverhead::trainer::{train_from, Example, TrainConfig};
use coverhead::{CoverVector, Error, Result, RgbImage, SpeciesRegistry};
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub const WIDTH: usize = 160;
pub const HEIGHT: usize = 80;

fn scene_config(overlap: f64) -> SimConfig {
    SimConfig {
        width: WIDTH,
        height: HEIGHT,
        wall_thickness: 5,
        units: 2,
        leaves_per_scene: 40,
        leaf_radius: [4.0, 10.0],
        overlap_ramp: (overlap > 0.0).then_some([overlap, overlap]),
        ..SimConfig::default()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SceneSummary {
    pub week: u32,
    pub species: Vec<String>,
    pub true_cover: Vec<f64>,
    pub true_sum: f64,
    pub visible_sum: f64,
    pub occluded_fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub images: usize,
    pub epochs: Vec<(u32, f64, f64)>,
    pub kappa: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SegmentSummary {
    pub kappa: f64,
    pub predicted_cover: Vec<f64>,
    pub true_cover: Vec<f64>,
    pub mae: f64,
    /// Pixels per label: species in registry order, then background and
    /// irrelevant.
    pub label_pixels: Vec<usize>,
}

#[derive(Default)]
pub struct DemoState {
    image: Option<RgbImage>,
    features: Option<FeatureMap>,
    truth: Option<CoverVector>,
    params: Option<HeadParams>,
}

impl DemoState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Renders camera 0 of a fresh unit at `week`. `overlap` in [0, 1] pulls
    /// leaves towards each other, raising occlusion.
    pub fn render_scene(
        &mut self,
        seed: u64,
        week: u32,
        overlap: f64,
    ) -> Result<(RgbImage, SceneSummary)> {
        let config = scene_config(overlap.clamp(0.0, 1.0));
        let series = generate_series(&config, 0, seed)?;
        let scene = series.cameras[0]
            .scenes
            .iter()
            .find(|s| s.week == week)
            .ok_or(Error::Domain {
                value: week as f64,
                min: 1.0,
                max: config.weeks as f64,
            })?;
        let image = render(scene)?;
        let (cover, _) = true_cover(scene)?;
        let stats = occlusion_stats(scene)?;
        let summary = SceneSummary {
            week,
            species: SpeciesRegistry::default().names().to_vec(),
            true_cover: cover.values().to_vec(),
            true_sum: stats.true_sum,
            visible_sum: stats.visible_sum,
            occluded_fraction: stats.occluded_fraction,
        };
        self.features = Some(extract(&image, ExtractorConfig::default()));
        self.image = Some(image.clone());
        self.truth = Some(cover);
        Ok((image, summary))
    }

    /// Trains on two simulated units (72 images) with a short, fast schedule.
    /// Species biases start at the logit of each species' mean cover, which
    /// a few hundred steps could not otherwise reach.
    pub fn quick_train(&mut self, seed: u64, epochs: u32) -> Result<TrainSummary> {
        let images = simulate_images(&scene_config(0.0), seed, 0.0)?;
        let features: Vec<FeatureMap> = images
            .iter()
            .map(|i| extract(&i.image, ExtractorConfig::default()))
            .collect();
        let examples: Vec<Example> = features
            .iter()
            .zip(&images)
            .map(|(f, i)| Example {
                features: f,
                target: &i.truth,
            })
            .collect();
        let registry = SpeciesRegistry::default();
        let mut initial = HeadParams::init(registry.clone(), features[0].channels(), seed)?;
        initial.normalization = Some(fit_normalizer(features.iter())?);
        let offset = initial.rows() * initial.feature_dim();
        for k in 0..registry.count() {
            let mean =
                images.iter().map(|i| i.truth.values()[k]).sum::<f64>() / images.len() as f64;
            let f = (mean / 100.0).clamp(1e-3, 0.5);
            initial.flat_mut()[offset + k] = (f / (1.0 - f)).ln();
        }
        let config = TrainConfig {
            lr0: 0.02,
            decay_epochs: Vec::new(),
            seed,
            ..TrainConfig::default()
        }
        .with_epochs(epochs.max(1));
        let (params, history) = train_from(initial, &examples, &config)?;
        let summary = TrainSummary {
            images: images.len(),
            epochs: history
                .epochs
                .iter()
                .map(|e| (e.epoch, e.loss, e.kappa))
                .collect(),
            kappa: params.kappa(),
        };
        self.params = Some(params);
        Ok(summary)
    }

    pub fn is_trained(&self) -> bool {
        self.params.is_some()
    }

    pub fn trained_kappa(&self) -> Option<f64> {
        self.params.as_ref().map(HeadParams::kappa)
    }

    /// Segments the current scene with the trained head, its threshold
    /// replaced by `kappa`.
    pub fn segment(&self, kappa: f64) -> Result<(RgbImage, SegmentSummary)> {
        let (Some(features), Some(truth)) = (&self.features, &self.truth) else {
            return Err(Error::Empty("scene; render one first"));
        };
        let Some(trained) = &self.params else {
            return Err(Error::Empty("head parameters; train first"));
        };
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::Domain {
                value: kappa,
                min: f64::MIN_POSITIVE,
                max: f64::INFINITY,
            });
        }
        let mut params = trained.clone();
        *params.flat_mut().last_mut().expect("kappa slot") = inverse_softplus(kappa);
        let (maps, _, cover) = forward(features, &params)?;
        let labels = segmentation_map(&maps);
        let mut label_pixels = vec![0; labels.species + 2];
        for &l in &labels.labels {
            label_pixels[l as usize] += 1;
        }
        let summary = SegmentSummary {
            kappa: params.kappa(),
            mae: coverhead::head::loss_mae(&cover, truth),
            predicted_cover: cover.values().to_vec(),
            true_cover: truth.values().to_vec(),
            label_pixels,
        };
        Ok((labels.to_image(), summary))
    }
}

/// Raw parameter whose softplus is `kappa`.
pub fn inverse_softplus(kappa: f64) -> f64 {
    if kappa > 30.0 {
        kappa
    } else {
        kappa.exp_m1().ln()
    }
}

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn json(v: &impl Serialize) -> String {
    serde_json::to_string(v).unwrap_or_else(|_| "null".into())
}

#[wasm_bindgen]
pub struct Demo {
    state: DemoState,
    last: String,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Demo {
        Demo {
            state: DemoState::new(),
            last: "null".into(),
        }
    }

    pub fn width(&self) -> u32 {
        WIDTH as u32
    }

    pub fn height(&self) -> u32 {
        HEIGHT as u32
    }

    /// Species names and label colors as JSON.
    pub fn legend(&self) -> String {
        let names = SpeciesRegistry::default().names().to_vec();
        let colors: Vec<[u8; 3]> = SPECIES_PALETTE.to_vec();
        json(&serde_json::json!({ "species": names, "colors": colors }))
    }

    /// RGBA pixels of the rendered scene; details via `summary()`.
    pub fn render_scene(&mut self, seed: u32, week: u32, overlap: f64) -> Result<Vec<u8>, JsError> {
        let (img, summary) = self
            .state
            .render_scene(seed as u64, week, overlap)
            .map_err(js_err)?;
        self.last = json(&summary);
        Ok(img.to_rgba())
    }

    /// Trains and returns the per-epoch loss trace as JSON.
    pub fn quick_train(&mut self, seed: u32, epochs: u32) -> Result<String, JsError> {
        let summary = self
            .state
            .quick_train(seed as u64, epochs)
            .map_err(js_err)?;
        Ok(json(&summary))
    }

    pub fn trained_kappa(&self) -> Option<f64> {
        self.state.trained_kappa()
    }

    /// RGBA label map of the current scene; details via `summary()`.
    pub fn segment(&mut self, kappa: f64) -> Result<Vec<u8>, JsError> {
        let (img, summary) = self.state.segment(kappa).map_err(js_err)?;
        self.last = json(&summary);
        Ok(img.to_rgba())
    }

    /// JSON summary of the last render or segmentation.
    pub fn summary(&self) -> String {
        self.last.clone()
    }
}

impl Default for Demo {
    fn default() -> Self {
        Self::new()
    }
}
