//! Head training: per-sample Adam updates on (feature map, cover) pairs with
//! a step learning-rate schedule and random horizontal flips.

mod adam;
mod config;

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use config::TrainConfig;

use crate::cover::CoverVector;
use crate::error::{Error, Result};
use crate::features::{FeatureMap, NormStats};
use crate::head::{backward_with, HeadParams, Workspace};
use crate::registry::SpeciesRegistry;

// The browser target has no monotonic clock in std; epochs report 0 s there.
#[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
mod clock {
    pub fn start() -> std::time::Instant {
        std::time::Instant::now()
    }

    pub fn seconds_since(t: std::time::Instant) -> f64 {
        t.elapsed().as_secs_f64()
    }
}

#[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
mod clock {
    pub fn start() {}

    pub fn seconds_since(_: ()) -> f64 {
        0.0
    }
}

/// One training pair. With a normalizer the features are raw; the head
/// applies the statistics itself.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub features: &'a FeatureMap,
    pub target: &'a CoverVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u32,
    /// Mean per-sample training loss over the epoch, percentage points.
    pub loss: f64,
    pub lr: f64,
    /// Threshold value at the end of the epoch.
    pub kappa: f64,
    /// Wall-clock duration. Kept out of serialized output so that reruns
    /// produce identical files.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "loss", "lr", "kappa"])?;
        for r in &self.epochs {
            w.write_record([
                r.epoch.to_string(),
                r.loss.to_string(),
                r.lr.to_string(),
                r.kappa.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Trains on already-normalized features.
pub fn train(
    dataset: &[Example<'_>],
    registry: &SpeciesRegistry,
    config: &TrainConfig,
) -> Result<(HeadParams, TrainHistory)> {
    run(dataset, registry, None, None, config)
}

/// Trains on raw features. The head carries `stats` throughout and applies
/// them on every forward pass.
pub fn train_with_normalizer(
    dataset: &[Example<'_>],
    registry: &SpeciesRegistry,
    stats: &NormStats,
    config: &TrainConfig,
) -> Result<(HeadParams, TrainHistory)> {
    run(dataset, registry, Some(stats), None, config)
}

/// Continues training from `initial`, keeping its registry and normalizer.
pub fn train_from(
    initial: HeadParams,
    dataset: &[Example<'_>],
    config: &TrainConfig,
) -> Result<(HeadParams, TrainHistory)> {
    let registry = initial.registry().clone();
    let stats = initial.normalization.clone();
    run(dataset, &registry, stats.as_ref(), Some(initial), config)
}

fn run(
    dataset: &[Example<'_>],
    registry: &SpeciesRegistry,
    stats: Option<&NormStats>,
    initial: Option<HeadParams>,
    config: &TrainConfig,
) -> Result<(HeadParams, TrainHistory)> {
    config.validate()?;
    let Some(first) = dataset.first() else {
        return Err(Error::Empty("training set"));
    };
    let dim = first.features.channels();
    for (i, ex) in dataset.iter().enumerate() {
        if ex.features.channels() != dim {
            return Err(Error::config(
                "dataset",
                format!(
                    "example {i} has {} channels, expected {dim}",
                    ex.features.channels()
                ),
            ));
        }
        if ex.target.len() != registry.count() {
            return Err(Error::config(
                "dataset",
                format!(
                    "example {i} target has {} species, registry has {}",
                    ex.target.len(),
                    registry.count()
                ),
            ));
        }
    }
    if let Some(s) = stats {
        if s.channels() != dim {
            return Err(Error::config(
                "normalizer",
                "channel count differs from features",
            ));
        }
    }

    let mut params = match initial {
        Some(p) if p.feature_dim() != dim => {
            return Err(Error::config(
                "initial",
                format!(
                    "head expects {} channels, features have {dim}",
                    p.feature_dim()
                ),
            ));
        }
        Some(p) => p,
        None => {
            let mut p = HeadParams::init(registry.clone(), dim, config.seed)?;
            // the head applies its own normalization to raw features
            p.normalization = stats.cloned();
            p
        }
    };
    let mut adam = AdamState::new(params.len());
    let adam_cfg = config.adam();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);

    let mut ws = Workspace::default();
    let mut grad = vec![0.0; params.len()];
    let mut scratch = FeatureMap::zeros(0, 0, dim);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut history = TrainHistory::default();

    for epoch in 1..=config.epochs {
        let started = clock::start();
        let lr = config.lr_at(epoch);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for &i in &order {
            let ex = dataset[i];
            let flip = config.augment_hflip && rng.random_bool(0.5);
            let features = if flip {
                ex.features.mirror_into(&mut scratch);
                &scratch
            } else {
                ex.features
            };
            let (loss, _) = backward_with(features, &params, ex.target, &mut ws, &mut grad)?;
            // optimize the MAE of fractions: gradient of the percent loss / 100
            grad.iter_mut().for_each(|g| *g *= 0.01);
            adam_step(params.flat_mut(), &grad, &mut adam, lr, &adam_cfg);
            loss_sum += loss;
        }
        params.check_finite()?;
        history.epochs.push(EpochRecord {
            epoch,
            loss: loss_sum / dataset.len() as f64,
            lr,
            kappa: params.kappa(),
            seconds: clock::seconds_since(started),
        });
    }
    Ok((params, history))
}
