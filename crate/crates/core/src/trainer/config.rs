use serde::{Deserialize, Serialize};

use super::adam::AdamConfig;
use crate::error::{Error, Result};
use crate::kv::{parse_kv, parse_list, parse_value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: u32,
    pub lr0: f64,
    /// Multiplier applied at each decay epoch.
    pub decay_factor: f64,
    /// Epochs (1-based) from which the next decay applies.
    pub decay_epochs: Vec<u32>,
    /// Only per-sample updates are supported.
    pub batch_size: usize,
    pub augment_hflip: bool,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            lr0: 1e-3,
            decay_factor: 0.1,
            decay_epochs: vec![20, 30],
            batch_size: 1,
            augment_hflip: true,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Sets the epoch count and drops decay epochs that would never be reached.
    pub fn with_epochs(mut self, epochs: u32) -> Self {
        self.epochs = epochs;
        self.decay_epochs.retain(|&e| e <= epochs);
        self
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }

    /// Learning rate used throughout `epoch` (1-based).
    pub fn lr_at(&self, epoch: u32) -> f64 {
        let decays = self.decay_epochs.iter().filter(|&&e| e <= epoch).count();
        self.lr0 * self.decay_factor.powi(decays as i32)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs", "must be at least 1"));
        }
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return Err(Error::config("lr0", "must be positive"));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return Err(Error::config("decay_factor", "must lie in (0, 1]"));
        }
        if self.decay_epochs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("decay_epochs", "must be strictly increasing"));
        }
        if let Some(&e) = self
            .decay_epochs
            .iter()
            .find(|&&e| e < 1 || e > self.epochs)
        {
            return Err(Error::config(
                "decay_epochs",
                format!("epoch {e} outside 1..={}", self.epochs),
            ));
        }
        if self.batch_size != 1 {
            return Err(Error::config("batch_size", "only 1 is supported"));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::config(name, "must lie in [0, 1)"));
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::config("eps", "must be positive"));
        }
        Ok(())
    }

    /// Overrides fields from `key = value` text, then validates. Setting
    /// `epochs` alone behaves like [`with_epochs`](Self::with_epochs); decay
    /// epochs given explicitly are checked as written.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        let mut explicit_decay = false;
        for (k, v) in parse_kv(text)? {
            match k.as_str() {
                "epochs" => self.epochs = parse_value(&k, &v)?,
                "lr0" => self.lr0 = parse_value(&k, &v)?,
                "decay_factor" => self.decay_factor = parse_value(&k, &v)?,
                "decay_epochs" => {
                    explicit_decay = true;
                    self.decay_epochs = if v.is_empty() || v == "none" {
                        Vec::new()
                    } else {
                        parse_list(&k, &v)?
                    }
                }
                "batch_size" => self.batch_size = parse_value(&k, &v)?,
                "augment_hflip" => self.augment_hflip = parse_value(&k, &v)?,
                "beta1" => self.beta1 = parse_value(&k, &v)?,
                "beta2" => self.beta2 = parse_value(&k, &v)?,
                "eps" => self.eps = parse_value(&k, &v)?,
                "seed" => self.seed = parse_value(&k, &v)?,
                _ => return Err(Error::config(&k, "unknown training key")),
            }
        }
        if !explicit_decay {
            let epochs = self.epochs;
            self.decay_epochs.retain(|&e| e <= epochs);
        }
        self.validate()
    }
}
