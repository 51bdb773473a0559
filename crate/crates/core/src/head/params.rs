use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::NormStats;
use crate::registry::SpeciesRegistry;

pub const PARAMS_FORMAT_VERSION: u32 = 1;

/// `softplus^-1(1)`: the raw value giving an initial threshold of exactly 1.
pub const KAPPA_RAW_INIT: f64 = 0.541_324_854_612_918_1;

#[inline]
pub fn softplus(x: f64) -> f64 {
    let y = if x > 30.0 { x } else { x.exp().ln_1p() };
    y.max(f64::MIN_POSITIVE)
}

#[inline]
pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Linear per-pixel classifier plus the learnable plant threshold.
///
/// Rows `0..S` score the species, row `S` scores background and row `S + 1`
/// scores irrelevant content. All parameters live in one flat vector laid
/// out as `[W (row-major, (S+2) x D) | b (S+2) | kappa_raw]`, which is also
/// the layout gradients and optimizer state use.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    registry: SpeciesRegistry,
    feature_dim: usize,
    theta: Vec<f64>,
    /// Feature statistics the head was trained against, if any.
    pub normalization: Option<NormStats>,
}

impl HeadParams {
    /// Uniform(-1/sqrt(D), 1/sqrt(D)) weights, zero bias, threshold 1.
    pub fn init(registry: SpeciesRegistry, feature_dim: usize, seed: u64) -> Result<Self> {
        if feature_dim == 0 {
            return Err(Error::Dimension(
                "feature dimension must be positive".into(),
            ));
        }
        let rows = registry.count() + 2;
        let scale = 1.0 / (feature_dim as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut theta: Vec<f64> = (0..rows * feature_dim)
            .map(|_| rng.random_range(-scale..scale))
            .collect();
        theta.extend(std::iter::repeat_n(0.0, rows));
        theta.push(KAPPA_RAW_INIT);
        Ok(Self {
            registry,
            feature_dim,
            theta,
            normalization: None,
        })
    }

    pub fn from_parts(
        registry: SpeciesRegistry,
        feature_dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        kappa_raw: f64,
    ) -> Result<Self> {
        let rows = registry.count() + 2;
        if weights.len() != rows * feature_dim || bias.len() != rows || feature_dim == 0 {
            return Err(Error::Dimension(format!(
                "expected {rows}x{feature_dim} weights and {rows} biases, got {} and {}",
                weights.len(),
                bias.len()
            )));
        }
        let mut theta = weights;
        theta.extend(bias);
        theta.push(kappa_raw);
        let p = Self {
            registry,
            feature_dim,
            theta,
            normalization: None,
        };
        p.check_finite()?;
        Ok(p)
    }

    pub fn registry(&self) -> &SpeciesRegistry {
        &self.registry
    }

    pub fn species(&self) -> usize {
        self.registry.count()
    }

    /// Score rows: species, then background, then irrelevant.
    pub fn rows(&self) -> usize {
        self.registry.count() + 2
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.theta[..self.rows() * self.feature_dim]
    }

    pub fn weight(&self, row: usize, d: usize) -> f64 {
        self.theta[row * self.feature_dim + d]
    }

    pub fn bias(&self) -> &[f64] {
        let start = self.rows() * self.feature_dim;
        &self.theta[start..start + self.rows()]
    }

    pub fn kappa_raw(&self) -> f64 {
        *self.theta.last().unwrap()
    }

    pub fn kappa(&self) -> f64 {
        softplus(self.kappa_raw())
    }

    pub fn flat(&self) -> &[f64] {
        &self.theta
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub(crate) fn bias_offset(&self) -> usize {
        self.rows() * self.feature_dim
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.theta.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("head parameters"))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let rows = self.rows();
        let wire = ParamsFile {
            format_version: PARAMS_FORMAT_VERSION,
            registry: self.registry.clone(),
            species: self.species(),
            feature_dim: self.feature_dim,
            weights: self.weights().to_vec(),
            bias: self.bias().to_vec(),
            kappa_raw: self.kappa_raw(),
            kappa: self.kappa(),
            normalization: self.normalization.clone(),
        };
        debug_assert_eq!(wire.bias.len(), rows);
        Ok(serde_json::to_string_pretty(&wire)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: ParamsFile = serde_json::from_str(text)?;
        if wire.format_version != PARAMS_FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "unsupported params format version {}",
                wire.format_version
            )));
        }
        if wire.species != wire.registry.count() {
            return Err(Error::Dimension(format!(
                "params declare {} species but list {}",
                wire.species,
                wire.registry.count()
            )));
        }
        let mut p = Self::from_parts(
            wire.registry,
            wire.feature_dim,
            wire.weights,
            wire.bias,
            wire.kappa_raw,
        )?;
        if let Some(n) = &wire.normalization {
            if n.channels() != p.feature_dim {
                return Err(Error::Dimension(
                    "normalization width differs from D".into(),
                ));
            }
        }
        p.normalization = wire.normalization;
        Ok(p)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk JSON layout of [`HeadParams`]. `kappa` is informational.
#[derive(Serialize, Deserialize)]
struct ParamsFile {
    format_version: u32,
    registry: SpeciesRegistry,
    species: usize,
    feature_dim: usize,
    /// Row-major, `(species + 2) x feature_dim`.
    weights: Vec<f64>,
    bias: Vec<f64>,
    kappa_raw: f64,
    kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    normalization: Option<NormStats>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_shape_and_kappa() {
        let p = HeadParams::init(SpeciesRegistry::default(), 14, 1).unwrap();
        assert_eq!(p.rows(), 11);
        assert_eq!(p.len(), 11 * 14 + 11 + 1);
        assert!((p.kappa() - 1.0).abs() < 1e-15);
        assert!(p.bias().iter().all(|&b| b == 0.0));
        let bound = 1.0 / 14f64.sqrt();
        assert!(p.weights().iter().all(|w| w.abs() < bound));
    }

    #[test]
    fn softplus_positive_everywhere() {
        for x in [-1e6, -800.0, -30.0, 0.0, 30.0, 1e6] {
            assert!(softplus(x) > 0.0, "{x}");
        }
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut p = HeadParams::init(SpeciesRegistry::default(), 5, 9).unwrap();
        p.flat_mut()[3] = 0.1 + 0.2;
        p.normalization = Some(NormStats {
            mean: vec![0.5; 5],
            sd: vec![2.0; 5],
        });
        let back = HeadParams::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn json_rejects_bad_shapes() {
        let p = HeadParams::init(SpeciesRegistry::new(["a", "b"]).unwrap(), 2, 0).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&p.to_json().unwrap()).unwrap();
        v["bias"] = serde_json::json!([0.0]);
        assert!(HeadParams::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(&p.to_json().unwrap()).unwrap();
        v["format_version"] = serde_json::json!(7);
        assert!(HeadParams::from_json(&v.to_string()).is_err());
    }
}
