pub(crate) use super::kernel::TILE;
use super::kernel::{logistic_row, scores, sum, Linear};
use super::params::HeadParams;
use crate::cover::CoverVector;
use crate::error::{Error, Result};
use crate::features::FeatureMap;

/// Smallest admissible `A_bio + A_bg`.
pub const MIN_DENOMINATOR: f64 = 1e-12;

/// Per-pixel class probabilities, row-major `width * height` planes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMaps {
    pub width: usize,
    pub height: usize,
    /// One plane per species. Species are not mutually exclusive, so these
    /// need not sum to one at a pixel.
    pub species: Vec<Vec<f64>>,
    pub bio: Vec<f64>,
    pub bg: Vec<f64>,
    pub irr: Vec<f64>,
}

/// Probability mass per pixel class, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateAreas {
    pub bio: f64,
    pub bg: f64,
    pub irr: f64,
    pub total: f64,
}

/// Summed per-pixel quantities from one pass over a feature map.
#[derive(Debug, Clone)]
pub(crate) struct Sums {
    pub species: Vec<f64>,
    pub bio: f64,
    pub bg: f64,
    pub irr: f64,
}

impl Sums {
    pub fn denominator(&self) -> f64 {
        self.bio + self.bg
    }

    pub fn cover(&self) -> Result<CoverVector> {
        let den = self.denominator();
        if !den.is_finite() || self.species.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("aggregated areas"));
        }
        if den < MIN_DENOMINATOR {
            return Err(Error::DegenerateDenominator(den));
        }
        Ok(CoverVector(
            self.species.iter().map(|n| 100.0 * n / den).collect(),
        ))
    }
}

/// Scratch buffers for a pass over one image, reusable across images.
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    /// species probabilities, species-major: `probs[p * n + i]`
    pub(crate) probs: Vec<f64>,
    /// summed species probability per pixel
    pub(crate) total: Vec<f64>,
    /// background share of the non-plant residual per pixel
    pub(crate) bg_share: Vec<f64>,
    /// one row of `TILE` values per score row
    pub(crate) tile: Vec<f64>,
    /// features of the current tile, one row per channel
    pub(crate) ftile: Vec<f64>,
    pub(crate) pixels: usize,
}

pub(crate) fn check_inputs(features: &FeatureMap, params: &HeadParams) -> Result<()> {
    if features.channels() != params.feature_dim() {
        return Err(Error::Dimension(format!(
            "feature map has {} channels, head expects {}",
            features.channels(),
            params.feature_dim()
        )));
    }
    if let Some(norm) = &params.normalization {
        if norm.mean.len() != params.feature_dim() || norm.sd.len() != params.feature_dim() {
            return Err(Error::Dimension(
                "normalization width differs from D".into(),
            ));
        }
        if norm.mean.iter().chain(&norm.sd).any(|v| !v.is_finite())
            || norm.sd.iter().any(|&v| v <= 0.0)
        {
            return Err(Error::NonFinite("normalization statistics"));
        }
    }
    params.check_finite()
}

/// Copies pixels `start..start + len` of every channel into `ftile`,
/// zero-filling the rest of each tile row.
pub(crate) fn load_tile(features: &FeatureMap, start: usize, len: usize, ftile: &mut [f64]) {
    for d in 0..features.channels() {
        let src = &features.plane(d)[start..start + len];
        let row = &mut ftile[d * TILE..(d + 1) * TILE];
        for (o, &x) in row.iter_mut().zip(src) {
            *o = x as f64;
        }
        row[len..].fill(0.0);
    }
}

fn pass_tiles(
    features: &FeatureMap,
    lin: &Linear,
    kappa: f64,
    ws: &mut Workspace,
    sums: &mut Sums,
) {
    let s = sums.species.len();
    let n = features.pixels();
    let mut start = 0;
    while start < n {
        let len = TILE.min(n - start);
        load_tile(features, start, len, &mut ws.ftile);
        scores(lin, &ws.ftile, &mut ws.tile);
        // row s becomes the background-vs-irrelevant score difference
        let (head, tail) = ws.tile.split_at_mut((s + 1) * TILE);
        for (a, &b) in head[s * TILE..].iter_mut().zip(&tail[..TILE]) {
            *a -= b;
        }
        let total = &mut ws.total[start..start + len];
        total.fill(0.0);
        for p in 0..=s {
            let row = &mut ws.tile[p * TILE..(p + 1) * TILE];
            logistic_row(row);
            if p < s {
                let row = &row[..len];
                sums.species[p] += sum(row);
                for (t, &v) in total.iter_mut().zip(row) {
                    *t += v;
                }
                ws.probs[p * n + start..p * n + start + len].copy_from_slice(row);
            }
        }
        let q = &ws.tile[s * TILE..s * TILE + len];
        ws.bg_share[start..start + len].copy_from_slice(q);
        let (mut bio, mut bg, mut irr) = (0.0, 0.0, 0.0);
        for (&t, &q) in total.iter().zip(q) {
            let inv = 1.0 / (kappa + t);
            let residual = kappa * inv;
            bio += t * inv;
            bg += residual * q;
            irr += residual * (1.0 - q);
        }
        sums.bio += bio;
        sums.bg += bg;
        sums.irr += irr;
        start += len;
    }
}

/// Computes per-pixel probabilities into `ws` and returns their sums.
pub(crate) fn pass(features: &FeatureMap, params: &HeadParams, ws: &mut Workspace) -> Result<Sums> {
    check_inputs(features, params)?;
    let s = params.species();
    let n = features.pixels();
    ws.pixels = n;
    ws.probs.resize(s * n, 0.0);
    ws.total.resize(n, 0.0);
    ws.bg_share.resize(n, 0.0);
    ws.tile.resize(params.rows() * TILE, 0.0);
    ws.ftile.resize(params.feature_dim() * TILE, 0.0);
    let mut sums = Sums {
        species: vec![0.0; s],
        bio: 0.0,
        bg: 0.0,
        irr: 0.0,
    };
    pass_tiles(features, &Linear::of(params), params.kappa(), ws, &mut sums);
    Ok(sums)
}

/// Cover prediction only, reusing `ws`.
pub fn predict_with(
    features: &FeatureMap,
    params: &HeadParams,
    ws: &mut Workspace,
) -> Result<CoverVector> {
    pass(features, params, ws)?.cover()
}

pub fn predict(features: &FeatureMap, params: &HeadParams) -> Result<CoverVector> {
    predict_with(features, params, &mut Workspace::default())
}

/// Full calculation model: per-pixel probabilities, aggregated areas and the
/// species cover percentages.
///
/// Per pixel, species probabilities are independent logistics of their
/// scores; the plant probability is `sum / (kappa + sum)` and the residual
/// `kappa / (kappa + sum)` is split between background and irrelevant by a
/// two-way softmax. Cover is species mass over `A_bio + A_bg`.
pub fn forward(
    features: &FeatureMap,
    params: &HeadParams,
) -> Result<(ProbabilityMaps, AggregateAreas, CoverVector)> {
    let mut ws = Workspace::default();
    let sums = pass(features, params, &mut ws)?;
    let cover = sums.cover()?;
    let n = features.pixels();
    let kappa = params.kappa();

    let species = (0..params.species())
        .map(|p| ws.probs[p * n..(p + 1) * n].to_vec())
        .collect();
    let mut bio = Vec::with_capacity(n);
    let mut bg = Vec::with_capacity(n);
    let mut irr = Vec::with_capacity(n);
    for i in 0..n {
        let total = ws.total[i];
        let den = kappa + total;
        let residual = kappa / den;
        bio.push(total / den);
        bg.push(residual * ws.bg_share[i]);
        irr.push(residual * (1.0 - ws.bg_share[i]));
    }
    let areas = AggregateAreas {
        bio: sums.bio,
        bg: sums.bg,
        irr: sums.irr,
        total: sums.bio + sums.bg + sums.irr,
    };
    let maps = ProbabilityMaps {
        width: features.width(),
        height: features.height(),
        species,
        bio,
        bg,
        irr,
    };
    Ok((maps, areas, cover))
}

/// Mean absolute error over species, in percentage points.
pub fn loss_mae(predicted: &CoverVector, target: &CoverVector) -> f64 {
    debug_assert_eq!(predicted.len(), target.len());
    let s = predicted.len().max(1) as f64;
    predicted
        .values()
        .iter()
        .zip(target.values())
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / s
}
