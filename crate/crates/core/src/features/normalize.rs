use serde::{Deserialize, Serialize};

use super::FeatureMap;
use crate::error::{Error, Result};

pub const SD_FLOOR: f64 = 1e-8;

/// Per-channel z-score statistics fitted on a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl NormStats {
    pub fn channels(&self) -> usize {
        self.mean.len()
    }
}

/// Pooled per-channel mean and standard deviation over every pixel of
/// every map. Standard deviations are floored at [`SD_FLOOR`].
pub fn fit_normalizer<'a, I>(maps: I) -> Result<NormStats>
where
    I: IntoIterator<Item = &'a FeatureMap>,
    I::IntoIter: Clone,
{
    let maps = maps.into_iter();
    let Some(first) = maps.clone().next() else {
        return Err(Error::Empty("normalizer needs at least one feature map"));
    };
    let channels = first.channels();
    let mut count = 0usize;
    let mut sum = vec![0.0f64; channels];
    for m in maps.clone() {
        if m.channels() != channels {
            return Err(Error::Dimension(format!(
                "map has {} channels, expected {channels}",
                m.channels()
            )));
        }
        count += m.pixels();
        for (c, s) in sum.iter_mut().enumerate() {
            *s += m.plane(c).iter().map(|&v| v as f64).sum::<f64>();
        }
    }
    if count == 0 {
        return Err(Error::Empty("normalizer needs at least one pixel"));
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
    let mut sq = vec![0.0f64; channels];
    for m in maps {
        for (c, acc) in sq.iter_mut().enumerate() {
            let mu = mean[c];
            *acc += m
                .plane(c)
                .iter()
                .map(|&v| (v as f64 - mu).powi(2))
                .sum::<f64>();
        }
    }
    let sd = sq
        .iter()
        .map(|s| (s / count as f64).sqrt().max(SD_FLOOR))
        .collect();
    Ok(NormStats { mean, sd })
}

pub fn apply_normalizer(map: &FeatureMap, stats: &NormStats) -> Result<FeatureMap> {
    let mut out = map.clone();
    normalize_into(map, stats, false, &mut out)?;
    Ok(out)
}

/// Writes the normalized (and optionally mirrored) `src` into `dst`,
/// reusing its allocation.
fn normalize_into(
    src: &FeatureMap,
    stats: &NormStats,
    mirror: bool,
    dst: &mut FeatureMap,
) -> Result<()> {
    if stats.channels() != src.channels() || stats.sd.len() != src.channels() {
        return Err(Error::Dimension(format!(
            "normalizer has {} channels, map has {}",
            stats.channels(),
            src.channels()
        )));
    }
    if mirror {
        src.mirror_into(dst);
    } else {
        dst.reshape_like(src);
        dst.data_mut().copy_from_slice(src.data());
    }
    for c in 0..src.channels() {
        let (mu, sd) = (stats.mean[c], stats.sd[c]);
        for v in dst.plane_mut(c) {
            *v = ((*v as f64 - mu) / sd) as f32;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(values: &[f32], channels: usize) -> FeatureMap {
        let px = values.len() / channels;
        FeatureMap::from_planar(px, 1, channels, values.to_vec()).unwrap()
    }

    fn moments(p: &[f32]) -> (f64, f64) {
        let n = p.len() as f64;
        let m = p.iter().map(|&v| v as f64).sum::<f64>() / n;
        let v = p.iter().map(|&x| (x as f64 - m).powi(2)).sum::<f64>() / n;
        (m, v.sqrt())
    }

    #[test]
    fn fit_then_apply_standardizes() {
        let m = map(&[1.0, 2.0, 4.0, 9.0, -3.0, 0.5, 0.25, 7.0], 2);
        let stats = fit_normalizer([&m]).unwrap();
        let z = apply_normalizer(&m, &stats).unwrap();
        for c in 0..2 {
            let (mu, sd) = moments(z.plane(c));
            assert!(mu.abs() < 1e-6 && (sd - 1.0).abs() < 1e-6, "{mu} {sd}");
        }
    }

    #[test]
    fn constant_channel_floors_sd() {
        let m = map(&[3.3, 3.3, 3.3, 1.0, 2.0, 3.0], 2);
        let stats = fit_normalizer([&m]).unwrap();
        assert_eq!(stats.sd[0], SD_FLOOR);
        let z = apply_normalizer(&m, &stats).unwrap();
        assert!(z.plane(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn held_out_maps_do_not_touch_stats() {
        let train = map(&[1.0, 2.0, 3.0], 1);
        let test = map(&[100.0, 200.0, 300.0], 1);
        let stats = fit_normalizer([&train]).unwrap();
        let before = stats.clone();
        let z = apply_normalizer(&test, &stats).unwrap();
        assert_eq!(stats, before);
        assert!(z.plane(0)[0] > 10.0);
    }

    #[test]
    fn empty_and_mismatched() {
        assert!(matches!(
            fit_normalizer(std::iter::empty::<&FeatureMap>().collect::<Vec<_>>()),
            Err(Error::Empty(_))
        ));
        let a = map(&[1.0, 2.0], 1);
        let b = map(&[1.0, 2.0], 2);
        assert!(fit_normalizer([&a, &b]).is_err());
        let stats = fit_normalizer([&a]).unwrap();
        assert!(apply_normalizer(&b, &stats).is_err());
    }

    #[test]
    fn mirrored_normalization() {
        let m = FeatureMap::from_planar(3, 1, 1, vec![1.0, 2.0, 6.0]).unwrap();
        let stats = fit_normalizer([&m]).unwrap();
        let mut out = FeatureMap::zeros(1, 1, 1);
        normalize_into(&m, &stats, true, &mut out).unwrap();
        let plain = apply_normalizer(&m, &stats).unwrap();
        assert_eq!(out, plain.mirrored());
    }
}
