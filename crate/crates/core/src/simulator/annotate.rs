use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{true_cover, EcoUnitSeries};
use crate::cover::{Annotation, CoverVector};
use crate::error::{Error, Result};
use crate::schmidt::schmidt_quantize;

/// Noisy, Schmidt-quantized annotations: one per camera per week.
///
/// Each species' exact cover is scaled by `1 + N(0, noise_sd)`, clamped to
/// [0, 100] and snapped to the scale. Zero cover stays zero.
pub fn annotate_series(
    series: &EcoUnitSeries,
    noise_sd: f64,
    seed: u64,
) -> Result<Vec<Annotation>> {
    Ok(annotate_series_with_truth(series, noise_sd, seed)?
        .into_iter()
        .map(|(a, _)| a)
        .collect())
}

/// As [`annotate_series`], also returning the exact cover each annotation
/// was derived from.
pub fn annotate_series_with_truth(
    series: &EcoUnitSeries,
    noise_sd: f64,
    seed: u64,
) -> Result<Vec<(Annotation, CoverVector)>> {
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::config("noise_sd", "must be finite and non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // streams above 2^32 keep the noise independent of scene generation
    rng.set_stream((1 << 32) + series.unit_id as u64);
    let noise = Normal::new(0.0, noise_sd).expect("checked sd");

    let mut out = Vec::new();
    for (camera, scene) in series.scenes() {
        let (truth, _) = true_cover(scene)?;
        let mut cover = Vec::with_capacity(truth.len());
        for &v in truth.values() {
            // always draw so the stream does not depend on which covers are zero
            let e = noise.sample(&mut rng);
            let noisy = (v * (1.0 + e)).clamp(0.0, 100.0);
            cover.push(schmidt_quantize(noisy)?);
        }
        out.push((
            Annotation {
                unit: series.unit_id,
                camera,
                week: scene.week,
                cover: CoverVector(cover),
            },
            truth,
        ));
    }
    Ok(out)
}
