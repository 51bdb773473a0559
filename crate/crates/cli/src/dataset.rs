//! On-disk dataset layout and the feature-map cache.
//!
//! ```text
//! DIR/images/u000_c0_w01.ppm   one image per (unit, camera, week)
//! DIR/annotations.csv          noisy Schmidt-scale annotations
//! DIR/truth.csv                exact occlusion-ignored cover
//! DIR/dataset.json             simulator settings and per-image occlusion
//! DIR/series.json              every generated scene
//! DIR/fmap_cache/<sha256>.fmap extracted features, created on demand
//! ```

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use coverhead::cover::read_annotations_csv;
use coverhead::features::{extract, read_fmap, write_fmap, ExtractorConfig, FeatureMap};
use coverhead::{CoverVector, RgbImage, SpeciesRegistry};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const IMAGES_DIR: &str = "images";
pub const ANNOTATIONS_FILE: &str = "annotations.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const DATASET_FILE: &str = "dataset.json";
pub const SERIES_FILE: &str = "series.json";
pub const CACHE_DIR: &str = "fmap_cache";

pub type Key = (u32, u32, u32);

pub fn image_name((unit, camera, week): Key) -> String {
    format!("u{unit:03}_c{camera}_w{week:02}.ppm")
}

pub fn parse_image_name(name: &str) -> Option<Key> {
    let stem = name.strip_suffix(".ppm")?;
    let mut parts = stem.split('_');
    let unit = parts.next()?.strip_prefix('u')?.parse().ok()?;
    let camera = parts.next()?.strip_prefix('c')?.parse().ok()?;
    let week = parts.next()?.strip_prefix('w')?.parse().ok()?;
    parts.next().is_none().then_some((unit, camera, week))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageEntry {
    pub unit: u32,
    pub camera: u32,
    pub week: u32,
    pub file: String,
    pub occluded_fraction: f64,
}

pub fn read_image(path: &Path) -> Result<RgbImage> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    RgbImage::read_ppm(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

pub fn write_image(path: &Path, image: &RgbImage) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    image
        .write_ppm(BufWriter::new(file))
        .with_context(|| format!("writing {}", path.display()))
}

/// Image files under `DIR/images`, ordered by key.
pub fn list_images(dir: &Path) -> Result<BTreeMap<Key, PathBuf>> {
    let images = dir.join(IMAGES_DIR);
    let mut out = BTreeMap::new();
    let entries = fs::read_dir(&images).with_context(|| format!("listing {}", images.display()))?;
    for entry in entries {
        let entry = entry.with_context(|| format!("listing {}", images.display()))?;
        let name = entry.file_name();
        if let Some(key) = name.to_str().and_then(parse_image_name) {
            out.insert(key, entry.path());
        }
    }
    if out.is_empty() {
        bail!("no images named uUUU_cC_wWW.ppm in {}", images.display());
    }
    Ok(out)
}

pub fn read_cover_csv(path: &Path) -> Result<(SpeciesRegistry, BTreeMap<Key, CoverVector>)> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let (registry, rows) = read_annotations_csv(BufReader::new(file))
        .with_context(|| format!("reading {}", path.display()))?;
    let mut map = BTreeMap::new();
    for row in rows {
        let key = row.key();
        if map.insert(key, row.cover).is_some() {
            bail!(
                "{}: duplicate row for unit {} camera {} week {}",
                path.display(),
                key.0,
                key.1,
                key.2
            );
        }
    }
    Ok((registry, map))
}

/// Fails with the list of images that have no row in `covers`.
pub fn require_rows(
    images: &BTreeMap<Key, PathBuf>,
    covers: &BTreeMap<Key, CoverVector>,
    source: &Path,
) -> Result<()> {
    let missing: Vec<String> = images
        .keys()
        .filter(|k| !covers.contains_key(k))
        .map(|(u, c, w)| format!("(unit {u}, camera {c}, week {w})"))
        .collect();
    if !missing.is_empty() {
        bail!(
            "{} lacks rows for {} image(s): {}",
            source.display(),
            missing.len(),
            missing.join(", ")
        );
    }
    Ok(())
}

pub struct Sample {
    pub key: Key,
    pub path: PathBuf,
    pub features: FeatureMap,
    pub target: CoverVector,
}

pub struct Loaded {
    pub registry: SpeciesRegistry,
    pub samples: Vec<Sample>,
    pub cache_hits: usize,
}

fn cache_key(image: &RgbImage, config: ExtractorConfig) -> String {
    let mut h = Sha256::new();
    h.update(b"coverhead-features-1");
    h.update((config.radius as u64).to_le_bytes());
    h.update(image.to_ppm_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Extracts features, reusing `cache` entries keyed by image content and
/// extractor settings. Returns the map and whether it came from the cache.
pub fn features_for(
    image: &RgbImage,
    config: ExtractorConfig,
    cache: Option<&Path>,
) -> Result<(FeatureMap, bool)> {
    let Some(dir) = cache else {
        return Ok((extract(image, config), false));
    };
    let path = dir.join(format!("{}.fmap", cache_key(image, config)));
    if let Ok(map) = read_fmap(&path) {
        if (map.width(), map.height()) == (image.width(), image.height()) {
            return Ok((map, true));
        }
    }
    let map = extract(image, config);
    // write then rename so a crash never leaves a truncated entry behind
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    write_fmap(&map, &tmp).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, &path).with_context(|| format!("writing {}", path.display()))?;
    Ok((map, false))
}

/// Images with features and annotation targets.
pub fn load(dir: &Path, use_cache: bool) -> Result<Loaded> {
    let images = list_images(dir)?;
    let ann_path = dir.join(ANNOTATIONS_FILE);
    let (registry, covers) = read_cover_csv(&ann_path)?;
    require_rows(&images, &covers, &ann_path)?;
    let cache = use_cache.then(|| dir.join(CACHE_DIR));
    if let Some(c) = &cache {
        fs::create_dir_all(c).with_context(|| format!("creating {}", c.display()))?;
    }
    let config = ExtractorConfig::default();
    let items: Vec<(&Key, &PathBuf)> = images.iter().collect();
    let extracted: Vec<Result<(FeatureMap, bool)>> = items
        .par_iter()
        .map(|(_, path)| features_for(&read_image(path)?, config, cache.as_deref()))
        .collect();
    let mut samples = Vec::with_capacity(items.len());
    let mut cache_hits = 0;
    for ((key, path), result) in items.into_iter().zip(extracted) {
        let (features, hit) = result?;
        cache_hits += usize::from(hit);
        samples.push(Sample {
            key: *key,
            path: path.clone(),
            features,
            target: covers[key].clone(),
        });
    }
    Ok(Loaded {
        registry,
        samples,
        cache_hits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for key in [(0, 0, 1), (23, 1, 18), (456, 3, 9)] {
            assert_eq!(parse_image_name(&image_name(key)), Some(key));
        }
        for bad in [
            "u1_c0_w1.png",
            "x1_c0_w1.ppm",
            "u1_c0.ppm",
            "u1_c0_w1_x.ppm",
        ] {
            assert_eq!(parse_image_name(bad), None);
        }
    }

    #[test]
    fn cache_hit_returns_identical_features() {
        let dir = tempfile::tempdir().unwrap();
        let mut img = RgbImage::filled(70, 40, [10, 120, 30]);
        img.put(5, 5, [250, 0, 0]);
        let config = ExtractorConfig::default();
        let (a, hit_a) = features_for(&img, config, Some(dir.path())).unwrap();
        let (b, hit_b) = features_for(&img, config, Some(dir.path())).unwrap();
        assert!(!hit_a && hit_b);
        assert_eq!(a, b);
        img.put(6, 6, [0, 0, 250]);
        let (_, hit_c) = features_for(&img, config, Some(dir.path())).unwrap();
        assert!(!hit_c);
    }
}
