#![allow(dead_code)]

use coverhead::features::{FeatureMap, NormStats};
use coverhead::head::HeadParams;
use coverhead::simulator::{LeafInstance, Scene, WallFrame};
use coverhead::{CoverVector, SpeciesRegistry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn registry(species: usize) -> SpeciesRegistry {
    if species == 9 {
        SpeciesRegistry::default()
    } else {
        SpeciesRegistry::new((0..species).map(|i| format!("sp{i}"))).unwrap()
    }
}

/// Per-pixel outputs of the literal model.
pub struct Oracle {
    pub kappa: f64,
    pub species: Vec<Vec<f64>>,
    pub bio: Vec<f64>,
    pub bg: Vec<f64>,
    pub irr: Vec<f64>,
    pub cover: Vec<f64>,
}

/// The calculation model evaluated pixel by pixel with plain loops and the
/// standard library's `exp`.
pub fn oracle(features: &FeatureMap, params: &HeadParams) -> Oracle {
    let (w, h, d) = (features.width(), features.height(), features.channels());
    let s = params.species();
    let kappa = (1.0 + params.kappa_raw().exp()).ln();
    let mut out = Oracle {
        kappa,
        species: vec![Vec::new(); s],
        bio: Vec::new(),
        bg: Vec::new(),
        irr: Vec::new(),
        cover: vec![0.0; s],
    };
    let mut mass = vec![0.0; s];
    let (mut a_bio, mut a_bg) = (0.0, 0.0);
    for y in 0..h {
        for x in 0..w {
            let feature = |c: usize| {
                let v = features.get(c, x, y) as f64;
                match &params.normalization {
                    Some(n) => (v - n.mean[c]) / n.sd[c],
                    None => v,
                }
            };
            let score = |k: usize| {
                let mut acc = params.bias()[k];
                for c in 0..d {
                    acc += params.weight(k, c) * feature(c);
                }
                acc
            };
            let mut total = 0.0;
            for p in 0..s {
                let prob = 1.0 / (1.0 + (-score(p)).exp());
                out.species[p].push(prob);
                mass[p] += prob;
                total += prob;
            }
            let (e_bg, e_irr) = (score(s).exp(), score(s + 1).exp());
            let bio = total / (kappa + total);
            let rest = kappa / (kappa + total);
            let bg = rest * e_bg / (e_bg + e_irr);
            let irr = rest * e_irr / (e_bg + e_irr);
            out.bio.push(bio);
            out.bg.push(bg);
            out.irr.push(irr);
            a_bio += bio;
            a_bg += bg;
        }
    }
    out.cover = mass.iter().map(|m| 100.0 * m / (a_bio + a_bg)).collect();
    out
}

pub fn random_map(rng: &mut ChaCha8Rng, w: usize, h: usize, d: usize, scale: f32) -> FeatureMap {
    let data = (0..w * h * d)
        .map(|_| rng.random_range(-scale..scale))
        .collect();
    FeatureMap::from_planar(w, h, d, data).unwrap()
}

pub fn random_params(rng: &mut ChaCha8Rng, s: usize, d: usize, scale: f64) -> HeadParams {
    let rows = s + 2;
    let w = (0..rows * d)
        .map(|_| rng.random_range(-scale..scale))
        .collect();
    let b = (0..rows).map(|_| rng.random_range(-2.0..2.0)).collect();
    HeadParams::from_parts(registry(s), d, w, b, rng.random_range(-1.5..1.5)).unwrap()
}

pub fn random_norm(rng: &mut ChaCha8Rng, d: usize) -> NormStats {
    NormStats {
        mean: (0..d).map(|_| rng.random_range(-0.5..0.5)).collect(),
        sd: (0..d).map(|_| rng.random_range(0.3..3.0)).collect(),
    }
}

/// A random oracle instance: maps up to 16x8, S in {1, 3, 9}, D in {2, 14}.
/// Every third instance carries normalization statistics.
pub fn random_instance(rng: &mut ChaCha8Rng, i: usize) -> (FeatureMap, HeadParams) {
    let s = [1, 3, 9][i % 3];
    let d = [2, 14][(i / 3) % 2];
    let w = rng.random_range(1..=16);
    let h = rng.random_range(1..=8);
    let f = random_map(rng, w, h, d, 2.0);
    let mut p = random_params(rng, s, d, 1.5 / (d as f64).sqrt());
    if i % 3 == 2 {
        p.normalization = Some(random_norm(rng, d));
    }
    (f, p)
}

pub fn loss(cover: &CoverVector, target: &CoverVector) -> f64 {
    coverhead::head::loss_mae(cover, target)
}

pub fn disk(species: usize, center: [f64; 2], radii: [f64; 2]) -> LeafInstance {
    LeafInstance {
        species,
        center,
        radii,
        angle: 0.0,
        color_seed: 7,
        origin_species: species,
    }
}

/// Two species, each one disk covering exactly 40% of the relevant area,
/// the second stacked exactly on the first.
pub fn fully_overlapping_scene() -> Scene {
    // 50x50 interior inside a 4 pixel wall: 2500 relevant pixels
    let wall = WallFrame::uniform(4);
    let (w, h) = (58, 58);
    let center = [29.0, 29.0];
    for step in 0..4000 {
        let r = 17.0 + step as f64 * 0.0005;
        let leaf = disk(0, center, [r, r * 1.01]);
        let mut n = 0;
        leaf.for_each_pixel(w, h, |x, y| n += usize::from(!wall.is_wall(w, h, x, y)));
        if n == 1000 {
            let mut scene = Scene::empty(w, h, wall, 2);
            scene.leaves.push(leaf.clone());
            scene.leaves.push(LeafInstance {
                species: 1,
                origin_species: 1,
                ..leaf
            });
            return scene;
        }
    }
    panic!("no radius rasterizes to 1000 pixels");
}

pub fn random_scene(rng: &mut ChaCha8Rng, species: usize) -> Scene {
    let w = rng.random_range(20..80);
    let h = rng.random_range(20..60);
    let t = rng.random_range(0..5);
    let mut scene = Scene::empty(w, h, WallFrame::uniform(t), species);
    let n = rng.random_range(0..25);
    for _ in 0..n {
        let sp = rng.random_range(0..species);
        scene.leaves.push(LeafInstance {
            species: sp,
            center: [
                rng.random_range(t as f64..(w as f64 - t as f64)),
                rng.random_range(t as f64..(h as f64 - t as f64)),
            ],
            radii: [rng.random_range(1.0..15.0), rng.random_range(1.0..15.0)],
            angle: rng.random_range(0.0..std::f64::consts::PI),
            color_seed: rng.random(),
            origin_species: sp,
        });
    }
    scene
}

/// Per species: (pixels inside any of its leaves, relevant pixels outside
/// all of them, relevant pixels), counted by testing every pixel center
/// against every leaf.
pub fn brute_force_areas(scene: &Scene) -> Vec<(u64, u64, u64)> {
    (0..scene.species_count)
        .map(|p| {
            let (mut plant, mut uncovered, mut relevant) = (0, 0, 0);
            for y in 0..scene.height {
                for x in 0..scene.width {
                    if scene.is_wall(x, y) {
                        continue;
                    }
                    relevant += 1;
                    let inside = scene
                        .leaves
                        .iter()
                        .any(|l| l.species == p && l.contains(x as f64 + 0.5, y as f64 + 0.5));
                    if inside {
                        plant += 1;
                    } else {
                        uncovered += 1;
                    }
                }
            }
            (plant, uncovered, relevant)
        })
        .collect()
}
