use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use super::config::{SimConfig, LIVING_SPECIES};
use super::render::species_style;
use super::{CameraSeries, EcoUnitSeries, LeafInstance, Scene, WallFrame};
use crate::error::Result;
use crate::registry::SpeciesRegistry;

/// Per-leaf lifecycle fixed for the whole series of one camera.
struct LeafPlan {
    species: usize,
    home: [f64; 2],
    radii: [f64; 2],
    angle: f64,
    color_seed: u64,
    emerge: u32,
    senesce: Option<u32>,
    anchor: Option<usize>,
}

pub(crate) fn unit_rng(seed: u64, unit: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(unit as u64 + 1);
    rng
}

/// Simulates one EcoUnit: every camera, every week. Deterministic in
/// `(config, unit_id, seed)`.
pub fn generate_series(config: &SimConfig, unit_id: u32, seed: u64) -> Result<EcoUnitSeries> {
    config.validate()?;
    let registry = SpeciesRegistry::default();
    let dead = registry
        .dead_litter()
        .expect("default registry has dead litter");
    let mut rng = unit_rng(seed, unit_id);

    let jitter = Normal::new(0.0, config.unit_jitter).expect("validated sd");
    let mut abundance: Vec<f64> = config
        .mixture
        .iter()
        .map(|w| w * jitter.sample(&mut rng).exp())
        .collect();
    let total: f64 = abundance.iter().sum();
    abundance.iter_mut().for_each(|w| *w /= total);

    let wall = WallFrame::uniform(config.wall_thickness);
    let cameras = (0..config.cameras)
        .map(|camera| {
            let plans = plan_leaves(config, &abundance, &mut rng);
            let scenes = (1..=config.weeks)
                .map(|week| scene_at(config, wall, &plans, week, dead, registry.count()))
                .collect();
            CameraSeries { camera, scenes }
        })
        .collect();

    Ok(EcoUnitSeries {
        unit_id,
        config: config.clone(),
        abundance,
        cameras,
    })
}

/// Generates units `0..config.units`.
pub fn generate_dataset(config: &SimConfig, seed: u64) -> Result<Vec<EcoUnitSeries>> {
    config.validate()?;
    let units: Vec<u32> = (0..config.units).collect();
    crate::par::map(&units, |&u| generate_series(config, u, seed))
        .into_iter()
        .collect()
}

fn plan_leaves(config: &SimConfig, abundance: &[f64], rng: &mut ChaCha8Rng) -> Vec<LeafPlan> {
    debug_assert_eq!(abundance.len(), LIVING_SPECIES);
    // abundance is a share of leaf area, so draw species inversely to their
    // mean leaf footprint
    let weights: Vec<f64> = abundance
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let st = species_style(i);
            a / (st.size * st.size * st.aspect)
        })
        .collect();
    let pick = WeightedIndex::new(&weights).expect("abundance weights are positive");
    let x0 = config.wall_thickness as f64;
    let x1 = (config.width - config.wall_thickness as usize) as f64;
    let y0 = config.wall_thickness as f64;
    let y1 = (config.height - config.wall_thickness as usize) as f64;

    let n = (config.leaves_per_scene as f64 * rng.random_range(0.75..1.25)).round() as usize;
    let n = n.max(1);
    let mut plans: Vec<LeafPlan> = Vec::with_capacity(n);
    for i in 0..n {
        let species = pick.sample(rng);
        let style = species_style(species);
        let major = rng.random_range(config.leaf_radius[0]..=config.leaf_radius[1]) * style.size;
        let minor = major * style.aspect * rng.random_range(0.85..1.15);
        let home = [rng.random_range(x0..x1), rng.random_range(y0..y1)];
        let angle = rng.random_range(0.0..std::f64::consts::PI);
        let color_seed = rng.random::<u64>();
        let emerge = rng.random_range(1..=config.emergence_max_week);
        let senesce = (rng.random::<f64>() < config.senescence_fraction
            && config.senescence_onset <= config.weeks)
            .then(|| rng.random_range(config.senescence_onset..=config.weeks));
        let candidates: Vec<usize> = (0..i).filter(|&j| plans[j].species != species).collect();
        let anchor =
            (!candidates.is_empty()).then(|| candidates[rng.random_range(0..candidates.len())]);
        plans.push(LeafPlan {
            species,
            home,
            radii: [major, minor],
            angle,
            color_seed,
            emerge,
            senesce,
            anchor,
        });
    }
    plans
}

/// Fraction of the final leaf area reached in `week`. Strictly positive and
/// non-decreasing in `week`.
fn growth(config: &SimConfig, emerge: u32, week: u32) -> f64 {
    let t = (week as f64 - emerge as f64 - config.growth_lag) / config.growth_scale;
    1.0 / (1.0 + (-t).exp())
}

fn ramp(config: &SimConfig, week: u32) -> f64 {
    match config.overlap_ramp {
        None => 0.0,
        Some([a, b]) if config.weeks > 1 => {
            a + (b - a) * (week - 1) as f64 / (config.weeks - 1) as f64
        }
        Some([a, _]) => a,
    }
}

fn scene_at(
    config: &SimConfig,
    wall: WallFrame,
    plans: &[LeafPlan],
    week: u32,
    dead: usize,
    species_count: usize,
) -> Scene {
    let pull = ramp(config, week);
    let leaves = plans
        .iter()
        .map(|p| {
            let area_frac = growth(config, p.emerge, week);
            let mut scale = area_frac.sqrt();
            let is_dead = p.senesce.is_some_and(|s| week >= s);
            if is_dead {
                scale *= config.senescence_shrink;
            }
            let center = match p.anchor {
                Some(a) if pull > 0.0 => {
                    let target = plans[a].home;
                    [
                        p.home[0] + pull * (target[0] - p.home[0]),
                        p.home[1] + pull * (target[1] - p.home[1]),
                    ]
                }
                _ => p.home,
            };
            LeafInstance {
                species: if is_dead { dead } else { p.species },
                center,
                radii: [p.radii[0] * scale, p.radii[1] * scale],
                angle: p.angle,
                color_seed: p.color_seed,
                origin_species: p.species,
            }
        })
        .collect();
    Scene {
        width: config.width,
        height: config.height,
        week,
        species_count,
        wall,
        leaves,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SimConfig {
        SimConfig {
            width: 96,
            height: 48,
            units: 2,
            ..SimConfig::default()
        }
    }

    #[test]
    fn deterministic() {
        let a = generate_series(&small(), 3, 7).unwrap();
        let b = generate_series(&small(), 3, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_series(&small(), 3, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn shape_and_validity() {
        let cfg = small();
        let s = generate_series(&cfg, 0, 1).unwrap();
        assert_eq!(s.cameras.len(), 2);
        for cam in &s.cameras {
            assert_eq!(cam.scenes.len(), 18);
            for (i, sc) in cam.scenes.iter().enumerate() {
                assert_eq!(sc.week, i as u32 + 1);
                sc.validate().unwrap();
            }
        }
    }

    #[test]
    fn radii_monotone_before_onset() {
        let cfg = small();
        let s = generate_series(&cfg, 1, 11).unwrap();
        for cam in &s.cameras {
            for w in 1..cfg.senescence_onset as usize - 1 {
                let (a, b) = (&cam.scenes[w - 1], &cam.scenes[w]);
                for (la, lb) in a.leaves.iter().zip(&b.leaves) {
                    assert!(lb.radii[0] >= la.radii[0] && lb.radii[1] >= la.radii[1]);
                }
            }
        }
    }

    #[test]
    fn senescence_turns_leaves_dead() {
        let cfg = small();
        let s = generate_series(&cfg, 0, 5).unwrap();
        let dead = SpeciesRegistry::default().dead_litter().unwrap();
        for cam in &s.cameras {
            let before = &cam.scenes[cfg.senescence_onset as usize - 2];
            assert!(before.leaves.iter().all(|l| l.species != dead));
            let last = cam.scenes.last().unwrap();
            assert!(last.leaves.iter().any(|l| l.species == dead));
            // dead leaves keep their geometry anchor and remember their origin
            for (l0, l1) in before.leaves.iter().zip(&last.leaves) {
                assert_eq!(l0.center, l1.center);
                assert_eq!(l1.origin_species, l0.species);
            }
        }
    }

    #[test]
    fn overlap_ramp_pulls_leaves_together() {
        let cfg = SimConfig {
            overlap_ramp: Some([0.0, 1.0]),
            ..small()
        };
        let s = generate_series(&cfg, 0, 2).unwrap();
        let cam = &s.cameras[0];
        let first = &cam.scenes[0];
        let last = cam.scenes.last().unwrap();
        let moved = first
            .leaves
            .iter()
            .zip(&last.leaves)
            .filter(|(a, b)| a.center != b.center)
            .count();
        assert!(moved > first.leaves.len() / 2);
        last.validate().unwrap();
    }
}
