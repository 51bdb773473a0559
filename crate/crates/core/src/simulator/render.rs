use super::{LeafInstance, Scene};
use crate::error::Result;
use crate::image::RgbImage;

pub const BACKGROUND_RGB: [u8; 3] = [92, 70, 52];
pub const WALL_RGB: [u8; 3] = [196, 198, 204];

pub(crate) struct SpeciesStyle {
    pub rgb: [f64; 3],
    /// minor / major semi-axis ratio
    pub aspect: f64,
    /// multiplier on the configured leaf radius
    pub size: f64,
    /// vein stripe period along the major axis, pixels
    pub stripe: f64,
}

// Registry order; the last entry is dead litter.
const STYLES: [SpeciesStyle; 9] = [
    SpeciesStyle {
        rgb: [150.0, 168.0, 118.0],
        aspect: 0.45,
        size: 0.7,
        stripe: 2.5,
    },
    SpeciesStyle {
        rgb: [72.0, 110.0, 58.0],
        aspect: 0.55,
        size: 1.0,
        stripe: 6.0,
    },
    SpeciesStyle {
        rgb: [128.0, 170.0, 40.0],
        aspect: 0.6,
        size: 0.6,
        stripe: 4.0,
    },
    SpeciesStyle {
        rgb: [64.0, 150.0, 92.0],
        aspect: 0.8,
        size: 0.7,
        stripe: 5.0,
    },
    SpeciesStyle {
        rgb: [96.0, 128.0, 96.0],
        aspect: 0.3,
        size: 1.2,
        stripe: 3.0,
    },
    SpeciesStyle {
        rgb: [112.0, 136.0, 36.0],
        aspect: 0.5,
        size: 0.9,
        stripe: 7.0,
    },
    SpeciesStyle {
        rgb: [46.0, 120.0, 50.0],
        aspect: 0.85,
        size: 1.1,
        stripe: 9.0,
    },
    SpeciesStyle {
        rgb: [150.0, 190.0, 92.0],
        aspect: 0.15,
        size: 1.3,
        stripe: 1.8,
    },
    SpeciesStyle {
        rgb: [176.0, 158.0, 122.0],
        aspect: 0.6,
        size: 1.0,
        stripe: 4.0,
    },
];

const DEAD_MIX: f64 = 0.7;

pub(crate) fn species_style(species: usize) -> &'static SpeciesStyle {
    &STYLES[species.min(STYLES.len() - 1)]
}

pub fn species_base_color(species: usize) -> [u8; 3] {
    let c = species_style(species).rgb;
    [c[0] as u8, c[1] as u8, c[2] as u8]
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn unit_from(bits: u64) -> f64 {
    (bits >> 11) as f64 / (1u64 << 53) as f64
}

/// Color of `leaf` at pixel center `(px, py)`. Depends only on the leaf and
/// the position.
pub fn leaf_color(leaf: &LeafInstance, px: f64, py: f64) -> [u8; 3] {
    let origin = species_style(leaf.origin_species);
    let base = if leaf.species != leaf.origin_species {
        let dead = species_style(STYLES.len() - 1).rgb;
        [0, 1, 2].map(|i| origin.rgb[i] * (1.0 - DEAD_MIX) + dead[i] * DEAD_MIX)
    } else {
        origin.rgb
    };

    let h1 = splitmix(leaf.color_seed);
    let h2 = splitmix(h1);
    let brightness = 0.9 + 0.2 * unit_from(h1);
    let tint = (unit_from(h2) - 0.5) * 12.0;

    let (s, c) = leaf.angle.sin_cos();
    let dx = px - leaf.center[0];
    let dy = py - leaf.center[1];
    let u = dx * c + dy * s;
    let v = -dx * s + dy * c;
    let rho = (u / leaf.radii[0]).powi(2) + (v / leaf.radii[1]).powi(2);
    let stripe = 1.0 + 0.12 * (std::f64::consts::TAU * u / origin.stripe).cos();
    let shade = brightness * stripe * (1.0 - 0.22 * rho.min(1.0));

    [
        (base[0] * shade + tint).clamp(0.0, 255.0).round() as u8,
        (base[1] * shade).clamp(0.0, 255.0).round() as u8,
        (base[2] * shade - tint).clamp(0.0, 255.0).round() as u8,
    ]
}

/// Paints leaves in z-order over soil, then the walls on top.
pub fn render(scene: &Scene) -> Result<RgbImage> {
    scene.validate()?;
    let (w, h) = (scene.width, scene.height);
    let mut img = RgbImage::filled(w, h, BACKGROUND_RGB);
    for leaf in &scene.leaves {
        leaf.for_each_pixel(w, h, |x, y| {
            img.put(x, y, leaf_color(leaf, x as f64 + 0.5, y as f64 + 0.5));
        });
    }
    for y in 0..h {
        for x in 0..w {
            if scene.is_wall(x, y) {
                img.put(x, y, WALL_RGB);
            }
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::WallFrame;

    fn scene_with(leaves: Vec<LeafInstance>) -> Scene {
        let mut s = Scene::empty(128, 64, WallFrame::uniform(4), 9);
        s.leaves = leaves;
        s
    }

    fn leaf(species: usize, center: [f64; 2], radii: [f64; 2], angle: f64) -> LeafInstance {
        LeafInstance {
            species,
            center,
            radii,
            angle,
            color_seed: 42,
            origin_species: species,
        }
    }

    #[test]
    fn empty_scene_only_soil_and_wall() {
        let s = scene_with(vec![]);
        let img = render(&s).unwrap();
        for y in 0..64 {
            for x in 0..128 {
                let want = if s.is_wall(x, y) {
                    WALL_RGB
                } else {
                    BACKGROUND_RGB
                };
                assert_eq!(img.get(x, y), want);
            }
        }
    }

    #[test]
    fn ellipse_area_matches_analytic() {
        // rasterized footprint vs pi*a*b, several orientations
        for (a, b, angle) in [(20.0, 12.0, 0.0), (18.0, 9.0, 0.6), (25.0, 15.0, 1.9)] {
            let l = leaf(6, [64.0, 32.0], [a, b], angle);
            let s = scene_with(vec![l]);
            let img = render(&s).unwrap();
            let painted = (0..64)
                .flat_map(|y| (0..128).map(move |x| (x, y)))
                .filter(|&(x, y)| !s.is_wall(x, y) && img.get(x, y) != BACKGROUND_RGB)
                .count() as f64;
            let analytic = std::f64::consts::PI * a * b;
            assert!(
                (painted - analytic).abs() / analytic <= 0.03,
                "{painted} vs {analytic}"
            );
        }
    }

    #[test]
    fn identical_stacked_leaves_render_like_one() {
        let l = leaf(2, [40.0, 30.0], [10.0, 6.0], 0.3);
        let one = render(&scene_with(vec![l.clone()])).unwrap();
        let two = render(&scene_with(vec![l.clone(), l])).unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn later_leaf_on_top() {
        let bottom = leaf(0, [50.0, 32.0], [10.0, 10.0], 0.0);
        let top = leaf(7, [50.0, 32.0], [5.0, 5.0], 0.0);
        let img = render(&scene_with(vec![bottom, top.clone()])).unwrap();
        assert_eq!(img.get(50, 32), leaf_color(&top, 50.5, 32.5));
    }

    #[test]
    fn dead_leaf_differs_from_living() {
        let mut l = leaf(6, [40.0, 30.0], [10.0, 6.0], 0.3);
        let alive = leaf_color(&l, 40.5, 30.5);
        l.species = 8;
        let dead = leaf_color(&l, 40.5, 30.5);
        assert_ne!(alive, dead);
        assert!(dead[0] > alive[0]);
    }
}
