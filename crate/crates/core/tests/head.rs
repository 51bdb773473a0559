mod common;

use common::{oracle, random_instance, random_map, random_norm, random_params, rng};
use coverhead::features::{apply_normalizer, FeatureMap};
use coverhead::head::{backward, forward, predict, segment, HeadParams, ZERO_RESIDUAL};
use coverhead::CoverVector;
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn forward_matches_oracle_across_tile_boundaries() {
    let mut r = rng(11);
    for (i, (w, h)) in [(16, 8), (17, 8), (40, 9), (129, 1), (1, 257), (30, 30)]
        .into_iter()
        .enumerate()
    {
        let d = [2, 14][i % 2];
        let s = [1, 3, 9][i % 3];
        let f = random_map(&mut r, w, h, d, 2.0);
        let mut p = random_params(&mut r, s, d, 0.5);
        if i % 2 == 0 {
            p.normalization = Some(random_norm(&mut r, d));
        }
        let o = oracle(&f, &p);
        let (maps, _, cover) = forward(&f, &p).unwrap();
        for (a, b) in cover.values().iter().zip(&o.cover) {
            assert!(close(*a, *b, 1e-10), "{w}x{h}: {a} vs {b}");
        }
        for px in 0..w * h {
            assert!(close(maps.bio[px], o.bio[px], 1e-12));
            assert!(close(maps.bg[px], o.bg[px], 1e-12));
            assert!(close(maps.irr[px], o.irr[px], 1e-12));
            for sp in 0..s {
                assert!(close(maps.species[sp][px], o.species[sp][px], 1e-12));
            }
        }
    }
}

#[test]
fn gradient_matches_finite_differences_on_multi_tile_maps() {
    let mut r = rng(12);
    for i in 0..4 {
        let (w, h) = [(20, 9), (130, 2), (12, 12), (64, 5)][i];
        let d = [2, 14][i % 2];
        let s = [3, 9][i % 2];
        let f = random_map(&mut r, w, h, d, 1.5);
        let mut p = random_params(&mut r, s, d, 0.4);
        if i % 2 == 1 {
            p.normalization = Some(random_norm(&mut r, d));
        }
        let cover = predict(&f, &p).unwrap();
        let target = CoverVector::new(cover.values().iter().map(|c| c + 3.0).collect());
        let b = backward(&f, &p, &target).unwrap();
        let h_step = 1e-4;
        for k in 0..p.len() {
            let eval = |delta: f64| {
                let mut q = p.clone();
                q.flat_mut()[k] += delta;
                common::loss(&predict(&f, &q).unwrap(), &target)
            };
            let numeric = (eval(h_step) - eval(-h_step)) / (2.0 * h_step);
            let scale = b.grad[k].abs().max(numeric.abs());
            let err = (b.grad[k] - numeric).abs();
            if scale < 1e-6 {
                assert!(err <= 1e-7, "param {k}: {} vs {numeric}", b.grad[k]);
            } else {
                assert!(err / scale <= 1e-4, "param {k}: {} vs {numeric}", b.grad[k]);
            }
        }
    }
}

#[test]
fn exact_fit_has_zero_gradient() {
    let mut r = rng(13);
    let f = random_map(&mut r, 10, 6, 2, 1.0);
    let p = random_params(&mut r, 3, 2, 0.5);
    let cover = predict(&f, &p).unwrap();
    let b = backward(&f, &p, &cover).unwrap();
    assert_eq!(b.loss, 0.0);
    assert!(b.grad.iter().all(|g| *g == 0.0));
    assert!(ZERO_RESIDUAL > 0.0);
}

#[test]
fn folded_normalization_equals_normalizing_first() {
    let mut r = rng(14);
    let f = random_map(&mut r, 23, 7, 14, 3.0);
    let mut p = random_params(&mut r, 9, 14, 0.3);
    let stats = random_norm(&mut r, 14);
    let normalized = apply_normalizer(&f, &stats).unwrap();
    let plain = predict(&normalized, &p).unwrap();
    p.normalization = Some(stats);
    let folded = predict(&f, &p).unwrap();
    for (a, b) in plain.values().iter().zip(folded.values()) {
        // normalized features are rounded to f32 on the first path
        assert!(close(*a, *b, 1e-5), "{a} vs {b}");
    }
}

#[test]
fn mirrored_features_give_the_same_cover() {
    let mut r = rng(15);
    let f = random_map(&mut r, 31, 5, 2, 2.0);
    let p = random_params(&mut r, 3, 2, 1.0);
    let a = predict(&f, &p).unwrap();
    let b = predict(&f.mirrored(), &p).unwrap();
    for (x, y) in a.values().iter().zip(b.values()) {
        assert!(close(*x, *y, 1e-12));
    }
}

#[test]
fn segmentation_matches_brute_force_labels() {
    let mut r = rng(16);
    for i in 0..30 {
        let (f, p) = random_instance(&mut r, i);
        let o = oracle(&f, &p);
        let seg = segment(&f, &p).unwrap();
        let s = p.species();
        for px in 0..f.pixels() {
            let expected = if o.bio[px] > 0.5 {
                // first species holding the maximum
                let best = o
                    .species
                    .iter()
                    .map(|v| v[px])
                    .fold(f64::NEG_INFINITY, f64::max);
                (0..s).find(|&k| o.species[k][px] == best).unwrap()
            } else if o.bg[px] >= o.irr[px] {
                s
            } else {
                s + 1
            };
            // skip pixels within rounding of a decision boundary
            let margin = (o.bio[px] - 0.5).abs().min((o.bg[px] - o.irr[px]).abs());
            if margin > 1e-9 {
                assert_eq!(seg.labels[px] as usize, expected, "instance {i} pixel {px}");
            }
        }
    }
}

fn permuted(p: &HeadParams, perm: &[usize]) -> HeadParams {
    let s = p.species();
    let d = p.feature_dim();
    let mut weights = Vec::with_capacity(p.weights().len());
    let mut bias = Vec::with_capacity(s + 2);
    let order: Vec<usize> = perm.iter().copied().chain([s, s + 1]).collect();
    for &row in &order {
        weights.extend((0..d).map(|c| p.weight(row, c)));
        bias.push(p.bias()[row]);
    }
    let mut q =
        HeadParams::from_parts(p.registry().clone(), d, weights, bias, p.kappa_raw()).unwrap();
    q.normalization = p.normalization.clone();
    q
}

fn shuffled_pixels(f: &FeatureMap, order: &[usize]) -> FeatureMap {
    let n = f.pixels();
    let mut data = Vec::with_capacity(n * f.channels());
    for c in 0..f.channels() {
        let plane = f.plane(c);
        data.extend(order.iter().map(|&i| plane[i]));
    }
    // stored as a single row so any permutation is representable
    FeatureMap::from_planar(n, 1, f.channels(), data).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn species_permutation_permutes_cover(seed in any::<u64>(), shift in 1usize..9) {
        let mut r = rng(seed);
        let f = random_map(&mut r, 9, 4, 2, 2.0);
        let p = random_params(&mut r, 9, 2, 1.0);
        let perm: Vec<usize> = (0..9).map(|i| (i + shift) % 9).collect();
        let a = predict(&f, &p).unwrap();
        let b = predict(&f, &permuted(&p, &perm)).unwrap();
        for (k, &src) in perm.iter().enumerate() {
            prop_assert!(close(b.values()[k], a.values()[src], 1e-12));
        }
    }

    #[test]
    fn pixel_order_does_not_matter(seed in any::<u64>(), w in 1usize..20, h in 1usize..10) {
        let mut r = rng(seed);
        let f = random_map(&mut r, w, h, 14, 2.0);
        let p = random_params(&mut r, 3, 14, 0.3);
        let n = w * h;
        let order: Vec<usize> = (0..n).map(|i| (i * 7 + seed as usize % n) % n).collect();
        let mut seen = vec![false; n];
        let bijective = order.iter().all(|&i| !std::mem::replace(&mut seen[i], true));
        prop_assume!(bijective);
        let a = predict(&f, &p).unwrap();
        let b = predict(&shuffled_pixels(&f, &order), &p).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!(close(*x, *y, 1e-10));
        }
    }

    #[test]
    fn cover_is_finite_and_nonnegative(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (f, p) = random_instance(&mut r, (seed % 6) as usize);
        let (_, areas, cover) = forward(&f, &p).unwrap();
        prop_assert!(close(areas.total, f.pixels() as f64, 1e-12));
        for c in cover.values() {
            prop_assert!(*c >= 0.0 && c.is_finite());
        }
    }
}
