mod common;

use common::{random_instance, random_map, rng};
use coverhead::cover::{read_annotations_csv, write_annotations_csv};
use coverhead::features::{decode_fmap, encode_fmap, read_fmap, write_fmap, FeatureMap};
use coverhead::head::{forward, segment, HeadParams};
use coverhead::simulator::{generate_series, render, SimConfig};
use coverhead::{Annotation, CoverVector, RgbImage, SpeciesRegistry};
use rand::Rng;

fn bits(map: &FeatureMap) -> Vec<u32> {
    map.data().iter().map(|v| v.to_bits()).collect()
}

#[test]
fn fmap_round_trip_is_bit_exact() {
    let mut r = rng(41);
    for i in 0..20 {
        let (w, h, d) = (
            r.random_range(1..40),
            r.random_range(1..30),
            r.random_range(1..16),
        );
        let mut map = random_map(&mut r, w, h, d, 1e3);
        if i % 4 == 0 {
            let data = map.plane_mut(0);
            data[0] = -0.0;
            data[data.len() - 1] = f32::MIN_POSITIVE / 2.0;
        }
        let mut buf = Vec::new();
        encode_fmap(&map, &mut buf).unwrap();
        let back = decode_fmap(buf.as_slice()).unwrap();
        assert_eq!((back.width(), back.height(), back.channels()), (w, h, d));
        assert_eq!(bits(&back), bits(&map));
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.fmap");
    let map = random_map(&mut r, 7, 3, 14, 1.0);
    write_fmap(&map, &path).unwrap();
    assert_eq!(bits(&read_fmap(&path).unwrap()), bits(&map));
}

#[test]
fn truncated_fmap_is_an_error() {
    let mut r = rng(42);
    let map = random_map(&mut r, 5, 5, 3, 1.0);
    let mut buf = Vec::new();
    encode_fmap(&map, &mut buf).unwrap();
    for cut in [0, 3, 10, buf.len() - 1] {
        assert!(decode_fmap(&buf[..cut]).is_err());
    }
    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(decode_fmap(bad.as_slice()).is_err());
}

#[test]
fn params_json_preserves_forward_outputs() {
    let mut r = rng(43);
    for i in 0..12 {
        let (f, p) = random_instance(&mut r, i);
        let back = HeadParams::from_json(&p.to_json().unwrap()).unwrap();
        let (maps_a, _, a) = forward(&f, &p).unwrap();
        let (maps_b, _, b) = forward(&f, &back).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-12);
        }
        for (x, y) in maps_a.bio.iter().zip(&maps_b.bio) {
            assert!((x - y).abs() <= 1e-12);
        }
    }
}

#[test]
fn ppm_output_parses_under_a_reference_reader() {
    let config = SimConfig {
        units: 1,
        ..SimConfig::default()
    };
    let series = generate_series(&config, 0, 1).unwrap();
    let scene = &series.cameras[0].scenes[12];
    let (f, p) = {
        let mut r = rng(44);
        random_instance(&mut r, 0)
    };
    let images: Vec<RgbImage> = vec![render(scene).unwrap(), segment(&f, &p).unwrap().to_image()];
    for img in images {
        let bytes = img.to_ppm_bytes();
        let decoded = image::load_from_memory_with_format(&bytes, image::ImageFormat::Pnm)
            .unwrap()
            .to_rgb8();
        assert_eq!(decoded.width() as usize, img.width());
        assert_eq!(decoded.height() as usize, img.height());
        assert_eq!(decoded.as_raw().as_slice(), img.as_raw());
        assert_eq!(RgbImage::read_ppm(bytes.as_slice()).unwrap(), img);
    }
}

#[test]
fn annotation_csv_round_trip() {
    let registry = SpeciesRegistry::default();
    let mut r = rng(45);
    let rows: Vec<Annotation> = (0..10)
        .map(|i| Annotation {
            unit: i / 4,
            camera: i % 2,
            week: 1 + i % 18,
            cover: CoverVector::new((0..9).map(|_| r.random_range(0.0..100.0)).collect()),
        })
        .collect();
    let mut buf = Vec::new();
    write_annotations_csv(&mut buf, &registry, &rows).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with(
        "unit,camera,week,Ach_mil,Cen_jac,Lot_cor,Med_lup,Pla_lan,Sco_aut,Tri_pra,Grasses,Dead_litter\n"
    ));
    let (reg, back) = read_annotations_csv(buf.as_slice()).unwrap();
    assert_eq!(reg, registry);
    assert_eq!(back, rows);
}
