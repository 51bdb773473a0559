use coverhead_demo::{DemoState, HEIGHT, WIDTH};

#[test]
fn scenes_grow_and_overlap_raises_occlusion() {
    let mut demo = DemoState::new();
    let (img, early) = demo.render_scene(1, 1, 0.0).unwrap();
    assert_eq!((img.width(), img.height()), (WIDTH, HEIGHT));
    assert_eq!(img.to_rgba().len(), WIDTH * HEIGHT * 4);
    let (_, peak) = demo.render_scene(1, 12, 0.0).unwrap();
    assert!(peak.true_sum > early.true_sum);
    assert!(peak.true_sum >= peak.visible_sum);
    let (_, packed) = demo.render_scene(1, 12, 0.9).unwrap();
    assert!(packed.occluded_fraction > peak.occluded_fraction);
    assert!(demo.render_scene(1, 19, 0.0).is_err());
}

#[test]
fn segmenting_needs_a_scene_and_a_head() {
    let mut demo = DemoState::new();
    assert!(demo.segment(1.0).is_err());
    demo.render_scene(2, 10, 0.0).unwrap();
    assert!(demo.segment(1.0).is_err());
}

#[test]
fn threshold_controls_plant_pixels() {
    let mut demo = DemoState::new();
    let summary = demo.quick_train(3, 3).unwrap();
    assert_eq!(summary.images, 72);
    assert_eq!(summary.epochs.len(), 3);
    assert!(summary.epochs[2].1 < summary.epochs[0].1);
    demo.render_scene(3, 12, 0.0).unwrap();

    let plants = |kappa: f64| {
        let (img, s) = demo.segment(kappa).unwrap();
        assert_eq!((img.width(), img.height()), (WIDTH, HEIGHT));
        assert!((s.kappa - kappa).abs() <= 1e-9 * kappa.max(1.0));
        s.label_pixels[..9].iter().sum::<usize>()
    };
    let low = plants(1e-3);
    let trained = plants(demo.trained_kappa().unwrap());
    let high = plants(50.0);
    assert!(low >= trained && trained >= high);
    assert_eq!(high, 0);
    assert!(low > 0);
    assert!(demo.segment(-1.0).is_err());
}

#[test]
fn trained_head_beats_predicting_nothing() {
    let mut demo = DemoState::new();
    demo.quick_train(5, 4).unwrap();
    for week in [6, 12, 16] {
        demo.render_scene(5, week, 0.0).unwrap();
        let (_, s) = demo.segment(demo.trained_kappa().unwrap()).unwrap();
        let zero_mae = s.true_cover.iter().sum::<f64>() / s.true_cover.len() as f64;
        assert!(s.mae < zero_mae, "week {week}: {} vs {zero_mae}", s.mae);
    }
}
