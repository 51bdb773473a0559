use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use coverhead::cover::write_annotations_csv;
use coverhead::evaluation::{make_folds, run_cv, CvDataset, CvReport, CvSample};
use coverhead::features::{fit_normalizer, ExtractorConfig};
use coverhead::head::{forward, predict, segment, segmentation_map, HeadParams, SegmentationMap};
use coverhead::metrics::{evaluate, species_means, MetricsReport};
use coverhead::simulator::{generate_dataset, simulate_images, SimConfig, ANNOTATION_NOISE_SD};
use coverhead::trainer::{train_with_normalizer, Example, TrainConfig};
use coverhead::{Annotation, CoverVector, RgbImage, SpeciesRegistry};

use crate::dataset::{self, ImageEntry, Key, Loaded};
use crate::manifest::Run;

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("creating {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub struct SimulateOptions {
    pub config: SimConfig,
    pub seed: u64,
    pub noise_sd: f64,
}

pub fn simulate(run: &mut Run, opts: &SimulateOptions) -> Result<()> {
    opts.config.validate()?;
    let registry = SpeciesRegistry::default();
    let images = simulate_images(&opts.config, opts.seed, opts.noise_sd)?;
    let series = generate_dataset(&opts.config, opts.seed)?;

    let image_dir = run.out.join(dataset::IMAGES_DIR);
    fs::create_dir_all(&image_dir).with_context(|| format!("creating {}", image_dir.display()))?;
    let mut entries = Vec::with_capacity(images.len());
    let mut annotations = Vec::with_capacity(images.len());
    let mut truth = Vec::with_capacity(images.len());
    for img in &images {
        let key = (img.unit, img.camera, img.week);
        let file = dataset::image_name(key);
        dataset::write_image(&image_dir.join(&file), &img.image)?;
        entries.push(ImageEntry {
            unit: img.unit,
            camera: img.camera,
            week: img.week,
            file,
            occluded_fraction: img.occluded_fraction,
        });
        let row = |cover: &CoverVector| Annotation {
            unit: img.unit,
            camera: img.camera,
            week: img.week,
            cover: cover.clone(),
        };
        annotations.push(row(&img.annotation));
        truth.push(row(&img.truth));
    }
    run.output(dataset::IMAGES_DIR);
    write_annotations_csv(
        create(&run.output(dataset::ANNOTATIONS_FILE))?,
        &registry,
        &annotations,
    )?;
    write_annotations_csv(create(&run.output(dataset::TRUTH_FILE))?, &registry, &truth)?;
    let info = serde_json::json!({
        "seed": opts.seed,
        "annotation_noise_sd": opts.noise_sd,
        "species": registry.names(),
        "simulator": opts.config,
        "images": entries,
    });
    write_text(
        &run.output(dataset::DATASET_FILE),
        &serde_json::to_string_pretty(&info)?,
    )?;
    write_text(
        &run.output(dataset::SERIES_FILE),
        &serde_json::to_string(&series)?,
    )?;
    run.detail("images", images.len());
    Ok(())
}

pub fn default_noise() -> f64 {
    ANNOTATION_NOISE_SD
}

fn load(run: &mut Run, dir: &Path, use_cache: bool) -> Result<Loaded> {
    run.input(dir);
    let started = Instant::now();
    let data = dataset::load(dir, use_cache)?;
    run.detail("feature_seconds", started.elapsed().as_secs_f64());
    run.detail("feature_cache_hits", data.cache_hits);
    run.detail("images", data.samples.len());
    Ok(data)
}

pub fn train(run: &mut Run, dir: &Path, config: &TrainConfig, use_cache: bool) -> Result<()> {
    let data = load(run, dir, use_cache)?;
    let stats = fit_normalizer(data.samples.iter().map(|s| &s.features))?;
    let examples: Vec<Example> = data
        .samples
        .iter()
        .map(|s| Example {
            features: &s.features,
            target: &s.target,
        })
        .collect();
    let started = Instant::now();
    let (params, history) = train_with_normalizer(&examples, &data.registry, &stats, config)?;
    run.detail("train_seconds", started.elapsed().as_secs_f64());
    run.detail(
        "epoch_seconds",
        history.epochs.iter().map(|e| e.seconds).collect::<Vec<_>>(),
    );
    run.detail("train_config", config);
    fs::create_dir_all(&run.out)?;
    params.save(run.output("params.json"))?;
    history.write_csv(create(&run.output("history.csv"))?)?;
    Ok(())
}

pub enum EvalMode {
    CrossValidation(TrainConfig),
    Params { path: PathBuf, export_segmaps: bool },
    Predictions(PathBuf),
}

pub fn eval(run: &mut Run, dir: &Path, mode: &EvalMode, use_cache: bool) -> Result<()> {
    fs::create_dir_all(&run.out).with_context(|| format!("creating {}", run.out.display()))?;
    match mode {
        EvalMode::CrossValidation(config) => eval_cv(run, dir, config, use_cache),
        EvalMode::Params {
            path,
            export_segmaps,
        } => eval_params(run, dir, path, *export_segmaps, use_cache),
        EvalMode::Predictions(path) => eval_predictions(run, dir, path),
    }
}

fn eval_cv(run: &mut Run, dir: &Path, config: &TrainConfig, use_cache: bool) -> Result<()> {
    let data = load(run, dir, use_cache)?;
    let dataset = CvDataset {
        registry: data.registry.clone(),
        samples: data
            .samples
            .iter()
            .map(|s| CvSample {
                unit: s.key.0,
                camera: s.key.1,
                week: s.key.2,
                features: &s.features,
                target: &s.target,
            })
            .collect(),
    };
    let units: Vec<u32> = dataset.units().into_iter().collect();
    let folds = make_folds(&units, config.seed)?;
    let started = Instant::now();
    let report = run_cv(&dataset, &folds, config)?;
    run.detail("cv_seconds", started.elapsed().as_secs_f64());
    run.detail(
        "fold_train_seconds",
        report
            .folds
            .iter()
            .map(|f| f.history.epochs.iter().map(|e| e.seconds).sum::<f64>())
            .collect::<Vec<_>>(),
    );
    run.detail("train_config", config);
    write_cv(run, &report)
}

fn write_cv(run: &mut Run, report: &CvReport) -> Result<()> {
    write_text(&run.output("cv_report.json"), &report.to_json()?)?;
    report.write_fold_metrics(create(&run.output("fold_metrics.csv"))?)?;
    report.write_week_table(create(&run.output("week_msae.csv"))?)?;
    report.write_species_table(create(&run.output("species_msae.csv"))?)?;
    report.write_predictions(create(&run.output("predictions.csv"))?)?;
    Ok(())
}

fn write_metrics(run: &mut Run, report: &MetricsReport, registry: &SpeciesRegistry) -> Result<()> {
    write_text(&run.output("metrics.json"), &report.to_json()?)?;
    report.write_csv(create(&run.output("metrics.csv"))?, registry.names())?;
    Ok(())
}

/// Metrics over a whole dataset, scaled by the means of its own annotations.
fn score(preds: &[CoverVector], targets: &[CoverVector]) -> Result<MetricsReport> {
    let means = species_means(targets)?;
    Ok(evaluate(preds, targets, &means)?)
}

fn eval_params(
    run: &mut Run,
    dir: &Path,
    params_path: &Path,
    export: bool,
    use_cache: bool,
) -> Result<()> {
    run.input(params_path);
    let params = HeadParams::load(params_path)
        .with_context(|| format!("loading {}", params_path.display()))?;
    let data = load(run, dir, use_cache)?;
    params
        .registry()
        .ensure_same(&data.registry)
        .with_context(|| format!("{} against {}", params_path.display(), dir.display()))?;
    let segmap_dir = run.out.join("segmaps");
    if export {
        fs::create_dir_all(&segmap_dir)
            .with_context(|| format!("creating {}", segmap_dir.display()))?;
        run.output("segmaps");
    }
    let mut preds = Vec::with_capacity(data.samples.len());
    let mut rows = Vec::with_capacity(data.samples.len());
    for s in &data.samples {
        let cover = if export {
            let (maps, _, cover) = forward(&s.features, &params)?;
            let labels = segmentation_map(&maps);
            let image = dataset::read_image(&s.path)?;
            write_segmaps(&segmap_dir, &dataset::image_name(s.key), &image, &labels)?;
            cover
        } else {
            predict(&s.features, &params)?
        };
        rows.push(annotation(s.key, &cover));
        preds.push(cover);
    }
    let targets: Vec<CoverVector> = data.samples.iter().map(|s| s.target.clone()).collect();
    write_metrics(run, &score(&preds, &targets)?, &data.registry)?;
    write_annotations_csv(
        create(&run.output("predictions.csv"))?,
        &data.registry,
        &rows,
    )?;
    Ok(())
}

fn annotation((unit, camera, week): Key, cover: &CoverVector) -> Annotation {
    Annotation {
        unit,
        camera,
        week,
        cover: cover.clone(),
    }
}

fn eval_predictions(run: &mut Run, dir: &Path, pred_path: &Path) -> Result<()> {
    run.input(dir);
    run.input(pred_path);
    let ann_path = dir.join(dataset::ANNOTATIONS_FILE);
    let (registry, targets) = dataset::read_cover_csv(&ann_path)?;
    let (pred_registry, preds) = dataset::read_cover_csv(pred_path)?;
    pred_registry
        .ensure_same(&registry)
        .with_context(|| format!("{} against {}", pred_path.display(), ann_path.display()))?;
    let missing: Vec<String> = targets
        .keys()
        .filter(|k| !preds.contains_key(k))
        .map(|(u, c, w)| format!("(unit {u}, camera {c}, week {w})"))
        .collect();
    if !missing.is_empty() {
        bail!(
            "{} lacks predictions for {} annotated image(s): {}",
            pred_path.display(),
            missing.len(),
            missing.join(", ")
        );
    }
    let (p, t): (Vec<CoverVector>, Vec<CoverVector>) = targets
        .iter()
        .map(|(k, t)| (preds[k].clone(), t.clone()))
        .unzip();
    run.detail("images", t.len());
    write_metrics(run, &score(&p, &t)?, &registry)
}

/// Blends the label colors over the image at half strength.
pub fn overlay(image: &RgbImage, labels: &SegmentationMap) -> RgbImage {
    let mut out = image.clone();
    for y in 0..image.height() {
        for x in 0..image.width() {
            let a = image.get(x, y);
            let b = labels.label_color(labels.labels[y * labels.width + x]);
            out.put(
                x,
                y,
                std::array::from_fn(|c| ((a[c] as u16 + b[c] as u16) / 2) as u8),
            );
        }
    }
    out
}

fn write_segmaps(dir: &Path, name: &str, image: &RgbImage, labels: &SegmentationMap) -> Result<()> {
    let stem = name.trim_end_matches(".ppm");
    dataset::write_image(&dir.join(format!("{stem}_labels.ppm")), &labels.to_image())?;
    dataset::write_image(
        &dir.join(format!("{stem}_overlay.ppm")),
        &overlay(image, labels),
    )
}

pub fn segmap(run: &mut Run, image_path: &Path, params_path: &Path) -> Result<()> {
    run.input(image_path);
    run.input(params_path);
    let params = HeadParams::load(params_path)
        .with_context(|| format!("loading {}", params_path.display()))?;
    let image = dataset::read_image(image_path)?;
    let (features, _) = dataset::features_for(&image, ExtractorConfig::default(), None)?;
    let labels = segment(&features, &params)?;
    fs::create_dir_all(&run.out).with_context(|| format!("creating {}", run.out.display()))?;
    let stem = image_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("image")
        .to_string();
    run.output(format!("{stem}_labels.ppm"));
    run.output(format!("{stem}_overlay.ppm"));
    write_segmaps(&run.out, &format!("{stem}.ppm"), &image, &labels)?;
    let mut counts = vec![0usize; labels.species + 2];
    for &l in &labels.labels {
        counts[l as usize] += 1;
    }
    let mut names: Vec<String> = params.registry().names().to_vec();
    names.extend(["background".to_string(), "irrelevant".to_string()]);
    run.detail(
        "label_pixels",
        names
            .into_iter()
            .zip(counts)
            .collect::<std::collections::BTreeMap<_, _>>(),
    );
    Ok(())
}
