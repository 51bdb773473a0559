use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::folds::FoldSpec;
use super::temporal::{cover_error_correlation, weekwise_error, Correlation, WeekRow};
use crate::cover::CoverVector;
use crate::error::{Error, Result};
use crate::features::{fit_normalizer, FeatureMap, NormStats};
use crate::head::{predict_with, Workspace};
use crate::metrics::{evaluate, mean, species_means, MetricsReport, SpeciesMeans};
use crate::par;
use crate::registry::SpeciesRegistry;
use crate::trainer::{train_with_normalizer, Example, TrainConfig, TrainHistory};

/// One annotated image with raw (unnormalized) features.
#[derive(Debug, Clone, Copy)]
pub struct CvSample<'a> {
    pub unit: u32,
    pub camera: u32,
    pub week: u32,
    pub features: &'a FeatureMap,
    pub target: &'a CoverVector,
}

#[derive(Debug, Clone)]
pub struct CvDataset<'a> {
    pub registry: SpeciesRegistry,
    pub samples: Vec<CvSample<'a>>,
}

impl CvDataset<'_> {
    pub fn units(&self) -> BTreeSet<u32> {
        self.samples.iter().map(|s| s.unit).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub unit: u32,
    pub camera: u32,
    pub week: u32,
    pub predicted: CoverVector,
    pub target: CoverVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub spec: FoldSpec,
    pub metrics: MetricsReport,
    /// MAE of predicting the training-split mean cover for every test image.
    pub baseline_mae: f64,
    /// Unfloored training-split species means.
    pub train_means: Vec<f64>,
    pub history: TrainHistory,
    pub predictions: Vec<PredictionRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub species: Vec<String>,
    pub folds: Vec<FoldResult>,
    pub average: MetricsReport,
    pub baseline_mae: f64,
    pub weeks: Vec<WeekRow>,
    /// `None` when the correlation is undefined (e.g. constant MSAE).
    pub correlation: Option<Correlation>,
}

/// Normalizer and scaling means of a fold, fitted on its training units only.
pub fn fit_fold_stats(
    dataset: &CvDataset<'_>,
    fold: &FoldSpec,
) -> Result<(NormStats, SpeciesMeans)> {
    let train: Vec<&CvSample> = dataset
        .samples
        .iter()
        .filter(|s| fold.is_train(s.unit))
        .collect();
    if train.is_empty() {
        return Err(Error::Empty("training split"));
    }
    let stats = fit_normalizer(train.iter().map(|s| s.features))?;
    let means = species_means(train.iter().map(|s| s.target))?;
    Ok((stats, means))
}

/// Species-averaged MAE of a constant prediction.
pub fn constant_predictor_mae(constant: &[f64], targets: &[&CoverVector]) -> f64 {
    let s = constant.len() as f64;
    let total: f64 = targets
        .iter()
        .map(|t| {
            t.values()
                .iter()
                .zip(constant)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                / s
        })
        .sum();
    total / targets.len() as f64
}

fn check_folds(dataset: &CvDataset<'_>, folds: &[FoldSpec]) -> Result<()> {
    if folds.is_empty() {
        return Err(Error::Empty("folds"));
    }
    let units = dataset.units();
    for f in folds {
        if let Some(u) = f
            .test_units
            .iter()
            .chain(&f.train_units)
            .find(|u| !units.contains(u))
        {
            return Err(Error::UnknownUnit(*u));
        }
        if let Some(u) = units.iter().find(|&&u| !f.is_test(u) && !f.is_train(u)) {
            return Err(Error::config(
                "folds",
                format!("fold {} does not assign unit {u}", f.fold_index),
            ));
        }
    }
    for s in &dataset.samples {
        if s.target.len() != dataset.registry.count() {
            return Err(Error::RegistryMismatch {
                expected: dataset.registry.joined(),
                found: format!("{} cover values", s.target.len()),
            });
        }
    }
    Ok(())
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn run_fold(dataset: &CvDataset<'_>, fold: &FoldSpec, config: &TrainConfig) -> Result<FoldResult> {
    let (stats, means) = fit_fold_stats(dataset, fold)?;
    let train: Vec<Example> = dataset
        .samples
        .iter()
        .filter(|s| fold.is_train(s.unit))
        .map(|s| Example {
            features: s.features,
            target: s.target,
        })
        .collect();
    let test: Vec<&CvSample> = dataset
        .samples
        .iter()
        .filter(|s| fold.is_test(s.unit))
        .collect();
    if test.is_empty() {
        return Err(Error::Empty("test split"));
    }
    let config = TrainConfig {
        seed: fold_seed(config.seed, fold.fold_index),
        ..config.clone()
    };
    let (params, history) = train_with_normalizer(&train, &dataset.registry, &stats, &config)?;

    let mut ws = Workspace::default();
    let mut predictions = Vec::with_capacity(test.len());
    for s in &test {
        predictions.push(PredictionRecord {
            unit: s.unit,
            camera: s.camera,
            week: s.week,
            predicted: predict_with(s.features, &params, &mut ws)?,
            target: s.target.clone(),
        });
    }
    let preds: Vec<CoverVector> = predictions.iter().map(|p| p.predicted.clone()).collect();
    let targets: Vec<CoverVector> = test.iter().map(|s| s.target.clone()).collect();
    let metrics = evaluate(&preds, &targets, &means)?;
    let baseline_mae = constant_predictor_mae(
        &means.raw,
        &test.iter().map(|s| s.target).collect::<Vec<_>>(),
    );
    Ok(FoldResult {
        spec: fold.clone(),
        metrics,
        baseline_mae,
        train_means: means.raw,
        history,
        predictions,
    })
}

/// Trains and evaluates one head per fold, folds running in parallel.
pub fn run_cv(
    dataset: &CvDataset<'_>,
    folds: &[FoldSpec],
    config: &TrainConfig,
) -> Result<CvReport> {
    config.validate()?;
    check_folds(dataset, folds)?;
    let folds: Vec<FoldResult> = par::map(folds, |f| run_fold(dataset, f, config))
        .into_iter()
        .collect::<Result<_>>()?;
    let reports: Vec<MetricsReport> = folds.iter().map(|f| f.metrics.clone()).collect();
    let average = MetricsReport::average(&reports)?;
    let baseline_mae = mean(&folds.iter().map(|f| f.baseline_mae).collect::<Vec<_>>());

    let mut preds = Vec::new();
    let mut targets = Vec::new();
    let mut weeks = Vec::new();
    let mut scales: Vec<&[f64]> = Vec::new();
    for f in &folds {
        for p in &f.predictions {
            preds.push(p.predicted.clone());
            targets.push(p.target.clone());
            weeks.push(p.week);
            scales.push(&f.metrics.species_means);
        }
    }
    let week_rows = weekwise_error(&preds, &targets, &weeks, &scales)?;

    let s = dataset.registry.count();
    let mean_cover: Vec<f64> = (0..s)
        .map(|k| folds.iter().map(|f| f.train_means[k]).sum::<f64>() / folds.len() as f64)
        .collect();
    let correlation = cover_error_correlation(&mean_cover, &average.per_species_msae).ok();

    Ok(CvReport {
        species: dataset.registry.names().to_vec(),
        folds,
        average,
        baseline_mae,
        weeks: week_rows,
        correlation,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl CvReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_fold_metrics<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = ["fold", "test_units", "baseline_mae", "final_kappa"]
            .into_iter()
            .map(String::from)
            .collect();
        header.extend(MetricsReport::csv_header(&self.species));
        w.write_record(&header)?;
        for f in &self.folds {
            let units: Vec<String> = f.spec.test_units.iter().map(u32::to_string).collect();
            let mut row = vec![
                f.spec.fold_index.to_string(),
                units.join(" "),
                f.baseline_mae.to_string(),
                f.history
                    .epochs
                    .last()
                    .map(|e| e.kappa.to_string())
                    .unwrap_or_default(),
            ];
            row.extend(f.metrics.csv_row());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_week_table<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["week", "images", "populated", "mae", "msae", "cover_sum"])?;
        for r in &self.weeks {
            w.write_record([
                r.week.to_string(),
                r.images.to_string(),
                r.is_populated().to_string(),
                opt(r.mae),
                opt(r.msae),
                opt(r.cover_sum),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_species_table<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["species", "scaling_mean", "floored", "mae", "msae"])?;
        let a = &self.average;
        for (k, name) in self.species.iter().enumerate() {
            w.write_record([
                name.clone(),
                a.species_means[k].to_string(),
                a.floored[k].to_string(),
                a.per_species_mae[k].to_string(),
                a.per_species_msae[k].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_predictions<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = ["fold", "unit", "camera", "week"]
            .into_iter()
            .map(String::from)
            .collect();
        header.extend(self.species.iter().map(|s| format!("pred_{s}")));
        header.extend(self.species.iter().map(|s| format!("true_{s}")));
        w.write_record(&header)?;
        for f in &self.folds {
            for p in &f.predictions {
                let mut row = vec![
                    f.spec.fold_index.to_string(),
                    p.unit.to_string(),
                    p.camera.to_string(),
                    p.week.to_string(),
                ];
                row.extend(p.predicted.values().iter().map(f64::to_string));
                row.extend(p.target.values().iter().map(f64::to_string));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `cv_report.json`, `fold_metrics.csv`, `week_msae.csv`,
    /// `species_msae.csv` and `predictions.csv` into `dir`.
    pub fn write_tables(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let file = |name: &str| std::fs::File::create(dir.join(name)).map(std::io::BufWriter::new);
        std::fs::write(dir.join("cv_report.json"), self.to_json()?)?;
        self.write_fold_metrics(file("fold_metrics.csv")?)?;
        self.write_week_table(file("week_msae.csv")?)?;
        self.write_species_table(file("species_msae.csv")?)?;
        self.write_predictions(file("predictions.csv")?)?;
        Ok(())
    }
}
