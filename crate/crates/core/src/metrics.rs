//! Cover-estimation error metrics: MAE in percentage points and MSAE, the
//! per-species MAE scaled by that species' mean cover.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cover::CoverVector;
use crate::error::{Error, Result};

/// Lower bound for a scaling mean.
pub const SPECIES_MEAN_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesMeans {
    /// Scaling denominators, floored at [`SPECIES_MEAN_FLOOR`].
    pub values: Vec<f64>,
    /// Unfloored arithmetic means.
    pub raw: Vec<f64>,
    pub floored: Vec<bool>,
}

impl SpeciesMeans {
    /// Uses `values` directly as scaling denominators (still floored).
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NonFinite("species means"));
        }
        let floored = values.iter().map(|&v| v < SPECIES_MEAN_FLOOR).collect();
        Ok(Self {
            raw: values.clone(),
            values: values
                .into_iter()
                .map(|v| v.max(SPECIES_MEAN_FLOOR))
                .collect(),
            floored,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Mean ground-truth cover per species over `covers`.
pub fn species_means<'a, I>(covers: I) -> Result<SpeciesMeans>
where
    I: IntoIterator<Item = &'a CoverVector>,
{
    let mut sums: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for c in covers {
        if n == 0 {
            sums = vec![0.0; c.len()];
        } else if c.len() != sums.len() {
            return Err(Error::Dimension(format!(
                "cover vector has {} species, expected {}",
                c.len(),
                sums.len()
            )));
        }
        for (s, v) in sums.iter_mut().zip(c.values()) {
            *s += v;
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::Empty("annotations for species means"));
    }
    SpeciesMeans::from_values(sums.into_iter().map(|s| s / n as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub images: usize,
    /// Species-averaged MAE, percentage points.
    pub mae: f64,
    pub msae: f64,
    pub per_species_mae: Vec<f64>,
    pub per_species_msae: Vec<f64>,
    pub species_means: Vec<f64>,
    pub floored: Vec<bool>,
    /// MAE averaged per image first, then over images. Equal to `mae` when
    /// every image carries every species.
    pub mae_image_first: f64,
    pub msae_image_first: f64,
}

pub fn evaluate(
    preds: &[CoverVector],
    targets: &[CoverVector],
    means: &SpeciesMeans,
) -> Result<MetricsReport> {
    if preds.len() != targets.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} targets",
            preds.len(),
            targets.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    let s = means.len();
    if let Some(bad) = preds.iter().chain(targets).find(|c| c.len() != s) {
        return Err(Error::Dimension(format!(
            "cover vector has {} species, means have {s}",
            bad.len()
        )));
    }
    let n = preds.len() as f64;
    let mut abs_sum = vec![0.0; s];
    let mut img_mae = 0.0;
    let mut img_msae = 0.0;
    for (p, t) in preds.iter().zip(targets) {
        let mut row = 0.0;
        let mut row_scaled = 0.0;
        for k in 0..s {
            let e = (p[k] - t[k]).abs();
            abs_sum[k] += e;
            row += e;
            row_scaled += e / means.values[k];
        }
        img_mae += row / s as f64;
        img_msae += row_scaled / s as f64;
    }
    let per_species_mae: Vec<f64> = abs_sum.iter().map(|a| a / n).collect();
    let per_species_msae: Vec<f64> = per_species_mae
        .iter()
        .zip(&means.values)
        .map(|(m, d)| m / d)
        .collect();
    Ok(MetricsReport {
        images: preds.len(),
        mae: mean(&per_species_mae),
        msae: mean(&per_species_msae),
        per_species_mae,
        per_species_msae,
        species_means: means.values.clone(),
        floored: means.floored.clone(),
        mae_image_first: img_mae / n,
        msae_image_first: img_msae / n,
    })
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

impl MetricsReport {
    /// Field-wise arithmetic mean of several reports.
    pub fn average(reports: &[MetricsReport]) -> Result<MetricsReport> {
        let Some(first) = reports.first() else {
            return Err(Error::Empty("reports to average"));
        };
        let s = first.per_species_mae.len();
        if reports.iter().any(|r| r.per_species_mae.len() != s) {
            return Err(Error::Dimension("reports differ in species count".into()));
        }
        let n = reports.len() as f64;
        let avg = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        let avg_vec = |f: fn(&MetricsReport) -> &Vec<f64>| -> Vec<f64> {
            (0..s)
                .map(|k| reports.iter().map(|r| f(r)[k]).sum::<f64>() / n)
                .collect()
        };
        Ok(MetricsReport {
            images: reports.iter().map(|r| r.images).sum(),
            mae: avg(|r| r.mae),
            msae: avg(|r| r.msae),
            per_species_mae: avg_vec(|r| &r.per_species_mae),
            per_species_msae: avg_vec(|r| &r.per_species_msae),
            species_means: avg_vec(|r| &r.species_means),
            floored: (0..s)
                .map(|k| reports.iter().any(|r| r.floored[k]))
                .collect(),
            mae_image_first: avg(|r| r.mae_image_first),
            msae_image_first: avg(|r| r.msae_image_first),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Header matching [`MetricsReport::csv_row`].
    pub fn csv_header(species: &[String]) -> Vec<String> {
        let mut h: Vec<String> = [
            "images",
            "mae",
            "msae",
            "mae_image_first",
            "msae_image_first",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        h.extend(species.iter().map(|s| format!("mae_{s}")));
        h.extend(species.iter().map(|s| format!("msae_{s}")));
        h
    }

    pub fn csv_row(&self) -> Vec<String> {
        let mut row = vec![
            self.images.to_string(),
            self.mae.to_string(),
            self.msae.to_string(),
            self.mae_image_first.to_string(),
            self.msae_image_first.to_string(),
        ];
        row.extend(self.per_species_mae.iter().map(f64::to_string));
        row.extend(self.per_species_msae.iter().map(f64::to_string));
        row
    }

    pub fn write_csv<W: Write>(&self, out: W, species: &[String]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::csv_header(species))?;
        w.write_record(self.csv_row())?;
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cv(v: &[f64]) -> CoverVector {
        CoverVector(v.to_vec())
    }

    #[test]
    fn means_examples() {
        let m = species_means(&[cv(&[10.0, 0.0]), cv(&[20.0, 0.0])]).unwrap();
        assert_eq!(m.values[0], 15.0);
        assert_eq!(m.values[1], SPECIES_MEAN_FLOOR);
        assert_eq!(m.floored, vec![false, true]);
        assert_eq!(m.raw[1], 0.0);
        let same = species_means(&vec![cv(&[3.0, 4.0]); 5]).unwrap();
        assert_eq!(same.values, vec![3.0, 4.0]);
        assert!(matches!(species_means(&[]), Err(Error::Empty(_))));
        assert!(species_means(&[cv(&[1.0]), cv(&[1.0, 2.0])]).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let t = vec![cv(&[10.0, 5.0]), cv(&[20.0, 0.0])];
        let m = species_means(&t).unwrap();
        let r = evaluate(&t, &t, &m).unwrap();
        assert_eq!((r.mae, r.msae), (0.0, 0.0));

        let p = vec![cv(&[15.0, 5.0]), cv(&[15.0, 0.0])];
        let m = SpeciesMeans::from_values(vec![10.0, 2.5]).unwrap();
        let r = evaluate(&p, &t, &m).unwrap();
        assert_eq!(r.per_species_mae, vec![5.0, 0.0]);
        assert_eq!(r.per_species_msae[0], 0.5);
        assert_eq!(r.mae, 2.5);
        assert!((r.mae_image_first - r.mae).abs() < 1e-12);
        assert!(evaluate(&p[..1], &t, &m).is_err());
    }

    #[test]
    fn average_of_reports() {
        let m = SpeciesMeans::from_values(vec![1.0]).unwrap();
        let a = evaluate(&[cv(&[1.0])], &[cv(&[0.0])], &m).unwrap();
        let b = evaluate(&[cv(&[3.0])], &[cv(&[0.0])], &m).unwrap();
        let avg = MetricsReport::average(&[a, b]).unwrap();
        assert_eq!(avg.mae, 2.0);
        assert_eq!(avg.images, 2);
    }

    fn covers(n: usize, s: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(0.0..100.0f64, s), n)
    }

    proptest! {
        #[test]
        fn symmetric_and_scale_free(
            p in covers(6, 3),
            t in covers(6, 3),
            c in 0.1..10.0f64,
        ) {
            let p: Vec<_> = p.into_iter().map(CoverVector).collect();
            let t: Vec<_> = t.into_iter().map(CoverVector).collect();
            let m = species_means(&t).unwrap();
            let a = evaluate(&p, &t, &m).unwrap();
            let b = evaluate(&t, &p, &m).unwrap();
            prop_assert_eq!(a.mae, b.mae);
            prop_assert_eq!(a.msae, b.msae);
            for k in 0..3 {
                prop_assert!((a.per_species_msae[k] - a.per_species_mae[k] / m.values[k]).abs() < 1e-12);
            }

            let scale = |v: &[CoverVector]| -> Vec<CoverVector> {
                v.iter().map(|x| CoverVector(vec![x[0] * c, x[1], x[2]])).collect()
            };
            let mut mv = m.values.clone();
            mv[0] *= c;
            let ms = SpeciesMeans::from_values(mv).unwrap();
            let s = evaluate(&scale(&p), &scale(&t), &ms).unwrap();
            prop_assert!((s.per_species_msae[0] - a.per_species_msae[0]).abs() < 1e-9);
        }
    }
}
