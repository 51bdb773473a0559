use serde::{Deserialize, Serialize};

use crate::cover::{CoverVector, MAX_WEEK};
use crate::error::{Error, Result};

/// Errors within one week bucket. Everything is `None` when no image falls in
/// the week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeekRow {
    pub week: u32,
    pub images: usize,
    pub mae: Option<f64>,
    pub msae: Option<f64>,
    /// Mean over images of the summed target cover.
    pub cover_sum: Option<f64>,
    pub per_species_msae: Option<Vec<f64>>,
}

impl WeekRow {
    pub fn is_populated(&self) -> bool {
        self.images > 0
    }
}

/// Per-week MAE and MSAE for weeks `1..=MAX_WEEK`. `scales[i]` holds the
/// scaling means that apply to sample `i` (its fold's training means).
pub fn weekwise_error(
    preds: &[CoverVector],
    targets: &[CoverVector],
    weeks: &[u32],
    scales: &[&[f64]],
) -> Result<Vec<WeekRow>> {
    let n = preds.len();
    if targets.len() != n || weeks.len() != n || scales.len() != n {
        return Err(Error::Dimension(
            "predictions, targets, weeks and scales differ in length".into(),
        ));
    }
    if let Some(&w) = weeks.iter().find(|&&w| !(1..=MAX_WEEK).contains(&w)) {
        return Err(Error::Domain {
            value: w as f64,
            min: 1.0,
            max: MAX_WEEK as f64,
        });
    }
    let s = preds.first().map_or(0, CoverVector::len);
    for i in 0..n {
        if preds[i].len() != s || targets[i].len() != s || scales[i].len() != s {
            return Err(Error::Dimension(format!(
                "sample {i} has inconsistent species count"
            )));
        }
    }

    let mut rows = Vec::with_capacity(MAX_WEEK as usize);
    for week in 1..=MAX_WEEK {
        let idx: Vec<usize> = (0..n).filter(|&i| weeks[i] == week).collect();
        if idx.is_empty() || s == 0 {
            rows.push(WeekRow {
                week,
                images: idx.len(),
                mae: None,
                msae: None,
                cover_sum: None,
                per_species_msae: None,
            });
            continue;
        }
        let m = idx.len() as f64;
        let mut abs = vec![0.0; s];
        let mut scaled = vec![0.0; s];
        let mut cover_sum = 0.0;
        for &i in &idx {
            for k in 0..s {
                let e = (preds[i][k] - targets[i][k]).abs();
                abs[k] += e;
                scaled[k] += e / scales[i][k];
            }
            cover_sum += targets[i].sum();
        }
        let per_species_msae: Vec<f64> = scaled.iter().map(|v| v / m).collect();
        rows.push(WeekRow {
            week,
            images: idx.len(),
            mae: Some(abs.iter().sum::<f64>() / (m * s as f64)),
            msae: Some(per_species_msae.iter().sum::<f64>() / s as f64),
            cover_sum: Some(cover_sum / m),
            per_species_msae: Some(per_species_msae),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub pearson_r: f64,
    pub r_squared: f64,
}

/// Pearson correlation of two equally long samples (at least 3 points).
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "{} vs {} values",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::UndefinedCorrelation("fewer than 3 points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if !(sxx > 0.0) || !(syy > 0.0) {
        return Err(Error::UndefinedCorrelation("zero variance"));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(Correlation {
        pearson_r: r,
        r_squared: r * r,
    })
}

/// Correlation between species mean cover and species MSAE.
pub fn cover_error_correlation(species_means: &[f64], species_msae: &[f64]) -> Result<Correlation> {
    pearson(species_means, species_msae)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions_and_absent_weeks() {
        let t = vec![CoverVector(vec![1.0, 2.0]), CoverVector(vec![3.0, 5.0])];
        let sc = [1.0, 1.0];
        let rows = weekwise_error(&t, &t, &[2, 2], &[&sc, &sc]).unwrap();
        assert_eq!(rows.len(), MAX_WEEK as usize);
        assert_eq!(rows[1].msae, Some(0.0));
        assert_eq!(rows[1].cover_sum, Some(5.5));
        assert!(rows
            .iter()
            .filter(|r| r.week != 2)
            .all(|r| r.msae.is_none() && !r.is_populated()));
        assert!(weekwise_error(&t, &t, &[0, 2], &[&sc, &sc]).is_err());
        assert!(weekwise_error(&t, &t, &[19, 2], &[&sc, &sc]).is_err());
    }

    #[test]
    fn scaled_by_sample() {
        let p = vec![CoverVector(vec![2.0]), CoverVector(vec![4.0])];
        let t = vec![CoverVector(vec![0.0]), CoverVector(vec![0.0])];
        let rows = weekwise_error(&p, &t, &[1, 1], &[&[2.0], &[4.0]]).unwrap();
        assert_eq!(rows[0].msae, Some(1.0));
        assert_eq!(rows[0].mae, Some(3.0));
    }

    #[test]
    fn correlation_cases() {
        let m = [1.0, 2.0, 5.0, 9.0];
        let e: Vec<f64> = m.iter().map(|v| -0.3 * v + 2.0).collect();
        let c = cover_error_correlation(&m, &e).unwrap();
        assert!((c.pearson_r + 1.0).abs() < 1e-12);
        assert!((c.r_squared - 1.0).abs() < 1e-12);
        assert!(matches!(
            cover_error_correlation(&m, &[0.5; 4]),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(cover_error_correlation(&m[..2], &e[..2]).is_err());
    }
}
