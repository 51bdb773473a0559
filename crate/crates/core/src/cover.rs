//! Cover vectors, annotations and the annotation CSV format.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registry::SpeciesRegistry;

/// Weeks are numbered 1..=MAX_WEEK.
pub const MAX_WEEK: u32 = 18;

/// One cover percentage per species, in registry order.
///
/// Entries are percentages (0..=100). Their sum is unbounded above because
/// cover ignores occlusion: overlapping plants each count their full area.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoverVector(pub Vec<f64>);

impl CoverVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(species: usize) -> Self {
        Self(vec![0.0; species])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn validate(&self) -> Result<(), CoverViolations> {
        validate_cover(self)
    }
}

impl std::ops::Index<usize> for CoverVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Entries of a cover vector that fall outside [0, 100], as `(index, value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverViolations(pub Vec<(usize, f64)>);

impl fmt::Display for CoverViolations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(i, v)| format!("entry {i} = {v}"))
            .collect();
        write!(f, "out of [0, 100]: {}", parts.join(", "))
    }
}

impl std::error::Error for CoverViolations {}

/// Accepts iff every entry lies in [0, 100]. Sums above 100 are fine.
pub fn validate_cover(v: &CoverVector) -> Result<(), CoverViolations> {
    let bad: Vec<(usize, f64)> =
        v.0.iter()
            .enumerate()
            .filter(|(_, x)| !(0.0..=100.0).contains(*x))
            .map(|(i, &x)| (i, x))
            .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CoverViolations(bad))
    }
}

/// Per-image cover estimate for one camera of one unit in one week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub unit: u32,
    pub camera: u32,
    pub week: u32,
    pub cover: CoverVector,
}

impl Annotation {
    pub fn key(&self) -> (u32, u32, u32) {
        (self.unit, self.camera, self.week)
    }
}

pub fn validate_week(week: u32) -> Result<()> {
    if (1..=MAX_WEEK).contains(&week) {
        Ok(())
    } else {
        Err(Error::Domain {
            value: week as f64,
            min: 1.0,
            max: MAX_WEEK as f64,
        })
    }
}

/// Write annotations as `unit,camera,week,<species...>`.
pub fn write_annotations_csv<W: Write>(
    out: W,
    registry: &SpeciesRegistry,
    rows: &[Annotation],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["unit".to_string(), "camera".into(), "week".into()];
    header.extend(registry.names().iter().cloned());
    w.write_record(&header)?;
    for a in rows {
        if a.cover.len() != registry.count() {
            return Err(Error::Dimension(format!(
                "annotation ({}, {}, {}) has {} entries, registry has {}",
                a.unit,
                a.camera,
                a.week,
                a.cover.len(),
                registry.count()
            )));
        }
        let mut rec = vec![a.unit.to_string(), a.camera.to_string(), a.week.to_string()];
        rec.extend(a.cover.0.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Read an annotation CSV. The registry is taken from the header columns
/// after `unit,camera,week`.
pub fn read_annotations_csv<R: Read>(input: R) -> Result<(SpeciesRegistry, Vec<Annotation>)> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let lead: Vec<&str> = header.iter().take(3).collect();
    if lead != ["unit", "camera", "week"] {
        return Err(Error::Parse(format!(
            "annotation header must start with unit,camera,week; found {lead:?}"
        )));
    }
    let registry = SpeciesRegistry::new(header.iter().skip(3))?;
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| -> Result<&str> {
            rec.get(i)
                .ok_or_else(|| Error::Parse(format!("row {}: missing column {i}", line + 1)))
        };
        let int = |i: usize| -> Result<u32> {
            field(i)?
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("row {}: column {i}: {e}", line + 1)))
        };
        let mut cover = Vec::with_capacity(registry.count());
        for i in 0..registry.count() {
            let v: f64 = field(3 + i)?
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("row {}: column {}: {e}", line + 1, 3 + i)))?;
            cover.push(v);
        }
        let ann = Annotation {
            unit: int(0)?,
            camera: int(1)?,
            week: int(2)?,
            cover: CoverVector(cover),
        };
        validate_week(ann.week)?;
        rows.push(ann);
    }
    Ok((registry, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_examples() {
        assert!(validate_cover(&CoverVector::zeros(9)).is_ok());
        let mut v = vec![0.0; 9];
        v[4] = 101.0;
        let err = validate_cover(&CoverVector(v)).unwrap_err();
        assert_eq!(err.0, vec![(4, 101.0)]);
        // two full-scale species: sum 200 is legitimate
        let mut v = vec![0.0; 9];
        v[0] = 100.0;
        v[6] = 100.0;
        let v = CoverVector(v);
        assert_eq!(v.sum(), 200.0);
        assert!(validate_cover(&v).is_ok());
    }

    #[test]
    fn reports_every_violation() {
        let err = validate_cover(&CoverVector(vec![-1.0, 50.0, f64::NAN, 100.5])).unwrap_err();
        assert_eq!(err.0.len(), 3);
        assert_eq!(err.0[0], (0, -1.0));
        assert_eq!(err.0[1].0, 2);
        assert_eq!(err.0[2], (3, 100.5));
    }

    #[test]
    fn csv_header_and_round_trip() {
        let reg = SpeciesRegistry::default();
        let rows = vec![
            Annotation {
                unit: 3,
                camera: 1,
                week: 7,
                cover: CoverVector(vec![0.5, 1.0, 3.0, 0.0, 10.0, 15.0, 40.0, 25.0, 0.0]),
            },
            Annotation {
                unit: 4,
                camera: 0,
                week: 18,
                cover: CoverVector(vec![0.1 + 0.2; 9]),
            },
        ];
        let mut buf = Vec::new();
        write_annotations_csv(&mut buf, &reg, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "unit,camera,week,Ach_mil,Cen_jac,Lot_cor,Med_lup,Pla_lan,Sco_aut,Tri_pra,Grasses,Dead_litter"
        );
        let (reg2, back) = read_annotations_csv(&buf[..]).unwrap();
        assert_eq!(reg2, reg);
        assert_eq!(back, rows);
    }

    #[test]
    fn csv_rejects_bad_week_and_header() {
        let text = "unit,camera,week,a\n0,0,19,1\n";
        assert!(read_annotations_csv(text.as_bytes()).is_err());
        let text = "unit,cam,week,a\n0,0,1,1\n";
        assert!(matches!(
            read_annotations_csv(text.as_bytes()),
            Err(Error::Parse(_))
        ));
    }
}
