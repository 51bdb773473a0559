use serde::{Deserialize, Serialize};

use crate::cover::MAX_WEEK;
use crate::error::{Error, Result};
use crate::kv::{parse_kv, parse_list, parse_value};
use crate::registry::DEFAULT_SPECIES;

/// Number of living species the simulator plants (every default species but
/// dead litter).
pub const LIVING_SPECIES: usize = DEFAULT_SPECIES.len() - 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub width: usize,
    pub height: usize,
    pub wall_thickness: u32,
    pub units: u32,
    pub cameras: u32,
    pub weeks: u32,
    /// Expected share of living leaf area per species, in registry order.
    /// Sums to 1.
    pub mixture: Vec<f64>,
    /// Log-normal sd of the per-unit jitter applied to `mixture`.
    pub unit_jitter: f64,
    /// Mean number of leaves per camera scene.
    pub leaves_per_scene: u32,
    /// Final major semi-axis range in pixels, before per-species scaling.
    pub leaf_radius: [f64; 2],
    /// Latest week a leaf can emerge in.
    pub emergence_max_week: u32,
    /// Weeks between emergence and the logistic midpoint of leaf growth.
    pub growth_lag: f64,
    /// Logistic growth time scale, in weeks.
    pub growth_scale: f64,
    pub senescence_onset: u32,
    /// Fraction of leaves that have turned into dead litter by the last week.
    pub senescence_fraction: f64,
    /// Radius factor applied to a leaf once it is dead.
    pub senescence_shrink: f64,
    /// Optional occlusion ramp: leaves drift towards an anchor leaf of another
    /// species by a factor rising linearly from the first to the second value
    /// over the weeks.
    pub overlap_ramp: Option<[f64; 2]>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            width: 192,
            height: 96,
            wall_thickness: 6,
            units: 24,
            cameras: 2,
            weeks: MAX_WEEK,
            // Ach_mil, Cen_jac, Lot_cor, Med_lup, Pla_lan, Sco_aut, Tri_pra, Grasses
            mixture: vec![0.027, 0.10, 0.08, 0.08, 0.09, 0.08, 0.39, 0.153],
            unit_jitter: 0.4,
            leaves_per_scene: 80,
            leaf_radius: [5.0, 12.0],
            emergence_max_week: 8,
            growth_lag: 2.5,
            growth_scale: 1.2,
            senescence_onset: 14,
            senescence_fraction: 0.5,
            senescence_shrink: 0.8,
            overlap_ramp: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width < 64 || self.height < 32 {
            return Err(Error::config(
                "image_size",
                format!("{}x{} is below the 64x32 minimum", self.width, self.height),
            ));
        }
        if 2 * self.wall_thickness as usize >= self.width.min(self.height) {
            return Err(Error::config("wall_thickness", "walls leave no interior"));
        }
        if self.units == 0 {
            return Err(Error::config("units", "must be at least 1"));
        }
        if self.cameras == 0 {
            return Err(Error::config("cameras", "must be at least 1"));
        }
        if !(1..=MAX_WEEK).contains(&self.weeks) {
            return Err(Error::config("weeks", format!("must be in 1..={MAX_WEEK}")));
        }
        if self.mixture.len() != LIVING_SPECIES {
            return Err(Error::config(
                "mixture",
                format!(
                    "expected {LIVING_SPECIES} weights, got {}",
                    self.mixture.len()
                ),
            ));
        }
        if self.mixture.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::config(
                "mixture",
                "weights must be finite and non-negative",
            ));
        }
        let total: f64 = self.mixture.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                "mixture",
                format!("weights sum to {total}, not 1"),
            ));
        }
        if !(self.unit_jitter >= 0.0 && self.unit_jitter.is_finite()) {
            return Err(Error::config(
                "unit_jitter",
                "must be finite and non-negative",
            ));
        }
        if self.leaves_per_scene == 0 {
            return Err(Error::config("leaves_per_scene", "must be at least 1"));
        }
        let [r0, r1] = self.leaf_radius;
        if !(r0 > 0.0 && r1 >= r0 && r1.is_finite()) {
            return Err(Error::config("leaf_radius", "need 0 < min <= max"));
        }
        if self.emergence_max_week == 0 {
            return Err(Error::config("emergence_max_week", "must be at least 1"));
        }
        if !(self.growth_scale > 0.0 && self.growth_lag.is_finite()) {
            return Err(Error::config("growth_scale", "must be positive"));
        }
        if self.senescence_onset == 0 {
            return Err(Error::config("senescence_onset", "weeks start at 1"));
        }
        if !(0.0..=1.0).contains(&self.senescence_fraction) {
            return Err(Error::config("senescence_fraction", "must be in [0, 1]"));
        }
        if !(self.senescence_shrink > 0.0 && self.senescence_shrink <= 1.0) {
            return Err(Error::config("senescence_shrink", "must be in (0, 1]"));
        }
        if let Some([a, b]) = self.overlap_ramp {
            if !((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b)) {
                return Err(Error::config("overlap_ramp", "endpoints must be in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Overrides fields from a `key = value` document.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (k, v) in parse_kv(text)? {
            match k.as_str() {
                "width" => self.width = parse_value(&k, &v)?,
                "height" => self.height = parse_value(&k, &v)?,
                "wall_thickness" => self.wall_thickness = parse_value(&k, &v)?,
                "units" => self.units = parse_value(&k, &v)?,
                "cameras" => self.cameras = parse_value(&k, &v)?,
                "weeks" => self.weeks = parse_value(&k, &v)?,
                "mixture" => self.mixture = parse_list(&k, &v)?,
                "unit_jitter" => self.unit_jitter = parse_value(&k, &v)?,
                "leaves_per_scene" => self.leaves_per_scene = parse_value(&k, &v)?,
                "leaf_radius" => {
                    let r: Vec<f64> = parse_list(&k, &v)?;
                    self.leaf_radius = r
                        .try_into()
                        .map_err(|_| Error::config(&k, "expected `min, max`"))?;
                }
                "emergence_max_week" => self.emergence_max_week = parse_value(&k, &v)?,
                "growth_lag" => self.growth_lag = parse_value(&k, &v)?,
                "growth_scale" => self.growth_scale = parse_value(&k, &v)?,
                "senescence_onset" => self.senescence_onset = parse_value(&k, &v)?,
                "senescence_fraction" => self.senescence_fraction = parse_value(&k, &v)?,
                "senescence_shrink" => self.senescence_shrink = parse_value(&k, &v)?,
                "overlap_ramp" => {
                    self.overlap_ramp = if v == "none" {
                        None
                    } else {
                        let r: Vec<f64> = parse_list(&k, &v)?;
                        Some(
                            r.try_into()
                                .map_err(|_| Error::config(&k, "expected `start, end`"))?,
                        )
                    }
                }
                _ => return Err(Error::config(k, "unknown simulator setting")),
            }
        }
        self.validate()
    }
}
