use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Species tracked by the default registry, in output order.
pub const DEFAULT_SPECIES: [&str; 9] = [
    "Ach_mil",
    "Cen_jac",
    "Lot_cor",
    "Med_lup",
    "Pla_lan",
    "Sco_aut",
    "Tri_pra",
    "Grasses",
    "Dead_litter",
];

/// Name of the dead-biomass class plants turn into after senescence.
pub const DEAD_LITTER: &str = "Dead_litter";

/// Ordered list of target classes. Indices into the registry are the species
/// indices used by cover vectors, head rows and probability maps.
///
/// Background and irrelevant are not species; the head appends them as two
/// extra score channels after the last species.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct SpeciesRegistry {
    names: Vec<String>,
}

impl SpeciesRegistry {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::config("species", "registry must not be empty"));
        }
        for (i, name) in names.iter().enumerate() {
            if name.trim().is_empty() {
                return Err(Error::config("species", format!("entry {i} is empty")));
            }
            if names[..i].contains(name) {
                return Err(Error::config("species", format!("duplicate name `{name}`")));
            }
        }
        Ok(Self { names })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn count(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn dead_litter(&self) -> Option<usize> {
        self.index_of(DEAD_LITTER)
    }

    /// Comma-joined names, used in mismatch errors.
    pub fn joined(&self) -> String {
        self.names.join(",")
    }

    pub fn ensure_same(&self, other: &SpeciesRegistry) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::RegistryMismatch {
                expected: self.joined(),
                found: other.joined(),
            })
        }
    }
}

impl Default for SpeciesRegistry {
    fn default() -> Self {
        Self {
            names: DEFAULT_SPECIES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl TryFrom<Vec<String>> for SpeciesRegistry {
    type Error = Error;

    fn try_from(names: Vec<String>) -> Result<Self> {
        Self::new(names)
    }
}

impl From<SpeciesRegistry> for Vec<String> {
    fn from(r: SpeciesRegistry) -> Self {
        r.names
    }
}
