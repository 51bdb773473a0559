use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One leave-two-units-out split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub fold_index: usize,
    pub test_units: Vec<u32>,
    pub train_units: Vec<u32>,
}

impl FoldSpec {
    pub fn is_test(&self, unit: u32) -> bool {
        self.test_units.contains(&unit)
    }

    pub fn is_train(&self, unit: u32) -> bool {
        self.train_units.contains(&unit)
    }
}

/// Shuffles `unit_ids` with `seed` and pairs them up, one fold per pair.
pub fn make_folds(unit_ids: &[u32], seed: u64) -> Result<Vec<FoldSpec>> {
    let distinct: BTreeSet<u32> = unit_ids.iter().copied().collect();
    if distinct.len() != unit_ids.len() {
        return Err(Error::config("units", "unit ids must be distinct"));
    }
    if unit_ids.len() < 4 || !unit_ids.len().is_multiple_of(2) {
        return Err(Error::config(
            "units",
            format!(
                "need an even number of at least 4 units, got {}",
                unit_ids.len()
            ),
        ));
    }
    let mut order: Vec<u32> = distinct.into_iter().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(order
        .chunks(2)
        .enumerate()
        .map(|(fold_index, pair)| {
            let mut test_units = pair.to_vec();
            test_units.sort_unstable();
            let mut train_units: Vec<u32> = order
                .iter()
                .copied()
                .filter(|u| !test_units.contains(u))
                .collect();
            train_units.sort_unstable();
            FoldSpec {
                fold_index,
                test_units,
                train_units,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition() {
        let ids: Vec<u32> = (0..24).collect();
        let folds = make_folds(&ids, 5).unwrap();
        assert_eq!(folds.len(), 12);
        let mut seen = BTreeSet::new();
        for f in &folds {
            assert_eq!(f.test_units.len(), 2);
            assert_eq!(f.train_units.len(), 22);
            for u in &f.test_units {
                assert!(seen.insert(*u));
                assert!(!f.is_train(*u));
            }
        }
        assert_eq!(seen.len(), 24);
        assert_eq!(folds, make_folds(&ids, 5).unwrap());
        assert_ne!(folds, make_folds(&ids, 6).unwrap());
    }

    #[test]
    fn small_and_invalid() {
        assert_eq!(make_folds(&[3, 1, 4, 9], 0).unwrap().len(), 2);
        assert!(make_folds(&[1, 2, 3], 0).is_err());
        assert!(make_folds(&[1, 1, 2, 3], 0).is_err());
        assert!(make_folds(&[1, 2], 0).is_err());
    }
}
