//! Quantization of cover estimates onto the Schmidt scale used by field
//! annotators.

use crate::error::{Error, Result};

/// The 19 admissible annotation values, in percent.
pub const SCHMIDT_BINS: [f64; 19] = [
    0.0, 0.5, 1.0, 3.0, 5.0, 8.0, 10.0, 15.0, 20.0, 25.0, 30.0, 40.0, 50.0, 60.0, 70.0, 75.0, 80.0,
    90.0, 100.0,
];

/// Snap a percentage to the nearest Schmidt bin. Exact ties go to the lower bin.
pub fn schmidt_quantize(percent: f64) -> Result<f64> {
    if !(0.0..=100.0).contains(&percent) {
        return Err(Error::Domain {
            value: percent,
            min: 0.0,
            max: 100.0,
        });
    }
    let mut best = SCHMIDT_BINS[0];
    let mut best_dist = (percent - best).abs();
    for &bin in &SCHMIDT_BINS[1..] {
        let dist = (percent - bin).abs();
        // strict: an equal distance keeps the earlier (lower) bin
        if dist < best_dist {
            best = bin;
            best_dist = dist;
        }
    }
    Ok(best)
}

pub fn is_schmidt_bin(percent: f64) -> bool {
    SCHMIDT_BINS.contains(&percent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scale_shape() {
        assert_eq!(SCHMIDT_BINS.len(), 19);
        assert!(SCHMIDT_BINS.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(SCHMIDT_BINS[0], 0.0);
        assert_eq!(SCHMIDT_BINS[18], 100.0);
    }

    #[test]
    fn examples() {
        assert_eq!(schmidt_quantize(0.0).unwrap(), 0.0);
        assert_eq!(schmidt_quantize(100.0).unwrap(), 100.0);
        assert_eq!(schmidt_quantize(12.0).unwrap(), 10.0);
        assert_eq!(schmidt_quantize(2.0).unwrap(), 1.0);
        assert_eq!(schmidt_quantize(12.5).unwrap(), 10.0);
        assert_eq!(schmidt_quantize(12.6).unwrap(), 15.0);
        assert_eq!(schmidt_quantize(0.25).unwrap(), 0.0);
        assert_eq!(schmidt_quantize(72.5).unwrap(), 70.0);
    }

    #[test]
    fn out_of_range() {
        for bad in [-0.1, 100.01, f64::NAN, f64::INFINITY] {
            assert!(
                matches!(schmidt_quantize(bad), Err(Error::Domain { .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn bins_are_fixed_points() {
        for &b in &SCHMIDT_BINS {
            assert_eq!(schmidt_quantize(b).unwrap(), b);
        }
    }

    proptest! {
        #[test]
        fn idempotent_and_closed(p in 0.0f64..=100.0) {
            let q = schmidt_quantize(p).unwrap();
            prop_assert!(is_schmidt_bin(q));
            prop_assert_eq!(schmidt_quantize(q).unwrap(), q);
            // no bin is strictly closer
            for &b in &SCHMIDT_BINS {
                prop_assert!((p - q).abs() <= (p - b).abs());
            }
        }
    }
}
