use serde::{Deserialize, Serialize};

use super::{Dendrogram, GeometryError};

/// How the offset `h0` in `-ln(h0 - h)` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum H0Mode {
    /// `h0 = h_max (1 + 1e-6) + 1e-9`, always valid.
    Auto,
    /// `h0 = 1`; fails when some height reaches 1.
    Strict,
    Fixed(f64),
}

impl H0Mode {
    pub fn resolve(&self, h_max: f64) -> Result<f64, GeometryError> {
        let h0 = match *self {
            H0Mode::Auto => h_max * (1.0 + 1e-6) + 1e-9,
            H0Mode::Strict => 1.0,
            H0Mode::Fixed(v) => v,
        };
        if h0 > h_max && h0.is_finite() {
            Ok(h0)
        } else {
            Err(GeometryError::InvalidH0 { h0, h_max })
        }
    }
}

/// Rescaled coupling heights and their summary for one dendrogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcdResult {
    pub h0: f64,
    pub rescaled: Vec<f64>,
    /// The International Coupling Distance.
    pub mean: f64,
    pub median: f64,
}

pub fn icd(dendrogram: &Dendrogram, mode: H0Mode) -> Result<IcdResult, GeometryError> {
    let heights = dendrogram.heights();
    let h_max = heights
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or(GeometryError::NoMerges)?;
    icd_from_heights(&heights, mode.resolve(h_max)?)
}

/// `h -> -ln(h0 - h)` over `heights`, with mean and median.
pub fn icd_from_heights(heights: &[f64], h0: f64) -> Result<IcdResult, GeometryError> {
    let h_max = heights
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or(GeometryError::NoMerges)?;
    if h0.partial_cmp(&h_max) != Some(std::cmp::Ordering::Greater) {
        return Err(GeometryError::InvalidH0 { h0, h_max });
    }
    let rescaled: Vec<f64> = heights.iter().map(|h| -(h0 - h).ln()).collect();
    let mean = rescaled.iter().sum::<f64>() / rescaled.len() as f64;
    let mut sorted = rescaled.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    };
    Ok(IcdResult {
        h0,
        rescaled,
        mean,
        median,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_height() {
        let r = icd_from_heights(&[0.9], 1.0).unwrap();
        assert!((r.mean - std::f64::consts::LN_10).abs() < 1e-12);
        assert_eq!(r.mean, r.median);
    }

    #[test]
    fn constant_heights() {
        let r = icd_from_heights(&[0.4; 5], 1.0).unwrap();
        assert!((r.mean + 0.6f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn lowering_heights_lowers_icd() {
        let a = icd_from_heights(&[0.2, 0.5, 0.8], 1.0).unwrap();
        let b = icd_from_heights(&[0.1, 0.4, 0.7], 1.0).unwrap();
        assert!(b.mean < a.mean);
    }

    #[test]
    fn h0_domain() {
        assert!(matches!(
            icd_from_heights(&[1.0], 1.0),
            Err(GeometryError::InvalidH0 { .. })
        ));
        assert!(matches!(
            H0Mode::Strict.resolve(1.2),
            Err(GeometryError::InvalidH0 { .. })
        ));
        assert_eq!(H0Mode::Strict.resolve(0.9).unwrap(), 1.0);
        let h0 = H0Mode::Auto.resolve(1.2).unwrap();
        assert!(h0 > 1.2 && h0 < 1.2001);
        assert!(H0Mode::Fixed(1.1).resolve(1.2).is_err());
        assert_eq!(icd_from_heights(&[], 1.0), Err(GeometryError::NoMerges));
    }

    #[test]
    fn even_count_median() {
        let r = icd_from_heights(&[0.0, 0.5], 1.0).unwrap();
        assert!((r.median - (0.0 + 2f64.ln()) / 2.0).abs() < 1e-15);
    }
}
