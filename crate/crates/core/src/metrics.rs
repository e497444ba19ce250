//! Yearly indicators: work volumes, international collaboration rates,
//! rescaled bilateral distances, and kernel density estimates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CountTable;
use crate::geometry::jaccard_distance;

/// Default minimum volume below which points are hidden.
pub const DEFAULT_MIN_VOLUME: u64 = 100;

/// Default number of KDE grid points.
pub const KDE_GRID_POINTS: usize = 512;

/// The KDE grid extends this many bandwidths beyond the data range.
pub const KDE_CUT: f64 = 4.0;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("entity {entity:?} has no works in {year}")]
    EmptyEntityYear { entity: String, year: i32 },
    #[error("kernel density estimate needs at least 2 values, got {0}")]
    TooFewValues(usize),
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("years must be strictly increasing")]
    UnorderedYears,
}

/// Single-year count tables keyed by year.
pub type YearTables = BTreeMap<i32, CountTable>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskReason {
    BelowMinVolume,
    /// `D = 1`, so the rescaled distance is infinite.
    DegenerateDistance,
    /// The entity has no works that year.
    NoWorks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub year: i32,
    /// `None` only when no finite value exists.
    pub value: Option<f64>,
    /// Count the visibility filter is applied to.
    pub volume: u64,
    pub masked: bool,
    pub reason: Option<MaskReason>,
}

impl SeriesPoint {
    fn shown(year: i32, value: f64, volume: u64) -> Self {
        SeriesPoint {
            year,
            value: Some(value),
            volume,
            masked: false,
            reason: None,
        }
    }

    fn hidden(year: i32, volume: u64, reason: MaskReason) -> Self {
        SeriesPoint {
            year,
            value: None,
            volume,
            masked: true,
            reason: Some(reason),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearSeries {
    pub discipline_id: String,
    pub entity: String,
    pub entity_b: Option<String>,
    pub points: Vec<SeriesPoint>,
}

impl YearSeries {
    pub fn new(
        discipline_id: impl Into<String>,
        entity: impl Into<String>,
        entity_b: Option<String>,
        points: Vec<SeriesPoint>,
    ) -> Result<Self, MetricsError> {
        if points.windows(2).any(|w| w[0].year >= w[1].year) {
            return Err(MetricsError::UnorderedYears);
        }
        Ok(YearSeries {
            discipline_id: discipline_id.into(),
            entity: entity.into(),
            entity_b,
            points,
        })
    }

    pub fn visible(&self) -> impl Iterator<Item = &SeriesPoint> {
        self.points.iter().filter(|p| !p.masked)
    }
}

/// Share of X's works carrying two or more nationalities. Works of unknown
/// nationality never contain X, so they are outside the denominator.
pub fn intl_collab_rate(table: &CountTable, entity: &str) -> Result<f64, MetricsError> {
    let n = table.unary_count(entity);
    if n == 0 {
        return Err(MetricsError::EmptyEntityYear {
            entity: entity.to_string(),
            year: table.period.year_from,
        });
    }
    Ok(table.international_count(entity) as f64 / n as f64)
}

fn discipline_of(tables: &YearTables) -> String {
    tables
        .values()
        .next()
        .map(|t| t.discipline_id.clone())
        .unwrap_or_default()
}

/// Yearly `n_X`, masked below `min_volume`.
pub fn work_volume_series(tables: &YearTables, entity: &str, min_volume: u64) -> YearSeries {
    let points = tables
        .iter()
        .map(|(&year, t)| {
            let n = t.unary_count(entity);
            SeriesPoint::shown(year, n as f64, n)
        })
        .collect();
    let series = YearSeries::new(discipline_of(tables), entity, None, points).expect("BTreeMap keys are ordered");
    apply_min_volume_mask(series, min_volume)
}

/// Yearly international collaboration rate, masked where `n_X < min_volume`.
pub fn intl_collab_series(tables: &YearTables, entity: &str, min_volume: u64) -> YearSeries {
    let points = tables
        .iter()
        .map(|(&year, t)| match intl_collab_rate(t, entity) {
            Ok(rate) => SeriesPoint::shown(year, rate, t.unary_count(entity)),
            Err(_) => SeriesPoint::hidden(year, 0, MaskReason::NoWorks),
        })
        .collect();
    let series = YearSeries::new(discipline_of(tables), entity, None, points).expect("BTreeMap keys are ordered");
    apply_min_volume_mask(series, min_volume)
}

/// Yearly share of works with no known nationality; volume is the total.
pub fn unknown_rate_series(tables: &YearTables) -> YearSeries {
    let points = tables
        .iter()
        .map(|(&year, t)| match t.unknown_rate() {
            Ok(rate) => SeriesPoint::shown(year, rate, t.total_count),
            Err(_) => SeriesPoint::hidden(year, 0, MaskReason::NoWorks),
        })
        .collect();
    YearSeries::new(discipline_of(tables), "unknown", None, points).expect("BTreeMap keys are ordered")
}

/// Hides points whose volume is below `threshold`. Values are kept; points
/// hidden for other reasons stay hidden.
pub fn apply_min_volume_mask(mut series: YearSeries, threshold: u64) -> YearSeries {
    for p in &mut series.points {
        if p.reason == Some(MaskReason::BelowMinVolume) {
            p.masked = false;
            p.reason = None;
        }
        if !p.masked && p.volume < threshold {
            p.masked = true;
            p.reason = Some(MaskReason::BelowMinVolume);
        }
    }
    series
}

/// `D -> -ln(1 - D)`; `None` at `D = 1`.
pub fn rescaled_distance(d: f64) -> Option<f64> {
    (d < 1.0).then(|| -(1.0 - d).ln())
}

/// Yearly rescaled Jaccard distance between X and Y, masked where the
/// co-count `n_{X,Y}` is below `min_volume`.
pub fn bilateral_distance_series(tables: &YearTables, x: &str, y: &str, min_volume: u64) -> YearSeries {
    let points = tables
        .iter()
        .map(|(&year, t)| {
            let (nx, ny, nxy) = (t.unary_count(x), t.unary_count(y), t.pair_count(x, y));
            match jaccard_distance(nx, ny, nxy).ok().map(rescaled_distance) {
                Some(Some(v)) => SeriesPoint::shown(year, v, nxy),
                Some(None) => SeriesPoint::hidden(year, nxy, MaskReason::DegenerateDistance),
                None => SeriesPoint::hidden(year, nxy, MaskReason::NoWorks),
            }
        })
        .collect();
    let series =
        YearSeries::new(discipline_of(tables), x, Some(y.to_string()), points).expect("BTreeMap keys are ordered");
    apply_min_volume_mask(series, min_volume)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bandwidth {
    Silverman,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeCurve {
    pub bandwidth: f64,
    /// `(x, density)` on an evenly spaced grid.
    pub points: Vec<(f64, f64)>,
}

impl KdeCurve {
    /// Trapezoid-rule integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
            .sum()
    }

    pub fn peak(&self) -> (f64, f64) {
        self.points.iter().copied().fold(
            (f64::NAN, f64::NEG_INFINITY),
            |best, p| if p.1 > best.1 { p } else { best },
        )
    }
}

/// Sample quantile with linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule of thumb `0.9 min(sd, IQR / 1.34) n^(-1/5)`, falling back
/// to the standard deviation, then `|x_1|`, then 1 when the spread is zero.
pub fn silverman_bandwidth(values: &[f64]) -> Result<f64, MetricsError> {
    let n = values.len();
    if n < 2 {
        return Err(MetricsError::TooFewValues(n));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let mut spread = sd.min(iqr / 1.34);
    if spread <= 0.0 {
        spread = if sd > 0.0 {
            sd
        } else if values[0] != 0.0 {
            values[0].abs()
        } else {
            1.0
        };
    }
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

/// Gaussian kernel density estimate on `grid_points` evenly spaced points over
/// `[min - KDE_CUT bw, max + KDE_CUT bw]`.
pub fn kde(values: &[f64], bandwidth: Bandwidth, grid_points: usize) -> Result<KdeCurve, MetricsError> {
    if values.len() < 2 {
        return Err(MetricsError::TooFewValues(values.len()));
    }
    let bw = match bandwidth {
        Bandwidth::Silverman => silverman_bandwidth(values)?,
        Bandwidth::Fixed(b) => b,
    };
    if !(bw > 0.0 && bw.is_finite()) {
        return Err(MetricsError::InvalidBandwidth(bw));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min) - KDE_CUT * bw;
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + KDE_CUT * bw;
    let m = grid_points.max(2);
    let step = (hi - lo) / (m - 1) as f64;
    let norm = 1.0 / (values.len() as f64 * bw * (2.0 * std::f64::consts::PI).sqrt());
    let points = (0..m)
        .map(|k| {
            let x = lo + step * k as f64;
            let density = values
                .iter()
                .map(|v| (-0.5 * ((x - v) / bw).powi(2)).exp())
                .sum::<f64>()
                * norm;
            (x, density)
        })
        .collect();
    Ok(KdeCurve { bandwidth: bw, points })
}
