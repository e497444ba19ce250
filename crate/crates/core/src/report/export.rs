use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::ReportError;
use crate::corpus::Period;
use crate::format::sig6;
use crate::geometry::IcdResult;
use crate::metrics::{KdeCurve, YearSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesFormat {
    Csv,
    Json,
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn has_pairs(series: &[YearSeries]) -> bool {
    series.iter().any(|s| s.entity_b.is_some())
}

/// `discipline,entity[,entity_b],year,value,volume,masked`. The `entity_b`
/// column appears when any series is bilateral; masked points leave `value`
/// empty.
pub fn write_series_csv<W: Write>(series: &[YearSeries], out: W) -> Result<(), ReportError> {
    if series.is_empty() {
        return Err(ReportError::EmptySeries);
    }
    let pairs = has_pairs(series);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["discipline", "entity"];
    if pairs {
        header.push("entity_b");
    }
    header.extend(["year", "value", "volume", "masked"]);
    w.write_record(&header)?;
    for s in series {
        for p in &s.points {
            let mut row = vec![s.discipline_id.clone(), s.entity.clone()];
            if pairs {
                row.push(s.entity_b.clone().unwrap_or_default());
            }
            let value = match (p.masked, p.value) {
                (false, Some(v)) => sig6(v),
                _ => String::new(),
            };
            row.extend([p.year.to_string(), value, p.volume.to_string(), p.masked.to_string()]);
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SeriesRowDoc<'a> {
    discipline: &'a str,
    entity: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    entity_b: Option<&'a str>,
    year: i32,
    value: Option<String>,
    volume: u64,
    masked: bool,
}

/// JSON array with the same fields as the CSV; values are the same
/// six-significant-digit strings, `null` when masked.
pub fn write_series_json<W: Write>(series: &[YearSeries], mut out: W) -> Result<(), ReportError> {
    if series.is_empty() {
        return Err(ReportError::EmptySeries);
    }
    let rows: Vec<SeriesRowDoc> = series
        .iter()
        .flat_map(|s| {
            s.points.iter().map(move |p| SeriesRowDoc {
                discipline: &s.discipline_id,
                entity: &s.entity,
                entity_b: s.entity_b.as_deref(),
                year: p.year,
                value: p.value.filter(|_| !p.masked).map(sig6),
                volume: p.volume,
                masked: p.masked,
            })
        })
        .collect();
    serde_json::to_writer_pretty(&mut out, &rows)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Writes `series` to `path` atomically in the requested format.
pub fn export_series(series: &[YearSeries], format: SeriesFormat, path: &Path) -> Result<(), ReportError> {
    let mut buf = Vec::new();
    match format {
        SeriesFormat::Csv => write_series_csv(series, &mut buf)?,
        SeriesFormat::Json => write_series_json(series, &mut buf)?,
    }
    write_atomic(path, &buf)?;
    Ok(())
}

/// Coupling-distance summary of one (discipline, period) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IcdRow {
    pub discipline_id: String,
    pub period: Period,
    pub result: IcdResult,
}

/// `discipline,period,h0,icd_mean,icd_median,merges`.
pub fn write_icd_csv<W: Write>(rows: &[IcdRow], out: W) -> Result<(), ReportError> {
    if rows.is_empty() {
        return Err(ReportError::EmptySeries);
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["discipline", "period", "h0", "icd_mean", "icd_median", "merges"])?;
    for r in rows {
        w.write_record([
            r.discipline_id.clone(),
            r.period.label.clone(),
            sig6(r.result.h0),
            sig6(r.result.mean),
            sig6(r.result.median),
            r.result.rescaled.len().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct IcdRowDoc<'a> {
    discipline: &'a str,
    period: &'a str,
    h0: String,
    icd_mean: String,
    icd_median: String,
    merges: usize,
}

pub fn write_icd_json<W: Write>(rows: &[IcdRow], mut out: W) -> Result<(), ReportError> {
    if rows.is_empty() {
        return Err(ReportError::EmptySeries);
    }
    let docs: Vec<IcdRowDoc> = rows
        .iter()
        .map(|r| IcdRowDoc {
            discipline: &r.discipline_id,
            period: &r.period.label,
            h0: sig6(r.result.h0),
            icd_mean: sig6(r.result.mean),
            icd_median: sig6(r.result.median),
            merges: r.result.rescaled.len(),
        })
        .collect();
    serde_json::to_writer_pretty(&mut out, &docs)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// `discipline,period,x,density` for each period's curve.
pub fn write_kde_csv<W: Write>(discipline_id: &str, curves: &[(Period, KdeCurve)], out: W) -> Result<(), ReportError> {
    if curves.is_empty() {
        return Err(ReportError::EmptySeries);
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["discipline", "period", "x", "density"])?;
    for (period, curve) in curves {
        for (x, density) in &curve.points {
            w.write_record([discipline_id, &period.label, &sig6(*x), &sig6(*density)])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::icd_from_heights;
    use crate::metrics::{apply_min_volume_mask, SeriesPoint};

    fn series() -> YearSeries {
        let points = vec![
            SeriesPoint {
                year: 2000,
                value: Some(0.123456789),
                volume: 150,
                masked: false,
                reason: None,
            },
            SeriesPoint {
                year: 2001,
                value: Some(0.5),
                volume: 20,
                masked: false,
                reason: None,
            },
        ];
        apply_min_volume_mask(YearSeries::new("C1", "US", None, points).unwrap(), 100)
    }

    #[test]
    fn masked_rows_have_empty_value() {
        let mut buf = Vec::new();
        write_series_csv(&[series()], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "discipline,entity,year,value,volume,masked\nC1,US,2000,0.123457,150,false\nC1,US,2001,,20,true\n"
        );
    }

    #[test]
    fn bilateral_header_and_json() {
        let mut s = series();
        s.entity_b = Some("CN".into());
        let mut buf = Vec::new();
        write_series_csv(&[s.clone()], &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("discipline,entity,entity_b,year"));
        let mut buf = Vec::new();
        write_series_json(&[s], &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v[0]["value"], "0.123457");
        assert!(v[1]["value"].is_null());
        assert_eq!(v[1]["entity_b"], "CN");
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(
            write_series_csv(&[], Vec::new()),
            Err(ReportError::EmptySeries)
        ));
    }

    #[test]
    fn export_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        export_series(&[series()], SeriesFormat::Csv, &a).unwrap();
        export_series(&[series()], SeriesFormat::Csv, &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 2);
    }

    #[test]
    fn icd_collection_over_ten_periods() {
        let rows: Vec<IcdRow> = Period::paper_ten()
            .into_iter()
            .enumerate()
            .map(|(i, period)| IcdRow {
                discipline_id: "C1".into(),
                period,
                result: icd_from_heights(&[0.1 * i as f64, 0.5], 1.0).unwrap(),
            })
            .collect();
        let mut buf = Vec::new();
        write_icd_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 11);
        assert!(lines[1].starts_with("C1,1971-1975,1,"));
        assert!(lines[10].starts_with("C1,2016-2020,1,"));
    }
}
