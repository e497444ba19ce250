//! Harvest, analyze and report stages.
//!
//! Every stage computes its files in memory and writes them only once the
//! whole stage has succeeded.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use collab_core::corpus::{CountTable, Period, WorkRecord};
use collab_core::geometry::{
    cut_clusters, euclidean_embedding, icd_from_heights, ward_cluster, Dendrogram, DistanceMatrix, IcdResult,
};
use collab_core::metrics::{
    bilateral_distance_series, intl_collab_series, kde, unknown_rate_series, work_volume_series, Bandwidth, KdeCurve,
    YearSeries, YearTables, KDE_GRID_POINTS,
};
use collab_core::report::{
    chord_data, render_circular_dendrogram, write_atomic, write_icd_csv, write_icd_json, write_kde_csv,
    write_series_csv, IcdRow, SvgLayout,
};
use collab_ingest::{
    expand_concept, harvest, ClientConfig, ConceptCatalog, FetchMode, HttpTransport, OpenAlexClient, PageCache,
};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::IcdEntities;
use crate::manifest::{sha256_hex, Inputs, Manifest};
use crate::{AnalysisConfig, CliError};

pub const RECORDS_DIR: &str = "records";
pub const INPUTS_FILE: &str = "records/inputs.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Harvest,
    Analyze,
    Report,
    All,
}

/// Relative path to file contents.
pub type Files = BTreeMap<String, Vec<u8>>;

/// Works per discipline together with the inputs they came from.
#[derive(Debug, Clone, Default)]
pub struct Harvested {
    pub records: BTreeMap<String, Vec<WorkRecord>>,
    pub inputs: Inputs,
}

fn records_path(discipline: &str) -> String {
    format!("{RECORDS_DIR}/{discipline}.jsonl")
}

fn check(config: &AnalysisConfig) -> Result<(), CliError> {
    let diagnostics = config.validate();
    if diagnostics.is_empty() {
        Ok(())
    } else {
        Err(CliError::Config(diagnostics))
    }
}

/// Fetches (or replays from the cache) every work of every configured discipline.
pub fn harvest_records(
    config: &AnalysisConfig,
    transport: Arc<dyn HttpTransport>,
    mode: FetchMode,
) -> Result<Harvested, CliError> {
    let cache = PageCache::new(&config.cache_dir);
    if mode == FetchMode::Offline && !cache.is_populated() {
        return Err(CliError::MissingFixtures(config.cache_dir.display().to_string()));
    }
    let client = OpenAlexClient::new(
        transport,
        cache,
        ClientConfig {
            requests_per_second: config.requests_per_second,
            mode,
            ..ClientConfig::default()
        },
    );

    let disciplines = config.discipline_ids();
    let mut inputs = Inputs::default();
    let catalog = match &config.catalog {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
            inputs.catalog_sha256 = Some(sha256_hex(&bytes));
            ConceptCatalog::load(path)?
        }
        None => client.build_catalog(&disciplines, config.expansion, config.max_concepts)?,
    };
    let (from, to) = config.year_span().expect("validated config has periods");

    let mut harvested = Harvested::default();
    for discipline in &disciplines {
        let concepts = expand_concept(discipline, &catalog, config.expansion)?;
        info!("{discipline}: {} concepts, years {from}-{to}", concepts.len());
        let before = client.touched();
        let mut records =
            harvest(&client, discipline, &concepts, (from, to), config.journal_only).collect::<Result<Vec<_>, _>>()?;
        records.sort_by(|a, b| a.work_id.cmp(&b.work_id));
        info!("{discipline}: {} works", records.len());
        let pages: Vec<String> = client.touched().difference(&before).cloned().collect();
        inputs.pages.insert(discipline.clone(), pages);
        harvested.records.insert(discipline.clone(), records);
    }
    harvested.inputs = inputs;
    Ok(harvested)
}

fn harvest_files(harvested: &Harvested) -> Files {
    let mut files = Files::new();
    for (discipline, records) in &harvested.records {
        let mut text = String::new();
        for r in records {
            text.push_str(&serde_json::to_string(r).expect("record serializes"));
            text.push('\n');
        }
        files.insert(records_path(discipline), text.into_bytes());
    }
    files.insert(INPUTS_FILE.to_string(), json_bytes(&harvested.inputs));
    files
}

/// Reads back the records written by the harvest stage.
pub fn load_harvest(config: &AnalysisConfig) -> Result<Harvested, CliError> {
    let out = &config.out_dir;
    let missing = |path: &Path, e: std::io::Error| {
        CliError::io(format!("reading {} (run `collab harvest` first)", path.display()), e)
    };
    let inputs_path = out.join(INPUTS_FILE);
    let inputs = std::fs::read_to_string(&inputs_path).map_err(|e| missing(&inputs_path, e))?;
    let inputs: Inputs = serde_json::from_str(&inputs).map_err(|e| CliError::analysis("records", e))?;
    let mut harvested = Harvested {
        records: BTreeMap::new(),
        inputs,
    };
    for discipline in config.discipline_ids() {
        let path = out.join(records_path(&discipline));
        let text = std::fs::read_to_string(&path).map_err(|e| missing(&path, e))?;
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<Vec<WorkRecord>, _>>()
            .map_err(|e| CliError::analysis(format!("parsing {}", path.display()), e))?;
        harvested.records.insert(discipline, records);
    }
    Ok(harvested)
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("serializes");
    text.push('\n');
    text.into_bytes()
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> Result<(), CliError>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

/// Per-cell numbers other than the files themselves.
#[derive(Debug, Clone, Serialize)]
struct CellSummary {
    discipline: String,
    period: String,
    key: String,
    total_works: u64,
    unknown_works: u64,
    entities: Vec<String>,
    embeddable: bool,
    min_eigenvalue: f64,
    clamped_eigenvalues: usize,
    h_star: f64,
    cluster_count: usize,
    h0: f64,
    icd_mean: f64,
    icd_median: f64,
}

struct Clustered {
    entities: Vec<String>,
    matrix: DistanceMatrix,
    tree: Dendrogram,
}

fn cluster(table: &CountTable, entities: Vec<String>, context: &str) -> Result<Clustered, CliError> {
    if entities.len() < 2 {
        return Err(CliError::analysis(
            context,
            format!(
                "only {} entities with works; clustering needs at least two",
                entities.len()
            ),
        ));
    }
    let matrix = DistanceMatrix::from_table(table, &entities).map_err(|e| CliError::analysis(context, e))?;
    let tree = ward_cluster(&matrix).map_err(|e| CliError::analysis(context, e))?;
    Ok(Clustered { entities, matrix, tree })
}

fn slice_tables(yearly: &YearTables, period: &Period) -> YearTables {
    yearly
        .range(period.year_from..=period.year_to)
        .map(|(y, t)| (*y, t.clone()))
        .collect()
}

fn render_svg(tree: &Dendrogram, table: &CountTable, h_star: f64) -> String {
    let cut = cut_clusters(tree, h_star);
    let volumes: BTreeMap<String, u64> = tree
        .leaves()
        .iter()
        .map(|l| (l.clone(), table.unary_count(l)))
        .collect();
    render_circular_dendrogram(tree, &cut, &volumes, &SvgLayout::default())
}

fn analyze_cell(
    config: &AnalysisConfig,
    discipline: &str,
    period: &Period,
    records: &[WorkRecord],
    yearly: &YearTables,
) -> Result<(Files, IcdRow), CliError> {
    let context = format!("{discipline} {}", period.label);
    let dir = format!("{discipline}/{}", period.label);
    let table = CountTable::build(records, discipline, period, config.key);
    let Clustered { entities, matrix, tree } = cluster(&table, table.top_entities(config.top_n), &context)?;
    let embedding = euclidean_embedding(&matrix);
    if !embedding.embeddable {
        warn!("{context}: distance matrix is not Euclidean-embeddable");
    }
    let cut = cut_clusters(&tree, config.h_star);
    let icd = collab_core::geometry::icd(&tree, config.h0.mode()).map_err(|e| CliError::analysis(&context, e))?;

    let mut files = Files::new();
    let mut put = |name: &str, bytes: Vec<u8>| {
        files.insert(format!("{dir}/{name}"), bytes);
    };
    put("counts.json", (table.to_json() + "\n").into_bytes());
    put("unary.csv", csv_bytes(|b| Ok(table.write_unary_csv(b)?))?);
    put("pairwise.csv", csv_bytes(|b| Ok(table.write_pairwise_csv(b)?))?);
    put(
        "distance.csv",
        csv_bytes(|b| matrix.write_csv(b).map_err(|e| CliError::io("distance.csv", e)))?,
    );
    put("merges.json", (tree.to_json() + "\n").into_bytes());
    put("dendrogram.newick", (tree.to_newick() + "\n").into_bytes());
    put("clusters.csv", clusters_csv(&tree, &cut.labels, &table));

    let chord = chord_data(&table, records, config.top_n);
    put(
        "chord.csv",
        csv_bytes(|b| chord.write_csv(b).map_err(|e| CliError::analysis("chord.csv", e)))?,
    );

    let tables = slice_tables(yearly, period);
    let series: Vec<YearSeries> = entities
        .iter()
        .take(config.series_top)
        .map(|x| intl_collab_series(&tables, x, config.min_volume))
        .collect();
    put("series.csv", csv_bytes(|b| Ok(write_series_csv(&series, b)?))?);

    let top: Vec<&String> = entities.iter().take(config.bilateral_top).collect();
    let mut bilateral = Vec::new();
    for (i, x) in top.iter().enumerate() {
        for y in &top[i + 1..] {
            let (a, b) = if x < y { (x, y) } else { (y, x) };
            bilateral.push(bilateral_distance_series(&tables, a, b, config.min_volume));
        }
    }
    put("bilateral.csv", csv_bytes(|b| Ok(write_series_csv(&bilateral, b)?))?);

    let row = IcdRow {
        discipline_id: discipline.to_string(),
        period: period.clone(),
        result: icd.clone(),
    };
    put(
        "icd.csv",
        csv_bytes(|b| Ok(write_icd_csv(std::slice::from_ref(&row), b)?))?,
    );

    let summary = CellSummary {
        discipline: discipline.to_string(),
        period: period.label.clone(),
        key: config.key.to_string(),
        total_works: table.total_count,
        unknown_works: table.unknown_count,
        entities: entities.clone(),
        embeddable: embedding.embeddable,
        min_eigenvalue: embedding.min_eigenvalue(),
        clamped_eigenvalues: embedding.clamped,
        h_star: config.h_star,
        cluster_count: cut.count,
        h0: icd.h0,
        icd_mean: icd.mean,
        icd_median: icd.median,
    };
    put("cell.json", json_bytes(&summary));
    put("dendrogram.svg", render_svg(&tree, &table, config.h_star).into_bytes());
    Ok((files, row))
}

fn clusters_csv(tree: &Dendrogram, labels: &[usize], table: &CountTable) -> Vec<u8> {
    let mut text = String::from("entity,cluster,volume\n");
    for leaf in tree.leaf_order() {
        let name = &tree.leaves()[leaf];
        text.push_str(&format!(
            "{},{},{}\n",
            csv_field(name),
            labels[leaf],
            table.unary_count(name)
        ));
    }
    text.into_bytes()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

type IcdOutputs = (Vec<IcdRow>, Vec<(Period, KdeCurve)>);

/// ICD over the configured windows with one shared `h0`.
fn icd_windows(config: &AnalysisConfig, discipline: &str, records: &[WorkRecord]) -> Result<IcdOutputs, CliError> {
    let periods = config.analysis_periods();
    let windows = config.icd_windows();
    let trees = windows
        .par_iter()
        .map(|w| {
            let context = format!("{discipline} ICD window {}", w.label);
            let table = CountTable::build(records, discipline, w, config.key);
            let entities = match config.icd_entities {
                IcdEntities::PerWindow => table.top_entities(config.top_n),
                IcdEntities::EnclosingPeriod => {
                    let enclosing = periods
                        .iter()
                        .find(|p| p.year_from <= w.year_from && w.year_to <= p.year_to)
                        .expect("validated: every window lies in a period");
                    CountTable::build(records, discipline, enclosing, config.key)
                        .top_entities(config.top_n)
                        .into_iter()
                        .filter(|e| table.unary_count(e) > 0)
                        .collect()
                }
            };
            Ok(cluster(&table, entities, &context)?.tree)
        })
        .collect::<Result<Vec<Dendrogram>, CliError>>()?;

    let h_max = trees
        .iter()
        .filter_map(Dendrogram::max_height)
        .fold(f64::NEG_INFINITY, f64::max);
    let h0 = config
        .h0
        .mode()
        .resolve(h_max)
        .map_err(|e| CliError::analysis(format!("{discipline} ICD windows"), e))?;

    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for (w, tree) in windows.iter().zip(&trees) {
        let result: IcdResult = icd_from_heights(&tree.heights(), h0).map_err(|e| CliError::analysis(&w.label, e))?;
        if result.rescaled.len() >= 2 {
            curves.push((w.clone(), kde(&result.rescaled, Bandwidth::Silverman, KDE_GRID_POINTS)?));
        } else {
            warn!("{discipline} {}: a single merge has no density", w.label);
        }
        rows.push(IcdRow {
            discipline_id: discipline.to_string(),
            period: w.clone(),
            result,
        });
    }
    Ok((rows, curves))
}

fn analyze_discipline(config: &AnalysisConfig, discipline: &str, records: &[WorkRecord]) -> Result<Files, CliError> {
    let (from, to) = config.year_span().expect("validated config has periods");
    let yearly: YearTables = (from..=to)
        .map(|y| {
            (
                y,
                CountTable::build(records, discipline, &Period::single_year(y), config.key),
            )
        })
        .collect();

    let cells = config
        .analysis_periods()
        .par_iter()
        .map(|p| analyze_cell(config, discipline, p, records, &yearly))
        .collect::<Result<Vec<_>, CliError>>()?;
    let (rows, curves) = icd_windows(config, discipline, records)?;

    let mut files = Files::new();
    let mut cell_rows = Vec::new();
    for (cell_files, row) in cells {
        files.extend(cell_files);
        cell_rows.push(row);
    }
    files.insert(
        format!("{discipline}/icd.csv"),
        csv_bytes(|b| Ok(write_icd_csv(&cell_rows, b)?))?,
    );
    files.insert(
        format!("{discipline}/icd_trend.csv"),
        csv_bytes(|b| Ok(write_icd_csv(&rows, b)?))?,
    );
    files.insert(
        format!("{discipline}/icd_trend.json"),
        csv_bytes(|b| Ok(write_icd_json(&rows, b)?))?,
    );
    if !curves.is_empty() {
        files.insert(
            format!("{discipline}/icd_kde.csv"),
            csv_bytes(|b| Ok(write_kde_csv(discipline, &curves, b)?))?,
        );
    }

    let unknown = unknown_rate_series(&yearly);
    files.insert(
        format!("{discipline}/unknown_rate.csv"),
        csv_bytes(|b| Ok(write_series_csv(std::slice::from_ref(&unknown), b)?))?,
    );
    let overall = CountTable::build(
        records,
        discipline,
        &Period::span(from, to).map_err(|e| CliError::analysis(discipline, e))?,
        config.key,
    );
    let volumes: Vec<YearSeries> = overall
        .top_entities(config.series_top)
        .iter()
        .map(|x| work_volume_series(&yearly, x, config.min_volume))
        .collect();
    if !volumes.is_empty() {
        files.insert(
            format!("{discipline}/volume.csv"),
            csv_bytes(|b| Ok(write_series_csv(&volumes, b)?))?,
        );
    }
    Ok(files)
}

fn pool(config: &AnalysisConfig) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::analysis("worker pool", e))
}

/// Every analysis file for every discipline, figures included.
pub fn analyze(config: &AnalysisConfig, harvested: &Harvested) -> Result<Files, CliError> {
    let disciplines = config.discipline_ids();
    let per_discipline = pool(config)?.install(|| {
        disciplines
            .par_iter()
            .map(|d| {
                let records = harvested.records.get(d).map(Vec::as_slice).unwrap_or_default();
                analyze_discipline(config, d, records)
            })
            .collect::<Result<Vec<Files>, CliError>>()
    })?;
    Ok(per_discipline.into_iter().flatten().collect())
}

/// Re-renders the dendrogram figures from `merges.json` and `counts.json`
/// already in the output tree.
pub fn render_figures(config: &AnalysisConfig) -> Result<Files, CliError> {
    let mut files = Files::new();
    for discipline in config.discipline_ids() {
        for period in config.analysis_periods() {
            let dir = format!("{discipline}/{}", period.label);
            let read = |name: &str| {
                let path = config.out_dir.join(&dir).join(name);
                std::fs::read_to_string(&path)
                    .map_err(|e| CliError::io(format!("reading {} (run `collab analyze` first)", path.display()), e))
            };
            let tree = Dendrogram::from_json(&read("merges.json")?)?;
            let table = CountTable::from_json(&read("counts.json")?)?;
            files.insert(
                format!("{dir}/dendrogram.svg"),
                render_svg(&tree, &table, config.h_star).into_bytes(),
            );
        }
    }
    Ok(files)
}

fn write_files(out_dir: &Path, files: &Files) -> Result<(), CliError> {
    for (rel, bytes) in files {
        let path = out_dir.join(rel);
        write_atomic(&path, bytes).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    }
    Ok(())
}

fn finish(config: &AnalysisConfig, inputs: Inputs, files: &Files) -> Result<Manifest, CliError> {
    write_files(&config.out_dir, files)?;
    let manifest = Manifest::build(config, inputs, &config.out_dir)?;
    manifest.write(&config.out_dir)?;
    Ok(manifest)
}

/// Runs one stage and writes its files plus a fresh manifest.
pub fn run_stage(
    stage: Stage,
    config: &AnalysisConfig,
    transport: Arc<dyn HttpTransport>,
    mode: FetchMode,
) -> Result<Manifest, CliError> {
    check(config)?;
    match stage {
        Stage::Harvest => {
            let harvested = harvest_records(config, transport, mode)?;
            finish(config, harvested.inputs.clone(), &harvest_files(&harvested))
        }
        Stage::Analyze => {
            let harvested = load_harvest(config)?;
            let files = analyze(config, &harvested)?;
            finish(config, harvested.inputs, &files)
        }
        Stage::Report => {
            let inputs = load_harvest(config)?.inputs;
            let files = render_figures(config)?;
            finish(config, inputs, &files)
        }
        Stage::All => run_all(config, transport, mode),
    }
}

/// Harvest, analysis and figures in one pass; nothing is written unless all succeed.
pub fn run_all(
    config: &AnalysisConfig,
    transport: Arc<dyn HttpTransport>,
    mode: FetchMode,
) -> Result<Manifest, CliError> {
    check(config)?;
    let harvested = harvest_records(config, transport, mode)?;
    let mut files = harvest_files(&harvested);
    files.extend(analyze(config, &harvested)?);
    finish(config, harvested.inputs, &files)
}
