//! Regenerates the bundled synthetic corpus under `fixtures/`.
//!
//! Run with `cargo run -p collab-cli --example make_fixtures`. The output is a
//! pure function of the seed below, so regenerating leaves the tree unchanged.

use std::fs;
use std::path::Path;

use collab_ingest::{CachedPage, PageCache, WorksQuery};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const SEED: u64 = 20240501;
const PER_PAGE: usize = 200;

/// Country code, sampling weight, bloc.
const COUNTRIES: [(&str, f64, usize); 14] = [
    ("US", 0.22, 0),
    ("GB", 0.08, 0),
    ("CA", 0.05, 0),
    ("AU", 0.03, 0),
    ("DE", 0.08, 1),
    ("FR", 0.06, 1),
    ("IT", 0.05, 1),
    ("ES", 0.04, 1),
    ("NL", 0.03, 1),
    ("CH", 0.02, 1),
    ("CN", 0.18, 2),
    ("JP", 0.07, 2),
    ("KR", 0.04, 2),
    ("IN", 0.05, 2),
];

struct Discipline {
    id: &'static str,
    name: &'static str,
    scale: f64,
    /// (id, name, level, related)
    concepts: &'static [(&'static str, &'static str, u8, &'static [&'static str])],
}

const DISCIPLINES: [Discipline; 2] = [
    Discipline {
        id: "C154945302",
        name: "Artificial intelligence",
        scale: 1.0,
        concepts: &[
            (
                "C154945302",
                "Artificial intelligence",
                1,
                &["C108583219", "C50644808", "C41008148"],
            ),
            ("C108583219", "Deep learning", 2, &["C154945302", "C81363708"]),
            ("C50644808", "Artificial neural network", 2, &["C154945302"]),
            ("C81363708", "Convolutional neural network", 3, &["C108583219"]),
            ("C41008148", "Computer science", 0, &[]),
        ],
    },
    Discipline {
        id: "C62520636",
        name: "Quantum mechanics",
        scale: 0.6,
        concepts: &[
            ("C62520636", "Quantum mechanics", 1, &["C58053490", "C121332964"]),
            ("C58053490", "Quantum computer", 3, &["C62520636"]),
            ("C121332964", "Physics", 0, &[]),
        ],
    },
];

fn pick_country(rng: &mut impl Rng, bloc: Option<usize>) -> &'static str {
    let pool: Vec<&(&str, f64, usize)> = COUNTRIES.iter().filter(|c| bloc.is_none_or(|b| c.2 == b)).collect();
    let total: f64 = pool.iter().map(|c| c.1).sum();
    let mut x = rng.random_range(0.0..total);
    for c in &pool {
        if x < c.1 {
            return c.0;
        }
        x -= c.1;
    }
    pool[pool.len() - 1].0
}

fn institution(rng: &mut impl Rng, country: &str) -> Value {
    let k = rng.random_range(0..3);
    json!({
        "id": format!("https://openalex.org/I{country}{k}"),
        "ror": format!("https://ror.org/0{}{k}", country.to_ascii_lowercase()),
        "country_code": country,
    })
}

fn work(rng: &mut impl Rng, id: String, year: i32) -> Value {
    let progress = (year - 1971) as f64 / 49.0;
    let mut countries = vec![pick_country(rng, None)];
    if rng.random_bool(0.08 + 0.3 * progress) {
        let lead_bloc = COUNTRIES.iter().find(|c| c.0 == countries[0]).map(|c| c.2);
        for _ in 0..rng.random_range(1..=2) {
            let bloc = if rng.random_bool(0.7) { lead_bloc } else { None };
            let c = pick_country(rng, bloc);
            if !countries.contains(&c) {
                countries.push(c);
            }
        }
    }
    let mut authorships = Vec::new();
    if rng.random_bool(0.03) {
        authorships.push(json!({"institutions": [{"id": "https://openalex.org/I0", "country_code": null}]}));
    } else {
        for c in &countries {
            for _ in 0..rng.random_range(1..=2) {
                authorships.push(json!({"institutions": [institution(rng, c)]}));
            }
        }
    }
    let kind = if rng.random_bool(0.05) { "preprint" } else { "article" };
    json!({
        "id": id,
        "publication_year": year,
        "type": kind,
        "primary_location": {"source": {"type": if kind == "article" { "journal" } else { "repository" }}},
        "authorships": authorships,
    })
}

fn write_page(cache: &PageCache, query: &WorksQuery, payload: &str) {
    let fp = query.fingerprint();
    fs::write(cache.payload_path(&fp), payload).unwrap();
    let meta = CachedPage {
        fingerprint: fp.clone(),
        canonical: query.canonical(),
        retrieved_at: 0,
        payload: String::new(),
    };
    fs::write(cache.meta_path(&fp), serde_json::to_string_pretty(&meta).unwrap()).unwrap();
}

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let cache_dir = root.join("cache");
    if cache_dir.exists() {
        fs::remove_dir_all(&cache_dir).unwrap();
    }
    fs::create_dir_all(&cache_dir).unwrap();
    let cache = PageCache::new(&cache_dir);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let mut entries = serde_json::Map::new();
    for (d, discipline) in DISCIPLINES.iter().enumerate() {
        for (id, name, level, related) in discipline.concepts {
            entries.insert(
                id.to_string(),
                json!({"display_name": name, "level": level, "related": related}),
            );
        }

        let mut works = Vec::new();
        for year in 1971..=2020 {
            let n = ((10.0 + 2.6 * (year - 1971) as f64) * discipline.scale).round() as usize;
            for _ in 0..n {
                let id = format!("https://openalex.org/W{}{:06}", d + 1, works.len());
                works.push(work(&mut rng, id, year));
            }
        }

        let concepts: Vec<String> = discipline
            .concepts
            .iter()
            .filter(|c| c.2 >= 1)
            .map(|c| c.0.to_string())
            .collect();
        let query = WorksQuery::new(concepts, 1971, 2020).unwrap();
        let pages: Vec<&[Value]> = works.chunks(PER_PAGE).collect();
        for (i, chunk) in pages.iter().enumerate() {
            let cursor = (i > 0).then(|| format!("{}-page-{}", discipline.id, i + 1));
            let next = (i + 1 < pages.len()).then(|| format!("{}-page-{}", discipline.id, i + 2));
            let payload = json!({
                "meta": {"count": works.len(), "per_page": PER_PAGE, "next_cursor": next},
                "results": chunk,
            });
            write_page(&cache, &query.with_cursor(cursor), &payload.to_string());
        }
        println!(
            "{} ({}): {} works in {} pages",
            discipline.id,
            discipline.name,
            works.len(),
            pages.len()
        );
    }

    let catalog = json!({"entries": entries});
    fs::write(
        root.join("catalog.json"),
        serde_json::to_string_pretty(&catalog).unwrap() + "\n",
    )
    .unwrap();
}
