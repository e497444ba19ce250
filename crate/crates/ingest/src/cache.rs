use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::IngestError;

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Sidecar metadata stored next to each payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachedPage {
    pub fingerprint: String,
    pub canonical: String,
    /// Seconds since the Unix epoch.
    pub retrieved_at: u64,
    #[serde(skip)]
    pub payload: String,
}

/// Directory of `<fingerprint>.json` payloads and `<fingerprint>.meta.json` sidecars.
///
/// Writes go through a uniquely named temp file and a rename, so concurrent
/// writers of different fingerprints never interfere and the last writer of
/// a fingerprint wins.
#[derive(Debug, Clone)]
pub struct PageCache {
    dir: PathBuf,
}

impl PageCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        PageCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn payload_path(&self, fingerprint: &str) -> PathBuf {
        self.dir.join(format!("{fingerprint}.json"))
    }

    pub fn meta_path(&self, fingerprint: &str) -> PathBuf {
        self.dir.join(format!("{fingerprint}.meta.json"))
    }

    /// True when the directory holds at least one cached payload.
    pub fn is_populated(&self) -> bool {
        fs::read_dir(&self.dir)
            .map(|rd| {
                rd.filter_map(Result::ok)
                    .any(|e| e.file_name().to_string_lossy().ends_with(".meta.json"))
            })
            .unwrap_or(false)
    }

    pub fn get(&self, fingerprint: &str) -> Result<Option<CachedPage>, IngestError> {
        let path = self.payload_path(fingerprint);
        if !path.exists() {
            return Ok(None);
        }
        let payload = fs::read_to_string(&path)?;
        let meta = match fs::read_to_string(self.meta_path(fingerprint)) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| IngestError::Parse(e.to_string()))?,
            Err(_) => CachedPage {
                fingerprint: fingerprint.to_string(),
                canonical: String::new(),
                retrieved_at: 0,
                payload: String::new(),
            },
        };
        Ok(Some(CachedPage { payload, ..meta }))
    }

    pub fn put(&self, fingerprint: &str, canonical: &str, payload: &str) -> Result<CachedPage, IngestError> {
        let page = CachedPage {
            fingerprint: fingerprint.to_string(),
            canonical: canonical.to_string(),
            retrieved_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            payload: payload.to_string(),
        };
        fs::create_dir_all(&self.dir)?;
        let meta = serde_json::to_string_pretty(&page).expect("metadata serializes");
        self.write(&self.payload_path(fingerprint), payload.as_bytes())?;
        self.write(&self.meta_path(fingerprint), meta.as_bytes())?;
        Ok(page)
    }

    fn write(&self, path: &Path, bytes: &[u8]) -> std::io::Result<()> {
        let n = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
        let tmp = self.dir.join(format!(".tmp-{}-{n}", std::process::id()));
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    }
}
