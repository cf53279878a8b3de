use std::fs;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{CvOutcome, DataPlan, PipelineConfig};
use crate::dataset::Dataset;

/// On-disk store of CV outcomes, one JSON file per configuration.
///
/// Entries are keyed by the configuration and by a context digest of the
/// dataset content and the split/fold plan, so a changed input never reuses
/// stale results. Unreadable entries are ignored and recomputed.
#[derive(Debug, Clone)]
pub struct CvCache {
    dir: PathBuf,
    context: String,
}

impl CvCache {
    pub fn new(dir: impl Into<PathBuf>, ds: &Dataset, plan: &DataPlan) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut h = Sha256::new();
        h.update(ds.content_hash().as_bytes());
        h.update(serde_json::to_vec(plan).unwrap_or_default());
        Ok(CvCache { dir, context: hex::encode(h.finalize()) })
    }

    fn path(&self, config: &PipelineConfig) -> PathBuf {
        let mut h = Sha256::new();
        h.update(self.context.as_bytes());
        h.update(serde_json::to_vec(config).unwrap_or_default());
        self.dir.join(format!("{}.json", &hex::encode(h.finalize())[..32]))
    }

    pub fn load<T: DeserializeOwned>(&self, config: &PipelineConfig) -> Option<Result<CvOutcome<T>, String>> {
        let bytes = fs::read(self.path(config)).ok()?;
        serde_json::from_slice(&bytes).ok()
    }

    pub fn store<T: Serialize>(&self, config: &PipelineConfig, outcome: &Result<CvOutcome<T>, String>) {
        if let Ok(bytes) = serde_json::to_vec(outcome) {
            if let Err(e) = fs::write(self.path(config), bytes) {
                log::warn!("cache write failed: {e}");
            }
        }
    }
}
