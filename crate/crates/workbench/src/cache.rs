//! Per-point result cache: one JSON file per (experiment, parameters) hash.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::experiments::Point;
use crate::record::{record_from_json, record_to_json, ResultRecord, CODE_VERSION};
use crate::WorkbenchError;

static TMP_SEQ: AtomicU64 = AtomicU64::new(0);

pub struct Cache {
    dir: PathBuf,
}

/// Hex SHA-256 over everything that determines a point's outputs.
pub fn point_key(cfg: &ExperimentConfig, p: &Point) -> String {
    let descriptor = json!({
        "experiment": cfg.experiment.slug(),
        "eta_bits": p.eta.to_bits(),
        "N": p.n,
        "boundary": p.boundary.map(|b| b.short_name()),
        "solver": cfg.solver,
        "series": cfg.series,
        "ed": cfg.ed_settings(),
        "code_version": CODE_VERSION,
    });
    hex::encode(Sha256::digest(descriptor.to_string().as_bytes()))
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, cfg: &ExperimentConfig, p: &Point) -> PathBuf {
        self.dir
            .join(format!("{}-{}.json", cfg.experiment.slug(), &point_key(cfg, p)[..20]))
    }

    /// The cached record, or `None` when absent or unreadable.
    pub fn load(&self, cfg: &ExperimentConfig, p: &Point) -> Option<ResultRecord> {
        let text = fs::read_to_string(self.path_for(cfg, p)).ok()?;
        record_from_json(serde_json::from_str(&text).ok()?).ok()
    }

    /// Writes to a unique temporary file and renames it into place, so a
    /// reader never sees a partial file.
    pub fn store(&self, cfg: &ExperimentConfig, p: &Point, record: &ResultRecord) -> Result<(), WorkbenchError> {
        fs::create_dir_all(&self.dir)?;
        let target = self.path_for(cfg, p);
        let seq = TMP_SEQ.fetch_add(1, Ordering::Relaxed);
        let tmp = target.with_extension(format!("tmp.{}.{seq}", std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            serde_json::to_writer_pretty(&mut f, &record_to_json(record))?;
            f.write_all(b"\n")?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &target)?;
        Ok(())
    }
}
