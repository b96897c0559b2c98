//! Atomic publication of results under `publish_path/{job_id}/`.
//!
//! Artifacts are written into a hidden staging directory and renamed into
//! place in one step, so a result path either does not exist or holds the
//! complete set of files.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub const ANNOTATED_FILE: &str = "annotated.png";
pub const PROCESSED_FILE: &str = "processed.png";
pub const REPORT_FILE: &str = "report.json";

/// Files a client may fetch from a result directory.
pub const RESULT_FILES: [&str; 3] = [ANNOTATED_FILE, PROCESSED_FILE, REPORT_FILE];

/// Directory under the publish root holding the journal and spool.
pub const STATE_DIR: &str = ".state";

#[derive(Debug, Clone)]
pub struct Publisher {
    root: PathBuf,
}

impl Publisher {
    pub fn new(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn state_dir(&self) -> PathBuf {
        self.root.join(STATE_DIR)
    }

    pub fn result_dir(&self, job_id: &str) -> PathBuf {
        self.root.join(job_id)
    }

    pub fn is_published(&self, job_id: &str) -> bool {
        valid_job_id(job_id) && self.result_dir(job_id).join(REPORT_FILE).is_file()
    }

    /// Path of a published artifact, if the job id and file name are valid
    /// and the result is published.
    pub fn artifact(&self, job_id: &str, file: &str) -> Option<PathBuf> {
        if !valid_job_id(job_id) || !RESULT_FILES.contains(&file) {
            return None;
        }
        let path = self.result_dir(job_id).join(file);
        path.is_file().then_some(path)
    }

    /// Writes the three artifacts and moves them into place atomically.
    pub fn publish(&self, job_id: &str, annotated: &[u8], processed: &[u8], report: &[u8]) -> io::Result<PathBuf> {
        if !valid_job_id(job_id) {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "invalid job id"));
        }
        let staging = self.root.join(format!(".staging-{job_id}"));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir_all(&staging)?;
        let write_all = || -> io::Result<()> {
            fs::write(staging.join(ANNOTATED_FILE), annotated)?;
            fs::write(staging.join(PROCESSED_FILE), processed)?;
            fs::write(staging.join(REPORT_FILE), report)?;
            let final_dir = self.result_dir(job_id);
            if final_dir.exists() {
                fs::remove_dir_all(&final_dir)?;
            }
            fs::rename(&staging, &final_dir)
        };
        if let Err(e) = write_all() {
            let _ = fs::remove_dir_all(&staging);
            return Err(e);
        }
        Ok(self.result_dir(job_id))
    }
}

/// Job ids are generated hex strings; anything else is rejected before it
/// can reach the filesystem.
pub fn valid_job_id(job_id: &str) -> bool {
    !job_id.is_empty() && job_id.len() <= 64 && job_id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-')
}
