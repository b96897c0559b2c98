//! Polling inbox watcher for the folder-drop intake mode.

use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, UNIX_EPOCH};

use thiserror::Error;
use tracing::{debug, info, warn};

use crate::error::IntakeError;
use crate::job::{FileFingerprint, Job, JobSource};
use crate::store::{JobStore, NewJob};

#[derive(Debug, Error)]
pub enum WatchError {
    #[error("inbox {path} unreadable: {source}")]
    InboxUnreadable { path: String, source: std::io::Error },
}

fn is_image_name(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    [".jpg", ".jpeg", ".png"].iter().any(|ext| lower.ends_with(ext))
}

/// One poll: queues every new prefix-matching image in `inbox`.
///
/// Files are keyed by name, size and modification time, so a file is
/// ingested once unless it is rewritten. Nothing in the inbox is moved or
/// deleted.
pub fn scan_inbox(inbox: &Path, store: &JobStore) -> Result<Vec<Job>, WatchError> {
    let unreadable = |source| WatchError::InboxUnreadable {
        path: inbox.display().to_string(),
        source,
    };
    let mut candidates = Vec::new();
    for entry in fs::read_dir(inbox).map_err(unreadable)? {
        let entry = entry.map_err(unreadable)?;
        let Ok(name) = entry.file_name().into_string() else {
            continue;
        };
        if !name.starts_with(store.prefix()) || !is_image_name(&name) {
            continue;
        }
        let Ok(meta) = entry.metadata() else { continue };
        if !meta.is_file() {
            continue;
        }
        let mtime_ns = meta
            .modified()
            .ok()
            .and_then(|t| t.duration_since(UNIX_EPOCH).ok())
            .map_or(0, |d| i64::try_from(d.as_nanos()).unwrap_or(i64::MAX));
        let fingerprint = FileFingerprint {
            name,
            size: meta.len(),
            mtime_ns,
        };
        if !store.has_seen(&fingerprint) {
            candidates.push((fingerprint, entry.path()));
        }
    }
    // oldest first, so a burst of drops is queued in arrival order
    candidates.sort_by(|a, b| (a.0.mtime_ns, &a.0.name).cmp(&(b.0.mtime_ns, &b.0.name)));

    let mut queued = Vec::new();
    for (fingerprint, path) in candidates {
        let bytes = match fs::read(&path) {
            Ok(bytes) => bytes,
            Err(e) => {
                warn!("cannot read {}: {e}", path.display());
                continue;
            }
        };
        let new = NewJob {
            source: JobSource::Directory,
            filename: fingerprint.name.clone(),
            capture_time: None,
            distance_m: None,
            notes: None,
            fingerprint: Some(fingerprint),
            bytes,
        };
        match store.submit(new) {
            Ok(job) => {
                info!(job_id = %job.job_id, file = %job.filename, "queued from inbox");
                queued.push(job);
            }
            Err(IntakeError::Duplicate) => {}
            Err(e) => {
                debug!("inbox file not queued: {e}");
                if matches!(e, IntakeError::ShuttingDown) {
                    break;
                }
            }
        }
    }
    Ok(queued)
}

/// Polls `inbox` every `interval` until the store shuts down.
pub fn run(store: Arc<JobStore>, inbox: &Path, interval: Duration) {
    loop {
        if let Err(e) = scan_inbox(inbox, &store) {
            warn!("{e}; retrying next poll");
        }
        if store.wait_for_shutdown(interval) {
            break;
        }
    }
    info!("watcher stopped");
}
