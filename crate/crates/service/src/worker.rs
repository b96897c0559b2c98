//! The single sequential analysis worker.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use chrono::Utc;
use phonecam_core::{analyze, decode, AnalysisConfig, FormatHint, ReportImages};
use tracing::{info, warn};

use crate::job::{format_timestamp, now, Job, ResultLinks};
use crate::publish::Publisher;
use crate::store::JobStore;

/// Takes jobs from the store one at a time until shutdown.
pub fn run(store: Arc<JobStore>, publisher: Publisher, config: AnalysisConfig) {
    while let Some(job) = store.next_job() {
        process(&store, &publisher, &config, &job);
    }
    info!("worker stopped");
}

/// Analyzes and publishes one job, recording the outcome on the store.
/// Failures (including panics in the pipeline) only affect this job.
pub fn process(store: &JobStore, publisher: &Publisher, config: &AnalysisConfig, job: &Job) {
    let outcome = catch_unwind(AssertUnwindSafe(|| run_job(store, publisher, config, job)))
        .unwrap_or_else(|_| Err("analysis panicked".to_string()));
    match outcome {
        Ok((completed_at, duration_s)) => {
            info!(job_id = %job.job_id, file = %job.filename, duration_s, "job done");
            store.complete(&job.job_id, completed_at, duration_s);
        }
        Err(reason) => {
            warn!(job_id = %job.job_id, file = %job.filename, %reason, "job failed");
            store.fail(&job.job_id, reason);
        }
    }
}

fn run_job(
    store: &JobStore,
    publisher: &Publisher,
    config: &AnalysisConfig,
    job: &Job,
) -> Result<(chrono::DateTime<Utc>, f64), String> {
    let bytes = fs::read(store.spool_path(&job.job_id)).map_err(|e| format!("cannot read spooled image: {e}"))?;
    let raw = decode(&bytes, format_hint(&job.filename)).map_err(|e| e.to_string())?;
    let analysis = analyze(&raw, config).map_err(|e| e.to_string())?;
    let links = ResultLinks::for_job(&job.job_id);
    // rounded up so completed_at - received_at never undercuts the duration
    let completed_at = now() + chrono::Duration::milliseconds(1);
    let report = analysis.report(
        job.job_id.clone(),
        format_timestamp(&job.received_at),
        format_timestamp(&completed_at),
        ReportImages {
            annotated: links.annotated,
            processed: links.processed,
        },
    );
    publisher
        .publish(
            &job.job_id,
            &analysis.annotated.raw_png,
            &analysis.annotated.processed_png,
            &report.to_json(),
        )
        .map_err(|e| format!("publish failed: {e}"))?;
    Ok((completed_at, report.duration_s))
}

pub fn format_hint(filename: &str) -> Option<FormatHint> {
    let ext = Path::new(filename).extension()?.to_str()?.to_ascii_lowercase();
    match ext.as_str() {
        "png" => Some(FormatHint::Png),
        "jpg" | "jpeg" => Some(FormatHint::Jpeg),
        _ => None,
    }
}
