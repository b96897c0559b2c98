use chrono::{DateTime, SecondsFormat, SubsecRound, Utc};
use serde::{Deserialize, Serialize};

pub type Timestamp = DateTime<Utc>;

/// Current time at millisecond precision, the resolution every timestamp
/// is published with.
pub fn now() -> Timestamp {
    Utc::now().trunc_subsecs(3)
}

pub fn format_timestamp(t: &Timestamp) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobSource {
    Directory,
    Upload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Queued,
    Processing,
    Done,
    Failed,
}

impl JobStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobStatus::Done | JobStatus::Failed)
    }
}

/// Identity of an inbox file for at-most-once ingestion.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FileFingerprint {
    pub name: String,
    pub size: u64,
    /// Modification time in nanoseconds since the Unix epoch.
    pub mtime_ns: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub job_id: String,
    pub source: JobSource,
    pub filename: String,
    /// Client-supplied capture time, kept as sent.
    pub capture_time: Option<String>,
    pub received_at: Timestamp,
    pub status: JobStatus,
    pub started_at: Option<Timestamp>,
    pub completed_at: Option<Timestamp>,
    pub distance_m: Option<f64>,
    pub notes: Option<String>,
    /// Failure reason for failed jobs.
    pub error: Option<String>,
    /// Analysis duration in seconds for done jobs.
    pub duration_s: Option<f64>,
}

/// Published result locations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultLinks {
    pub report: String,
    pub annotated: String,
    pub processed: String,
}

impl ResultLinks {
    pub fn for_job(job_id: &str) -> Self {
        Self {
            report: format!("/results/{job_id}/report.json"),
            annotated: format!("/results/{job_id}/annotated.png"),
            processed: format!("/results/{job_id}/processed.png"),
        }
    }
}

/// One row of the mission log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionEntry {
    #[serde(flatten)]
    pub job: Job,
    /// Present only for done jobs.
    pub result: Option<ResultLinks>,
}

impl MissionEntry {
    pub fn from_job(job: &Job) -> Self {
        Self {
            job: job.clone(),
            result: (job.status == JobStatus::Done).then(|| ResultLinks::for_job(&job.job_id)),
        }
    }
}

/// Accepts RFC 3339, a naive `YYYY-MM-DDTHH:MM[:SS]` datetime, or a bare
/// `HH:MM[:SS]` time of day.
pub fn valid_capture_time(value: &str) -> bool {
    use chrono::{NaiveDateTime, NaiveTime};
    DateTime::parse_from_rfc3339(value).is_ok()
        || ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"]
            .iter()
            .any(|f| NaiveDateTime::parse_from_str(value, f).is_ok())
        || ["%H:%M:%S", "%H:%M"]
            .iter()
            .any(|f| NaiveTime::parse_from_str(value, f).is_ok())
}
