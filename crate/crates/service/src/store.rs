//! The job store: the only state shared by intake, the worker and the
//! HTTP read side. Every operation takes the store lock once, so each is
//! atomic with respect to the others.
//!
//! State changes are appended to a JSON-lines journal. On restart, queued and
//! in-flight jobs are re-queued in receive order, done jobs whose results are
//! no longer published are re-queued, and the directory watcher's seen-set is
//! restored so inbox files are not ingested twice.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use tracing::{error, warn};
use uuid::Uuid;

use crate::error::{IntakeError, ServiceError};
use crate::job::{now, FileFingerprint, Job, JobSource, JobStatus, MissionEntry, Timestamp};

const JOURNAL_FILE: &str = "journal.jsonl";
const SPOOL_DIR: &str = "spool";

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase")]
enum JournalEvent {
    Queued {
        job: Job,
        fingerprint: Option<FileFingerprint>,
    },
    Processing {
        job_id: String,
        at: Timestamp,
    },
    Done {
        job_id: String,
        at: Timestamp,
        duration_s: f64,
    },
    Failed {
        job_id: String,
        at: Timestamp,
        reason: String,
    },
    Metadata {
        job_id: String,
        notes: Option<String>,
        distance_m: Option<f64>,
    },
}

struct Journal {
    file: File,
}

impl Journal {
    fn append(&mut self, event: &JournalEvent) -> std::io::Result<()> {
        let mut line = serde_json::to_vec(event).map_err(std::io::Error::other)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.flush()
    }
}

/// Appends a newline if a crash left the journal mid-line.
fn terminate_last_line(file: &mut File) -> std::io::Result<()> {
    use std::io::{Read, Seek, SeekFrom};
    let len = file.metadata()?.len();
    if len == 0 {
        return Ok(());
    }
    let mut last = [0u8];
    file.seek(SeekFrom::Start(len - 1))?;
    file.read_exact(&mut last)?;
    if last[0] != b'\n' {
        file.write_all(b"\n")?;
    }
    Ok(())
}

/// An image being admitted to the queue.
#[derive(Debug, Clone)]
pub struct NewJob {
    pub source: JobSource,
    pub filename: String,
    pub capture_time: Option<String>,
    pub distance_m: Option<f64>,
    pub notes: Option<String>,
    pub fingerprint: Option<FileFingerprint>,
    pub bytes: Vec<u8>,
}

impl NewJob {
    pub fn upload(filename: impl Into<String>, bytes: Vec<u8>) -> Self {
        Self {
            source: JobSource::Upload,
            filename: filename.into(),
            capture_time: None,
            distance_m: None,
            notes: None,
            fingerprint: None,
            bytes,
        }
    }
}

#[derive(Default)]
struct State {
    jobs: HashMap<String, Job>,
    /// Job ids in receive order.
    order: Vec<String>,
    queue: VecDeque<String>,
    seen: HashSet<FileFingerprint>,
    last_received: Option<Timestamp>,
    processing: Option<String>,
    shutting_down: bool,
    journal: Option<Journal>,
}

impl State {
    fn record(&mut self, event: &JournalEvent) {
        if let Some(journal) = &mut self.journal {
            if let Err(e) = journal.append(event) {
                error!("journal write failed: {e}");
            }
        }
    }
}

/// What a restart recovered from the journal.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Recovery {
    pub requeued: usize,
    pub done: usize,
    pub failed: usize,
}

pub struct JobStore {
    prefix: String,
    spool_dir: PathBuf,
    state: Mutex<State>,
    wakeup: Condvar,
}

impl JobStore {
    /// A store without a journal; images are spooled under `spool_dir`.
    pub fn in_memory(prefix: impl Into<String>, spool_dir: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let spool_dir = spool_dir.into();
        fs::create_dir_all(&spool_dir)?;
        Ok(Self {
            prefix: prefix.into(),
            spool_dir,
            state: Mutex::new(State::default()),
            wakeup: Condvar::new(),
        })
    }

    /// Opens (or creates) a journaled store in `state_dir` and replays it.
    /// `is_published` reports whether a done job's results are still on disk.
    pub fn open(
        prefix: impl Into<String>,
        state_dir: &Path,
        is_published: impl Fn(&str) -> bool,
    ) -> Result<(Self, Recovery), ServiceError> {
        let store = Self::in_memory(prefix, state_dir.join(SPOOL_DIR))?;
        let journal_path = state_dir.join(JOURNAL_FILE);
        let recovery = {
            let mut state = store.lock();
            let recovery = if journal_path.exists() {
                store.replay(&mut state, &journal_path, &is_published)?
            } else {
                Recovery::default()
            };
            let mut file = OpenOptions::new()
                .create(true)
                .read(true)
                .append(true)
                .open(&journal_path)
                .map_err(|e| ServiceError::Journal(format!("{}: {e}", journal_path.display())))?;
            terminate_last_line(&mut file)?;
            state.journal = Some(Journal { file });
            recovery
        };
        Ok((store, recovery))
    }

    fn replay(
        &self,
        state: &mut State,
        path: &Path,
        is_published: &impl Fn(&str) -> bool,
    ) -> Result<Recovery, ServiceError> {
        let reader = BufReader::new(File::open(path)?);
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let event: JournalEvent = match serde_json::from_str(&line) {
                Ok(event) => event,
                Err(e) => {
                    // a torn final write is expected after a crash
                    warn!("skipping unreadable journal line {}: {e}", lineno + 1);
                    continue;
                }
            };
            match event {
                JournalEvent::Queued { job, fingerprint } => {
                    if let Some(fp) = fingerprint {
                        state.seen.insert(fp);
                    }
                    state.last_received = Some(job.received_at);
                    state.order.push(job.job_id.clone());
                    state.jobs.insert(job.job_id.clone(), job);
                }
                JournalEvent::Processing { job_id, at } => {
                    if let Some(job) = state.jobs.get_mut(&job_id) {
                        job.status = JobStatus::Processing;
                        job.started_at = Some(at);
                    }
                }
                JournalEvent::Done { job_id, at, duration_s } => {
                    if let Some(job) = state.jobs.get_mut(&job_id) {
                        job.status = JobStatus::Done;
                        job.completed_at = Some(at);
                        job.duration_s = Some(duration_s);
                        job.error = None;
                    }
                }
                JournalEvent::Failed { job_id, at, reason } => {
                    if let Some(job) = state.jobs.get_mut(&job_id) {
                        job.status = JobStatus::Failed;
                        job.completed_at = Some(at);
                        job.error = Some(reason);
                    }
                }
                JournalEvent::Metadata { job_id, notes, distance_m } => {
                    if let Some(job) = state.jobs.get_mut(&job_id) {
                        job.notes = notes;
                        job.distance_m = distance_m;
                    }
                }
            }
        }

        let mut recovery = Recovery::default();
        for id in state.order.clone() {
            let job = state.jobs.get_mut(&id).expect("ordered ids exist");
            let requeue = match job.status {
                JobStatus::Queued | JobStatus::Processing => true,
                JobStatus::Done => !is_published(&id),
                JobStatus::Failed => false,
            };
            if requeue && !self.spool_path(&id).is_file() {
                job.status = JobStatus::Failed;
                job.error = Some("spooled image lost before processing".into());
                recovery.failed += 1;
            } else if requeue {
                job.status = JobStatus::Queued;
                job.started_at = None;
                job.completed_at = None;
                job.duration_s = None;
                state.queue.push_back(id);
                recovery.requeued += 1;
            } else if job.status == JobStatus::Done {
                recovery.done += 1;
            } else {
                recovery.failed += 1;
            }
        }
        Ok(recovery)
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    /// Where the image bytes of `job_id` are kept until processed.
    pub fn spool_path(&self, job_id: &str) -> PathBuf {
        self.spool_dir.join(job_id)
    }

    /// Admits an image: checks the prefix, spools the bytes and queues a job.
    pub fn submit(&self, new: NewJob) -> Result<Job, IntakeError> {
        if !new.filename.starts_with(&self.prefix) {
            return Err(IntakeError::PrefixMismatch(new.filename));
        }
        if self.lock().shutting_down {
            return Err(IntakeError::ShuttingDown);
        }
        if let Some(fp) = &new.fingerprint {
            if self.lock().seen.contains(fp) {
                return Err(IntakeError::Duplicate);
            }
        }
        let job_id = Uuid::new_v4().simple().to_string();
        let spool = self.spool_path(&job_id);
        fs::write(&spool, &new.bytes).map_err(|e| IntakeError::Spool(e.to_string()))?;

        let mut state = self.lock();
        if let Some(fp) = &new.fingerprint {
            if !state.seen.insert(fp.clone()) {
                drop(state);
                let _ = fs::remove_file(&spool);
                return Err(IntakeError::Duplicate);
            }
        }
        // received_at never goes backwards, so queue order is receive order
        let now = now();
        let received_at = state.last_received.map_or(now, |last| last.max(now));
        state.last_received = Some(received_at);
        let job = Job {
            job_id: job_id.clone(),
            source: new.source,
            filename: new.filename,
            capture_time: new.capture_time,
            received_at,
            status: JobStatus::Queued,
            started_at: None,
            completed_at: None,
            distance_m: new.distance_m,
            notes: new.notes,
            error: None,
            duration_s: None,
        };
        state.record(&JournalEvent::Queued {
            job: job.clone(),
            fingerprint: new.fingerprint,
        });
        state.order.push(job_id.clone());
        state.jobs.insert(job_id.clone(), job.clone());
        state.queue.push_back(job_id);
        drop(state);
        self.wakeup.notify_all();
        Ok(job)
    }

    /// Whether an inbox file has already been ingested.
    pub fn has_seen(&self, fp: &FileFingerprint) -> bool {
        self.lock().seen.contains(fp)
    }

    /// Blocks until a job is queued, then marks it processing and returns it.
    /// Returns `None` once shutdown has been requested.
    pub fn next_job(&self) -> Option<Job> {
        let mut state = self.lock();
        loop {
            if state.shutting_down {
                return None;
            }
            if state.processing.is_none() {
                if let Some(id) = state.queue.pop_front() {
                    let now = now();
                    let job = state.jobs.get_mut(&id).expect("queued job exists");
                    job.status = JobStatus::Processing;
                    job.started_at = Some(now);
                    let job = job.clone();
                    state.processing = Some(id.clone());
                    state.record(&JournalEvent::Processing { job_id: id, at: now });
                    return Some(job);
                }
            }
            state = self.wakeup.wait(state).unwrap_or_else(|p| p.into_inner());
        }
    }

    /// Marks the in-flight job done.
    pub fn complete(&self, job_id: &str, completed_at: Timestamp, duration_s: f64) {
        self.finish(job_id, |job| {
            job.status = JobStatus::Done;
            job.completed_at = Some(completed_at);
            job.duration_s = Some(duration_s);
            JournalEvent::Done {
                job_id: job_id.to_string(),
                at: completed_at,
                duration_s,
            }
        });
    }

    /// Marks the in-flight job failed with `reason`.
    pub fn fail(&self, job_id: &str, reason: impl Into<String>) {
        let reason = reason.into();
        let at = now();
        self.finish(job_id, |job| {
            job.status = JobStatus::Failed;
            job.completed_at = Some(at);
            job.error = Some(reason.clone());
            JournalEvent::Failed {
                job_id: job_id.to_string(),
                at,
                reason,
            }
        });
    }

    fn finish(&self, job_id: &str, apply: impl FnOnce(&mut Job) -> JournalEvent) {
        let mut state = self.lock();
        let Some(job) = state.jobs.get_mut(job_id) else {
            warn!("finish for unknown job {job_id}");
            return;
        };
        if job.status != JobStatus::Processing {
            warn!("job {job_id} finished while {:?}", job.status);
            return;
        }
        let event = apply(job);
        if state.processing.as_deref() == Some(job_id) {
            state.processing = None;
        }
        state.record(&event);
        drop(state);
        self.wakeup.notify_all();
    }

    pub fn get(&self, job_id: &str) -> Option<Job> {
        self.lock().jobs.get(job_id).cloned()
    }

    /// Every job in receive order, with result links for done jobs.
    pub fn mission_log(&self) -> Vec<MissionEntry> {
        let state = self.lock();
        state
            .order
            .iter()
            .map(|id| MissionEntry::from_job(&state.jobs[id]))
            .collect()
    }

    /// Replaces operator notes and distance on a job.
    pub fn update_metadata(&self, job_id: &str, notes: Option<String>, distance_m: Option<f64>) -> Option<Job> {
        let mut state = self.lock();
        let job = state.jobs.get_mut(job_id)?;
        job.notes = notes.clone();
        job.distance_m = distance_m;
        let job = job.clone();
        state.record(&JournalEvent::Metadata {
            job_id: job_id.to_string(),
            notes,
            distance_m,
        });
        Some(job)
    }

    pub fn queued(&self) -> usize {
        self.lock().queue.len()
    }

    pub fn processing(&self) -> Option<String> {
        self.lock().processing.clone()
    }

    /// Waits until the queue is empty and nothing is processing.
    pub fn wait_idle(&self, timeout: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        let mut state = self.lock();
        while !state.queue.is_empty() || state.processing.is_some() {
            let now = Instant::now();
            if now >= deadline || state.shutting_down {
                return false;
            }
            state = self
                .wakeup
                .wait_timeout(state, deadline - now)
                .unwrap_or_else(|p| p.into_inner())
                .0;
        }
        true
    }

    /// Stops handing out jobs; queued jobs stay queued for the next start.
    pub fn shutdown(&self) {
        self.lock().shutting_down = true;
        self.wakeup.notify_all();
    }

    pub fn is_shutting_down(&self) -> bool {
        self.lock().shutting_down
    }

    /// Sleeps up to `timeout`, returning early (with `true`) on shutdown.
    pub fn wait_for_shutdown(&self, timeout: Duration) -> bool {
        let state = self.lock();
        let (state, _) = self
            .wakeup
            .wait_timeout_while(state, timeout, |s| !s.shutting_down)
            .unwrap_or_else(|p| p.into_inner());
        state.shutting_down
    }
}
