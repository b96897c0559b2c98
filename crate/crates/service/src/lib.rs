//! Remote-server side of the phone-camera exploration loop.
//!
//! Images arrive either as files dropped into an inbox directory or as HTTP
//! uploads. Only filenames starting with the configured prefix are admitted.
//! Admitted images are queued and analyzed strictly one at a time in receive
//! order; each result (marked-up images plus `report.json`) is published
//! atomically under `/results/{job_id}/`, and the mission log records
//! capture, receive and completion times alongside operator notes.

pub mod config;
pub mod error;
pub mod http;
pub mod job;
pub mod publish;
pub mod store;
pub mod watcher;
pub mod worker;

use std::future::Future;
use std::sync::Arc;
use std::thread::JoinHandle;

use tokio::net::TcpListener;
use tracing::info;

pub use config::ServiceConfig;
pub use error::{IntakeError, ServiceError};
pub use job::{Job, JobSource, JobStatus, MissionEntry};
pub use publish::Publisher;
pub use store::{JobStore, NewJob, Recovery};

/// A running service: job store, worker thread and (optionally) the inbox
/// watcher. The HTTP side is obtained from [`Service::router`].
pub struct Service {
    config: ServiceConfig,
    store: Arc<JobStore>,
    publisher: Publisher,
    recovery: Recovery,
    worker: Option<JoinHandle<()>>,
    watcher: Option<JoinHandle<()>>,
}

impl Service {
    /// Opens the journal, then starts the worker and the inbox watcher.
    pub fn start(config: ServiceConfig) -> Result<Self, ServiceError> {
        Self::start_with(config, true)
    }

    /// Like [`Service::start`], with the inbox watcher optional.
    pub fn start_with(config: ServiceConfig, watch_inbox: bool) -> Result<Self, ServiceError> {
        config.validate()?;
        let publisher = Publisher::new(&config.publish_path)?;
        let (store, recovery) = {
            let publisher = publisher.clone();
            JobStore::open(config.prefix.clone(), &publisher.state_dir(), move |id| {
                publisher.is_published(id)
            })?
        };
        if recovery != Recovery::default() {
            info!(?recovery, "journal replayed");
        }
        let store = Arc::new(store);

        let worker = {
            let (store, publisher, analysis) = (store.clone(), publisher.clone(), config.analysis.clone());
            std::thread::Builder::new()
                .name("phonecam-worker".into())
                .spawn(move || worker::run(store, publisher, analysis))?
        };
        let watcher = if watch_inbox {
            std::fs::create_dir_all(&config.inbox_path)?;
            let (store, inbox, interval) = (store.clone(), config.inbox_path.clone(), config.poll_interval);
            Some(
                std::thread::Builder::new()
                    .name("phonecam-watcher".into())
                    .spawn(move || watcher::run(store, &inbox, interval))?,
            )
        } else {
            None
        };

        Ok(Self {
            config,
            store,
            publisher,
            recovery,
            worker: Some(worker),
            watcher,
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn store(&self) -> &Arc<JobStore> {
        &self.store
    }

    pub fn publisher(&self) -> &Publisher {
        &self.publisher
    }

    pub fn recovery(&self) -> &Recovery {
        &self.recovery
    }

    pub fn router(&self) -> axum::Router {
        http::router(
            http::AppState {
                store: self.store.clone(),
                publisher: self.publisher.clone(),
            },
            self.config.console_path.as_deref(),
        )
    }

    /// Stops intake, lets the in-flight job finish and joins the threads.
    /// Jobs still queued stay in the journal for the next start.
    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.store.shutdown();
        for handle in [self.worker.take(), self.watcher.take()].into_iter().flatten() {
            let _ = handle.join();
        }
    }
}

impl Drop for Service {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Binds the configured address, or reports why it cannot.
pub async fn bind(config: &ServiceConfig) -> Result<TcpListener, ServiceError> {
    TcpListener::bind(config.http_bind)
        .await
        .map_err(|source| ServiceError::Bind {
            addr: config.http_bind.to_string(),
            source,
        })
}

/// Serves HTTP on `listener` until `shutdown` resolves, then drains the
/// in-flight job and stops.
pub async fn serve_until(
    listener: TcpListener,
    service: Service,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServiceError> {
    let addr = listener.local_addr()?;
    info!("listening on http://{addr}");
    let served = axum::serve(listener, service.router())
        .with_graceful_shutdown(shutdown)
        .await;
    info!("draining");
    tokio::task::spawn_blocking(move || service.shutdown())
        .await
        .map_err(|e| ServiceError::Io(std::io::Error::other(e)))?;
    served?;
    Ok(())
}

/// Runs the whole service until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    config.validate()?;
    let listener = bind(&config).await?;
    let service = Service::start(config)?;
    serve_until(listener, service, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
