//! `phonecam`: analyze captures offline or run the ingestion server.

mod analyze;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use phonecam_service::ServiceConfig;

#[derive(Debug, Parser)]
#[command(name = "phonecam", version, about = "Uncommon-region interest points for field captures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analyze image files and write marked-up images and reports.
    Analyze {
        /// Input images, processed in the order given.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Directory for `{stem}.annotated.png`, `{stem}.processed.png` and `{stem}.report.json`.
        #[arg(short, long, default_value = ".")]
        out_dir: PathBuf,
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Run the inbox watcher, worker and HTTP API until interrupted.
    Serve {
        #[command(flatten)]
        config: ConfigFlags,
        /// Filename prefix admitted for analysis.
        #[arg(long)]
        prefix: Option<String>,
        /// Inbox poll interval in seconds.
        #[arg(long, value_name = "SECS")]
        poll_interval: Option<f64>,
        /// Directory watched for dropped images.
        #[arg(long)]
        inbox: Option<PathBuf>,
        /// Directory results are published to.
        #[arg(long)]
        publish: Option<PathBuf>,
        /// HTTP listen address.
        #[arg(long, value_name = "ADDR")]
        bind: Option<String>,
        /// Directory served under /console/.
        #[arg(long)]
        console: Option<PathBuf>,
    },
    /// Print the version.
    Version,
}

/// Config file plus analysis overrides; flags win over the file.
#[derive(Debug, Args)]
struct ConfigFlags {
    /// Config file (default: $PHONECAM_CONFIG, then ./phonecam.conf).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bins per HSI channel.
    #[arg(long)]
    bins: Option<u16>,
    /// Saturation below which a pixel has no hue.
    #[arg(long)]
    s_min: Option<f64>,
    /// Box-filter radius applied before peak picking.
    #[arg(long)]
    smooth_radius: Option<u32>,
    /// Minimum distance between reported points, in processed pixels.
    #[arg(long)]
    suppress_radius: Option<u32>,
    /// Number of points to report.
    #[arg(long)]
    k: Option<u32>,
}

impl ConfigFlags {
    fn load(&self, extra: &[(&str, Option<String>)]) -> Result<ServiceConfig, String> {
        let mut config = ServiceConfig::load(self.config.as_deref()).map_err(|e| e.to_string())?;
        let overrides = [
            ("bin_count", self.bins.map(|v| v.to_string())),
            ("s_min", self.s_min.map(|v| v.to_string())),
            ("smooth_radius", self.smooth_radius.map(|v| v.to_string())),
            ("suppress_radius", self.suppress_radius.map(|v| v.to_string())),
            ("k", self.k.map(|v| v.to_string())),
        ];
        for (key, value) in overrides.iter().chain(extra) {
            if let Some(value) = value {
                config.set(key, value).map_err(|e| format!("--{}: {e}", key.replace('_', "-")))?;
            }
        }
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

fn path_arg(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Version => {
            println!("phonecam {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
        Command::Analyze { paths, out_dir, config } => {
            let config = match config.load(&[]) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            analyze::run(&paths, &config.analysis, &out_dir)
        }
        Command::Serve { config, prefix, poll_interval, inbox, publish, bind, console } => {
            let extra = [
                ("prefix", prefix),
                ("poll_interval", poll_interval.map(|v| v.to_string())),
                ("inbox_path", path_arg(&inbox)),
                ("publish_path", path_arg(&publish)),
                ("http_bind", bind),
                ("console_path", path_arg(&console)),
            ];
            let config = match config.load(&extra) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            serve(config)
        }
    }
}

fn serve(config: ServiceConfig) -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => return fail(&e.to_string()),
    };
    match runtime.block_on(phonecam_service::serve(config)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e.to_string()),
    }
}

fn fail(message: &str) -> ExitCode {
    eprintln!("phonecam: {message}");
    ExitCode::FAILURE
}
