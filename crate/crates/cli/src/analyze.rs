use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use phonecam_core::{analyze, decode, AnalysisConfig, Analysis, FormatHint, ReportImages};
use phonecam_service::job::{format_timestamp, now};
use thiserror::Error;

#[derive(Debug, Error)]
enum FileError {
    #[error("cannot read: {0}")]
    Read(std::io::Error),
    #[error(transparent)]
    Analysis(#[from] phonecam_core::Error),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

/// Analyzes each path in order; a failure only affects its own file.
pub fn run(paths: &[PathBuf], config: &AnalysisConfig, out_dir: &Path) -> ExitCode {
    if let Err(source) = fs::create_dir_all(out_dir) {
        eprintln!("phonecam: cannot create {}: {source}", out_dir.display());
        return ExitCode::FAILURE;
    }
    let mut failed = 0;
    for path in paths {
        match analyze_file(path, config, out_dir) {
            Ok(analysis) => println!("{}", summary(path, &analysis)),
            Err(e) => {
                failed += 1;
                eprintln!("{}: {e}", path.display());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into())
}

fn analyze_file(path: &Path, config: &AnalysisConfig, out_dir: &Path) -> Result<Analysis, FileError> {
    let received_at = now();
    let bytes = fs::read(path).map_err(FileError::Read)?;
    let hint = match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => Some(FormatHint::Png),
        Some("jpg" | "jpeg") => Some(FormatHint::Jpeg),
        _ => None,
    };
    let raw = decode(&bytes, hint)?;
    let analysis = analyze(&raw, config)?;

    let stem = stem(path);
    let annotated = format!("{stem}.annotated.png");
    let processed = format!("{stem}.processed.png");
    let report = analysis.report(
        stem.clone(),
        format_timestamp(&received_at),
        format_timestamp(&now()),
        ReportImages {
            annotated: annotated.clone(),
            processed: processed.clone(),
        },
    );
    let outputs = [
        (annotated, analysis.annotated.raw_png.as_slice()),
        (processed, analysis.annotated.processed_png.as_slice()),
        (format!("{stem}.report.json"), &report.to_json()),
    ];
    for (name, data) in outputs {
        let path = out_dir.join(name);
        fs::write(&path, data).map_err(|source| FileError::Write { path, source })?;
    }
    Ok(analysis)
}

fn summary(path: &Path, analysis: &Analysis) -> String {
    let points: Vec<String> = analysis
        .points
        .iter()
        .map(|p| format!("#{} ({},{}) {:.4}", p.rank, p.x_orig, p.y_orig, p.score))
        .collect();
    format!(
        "{}: {} points {} [{:.2}s]",
        path.display(),
        analysis.points.len(),
        points.join(" "),
        analysis.duration.as_secs_f64()
    )
}
