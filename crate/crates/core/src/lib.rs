//! Uncommon-map interest point detection for field exploration imagery.
//!
//! A capture is normalized to a 192x144 analysis frame, split into hue,
//! saturation and intensity planes, and each plane is segmented into
//! 4-connected regions of equal quantized value. Pixels in small regions
//! score as uncommon; the three per-channel uncommon maps are summed into an
//! interest map, and its three best separated peaks are returned to the
//! operator on marked-up images.
//!
//! ```no_run
//! use phonecam_core::{analyze, decode, AnalysisConfig};
//!
//! let bytes = std::fs::read("astro_0001.jpg").unwrap();
//! let raw = decode(&bytes, None).unwrap();
//! let analysis = analyze(&raw, &AnalysisConfig::default()).unwrap();
//! for p in &analysis.points {
//!     println!("#{} at ({}, {}) score {:.3}", p.rank, p.x_orig, p.y_orig, p.score);
//! }
//! ```

pub mod annotate;
pub mod error;
pub mod imaging;
pub mod pipeline;
pub mod saliency;
pub mod segmentation;

pub use annotate::{Annotated, MarkerStyle};
pub use error::{Error, Result};
pub use imaging::{decode, preprocess, rgb_to_hsi, AnalyzedBox, CropOffset, FormatHint, ProcessedImage, RawImage};
pub use pipeline::{
    analyze, analyze_frame, AnalysisConfig, Analysis, AnalysisReport, ReportImages, SegmentCounts, ANALYSIS_BUDGET,
};
pub use saliency::{InterestMap, InterestPoint, PeakParams, UncommonMap};
pub use segmentation::{BinPlane, Channel, SegmentMap};
