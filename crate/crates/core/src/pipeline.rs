//! End-to-end analysis of one capture and the published report.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::annotate::{annotate, Annotated, MarkerStyle};
use crate::error::{Error, Result};
use crate::imaging::{preprocess, rgb_to_hsi, AnalyzedBox, CropOffset, HsiPlanes, Preprocessed, RawImage};
use crate::saliency::{extract_points, fuse, uncommon_map, InterestMap, InterestPoint, PeakParams};
use crate::segmentation::{connected_components, quantize_hue, quantize_linear, SegmentMap};

/// Hard per-image processing budget.
pub const ANALYSIS_BUDGET: Duration = Duration::from_secs(120);

/// Tunables forwarded to the vision modules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// Bins per channel; hue gets one extra achromatic bin.
    pub bin_count: u16,
    pub s_min: f64,
    pub smooth_radius: u32,
    pub suppress_radius: u32,
    pub k: u32,
    pub style: MarkerStyle,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            bin_count: 8,
            s_min: 0.1,
            smooth_radius: 2,
            suppress_radius: 20,
            k: 3,
            style: MarkerStyle::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bin_count == 0 || self.bin_count == u16::MAX {
            return Err(Error::InvalidConfig(format!("bin_count {} out of range", self.bin_count)));
        }
        if !(0.0..=1.0).contains(&self.s_min) {
            return Err(Error::InvalidConfig(format!("s_min {} outside [0, 1]", self.s_min)));
        }
        Ok(())
    }

    pub fn peak_params(&self) -> PeakParams {
        PeakParams {
            k: self.k,
            smooth_radius: self.smooth_radius,
            suppress_radius: self.suppress_radius,
        }
    }
}

/// The three channel segmentations of one image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelSegments {
    pub hue: SegmentMap,
    pub saturation: SegmentMap,
    pub intensity: SegmentMap,
}

impl ChannelSegments {
    pub fn counts(&self) -> SegmentCounts {
        SegmentCounts {
            hue: self.hue.segment_count(),
            saturation: self.saturation.segment_count(),
            intensity: self.intensity.segment_count(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentCounts {
    pub hue: usize,
    pub saturation: usize,
    pub intensity: usize,
}

pub fn segment_channels(planes: &HsiPlanes, bin_count: u16) -> ChannelSegments {
    let (w, h) = (planes.width, planes.height);
    ChannelSegments {
        hue: connected_components(&quantize_hue(&planes.hue, &planes.achromatic, w, h, bin_count)),
        saturation: connected_components(&quantize_linear(&planes.saturation, w, h, bin_count)),
        intensity: connected_components(&quantize_linear(&planes.intensity, w, h, bin_count)),
    }
}

/// Segmentations, fused interest map and points for an image of any size.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAnalysis {
    pub segments: ChannelSegments,
    pub interest: InterestMap,
    /// Points in frame coordinates.
    pub points: Vec<InterestPoint>,
}

/// Runs HSI conversion through peak extraction on `frame` as-is.
pub fn analyze_frame(frame: &RawImage, config: &AnalysisConfig) -> Result<FrameAnalysis> {
    config.validate()?;
    let planes = rgb_to_hsi(frame, config.s_min);
    let segments = segment_channels(&planes, config.bin_count);
    let interest = fuse(
        &uncommon_map(&segments.hue),
        &uncommon_map(&segments.saturation),
        &uncommon_map(&segments.intensity),
    )?;
    let points = extract_points(&interest, config.peak_params());
    Ok(FrameAnalysis {
        segments,
        interest,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSize {
    pub w: u32,
    pub h: u32,
}

/// Everything produced by analyzing one capture.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub original: ImageSize,
    pub preprocessed: Preprocessed,
    pub segment_counts: SegmentCounts,
    /// Points with both frame and raw-image coordinates.
    pub points: Vec<InterestPoint>,
    pub annotated: Annotated,
    pub duration: Duration,
}

/// Full pipeline: preprocess, segment, score, pick points and annotate.
pub fn analyze(raw: &RawImage, config: &AnalysisConfig) -> Result<Analysis> {
    analyze_with_budget(raw, config, ANALYSIS_BUDGET)
}

pub fn analyze_with_budget(raw: &RawImage, config: &AnalysisConfig, budget: Duration) -> Result<Analysis> {
    let started = Instant::now();
    let preprocessed = preprocess(raw)?;
    let frame = analyze_frame(&preprocessed.image, config)?;
    let points: Vec<InterestPoint> = frame
        .points
        .iter()
        .map(|p| p.map_to_raw(&preprocessed))
        .collect();
    let annotated = annotate(
        raw,
        &preprocessed.image,
        &points,
        preprocessed.analyzed_box,
        &config.style,
    )?;
    let duration = started.elapsed();
    if duration >= budget {
        return Err(Error::BudgetExceeded {
            elapsed_s: duration.as_secs_f64(),
            budget_s: budget.as_secs_f64(),
        });
    }
    Ok(Analysis {
        original: ImageSize {
            w: raw.width(),
            h: raw.height(),
        },
        segment_counts: frame.segments.counts(),
        preprocessed,
        points,
        annotated,
        duration,
    })
}

/// Locations of the published images.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReportImages {
    pub annotated: String,
    pub processed: String,
}

/// The `report.json` document published for every analyzed capture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub job_id: String,
    pub received_at: String,
    pub completed_at: String,
    pub original_size: ImageSize,
    pub crop_offset: CropOffset,
    pub analyzed_box: AnalyzedBox,
    pub points: Vec<InterestPoint>,
    pub segment_counts: SegmentCounts,
    pub duration_s: f64,
    pub images: ReportImages,
}

impl Analysis {
    pub fn report(
        &self,
        job_id: impl Into<String>,
        received_at: impl Into<String>,
        completed_at: impl Into<String>,
        images: ReportImages,
    ) -> AnalysisReport {
        AnalysisReport {
            job_id: job_id.into(),
            received_at: received_at.into(),
            completed_at: completed_at.into(),
            original_size: self.original,
            crop_offset: self.preprocessed.crop_offset(),
            analyzed_box: self.preprocessed.analyzed_box,
            points: self.points.clone(),
            segment_counts: self.segment_counts,
            duration_s: self.duration.as_secs_f64(),
            images,
        }
    }
}

impl AnalysisReport {
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("report serializes");
        out.push(b'\n');
        out
    }

    /// The report with run-specific fields (identity, timestamps, durations,
    /// image locations) blanked, for comparing two runs on the same input.
    pub fn without_run_metadata(&self) -> Self {
        Self {
            job_id: String::new(),
            received_at: String::new(),
            completed_at: String::new(),
            duration_s: 0.0,
            images: ReportImages {
                annotated: String::new(),
                processed: String::new(),
            },
            ..self.clone()
        }
    }
}
