//! Channel quantization and 4-connected region labeling.

use serde::{Deserialize, Serialize};

/// Which HSI channel a plane was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Hue,
    Saturation,
    Intensity,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Hue, Channel::Saturation, Channel::Intensity];
}

/// A plane of small-integer bin indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinPlane {
    pub width: u32,
    pub height: u32,
    pub bins: Vec<u16>,
    /// Number of distinct bin indices, including the achromatic bin on hue.
    pub bin_count: u16,
    pub circular: bool,
}

impl BinPlane {
    /// Wraps precomputed bins.
    ///
    /// # Panics
    /// Panics if the length does not match or a bin is out of range.
    pub fn from_bins(width: u32, height: u32, bins: Vec<u16>, bin_count: u16) -> Self {
        assert_eq!(bins.len(), width as usize * height as usize);
        assert!(bins.iter().all(|&b| b < bin_count), "bin index out of range");
        Self {
            width,
            height,
            bins,
            bin_count,
            circular: false,
        }
    }
}

/// Quantizes a linear channel in `[0, 1]` into `bin_count` equal bins.
pub fn quantize_linear(values: &[f64], width: u32, height: u32, bin_count: u16) -> BinPlane {
    assert!(bin_count >= 1);
    let n = f64::from(bin_count);
    let bins = values
        .iter()
        .map(|&v| ((v * n).floor().max(0.0) as u16).min(bin_count - 1))
        .collect();
    BinPlane {
        width,
        height,
        bins,
        bin_count,
        circular: false,
    }
}

/// Quantizes hue degrees into `bin_count` sectors, sending achromatic pixels
/// to the extra bin `bin_count`.
pub fn quantize_hue(
    hue: &[f64],
    achromatic: &[bool],
    width: u32,
    height: u32,
    bin_count: u16,
) -> BinPlane {
    assert!(bin_count >= 1);
    assert_eq!(hue.len(), achromatic.len());
    let sector = 360.0 / f64::from(bin_count);
    let bins = hue
        .iter()
        .zip(achromatic)
        .map(|(&h, &gray)| {
            if gray {
                bin_count
            } else {
                ((h / sector).floor().max(0.0) as u16) % bin_count
            }
        })
        .collect();
    BinPlane {
        width,
        height,
        bins,
        bin_count: bin_count + 1,
        circular: true,
    }
}

/// Partition of an image into labeled segments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentMap {
    pub width: u32,
    pub height: u32,
    pub labels: Vec<u32>,
    pub areas: Vec<u32>,
    pub bin_of_segment: Vec<u16>,
}

impl SegmentMap {
    pub fn segment_count(&self) -> usize {
        self.areas.len()
    }

    pub fn pixel_count(&self) -> usize {
        self.labels.len()
    }

    /// Area of the segment containing pixel index `i`.
    pub fn area_at(&self, i: usize) -> u32 {
        self.areas[self.labels[i] as usize]
    }
}

/// Labels maximal 4-connected runs of equal bins. Labels are numbered in
/// raster order of each segment's first pixel.
pub fn connected_components(bp: &BinPlane) -> SegmentMap {
    const UNSET: u32 = u32::MAX;
    let (w, h) = (bp.width as usize, bp.height as usize);
    let mut labels = vec![UNSET; w * h];
    let mut areas = Vec::new();
    let mut bin_of_segment = Vec::new();
    let mut stack = Vec::new();

    for start in 0..w * h {
        if labels[start] != UNSET {
            continue;
        }
        let label = areas.len() as u32;
        let bin = bp.bins[start];
        let mut area = 0u32;
        labels[start] = label;
        stack.push(start);
        while let Some(i) = stack.pop() {
            area += 1;
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if labels[j] == UNSET && bp.bins[j] == bin {
                    labels[j] = label;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        areas.push(area);
        bin_of_segment.push(bin);
    }

    SegmentMap {
        width: bp.width,
        height: bp.height,
        labels,
        areas,
        bin_of_segment,
    }
}
