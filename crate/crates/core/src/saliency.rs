//! Uncommon maps, interest-map fusion and interest point extraction.
//!
//! A pixel is uncommon in a channel when the segment it belongs to is small
//! relative to the image: `u = 1 - area / N`. The three channel maps are
//! summed into an interest map whose separated maxima are the points handed
//! back to the field operator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmentation::SegmentMap;

/// Per-pixel uncommonness in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UncommonMap {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
}

/// Per-pixel interest score in `[0, 3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterestMap {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
}

impl InterestMap {
    pub fn at(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterestPoint {
    pub rank: u32,
    /// Column in the analysis frame.
    pub x: u32,
    /// Row in the analysis frame.
    pub y: u32,
    pub x_orig: u32,
    pub y_orig: u32,
    pub score: f64,
}

pub fn uncommon_map(sm: &SegmentMap) -> UncommonMap {
    let n = sm.pixel_count() as f64;
    let per_segment: Vec<f64> = sm.areas.iter().map(|&a| 1.0 - f64::from(a) / n).collect();
    UncommonMap {
        width: sm.width,
        height: sm.height,
        values: sm.labels.iter().map(|&l| per_segment[l as usize]).collect(),
    }
}

/// Sums the hue, saturation and intensity uncommon maps.
pub fn fuse(hue: &UncommonMap, saturation: &UncommonMap, intensity: &UncommonMap) -> Result<InterestMap> {
    for other in [saturation, intensity] {
        if (other.width, other.height) != (hue.width, hue.height) {
            return Err(Error::DimensionMismatch(format!(
                "cannot fuse {}x{} with {}x{}",
                hue.width, hue.height, other.width, other.height
            )));
        }
    }
    let values = hue
        .values
        .iter()
        .zip(&saturation.values)
        .zip(&intensity.values)
        .map(|((h, s), i)| h + s + i)
        .collect();
    Ok(InterestMap {
        width: hue.width,
        height: hue.height,
        values,
    })
}

/// Mean over the `(2r+1)^2` window, clipped to the image.
///
/// Each window is summed in sorted order, so the result is a function of the
/// window's values alone and rotating or mirroring the map cannot change
/// which of two equal-content windows rounds higher.
pub fn box_smooth(map: &InterestMap, radius: u32) -> InterestMap {
    if radius == 0 {
        return map.clone();
    }
    let (w, h) = (map.width as usize, map.height as usize);
    let r = radius as usize;
    let mut values = Vec::with_capacity(w * h);
    let mut window = Vec::with_capacity((2 * r + 1) * (2 * r + 1));
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(r), (y + r).min(h - 1));
        for x in 0..w {
            let (x0, x1) = (x.saturating_sub(r), (x + r).min(w - 1));
            window.clear();
            for yy in y0..=y1 {
                window.extend_from_slice(&map.values[yy * w + x0..=yy * w + x1]);
            }
            window.sort_unstable_by(f64::total_cmp);
            let sum: f64 = window.iter().sum();
            values.push(sum / window.len() as f64);
        }
    }
    InterestMap {
        width: map.width,
        height: map.height,
        values,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeakParams {
    pub k: u32,
    pub smooth_radius: u32,
    pub suppress_radius: u32,
}

/// Greedy peak picking on the smoothed interest map.
///
/// Each round takes the highest-scoring pixel that is not yet suppressed
/// (ties go to the smallest `(y, x)`), then suppresses every pixel closer
/// than `suppress_radius` to it, so chosen points are pairwise at least that
/// far apart. If everything is suppressed before `k` points are found, the
/// remaining points fall back to the first unchosen pixels in raster order
/// with score 0.
///
/// Returned `x_orig`/`y_orig` equal the frame coordinates; see
/// [`InterestPoint::map_to_raw`].
pub fn extract_points(map: &InterestMap, params: PeakParams) -> Vec<InterestPoint> {
    let smoothed = box_smooth(map, params.smooth_radius);
    let (w, h) = (map.width as i64, map.height as i64);
    let r = i64::from(params.suppress_radius);
    let mut suppressed = vec![false; smoothed.values.len()];
    let mut chosen = vec![false; smoothed.values.len()];
    let mut points = Vec::new();

    for rank in 1..=params.k {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in smoothed.values.iter().enumerate() {
            if !suppressed[i] && best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        let (idx, score) = match best {
            Some(found) => found,
            None => match chosen.iter().position(|&c| !c) {
                Some(i) => (i, 0.0),
                None => break,
            },
        };
        chosen[idx] = true;
        suppressed[idx] = true;
        let (px, py) = (idx as i64 % w, idx as i64 / w);
        for y in (py - r).max(0)..(py + r + 1).min(h) {
            for x in (px - r).max(0)..(px + r + 1).min(w) {
                let (dx, dy) = (x - px, y - py);
                if dx * dx + dy * dy < r * r {
                    suppressed[(y * w + x) as usize] = true;
                }
            }
        }
        points.push(InterestPoint {
            rank,
            x: px as u32,
            y: py as u32,
            x_orig: px as u32,
            y_orig: py as u32,
            score,
        });
    }
    points
}

impl InterestPoint {
    pub fn map_to_raw(self, pre: &crate::imaging::Preprocessed) -> Self {
        let (x_orig, y_orig) = pre.to_raw(self.x, self.y);
        Self {
            x_orig,
            y_orig,
            ..self
        }
    }
}
