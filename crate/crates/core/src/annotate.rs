//! Marked-up output images: the analyzed-region box on the original capture
//! and the ranked interest points on both frames.

use std::io::Cursor;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{AnalyzedBox, RawImage, Rgb};
use crate::saliency::InterestPoint;

pub const RED: Rgb = [255, 0, 0];
pub const PURPLE: Rgb = [160, 32, 240];
const WHITE: Rgb = [255, 255, 255];

/// Marker radius in analysis-frame pixels.
pub const MARKER_RADIUS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerStyle {
    pub box_color: Rgb,
    pub marker_color: Rgb,
    /// Box line width on the original image, drawn inward from the box edge.
    pub box_thickness: u32,
}

impl Default for MarkerStyle {
    fn default() -> Self {
        Self {
            box_color: RED,
            marker_color: PURPLE,
            box_thickness: 2,
        }
    }
}

/// PNG-encoded annotated images.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotated {
    pub raw_png: Vec<u8>,
    pub processed_png: Vec<u8>,
}

/// Outlines `bx` in `color`, `thickness` pixels wide, inside the box.
pub fn draw_box(img: &mut RawImage, bx: AnalyzedBox, color: Rgb, thickness: u32) {
    if bx.w == 0 || bx.h == 0 {
        return;
    }
    let x1 = (bx.x + bx.w - 1).min(img.width() - 1);
    let y1 = (bx.y + bx.h - 1).min(img.height() - 1);
    for y in bx.y..=y1 {
        for x in bx.x..=x1 {
            let edge = x - bx.x < thickness
                || x1 - x < thickness
                || y - bx.y < thickness
                || y1 - y < thickness;
            if edge {
                img.put_pixel(x, y, color);
            }
        }
    }
}

/// Filled disc of `radius` with a white ring `outline` pixels wide.
pub fn draw_marker(img: &mut RawImage, cx: u32, cy: u32, radius: u32, outline: u32, color: Rgb) {
    let (cx, cy) = (i64::from(cx), i64::from(cy));
    let (r, ro) = (i64::from(radius), i64::from(radius + outline));
    for y in (cy - ro).max(0)..=(cy + ro).min(i64::from(img.height()) - 1) {
        for x in (cx - ro).max(0)..=(cx + ro).min(i64::from(img.width()) - 1) {
            let d2 = (x - cx).pow(2) + (y - cy).pow(2);
            if d2 <= r * r {
                img.put_pixel(x as u32, y as u32, color);
            } else if d2 <= ro * ro {
                img.put_pixel(x as u32, y as u32, WHITE);
            }
        }
    }
}

pub fn encode_png(img: &RawImage) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    img.to_rgb_image()
        .write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| Error::Encode(e.to_string()))?;
    Ok(out.into_inner())
}

/// Renders both marked-up images without encoding them.
pub fn render(
    raw: &RawImage,
    processed: &RawImage,
    points: &[InterestPoint],
    analyzed_box: AnalyzedBox,
    style: &MarkerStyle,
) -> (RawImage, RawImage) {
    let scale = (analyzed_box.w / processed.width()).max(1);

    let mut marked_raw = raw.clone();
    draw_box(&mut marked_raw, analyzed_box, style.box_color, style.box_thickness);
    let mut marked_processed = processed.clone();
    for p in points {
        draw_marker(&mut marked_processed, p.x, p.y, MARKER_RADIUS, 1, style.marker_color);
        draw_marker(
            &mut marked_raw,
            p.x_orig,
            p.y_orig,
            MARKER_RADIUS * scale,
            scale,
            style.marker_color,
        );
    }
    (marked_raw, marked_processed)
}

/// Renders and PNG-encodes the marked-up original and analysis-frame images.
pub fn annotate(
    raw: &RawImage,
    processed: &RawImage,
    points: &[InterestPoint],
    analyzed_box: AnalyzedBox,
    style: &MarkerStyle,
) -> Result<Annotated> {
    let (marked_raw, marked_processed) = render(raw, processed, points, analyzed_box, style);
    Ok(Annotated {
        raw_png: encode_png(&marked_raw)?,
        processed_png: encode_png(&marked_processed)?,
    })
}
