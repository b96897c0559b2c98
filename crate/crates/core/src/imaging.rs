//! Decoding, geometric normalization and HSI conversion.
//!
//! Every image entering the pipeline is reduced to the fixed 192x144
//! analysis frame. A 640x480 phone capture is center-cropped to 576x432 and
//! block-averaged by 3; larger captures use the largest integer block factor
//! that fits, so a 2x pixel-replicated capture yields the same analysis frame
//! as the original.

use std::ops::Deref;

use image::ImageFormat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ANALYSIS_WIDTH: u32 = 192;
pub const ANALYSIS_HEIGHT: u32 = 144;
/// Total pixel count of the analysis frame.
pub const ANALYSIS_PIXELS: usize = (ANALYSIS_WIDTH * ANALYSIS_HEIGHT) as usize;

pub type Rgb = [u8; 3];

/// Row-major 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImage {
    width: u32,
    height: u32,
    pixels: Vec<Rgb>,
}

impl RawImage {
    pub fn new(width: u32, height: u32, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!(
                "image must be at least 1x1, got {width}x{height}"
            )));
        }
        if pixels.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "{} pixels supplied for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Image filled with one colour.
    ///
    /// # Panics
    /// Panics if either dimension is zero.
    pub fn filled(width: u32, height: u32, color: Rgb) -> Self {
        Self::new(width, height, vec![color; width as usize * height as usize])
            .expect("non-empty dimensions")
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    ///
    /// # Panics
    /// Panics if either dimension is zero.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> Rgb) -> Self {
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels).expect("non-empty dimensions")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> Rgb {
        self.pixels[self.index(x, y)]
    }

    pub fn put_pixel(&mut self, x: u32, y: u32, color: Rgb) {
        let i = self.index(x, y);
        self.pixels[i] = color;
    }

    fn index(&self, x: u32, y: u32) -> usize {
        assert!(x < self.width && y < self.height, "pixel ({x},{y}) out of range");
        y as usize * self.width as usize + x as usize
    }

    /// Rotates the image 90 degrees clockwise.
    pub fn rotate90(&self) -> Self {
        let (w, h) = (self.width, self.height);
        Self::from_fn(h, w, |x, y| self.pixel(y, h - 1 - x))
    }

    pub fn to_rgb_image(&self) -> image::RgbImage {
        let raw: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        image::RgbImage::from_raw(self.width, self.height, raw).expect("buffer sized to image")
    }

    pub fn from_rgb_image(img: &image::RgbImage) -> Self {
        let pixels = img.pixels().map(|p| p.0).collect();
        Self::new(img.width(), img.height(), pixels).expect("decoded image has valid dimensions")
    }
}

/// A [`RawImage`] guaranteed to be exactly 192x144.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessedImage(RawImage);

impl ProcessedImage {
    pub fn into_inner(self) -> RawImage {
        self.0
    }
}

impl TryFrom<RawImage> for ProcessedImage {
    type Error = Error;

    fn try_from(img: RawImage) -> Result<Self> {
        if img.width != ANALYSIS_WIDTH || img.height != ANALYSIS_HEIGHT {
            return Err(Error::DimensionMismatch(format!(
                "processed image must be {ANALYSIS_WIDTH}x{ANALYSIS_HEIGHT}, got {}x{}",
                img.width, img.height
            )));
        }
        Ok(Self(img))
    }
}

impl Deref for ProcessedImage {
    type Target = RawImage;

    fn deref(&self) -> &RawImage {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormatHint {
    Png,
    Jpeg,
}

/// Decodes a PNG or JPEG payload to 8-bit RGB.
///
/// Without a hint the format is sniffed from the magic bytes. 16-bit,
/// grayscale, alpha and paletted inputs are all flattened to RGB8.
pub fn decode(bytes: &[u8], hint: Option<FormatHint>) -> Result<RawImage> {
    let format = match image::guess_format(bytes) {
        Ok(f @ (ImageFormat::Png | ImageFormat::Jpeg)) => f,
        Ok(other) => return Err(Error::UnsupportedFormat(format!("{other:?}"))),
        Err(_) => match hint {
            Some(FormatHint::Png) => ImageFormat::Png,
            Some(FormatHint::Jpeg) => ImageFormat::Jpeg,
            None => {
                return Err(Error::UnsupportedFormat(
                    "payload is neither PNG nor JPEG".into(),
                ))
            }
        },
    };
    if format == ImageFormat::Jpeg && !jpeg_reaches_eoi(bytes) {
        return Err(Error::CorruptImage("JPEG stream ends before its EOI marker".into()));
    }
    let img = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| Error::CorruptImage(e.to_string()))?;
    Ok(RawImage::from_rgb_image(&img.to_rgb8()))
}

/// Walks the JPEG marker structure and reports whether the top-level
/// stream ends with EOI. The decoder pads truncated scans with gray rather
/// than failing, so this is how a cut-off transfer is detected.
fn jpeg_reaches_eoi(bytes: &[u8]) -> bool {
    if !bytes.starts_with(&[0xFF, 0xD8]) {
        return false;
    }
    let mut i = 2;
    loop {
        // skip fill bytes before a marker
        while bytes.get(i) == Some(&0xFF) && bytes.get(i + 1) == Some(&0xFF) {
            i += 1;
        }
        if bytes.get(i) != Some(&0xFF) {
            return false;
        }
        let Some(&marker) = bytes.get(i + 1) else {
            return false;
        };
        i += 2;
        match marker {
            0xD9 => return true,
            0x01 | 0xD0..=0xD7 => continue,
            _ => {}
        }
        let Some(len) = bytes.get(i..i + 2).map(|b| usize::from(u16::from_be_bytes([b[0], b[1]]))) else {
            return false;
        };
        if len < 2 {
            return false;
        }
        i += len;
        if marker == 0xDA {
            // entropy-coded data runs until a marker other than a stuffed
            // zero or a restart
            loop {
                match (bytes.get(i), bytes.get(i + 1)) {
                    (Some(0xFF), Some(0x00 | 0xD0..=0xD7)) => i += 2,
                    (Some(0xFF), Some(_)) => break,
                    (Some(_), _) => i += 1,
                    (None, _) => return false,
                }
            }
        }
    }
}

/// Top-left corner of the analyzed window in raw-image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct CropOffset {
    pub x: u32,
    pub y: u32,
}

/// The raw-image region that was analyzed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzedBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Crop {
    pub image: RawImage,
    pub offset: CropOffset,
}

/// Extracts the centered `target_w` x `target_h` window.
pub fn crop_center(img: &RawImage, target_w: u32, target_h: u32) -> Result<Crop> {
    if target_w > img.width || target_h > img.height || target_w == 0 || target_h == 0 {
        return Err(Error::TargetTooLarge {
            width: img.width,
            height: img.height,
            target_w,
            target_h,
        });
    }
    let offset = CropOffset {
        x: (img.width - target_w) / 2,
        y: (img.height - target_h) / 2,
    };
    let image = RawImage::from_fn(target_w, target_h, |x, y| {
        img.pixel(x + offset.x, y + offset.y)
    });
    Ok(Crop { image, offset })
}

/// Averages each `factor` x `factor` block into one pixel, per channel,
/// rounding half away from zero.
pub fn downsample_block(img: &RawImage, factor: u32) -> Result<RawImage> {
    if factor == 0 || !img.width.is_multiple_of(factor) || !img.height.is_multiple_of(factor) {
        return Err(Error::NotDivisible {
            width: img.width,
            height: img.height,
            factor,
        });
    }
    let n = factor * factor;
    Ok(RawImage::from_fn(
        img.width / factor,
        img.height / factor,
        |bx, by| {
            let mut sum = [0u32; 3];
            for dy in 0..factor {
                for dx in 0..factor {
                    let p = img.pixel(bx * factor + dx, by * factor + dy);
                    for c in 0..3 {
                        sum[c] += u32::from(p[c]);
                    }
                }
            }
            // Sums are non-negative, so adding n/2 rounds halves away from zero.
            sum.map(|s| ((2 * s + n) / (2 * n)) as u8)
        },
    ))
}

/// Output of [`preprocess`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preprocessed {
    pub image: ProcessedImage,
    pub analyzed_box: AnalyzedBox,
    /// Raw pixels per analysis pixel along each axis.
    pub factor: u32,
}

impl Preprocessed {
    pub fn crop_offset(&self) -> CropOffset {
        CropOffset {
            x: self.analyzed_box.x,
            y: self.analyzed_box.y,
        }
    }

    /// Maps an analysis-frame pixel to the center of its source block.
    pub fn to_raw(&self, x: u32, y: u32) -> (u32, u32) {
        let half = self.factor / 2;
        (
            self.analyzed_box.x + x * self.factor + half,
            self.analyzed_box.y + y * self.factor + half,
        )
    }
}

/// Normalizes any image of at least 192x144 to the analysis frame.
pub fn preprocess(img: &RawImage) -> Result<Preprocessed> {
    let factor = (img.width / ANALYSIS_WIDTH).min(img.height / ANALYSIS_HEIGHT);
    if factor == 0 {
        return Err(Error::ImageTooSmall {
            width: img.width,
            height: img.height,
            min_w: ANALYSIS_WIDTH,
            min_h: ANALYSIS_HEIGHT,
        });
    }
    let crop = crop_center(img, ANALYSIS_WIDTH * factor, ANALYSIS_HEIGHT * factor)?;
    let small = downsample_block(&crop.image, factor)?;
    Ok(Preprocessed {
        image: ProcessedImage::try_from(small)?,
        analyzed_box: AnalyzedBox {
            x: crop.offset.x,
            y: crop.offset.y,
            w: crop.image.width,
            h: crop.image.height,
        },
        factor,
    })
}

/// Per-pixel hue (degrees), saturation, intensity and achromatic mask.
#[derive(Debug, Clone, PartialEq)]
pub struct HsiPlanes {
    pub width: u32,
    pub height: u32,
    pub hue: Vec<f64>,
    pub saturation: Vec<f64>,
    pub intensity: Vec<f64>,
    pub achromatic: Vec<bool>,
}

/// Converts one pixel to `(hue, saturation, intensity)`.
///
/// `I = (R+G+B)/765`, `S = 1 - 3 min(R,G,B)/(R+G+B)` and hue is the hexcone
/// angle. Gray pixels get hue 0.
pub fn hsi_pixel(rgb: Rgb) -> (f64, f64, f64) {
    let [r, g, b] = rgb.map(f64::from);
    let sum = r + g + b;
    let intensity = sum / 765.0;
    let min = r.min(g).min(b);
    let max = r.max(g).max(b);
    let saturation = if sum == 0.0 {
        0.0
    } else {
        (1.0 - 3.0 * min / sum).clamp(0.0, 1.0)
    };
    let delta = max - min;
    let mut hue = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    if hue < 0.0 {
        hue += 360.0;
    }
    if hue >= 360.0 {
        hue -= 360.0;
    }
    (hue, saturation, intensity)
}

/// Converts an image to HSI planes; pixels with saturation below `s_min`
/// (or zero intensity) are flagged achromatic.
pub fn rgb_to_hsi(img: &RawImage, s_min: f64) -> HsiPlanes {
    let n = img.pixels.len();
    let mut planes = HsiPlanes {
        width: img.width,
        height: img.height,
        hue: Vec::with_capacity(n),
        saturation: Vec::with_capacity(n),
        intensity: Vec::with_capacity(n),
        achromatic: Vec::with_capacity(n),
    };
    for &p in &img.pixels {
        let (h, s, i) = hsi_pixel(p);
        planes.hue.push(h);
        planes.saturation.push(s);
        planes.intensity.push(i);
        planes.achromatic.push(s < s_min || i == 0.0);
    }
    planes
}
