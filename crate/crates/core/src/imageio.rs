//! PNG / PGM / PPM input, channel selection and diagnostic rendering.

use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, ImageReader, Luma, Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::field::{laplacian, RegionMask, ScalarField};

/// Clamp range of the Laplacian map.
pub const LAPLACIAN_CLAMP: f64 = 0.2;

pub const RED: [u8; 3] = [255, 0, 0];
pub const GREEN: [u8; 3] = [0, 255, 0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Gray,
    Index(usize),
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Channel::Gray => f.write_str("gray"),
            Channel::Index(i) => write!(f, "{i}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedImage {
    pub intensity: ScalarField,
    pub source_channels: usize,
    pub chosen_channel: Channel,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn image_err(path: &Path, source: image::ImageError) -> Error {
    match source {
        image::ImageError::IoError(e) => io_err(path, e),
        other => Error::Image {
            path: path.to_path_buf(),
            source: other,
        },
    }
}

fn decode(path: &Path) -> Result<DynamicImage> {
    ImageReader::open(path)
        .map_err(|e| io_err(path, e))?
        .with_guessed_format()
        .map_err(|e| io_err(path, e))?
        .decode()
        .map_err(|e| image_err(path, e))
}

fn unsupported(path: &Path, what: &str) -> Error {
    Error::UnsupportedDepth {
        path: PathBuf::from(path),
        detail: format!("{what} input; only 8-bit grayscale or RGB is supported"),
    }
}

fn variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Min-max normalize to `[0, 1]`; a constant input becomes 0.5 everywhere.
pub fn normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        values.iter().map(|v| (v - lo) / (hi - lo)).collect()
    } else {
        vec![0.5; values.len()]
    }
}

/// Pick the channel with the largest variance (lowest index on ties).
/// Variances are compared on raw channel values.
pub fn select_channel(channels: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_var = f64::NEG_INFINITY;
    for (i, ch) in channels.iter().enumerate() {
        let v = variance(ch);
        if v > best_var {
            best = i;
            best_var = v;
        }
    }
    best
}

/// Load an 8-bit grayscale or RGB(A) image as a normalized intensity field.
/// Alpha is ignored.
pub fn load_image(path: &Path) -> Result<LoadedImage> {
    let img = decode(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (channels, n): (Vec<Vec<f64>>, usize) = match &img {
        DynamicImage::ImageLuma8(g) => (vec![g.pixels().map(|p| p.0[0] as f64).collect()], 1),
        DynamicImage::ImageLumaA8(g) => (vec![g.pixels().map(|p| p.0[0] as f64).collect()], 2),
        DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_) => {
            let rgb = img.to_rgb8();
            let chans = (0..3).map(|c| rgb.pixels().map(|p| p.0[c] as f64).collect()).collect();
            (chans, img.color().channel_count() as usize)
        }
        DynamicImage::ImageLuma16(_)
        | DynamicImage::ImageLumaA16(_)
        | DynamicImage::ImageRgb16(_)
        | DynamicImage::ImageRgba16(_) => return Err(unsupported(path, "16-bit")),
        _ => return Err(unsupported(path, "floating-point")),
    };
    let (chosen, raw) = if channels.len() == 1 {
        (Channel::Gray, &channels[0])
    } else {
        let i = select_channel(&channels);
        (Channel::Index(i), &channels[i])
    };
    let intensity =
        ScalarField::new(w, h, normalize(raw)).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    Ok(LoadedImage {
        intensity,
        source_channels: n,
        chosen_channel: chosen,
    })
}

/// Load a binary mask: a pixel is inside when its gray value exceeds half scale.
pub fn load_mask(path: &Path) -> Result<RegionMask> {
    let img = decode(path)?;
    if matches!(
        img,
        DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_)
            | DynamicImage::ImageRgb16(_)
            | DynamicImage::ImageRgba16(_)
    ) {
        return Err(unsupported(path, "16-bit"));
    }
    let g = img.to_luma8();
    let (w, h) = (g.width() as usize, g.height() as usize);
    RegionMask::new(w, h, g.pixels().map(|p| p.0[0] > 127).collect())
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn save(img: impl Into<DynamicImage>, path: &Path) -> Result<()> {
    img.into().save(path).map_err(|e| image_err(path, e))
}

pub fn gray_image(field: &ScalarField) -> GrayImage {
    GrayImage::from_fn(field.width() as u32, field.height() as u32, |x, y| {
        Luma([to_u8(field.get(y as usize, x as usize))])
    })
}

/// Write a `[0, 1]` field as 8-bit grayscale; format follows the extension.
pub fn save_gray(field: &ScalarField, path: &Path) -> Result<()> {
    save(gray_image(field), path)
}

pub fn save_mask(mask: &RegionMask, path: &Path) -> Result<()> {
    let img = GrayImage::from_fn(mask.width() as u32, mask.height() as u32, |x, y| {
        Luma([if mask.get(y as usize, x as usize) { 255 } else { 0 }])
    });
    save(img, path)
}

/// Grayscale image with 1-px outlines of each mask drawn in its colour.
pub fn overlay_image(image: &ScalarField, contours: &[(&RegionMask, [u8; 3])]) -> Result<RgbImage> {
    for (mask, _) in contours {
        if mask.dims() != image.dims() {
            return Err(Error::invalid(format!(
                "overlay mask is {}x{}, image is {}x{}",
                mask.width(),
                mask.height(),
                image.width(),
                image.height()
            )));
        }
    }
    let mut out = RgbImage::from_fn(image.width() as u32, image.height() as u32, |x, y| {
        let v = to_u8(image.get(y as usize, x as usize));
        Rgb([v, v, v])
    });
    for (mask, color) in contours {
        for ix in mask.outline().iter_inside() {
            out.put_pixel(ix.col as u32, ix.row as u32, Rgb(*color));
        }
    }
    Ok(out)
}

pub fn render_overlay(image: &ScalarField, contours: &[(&RegionMask, [u8; 3])], path: &Path) -> Result<()> {
    save(overlay_image(image, contours)?, path)
}

/// Colour for a Laplacian value: red below zero, blue above, white at zero.
pub fn laplacian_color(v: f64) -> [u8; 3] {
    let t = (v.abs().min(LAPLACIAN_CLAMP) / LAPLACIAN_CLAMP).min(1.0);
    let fade = (255.0 * (1.0 - t)).round() as u8;
    if v < 0.0 {
        [255, fade, fade]
    } else {
        [fade, fade, 255]
    }
}

pub fn laplacian_image(phi: &ScalarField) -> RgbImage {
    let lap = laplacian(phi);
    RgbImage::from_fn(phi.width() as u32, phi.height() as u32, |x, y| {
        Rgb(laplacian_color(lap.get(y as usize, x as usize)))
    })
}

pub fn render_laplacian_map(phi: &ScalarField, path: &Path) -> Result<()> {
    save(laplacian_image(phi), path)
}
