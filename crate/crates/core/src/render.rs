//! 8-bit grayscale PNG output for heatmaps.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::error::{Error, Result};

/// Maps `v` to `round(255 * min(v, clip) / clip)`; negative values map to 0.
pub fn gray_level(v: f64, clip: f64) -> u8 {
    if !(clip > 0.0) || !(v > 0.0) {
        return 0;
    }
    (255.0 * (v.min(clip) / clip)).round() as u8
}

/// Writes a `width x height` row-major (top row first) grayscale image.
pub fn write_gray_png(path: impl AsRef<Path>, width: usize, height: usize, values: &[f64], clip: f64) -> Result<()> {
    if values.len() != width * height {
        return Err(Error::DimensionMismatch {
            expected: width * height,
            got: values.len(),
        });
    }
    let pixels: Vec<u8> = values.iter().map(|&v| gray_level(v, clip)).collect();
    let file = File::create(path)?;
    let mut enc = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc
        .write_header()
        .map_err(|e| Error::Format(format!("png header: {e}")))?;
    writer
        .write_image_data(&pixels)
        .map_err(|e| Error::Format(format!("png data: {e}")))?;
    Ok(())
}
