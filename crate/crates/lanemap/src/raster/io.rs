//! PNG input/output for class-id masks and rendered overlays.
//!
//! Masks travel as 8-bit single-channel non-interlaced PNGs whose pixel
//! values are class ids; the loader rejects anything else.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use super::{Class, RasterError, SemanticMask};

/// Loads a class-id mask. Rejects non-grayscale or non-8-bit files and any
/// pixel value outside the class catalogue.
pub fn load_mask_png(path: &Path) -> Result<SemanticMask, RasterError> {
    let file = File::open(path)?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut reader = decoder
        .read_info()
        .map_err(|e| RasterError::Png(e.to_string()))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale {
        return Err(RasterError::Png(format!(
            "expected 8-bit grayscale mask, got {:?}",
            info.color_type
        )));
    }
    if info.bit_depth != png::BitDepth::Eight {
        return Err(RasterError::Png(format!(
            "expected 8-bit grayscale mask, got bit depth {:?}",
            info.bit_depth
        )));
    }
    let mut buf = vec![0u8; reader.output_buffer_size().unwrap_or_default()];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| RasterError::Png(e.to_string()))?;
    buf.truncate(frame.buffer_size());
    if let Some(&bad) = buf.iter().find(|&&v| v as usize >= Class::COUNT) {
        return Err(RasterError::InvalidClassId(bad));
    }
    SemanticMask::new(frame.width as usize, frame.height as usize, buf)
}

/// Writes a class-id mask as an 8-bit grayscale non-interlaced PNG.
pub fn save_mask_png(mask: &SemanticMask, path: &Path) -> Result<(), RasterError> {
    let file = File::create(path)?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        mask.width() as u32,
        mask.height() as u32,
    );
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder
        .write_header()
        .map_err(|e| RasterError::Png(e.to_string()))?;
    writer
        .write_image_data(mask.data())
        .map_err(|e| RasterError::Png(e.to_string()))?;
    Ok(())
}

/// Writes interleaved RGB bytes as an 8-bit PNG (overlay rendering output).
pub fn save_rgb_png(
    width: usize,
    height: usize,
    rgb: &[u8],
    path: &Path,
) -> Result<(), RasterError> {
    if rgb.len() != width * height * 3 {
        return Err(RasterError::DataLengthMismatch {
            len: rgb.len(),
            width,
            height,
        });
    }
    let file = File::create(path)?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder
        .write_header()
        .map_err(|e| RasterError::Png(e.to_string()))?;
    writer
        .write_image_data(rgb)
        .map_err(|e| RasterError::Png(e.to_string()))?;
    Ok(())
}
