//! Grayscale PNG through the `png` crate.

use std::io::Cursor;
use std::path::Path;

use log::warn;
use png::{BitDepth, ColorType, Transformations};

use crate::error::{Error, Result};
use crate::grid::Grid;

pub(crate) const MAGIC: &[u8; 8] = b"\x89PNG\r\n\x1a\n";

fn format_error(path: &Path, offset: usize, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        offset,
        reason: reason.into(),
    }
}

fn luminance(r: u8, g: u8, b: u8) -> f64 {
    0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64
}

/// Decodes 8-bit (or narrower) PNG data. Color images are reduced to
/// luminance with a warning; alpha is ignored; 16-bit data is refused.
pub fn decode(path: &Path, bytes: &[u8]) -> Result<Grid> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(Transformations::EXPAND);
    let mut reader = decoder
        .read_info()
        .map_err(|e| format_error(path, 0, e.to_string()))?;
    let (color, depth) = reader.output_color_type();
    if depth != BitDepth::Eight {
        return Err(format_error(
            path,
            MAGIC.len(),
            format!("{depth:?}-bit samples are not supported"),
        ));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| format_error(path, MAGIC.len(), "image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| format_error(path, 0, e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let channels = match color {
        ColorType::Grayscale => 1,
        ColorType::GrayscaleAlpha => 2,
        ColorType::Rgb => 3,
        ColorType::Rgba => 4,
        ColorType::Indexed => {
            return Err(format_error(path, MAGIC.len(), "unexpanded palette"));
        }
    };
    if channels >= 3 {
        warn!("{}: color image converted to luminance", path.display());
    }
    let data = (0..h)
        .flat_map(|i| {
            let row = &buf[i * info.line_size..i * info.line_size + w * channels];
            row.chunks_exact(channels).map(|px| match channels {
                1 | 2 => px[0] as f64,
                _ => luminance(px[0], px[1], px[2]),
            })
        })
        .collect();
    Grid::from_vec(h, w, data)
}

pub fn encode(path: &Path, samples: &[u8], width: usize, height: usize) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut encoder = png::Encoder::new(&mut out, width as u32, height as u32);
    encoder.set_color(ColorType::Grayscale);
    encoder.set_depth(BitDepth::Eight);
    let io_error = |e: png::EncodingError| Error::io(path, std::io::Error::other(e));
    let mut writer = encoder.write_header().map_err(io_error)?;
    writer.write_image_data(samples).map_err(io_error)?;
    writer.finish().map_err(io_error)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn encode_as(color: ColorType, depth: BitDepth, w: u32, h: u32, data: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        let mut enc = png::Encoder::new(&mut out, w, h);
        enc.set_color(color);
        enc.set_depth(depth);
        let mut wr = enc.write_header().unwrap();
        wr.write_image_data(data).unwrap();
        wr.finish().unwrap();
        out
    }

    #[test]
    fn gray_round_trip() {
        let samples: Vec<u8> = (0..12).map(|v| v * 20).collect();
        let bytes = encode(Path::new("x.png"), &samples, 4, 3).unwrap();
        let g = decode(Path::new("x.png"), &bytes).unwrap();
        assert_eq!((g.rows(), g.cols()), (3, 4));
        assert!(g
            .as_slice()
            .iter()
            .zip(&samples)
            .all(|(&a, &b)| a == b as f64));
    }

    #[test]
    fn rgb_gray_is_its_level() {
        let bytes = encode_as(ColorType::Rgb, BitDepth::Eight, 2, 2, &[100; 12]);
        let g = decode(Path::new("x.png"), &bytes).unwrap();
        assert!(g.as_slice().iter().all(|&v| (v - 100.0).abs() < 1e-9));
    }

    #[test]
    fn sixteen_bit_is_refused() {
        let bytes = encode_as(ColorType::Grayscale, BitDepth::Sixteen, 2, 1, &[0, 1, 2, 3]);
        let err = decode(Path::new("x.png"), &bytes).unwrap_err();
        assert!(matches!(err, Error::Format { .. }), "{err}");
    }
}
