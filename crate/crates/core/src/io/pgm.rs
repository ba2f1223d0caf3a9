//! Binary PGM (`P5`) with 8-bit samples.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;

pub(crate) const MAGIC: &[u8; 2] = b"P5";

struct Header {
    width: usize,
    height: usize,
    maxval: usize,
    data_start: usize,
}

fn format_error(path: &Path, offset: usize, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        offset,
        reason: reason.into(),
    }
}

/// Reads the three header integers, skipping whitespace and `#` comments.
fn parse_header(path: &Path, bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 || &bytes[..2] != MAGIC {
        return Err(format_error(path, 0, "missing P5 magic number"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(format_error(path, pos, "expected a header integer"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| format_error(path, start, "header integer out of range"))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(format_error(path, pos, "no whitespace after maxval")),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(format_error(path, 2, "empty image"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(format_error(
            path,
            pos - 1,
            format!("maxval {maxval} is not 8-bit"),
        ));
    }
    Ok(Header {
        width,
        height,
        maxval,
        data_start: pos,
    })
}

/// Decodes a `P5` file already in memory. Samples are rescaled to 0..255
/// when `maxval` is below 255.
pub fn decode(path: &Path, bytes: &[u8]) -> Result<Grid> {
    let h = parse_header(path, bytes)?;
    let n = h.width * h.height;
    let raster = &bytes[h.data_start..];
    if raster.len() < n {
        return Err(format_error(
            path,
            bytes.len(),
            format!("raster holds {} of {n} samples", raster.len()),
        ));
    }
    let scale = 255.0 / h.maxval as f64;
    let data = raster[..n]
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v as usize > h.maxval {
                Err(format_error(
                    path,
                    h.data_start + i,
                    format!("sample {v} exceeds maxval {}", h.maxval),
                ))
            } else {
                Ok(v as f64 * scale)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Grid::from_vec(h.height, h.width, data)
}

pub fn encode(samples: &[u8], width: usize, height: usize) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(samples);
    out
}
