//! Binary netpbm: P6 for color, P5 for masks, grey values and label maps.
//!
//! Only 8-bit rasters are read (maxval 1..=255, samples rescaled to
//! 0..=255); anything else is rejected.

use std::path::Path;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// Row-major, interleaved, 0..=255.
    pub data: Vec<u8>,
}

fn skip_space_and_comments(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() {
        match bytes[*pos] {
            b'#' => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            c if c.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> std::result::Result<usize, String> {
    skip_space_and_comments(bytes, pos);
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(format!("expected {what} in header"));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .unwrap()
        .parse()
        .map_err(|_| format!("{what} out of range"))
}

/// Decodes a P5 or P6 image from memory.
pub fn decode(bytes: &[u8]) -> std::result::Result<Raster, String> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err("not a binary PGM (P5) or PPM (P6) file".into()),
    };
    let mut pos = 2;
    if !bytes.get(pos).is_some_and(|c| c.is_ascii_whitespace() || *c == b'#') {
        return Err("malformed magic number".into());
    }
    let width = header_number(bytes, &mut pos, "width")?;
    let height = header_number(bytes, &mut pos, "height")?;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(format!("empty image {width}x{height}"));
    }
    if !(1..=255).contains(&maxval) {
        return Err(format!("maxval {maxval} unsupported; 8-bit only"));
    }
    if !bytes.get(pos).is_some_and(|c| c.is_ascii_whitespace()) {
        return Err("missing whitespace after maxval".into());
    }
    pos += 1;
    let len = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| "image dimensions overflow".to_string())?;
    let raster = bytes.get(pos..pos + len).ok_or_else(|| format!("truncated raster: expected {len} bytes"))?;
    if raster.iter().any(|&v| usize::from(v) > maxval) {
        return Err(format!("sample exceeds maxval {maxval}"));
    }
    let data = if maxval == 255 {
        raster.to_vec()
    } else {
        raster.iter().map(|&v| ((usize::from(v) * 255 + maxval / 2) / maxval) as u8).collect()
    };
    Ok(Raster { width, height, channels, data })
}

pub fn encode(raster: &Raster) -> Vec<u8> {
    let magic = if raster.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", raster.width, raster.height).into_bytes();
    out.extend_from_slice(&raster.data);
    out
}

pub fn read(path: &Path, channels: usize) -> Result<Raster> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let raster = decode(&bytes).map_err(|m| CliError::parse(path, m))?;
    if raster.channels != channels {
        let want = if channels == 1 { "PGM (P5)" } else { "PPM (P6)" };
        return Err(CliError::parse(path, format!("expected a {want} image")));
    }
    Ok(raster)
}

pub fn write(path: &Path, raster: &Raster) -> Result<()> {
    std::fs::write(path, encode(raster)).map_err(|e| CliError::io(path, e))
}
