//! Binary PGM (P5) readers and writers for masks and depth rasters.
//!
//! Masks are 8-bit with maxval 255; depth is 16-bit big-endian with maxval
//! 65535 and values in millimeters, per the Netpbm convention for two-byte
//! samples. Fixtures stay hand-writable and bit-exact across languages.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{DepthRaster, RasterMask};

struct Header {
    width: u32,
    height: u32,
    maxval: u32,
}

/// Read the "P5 <w> <h> <maxval>" header, honoring '#' comments.
fn read_header(r: &mut impl Read, path: &Path) -> Result<Header> {
    let mut magic = [0u8; 2];
    r.read_exact(&mut magic)
        .map_err(|_| Error::format(path, "truncated header"))?;
    if &magic != b"P5" {
        return Err(Error::format(path, "not a binary PGM (missing P5 magic)"));
    }
    let mut fields = [0u32; 3];
    let mut byte = [0u8; 1];
    for field in fields.iter_mut() {
        // skip whitespace and comment lines
        loop {
            r.read_exact(&mut byte)
                .map_err(|_| Error::format(path, "truncated header"))?;
            match byte[0] {
                b' ' | b'\t' | b'\r' | b'\n' => continue,
                b'#' => {
                    while byte[0] != b'\n' {
                        r.read_exact(&mut byte)
                            .map_err(|_| Error::format(path, "truncated header"))?;
                    }
                }
                _ => break,
            }
        }
        let mut value: u64 = 0;
        let mut digits = 0;
        loop {
            let c = byte[0];
            if c.is_ascii_digit() {
                value = value * 10 + u64::from(c - b'0');
                digits += 1;
                if value > u64::from(u32::MAX) {
                    return Err(Error::format(path, "header field overflow"));
                }
            } else if matches!(c, b' ' | b'\t' | b'\r' | b'\n') {
                break;
            } else {
                return Err(Error::format(path, format!("unexpected byte {c:#04x} in header")));
            }
            r.read_exact(&mut byte)
                .map_err(|_| Error::format(path, "truncated header"))?;
        }
        if digits == 0 {
            return Err(Error::format(path, "missing header field"));
        }
        *field = value as u32;
    }
    Ok(Header { width: fields[0], height: fields[1], maxval: fields[2] })
}

/// Load an 8-bit mask, thresholding values at 128.
pub fn load_mask(path: impl AsRef<Path>) -> Result<RasterMask> {
    let path = path.as_ref();
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let h = read_header(&mut r, path)?;
    if h.maxval != 255 {
        return Err(Error::format(path, format!("mask maxval must be 255, got {}", h.maxval)));
    }
    let n = (h.width as usize) * (h.height as usize);
    let mut bytes = vec![0u8; n];
    r.read_exact(&mut bytes)?;
    RasterMask::from_bytes(h.width, h.height, &bytes)
}

pub fn save_mask(mask: &RasterMask, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path.as_ref())?);
    write!(w, "P5\n{} {}\n255\n", mask.width(), mask.height())?;
    w.write_all(mask.data())?;
    Ok(())
}

/// Load a 16-bit big-endian depth raster in millimeters.
///
/// Values outside the ingestion window collapse to 0 (invalid).
pub fn load_depth(path: impl AsRef<Path>) -> Result<DepthRaster> {
    let path = path.as_ref();
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let h = read_header(&mut r, path)?;
    if h.maxval != 65535 {
        return Err(Error::format(path, format!("depth maxval must be 65535, got {}", h.maxval)));
    }
    let n = (h.width as usize) * (h.height as usize);
    let mut bytes = vec![0u8; n * 2];
    r.read_exact(&mut bytes)?;
    let values: Vec<u16> = bytes
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    DepthRaster::from_values(h.width, h.height, &values)
}

pub fn save_depth(depth: &DepthRaster, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path.as_ref())?);
    write!(w, "P5\n{} {}\n65535\n", depth.width(), depth.height())?;
    let mut bytes = Vec::with_capacity(depth.data().len() * 2);
    for &v in depth.data() {
        bytes.extend_from_slice(&v.to_be_bytes());
    }
    w.write_all(&bytes)?;
    Ok(())
}
