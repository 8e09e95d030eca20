//! Binary instance masks and millimeter depth rasters.
//!
//! Both rasters are dense row-major grids sharing dimensions with the camera
//! intrinsics they were captured under. Masks are strictly two-valued
//! (0 background, 255 fruit); depth is unsigned 16-bit millimeters with 0
//! marking invalid pixels.

use crate::error::{Error, Result};

/// Mask value marking a fruit pixel.
pub const FRUIT: u8 = 255;

/// Closed validity window for ingested depth, in millimeters.
pub const DEPTH_MIN_MM: u16 = 100;
pub const DEPTH_MAX_MM: u16 = 10_000;

/// Binary instance mask, 0 = background, 255 = fruit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterMask {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl RasterMask {
    /// All-background mask.
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![0; (width as usize) * (height as usize)],
        }
    }

    /// Build from raw bytes, thresholding at 128 so anti-aliased external
    /// masks collapse to the two-valued domain.
    pub fn from_bytes(width: u32, height: u32, bytes: &[u8]) -> Result<Self> {
        let expect = (width as usize) * (height as usize);
        if bytes.len() != expect {
            return Err(Error::Consistency(format!(
                "mask payload is {} bytes, {}x{} needs {}",
                bytes.len(),
                width,
                height,
                expect
            )));
        }
        let data = bytes.iter().map(|&b| if b >= 128 { FRUIT } else { 0 }).collect();
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    fn idx(&self, u: u32, v: u32) -> usize {
        (v as usize) * (self.width as usize) + u as usize
    }

    #[inline]
    pub fn is_fruit(&self, u: u32, v: u32) -> bool {
        self.data[self.idx(u, v)] == FRUIT
    }

    #[inline]
    pub fn set_fruit(&mut self, u: u32, v: u32, fruit: bool) {
        let i = self.idx(u, v);
        self.data[i] = if fruit { FRUIT } else { 0 };
    }

    /// Exact count of fruit pixels.
    pub fn area_px(&self) -> usize {
        self.data.iter().filter(|&&b| b == FRUIT).count()
    }

    /// Row-major iterator over fruit pixel coordinates.
    pub fn fruit_pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == FRUIT)
            .map(move |(i, _)| ((i as u32) % w, (i as u32) / w))
    }

    pub fn same_dims(&self, other: &RasterMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Pixelwise union.
    pub fn union(&self, other: &RasterMask) -> RasterMask {
        debug_assert!(self.same_dims(other));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a.max(b))
            .collect();
        RasterMask { width: self.width, height: self.height, data }
    }

    /// Pixelwise intersection.
    pub fn intersection(&self, other: &RasterMask) -> RasterMask {
        debug_assert!(self.same_dims(other));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a.min(b))
            .collect();
        RasterMask { width: self.width, height: self.height, data }
    }

    /// Pixels in `self` but not in `other`.
    pub fn minus(&self, other: &RasterMask) -> RasterMask {
        debug_assert!(self.same_dims(other));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| if a == FRUIT && b != FRUIT { FRUIT } else { 0 })
            .collect();
        RasterMask { width: self.width, height: self.height, data }
    }

    /// True when every fruit pixel of `self` is fruit in `other`.
    pub fn is_subset_of(&self, other: &RasterMask) -> bool {
        self.same_dims(other)
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(&a, &b)| a != FRUIT || b == FRUIT)
    }
}

/// Per-pixel depth in millimeters, 0 = invalid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthRaster {
    width: u32,
    height: u32,
    data: Vec<u16>,
}

impl DepthRaster {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![0; (width as usize) * (height as usize)],
        }
    }

    /// Build from raw values, zeroing anything outside the validity window.
    pub fn from_values(width: u32, height: u32, values: &[u16]) -> Result<Self> {
        let expect = (width as usize) * (height as usize);
        if values.len() != expect {
            return Err(Error::Consistency(format!(
                "depth payload is {} samples, {}x{} needs {}",
                values.len(),
                width,
                height,
                expect
            )));
        }
        let data = values
            .iter()
            .map(|&v| if (DEPTH_MIN_MM..=DEPTH_MAX_MM).contains(&v) { v } else { 0 })
            .collect();
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    #[inline]
    fn idx(&self, u: u32, v: u32) -> usize {
        (v as usize) * (self.width as usize) + u as usize
    }

    /// Depth in millimeters; 0 means invalid.
    #[inline]
    pub fn at(&self, u: u32, v: u32) -> u16 {
        self.data[self.idx(u, v)]
    }

    #[inline]
    pub fn set(&mut self, u: u32, v: u32, mm: u16) {
        let i = self.idx(u, v);
        self.data[i] = mm;
    }

    #[inline]
    pub fn is_valid_at(&self, u: u32, v: u32) -> bool {
        self.at(u, v) != 0
    }

    pub fn same_dims_mask(&self, mask: &RasterMask) -> bool {
        self.width == mask.width() && self.height == mask.height()
    }
}
