//! 8-bit image containers.

use thiserror::Error;

/// Bit depth of every image handled by the crate.
pub const BIT_DEPTH: u32 = 8;
/// Largest representable intensity, `2^BIT_DEPTH - 1`.
pub const MAX_INTENSITY: u8 = u8::MAX;
/// Number of gray levels.
pub const LEVELS: usize = 1 << BIT_DEPTH;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ImageError {
    #[error("image dimensions must be positive, got {width}x{height}")]
    EmptyImage { width: usize, height: usize },
    #[error("pixel buffer holds {actual} samples, expected {expected}")]
    BufferSize { expected: usize, actual: usize },
    #[error("images differ in size: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
}

/// Single-channel 8-bit image stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gray8Image {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Gray8Image {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyImage { width, height });
        }
        let expected = width * height;
        if pixels.len() != expected {
            return Err(ImageError::BufferSize {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, ImageError> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self, ImageError> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Applies a 256-entry lookup table to every pixel.
    pub fn map_levels(&self, lut: &[u8; 256]) -> Self {
        Self {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| lut[p as usize]).collect(),
        }
    }

    pub fn same_size(&self, other: &Self) -> Result<(), ImageError> {
        if self.width != other.width || self.height != other.height {
            return Err(ImageError::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }
}

/// Interleaved 8-bit RGB image stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rgb8Image {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Rgb8Image {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyImage { width, height });
        }
        let expected = 3 * width * height;
        if pixels.len() != expected {
            return Err(ImageError::BufferSize {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Extracts channel `c` (0 = R, 1 = G, 2 = B).
    pub fn channel(&self, c: usize) -> Gray8Image {
        assert!(c < 3, "channel index {c} out of range");
        Gray8Image {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().skip(c).step_by(3).copied().collect(),
        }
    }

    pub fn from_channels(r: &Gray8Image, g: &Gray8Image, b: &Gray8Image) -> Result<Self, ImageError> {
        r.same_size(g)?;
        r.same_size(b)?;
        let pixels = r
            .pixels()
            .iter()
            .zip(g.pixels())
            .zip(b.pixels())
            .flat_map(|((&r, &g), &b)| [r, g, b])
            .collect();
        Self::new(r.width(), r.height(), pixels)
    }
}
