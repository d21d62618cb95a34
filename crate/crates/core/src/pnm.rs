//! Binary netpbm reader and writer (P5 gray, P6 RGB, maxval 255).
//!
//! Header tokens may be separated by any whitespace and `#` comments. Exactly
//! one whitespace byte separates maxval from the pixel payload. Writers always
//! emit `P5\n<w> <h>\n255\n` (or `P6`), so write/read round trips are bit-exact.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::image::{Gray8Image, ImageError, Rgb8Image};

#[derive(Debug, Error)]
pub enum PnmError {
    #[error("unsupported magic number {0:?}, expected P5 or P6")]
    BadMagic(String),
    #[error("unsupported maxval {0}, only 255 is accepted")]
    UnsupportedDepth(u32),
    #[error("truncated pixel payload: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PnmImage {
    Gray(Gray8Image),
    Rgb(Rgb8Image),
}

impl PnmImage {
    pub fn width(&self) -> usize {
        match self {
            Self::Gray(g) => g.width(),
            Self::Rgb(c) => c.width(),
        }
    }

    pub fn height(&self) -> usize {
        match self {
            Self::Gray(g) => g.height(),
            Self::Rgb(c) => c.height(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Gray(_) => "gray",
            Self::Rgb(_) => "rgb",
        }
    }
}

impl From<Gray8Image> for PnmImage {
    fn from(img: Gray8Image) -> Self {
        Self::Gray(img)
    }
}

impl From<Rgb8Image> for PnmImage {
    fn from(img: Rgb8Image) -> Self {
        Self::Rgb(img)
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_separators(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, PnmError> {
        self.skip_separators();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PnmError::BadHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PnmError::BadHeader(format!("{what} out of range")))
    }
}

/// Decodes a P5 or P6 image from memory.
pub fn decode_pnm(bytes: &[u8]) -> Result<PnmImage, PnmError> {
    let magic = bytes.get(..2).unwrap_or(bytes);
    let channels = match magic {
        b"P5" => 1,
        b"P6" => 3,
        _ => return Err(PnmError::BadMagic(String::from_utf8_lossy(magic).into_owned())),
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(PnmError::UnsupportedDepth(maxval));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        Some(_) => return Err(PnmError::BadHeader("no whitespace after maxval".into())),
        None => {
            return Err(PnmError::Truncated {
                expected: channels * width * height,
                actual: 0,
            })
        }
    }
    let expected = channels * width * height;
    let payload = &bytes[cur.pos..];
    if payload.len() < expected {
        return Err(PnmError::Truncated {
            expected,
            actual: payload.len(),
        });
    }
    let pixels = payload[..expected].to_vec();
    Ok(if channels == 1 {
        PnmImage::Gray(Gray8Image::new(width, height, pixels)?)
    } else {
        PnmImage::Rgb(Rgb8Image::new(width, height, pixels)?)
    })
}

pub fn encode_pnm(img: &PnmImage) -> Vec<u8> {
    let (magic, w, h, pixels) = match img {
        PnmImage::Gray(g) => ("P5", g.width(), g.height(), g.pixels()),
        PnmImage::Rgb(c) => ("P6", c.width(), c.height(), c.pixels()),
    };
    let mut out = format!("{magic}\n{w} {h}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub fn read_pnm(path: impl AsRef<Path>) -> Result<PnmImage, PnmError> {
    decode_pnm(&fs::read(path)?)
}

pub fn write_pnm(img: &PnmImage, path: impl AsRef<Path>) -> Result<(), PnmError> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_pnm(img))?;
    Ok(())
}
