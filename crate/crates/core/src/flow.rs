//! Dense optical flow fields in the Middlebury `.flo` layout and backward
//! nearest-neighbour mask warping.

use std::fs;
use std::path::Path;

use crate::error::{check_dims, Error, Result};
use crate::mask::{Bitmap, Mask};

/// Magic number opening every `.flo` file ("PIEH" read as a float).
pub const FLO_MAGIC: f32 = 202021.25;

/// Row-major grid of `(dx, dy)` displacements in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: u32,
    height: u32,
    vectors: Vec<(f32, f32)>,
}

impl FlowField {
    pub fn new(width: u32, height: u32, vectors: Vec<(f32, f32)>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::FlowData(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if vectors.len() != width as usize * height as usize {
            return Err(Error::FlowData(format!(
                "{} vectors for a {width}x{height} field",
                vectors.len()
            )));
        }
        if let Some(i) = vectors
            .iter()
            .position(|(dx, dy)| !dx.is_finite() || !dy.is_finite())
        {
            return Err(Error::FlowData(format!(
                "non-finite vector at pixel ({}, {})",
                i % width as usize,
                i / width as usize
            )));
        }
        Ok(Self {
            width,
            height,
            vectors,
        })
    }

    pub fn zeros(width: u32, height: u32) -> Self {
        Self::uniform(width, height, 0.0, 0.0)
    }

    pub fn uniform(width: u32, height: u32, dx: f32, dy: f32) -> Self {
        Self::new(
            width,
            height,
            vec![(dx, dy); width as usize * height as usize],
        )
        .expect("uniform flow is valid")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> (f32, f32) {
        self.vectors[y as usize * self.width as usize + x as usize]
    }

    pub fn vectors(&self) -> &[(f32, f32)] {
        &self.vectors
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 {
            return Err(Error::FlowFormat(format!(
                "header needs 12 bytes, file has {}",
                bytes.len()
            )));
        }
        let word = |i: usize| -> [u8; 4] { bytes[i..i + 4].try_into().expect("4-byte slice") };
        let magic = f32::from_le_bytes(word(0));
        if magic != FLO_MAGIC {
            return Err(Error::FlowFormat(format!("bad magic {magic}")));
        }
        let width = i32::from_le_bytes(word(4));
        let height = i32::from_le_bytes(word(8));
        if width <= 0 || height <= 0 {
            return Err(Error::FlowFormat(format!(
                "non-positive dimensions {width}x{height}"
            )));
        }
        let (width, height) = (width as u32, height as u32);
        let count = width as usize * height as usize;
        let expected = 12 + count * 8;
        if bytes.len() != expected {
            return Err(Error::FlowFormat(format!(
                "payload is {} bytes, expected {expected}",
                bytes.len()
            )));
        }
        let vectors = bytes[12..]
            .chunks_exact(8)
            .map(|c| {
                (
                    f32::from_le_bytes(c[0..4].try_into().expect("4 bytes")),
                    f32::from_le_bytes(c[4..8].try_into().expect("4 bytes")),
                )
            })
            .collect();
        Self::new(width, height, vectors)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.vectors.len() * 8);
        out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
        out.extend_from_slice(&(self.width as i32).to_le_bytes());
        out.extend_from_slice(&(self.height as i32).to_le_bytes());
        for &(dx, dy) in &self.vectors {
            out.extend_from_slice(&dx.to_le_bytes());
            out.extend_from_slice(&dy.to_le_bytes());
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}

pub fn load_flo(path: impl AsRef<Path>) -> Result<FlowField> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    FlowField::from_bytes(&bytes)
}

/// Rounded source location `(x + dx, y + dy)` sampled for output pixel `(x, y)`.
///
/// `f64::round` rounds half away from zero.
#[inline]
pub fn sample_point(x: u32, y: u32, v: (f32, f32)) -> (i64, i64) {
    let sx = (f64::from(x) + f64::from(v.0)).round() as i64;
    let sy = (f64::from(y) + f64::from(v.1)).round() as i64;
    (sx, sy)
}

/// Warps a frame `t-1` mask into frame `t` using the `t -> t-1` backward field.
/// Samples falling outside the image are background.
pub fn warp_mask(m: &Mask, backward_flow: &FlowField) -> Result<Mask> {
    check_dims(m.dims(), backward_flow.dims())?;
    if m.is_empty() {
        return Ok(m.clone());
    }
    let src = m.decode();
    Ok(warp_bitmap(&src, backward_flow))
}

pub(crate) fn warp_bitmap(src: &Bitmap, backward_flow: &FlowField) -> Mask {
    Mask::from_fn(src.width(), src.height(), |x, y| {
        let (sx, sy) = sample_point(x, y, backward_flow.get(x, y));
        src.get_signed(sx, sy)
    })
}
