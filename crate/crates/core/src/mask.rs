//! Run-length encoded binary masks and the geometric primitives built on them.
//!
//! Runs are column-major and background-first in the COCO uncompressed style:
//! pixel `(x, y)` has flat index `x * height + y`, the first run counts
//! background pixels (possibly zero), and runs then alternate.

use crate::error::{check_dims, Error, Result};

/// Which value the IoU of two empty masks takes.
///
/// Merging scores treat an empty selection as worthless; evaluation treats a
/// correctly empty prediction as perfect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmptyIou {
    Zero,
    One,
}

impl EmptyIou {
    fn value(self) -> f64 {
        match self {
            EmptyIou::Zero => 0.0,
            EmptyIou::One => 1.0,
        }
    }
}

/// Dense binary grid stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl Bitmap {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Builds a bitmap from row-major data.
    pub fn from_row_major(width: u32, height: u32, data: Vec<bool>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::MalformedMask(format!(
                "dense grid has {} cells, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
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
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize]
    }

    /// Like [`Bitmap::get`] but returns `false` outside the grid.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && x < i64::from(self.width)
            && y < i64::from(self.height)
            && self.get(x as u32, y as u32)
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        let w = self.width as usize;
        self.data[y as usize * w + x as usize] = value;
    }

    pub fn as_row_major(&self) -> &[bool] {
        &self.data
    }

    pub fn count(&self) -> u64 {
        self.data.iter().filter(|&&b| b).count() as u64
    }
}

/// Tight pixel bounding box; `x1`/`y1` are exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BBox {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl BBox {
    pub fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> Result<Self> {
        if x0 >= x1 || y0 >= y1 {
            return Err(Error::InvalidInput(format!(
                "degenerate bbox [{x0}, {y0}, {x1}, {y1}]"
            )));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }

    pub fn to_array(self) -> [u32; 4] {
        [self.x0, self.y0, self.x1, self.y1]
    }
}

/// Binary mask held as canonical column-major run lengths.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    width: u32,
    height: u32,
    runs: Vec<u32>,
}

impl Mask {
    /// Validates and wraps raw run lengths.
    pub fn from_runs(width: u32, height: u32, runs: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::MalformedMask(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        let total: u64 = runs.iter().map(|&r| u64::from(r)).sum();
        let expected = u64::from(width) * u64::from(height);
        if total != expected {
            return Err(Error::MalformedMask(format!(
                "runs sum to {total}, expected {expected}"
            )));
        }
        if runs.iter().skip(1).any(|&r| r == 0) {
            return Err(Error::MalformedMask(
                "only the first run may be zero".to_string(),
            ));
        }
        Ok(Self {
            width,
            height,
            runs,
        })
    }

    /// All-background mask.
    pub fn empty(width: u32, height: u32) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        Self {
            width,
            height,
            runs: vec![width * height],
        }
    }

    pub fn from_fn(width: u32, height: u32, f: impl FnMut(u32, u32) -> bool) -> Self {
        Self::encode(&Bitmap::from_fn(width, height, f))
    }

    /// Canonical RLE of a dense bitmap.
    pub fn encode(bitmap: &Bitmap) -> Self {
        let (w, h) = bitmap.dims();
        assert!(w > 0 && h > 0, "mask dimensions must be positive");
        let mut runs = Vec::new();
        let mut current = false;
        let mut len = 0u32;
        for x in 0..w {
            for y in 0..h {
                let v = bitmap.get(x, y);
                if v != current {
                    runs.push(len);
                    len = 0;
                    current = v;
                }
                len += 1;
            }
        }
        runs.push(len);
        Self {
            width: w,
            height: h,
            runs,
        }
    }

    pub fn decode(&self) -> Bitmap {
        let mut bitmap = Bitmap::new(self.width, self.height);
        for (start, end) in self.intervals() {
            for idx in start..end {
                let x = (idx / u64::from(self.height)) as u32;
                let y = (idx % u64::from(self.height)) as u32;
                bitmap.set(x, y, true);
            }
        }
        bitmap
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

    pub fn runs(&self) -> &[u32] {
        &self.runs
    }

    pub fn into_runs(self) -> Vec<u32> {
        self.runs
    }

    /// Foreground intervals `[start, end)` over column-major flat indices.
    pub fn intervals(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        let mut pos = 0u64;
        self.runs.iter().enumerate().filter_map(move |(i, &r)| {
            let start = pos;
            pos += u64::from(r);
            (i % 2 == 1).then_some((start, pos))
        })
    }

    pub fn area(&self) -> u64 {
        self.runs
            .iter()
            .skip(1)
            .step_by(2)
            .map(|&r| u64::from(r))
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.len() == 1
    }

    /// Foreground count of `self ∩ other`, computed on the runs directly.
    pub fn intersection_area(&self, other: &Mask) -> Result<u64> {
        check_dims(self.dims(), other.dims())?;
        let mut a = self.intervals().peekable();
        let mut b = other.intervals().peekable();
        let mut total = 0u64;
        while let (Some(&(a0, a1)), Some(&(b0, b1))) = (a.peek(), b.peek()) {
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if hi > lo {
                total += hi - lo;
            }
            if a1 <= b1 {
                a.next();
            } else {
                b.next();
            }
        }
        Ok(total)
    }

    pub fn is_subset_of(&self, other: &Mask) -> Result<bool> {
        Ok(self.intersection_area(other)? == self.area())
    }

    pub fn intersection(&self, other: &Mask) -> Result<Mask> {
        self.combine(other, |a, b| a && b)
    }

    pub fn union(&self, other: &Mask) -> Result<Mask> {
        self.combine(other, |a, b| a || b)
    }

    pub fn difference(&self, other: &Mask) -> Result<Mask> {
        self.combine(other, |a, b| a && !b)
    }

    fn combine(&self, other: &Mask, op: impl Fn(bool, bool) -> bool) -> Result<Mask> {
        check_dims(self.dims(), other.dims())?;
        let a = self.decode();
        let b = other.decode();
        Ok(Mask::from_fn(self.width, self.height, |x, y| {
            op(a.get(x, y), b.get(x, y))
        }))
    }

    /// Tightest box around the foreground, `None` for an empty mask.
    pub fn bbox(&self) -> Option<BBox> {
        let h = u64::from(self.height);
        let mut bounds: Option<(u64, u64, u64, u64)> = None;
        for (start, end) in self.intervals() {
            let last = end - 1;
            let (cx0, cy0) = (start / h, start % h);
            let (cx1, cy1) = (last / h, last % h);
            let (ymin, ymax) = if cx0 == cx1 { (cy0, cy1) } else { (0, h - 1) };
            bounds = Some(match bounds {
                None => (cx0, ymin, cx1, ymax),
                Some((x0, y0, x1, y1)) => (x0.min(cx0), y0.min(ymin), x1.max(cx1), y1.max(ymax)),
            });
        }
        bounds.map(|(x0, y0, x1, y1)| BBox {
            x0: x0 as u32,
            y0: y0 as u32,
            x1: x1 as u32 + 1,
            y1: y1 as u32 + 1,
        })
    }
}

/// Intersection over union with an explicit empty-empty convention.
pub fn iou(a: &Mask, b: &Mask, empty: EmptyIou) -> Result<f64> {
    let inter = a.intersection_area(b)?;
    let union = a.area() + b.area() - inter;
    if union == 0 {
        return Ok(empty.value());
    }
    Ok(inter as f64 / union as f64)
}

/// Foreground pixels with at least one 4-neighbour in the background or
/// outside the image.
pub fn boundary(m: &Mask) -> Mask {
    if m.is_empty() {
        return m.clone();
    }
    let bm = m.decode();
    Mask::from_fn(m.width, m.height, |x, y| {
        if !bm.get(x, y) {
            return false;
        }
        let (x, y) = (i64::from(x), i64::from(y));
        [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)]
            .iter()
            .any(|&(nx, ny)| !bm.get_signed(nx, ny))
    })
}

/// Offsets of the Euclidean disk `dx² + dy² ≤ r²`.
pub(crate) fn disk_offsets(radius: u32) -> Vec<(i64, i64)> {
    let r = i64::from(radius);
    let r2 = r * r;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r2 {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Morphological dilation by a Euclidean disk; radius 0 is the identity.
pub fn dilate(m: &Mask, radius: u32) -> Mask {
    if radius == 0 || m.is_empty() {
        return m.clone();
    }
    let (w, h) = m.dims();
    let src = m.decode();
    let mut out = Bitmap::new(w, h);
    let offsets = disk_offsets(radius);
    for y in 0..h {
        for x in 0..w {
            if !src.get(x, y) {
                continue;
            }
            for &(dx, dy) in &offsets {
                let nx = i64::from(x) + dx;
                let ny = i64::from(y) + dy;
                if nx >= 0 && ny >= 0 && nx < i64::from(w) && ny < i64::from(h) {
                    out.set(nx as u32, ny as u32, true);
                }
            }
        }
    }
    Mask::encode(&out)
}
