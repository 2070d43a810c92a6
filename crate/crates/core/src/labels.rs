//! Per-frame label maps and their P5 PGM serialization.
//!
//! A result tree stores one graymap per frame at
//! `<root>/<video_id>/<frame_index:05>.pgm`, label value = object id.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{check_dims, Error, Result};
use crate::mask::{Bitmap, Mask};

/// Dense row-major grid of object ids, 0 = background.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelMap {
    width: u32,
    height: u32,
    labels: Vec<u8>,
}

impl LabelMap {
    pub fn background(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            labels: vec![0; width as usize * height as usize],
        }
    }

    pub fn from_labels(width: u32, height: u32, labels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width as usize * height as usize {
            return Err(Error::LabelMap(format!(
                "{} labels for a {width}x{height} map",
                labels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    /// Paints masks in order; earlier entries keep pixels already claimed.
    pub fn paint_first_wins<'a>(
        width: u32,
        height: u32,
        layers: impl IntoIterator<Item = (u8, &'a Mask)>,
    ) -> Result<Self> {
        let mut map = Self::background(width, height);
        for (id, mask) in layers {
            check_dims((width, height), mask.dims())?;
            let h = u64::from(height);
            for (start, end) in mask.intervals() {
                for idx in start..end {
                    let (x, y) = ((idx / h) as usize, (idx % h) as usize);
                    let cell = &mut map.labels[y * width as usize + x];
                    if *cell == 0 {
                        *cell = id;
                    }
                }
            }
        }
        Ok(map)
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
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.labels[y as usize * self.width as usize + x as usize]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn mask_of(&self, label: u8) -> Mask {
        let bm = Bitmap::from_row_major(
            self.width,
            self.height,
            self.labels.iter().map(|&l| l == label).collect(),
        )
        .expect("label map dims are consistent");
        Mask::encode(&bm)
    }

    /// Sorted distinct non-zero labels.
    pub fn object_labels(&self) -> Vec<u8> {
        let mut seen = [false; 256];
        for &l in &self.labels {
            seen[l as usize] = true;
        }
        (1..=255u8).filter(|&l| seen[l as usize]).collect()
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.labels);
        out
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let mut next_token = || -> Result<String> {
            loop {
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < bytes.len() && bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::LabelMap("truncated PGM header".into()));
            }
            Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
        };
        if next_token()? != "P5" {
            return Err(Error::LabelMap("not a binary (P5) graymap".into()));
        }
        let mut number = |what: &str| -> Result<u32> {
            next_token()?
                .parse::<u32>()
                .map_err(|_| Error::LabelMap(format!("bad PGM {what}")))
        };
        let width = number("width")?;
        let height = number("height")?;
        let maxval = number("maxval")?;
        if maxval == 0 || maxval > 255 {
            return Err(Error::LabelMap(format!("unsupported maxval {maxval}")));
        }
        // exactly one whitespace byte separates the header from the raster
        let data_start = pos + 1;
        let n = width as usize * height as usize;
        if bytes.len() != data_start + n {
            return Err(Error::LabelMap(format!(
                "raster has {} bytes, expected {n}",
                bytes.len().saturating_sub(data_start)
            )));
        }
        Self::from_labels(width, height, bytes[data_start..].to_vec())
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_pgm()).map_err(|e| Error::io(path, e))
    }

    pub fn load_pgm(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_pgm(&bytes)
    }
}

pub fn frame_file_name(frame: usize) -> String {
    format!("{frame:05}.pgm")
}

pub fn sequence_dir(root: &Path, video_id: &str) -> PathBuf {
    root.join(video_id)
}

/// Writes `<root>/<video_id>/<frame:05>.pgm` for every frame.
pub fn write_sequence(root: &Path, video_id: &str, frames: &[LabelMap]) -> Result<()> {
    let dir = sequence_dir(root, video_id);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for (t, map) in frames.iter().enumerate() {
        map.save_pgm(dir.join(frame_file_name(t)))?;
    }
    Ok(())
}

/// Reads consecutive frames starting at `00000.pgm` until the first gap.
pub fn read_sequence(root: &Path, video_id: &str) -> Result<Vec<LabelMap>> {
    let dir = sequence_dir(root, video_id);
    if !dir.is_dir() {
        return Err(Error::InvalidInput(format!(
            "no label-map directory {}",
            dir.display()
        )));
    }
    let mut frames = Vec::new();
    loop {
        let path = dir.join(frame_file_name(frames.len()));
        if !path.exists() {
            break;
        }
        let map = LabelMap::load_pgm(&path)?;
        if let Some(first) = frames.first() {
            check_dims(LabelMap::dims(first), map.dims())?;
        }
        frames.push(map);
    }
    if frames.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no frames under {}",
            dir.display()
        )));
    }
    Ok(frames)
}

/// Full-video ground truth: one label map per frame plus the object ids
/// that are expected to appear.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthVideo {
    pub object_ids: Vec<u8>,
    pub frames: Vec<LabelMap>,
}

impl GroundTruthVideo {
    pub fn new(object_ids: Vec<u8>, frames: Vec<LabelMap>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::InvalidInput("ground truth has no frames".into()));
        }
        let dims = frames[0].dims();
        for f in &frames {
            check_dims(dims, f.dims())?;
            if let Some(bad) = f
                .object_labels()
                .into_iter()
                .find(|l| !object_ids.contains(l))
            {
                return Err(Error::InvalidInput(format!(
                    "ground truth label {bad} is not a declared object"
                )));
            }
        }
        Ok(Self { object_ids, frames })
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn dims(&self) -> (u32, u32) {
        self.frames[0].dims()
    }

    pub fn object_mask(&self, frame: usize, object_id: u8) -> Mask {
        self.frames[frame].mask_of(object_id)
    }
}
