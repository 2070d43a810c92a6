//! Deterministic synthetic videos: rigidly translating shapes, exact
//! backward flow, per-frame proposals with controllable distractors and
//! embedding noise.
//!
//! Objects later in [`ScenarioSpec::objects`] are drawn on top. Ground-truth
//! masks are the visible pixels of each object. Flow at a pixel covered by
//! an object carries that object's displacement; background pixels that were
//! background in the previous frame carry zero flow, and freshly uncovered
//! pixels point outside the image (they have no source).

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::labels::{write_sequence, GroundTruthVideo, LabelMap};
use crate::manifest::{GroundTruthObject, Proposal, VideoManifest};
use crate::mask::{Bitmap, Mask};
use crate::search::{rng_from_seed, SearchRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Rect,
    Ellipse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistractorEmbedding {
    /// Fresh unit direction orthogonal to every object archetype.
    Orthogonal,
    /// An object's archetype plus noise, so ReID cannot tell them apart.
    NearParallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub shape: Shape,
    pub size: (u32, u32),
    /// Top-left corner in frame 0.
    pub start: (i64, i64),
    /// Integer displacement per frame; reflected at the image border.
    pub velocity: (i64, i64),
    /// Objects sharing an archetype have identical mean embeddings.
    pub archetype: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub video_id: String,
    pub seed: u64,
    pub frame_count: usize,
    pub width: u32,
    pub height: u32,
    pub embedding_dim: usize,
    pub objects: Vec<ObjectSpec>,
    /// Static non-target objects proposed in every frame.
    pub distractor_count: usize,
    pub distractor_embedding: DistractorEmbedding,
    pub distractor_objectness: (f64, f64),
    /// Mean objectness of true proposals; each draw adds up to ±0.05.
    pub true_objectness: f64,
    /// Standard deviation of per-component embedding noise.
    pub embedding_noise: f64,
    /// Per object and frame, probability of an extra jittered copy.
    pub spurious_rate: f64,
    /// When false, specs whose objects ever overlap are rejected.
    pub allow_occlusion: bool,
}

/// Bounds for [`ScenarioSpec::random`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomLimits {
    pub max_frames: usize,
    pub max_objects: usize,
    pub max_proposals: usize,
}

impl Default for RandomLimits {
    fn default() -> Self {
        Self {
            max_frames: 6,
            max_objects: 3,
            max_proposals: 6,
        }
    }
}

impl ScenarioSpec {
    fn base(video_id: &str, seed: u64) -> Self {
        Self {
            video_id: video_id.to_string(),
            seed,
            frame_count: 8,
            width: 48,
            height: 32,
            embedding_dim: 16,
            objects: Vec::new(),
            distractor_count: 0,
            distractor_embedding: DistractorEmbedding::Orthogonal,
            distractor_objectness: (0.3, 0.7),
            true_objectness: 0.9,
            embedding_noise: 0.0,
            spurious_rate: 0.0,
            allow_occlusion: false,
        }
    }

    /// One moving square, no distractors, no noise.
    pub fn single_object(seed: u64) -> Self {
        let mut s = Self::base("single", seed);
        s.objects.push(ObjectSpec {
            shape: Shape::Rect,
            size: (8, 8),
            start: (4, 4),
            velocity: (3, 1),
            archetype: 0,
        });
        s
    }

    /// Two objects with identical embeddings passing each other with partial
    /// overlap, plus static look-alike distractors. Only temporal propagation
    /// can keep the identities apart.
    pub fn crossing_identical(seed: u64) -> Self {
        let mut s = Self::base("crossing", seed);
        s.width = 64;
        s.height = 48;
        s.frame_count = 14;
        s.embedding_noise = 0.05;
        s.spurious_rate = 0.3;
        s.distractor_count = 3;
        s.distractor_embedding = DistractorEmbedding::NearParallel;
        s.distractor_objectness = (0.85, 0.95);
        s.allow_occlusion = true;
        s.objects = vec![
            ObjectSpec {
                shape: Shape::Rect,
                size: (10, 10),
                start: (2, 14),
                velocity: (4, 0),
                archetype: 0,
            },
            ObjectSpec {
                shape: Shape::Ellipse,
                size: (10, 10),
                start: (52, 20),
                velocity: (-4, 0),
                archetype: 0,
            },
        ];
        s
    }

    /// Small randomized instance, deterministic in `seed`.
    pub fn random(seed: u64, limits: RandomLimits) -> Self {
        let mut rng = rng_from_seed(seed ^ 0x005e_ed0f_5ce7_a110);
        let mut s = Self::base(&format!("rand{seed:06}"), seed);
        s.width = rng.random_range(20..=36);
        s.height = rng.random_range(16..=28);
        s.frame_count = rng.random_range(2..=limits.max_frames.max(2));
        let n_obj = rng.random_range(1..=limits.max_objects.max(1));
        s.allow_occlusion = rng.random_bool(0.5);
        s.embedding_noise = rng.random_range(0.0..0.3);
        s.spurious_rate = if 2 * n_obj <= limits.max_proposals {
            rng.random_range(0.0..0.6)
        } else {
            0.0
        };
        let per_obj = if s.spurious_rate > 0.0 { 2 } else { 1 };
        let room = limits.max_proposals.saturating_sub(per_obj * n_obj);
        s.distractor_count = rng.random_range(0..=room);
        s.distractor_embedding = if rng.random_bool(0.5) {
            DistractorEmbedding::Orthogonal
        } else {
            DistractorEmbedding::NearParallel
        };
        let lo = rng.random_range(0.0..0.8);
        s.distractor_objectness = (lo, (lo + 0.2f64).min(1.0));
        let n_arch = rng.random_range(1..=n_obj);
        s.objects = (0..n_obj)
            .map(|_| {
                let w = rng.random_range(3..=s.width / 3);
                let h = rng.random_range(3..=s.height / 3);
                ObjectSpec {
                    shape: if rng.random_bool(0.5) {
                        Shape::Rect
                    } else {
                        Shape::Ellipse
                    },
                    size: (w, h),
                    start: (
                        rng.random_range(0..=i64::from(s.width - w)),
                        rng.random_range(0..=i64::from(s.height - h)),
                    ),
                    velocity: (rng.random_range(-3..=3), rng.random_range(-2..=2)),
                    archetype: rng.random_range(0..n_arch),
                }
            })
            .collect();
        s
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.width == 0 || self.height == 0 || self.frame_count == 0 || self.embedding_dim == 0 {
            return bad("dimensions, frame count and embedding size must be positive".into());
        }
        if self.objects.is_empty() {
            return bad("at least one object required".into());
        }
        if self.objects.len() > 255 {
            return bad("more than 255 objects".into());
        }
        for (k, o) in self.objects.iter().enumerate() {
            let (w, h) = o.size;
            if w == 0 || h == 0 || w > self.width || h > self.height {
                return bad(format!("object {k} of size {w}x{h} does not fit the image"));
            }
            let (x, y) = o.start;
            if x < 0
                || y < 0
                || x + i64::from(w) > i64::from(self.width)
                || y + i64::from(h) > i64::from(self.height)
            {
                return bad(format!("object {k} starts outside the image"));
            }
        }
        let arch = self.objects.iter().map(|o| o.archetype).max().unwrap_or(0) + 1;
        let needed = match self.distractor_embedding {
            DistractorEmbedding::Orthogonal => arch + self.distractor_count,
            DistractorEmbedding::NearParallel => arch,
        };
        if needed > self.embedding_dim {
            return bad(format!(
                "embedding_dim {} cannot hold {needed} orthogonal directions",
                self.embedding_dim
            ));
        }
        let (lo, hi) = self.distractor_objectness;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return bad("distractor objectness range must lie in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.spurious_rate) || self.embedding_noise < 0.0 {
            return bad("spurious rate or noise out of range".into());
        }
        Ok(())
    }
}

fn template(shape: Shape, (w, h): (u32, u32)) -> Bitmap {
    match shape {
        Shape::Rect => Bitmap::from_fn(w, h, |_, _| true),
        Shape::Ellipse => {
            let (rx, ry) = (f64::from(w) / 2.0, f64::from(h) / 2.0);
            Bitmap::from_fn(w, h, |x, y| {
                let dx = (f64::from(x) + 0.5 - rx) / rx;
                let dy = (f64::from(y) + 0.5 - ry) / ry;
                dx * dx + dy * dy <= 1.0
            })
        }
    }
}

/// Reflecting integer trajectory of a `size` box inside `extent`.
fn trajectory(start: i64, velocity: i64, size: u32, extent: u32, frames: usize) -> Vec<i64> {
    let max = i64::from(extent) - i64::from(size);
    let mut pos = start;
    let mut v = velocity;
    let mut out = Vec::with_capacity(frames);
    for _ in 0..frames {
        out.push(pos);
        let mut next = pos + v;
        if next < 0 {
            next = -next;
            v = -v;
        }
        if next > max {
            next = 2 * max - next;
            v = -v;
        }
        pos = next.clamp(0, max);
    }
    out
}

fn stamp(width: u32, height: u32, tpl: &Bitmap, (ox, oy): (i64, i64)) -> Mask {
    Mask::from_fn(width, height, |x, y| {
        let tx = i64::from(x) - ox;
        let ty = i64::from(y) - oy;
        tpl.get_signed(tx, ty)
    })
}

fn unit(dim: usize, axis: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[axis] = 1.0;
    v
}

fn noisy(base: &[f64], sigma: f64, rng: &mut SearchRng) -> Vec<f64> {
    if sigma == 0.0 {
        return base.to_vec();
    }
    let n = Normal::new(0.0, sigma).expect("sigma is finite and non-negative");
    base.iter().map(|&b| b + n.sample(rng)).collect()
}

fn shift_mask(m: &Mask, dx: i64, dy: i64) -> Mask {
    let src = m.decode();
    Mask::from_fn(m.width(), m.height(), |x, y| {
        src.get_signed(i64::from(x) - dx, i64::from(y) - dy)
    })
}

/// A generated video and its full ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticVideo {
    pub manifest: VideoManifest,
    pub ground_truth: GroundTruthVideo,
    /// Each object's top-left corner per frame.
    pub positions: Vec<Vec<(i64, i64)>>,
}

pub fn generate(spec: &ScenarioSpec) -> Result<SyntheticVideo> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let n = spec.frame_count;
    let mut rng = rng_from_seed(spec.seed);

    let templates: Vec<Bitmap> = spec
        .objects
        .iter()
        .map(|o| template(o.shape, o.size))
        .collect();
    let positions: Vec<Vec<(i64, i64)>> = spec
        .objects
        .iter()
        .map(|o| {
            let xs = trajectory(o.start.0, o.velocity.0, o.size.0, w, n);
            let ys = trajectory(o.start.1, o.velocity.1, o.size.1, h, n);
            xs.into_iter().zip(ys).collect()
        })
        .collect();

    // full (unoccluded) silhouettes [object][t]
    let full: Vec<Vec<Mask>> = templates
        .iter()
        .zip(&positions)
        .map(|(tpl, pos)| pos.iter().map(|&p| stamp(w, h, tpl, p)).collect())
        .collect();

    if !spec.allow_occlusion {
        for t in 0..n {
            for a in 0..full.len() {
                for b in a + 1..full.len() {
                    if full[a][t].intersection_area(&full[b][t])? > 0 {
                        return Err(Error::InvalidInput(format!(
                            "objects {a} and {b} overlap in frame {t} but occlusion is disabled"
                        )));
                    }
                }
            }
        }
    }

    let object_ids: Vec<u8> = (1..=spec.objects.len() as u8).collect();
    let label_maps: Vec<LabelMap> = (0..n)
        .map(|t| {
            LabelMap::paint_first_wins(
                w,
                h,
                (0..full.len()).rev().map(|k| (object_ids[k], &full[k][t])),
            )
        })
        .collect::<Result<_>>()?;
    let ground_truth = GroundTruthVideo::new(object_ids.clone(), label_maps.clone())?;

    let flows: Vec<FlowField> = (1..n)
        .map(|t| {
            let (cur, prev) = (&label_maps[t], &label_maps[t - 1]);
            let mut vectors = Vec::with_capacity(w as usize * h as usize);
            for y in 0..h {
                for x in 0..w {
                    let l = cur.get(x, y);
                    let v = if l > 0 {
                        let k = usize::from(l - 1);
                        let (px, py) = positions[k][t - 1];
                        let (cx, cy) = positions[k][t];
                        ((px - cx) as f32, (py - cy) as f32)
                    } else if prev.get(x, y) == 0 {
                        (0.0, 0.0)
                    } else {
                        (-(x as f32) - 2.0, 0.0)
                    };
                    vectors.push(v);
                }
            }
            FlowField::new(w, h, vectors)
        })
        .collect::<Result<_>>()?;

    let dim = spec.embedding_dim;
    let n_arch = spec.objects.iter().map(|o| o.archetype).max().unwrap_or(0) + 1;
    let archetypes: Vec<Vec<f64>> = (0..n_arch).map(|a| unit(dim, a)).collect();

    let mut gt_objects = Vec::with_capacity(spec.objects.len());
    for (k, o) in spec.objects.iter().enumerate() {
        let first = ground_truth.object_mask(0, object_ids[k]);
        if first.is_empty() {
            return Err(Error::InvalidInput(format!(
                "object {k} is hidden in frame 0"
            )));
        }
        let emb = noisy(&archetypes[o.archetype], spec.embedding_noise, &mut rng);
        gt_objects.push(GroundTruthObject::new(object_ids[k], first, emb)?);
    }

    // static distractors
    let distractors: Vec<(Mask, Vec<f64>)> = (0..spec.distractor_count)
        .map(|d| {
            let dw = rng.random_range(3..=(w / 4).max(3)).min(w);
            let dh = rng.random_range(3..=(h / 4).max(3)).min(h);
            let shape = if rng.random_bool(0.5) {
                Shape::Rect
            } else {
                Shape::Ellipse
            };
            let x = rng.random_range(0..=i64::from(w - dw));
            let y = rng.random_range(0..=i64::from(h - dh));
            let mask = stamp(w, h, &template(shape, (dw, dh)), (x, y));
            let base = match spec.distractor_embedding {
                DistractorEmbedding::Orthogonal => unit(dim, n_arch + d),
                DistractorEmbedding::NearParallel => {
                    archetypes[spec.objects[d % spec.objects.len()].archetype].clone()
                }
            };
            (mask, base)
        })
        .collect();

    let mut proposals = Vec::with_capacity(n);
    for t in 0..n {
        let mut frame: Vec<Proposal> = Vec::new();
        for (k, o) in spec.objects.iter().enumerate() {
            let visible = ground_truth.object_mask(t, object_ids[k]);
            if visible.is_empty() {
                continue;
            }
            let arch = &archetypes[o.archetype];
            let score = (spec.true_objectness + rng.random_range(-0.05..=0.05)).clamp(0.0, 1.0);
            let emb = noisy(arch, spec.embedding_noise, &mut rng);
            if spec.spurious_rate > 0.0 && rng.random_bool(spec.spurious_rate) {
                let dx = rng.random_range(-3..=3i64);
                let dy = rng.random_range(-3..=3i64);
                let jitter = shift_mask(&visible, if dx == 0 && dy == 0 { 1 } else { dx }, dy);
                if !jitter.is_empty() {
                    let s = rng.random_range(0.3..0.8);
                    let e = noisy(arch, spec.embedding_noise, &mut rng);
                    frame.push(Proposal::new(t, jitter, s, e)?);
                }
            }
            frame.push(Proposal::new(t, visible, score, emb)?);
        }
        for (mask, base) in &distractors {
            let (lo, hi) = spec.distractor_objectness;
            let s = if lo < hi {
                rng.random_range(lo..=hi)
            } else {
                lo
            };
            let e = noisy(base, spec.embedding_noise, &mut rng);
            frame.push(Proposal::new(t, mask.clone(), s, e)?);
        }
        frame.shuffle(&mut rng);
        proposals.push(frame);
    }

    let manifest = VideoManifest {
        video_id: spec.video_id.clone(),
        width: w,
        height: h,
        frame_count: n,
        embedding_dim: dim,
        proposals,
        ground_truth: gt_objects,
        flow_paths: (1..n).map(flow_rel_path).collect(),
        flows,
    };
    manifest.validate()?;
    Ok(SyntheticVideo {
        manifest,
        ground_truth,
        positions,
    })
}

/// Generates a valid random instance for `seed`, retrying with derived spec
/// seeds when a draw is rejected (overlap without occlusion, object hidden in
/// frame 0). The video id always reflects `seed`.
pub fn generate_random(seed: u64, limits: RandomLimits) -> SyntheticVideo {
    for attempt in 0u64.. {
        let derived = seed.wrapping_add(attempt.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut spec = ScenarioSpec::random(derived, limits);
        spec.video_id = format!("rand{seed:06}");
        if let Ok(v) = generate(&spec) {
            return v;
        }
    }
    unreachable!("attempt counter is unbounded")
}

pub fn flow_rel_path(t: usize) -> PathBuf {
    PathBuf::from(format!("flow/{t:05}.flo"))
}

/// On-disk corpus layout:
/// `<root>/videos/<id>/manifest.json`, `<root>/videos/<id>/flow/<t:05>.flo`
/// and `<root>/gt/<id>/<t:05>.pgm`.
pub fn manifest_path(root: &Path, video_id: &str) -> PathBuf {
    root.join("videos").join(video_id).join("manifest.json")
}

pub fn gt_root(root: &Path) -> PathBuf {
    root.join("gt")
}

pub fn write_corpus(root: &Path, videos: &[SyntheticVideo]) -> Result<()> {
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    for v in videos {
        v.manifest.save(manifest_path(root, &v.manifest.video_id))?;
        write_sequence(&gt_root(root), &v.manifest.video_id, &v.ground_truth.frames)?;
    }
    Ok(())
}
