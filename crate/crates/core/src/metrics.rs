//! Region (J) and boundary (F) measures with sequence-level mean, recall
//! and decay statistics.
//!
//! The first frame is never scored since it is the given annotation.

use serde::Serialize;

use crate::error::{check_dims, Error, Result};
use crate::labels::{GroundTruthVideo, LabelMap};
use crate::mask::{boundary, dilate, iou, EmptyIou, Mask};

/// Frames scoring above this count towards recall.
pub const RECALL_THRESHOLD: f64 = 0.5;

/// Boundary tolerance as a fraction of the image diagonal.
pub const BOUNDARY_TOLERANCE_FRACTION: f64 = 0.008;

pub fn default_tolerance(width: u32, height: u32) -> u32 {
    let diag = f64::from(width).hypot(f64::from(height));
    (BOUNDARY_TOLERANCE_FRACTION * diag).ceil() as u32
}

/// IoU where an empty prediction of an empty object is perfect.
pub fn j_measure(pred: &Mask, gt: &Mask) -> Result<f64> {
    iou(pred, gt, EmptyIou::One)
}

/// Boundary F-measure with a pixel tolerance.
pub fn f_measure(pred: &Mask, gt: &Mask, tolerance: u32) -> Result<f64> {
    check_dims(pred.dims(), gt.dims())?;
    let gt_b = boundary(gt);
    let gt_zone = dilate(&gt_b, tolerance);
    f_from_parts(pred, &gt_b, &gt_zone, tolerance)
}

fn f_from_parts(pred: &Mask, gt_b: &Mask, gt_zone: &Mask, tolerance: u32) -> Result<f64> {
    let pred_b = boundary(pred);
    match (pred_b.is_empty(), gt_b.is_empty()) {
        (true, true) => return Ok(1.0),
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }
    let pred_zone = dilate(&pred_b, tolerance);
    let precision = pred_b.intersection_area(gt_zone)? as f64 / pred_b.area() as f64;
    let recall = gt_b.intersection_area(&pred_zone)? as f64 / gt_b.area() as f64;
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeqStats {
    pub mean: f64,
    pub recall: f64,
    pub decay: f64,
}

/// Splits `n` items into four contiguous bins, remainders to the earlier bins.
fn quartile_bins(n: usize) -> [std::ops::Range<usize>; 4] {
    let base = n / 4;
    let rem = n % 4;
    let mut start = 0;
    std::array::from_fn(|b| {
        let len = base + usize::from(b < rem);
        let r = start..start + len;
        start += len;
        r
    })
}

/// Mean, recall (`score > 0.5`) and decay (first-quartile mean minus
/// last-quartile mean). Sequences shorter than four frames have decay 0.
pub fn sequence_stats(scores: &[f64]) -> Result<SeqStats> {
    if scores.is_empty() {
        return Err(Error::InvalidInput("no frames to score".into()));
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let recall = scores.iter().filter(|&&s| s > RECALL_THRESHOLD).count() as f64 / n;
    let decay = if scores.len() < 4 {
        0.0
    } else {
        let bins = quartile_bins(scores.len());
        let bin_mean =
            |r: &std::ops::Range<usize>| scores[r.clone()].iter().sum::<f64>() / r.len() as f64;
        bin_mean(&bins[0]) - bin_mean(&bins[3])
    };
    Ok(SeqStats {
        mean,
        recall,
        decay,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalOptions {
    /// Boundary tolerance in pixels; `None` derives it from the image size.
    pub tolerance: Option<u32>,
    pub exclude_last: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectEval {
    pub object_id: u8,
    pub j: SeqStats,
    pub f: SeqStats,
    pub jf_mean: f64,
    pub j_per_frame: Vec<f64>,
    pub f_per_frame: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VideoEval {
    pub video_id: String,
    pub objects: Vec<ObjectEval>,
}

/// Unweighted means over every evaluated object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    pub jf_mean: f64,
    pub j: SeqStats,
    pub f: SeqStats,
    pub object_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub aggregate: Aggregate,
    pub videos: Vec<VideoEval>,
}

/// Ground truth with boundaries and tolerance zones cached per object and
/// frame, for scoring many predictions against one video.
pub struct PreparedGroundTruth {
    object_ids: Vec<u8>,
    /// `[t][object]` as (mask, boundary, dilated boundary)
    frames: Vec<Vec<(Mask, Mask, Mask)>>,
    scored: Vec<usize>,
    tolerance: u32,
    dims: (u32, u32),
}

impl PreparedGroundTruth {
    pub fn new(gt: &GroundTruthVideo, opts: &EvalOptions) -> Result<Self> {
        let dims = gt.dims();
        let tolerance = opts
            .tolerance
            .unwrap_or_else(|| default_tolerance(dims.0, dims.1));
        let n = gt.frame_count();
        let end = if opts.exclude_last {
            n.saturating_sub(1)
        } else {
            n
        };
        let scored: Vec<usize> = (1..end).collect();
        if scored.is_empty() {
            return Err(Error::InvalidInput(format!(
                "{n} frame(s) leave nothing to evaluate after excluding the first{}",
                if opts.exclude_last { " and last" } else { "" }
            )));
        }
        let frames = (0..n)
            .map(|t| {
                if !scored.contains(&t) {
                    return Vec::new();
                }
                gt.object_ids
                    .iter()
                    .map(|&id| {
                        let m = gt.object_mask(t, id);
                        let b = boundary(&m);
                        let z = dilate(&b, tolerance);
                        (m, b, z)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            object_ids: gt.object_ids.clone(),
            frames,
            scored,
            tolerance,
            dims,
        })
    }

    pub fn tolerance(&self) -> u32 {
        self.tolerance
    }

    pub fn evaluate(&self, video_id: &str, pred: &[LabelMap]) -> Result<VideoEval> {
        if pred.len() != self.frames.len() {
            return Err(Error::InvalidInput(format!(
                "prediction has {} frames, ground truth {}",
                pred.len(),
                self.frames.len()
            )));
        }
        for p in pred {
            check_dims(self.dims, p.dims())?;
            if let Some(bad) = p
                .object_labels()
                .into_iter()
                .find(|l| !self.object_ids.contains(l))
            {
                return Err(Error::InvalidInput(format!(
                    "prediction uses unknown label {bad}"
                )));
            }
        }
        let objects = self
            .object_ids
            .iter()
            .enumerate()
            .map(|(k, &id)| {
                let mut js = Vec::with_capacity(self.scored.len());
                let mut fs = Vec::with_capacity(self.scored.len());
                for &t in &self.scored {
                    let predicted = pred[t].mask_of(id);
                    let (m, b, z) = &self.frames[t][k];
                    js.push(j_measure(&predicted, m)?);
                    fs.push(f_from_parts(&predicted, b, z, self.tolerance)?);
                }
                let j = sequence_stats(&js)?;
                let f = sequence_stats(&fs)?;
                Ok(ObjectEval {
                    object_id: id,
                    j,
                    f,
                    jf_mean: (j.mean + f.mean) / 2.0,
                    j_per_frame: js,
                    f_per_frame: fs,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(VideoEval {
            video_id: video_id.to_string(),
            objects,
        })
    }
}

/// Scores one predicted video against its full ground truth.
pub fn evaluate(
    video_id: &str,
    pred: &[LabelMap],
    gt: &GroundTruthVideo,
    opts: &EvalOptions,
) -> Result<VideoEval> {
    PreparedGroundTruth::new(gt, opts)?.evaluate(video_id, pred)
}

pub fn aggregate(videos: Vec<VideoEval>) -> Result<EvalResult> {
    let objects: Vec<&ObjectEval> = videos.iter().flat_map(|v| &v.objects).collect();
    if objects.is_empty() {
        return Err(Error::InvalidInput("no objects evaluated".into()));
    }
    let n = objects.len() as f64;
    let avg = |f: &dyn Fn(&ObjectEval) -> f64| objects.iter().map(|o| f(o)).sum::<f64>() / n;
    let j = SeqStats {
        mean: avg(&|o| o.j.mean),
        recall: avg(&|o| o.j.recall),
        decay: avg(&|o| o.j.decay),
    };
    let f = SeqStats {
        mean: avg(&|o| o.f.mean),
        recall: avg(&|o| o.f.recall),
        decay: avg(&|o| o.f.decay),
    };
    let aggregate = Aggregate {
        jf_mean: (j.mean + f.mean) / 2.0,
        j,
        f,
        object_count: objects.len(),
    };
    Ok(EvalResult { aggregate, videos })
}

impl EvalResult {
    /// One row per object plus a final `ALL` row with the aggregate.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidInput(format!("csv: {e}"));
        w.write_record([
            "video_id",
            "object_id",
            "jf_mean",
            "j_mean",
            "j_recall",
            "j_decay",
            "f_mean",
            "f_recall",
            "f_decay",
        ])
        .map_err(io)?;
        let row = |v: &str, o: &str, jf: f64, j: &SeqStats, f: &SeqStats| {
            [
                v.to_string(),
                o.to_string(),
                jf.to_string(),
                j.mean.to_string(),
                j.recall.to_string(),
                j.decay.to_string(),
                f.mean.to_string(),
                f.recall.to_string(),
                f.decay.to_string(),
            ]
        };
        for v in &self.videos {
            for o in &v.objects {
                w.write_record(row(
                    &v.video_id,
                    &o.object_id.to_string(),
                    o.jf_mean,
                    &o.j,
                    &o.f,
                ))
                .map_err(io)?;
            }
        }
        let a = &self.aggregate;
        w.write_record(row("ALL", "", a.jf_mean, &a.j, &a.f))
            .map_err(io)?;
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
