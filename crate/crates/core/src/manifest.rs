//! Video manifests: per-frame proposals, first-frame ground truth and flow
//! references, plus score/NMS proposal filtering.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{load_flo, FlowField};
use crate::mask::{iou, BBox, EmptyIou, Mask};

pub const DEFAULT_SCORE_MIN: f64 = 0.05;
pub const DEFAULT_NMS_IOU: f64 = 0.66;

/// One candidate object in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub frame_index: usize,
    pub mask: Mask,
    pub bbox: BBox,
    pub objectness: f64,
    pub embedding: Vec<f64>,
}

impl Proposal {
    /// Builds a proposal whose bbox is derived from the mask.
    pub fn new(
        frame_index: usize,
        mask: Mask,
        objectness: f64,
        embedding: Vec<f64>,
    ) -> Result<Self> {
        let bbox = mask
            .bbox()
            .ok_or_else(|| Error::InvalidInput("proposal mask is empty".into()))?;
        Ok(Self {
            frame_index,
            mask,
            bbox,
            objectness,
            embedding,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthObject {
    pub object_id: u8,
    pub first_frame_mask: Mask,
    pub first_frame_bbox: BBox,
    pub embedding: Vec<f64>,
}

impl GroundTruthObject {
    pub fn new(object_id: u8, first_frame_mask: Mask, embedding: Vec<f64>) -> Result<Self> {
        let first_frame_bbox = first_frame_mask
            .bbox()
            .ok_or_else(|| Error::InvalidInput("ground-truth mask is empty".into()))?;
        Ok(Self {
            object_id,
            first_frame_mask,
            first_frame_bbox,
            embedding,
        })
    }
}

/// Everything the merger needs for one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoManifest {
    pub video_id: String,
    pub width: u32,
    pub height: u32,
    pub frame_count: usize,
    pub embedding_dim: usize,
    /// `proposals[t]` holds frame `t`'s candidates.
    pub proposals: Vec<Vec<Proposal>>,
    pub ground_truth: Vec<GroundTruthObject>,
    /// `flow_paths[t - 1]` is the `t -> t-1` backward field, relative to the
    /// manifest's directory.
    pub flow_paths: Vec<PathBuf>,
    /// Loaded fields, parallel to `flow_paths`.
    pub flows: Vec<FlowField>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestDoc {
    video_id: String,
    width: u32,
    height: u32,
    frame_count: usize,
    embedding_dim: usize,
    ground_truth: Vec<GroundTruthDoc>,
    frames: Vec<Vec<ProposalDoc>>,
    flows: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroundTruthDoc {
    object_id: u32,
    rle: Vec<u32>,
    embedding: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProposalDoc {
    rle: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bbox: Option<[u32; 4]>,
    objectness: f64,
    embedding: Vec<f64>,
}

fn check_embedding(field: &str, emb: &[f64], dim: usize) -> Result<()> {
    if emb.len() != dim {
        return Err(Error::manifest(
            field,
            format!("length {} differs from embedding_dim {dim}", emb.len()),
        ));
    }
    if emb.iter().any(|v| !v.is_finite()) {
        return Err(Error::manifest(field, "non-finite component"));
    }
    Ok(())
}

impl VideoManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_json(&text, base)
    }

    /// Parses manifest JSON; flow paths resolve against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: ManifestDoc = serde_path_to_error::deserialize(de).map_err(|e| {
            let mut field = e.path().to_string();
            let message = e.into_inner().to_string();
            // a missing key is reported at its parent; name the key itself
            if let Some(name) = message
                .strip_prefix("missing field `")
                .and_then(|r| r.split('`').next())
            {
                field = if field == "." {
                    name.to_string()
                } else {
                    format!("{field}.{name}")
                };
            }
            Error::manifest(field, message)
        })?;
        // a wrong count is reported by from_doc before any file is touched
        let expected = doc.frame_count.checked_sub(1);
        let to_load = if Some(doc.flows.len()) == expected {
            &doc.flows[..]
        } else {
            &[]
        };
        let flows = to_load
            .iter()
            .enumerate()
            .map(|(i, rel)| {
                let p = base_dir.join(rel);
                if !p.is_file() {
                    return Err(Error::manifest(
                        format!("flows[{i}]"),
                        format!("missing flow file {}", p.display()),
                    ));
                }
                load_flo(&p).map_err(|e| Error::manifest(format!("flows[{i}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_doc(doc, flows)
    }

    fn from_doc(doc: ManifestDoc, flows: Vec<FlowField>) -> Result<Self> {
        let (w, h) = (doc.width, doc.height);
        if w == 0 || h == 0 {
            return Err(Error::manifest("width", "dimensions must be positive"));
        }
        if doc.frame_count == 0 {
            return Err(Error::manifest("frame_count", "must be positive"));
        }
        if doc.embedding_dim == 0 {
            return Err(Error::manifest("embedding_dim", "must be positive"));
        }
        if doc.frames.len() != doc.frame_count {
            return Err(Error::manifest(
                "frames",
                format!(
                    "{} entries, frame_count is {}",
                    doc.frames.len(),
                    doc.frame_count
                ),
            ));
        }
        if doc.flows.len() != doc.frame_count - 1 {
            return Err(Error::manifest(
                "flows",
                format!(
                    "{} entries, expected {}",
                    doc.flows.len(),
                    doc.frame_count - 1
                ),
            ));
        }
        for (i, f) in flows.iter().enumerate() {
            if f.dims() != (w, h) {
                return Err(Error::manifest(
                    format!("flows[{i}]"),
                    format!("field is {:?}, video is {:?}", f.dims(), (w, h)),
                ));
            }
        }
        if doc.ground_truth.is_empty() {
            return Err(Error::manifest(
                "ground_truth",
                "at least one object required",
            ));
        }

        let mut ground_truth = Vec::with_capacity(doc.ground_truth.len());
        for (j, g) in doc.ground_truth.into_iter().enumerate() {
            let field = |name: &str| format!("ground_truth[{j}].{name}");
            let object_id = u8::try_from(g.object_id)
                .ok()
                .filter(|&id| id > 0)
                .ok_or_else(|| Error::manifest(field("object_id"), "must be in 1..=255"))?;
            if ground_truth
                .iter()
                .any(|o: &GroundTruthObject| o.object_id == object_id)
            {
                return Err(Error::manifest(field("object_id"), "duplicate object id"));
            }
            let mask = Mask::from_runs(w, h, g.rle)
                .map_err(|e| Error::manifest(field("rle"), e.to_string()))?;
            check_embedding(&field("embedding"), &g.embedding, doc.embedding_dim)?;
            let obj = GroundTruthObject::new(object_id, mask, g.embedding)
                .map_err(|e| Error::manifest(field("rle"), e.to_string()))?;
            ground_truth.push(obj);
        }

        let mut proposals = Vec::with_capacity(doc.frame_count);
        for (t, frame) in doc.frames.into_iter().enumerate() {
            let mut out = Vec::with_capacity(frame.len());
            for (i, p) in frame.into_iter().enumerate() {
                let field = |name: &str| format!("frames[{t}][{i}].{name}");
                let mask = Mask::from_runs(w, h, p.rle)
                    .map_err(|e| Error::manifest(field("rle"), e.to_string()))?;
                if !(0.0..=1.0).contains(&p.objectness) {
                    return Err(Error::manifest(field("objectness"), "must lie in [0, 1]"));
                }
                check_embedding(&field("embedding"), &p.embedding, doc.embedding_dim)?;
                let prop = Proposal::new(t, mask, p.objectness, p.embedding)
                    .map_err(|e| Error::manifest(field("rle"), e.to_string()))?;
                if let Some([x0, y0, x1, y1]) = p.bbox {
                    if [x0, y0, x1, y1] != prop.bbox.to_array() {
                        return Err(Error::manifest(
                            field("bbox"),
                            format!(
                                "{:?} is not the tight box {:?} of the mask",
                                [x0, y0, x1, y1],
                                prop.bbox.to_array()
                            ),
                        ));
                    }
                }
                out.push(prop);
            }
            proposals.push(out);
        }

        Ok(Self {
            video_id: doc.video_id,
            width: w,
            height: h,
            frame_count: doc.frame_count,
            embedding_dim: doc.embedding_dim,
            proposals,
            ground_truth,
            flow_paths: doc.flows.into_iter().map(PathBuf::from).collect(),
            flows,
        })
    }

    /// Re-checks the structural invariants of an in-memory manifest.
    pub fn validate(&self) -> Result<()> {
        let doc = self.to_doc();
        Self::from_doc(doc, self.flows.clone()).map(|_| ())
    }

    fn to_doc(&self) -> ManifestDoc {
        ManifestDoc {
            video_id: self.video_id.clone(),
            width: self.width,
            height: self.height,
            frame_count: self.frame_count,
            embedding_dim: self.embedding_dim,
            ground_truth: self
                .ground_truth
                .iter()
                .map(|g| GroundTruthDoc {
                    object_id: u32::from(g.object_id),
                    rle: g.first_frame_mask.runs().to_vec(),
                    embedding: g.embedding.clone(),
                })
                .collect(),
            frames: self
                .proposals
                .iter()
                .map(|frame| {
                    frame
                        .iter()
                        .map(|p| ProposalDoc {
                            rle: p.mask.runs().to_vec(),
                            bbox: Some(p.bbox.to_array()),
                            objectness: p.objectness,
                            embedding: p.embedding.clone(),
                        })
                        .collect()
                })
                .collect(),
            flows: self
                .flow_paths
                .iter()
                .map(|p| p.to_string_lossy().replace('\\', "/"))
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(&self.to_doc()).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// Writes the manifest JSON to `path` and each flow field next to it at
    /// its relative path.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for (rel, field) in self.flow_paths.iter().zip(&self.flows) {
            let p = base.join(rel);
            if let Some(dir) = p.parent() {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            field.save(&p)?;
        }
        if !base.as_os_str().is_empty() {
            fs::create_dir_all(base).map_err(|e| Error::io(base, e))?;
        }
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn object_ids(&self) -> Vec<u8> {
        self.ground_truth.iter().map(|g| g.object_id).collect()
    }

    /// Backward flow from frame `t` to `t - 1`, for `t >= 1`.
    pub fn backward_flow(&self, t: usize) -> &FlowField {
        &self.flows[t - 1]
    }

    /// Copy with every frame passed through [`filter_proposals`].
    pub fn filtered(&self, score_min: f64, nms_iou: f64) -> Self {
        let mut out = self.clone();
        out.proposals = self
            .proposals
            .iter()
            .map(|f| filter_proposals(f, score_min, nms_iou))
            .collect();
        out
    }
}

/// Drops proposals with objectness `<= score_min`, then greedy mask NMS:
/// in descending score order (stable on input index) any proposal with
/// IoU `>= nms_iou` against a kept one is suppressed.
pub fn filter_proposals(
    frame_proposals: &[Proposal],
    score_min: f64,
    nms_iou: f64,
) -> Vec<Proposal> {
    let mut order: Vec<usize> = (0..frame_proposals.len())
        .filter(|&i| frame_proposals[i].objectness > score_min)
        .collect();
    order.sort_by(|&a, &b| {
        frame_proposals[b]
            .objectness
            .total_cmp(&frame_proposals[a].objectness)
    });
    let mut kept: Vec<&Proposal> = Vec::with_capacity(order.len());
    for i in order {
        let cand = &frame_proposals[i];
        let suppressed = kept.iter().any(|k| {
            iou(&cand.mask, &k.mask, EmptyIou::Zero).expect("proposals of one frame share dims")
                >= nms_iou
        });
        if !suppressed {
            kept.push(cand);
        }
    }
    kept.into_iter().cloned().collect()
}
