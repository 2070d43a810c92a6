//! Greedy track building, pixel overlap resolution and oracle merging.
//!
//! One track exists per ground-truth object, seeded with its first-frame
//! mask. In every later frame each track independently takes the proposal
//! with the highest combined score; two tracks may take the same proposal.
//! Pixels claimed by several tracks go to the track whose selection scored
//! highest, ties to the lowest object id.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dims, Error, Result};
use crate::flow::warp_mask;
use crate::labels::{GroundTruthVideo, LabelMap};
use crate::manifest::VideoManifest;
use crate::mask::{iou, EmptyIou, Mask};
use crate::scoring::{
    combined_score, compute_video_max_distances, euclidean, inverse_scores, reid_from_distance,
    ComponentMask, SubScores, WeightVector,
};

/// What a track holds in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Selection {
    /// Frame 0: the given first-frame mask.
    GroundTruth,
    Proposal {
        index: usize,
        /// Ranking key used for overlap resolution.
        score: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        sub_scores: Option<SubScores>,
    },
    /// The frame had nothing to select.
    Empty,
}

impl Selection {
    pub fn proposal_index(&self) -> Option<usize> {
        match self {
            Selection::Proposal { index, .. } => Some(*index),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackSet {
    pub video_id: String,
    pub object_ids: Vec<u8>,
    /// `selections[t][j]` for track `j` (manifest ground-truth order).
    pub selections: Vec<Vec<Selection>>,
    pub label_maps: Vec<LabelMap>,
}

#[derive(Debug, Serialize)]
pub struct SelectionReport<'a> {
    pub video_id: &'a str,
    pub frames: Vec<FrameReport>,
}

#[derive(Debug, Serialize)]
pub struct FrameReport {
    pub frame: usize,
    pub objects: Vec<ObjectSelection>,
}

#[derive(Debug, Serialize)]
pub struct ObjectSelection {
    pub object_id: u8,
    pub proposal: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sub_scores: Option<SubScores>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl TrackSet {
    pub fn frame_count(&self) -> usize {
        self.label_maps.len()
    }

    /// Track `j`'s final (post-resolution) pixels in frame `t`.
    pub fn resolved_mask(&self, t: usize, j: usize) -> Mask {
        self.label_maps[t].mask_of(self.object_ids[j])
    }

    /// Indices picked by each track per frame (`None` for ground truth or
    /// empty frames).
    pub fn proposal_indices(&self) -> Vec<Vec<Option<usize>>> {
        self.selections
            .iter()
            .map(|f| f.iter().map(Selection::proposal_index).collect())
            .collect()
    }

    pub fn report(&self) -> SelectionReport<'_> {
        let frames = self
            .selections
            .iter()
            .enumerate()
            .map(|(t, sel)| FrameReport {
                frame: t,
                objects: sel
                    .iter()
                    .zip(&self.object_ids)
                    .map(|(s, &object_id)| match *s {
                        Selection::Proposal {
                            index,
                            score,
                            sub_scores,
                        } => ObjectSelection {
                            object_id,
                            proposal: Some(index),
                            sub_scores,
                            score: Some(score),
                        },
                        _ => ObjectSelection {
                            object_id,
                            proposal: None,
                            sub_scores: None,
                            score: None,
                        },
                    })
                    .collect(),
            })
            .collect();
        SelectionReport {
            video_id: &self.video_id,
            frames,
        }
    }
}

/// Paints masks into a label map; on overlap the higher score wins, ties to
/// the lower object id.
pub fn resolve_overlaps(width: u32, height: u32, entries: &[(u8, &Mask, f64)]) -> Result<LabelMap> {
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| {
        entries[b]
            .2
            .total_cmp(&entries[a].2)
            .then(entries[a].0.cmp(&entries[b].0))
    });
    LabelMap::paint_first_wins(
        width,
        height,
        order.into_iter().map(|i| (entries[i].0, entries[i].1)),
    )
}

/// Weight-independent quantities of one video, computed once and reused for
/// every weight vector.
pub struct PreparedVideo<'a> {
    manifest: &'a VideoManifest,
    /// `reid[t][i][j]`
    reid: Vec<Vec<Vec<f64>>>,
    /// `prop_iou[t][i][k]`: IoU of proposal `i` of frame `t` with source `k`
    /// of frame `t-1` warped forward. Sources are the ground-truth masks at
    /// `t = 1` and the frame's proposals afterwards.
    prop_iou: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Copy)]
enum Prev {
    Source(usize),
    Nothing,
}

impl<'a> PreparedVideo<'a> {
    pub fn new(manifest: &'a VideoManifest) -> Result<Self> {
        manifest.validate()?;
        let max_dist = compute_video_max_distances(manifest)?;
        let reid = manifest
            .proposals
            .iter()
            .map(|frame| {
                frame
                    .iter()
                    .map(|p| {
                        manifest
                            .ground_truth
                            .iter()
                            .zip(&max_dist)
                            .map(|(g, &m)| {
                                Ok(reid_from_distance(
                                    euclidean(&p.embedding, &g.embedding)?,
                                    m,
                                ))
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;

        let mut prop_iou = vec![Vec::new()];
        for t in 1..manifest.frame_count {
            let flow = manifest.backward_flow(t);
            let sources: Vec<&Mask> = if t == 1 {
                manifest
                    .ground_truth
                    .iter()
                    .map(|g| &g.first_frame_mask)
                    .collect()
            } else {
                manifest.proposals[t - 1].iter().map(|p| &p.mask).collect()
            };
            let warped = sources
                .iter()
                .map(|m| warp_mask(m, flow))
                .collect::<Result<Vec<_>>>()?;
            let frame = manifest.proposals[t]
                .iter()
                .map(|p| {
                    warped
                        .iter()
                        .map(|w| iou(&p.mask, w, EmptyIou::Zero))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            prop_iou.push(frame);
        }
        Ok(Self {
            manifest,
            reid,
            prop_iou,
        })
    }

    pub fn manifest(&self) -> &VideoManifest {
        self.manifest
    }

    /// Sub-scores `[i][j]` of frame `t >= 1` given each track's previous
    /// selection.
    fn frame_scores(&self, t: usize, prev: &[Prev]) -> Vec<Vec<SubScores>> {
        let props = &self.manifest.proposals[t];
        props
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let reid = &self.reid[t][i];
                let maskprop: Vec<f64> = prev
                    .iter()
                    .map(|pv| match *pv {
                        Prev::Source(k) => self.prop_iou[t][i][k],
                        Prev::Nothing => 0.0,
                    })
                    .collect();
                inverse_scores(reid, &maskprop)
                    .into_iter()
                    .enumerate()
                    .map(|(j, (inv_reid, inv_maskprop))| SubScores {
                        objectness: p.objectness,
                        reid: reid[j],
                        maskprop: maskprop[j],
                        inv_reid,
                        inv_maskprop,
                    })
                    .collect()
            })
            .collect()
    }

    /// Per-frame greedy selections without building label maps.
    pub fn select(
        &self,
        weights: &WeightVector,
        active: ComponentMask,
    ) -> Result<Vec<Vec<Selection>>> {
        let w = weights.restrict(active)?;
        let m = self.manifest;
        let n_tracks = m.ground_truth.len();
        let mut selections = Vec::with_capacity(m.frame_count);
        selections.push(vec![Selection::GroundTruth; n_tracks]);
        let mut prev: Vec<Prev> = (0..n_tracks).map(Prev::Source).collect();
        for t in 1..m.frame_count {
            let scores = self.frame_scores(t, &prev);
            let mut frame_sel = Vec::with_capacity(n_tracks);
            for j in 0..n_tracks {
                let mut best: Option<(usize, f64)> = None;
                for (i, row) in scores.iter().enumerate() {
                    let c = combined_score(&row[j], &w);
                    if best.is_none_or(|(_, b)| c > b) {
                        best = Some((i, c));
                    }
                }
                frame_sel.push(match best {
                    Some((index, score)) => Selection::Proposal {
                        index,
                        score,
                        sub_scores: Some(scores[index][j]),
                    },
                    None => Selection::Empty,
                });
            }
            prev = frame_sel
                .iter()
                .map(|s| s.proposal_index().map_or(Prev::Nothing, Prev::Source))
                .collect();
            selections.push(frame_sel);
        }
        Ok(selections)
    }

    pub fn merge(&self, weights: &WeightVector, active: ComponentMask) -> Result<TrackSet> {
        let selections = self.select(weights, active)?;
        build_track_set(self.manifest, selections)
    }
}

fn build_track_set(manifest: &VideoManifest, selections: Vec<Vec<Selection>>) -> Result<TrackSet> {
    let (w, h) = manifest.dims();
    let object_ids = manifest.object_ids();
    let label_maps = selections
        .par_iter()
        .enumerate()
        .map(|(t, sel)| {
            let entries: Vec<(u8, &Mask, f64)> = sel
                .iter()
                .zip(&manifest.ground_truth)
                .filter_map(|(s, g)| match *s {
                    Selection::GroundTruth => {
                        Some((g.object_id, &g.first_frame_mask, f64::INFINITY))
                    }
                    Selection::Proposal { index, score, .. } => {
                        Some((g.object_id, &manifest.proposals[t][index].mask, score))
                    }
                    Selection::Empty => None,
                })
                .collect();
            resolve_overlaps(w, h, &entries)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrackSet {
        video_id: manifest.video_id.clone(),
        object_ids,
        selections,
        label_maps,
    })
}

/// Greedy merge of a whole video. Weights on inactive components are spread
/// equally over the active ones.
pub fn greedy_merge(
    manifest: &VideoManifest,
    weights: &WeightVector,
    active: ComponentMask,
) -> Result<TrackSet> {
    PreparedVideo::new(manifest)?.merge(weights, active)
}

/// Upper-bound merge that picks, per object and frame, the proposal with the
/// highest IoU against the true mask. When no proposal overlaps the true mask
/// the track is left empty for that frame.
pub fn oracle_merge(manifest: &VideoManifest, gt: &GroundTruthVideo) -> Result<TrackSet> {
    manifest.validate()?;
    check_dims(manifest.dims(), gt.dims())?;
    if gt.frame_count() != manifest.frame_count {
        return Err(Error::InvalidInput(format!(
            "ground truth has {} frames, manifest {}",
            gt.frame_count(),
            manifest.frame_count
        )));
    }
    let ids = manifest.object_ids();
    if let Some(missing) = ids.iter().find(|id| !gt.object_ids.contains(id)) {
        return Err(Error::InvalidInput(format!(
            "object {missing} has no full-video ground truth"
        )));
    }
    let mut selections = vec![vec![Selection::GroundTruth; ids.len()]];
    for t in 1..manifest.frame_count {
        let props = &manifest.proposals[t];
        let frame = ids
            .iter()
            .map(|&id| {
                let truth = gt.object_mask(t, id);
                let mut best: Option<(usize, f64)> = None;
                for (i, p) in props.iter().enumerate() {
                    let s = iou(&p.mask, &truth, EmptyIou::Zero)?;
                    if s > 0.0 && best.is_none_or(|(_, b)| s > b) {
                        best = Some((i, s));
                    }
                }
                Ok(match best {
                    Some((index, score)) => Selection::Proposal {
                        index,
                        score,
                        sub_scores: None,
                    },
                    None => Selection::Empty,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        selections.push(frame);
    }
    build_track_set(manifest, selections)
}
