//! Track sub-scores and their affine combination.
//!
//! For proposal `i` in frame `t` and track `j` the five sub-scores are
//! objectness, ReID similarity to the track's first-frame embedding, mask
//! propagation IoU against the track's warped previous selection, and the
//! complements of the best ReID / propagation score the proposal reaches
//! against any *other* track.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{warp_mask, FlowField};
use crate::manifest::VideoManifest;
use crate::mask::{iou, EmptyIou, Mask};

pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Objectness,
    Reid,
    MaskProp,
    InvReid,
    InvMaskProp,
}

impl Component {
    /// Canonical order used by every weight and score array.
    pub const ALL: [Component; 5] = [
        Component::Objectness,
        Component::Reid,
        Component::MaskProp,
        Component::InvReid,
        Component::InvMaskProp,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::Objectness => "obj",
            Component::Reid => "reid",
            Component::MaskProp => "maskprop",
            Component::InvReid => "inv_reid",
            Component::InvMaskProp => "inv_maskprop",
        }
    }
}

impl FromStr for Component {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "obj" | "objectness" => Ok(Component::Objectness),
            "reid" => Ok(Component::Reid),
            "maskprop" | "mask_prop" => Ok(Component::MaskProp),
            "inv_reid" | "invreid" => Ok(Component::InvReid),
            "inv_maskprop" | "invmaskprop" | "inv_mask_prop" => Ok(Component::InvMaskProp),
            other => Err(Error::InvalidInput(format!("unknown component `{other}`"))),
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which of the five components take part in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ComponentMask([bool; 5]);

impl ComponentMask {
    pub const ALL: ComponentMask = ComponentMask([true; 5]);

    pub fn none() -> Self {
        ComponentMask([false; 5])
    }

    pub fn from_flags(flags: [bool; 5]) -> Self {
        ComponentMask(flags)
    }

    pub fn only(components: &[Component]) -> Self {
        let mut m = Self::none();
        for &c in components {
            m.0[c.index()] = true;
        }
        m
    }

    pub fn without(self, c: Component) -> Self {
        let mut m = self;
        m.0[c.index()] = false;
        m
    }

    pub fn is_active(&self, c: Component) -> bool {
        self.0[c.index()]
    }

    pub fn flags(&self) -> [bool; 5] {
        self.0
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn components(&self) -> impl Iterator<Item = Component> + '_ {
        Component::ALL.into_iter().filter(|c| self.is_active(*c))
    }
}

impl Default for ComponentMask {
    fn default() -> Self {
        Self::ALL
    }
}

impl FromStr for ComponentMask {
    type Err = Error;

    /// Comma-separated component names, e.g. `obj,reid,maskprop`.
    fn from_str(s: &str) -> Result<Self> {
        let comps = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(Component::from_str)
            .collect::<Result<Vec<_>>>()?;
        let m = Self::only(&comps);
        if m.count() == 0 {
            return Err(Error::InvalidInput("no components selected".into()));
        }
        Ok(m)
    }
}

impl fmt::Display for ComponentMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.components().map(Component::name).collect();
        f.write_str(&names.join(","))
    }
}

/// Non-negative merging coefficients summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightDoc", into = "WeightDoc")]
pub struct WeightVector([f64; 5]);

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightDoc {
    objectness: f64,
    reid: f64,
    maskprop: f64,
    inv_reid: f64,
    inv_maskprop: f64,
}

impl TryFrom<WeightDoc> for WeightVector {
    type Error = Error;

    fn try_from(d: WeightDoc) -> Result<Self> {
        WeightVector::new([d.objectness, d.reid, d.maskprop, d.inv_reid, d.inv_maskprop])
    }
}

impl From<WeightVector> for WeightDoc {
    fn from(w: WeightVector) -> Self {
        let [objectness, reid, maskprop, inv_reid, inv_maskprop] = w.0;
        WeightDoc {
            objectness,
            reid,
            maskprop,
            inv_reid,
            inv_maskprop,
        }
    }
}

impl WeightVector {
    pub fn new(alpha: [f64; 5]) -> Result<Self> {
        if alpha.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::InvalidWeights(format!(
                "components must be finite and non-negative: {alpha:?}"
            )));
        }
        let sum: f64 = alpha.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidWeights(format!(
                "components sum to {sum}, not 1"
            )));
        }
        Ok(Self(alpha))
    }

    pub fn equal() -> Self {
        Self([0.2; 5])
    }

    /// Equal weight on each active component, zero elsewhere.
    pub fn equal_over(active: ComponentMask) -> Result<Self> {
        let n = active.count();
        if n == 0 {
            return Err(Error::InvalidWeights("no active components".into()));
        }
        let mut out = [0.0; 5];
        for c in active.components() {
            out[c.index()] = 1.0 / n as f64;
        }
        Ok(Self(out))
    }

    /// Accepts hand-typed weights: rescaled to sum 1 when the raw sum lies
    /// within 1% of 1, rejected otherwise.
    pub fn from_loose(alpha: [f64; 5]) -> Result<Self> {
        if alpha.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::InvalidWeights(format!(
                "components must be finite and non-negative: {alpha:?}"
            )));
        }
        let sum: f64 = alpha.iter().sum();
        if (sum - 1.0).abs() > 0.01 {
            return Err(Error::InvalidWeights(format!(
                "components sum to {sum}, more than 1% away from 1"
            )));
        }
        Self::new(alpha.map(|a| a / sum))
    }

    /// Moves the weight of inactive components, split equally, onto the
    /// active ones.
    pub fn restrict(&self, active: ComponentMask) -> Result<Self> {
        let n = active.count();
        if n == 0 {
            return Err(Error::InvalidWeights("no active components".into()));
        }
        if n == 5 {
            return Ok(*self);
        }
        let dropped: f64 = Component::ALL
            .iter()
            .filter(|c| !active.is_active(**c))
            .map(|c| self.0[c.index()])
            .sum();
        let share = dropped / n as f64;
        let mut out = [0.0; 5];
        for c in active.components() {
            out[c.index()] = self.0[c.index()] + share;
        }
        Ok(Self(out))
    }

    pub fn get(&self, c: Component) -> f64 {
        self.0[c.index()]
    }

    pub fn as_array(&self) -> [f64; 5] {
        self.0
    }
}

impl FromStr for WeightVector {
    type Err = Error;

    /// `equal` or five comma-separated reals in canonical component order.
    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("equal") {
            return Ok(Self::equal());
        }
        let parts = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidWeights(format!("`{p}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        let arr: [f64; 5] = parts.try_into().map_err(|v: Vec<f64>| {
            Error::InvalidWeights(format!("expected 5 weights, got {}", v.len()))
        })?;
        Self::from_loose(arr)
    }
}

/// The five sub-scores of one (proposal, track) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubScores {
    pub objectness: f64,
    pub reid: f64,
    pub maskprop: f64,
    pub inv_reid: f64,
    pub inv_maskprop: f64,
}

impl SubScores {
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.objectness,
            self.reid,
            self.maskprop,
            self.inv_reid,
            self.inv_maskprop,
        ]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            objectness: a[0],
            reid: a[1],
            maskprop: a[2],
            inv_reid: a[3],
            inv_maskprop: a[4],
        }
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "embedding lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// `1 - distance / video_max_distance`; a zero maximum means every
/// proposal coincides with the reference, scored 1.
pub fn reid_score(
    proposal_embedding: &[f64],
    gt_embedding: &[f64],
    video_max_distance: f64,
) -> Result<f64> {
    let d = euclidean(proposal_embedding, gt_embedding)?;
    Ok(reid_from_distance(d, video_max_distance))
}

pub(crate) fn reid_from_distance(distance: f64, video_max_distance: f64) -> f64 {
    if video_max_distance <= 0.0 {
        return 1.0;
    }
    (1.0 - distance / video_max_distance).clamp(0.0, 1.0)
}

/// Per ground-truth object, the largest embedding distance to any proposal
/// in any frame; 0 when the video has no proposals.
pub fn compute_video_max_distances(manifest: &VideoManifest) -> Result<Vec<f64>> {
    manifest
        .ground_truth
        .iter()
        .map(|g| {
            manifest
                .proposals
                .iter()
                .flatten()
                .try_fold(0.0f64, |acc, p| {
                    Ok(acc.max(euclidean(&p.embedding, &g.embedding)?))
                })
        })
        .collect()
}

/// IoU of the candidate against the previous selection warped into the
/// current frame; two empty masks score 0.
pub fn maskprop_score(
    candidate: &Mask,
    prev_selected: &Mask,
    backward_flow: &FlowField,
) -> Result<f64> {
    let warped = warp_mask(prev_selected, backward_flow)?;
    iou(candidate, &warped, EmptyIou::Zero)
}

/// Given one proposal's ReID and propagation scores against every track,
/// returns `(inv_reid, inv_maskprop)` per track. With a single track there
/// is no competitor and both are 1.
pub fn inverse_scores(reid: &[f64], maskprop: &[f64]) -> Vec<(f64, f64)> {
    assert_eq!(reid.len(), maskprop.len(), "one score per track");
    let best_other = |scores: &[f64], j: usize| {
        scores
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, &s)| s)
            .fold(None, |acc: Option<f64>, s| {
                Some(acc.map_or(s, |a| a.max(s)))
            })
    };
    (0..reid.len())
        .map(|j| {
            let inv_r = best_other(reid, j).map_or(1.0, |m| 1.0 - m);
            let inv_m = best_other(maskprop, j).map_or(1.0, |m| 1.0 - m);
            (inv_r, inv_m)
        })
        .collect()
}

pub fn combined_score(sub: &SubScores, w: &WeightVector) -> f64 {
    let s = sub.as_array();
    let a = w.as_array();
    a[0] * s[0] + a[1] * s[1] + a[2] * s[2] + a[3] * s[3] + a[4] * s[4]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reid_endpoints() {
        let g = [1.0, 2.0];
        assert_eq!(reid_score(&g, &g, 4.0).unwrap(), 1.0);
        assert_eq!(reid_score(&[4.0, 2.0], &[0.0, 2.0], 4.0).unwrap(), 0.0);
        assert_eq!(reid_score(&[3.0, 0.0], &[0.0, 0.0], 4.0).unwrap(), 0.25);
        assert_eq!(reid_score(&g, &g, 0.0).unwrap(), 1.0);
        assert!(reid_score(&[1.0], &g, 1.0).is_err());
    }

    #[test]
    fn inverse_single_track() {
        assert_eq!(inverse_scores(&[0.4], &[0.7]), vec![(1.0, 1.0)]);
    }

    #[test]
    fn inverse_two_tracks() {
        let inv = inverse_scores(&[0.9, 0.3], &[0.0, 1.0]);
        assert!((inv[0].0 - 0.7).abs() < 1e-15);
        assert_eq!(inv[0].1, 0.0);
        assert!((inv[1].0 - 0.1).abs() < 1e-15);
        assert_eq!(inv[1].1, 1.0);
    }

    #[test]
    fn combined_examples() {
        let ones = SubScores::from_array([1.0; 5]);
        assert!((combined_score(&ones, &WeightVector::equal()) - 1.0).abs() < 1e-15);
        let first = SubScores::from_array([1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(combined_score(&first, &WeightVector::equal()), 0.2);
        let tuned = WeightVector::new([0.19, 0.18, 0.22, 0.14, 0.27]).unwrap();
        let s = SubScores::from_array([1.0, 1.0, 0.0, 1.0, 0.0]);
        assert!((combined_score(&s, &tuned) - 0.51).abs() < 1e-12);
    }

    #[test]
    fn weights_validate() {
        assert!(WeightVector::new([0.5, 0.5, 0.0, 0.0, 0.0]).is_ok());
        assert!(WeightVector::new([0.5, 0.6, 0.0, 0.0, 0.0]).is_err());
        assert!(WeightVector::new([1.5, -0.5, 0.0, 0.0, 0.0]).is_err());
        assert!(WeightVector::new([f64::NAN, 1.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn loose_weights_within_one_percent() {
        let w: WeightVector = "0.2,0.2,0.2,0.2,0.205".parse().unwrap();
        let sum: f64 = w.as_array().iter().sum();
        assert!((sum - 1.0).abs() <= SIMPLEX_TOLERANCE);
        assert!("0.2,0.2,0.2,0.2,0.3".parse::<WeightVector>().is_err());
        assert!("0.2,0.2,0.2,0.4".parse::<WeightVector>().is_err());
        assert_eq!(
            "equal".parse::<WeightVector>().unwrap(),
            WeightVector::equal()
        );
    }

    #[test]
    fn restrict_redistributes_equally() {
        let active = ComponentMask::ALL.without(Component::MaskProp);
        let w = WeightVector::equal().restrict(active).unwrap();
        for (got, want) in w.as_array().iter().zip([0.25, 0.25, 0.0, 0.25, 0.25]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert_eq!(
            WeightVector::equal_over(active).unwrap().as_array(),
            [0.25, 0.25, 0.0, 0.25, 0.25]
        );
        let only = WeightVector::equal()
            .restrict(ComponentMask::only(&[Component::MaskProp]))
            .unwrap();
        assert_eq!(only.as_array(), [0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(WeightVector::equal()
            .restrict(ComponentMask::none())
            .is_err());
    }

    #[test]
    fn component_mask_parsing() {
        let m: ComponentMask = "obj,reid,inv_reid,maskprop,inv_maskprop".parse().unwrap();
        assert_eq!(m, ComponentMask::ALL);
        let m: ComponentMask = "maskprop".parse().unwrap();
        assert_eq!(m.count(), 1);
        assert_eq!(m.to_string(), "maskprop");
        assert!("maskprop,bogus".parse::<ComponentMask>().is_err());
        assert!("".parse::<ComponentMask>().is_err());
    }

    #[test]
    fn weights_json_round_trip() {
        let w = WeightVector::new([0.19, 0.18, 0.22, 0.14, 0.27]).unwrap();
        let s = serde_json::to_string(&w).unwrap();
        assert!(s.contains("\"inv_maskprop\":0.27"));
        assert_eq!(serde_json::from_str::<WeightVector>(&s).unwrap(), w);
        assert!(serde_json::from_str::<WeightVector>(
            r#"{"objectness":1,"reid":1,"maskprop":0,"inv_reid":0,"inv_maskprop":0}"#
        )
        .is_err());
    }

    #[test]
    fn maskprop_examples() {
        let m = Mask::from_fn(5, 5, |x, y| x == 1 && y == 1);
        let zero = FlowField::zeros(5, 5);
        assert_eq!(maskprop_score(&m, &m, &zero).unwrap(), 1.0);
        assert_eq!(maskprop_score(&m, &Mask::empty(5, 5), &zero).unwrap(), 0.0);
        // pixel at (1,1) moves to (2,1); candidate covers (2,1) and (3,1)
        let cand = Mask::from_fn(5, 5, |x, y| y == 1 && (x == 2 || x == 3));
        let flow = FlowField::uniform(5, 5, -1.0, 0.0);
        assert_eq!(maskprop_score(&cand, &m, &flow).unwrap(), 0.5);
    }
}
