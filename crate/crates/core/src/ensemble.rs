//! Pixel-wise majority vote over several merged results of one video.

use rayon::prelude::*;

use crate::error::{check_dims, Error, Result};
use crate::labels::LabelMap;

pub const DEFAULT_ENSEMBLE_SIZE: usize = 11;

/// Votes every pixel of every frame. The most frequent label wins; among
/// tied leaders the smallest label value wins, so background takes any tie
/// it is part of. Labels with no votes are never candidates.
pub fn majority_vote(results: &[Vec<LabelMap>]) -> Result<Vec<LabelMap>> {
    let first = results
        .first()
        .ok_or_else(|| Error::InvalidInput("ensemble needs at least one result".into()))?;
    let frames = first.len();
    if frames == 0 {
        return Err(Error::InvalidInput("results have no frames".into()));
    }
    let dims = first[0].dims();
    for r in results {
        if r.len() != frames {
            return Err(Error::InvalidInput(format!(
                "frame counts differ: {} vs {frames}",
                r.len()
            )));
        }
        for m in r {
            check_dims(dims, m.dims())?;
        }
    }
    if results.len() == 1 {
        return Ok(first.clone());
    }
    (0..frames)
        .into_par_iter()
        .map(|t| vote_frame(results.iter().map(|r| &r[t]), dims))
        .collect()
}

fn vote_frame<'a>(
    maps: impl Iterator<Item = &'a LabelMap>,
    (w, h): (u32, u32),
) -> Result<LabelMap> {
    let maps: Vec<&[u8]> = maps.map(LabelMap::labels).collect();
    let n = w as usize * h as usize;
    let mut out = Vec::with_capacity(n);
    let mut votes = [0u32; 256];
    let mut touched = Vec::with_capacity(maps.len());
    for px in 0..n {
        for m in &maps {
            let l = m[px];
            if votes[l as usize] == 0 {
                touched.push(l);
            }
            votes[l as usize] += 1;
        }
        let mut winner = touched[0];
        for &l in &touched[1..] {
            let (vl, vw) = (votes[l as usize], votes[winner as usize]);
            if vl > vw || (vl == vw && l < winner) {
                winner = l;
            }
        }
        for &l in &touched {
            votes[l as usize] = 0;
        }
        touched.clear();
        out.push(winner);
    }
    LabelMap::from_labels(w, h, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(labels: &[u8]) -> Vec<LabelMap> {
        vec![LabelMap::from_labels(labels.len() as u32, 1, labels.to_vec()).unwrap()]
    }

    #[test]
    fn single_input_is_identity() {
        let r = map(&[0, 1, 2]);
        assert_eq!(majority_vote(std::slice::from_ref(&r)).unwrap(), r);
    }

    #[test]
    fn strict_majority() {
        let out = majority_vote(&[map(&[1]), map(&[1]), map(&[0])]).unwrap();
        assert_eq!(out[0].labels(), &[1]);
    }

    #[test]
    fn two_way_tie_takes_smaller_voted_label() {
        let out = majority_vote(&[map(&[1]), map(&[2])]).unwrap();
        assert_eq!(out[0].labels(), &[1]);
        let out = majority_vote(&[map(&[3]), map(&[0])]).unwrap();
        assert_eq!(out[0].labels(), &[0]);
    }

    #[test]
    fn shape_mismatch_rejected() {
        assert!(majority_vote(&[map(&[1, 2]), map(&[1])]).is_err());
        assert!(majority_vote(&[]).is_err());
    }
}
