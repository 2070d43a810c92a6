//! Naive reference implementations shared by the integration tests.
//!
//! Everything here works on dense grids straight from the definitions and
//! avoids the library's run-length arithmetic, prepared caches and helpers.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use vosmerge::{ComponentMask, FlowField, LabelMap, Mask, VideoManifest, WeightVector};

pub fn rng(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

/// Dense row-major grid with its own decoder of column-major runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    pub w: usize,
    pub h: usize,
    pub px: Vec<bool>,
}

impl Grid {
    pub fn new(w: usize, h: usize) -> Self {
        Self {
            w,
            h,
            px: vec![false; w * h],
        }
    }

    pub fn from_fn(w: usize, h: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut g = Self::new(w, h);
        for y in 0..h {
            for x in 0..w {
                g.px[y * w + x] = f(x, y);
            }
        }
        g
    }

    pub fn from_mask(m: &Mask) -> Self {
        let (w, h) = (m.width() as usize, m.height() as usize);
        let mut g = Self::new(w, h);
        let mut flat = 0usize;
        let mut on = false;
        for &r in m.runs() {
            for k in flat..flat + r as usize {
                let (x, y) = (k / h, k % h);
                g.px[y * w + x] = on;
            }
            flat += r as usize;
            on = !on;
        }
        assert_eq!(flat, w * h, "runs must cover the image");
        g
    }

    /// Column-major runs starting with background.
    pub fn runs(&self) -> Vec<u32> {
        let mut runs = Vec::new();
        let mut cur = false;
        let mut len = 0u32;
        for x in 0..self.w {
            for y in 0..self.h {
                let v = self.at(x as i64, y as i64);
                if v == cur {
                    len += 1;
                } else {
                    runs.push(len);
                    cur = v;
                    len = 1;
                }
            }
        }
        runs.push(len);
        runs
    }

    pub fn to_mask(&self) -> Mask {
        Mask::from_runs(self.w as u32, self.h as u32, self.runs()).expect("valid runs")
    }

    pub fn at(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.w
            && (y as usize) < self.h
            && self.px[y as usize * self.w + x as usize]
    }

    pub fn count(&self) -> usize {
        self.px.iter().filter(|&&b| b).count()
    }

    pub fn points(&self) -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        for y in 0..self.h {
            for x in 0..self.w {
                if self.px[y * self.w + x] {
                    out.push((x as i64, y as i64));
                }
            }
        }
        out
    }
}

pub fn random_grid(r: &mut impl Rng, w: usize, h: usize, density: f64) -> Grid {
    Grid::from_fn(w, h, |_, _| r.random_bool(density))
}

/// Random mask made of a few axis-aligned blobs, so runs are not trivial.
pub fn random_blobby(r: &mut impl Rng, w: usize, h: usize) -> Grid {
    let mut g = Grid::new(w, h);
    for _ in 0..r.random_range(0..4) {
        let (x0, y0) = (r.random_range(0..w), r.random_range(0..h));
        let (x1, y1) = (r.random_range(x0..w) + 1, r.random_range(y0..h) + 1);
        for y in y0..y1 {
            for x in x0..x1 {
                g.px[y * w + x] = true;
            }
        }
    }
    g
}

pub fn naive_iou(a: &Grid, b: &Grid, empty_value: f64) -> f64 {
    let inter = a.px.iter().zip(&b.px).filter(|(p, q)| **p && **q).count();
    let union = a.px.iter().zip(&b.px).filter(|(p, q)| **p || **q).count();
    if union == 0 {
        empty_value
    } else {
        inter as f64 / union as f64
    }
}

/// Backward nearest-neighbour warp: output `(x, y)` reads `(x+dx, y+dy)`.
pub fn naive_warp(src: &Grid, flow: &FlowField) -> Grid {
    let vectors = flow.vectors();
    Grid::from_fn(src.w, src.h, |x, y| {
        let (dx, dy) = vectors[y * src.w + x];
        let sx = (x as f64 + dx as f64).round() as i64;
        let sy = (y as f64 + dy as f64).round() as i64;
        src.at(sx, sy)
    })
}

pub fn naive_boundary(g: &Grid) -> Grid {
    Grid::from_fn(g.w, g.h, |x, y| {
        let (x, y) = (x as i64, y as i64);
        g.at(x, y) && (!g.at(x - 1, y) || !g.at(x + 1, y) || !g.at(x, y - 1) || !g.at(x, y + 1))
    })
}

/// Fraction of `from` points with some `to` point at squared distance
/// `<= tol^2`, by enumerating every pair.
fn within(from: &[(i64, i64)], to: &[(i64, i64)], tol: u32) -> f64 {
    let t2 = i64::from(tol) * i64::from(tol);
    let hit = from
        .iter()
        .filter(|&&(x, y)| {
            to.iter()
                .any(|&(u, v)| (x - u) * (x - u) + (y - v) * (y - v) <= t2)
        })
        .count();
    hit as f64 / from.len() as f64
}

pub fn naive_f(pred: &Grid, gt: &Grid, tol: u32) -> f64 {
    let pb = naive_boundary(pred).points();
    let gb = naive_boundary(gt).points();
    match (pb.is_empty(), gb.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let p = within(&pb, &gb, tol);
    let r = within(&gb, &pb, tol);
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        s += (a[k] - b[k]) * (a[k] - b[k]);
    }
    s.sqrt()
}

/// Weights after moving inactive mass equally onto active components.
pub fn naive_restrict(w: &WeightVector, active: ComponentMask) -> [f64; 5] {
    let a = w.as_array();
    let flags = active.flags();
    let n = flags.iter().filter(|&&f| f).count();
    if n == 5 {
        return a;
    }
    let mut dropped = 0.0;
    for q in 0..5 {
        if !flags[q] {
            dropped += a[q];
        }
    }
    let mut out = [0.0; 5];
    for q in 0..5 {
        if flags[q] {
            out[q] = a[q] + dropped / n as f64;
        }
    }
    out
}

/// Per-frame, per-track proposal index chosen by the greedy rule, computed
/// directly from the sub-score definitions with no caching.
pub fn naive_greedy(
    m: &VideoManifest,
    w: &WeightVector,
    active: ComponentMask,
) -> Vec<Vec<Option<usize>>> {
    let alpha = naive_restrict(w, active);
    let n_tracks = m.ground_truth.len();
    let max_d: Vec<f64> = m
        .ground_truth
        .iter()
        .map(|g| {
            let mut best = 0.0f64;
            for frame in &m.proposals {
                for p in frame {
                    best = best.max(dist(&p.embedding, &g.embedding));
                }
            }
            best
        })
        .collect();
    let (wd, ht) = (m.width as usize, m.height as usize);
    let mut prev: Vec<Grid> = m
        .ground_truth
        .iter()
        .map(|g| Grid::from_mask(&g.first_frame_mask))
        .collect();
    let mut out = vec![vec![None; n_tracks]];
    for t in 1..m.frame_count {
        let flow = &m.flows[t - 1];
        let warped: Vec<Grid> = prev.iter().map(|g| naive_warp(g, flow)).collect();
        let cands: Vec<Grid> = m.proposals[t]
            .iter()
            .map(|p| Grid::from_mask(&p.mask))
            .collect();
        let n = cands.len();
        let mut reid = vec![vec![0.0; n_tracks]; n];
        let mut prop = vec![vec![0.0; n_tracks]; n];
        for i in 0..n {
            for j in 0..n_tracks {
                let d = dist(&m.proposals[t][i].embedding, &m.ground_truth[j].embedding);
                reid[i][j] = if max_d[j] == 0.0 {
                    1.0
                } else {
                    (1.0 - d / max_d[j]).clamp(0.0, 1.0)
                };
                prop[i][j] = naive_iou(&cands[i], &warped[j], 0.0);
            }
        }
        let mut picks = Vec::with_capacity(n_tracks);
        for j in 0..n_tracks {
            let mut best: Option<(usize, f64)> = None;
            for i in 0..n {
                let mut inv_r = 1.0;
                let mut inv_m = 1.0;
                if n_tracks > 1 {
                    let mut mr = f64::NEG_INFINITY;
                    let mut mm = f64::NEG_INFINITY;
                    for k in 0..n_tracks {
                        if k != j {
                            mr = mr.max(reid[i][k]);
                            mm = mm.max(prop[i][k]);
                        }
                    }
                    inv_r = 1.0 - mr;
                    inv_m = 1.0 - mm;
                }
                let s = [
                    m.proposals[t][i].objectness,
                    reid[i][j],
                    prop[i][j],
                    inv_r,
                    inv_m,
                ];
                let c = alpha[0] * s[0]
                    + alpha[1] * s[1]
                    + alpha[2] * s[2]
                    + alpha[3] * s[3]
                    + alpha[4] * s[4];
                match best {
                    Some((_, b)) if c <= b => {}
                    _ => best = Some((i, c)),
                }
            }
            picks.push(best.map(|(i, _)| i));
        }
        prev = picks
            .iter()
            .map(|p| match p {
                Some(i) => cands[*i].clone(),
                None => Grid::new(wd, ht),
            })
            .collect();
        out.push(picks);
    }
    out
}

/// Per-pixel vote: most votes, then smallest label.
pub fn naive_vote(maps: &[&LabelMap]) -> Vec<u8> {
    let n = maps[0].labels().len();
    (0..n)
        .map(|px| {
            let mut counts = [0usize; 256];
            for m in maps {
                counts[m.labels()[px] as usize] += 1;
            }
            let top = *counts.iter().max().unwrap();
            counts.iter().position(|&c| c == top).unwrap() as u8
        })
        .collect()
}

pub fn random_label_map(r: &mut impl Rng, w: u32, h: u32, max_label: u8) -> LabelMap {
    let labels = (0..w * h).map(|_| r.random_range(0..=max_label)).collect();
    LabelMap::from_labels(w, h, labels).unwrap()
}

pub fn random_weights(r: &mut impl Rng) -> WeightVector {
    let raw: [f64; 5] = std::array::from_fn(|_| -r.random::<f64>().max(1e-12).ln());
    let s: f64 = raw.iter().sum();
    WeightVector::new(raw.map(|x| x / s)).unwrap()
}
