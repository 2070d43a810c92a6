mod common;

use common::{naive_boundary, naive_f, naive_iou, naive_vote, Grid};
use proptest::prelude::*;
use vosmerge::ensemble::majority_vote;
use vosmerge::labels::GroundTruthVideo;
use vosmerge::metrics::sequence_stats;
use vosmerge::scoring::{combined_score, compute_video_max_distances, reid_score};
use vosmerge::synth::{generate_random, RandomLimits};
use vosmerge::*;

fn grid_pair() -> impl Strategy<Value = (Grid, Grid)> {
    (1usize..=16, 1usize..=16).prop_flat_map(|(w, h)| {
        (
            prop::collection::vec(any::<bool>(), w * h),
            prop::collection::vec(any::<bool>(), w * h),
        )
            .prop_map(move |(a, b)| (Grid { w, h, px: a }, Grid { w, h, px: b }))
    })
}

fn grid() -> impl Strategy<Value = Grid> {
    grid_pair().prop_map(|(a, _)| a)
}

fn sub_scores() -> impl Strategy<Value = SubScores> {
    prop::array::uniform5(0.0f64..=1.0).prop_map(SubScores::from_array)
}

fn weights() -> impl Strategy<Value = WeightVector> {
    prop::array::uniform5(0.001f64..1.0).prop_map(|a| {
        let s: f64 = a.iter().sum();
        WeightVector::new(a.map(|x| x / s)).unwrap()
    })
}

fn dense_op(a: &Grid, b: &Grid, f: impl Fn(bool, bool) -> bool) -> Grid {
    Grid {
        w: a.w,
        h: a.h,
        px: a.px.iter().zip(&b.px).map(|(&p, &q)| f(p, q)).collect(),
    }
}

proptest! {
    #[test]
    fn iou_bounded_symmetric_and_matches_dense((a, b) in grid_pair()) {
        let (ma, mb) = (a.to_mask(), b.to_mask());
        for (empty, v) in [(EmptyIou::Zero, 0.0), (EmptyIou::One, 1.0)] {
            let x = iou(&ma, &mb, empty).unwrap();
            prop_assert!((0.0..=1.0).contains(&x));
            prop_assert_eq!(x, iou(&mb, &ma, empty).unwrap());
            prop_assert_eq!(x, naive_iou(&a, &b, v));
        }
    }

    #[test]
    fn run_length_set_ops_match_dense((a, b) in grid_pair()) {
        let (ma, mb) = (a.to_mask(), b.to_mask());
        prop_assert_eq!(ma.area() as usize, a.count());
        prop_assert_eq!(Grid::from_mask(&ma), a.clone());
        prop_assert_eq!(Grid::from_mask(&ma.intersection(&mb).unwrap()), dense_op(&a, &b, |p, q| p && q));
        prop_assert_eq!(Grid::from_mask(&ma.union(&mb).unwrap()), dense_op(&a, &b, |p, q| p || q));
        prop_assert_eq!(Grid::from_mask(&ma.difference(&mb).unwrap()), dense_op(&a, &b, |p, q| p && !q));
        prop_assert_eq!(ma.intersection_area(&mb).unwrap() as usize, dense_op(&a, &b, |p, q| p && q).count());
    }

    #[test]
    fn bbox_is_tight(g in grid()) {
        let pts = g.points();
        match g.to_mask().bbox() {
            None => prop_assert!(pts.is_empty()),
            Some(b) => {
                let x0 = pts.iter().map(|p| p.0).min().unwrap() as u32;
                let x1 = pts.iter().map(|p| p.0).max().unwrap() as u32 + 1;
                let y0 = pts.iter().map(|p| p.1).min().unwrap() as u32;
                let y1 = pts.iter().map(|p| p.1).max().unwrap() as u32 + 1;
                prop_assert_eq!(b.to_array(), [x0, y0, x1, y1]);
            }
        }
    }

    #[test]
    fn dilation_is_monotone(g in grid(), r1 in 0u32..4, extra in 0u32..4) {
        let m = g.to_mask();
        let d1 = dilate(&m, r1);
        let d2 = dilate(&m, r1 + extra);
        prop_assert!(m.is_subset_of(&d1).unwrap());
        prop_assert!(d1.is_subset_of(&d2).unwrap());
    }

    #[test]
    fn boundary_within_mask_and_matches_dense(g in grid()) {
        let m = g.to_mask();
        let b = boundary(&m);
        prop_assert!(b.is_subset_of(&m).unwrap());
        prop_assert_eq!(Grid::from_mask(&b), naive_boundary(&g));
    }

    #[test]
    fn combined_score_in_unit_interval_and_monotone(s in sub_scores(), w in weights(), q in 0usize..5, bump in 0.0f64..1.0) {
        let c = combined_score(&s, &w);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&c));
        let mut raised = s.as_array();
        raised[q] = (raised[q] + bump).min(1.0);
        prop_assert!(combined_score(&SubScores::from_array(raised), &w) >= c);
    }

    #[test]
    fn argmax_survives_uniform_scaling(rows in prop::collection::vec(sub_scores(), 1..8), w in weights(), k in 0i32..6) {
        // powers of two scale every product exactly
        let c = 2f64.powi(-k);
        let argmax = |rows: &[SubScores]| {
            let mut best = (0, f64::NEG_INFINITY);
            for (i, s) in rows.iter().enumerate() {
                let v = combined_score(s, &w);
                if v > best.1 {
                    best = (i, v);
                }
            }
            best.0
        };
        let scaled: Vec<SubScores> = rows.iter().map(|s| SubScores::from_array(s.as_array().map(|x| x * c))).collect();
        prop_assert_eq!(argmax(&rows), argmax(&scaled));
    }

    #[test]
    fn restricted_weights_stay_on_simplex(w in weights(), flags in prop::array::uniform5(any::<bool>())) {
        prop_assume!(flags.contains(&true));
        let active = ComponentMask::from_flags(flags);
        let r = w.restrict(active).unwrap().as_array();
        prop_assert!((r.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        for q in 0..5 {
            prop_assert!(flags[q] || r[q] == 0.0);
            prop_assert!(!flags[q] || r[q] >= w.as_array()[q]);
        }
    }

    #[test]
    fn reid_invariant_under_rotation(seed in 0u64..500, angle in 0.0f64..std::f64::consts::TAU, axes in (0usize..16, 0usize..16)) {
        prop_assume!(axes.0 != axes.1);
        let v = generate_random(seed, RandomLimits::default());
        let m = &v.manifest;
        let rotate = |e: &[f64]| {
            let mut out = e.to_vec();
            let (a, b) = axes;
            out[a] = angle.cos() * e[a] - angle.sin() * e[b];
            out[b] = angle.sin() * e[a] + angle.cos() * e[b];
            out
        };
        let mut rotated = m.clone();
        for g in &mut rotated.ground_truth {
            g.embedding = rotate(&g.embedding);
        }
        for p in rotated.proposals.iter_mut().flatten() {
            p.embedding = rotate(&p.embedding);
        }
        let d0 = compute_video_max_distances(m).unwrap();
        let d1 = compute_video_max_distances(&rotated).unwrap();
        for (j, (g0, g1)) in m.ground_truth.iter().zip(&rotated.ground_truth).enumerate() {
            for (p0, p1) in m.proposals.iter().flatten().zip(rotated.proposals.iter().flatten()) {
                let s0 = reid_score(&p0.embedding, &g0.embedding, d0[j]).unwrap();
                let s1 = reid_score(&p1.embedding, &g1.embedding, d1[j]).unwrap();
                prop_assert!((s0 - s1).abs() <= 1e-9, "{} vs {}", s0, s1);
            }
        }
    }

    #[test]
    fn merged_label_maps_partition_selected_masks(seed in 0u64..2000, w in weights()) {
        let v = generate_random(seed, RandomLimits::default());
        let ts = greedy_merge(&v.manifest, &w, ComponentMask::ALL).unwrap();
        prop_assert_eq!(&ts, &greedy_merge(&v.manifest, &w, ComponentMask::ALL).unwrap());
        for t in 0..ts.frame_count() {
            for (j, sel) in ts.selections[t].iter().enumerate() {
                let resolved = ts.resolved_mask(t, j);
                let source = match sel {
                    Selection::GroundTruth => v.manifest.ground_truth[j].first_frame_mask.clone(),
                    Selection::Proposal { index, score, sub_scores } => {
                        let s = sub_scores.unwrap();
                        prop_assert!(s.as_array().iter().all(|x| (0.0..=1.0).contains(x)));
                        prop_assert!((0.0..=1.0 + 1e-12).contains(score));
                        v.manifest.proposals[t][*index].mask.clone()
                    }
                    Selection::Empty => Mask::empty(v.manifest.width, v.manifest.height),
                };
                prop_assert!(resolved.is_subset_of(&source).unwrap());
            }
            let labels = ts.label_maps[t].object_labels();
            prop_assert!(labels.iter().all(|l| ts.object_ids.contains(l)));
        }
    }

    #[test]
    fn filtering_idempotent_subset(seed in 0u64..2000, smin in 0.0f64..0.9, nms in 0.1f64..1.0) {
        let v = generate_random(seed, RandomLimits { max_proposals: 8, ..RandomLimits::default() });
        for frame in &v.manifest.proposals {
            let once = filter_proposals(frame, smin, nms);
            prop_assert_eq!(&filter_proposals(&once, smin, nms), &once);
            prop_assert!(once.iter().all(|p| frame.contains(p)));
        }
    }

    #[test]
    fn vote_properties(w in 1u32..8, h in 1u32..8, seed in any::<u64>(), n in 1usize..6) {
        let mut r = common::rng(seed);
        let results: Vec<Vec<LabelMap>> = (0..n).map(|_| vec![common::random_label_map(&mut r, w, h, 3)]).collect();
        let out = majority_vote(&results).unwrap();
        let maps: Vec<&LabelMap> = results.iter().map(|x| &x[0]).collect();
        let want = naive_vote(&maps);
        prop_assert_eq!(out[0].labels(), want.as_slice());
        let mut reversed = results.clone();
        reversed.reverse();
        prop_assert_eq!(&majority_vote(&reversed).unwrap(), &out);
        prop_assert_eq!(&majority_vote(&vec![results[0].clone(); n]).unwrap(), &results[0]);
    }

    #[test]
    fn j_and_f_symmetric_and_match_enumeration((a, b) in grid_pair(), tol in 0u32..4) {
        let (ma, mb) = (a.to_mask(), b.to_mask());
        prop_assert_eq!(j_measure(&ma, &mb).unwrap(), j_measure(&mb, &ma).unwrap());
        let f = f_measure(&ma, &mb, tol).unwrap();
        prop_assert_eq!(f, f_measure(&mb, &ma, tol).unwrap());
        prop_assert_eq!(f, naive_f(&a, &b, tol));
    }

    #[test]
    fn huge_tolerance_gives_perfect_f((a, b) in grid_pair()) {
        prop_assume!(a.count() > 0 && b.count() > 0);
        let diag = ((a.w * a.w + a.h * a.h) as f64).sqrt().ceil() as u32;
        prop_assert_eq!(f_measure(&a.to_mask(), &b.to_mask(), diag).unwrap(), 1.0);
    }

    #[test]
    fn decay_of_non_increasing_sequence_is_non_negative(mut s in prop::collection::vec(0.0f64..=1.0, 1..30)) {
        s.sort_by(|a, b| b.total_cmp(a));
        let st = sequence_stats(&s).unwrap();
        prop_assert!(st.decay >= 0.0);
        prop_assert!((0.0..=1.0).contains(&st.mean) && (0.0..=1.0).contains(&st.recall));
    }

    #[test]
    fn evaluation_ignores_consistent_relabeling(seed in 0u64..500, w in weights()) {
        let v = generate_random(seed, RandomLimits::default());
        let ts = greedy_merge(&v.manifest, &w, ComponentMask::ALL).unwrap();
        let opts = EvalOptions::default();
        let base = evaluate("v", &ts.label_maps, &v.ground_truth, &opts).unwrap();
        // reverse the ids: k -> n + 1 - k
        let n = v.ground_truth.object_ids.len() as u8;
        let relabel = |m: &LabelMap| {
            let l = m.labels().iter().map(|&x| if x == 0 { 0 } else { n + 1 - x }).collect();
            LabelMap::from_labels(m.width(), m.height(), l).unwrap()
        };
        let pred: Vec<LabelMap> = ts.label_maps.iter().map(relabel).collect();
        let gt_frames: Vec<LabelMap> = v.ground_truth.frames.iter().map(relabel).collect();
        let gt = GroundTruthVideo::new(v.ground_truth.object_ids.clone(), gt_frames).unwrap();
        let moved = evaluate("v", &pred, &gt, &opts).unwrap();
        for o in &base.objects {
            let m = moved.objects.iter().find(|x| x.object_id == n + 1 - o.object_id).unwrap();
            prop_assert_eq!(&o.j_per_frame, &m.j_per_frame);
            prop_assert_eq!(&o.f_per_frame, &m.f_per_frame);
        }
    }

    #[test]
    fn pgm_round_trip(w in 1u32..20, h in 1u32..20, seed in any::<u64>()) {
        let m = common::random_label_map(&mut common::rng(seed), w, h, 255);
        prop_assert_eq!(LabelMap::from_pgm(&m.to_pgm()).unwrap(), m);
    }

    #[test]
    fn flo_round_trip(w in 1u32..10, h in 1u32..10, v in prop::collection::vec((-1e6f32..1e6, -1e6f32..1e6), 100)) {
        let f = FlowField::new(w, h, v[..(w * h) as usize].to_vec()).unwrap();
        let bytes = f.to_bytes();
        let back = FlowField::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_bytes(), bytes);
        prop_assert_eq!(back, f);
    }
}
