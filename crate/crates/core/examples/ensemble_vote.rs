//! Majority vote over results produced with different weight vectors.

use vosmerge::ensemble::majority_vote;
use vosmerge::metrics::aggregate;
use vosmerge::synth::{generate, ScenarioSpec};
use vosmerge::{evaluate, greedy_merge, ComponentMask, EvalOptions, LabelMap, WeightVector};

fn main() -> vosmerge::Result<()> {
    let v = generate(&ScenarioSpec::crossing_identical(4))?;
    let m = v.manifest.filtered(0.05, 0.66);
    let weights: Vec<WeightVector> = [
        "0.2,0.2,0.2,0.2,0.2",
        "0.5,0.1,0.2,0.1,0.1",
        "0.1,0.1,0.6,0.1,0.1",
        "0.3,0.3,0.1,0.2,0.1",
        "0.1,0.2,0.3,0.1,0.3",
    ]
    .iter()
    .map(|s| s.parse())
    .collect::<vosmerge::Result<_>>()?;

    let score = |maps: &[LabelMap]| -> vosmerge::Result<f64> {
        let e = evaluate(&m.video_id, maps, &v.ground_truth, &EvalOptions::default())?;
        Ok(aggregate(vec![e])?.aggregate.jf_mean)
    };
    let mut results = Vec::new();
    for w in &weights {
        let ts = greedy_merge(&m, w, ComponentMask::ALL)?;
        println!("{}  J&F {:.4}", fmt(w), score(&ts.label_maps)?);
        results.push(ts.label_maps);
    }
    let voted = majority_vote(&results)?;
    println!(
        "majority vote of {}             J&F {:.4}",
        results.len(),
        score(&voted)?
    );

    // a two-way tie goes to the smaller label
    let tie = majority_vote(&[
        vec![LabelMap::from_labels(1, 1, vec![2])?],
        vec![LabelMap::from_labels(1, 1, vec![1])?],
    ])?;
    println!("tie between labels 2 and 1 -> {}", tie[0].labels()[0]);
    Ok(())
}

fn fmt(w: &WeightVector) -> String {
    let parts: Vec<String> = w.as_array().iter().map(|a| format!("{a:.2}")).collect();
    format!("[{}]", parts.join(", "))
}
