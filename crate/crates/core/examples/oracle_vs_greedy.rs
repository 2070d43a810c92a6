//! The IoU oracle bounds what any weight vector can reach.

use vosmerge::metrics::aggregate;
use vosmerge::synth::{generate_random, RandomLimits};
use vosmerge::{evaluate, greedy_merge, oracle_merge, ComponentMask, EvalOptions, WeightVector};

fn main() -> vosmerge::Result<()> {
    let mut oracle_evals = Vec::new();
    let mut greedy_evals = Vec::new();
    for seed in 0..20 {
        let v = generate_random(seed, RandomLimits::default());
        let m = v.manifest.filtered(0.05, 0.66);
        let o = oracle_merge(&m, &v.ground_truth)?;
        let g = greedy_merge(
            &m,
            &WeightVector::equal(),
            ComponentMask::only(&[vosmerge::Component::Objectness]),
        )?;
        oracle_evals.push(evaluate(
            &m.video_id,
            &o.label_maps,
            &v.ground_truth,
            &EvalOptions::default(),
        )?);
        greedy_evals.push(evaluate(
            &m.video_id,
            &g.label_maps,
            &v.ground_truth,
            &EvalOptions::default(),
        )?);
    }
    let o = aggregate(oracle_evals)?.aggregate;
    let g = aggregate(greedy_evals)?.aggregate;
    println!("oracle          J&F {:.4}", o.jf_mean);
    println!("objectness only J&F {:.4}", g.jf_mean);
    Ok(())
}
