//! Component on/off runs on the crossing scenario, equal weights over the
//! active components.

use vosmerge::metrics::aggregate;
use vosmerge::synth::{generate, ScenarioSpec};
use vosmerge::{evaluate, Component, ComponentMask, EvalOptions, PreparedVideo, WeightVector};

fn main() -> vosmerge::Result<()> {
    let v = generate(&ScenarioSpec::crossing_identical(0))?;
    let m = v.manifest.filtered(0.05, 0.66);
    let prepared = PreparedVideo::new(&m)?;

    let mut runs = vec![ComponentMask::ALL];
    runs.extend(
        Component::ALL
            .iter()
            .map(|&c| ComponentMask::ALL.without(c)),
    );
    runs.extend(Component::ALL.iter().map(|&c| ComponentMask::only(&[c])));

    println!("{:<40} J&F", "active components");
    for active in runs {
        let w = WeightVector::equal_over(active)?;
        let ts = prepared.merge(&w, active)?;
        let e = evaluate(
            &m.video_id,
            &ts.label_maps,
            &v.ground_truth,
            &EvalOptions::default(),
        )?;
        println!(
            "{:<40} {:.4}",
            active.to_string(),
            aggregate(vec![e])?.aggregate.jf_mean
        );
    }
    Ok(())
}
