//! Greedy merge of a synthetic video with equal and custom weights.

use vosmerge::synth::{generate, ScenarioSpec};
use vosmerge::{greedy_merge, ComponentMask, Selection, WeightVector};

fn main() -> vosmerge::Result<()> {
    let video = generate(&ScenarioSpec::crossing_identical(0))?;
    let manifest = video.manifest.filtered(0.05, 0.66);

    for weights in [WeightVector::equal(), "0.19,0.18,0.22,0.14,0.27".parse()?] {
        let tracks = greedy_merge(&manifest, &weights, ComponentMask::ALL)?;
        println!("weights {:?}", weights.as_array());
        for (t, frame) in tracks.selections.iter().enumerate().take(5) {
            let picks: Vec<String> = frame
                .iter()
                .map(|s| match s {
                    Selection::GroundTruth => "gt".into(),
                    Selection::Proposal { index, score, .. } => format!("#{index} ({score:.3})"),
                    Selection::Empty => "-".into(),
                })
                .collect();
            println!("  frame {t}: {}", picks.join("  "));
        }
    }
    Ok(())
}
