//! Random search over the weight simplex on a small synthetic corpus.

use vosmerge::synth::{generate, generate_random, RandomLimits, ScenarioSpec};
use vosmerge::{random_search, SearchConfig, SearchVideo};

fn main() -> vosmerge::Result<()> {
    let mut videos: Vec<_> = (0..6)
        .map(|s| generate_random(s, RandomLimits::default()))
        .collect();
    for seed in 0..3 {
        videos.push(generate(&ScenarioSpec::crossing_identical(seed))?);
    }
    let corpus: Vec<SearchVideo> = videos
        .into_iter()
        .map(|v| SearchVideo {
            manifest: v.manifest.filtered(0.05, 0.66),
            ground_truth: v.ground_truth,
        })
        .collect();

    let samples: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(500);
    let cfg = SearchConfig {
        sample_count: samples,
        seed: 7,
        ..SearchConfig::default()
    };
    let result = random_search(&corpus, &cfg)?;
    println!("equal weights  J&F {:.4}", result.trace[0].score);
    println!(
        "best (#{:>4})   J&F {:.4}  {:?}",
        result.best.sample,
        result.best.score,
        result.best.weights.as_array()
    );
    let worst = result.ranked.last().expect("at least one sample");
    let at_best = result
        .ranked
        .iter()
        .filter(|c| c.score == result.best.score)
        .count();
    println!(
        "worst (#{:>4})  J&F {:.4}  {:?}",
        worst.sample,
        worst.score,
        worst.weights.as_array()
    );
    println!(
        "{at_best} of {} samples reach the best score",
        result.trace.len()
    );
    Ok(())
}
