//! Writes a synthetic corpus in the on-disk layout the CLI reads.
//!
//! ```text
//! cargo run --example synth_corpus -- /tmp/corpus
//! vosmerge merge -i /tmp/corpus/videos -o /tmp/merged
//! vosmerge eval --pred /tmp/merged --gt /tmp/corpus/gt -o /tmp/report.json
//! ```

use std::path::PathBuf;

use vosmerge::synth::{generate, generate_random, write_corpus, RandomLimits, ScenarioSpec};

fn main() -> vosmerge::Result<()> {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("vosmerge-corpus"));
    let mut videos = vec![
        generate(&ScenarioSpec::single_object(0))?,
        generate(&ScenarioSpec::crossing_identical(0))?,
    ];
    videos.extend((0..4).map(|s| generate_random(s, RandomLimits::default())));
    write_corpus(&root, &videos)?;
    for v in &videos {
        let m = &v.manifest;
        let n: usize = m.proposals.iter().map(Vec::len).sum();
        println!(
            "{:<12} {}x{} {:>2} frames {} objects {:>3} proposals",
            m.video_id,
            m.width,
            m.height,
            m.frame_count,
            m.ground_truth.len(),
            n
        );
    }
    println!("written to {}", root.display());
    Ok(())
}
