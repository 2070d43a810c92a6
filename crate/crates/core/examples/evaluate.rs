//! J and F per frame, then mean / recall / decay.

use vosmerge::metrics::default_tolerance;
use vosmerge::synth::{generate, ScenarioSpec};
use vosmerge::{evaluate, f_measure, j_measure, sequence_stats, EvalOptions, Mask};

fn main() -> vosmerge::Result<()> {
    let gt = Mask::from_fn(10, 10, |x, y| (2..6).contains(&x) && (2..6).contains(&y));
    let pred = Mask::from_fn(10, 10, |x, y| (3..7).contains(&x) && (2..6).contains(&y));
    println!(
        "shifted block: J {:.4}, F(tol 0) {:.4}, F(tol 1) {:.4}",
        j_measure(&pred, &gt)?,
        f_measure(&pred, &gt, 0)?,
        f_measure(&pred, &gt, 1)?
    );
    println!(
        "default tolerance for 854x480: {} px",
        default_tolerance(854, 480)
    );

    let s = sequence_stats(&[1.0, 1.0, 0.0, 0.0])?;
    println!(
        "[1, 1, 0, 0] -> mean {} recall {} decay {}",
        s.mean, s.recall, s.decay
    );

    // perfect prediction scores 1 everywhere
    let v = generate(&ScenarioSpec::crossing_identical(0))?;
    let e = evaluate(
        "crossing",
        &v.ground_truth.frames,
        &v.ground_truth,
        &EvalOptions::default(),
    )?;
    for o in &e.objects {
        println!(
            "object {}: J&F {} (J decay {}, F decay {})",
            o.object_id, o.jf_mean, o.j.decay, o.f.decay
        );
    }
    Ok(())
}
