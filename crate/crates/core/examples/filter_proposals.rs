//! Score threshold and mask NMS on a hand-made proposal list.

use vosmerge::manifest::{DEFAULT_NMS_IOU, DEFAULT_SCORE_MIN};
use vosmerge::{filter_proposals, iou, EmptyIou, Mask, Proposal};

fn block(x0: u32, n: u32) -> Mask {
    // n pixels of a 10x10 block filled column by column
    Mask::from_fn(30, 10, move |x, y| {
        x >= x0 && x < x0 + 10 && (x - x0) * 10 + y < n
    })
}

fn main() -> vosmerge::Result<()> {
    let proposals = vec![
        Proposal::new(0, block(0, 100), 0.90, vec![0.0])?,
        Proposal::new(0, block(0, 66), 0.80, vec![0.0])?, // IoU 0.66 with the first
        Proposal::new(0, block(0, 65), 0.70, vec![0.0])?, // IoU 0.65
        Proposal::new(0, block(15, 100), 0.05, vec![0.0])?, // not above the score floor
        Proposal::new(0, block(15, 80), 0.30, vec![0.0])?,
    ];
    for (i, p) in proposals.iter().enumerate() {
        println!(
            "#{i}: score {:.2}, area {:3}, IoU with #0 {:.2}",
            p.objectness,
            p.mask.area(),
            iou(&p.mask, &proposals[0].mask, EmptyIou::Zero)?
        );
    }
    let kept = filter_proposals(&proposals, DEFAULT_SCORE_MIN, DEFAULT_NMS_IOU);
    let survivors: Vec<f64> = kept.iter().map(|p| p.objectness).collect();
    println!("kept scores: {survivors:?}");
    Ok(())
}
