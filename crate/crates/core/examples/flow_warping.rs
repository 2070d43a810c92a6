//! Write and read a Middlebury .flo file, then warp a mask with it.

use vosmerge::{load_flo, warp_mask, FlowField, Mask};

fn main() -> vosmerge::Result<()> {
    let dir = std::env::temp_dir().join("vosmerge-flow-example");
    std::fs::create_dir_all(&dir).expect("temp dir is writable");
    let path = dir.join("00001.flo");

    // backward flow t -> t-1: every pixel of frame t came from one pixel to the left
    let flow = FlowField::uniform(6, 4, -1.0, 0.0);
    flow.save(&path)?;
    let loaded = load_flo(&path)?;
    assert_eq!(loaded.to_bytes(), flow.to_bytes());
    println!(
        "{} bytes written to {}",
        flow.to_bytes().len(),
        path.display()
    );

    let prev = Mask::from_fn(6, 4, |x, y| x == 2 && y == 1);
    let cur = warp_mask(&prev, &loaded)?;
    let (x0, y0, _, _) = {
        let b = cur.bbox().expect("pixel stays inside");
        (b.x0, b.y0, b.x1, b.y1)
    };
    println!("pixel (2, 1) at t-1 lands on ({x0}, {y0}) at t");

    // flow pointing off-image empties the mask
    let gone = warp_mask(&prev, &FlowField::uniform(6, 4, 100.0, 0.0))?;
    println!(
        "after an off-image flow the mask has {} pixels",
        gone.area()
    );
    Ok(())
}
