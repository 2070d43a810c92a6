//! Column-major run-length masks: encode, decode, IoU, boundary, dilation.

use vosmerge::{boundary, dilate, iou, EmptyIou, Mask};

fn show(title: &str, m: &Mask) {
    println!("{title} (area {}, runs {:?})", m.area(), m.runs());
    for y in 0..m.height() {
        let row: String = (0..m.width())
            .map(|x| if m.decode().get(x, y) { '#' } else { '.' })
            .collect();
        println!("  {row}");
    }
}

fn main() -> vosmerge::Result<()> {
    let a = Mask::from_fn(8, 6, |x, y| (1..5).contains(&x) && (1..3).contains(&y));
    let b = Mask::from_fn(8, 6, |x, y| (3..7).contains(&x) && (1..3).contains(&y));
    show("a", &a);
    show("b", &b);
    println!("IoU(a, b) = {}", iou(&a, &b, EmptyIou::Zero)?);

    let empty = Mask::empty(8, 6);
    println!(
        "IoU(empty, empty): scoring {} / evaluation {}",
        iou(&empty, &empty, EmptyIou::Zero)?,
        iou(&empty, &empty, EmptyIou::One)?
    );

    let block = Mask::from_fn(8, 6, |x, y| (2..6).contains(&x) && (1..5).contains(&y));
    show("boundary of a 4x4 block", &boundary(&block));
    show(
        "single pixel dilated by 2",
        &dilate(&Mask::from_fn(8, 6, |x, y| x == 3 && y == 2), 2),
    );

    // runs are validated: they must cover the image exactly
    assert!(Mask::from_runs(2, 2, vec![0, 1, 8]).is_err());
    Ok(())
}
