//! Builds a confusion matrix from label pairs and prints the per-class
//! report under each averaging mode.
//!
//! cargo run --release --example confusion_report

use djmeter::evaluation::{confusion, report, Averaging};

fn main() -> djmeter::Result<()> {
    let classes: Vec<String> = ["anthem", "club", "mono"].iter().map(|s| s.to_string()).collect();
    let pairs = [
        ("anthem", "anthem", 8),
        ("anthem", "club", 2),
        ("club", "club", 9),
        ("club", "mono", 1),
        ("mono", "mono", 5),
        ("mono", "anthem", 3),
    ];
    let mut actual = Vec::new();
    let mut predicted = Vec::new();
    for (a, p, n) in pairs {
        for _ in 0..n {
            actual.push(a);
            predicted.push(p);
        }
    }
    let cm = confusion(&actual, &predicted, &classes)?;
    print!("{}", cm.render_grid());
    let rep = report(&cm)?;
    for avg in [Averaging::Macro, Averaging::Micro, Averaging::Weighted] {
        println!("\n{avg:?} averaging");
        print!("{}", rep.render_text(avg));
    }
    Ok(())
}
