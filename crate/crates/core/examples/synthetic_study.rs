//! End-to-end study on a synthetic three-class corpus: render, extract,
//! 5-fold cross-validation and a shuffled-label control.
//!
//! cargo run --release --example synthetic_study -- [songs_per_class] [seconds]

use djmeter::evaluation::{cross_validate, shuffled_label_accuracy, Averaging, EvalConfig};
use djmeter::features::{Dataset, ExtractConfig};
use djmeter::synth::{generate, SynthSpec};
use std::time::Instant;

fn main() -> djmeter::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let count = args.first().map_or(20, |s| s.parse().expect("count"));
    let seconds = args.get(1).map_or(60.0, |s| s.parse().expect("seconds"));
    let tmp = tempfile::tempdir().expect("tempdir");
    let t = Instant::now();

    let manifest = generate(&SynthSpec::three_archetypes(count, seconds, 7), tmp.path().join("corpus"))?;
    println!("rendered {} songs in {:.1?}", 3 * count, t.elapsed());
    let out = tmp.path().join("dataset.csv");
    let summary = djmeter::cli::cmd_extract(&manifest, &out, &ExtractConfig::default())?;
    println!("extracted {} songs in {:.1?}", summary.written, t.elapsed());
    let ds = Dataset::read(&out)?;

    let cfg = EvalConfig::default();
    let ev = cross_validate(&ds, 5, &cfg)?;
    for (i, f) in ev.folds.iter().enumerate() {
        println!("fold {}: {:.3}", i + 1, f.accuracy);
    }
    println!("mean accuracy {:.3}\n", ev.mean_accuracy);
    print!("{}", ev.report.render_text(Averaging::Macro));
    print!("\n{}", ev.confusion.render_grid());
    let control = shuffled_label_accuracy(&ds, 5, 5, &cfg)?;
    println!("\nshuffled-label control {control:.3} (chance 0.333)");
    println!("total {:.1?}", t.elapsed());
    Ok(())
}
