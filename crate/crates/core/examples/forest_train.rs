//! Trains the forest on a dataset (or a toy problem), saves it and reports
//! training-set predictions.
//!
//! cargo run --release --example forest_train -- [dataset.csv] [model.json]

use djmeter::evaluation::training_rows;
use djmeter::features::Dataset;
use djmeter::forest::{ForestConfig, ForestModel};
use rand::{Rng, SeedableRng};

fn main() -> djmeter::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (x, y, schema) = match args.first() {
        Some(path) => {
            let ds = Dataset::read(path)?;
            let (x, y) = training_rows(&ds, &(0..ds.records.len()).collect::<Vec<_>>());
            (x, y, Some(ds.aggregation))
        }
        None => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
            let mut x = Vec::new();
            let mut y = Vec::new();
            for i in 0..150 {
                let c = i % 3;
                x.push((0..8).map(|j| rng.random_range(-1.0..1.0) + if j == c { 1.2 } else { 0.0 }).collect());
                y.push(["anthem", "club", "mono"][c].to_string());
            }
            (x, y, None)
        }
    };
    let cfg = ForestConfig::default();
    let mut model = ForestModel::fit(&x, &y, &cfg)?;
    if let Some(a) = schema {
        model = model.with_schema(a);
    }
    println!(
        "{} trees, max_features {} of {}, depths {:?}",
        model.trees.len(),
        model.resolved_max_features(),
        model.n_tree_features(),
        model.trees.iter().map(|t| t.depth()).collect::<Vec<_>>()
    );
    let correct = x
        .iter()
        .zip(&y)
        .filter(|(r, l)| model.predict(r).map(|p| p == l.as_str()).unwrap_or(false))
        .count();
    println!("training accuracy {}/{}", correct, x.len());
    println!("first row probabilities: {:?}", model.predict_proba(&x[0])?);
    if let Some(out) = args.get(1) {
        model.save(out)?;
        println!("saved {out}");
    }
    Ok(())
}
