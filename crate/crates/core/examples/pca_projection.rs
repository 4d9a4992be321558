//! Fits a standardized PCA and prints the explained variance and the
//! leading scores.
//!
//! cargo run --release --example pca_projection -- [dataset.csv] [k]
//!
//! Without a dataset, correlated random data with 6 columns is used.

use djmeter::features::Dataset;
use djmeter::pca::PcaModel;
use rand::{Rng, SeedableRng};

fn main() -> djmeter::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (rows, labels): (Vec<Vec<f64>>, Vec<String>) = match args.first() {
        Some(path) => {
            let ds = Dataset::read(path)?;
            djmeter::evaluation::training_rows(&ds, &(0..ds.records.len()).collect::<Vec<_>>())
        }
        None => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
            (0..40)
                .map(|i| {
                    let a: f64 = rng.random_range(-1.0..1.0) + if i % 2 == 0 { 1.5 } else { -1.5 };
                    let b: f64 = rng.random_range(-1.0..1.0);
                    let row = vec![a, 2.0 * a + 0.1 * b, b, a - b, rng.random_range(-0.1..0.1), 10.0 * b];
                    (row, if i % 2 == 0 { "even" } else { "odd" }.to_string())
                })
                .unzip()
        }
    };
    let k = args.get(1).map_or(3, |s| s.parse().expect("k"));
    let model = PcaModel::fit(&rows, k)?;
    let total: f64 = model.scale.len() as f64;
    for (i, v) in model.explained_variance.iter().enumerate() {
        println!("PC{}: variance {v:.4} ({:.1}% of standardized total)", i + 1, 100.0 * v / total);
    }
    for (r, l) in rows.iter().zip(&labels).take(8) {
        let s = model.transform(r)?;
        let s: Vec<String> = s.iter().map(|v| format!("{v:+.3}")).collect();
        println!("{l:>8}: {}", s.join(" "));
    }
    Ok(())
}
