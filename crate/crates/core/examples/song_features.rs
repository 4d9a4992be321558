//! Extracts the 292-value description of one song and prints selected slots.
//!
//! cargo run --release --example song_features -- [song.wav]

use djmeter::features::{extract_song, slot_names, Aggregation, ExtractConfig};
use djmeter::synth::SynthSpec;

fn main() -> djmeter::Result<()> {
    let tmp = tempfile::tempdir().expect("tempdir");
    let path = match std::env::args().nth(1) {
        Some(p) => p.into(),
        None => {
            let manifest = djmeter::synth::generate(&SynthSpec::three_archetypes(1, 15.0, 2), tmp.path())?;
            djmeter::features::DatasetManifest::read(manifest)?.entries[0].path.clone()
        }
    };
    let rec = extract_song(&path, "song", "", &ExtractConfig::default())?;
    let names = Aggregation::MeanStd.column_names();
    println!("{} windows, {} values", rec.window_count, rec.features.len());
    let wanted = ["vu_L", "ppm_L", "dr_L", "rms_L", "box_count", "pan", "corr", "b63_rms_L", "b1k_rms_L", "b8k_rms_L", "b8k_corr"];
    let half = slot_names().len();
    println!("{:<12} {:>12} {:>12}", "slot", "mean", "std");
    for w in wanted {
        let i = names.iter().position(|n| *n == format!("{w}_mean")).expect("slot");
        println!("{w:<12} {:>12.4} {:>12.4}", rec.features[i], rec.features[i + half]);
    }
    Ok(())
}
