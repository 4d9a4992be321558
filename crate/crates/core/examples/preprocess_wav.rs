//! Runs the audio front end on a WAV file and reports each stage.
//!
//! cargo run --release --example preprocess_wav -- [song.wav]
//!
//! Without an argument a 20 s synthetic song is rendered first.

use djmeter::audio_io::{self, PreprocessConfig};
use djmeter::synth::SynthSpec;

fn main() -> djmeter::Result<()> {
    let tmp = tempfile::tempdir().expect("tempdir");
    let path = match std::env::args().nth(1) {
        Some(p) => p.into(),
        None => {
            let spec = SynthSpec::three_archetypes(1, 20.0, 1);
            let manifest = djmeter::synth::generate(&spec, tmp.path())?;
            let m = djmeter::features::DatasetManifest::read(manifest)?;
            m.entries[0].path.clone()
        }
    };
    let cfg = PreprocessConfig::default();
    let clip = audio_io::decode(&path, &cfg)?;
    println!("{}: {:.2} s at {} Hz", path.display(), clip.duration_s(), clip.sample_rate);

    let cropped = audio_io::crop_silence(&clip, &cfg)?;
    println!("after silence crop: {:.2} s", cropped.duration_s());
    let normalized = audio_io::normalize(&cropped)?;
    let peak = normalized.left.iter().chain(&normalized.right).fold(0.0f64, |m, x| m.max(x.abs()));
    println!("peak after normalization: {peak}");
    let central = audio_io::central_section(&normalized, &cfg);
    println!(
        "central section: {:.2} s{}",
        central.clip.duration_s(),
        if central.short { " (shorter than 180 s, used whole)" } else { "" }
    );
    let windows = audio_io::segment(&central.clip, &cfg)?;
    println!("{} windows of {} samples", windows.len(), cfg.window_len);
    Ok(())
}
