//! Seeded synthetic corpora of stereo WAVs whose classes differ in spectral
//! tilt, stereo width and percussiveness.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audio_io::{write_wav, AudioClip};
use crate::error::{Error, Result};
use crate::features::{DatasetManifest, ManifestEntry};

/// Stereo width: 0 is mono, 1 fully decorrelated sides at equal level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Width {
    Named(String),
    Value(f64),
}

impl Width {
    pub fn value(&self) -> Result<f64> {
        let v = match self {
            Width::Named(n) => match n.as_str() {
                "mono" => 0.0,
                "narrow" => 0.3,
                "medium" => 0.6,
                "wide" => 1.0,
                other => return Err(Error::Config(format!("unknown width {other:?}"))),
            },
            Width::Value(v) => *v,
        };
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Config(format!("width {v} outside [0, 1]")));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub name: String,
    pub count: usize,
    /// Spectral slope in dB per octave around 1 kHz.
    pub tilt_db_per_octave: f64,
    pub width: Width,
    /// 0 gives a steady texture, 1 a gated beat with deep decays.
    pub percussiveness: f64,
    #[serde(default = "default_tempo")]
    pub tempo_bpm: f64,
}

fn default_tempo() -> f64 {
    128.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    pub duration_s: f64,
    #[serde(default = "default_rate")]
    pub sample_rate: u32,
    /// Per-song random spread applied to tilt (dB/oct), width and
    /// percussiveness.
    #[serde(default = "default_jitter")]
    pub jitter: f64,
    #[serde(rename = "class")]
    pub classes: Vec<ClassSpec>,
}

fn default_rate() -> u32 {
    44_100
}

fn default_jitter() -> f64 {
    0.1
}

impl SynthSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("spec serializes")
    }

    /// Three archetypes: a dark wide pad-heavy class, a bright narrow
    /// percussive class and a mono mid-tilt class.
    pub fn three_archetypes(count: usize, duration_s: f64, seed: u64) -> Self {
        let class = |name: &str, tilt, width: &str, perc| ClassSpec {
            name: name.into(),
            count,
            tilt_db_per_octave: tilt,
            width: Width::Named(width.into()),
            percussiveness: perc,
            tempo_bpm: 128.0,
        };
        Self {
            seed,
            duration_s,
            sample_rate: 44_100,
            jitter: 0.1,
            classes: vec![
                class("anthem", -4.5, "wide", 0.2),
                class("club", -1.5, "narrow", 0.9),
                class("mono", -3.0, "mono", 0.5),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.classes.is_empty() {
            return bad("synth spec lists no classes".into());
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad(format!("duration {} s", self.duration_s));
        }
        if self.sample_rate < 8_000 {
            return bad(format!("sample rate {} Hz", self.sample_rate));
        }
        if !(0.0..=1.0).contains(&self.jitter) {
            return bad(format!("jitter {} outside [0, 1]", self.jitter));
        }
        let mut names = std::collections::HashSet::new();
        for c in &self.classes {
            if c.name.is_empty() || c.name.contains([',', '"', '\n', '/']) {
                return bad(format!("invalid class name {:?}", c.name));
            }
            if !names.insert(&c.name) {
                return bad(format!("duplicate class {:?}", c.name));
            }
            if c.count == 0 {
                return bad(format!("class {:?} has count 0", c.name));
            }
            c.width.value()?;
            if !(0.0..=1.0).contains(&c.percussiveness) {
                return bad(format!("percussiveness {} outside [0, 1]", c.percussiveness));
            }
            if !(c.tilt_db_per_octave.abs() <= 12.0) {
                return bad(format!("tilt {} dB/oct", c.tilt_db_per_octave));
            }
            if !(c.tempo_bpm > 0.0 && c.tempo_bpm < 400.0) {
                return bad(format!("tempo {} bpm", c.tempo_bpm));
            }
        }
        Ok(())
    }

    pub fn total_songs(&self) -> usize {
        self.classes.iter().map(|c| c.count).sum()
    }
}

/// Song parameters after jitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SongParams {
    pub tilt_db_per_octave: f64,
    pub width: f64,
    pub percussiveness: f64,
    pub tempo_bpm: f64,
}

/// Resonant bandpass (constant peak gain) used to build octave noise.
#[derive(Clone, Copy)]
struct Resonator {
    b0: f64,
    b2: f64,
    a1: f64,
    a2: f64,
    z1: f64,
    z2: f64,
}

impl Resonator {
    fn new(center: f64, fs: f64) -> Self {
        let w = 2.0 * PI * center / fs;
        let q = 1.414;
        let alpha = w.sin() / (2.0 * q);
        let a0 = 1.0 + alpha;
        Self {
            b0: alpha / a0,
            b2: -alpha / a0,
            a1: -2.0 * w.cos() / a0,
            a2: (1.0 - alpha) / a0,
            z1: 0.0,
            z2: 0.0,
        }
    }

    #[inline]
    fn tick(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.z1;
        self.z1 = -self.a1 * y + self.z2;
        self.z2 = self.b2 * x - self.a2 * y;
        y
    }
}

/// Noise with an approximately constant slope in dB per octave, built from
/// octave-spaced resonators between 31.5 Hz and 16 kHz.
struct TiltedNoise {
    bands: Vec<(Resonator, f64)>,
}

impl TiltedNoise {
    fn new(tilt: f64, fs: f64) -> Self {
        let bands = (-5..=4)
            .map(|k| 1000.0 * 2f64.powi(k))
            .filter(|&c| c < 0.45 * fs)
            .map(|c| {
                let gain = 10f64.powf(tilt * (c / 1000.0).log2() / 20.0);
                (Resonator::new(c, fs), gain)
            })
            .collect();
        Self { bands }
    }

    #[inline]
    fn tick(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        self.bands
            .iter_mut()
            .map(|(r, g)| *g * r.tick(rng.random_range(-1.0..1.0)))
            .sum()
    }
}

/// Renders one song. Mid and side are independent tilted noises; the side
/// level sets the width and a per-beat decay envelope sets the dynamics.
pub fn render(params: &SongParams, duration_s: f64, fs: u32, rng: &mut ChaCha8Rng) -> AudioClip {
    let n = (duration_s * fs as f64).round() as usize;
    let fsf = fs as f64;
    let mut mid = TiltedNoise::new(params.tilt_db_per_octave, fsf);
    let mut side = TiltedNoise::new(params.tilt_db_per_octave, fsf);
    let beat = 60.0 / params.tempo_bpm;
    let decay = 0.04 + 0.2 * (1.0 - params.percussiveness);
    let floor = 1.0 - params.percussiveness;
    let phase0: f64 = rng.random_range(0.0..beat);
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / fsf + phase0;
        let since = t % beat;
        let env = floor + (1.0 - floor) * (-since / decay).exp();
        let m = mid.tick(rng);
        let s = if params.width > 0.0 {
            params.width * side.tick(rng)
        } else {
            0.0
        };
        left.push(env * (m + s));
        right.push(env * (m - s));
    }
    let peak = left
        .iter()
        .chain(&right)
        .fold(0.0f64, |p, x| p.max(x.abs()));
    let g = if peak > 0.0 { 0.89 / peak } else { 0.0 };
    left.iter_mut().chain(right.iter_mut()).for_each(|x| *x *= g);
    AudioClip {
        left,
        right,
        sample_rate: fs,
    }
}

/// A song to render: its identity and jittered parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedSong {
    pub song_id: String,
    pub label: String,
    pub stream: u64,
    pub params: SongParams,
}

fn song_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Song list in class order with per-song parameters drawn from the seed.
pub fn plan(spec: &SynthSpec) -> Result<Vec<PlannedSong>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.total_songs());
    let mut stream = 0u64;
    for c in &spec.classes {
        let width = c.width.value()?;
        for i in 0..c.count {
            let mut rng = song_rng(spec.seed, stream);
            let mut jit = |scale: f64| spec.jitter * scale * rng.random_range(-1.0..1.0);
            let params = SongParams {
                tilt_db_per_octave: c.tilt_db_per_octave + jit(10.0),
                width: (width + jit(1.0) * f64::from(u8::from(width > 0.0))).clamp(0.0, 1.0),
                percussiveness: (c.percussiveness + jit(1.0)).clamp(0.0, 1.0),
                tempo_bpm: c.tempo_bpm * (1.0 + jit(0.3)),
            };
            out.push(PlannedSong {
                song_id: format!("{}_{:03}", c.name, i + 1),
                label: c.name.clone(),
                stream,
                params,
            });
            stream += 1;
        }
    }
    Ok(out)
}

/// Renders a planned song in memory.
pub fn render_song(spec: &SynthSpec, song: &PlannedSong) -> AudioClip {
    // the planning draws used the low half of the stream space
    let mut rng = song_rng(spec.seed, song.stream | (1 << 63));
    render(&song.params, spec.duration_s, spec.sample_rate, &mut rng)
}

/// Writes every song as `<out_dir>/<song_id>.wav` plus `manifest.csv`.
/// Returns the manifest path.
pub fn generate(spec: &SynthSpec, out_dir: impl AsRef<Path>) -> Result<PathBuf> {
    use rayon::prelude::*;
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let songs = plan(spec)?;
    songs.par_iter().try_for_each(|s| {
        let clip = render_song(spec, s);
        write_wav(out_dir.join(format!("{}.wav", s.song_id)), &clip)
    })?;
    let manifest = DatasetManifest {
        entries: songs
            .iter()
            .map(|s| ManifestEntry {
                song_id: s.song_id.clone(),
                path: PathBuf::from(format!("{}.wav", s.song_id)),
                label: s.label.clone(),
            })
            .collect(),
    };
    let path = out_dir.join("manifest.csv");
    manifest.write(&path)?;
    Ok(path)
}
