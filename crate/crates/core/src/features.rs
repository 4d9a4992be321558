//! The 146-slot per-window feature vector, song-level aggregation and the
//! text formats for manifests and datasets.
//!
//! Slot layout (version 1):
//!
//! | slots    | content                                              |
//! |----------|------------------------------------------------------|
//! | 0..8     | `vu_L vu_R ppm_L ppm_R dr_L dr_R rms_L rms_R`         |
//! | 8..11    | `box_count pan corr` on the broadband signal          |
//! | 11..146  | per band: `rms_L rms_R box_count pan corr`, 27 bands  |

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::ops::{Index, IndexMut};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::audio_io::{self, AudioClip, PreprocessConfig, WindowFrame};
use crate::error::{Error, Result};
use crate::filterbank::{band_specs, FilterBank, BAND_COUNT};
use crate::level_meters::{self, vu_reference};
use crate::stereo_meters;

pub const LAYOUT_VERSION: u32 = 1;
pub const BROADBAND_DIM: usize = 11;
pub const BAND_DIM: usize = 5;
pub const FEATURE_DIM: usize = BROADBAND_DIM + BAND_DIM * BAND_COUNT;

const BROADBAND_SLOTS: [&str; BROADBAND_DIM] = [
    "vu_L",
    "vu_R",
    "ppm_L",
    "ppm_R",
    "dr_L",
    "dr_R",
    "rms_L",
    "rms_R",
    "box_count",
    "pan",
    "corr",
];
const BAND_SLOTS: [&str; BAND_DIM] = ["rms_L", "rms_R", "box_count", "pan", "corr"];

/// Slot names in layout order, e.g. `vu_L`, ..., `b1k_rms_L`, ..., `b16k_corr`.
pub fn slot_names() -> Vec<String> {
    let mut names: Vec<String> = BROADBAND_SLOTS.iter().map(|s| s.to_string()).collect();
    for spec in band_specs() {
        let label = spec.label();
        names.extend(BAND_SLOTS.iter().map(|s| format!("b{label}_{s}")));
    }
    names
}

/// Offset of band `b`'s first slot.
pub const fn band_offset(b: usize) -> usize {
    BROADBAND_DIM + b * BAND_DIM
}

#[derive(Clone, PartialEq)]
pub struct FeatureVector146(pub [f64; FEATURE_DIM]);

impl Default for FeatureVector146 {
    fn default() -> Self {
        Self([0.0; FEATURE_DIM])
    }
}

impl fmt::Debug for FeatureVector146 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl Index<usize> for FeatureVector146 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for FeatureVector146 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl FeatureVector146 {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        slot_names().iter().position(|n| n == name).map(|i| self.0[i])
    }
}

/// Meter evaluation with the per-window constants hoisted.
struct WindowMeters {
    sample_rate: u32,
    vu_ref: f64,
}

impl WindowMeters {
    fn new(window_len: usize, sample_rate: u32) -> Self {
        Self {
            sample_rate,
            vu_ref: vu_reference(window_len, sample_rate),
        }
    }

    fn broadband(&self, left: &[f64], right: &[f64], out: &mut [f64]) {
        let fs = self.sample_rate;
        out[0] = level_meters::vu_with_reference(left, self.vu_ref);
        out[1] = level_meters::vu_with_reference(right, self.vu_ref);
        out[2] = level_meters::ppm(left);
        out[3] = level_meters::ppm(right);
        out[4] = level_meters::dr(left, fs);
        out[5] = level_meters::dr(right, fs);
        out[6] = level_meters::rms(left);
        out[7] = level_meters::rms(right);
        let st = stereo_meters::read_channels(left, right);
        out[8] = st.box_count as f64;
        out[9] = st.pan_deg;
        out[10] = st.correlation;
    }

    fn band(left: &[f64], right: &[f64], out: &mut [f64]) {
        out[0] = level_meters::rms(left);
        out[1] = level_meters::rms(right);
        let st = stereo_meters::read_channels(left, right);
        out[2] = st.box_count as f64;
        out[3] = st.pan_deg;
        out[4] = st.correlation;
    }
}

/// Fills all 146 slots from one broadband window and its 27 band-filtered
/// counterparts covering the same time span.
pub fn extract_window_features(
    frame: &WindowFrame,
    band_frames: &[WindowFrame],
    sample_rate: u32,
) -> Result<FeatureVector146> {
    if band_frames.len() != BAND_COUNT {
        return Err(Error::LengthMismatch {
            expected: BAND_COUNT,
            actual: band_frames.len(),
        });
    }
    if let Some(bad) = band_frames.iter().find(|b| b.len() != frame.len()) {
        return Err(Error::LengthMismatch {
            expected: frame.len(),
            actual: bad.len(),
        });
    }
    let meters = WindowMeters::new(frame.len(), sample_rate);
    let mut v = FeatureVector146::default();
    meters.broadband(&frame.left, &frame.right, &mut v.0[..BROADBAND_DIM]);
    for (b, bf) in band_frames.iter().enumerate() {
        let o = band_offset(b);
        WindowMeters::band(&bf.left, &bf.right, &mut v.0[o..o + BAND_DIM]);
    }
    Ok(v)
}

/// Crop, normalize and keep the central section. Returns the clip and
/// whether it was shorter than the requested duration.
pub fn preprocess(clip: &AudioClip, cfg: &PreprocessConfig) -> Result<(AudioClip, bool)> {
    let cropped = audio_io::crop_silence(clip, cfg)?;
    let normalized = audio_io::normalize(&cropped)?;
    let central = audio_io::central_section(&normalized, cfg);
    Ok((central.clip, central.short))
}

/// Per-window feature vectors of an already preprocessed clip.
///
/// The whole clip goes through each band filter once and the band output is
/// cut on the same window grid as the broadband signal. Bands are processed
/// one at a time so only one filtered copy is alive.
pub fn window_features(
    clip: &AudioClip,
    bank: &FilterBank,
    window_len: usize,
) -> Result<Vec<FeatureVector146>> {
    if bank.sample_rate() != clip.sample_rate {
        return Err(Error::Config(format!(
            "bank designed for {} Hz, clip is {} Hz",
            bank.sample_rate(),
            clip.sample_rate
        )));
    }
    let n_windows = audio_io::window_count(clip.len(), window_len);
    if n_windows == 0 {
        return Err(Error::TooShort {
            len: clip.len(),
            window: window_len,
        });
    }
    let used = n_windows * window_len;
    let meters = WindowMeters::new(window_len, clip.sample_rate);
    let mut rows = vec![FeatureVector146::default(); n_windows];

    for (w, row) in rows.iter_mut().enumerate() {
        let span = w * window_len..(w + 1) * window_len;
        meters.broadband(
            &clip.left[span.clone()],
            &clip.right[span],
            &mut row.0[..BROADBAND_DIM],
        );
    }

    let (mut bl, mut br) = (Vec::new(), Vec::new());
    for (b, filter) in bank.filters().iter().enumerate() {
        filter.filter_pair(&clip.left[..used], &clip.right[..used], &mut bl, &mut br);
        let o = band_offset(b);
        for (w, row) in rows.iter_mut().enumerate() {
            let span = w * window_len..(w + 1) * window_len;
            WindowMeters::band(&bl[span.clone()], &br[span], &mut row.0[o..o + BAND_DIM]);
        }
    }
    Ok(rows)
}

/// How per-window vectors become dataset rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// One row per song: per-slot mean then per-slot population std (292 values).
    #[default]
    MeanStd,
    /// One row per window (146 values); songs are classified by majority vote.
    PerWindow,
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::MeanStd => "mean_std",
            Aggregation::PerWindow => "per_window",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mean_std" => Ok(Aggregation::MeanStd),
            "per_window" | "per_window_vote" => Ok(Aggregation::PerWindow),
            other => Err(Error::Format(format!("unknown aggregation {other:?}"))),
        }
    }

    /// Values per dataset row.
    pub fn row_dim(self) -> usize {
        match self {
            Aggregation::MeanStd => 2 * FEATURE_DIM,
            Aggregation::PerWindow => FEATURE_DIM,
        }
    }

    /// Column names of one dataset row.
    pub fn column_names(self) -> Vec<String> {
        let slots = slot_names();
        match self {
            Aggregation::MeanStd => slots
                .iter()
                .map(|s| format!("{s}_mean"))
                .chain(slots.iter().map(|s| format!("{s}_std")))
                .collect(),
            Aggregation::PerWindow => slots,
        }
    }

    /// Fingerprint of the column layout, stored in dataset and model files.
    pub fn schema_hash(self) -> String {
        let mut h = Sha256::new();
        h.update(format!("djmeter-features v{LAYOUT_VERSION} {}\n", self.as_str()));
        for name in self.column_names() {
            h.update(name.as_bytes());
            h.update(b",");
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One song: its label and feature rows (`window_count` rows of 146 values
/// for per-window datasets, a single 292-value row otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct SongRecord {
    pub song_id: String,
    pub label: String,
    pub window_count: usize,
    pub features: Vec<f64>,
}

impl SongRecord {
    pub fn rows(&self, aggregation: Aggregation) -> std::slice::ChunksExact<'_, f64> {
        self.features.chunks_exact(aggregation.row_dim())
    }
}

/// Rounds to 9 significant digits, the precision of the dataset format.
pub fn quantize(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

/// Per-slot mean and population standard deviation over windows.
pub fn aggregate_mean_std(rows: &[FeatureVector146]) -> Vec<f64> {
    let n = rows.len().max(1) as f64;
    let mut out = vec![0.0; 2 * FEATURE_DIM];
    for slot in 0..FEATURE_DIM {
        let mean = rows.iter().map(|r| r[slot]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[slot] - mean).powi(2)).sum::<f64>() / n;
        out[slot] = mean;
        out[FEATURE_DIM + slot] = var.sqrt();
    }
    out
}

/// Builds a record from per-window vectors; values are quantized to the
/// dataset precision so that persisted records read back identically.
pub fn song_record(
    song_id: &str,
    label: &str,
    rows: &[FeatureVector146],
    aggregation: Aggregation,
) -> SongRecord {
    let features: Vec<f64> = match aggregation {
        Aggregation::MeanStd => aggregate_mean_std(rows),
        Aggregation::PerWindow => rows.iter().flat_map(|r| r.0).collect(),
    };
    SongRecord {
        song_id: song_id.to_string(),
        label: label.to_string(),
        window_count: rows.len(),
        features: features.into_iter().map(quantize).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExtractConfig {
    pub preprocess: PreprocessConfig,
    pub aggregation: Aggregation,
}

/// Per-window vectors of an in-memory clip after the full preprocessing chain.
pub fn extract_clip(clip: &AudioClip, cfg: &PreprocessConfig) -> Result<Vec<FeatureVector146>> {
    cfg.validate()?;
    let (clip, _short) = preprocess(clip, cfg)?;
    let bank = FilterBank::new(clip.sample_rate)?;
    window_features(&clip, &bank, cfg.window_len)
}

/// decode → crop → normalize → central section → filterbank → windows →
/// meters → aggregation.
pub fn extract_song(
    path: impl AsRef<Path>,
    song_id: &str,
    label: &str,
    cfg: &ExtractConfig,
) -> Result<SongRecord> {
    let run = || {
        let clip = audio_io::decode(path.as_ref(), &cfg.preprocess)?;
        extract_clip(&clip, &cfg.preprocess)
    };
    let rows = run().map_err(|e| e.for_song(song_id))?;
    Ok(song_record(song_id, label, &rows, cfg.aggregation))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub song_id: String,
    pub path: PathBuf,
    pub label: String,
}

/// Songs to extract, from a `song_id,path,label` table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Relative paths are resolved against the manifest's directory.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut manifest = Self::from_reader(file)?;
        for e in &mut manifest.entries {
            if e.path.is_relative() {
                e.path = base.join(&e.path);
            }
        }
        Ok(manifest)
    }

    pub fn from_reader(r: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = rdr.headers().map_err(csv_err)?.clone();
        if headers.iter().collect::<Vec<_>>() != ["song_id", "path", "label"] {
            return Err(Error::Format(format!(
                "manifest header must be song_id,path,label, got {:?}",
                headers.iter().collect::<Vec<_>>()
            )));
        }
        let mut entries = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let song_id = rec[0].to_string();
            if !seen.insert(song_id.clone()) {
                return Err(Error::Format(format!("duplicate song_id {song_id:?}")));
            }
            entries.push(ManifestEntry {
                song_id,
                path: PathBuf::from(&rec[1]),
                label: rec[2].to_string(),
            });
        }
        Ok(Self { entries })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(["song_id", "path", "label"]).map_err(csv_err)?;
        for e in &self.entries {
            w.write_record([
                e.song_id.as_str(),
                &e.path.to_string_lossy(),
                e.label.as_str(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Class names in first-appearance order.
    pub fn classes(&self) -> Vec<String> {
        let mut classes: Vec<String> = Vec::new();
        for e in &self.entries {
            if !classes.contains(&e.label) {
                classes.push(e.label.clone());
            }
        }
        classes
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

const DATASET_MAGIC: &str = "# djmeter-dataset";

/// Song records sharing one column layout.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub aggregation: Aggregation,
    pub records: Vec<SongRecord>,
}

impl Dataset {
    pub fn new(aggregation: Aggregation, records: Vec<SongRecord>) -> Self {
        Self {
            aggregation,
            records,
        }
    }

    pub fn dim(&self) -> usize {
        self.aggregation.row_dim()
    }

    pub fn schema_hash(&self) -> String {
        self.aggregation.schema_hash()
    }

    /// Distinct labels, sorted.
    pub fn classes(&self) -> Vec<String> {
        let mut c: Vec<String> = self.records.iter().map(|r| r.label.clone()).collect();
        c.sort();
        c.dedup();
        c
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        let agg = self.aggregation;
        writeln!(
            w,
            "{DATASET_MAGIC} v{LAYOUT_VERSION} aggregation={} schema={}",
            agg.as_str(),
            agg.schema_hash()
        )?;
        let third = match agg {
            Aggregation::MeanStd => "window_count",
            Aggregation::PerWindow => "window_index",
        };
        let mut csv_w = csv::Writer::from_writer(w);
        let header = ["song_id".to_string(), "label".to_string(), third.to_string()]
            .into_iter()
            .chain(agg.column_names());
        csv_w.write_record(header).map_err(std::io::Error::other)?;
        for rec in &self.records {
            for (i, row) in rec.rows(agg).enumerate() {
                let third = match agg {
                    Aggregation::MeanStd => rec.window_count,
                    Aggregation::PerWindow => i,
                };
                let fields = [rec.song_id.clone(), rec.label.clone(), third.to_string()]
                    .into_iter()
                    .chain(row.iter().map(|&x| quantize(x).to_string()));
                csv_w.write_record(fields).map_err(std::io::Error::other)?;
            }
        }
        csv_w.flush()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file))
    }

    pub fn read_from(mut r: impl BufRead) -> Result<Self> {
        let mut first = String::new();
        r.read_line(&mut first)
            .map_err(|e| Error::Format(e.to_string()))?;
        let tag = first
            .trim_end()
            .strip_prefix(DATASET_MAGIC)
            .ok_or_else(|| Error::Format("missing dataset version tag".into()))?;
        let mut version = None;
        let mut aggregation = None;
        for tok in tag.split_whitespace() {
            if let Some(v) = tok.strip_prefix('v') {
                version = v.parse::<u32>().ok();
            } else if let Some(a) = tok.strip_prefix("aggregation=") {
                aggregation = Some(Aggregation::parse(a)?);
            }
        }
        if version != Some(LAYOUT_VERSION) {
            return Err(Error::Format(format!("unknown dataset version in {first:?}")));
        }
        let agg = aggregation.ok_or_else(|| Error::Format("missing aggregation tag".into()))?;

        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(r);
        let header = rdr.headers().map_err(csv_err)?.clone();
        let expected_cols = agg.column_names();
        if header.len() != expected_cols.len() + 3 {
            return Err(Error::Format(format!(
                "expected {} feature columns, found {}",
                expected_cols.len(),
                header.len().saturating_sub(3)
            )));
        }
        if header.iter().skip(3).ne(expected_cols.iter().map(String::as_str)) {
            return Err(Error::Format("feature column names do not match the layout".into()));
        }

        let mut records: Vec<SongRecord> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != header.len() {
                return Err(Error::Format(format!(
                    "row {}: expected {} fields, found {}",
                    line + 1,
                    header.len(),
                    rec.len()
                )));
            }
            let third: usize = rec[2]
                .parse()
                .map_err(|_| Error::Format(format!("row {}: bad count {:?}", line + 1, &rec[2])))?;
            let values = rec
                .iter()
                .skip(3)
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::Format(format!("row {}: bad number {s:?}", line + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            match agg {
                Aggregation::MeanStd => records.push(SongRecord {
                    song_id: rec[0].to_string(),
                    label: rec[1].to_string(),
                    window_count: third,
                    features: values,
                }),
                Aggregation::PerWindow => match records.last_mut() {
                    Some(last) if last.song_id == rec[0] && third == last.window_count => {
                        last.features.extend(values);
                        last.window_count += 1;
                    }
                    _ if third != 0 => {
                        return Err(Error::Format(format!(
                            "row {}: window rows of {:?} are not contiguous",
                            line + 1,
                            &rec[0]
                        )))
                    }
                    _ => records.push(SongRecord {
                        song_id: rec[0].to_string(),
                        label: rec[1].to_string(),
                        window_count: 1,
                        features: values,
                    }),
                },
            }
        }
        Ok(Self {
            aggregation: agg,
            records,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const FS: u32 = 44_100;
    const N: usize = 4096;

    #[test]
    fn layout_has_146_unique_names() {
        let names = slot_names();
        assert_eq!(names.len(), FEATURE_DIM);
        assert_eq!(FEATURE_DIM, 146);
        let set: std::collections::HashSet<_> = names.iter().collect();
        assert_eq!(set.len(), 146);
        assert_eq!(names[0], "vu_L");
        assert_eq!(names[10], "corr");
        assert_eq!(names[11], "b40_rms_L");
        assert_eq!(names[145], "b16k_corr");
        assert_eq!(Aggregation::MeanStd.column_names().len(), 292);
    }

    #[test]
    fn schema_hash_stable_and_distinct() {
        assert_eq!(
            Aggregation::MeanStd.schema_hash(),
            Aggregation::MeanStd.schema_hash()
        );
        assert_ne!(
            Aggregation::MeanStd.schema_hash(),
            Aggregation::PerWindow.schema_hash()
        );
        assert_eq!(Aggregation::MeanStd.schema_hash().len(), 16);
    }

    fn zero_frame() -> WindowFrame {
        WindowFrame::new(vec![0.0; N], vec![0.0; N], 0)
    }

    #[test]
    fn zero_window_conventions() {
        let bands = vec![zero_frame(); BAND_COUNT];
        let v = extract_window_features(&zero_frame(), &bands, FS).unwrap();
        let expect_broadband = [
            -120.0, -120.0, -120.0, -120.0, 0.0, 0.0, 0.0, 0.0, 1.0, 45.0, 0.0,
        ];
        assert_eq!(&v.0[..BROADBAND_DIM], &expect_broadband);
        for b in 0..BAND_COUNT {
            let o = band_offset(b);
            assert_eq!(&v.0[o..o + BAND_DIM], &[0.0, 0.0, 1.0, 45.0, 0.0]);
        }
    }

    #[test]
    fn window_feature_input_checks() {
        let bands = vec![zero_frame(); 3];
        assert!(extract_window_features(&zero_frame(), &bands, FS).is_err());
    }

    #[test]
    fn mono_sine_song_features() {
        let len = 4 * N;
        let s: Vec<f64> = (0..len)
            .map(|i| (2.0 * PI * 1000.0 * i as f64 / FS as f64).sin())
            .collect();
        let clip = AudioClip::mono(s, FS);
        let bank = FilterBank::new(FS).unwrap();
        let rows = window_features(&clip, &bank, N).unwrap();
        assert_eq!(rows.len(), 4);
        // skip the first window where the 40 Hz band is still ringing in
        let v = &rows[3];
        assert!((v.get("corr").unwrap() - 1.0).abs() < 1e-9);
        assert!((v.get("pan").unwrap() - 45.0).abs() < 1e-9);
        assert!((v.get("rms_L").unwrap() - 0.5f64.sqrt()).abs() < 1e-3);
        assert_eq!(v.get("rms_L"), v.get("rms_R"));
        let bb = v.get("rms_L").unwrap();
        let b14 = v.get("b1k_rms_L").unwrap();
        assert!((20.0 * (b14 / bb).log10()).abs() < 0.5);
        let b0 = v.get("b40_rms_L").unwrap();
        assert!(20.0 * (b0 / bb).log10() < -40.0);
    }

    #[test]
    fn channel_swap_symmetry() {
        let len = 2 * N;
        let l: Vec<f64> = (0..len)
            .map(|i| 0.8 * (2.0 * PI * 220.0 * i as f64 / FS as f64).sin())
            .collect();
        let r: Vec<f64> = (0..len)
            .map(|i| 0.3 * (2.0 * PI * 3100.0 * i as f64 / FS as f64).cos())
            .collect();
        let bank = FilterBank::new(FS).unwrap();
        let a = window_features(&AudioClip::new(l.clone(), r.clone(), FS).unwrap(), &bank, N)
            .unwrap();
        let b = window_features(&AudioClip::new(r, l, FS).unwrap(), &bank, N).unwrap();
        let names = slot_names();
        for (va, vb) in a.iter().zip(&b) {
            for (i, name) in names.iter().enumerate() {
                let partner = if let Some(stem) = name.strip_suffix("_L") {
                    names.iter().position(|n| *n == format!("{stem}_R")).unwrap()
                } else if let Some(stem) = name.strip_suffix("_R") {
                    names.iter().position(|n| *n == format!("{stem}_L")).unwrap()
                } else {
                    i
                };
                let expect = if name.ends_with("pan") {
                    90.0 - va[i]
                } else {
                    va[i]
                };
                assert!((vb[partner] - expect).abs() < 1e-9, "{name}");
            }
        }
    }

    #[test]
    fn constant_windows_have_zero_std() {
        let mut v = FeatureVector146::default();
        for (i, x) in v.0.iter_mut().enumerate() {
            *x = i as f64 * 0.5 - 3.0;
        }
        let rows = vec![v.clone(); 5];
        let rec = song_record("s", "A", &rows, Aggregation::MeanStd);
        assert_eq!(rec.window_count, 5);
        assert_eq!(&rec.features[..FEATURE_DIM], v.as_slice());
        assert!(rec.features[FEATURE_DIM..].iter().all(|&s| s == 0.0));
    }

    #[test]
    fn aggregation_matches_brute_force() {
        let rows: Vec<FeatureVector146> = (0..7)
            .map(|w| {
                let mut v = FeatureVector146::default();
                for (i, x) in v.0.iter_mut().enumerate() {
                    *x = ((w * 31 + i * 17) % 23) as f64 / 7.0;
                }
                v
            })
            .collect();
        let agg = aggregate_mean_std(&rows);
        for slot in [0, 50, 145] {
            let col: Vec<f64> = rows.iter().map(|r| r.0[slot]).collect();
            let mut sum = 0.0;
            for c in &col {
                sum += c;
            }
            let mean = sum / 7.0;
            assert!((agg[slot] - mean).abs() < 1e-12);
            let var = col.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / 7.0;
            assert!((agg[FEATURE_DIM + slot] - var.sqrt()).abs() < 1e-12);
        }
    }

    fn record(id: &str, label: &str, seed: u64, agg: Aggregation, windows: usize) -> SongRecord {
        let n = match agg {
            Aggregation::MeanStd => agg.row_dim(),
            Aggregation::PerWindow => agg.row_dim() * windows,
        };
        SongRecord {
            song_id: id.into(),
            label: label.into(),
            window_count: windows,
            features: (0..n)
                .map(|i| quantize(((i as u64 * 2654435761 + seed) % 100_003) as f64 / 977.0 - 40.0))
                .collect(),
        }
    }

    #[test]
    fn dataset_round_trip() {
        for agg in [Aggregation::MeanStd, Aggregation::PerWindow] {
            let ds = Dataset::new(
                agg,
                vec![
                    record("a", "DJ One", 1, agg, 3),
                    record("b", "DJ, Two", 2, agg, 2),
                    record("c", "DJ One", 3, agg, 1),
                ],
            );
            let mut buf = Vec::new();
            ds.write_to(&mut buf).unwrap();
            let back = Dataset::read_from(buf.as_slice()).unwrap();
            assert_eq!(back, ds);
        }
    }

    #[test]
    fn empty_dataset_is_header_only() {
        let ds = Dataset::new(Aggregation::MeanStd, vec![]);
        let mut buf = Vec::new();
        ds.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("song_id,label,window_count,vu_L_mean"));
        assert_eq!(Dataset::read_from(buf.as_slice()).unwrap(), ds);
    }

    #[test]
    fn dataset_width_and_version_errors() {
        let ds = Dataset::new(
            Aggregation::MeanStd,
            vec![record("a", "A", 1, Aggregation::MeanStd, 4)],
        );
        let mut buf = Vec::new();
        ds.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        // drop the last feature column everywhere: 291 columns
        for l in lines.iter_mut().skip(1) {
            let cut = l.rfind(',').unwrap();
            l.truncate(cut);
        }
        let narrow = lines.join("\n");
        assert!(matches!(
            Dataset::read_from(narrow.as_bytes()),
            Err(Error::Format(m)) if m.contains("291")
        ));

        let bumped = text.replacen(" v1 ", " v9 ", 1);
        assert!(Dataset::read_from(bumped.as_bytes()).is_err());
        assert!(Dataset::read_from("song_id,label\n".as_bytes()).is_err());
    }

    #[test]
    fn manifest_parsing() {
        let text = "song_id,path,label\ns1,a.wav,DJ A\ns2,b.wav,DJ B\ns3,c.wav,DJ A\n";
        let m = DatasetManifest::from_reader(text.as_bytes()).unwrap();
        assert_eq!(m.entries.len(), 3);
        assert_eq!(m.classes(), vec!["DJ A", "DJ B"]);
        let dup = "song_id,path,label\ns1,a.wav,A\ns1,b.wav,B\n";
        assert!(DatasetManifest::from_reader(dup.as_bytes()).is_err());
        let bad = "id,file,dj\ns1,a.wav,A\n";
        assert!(DatasetManifest::from_reader(bad.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn quantize_is_idempotent_and_round_trips(x in -1e6f64..1e6) {
            let q = quantize(x);
            prop_assert_eq!(quantize(q), q);
            prop_assert_eq!(q.to_string().parse::<f64>().unwrap(), q);
            prop_assert!((q - x).abs() <= 1e-8 * x.abs().max(1e-300));
        }
    }
}
