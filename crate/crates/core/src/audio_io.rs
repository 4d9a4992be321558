//! Stereo PCM ingestion and the preprocessing chain applied before metering:
//! silence cropping, peak normalization, central-section selection and
//! segmentation into fixed-length analysis windows.

use std::path::Path;

use crate::error::{Error, Result};

/// Default analysis window length in samples (2^12, about 93 ms at 44.1 kHz).
pub const WINDOW_LEN: usize = 4096;

/// Decoded stereo audio with samples in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn new(left: Vec<f64>, right: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if left.len() != right.len() {
            return Err(Error::Config(format!(
                "channel length mismatch: {} vs {}",
                left.len(),
                right.len()
            )));
        }
        if sample_rate == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        Ok(Self {
            left,
            right,
            sample_rate,
        })
    }

    /// Both channels carry the same signal.
    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Self {
        Self {
            right: samples.clone(),
            left: samples,
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            left: self.left[start..end].to_vec(),
            right: self.right[start..end].to_vec(),
            sample_rate: self.sample_rate,
        }
    }
}

/// One stereo analysis window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowFrame {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub index: usize,
}

impl WindowFrame {
    pub fn new(left: Vec<f64>, right: Vec<f64>, index: usize) -> Self {
        assert_eq!(left.len(), right.len(), "window channels differ in length");
        Self { left, right, index }
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    /// The frame with its channels exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            left: self.right.clone(),
            right: self.left.clone(),
            index: self.index,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    pub silence_threshold_db: f64,
    pub center_duration_s: f64,
    pub window_len: usize,
    pub expected_sample_rate: u32,
    /// Duplicate a mono file into both channels instead of rejecting it.
    pub allow_mono_upmix: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            silence_threshold_db: -60.0,
            center_duration_s: 180.0,
            window_len: WINDOW_LEN,
            expected_sample_rate: 44_100,
            allow_mono_upmix: false,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 {
            return Err(Error::Config("window_len must be > 0".into()));
        }
        if !(self.center_duration_s > 0.0) {
            return Err(Error::Config("center_duration_s must be > 0".into()));
        }
        if !(self.silence_threshold_db < 0.0) {
            return Err(Error::Config("silence_threshold_db must be < 0".into()));
        }
        Ok(())
    }

    fn silence_amplitude(&self) -> f64 {
        10f64.powf(self.silence_threshold_db / 20.0)
    }
}

/// Decodes a 16-bit integer PCM RIFF/WAVE file.
pub fn decode(path: impl AsRef<Path>, cfg: &PreprocessConfig) -> Result<AudioClip> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Decode {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedFormat(format!(
            "{:?} {}-bit in {}",
            spec.sample_format,
            spec.bits_per_sample,
            path.display()
        )));
    }
    let channels = spec.channels;
    if channels != 2 && !(channels == 1 && cfg.allow_mono_upmix) {
        return Err(Error::ChannelCount(channels));
    }
    if spec.sample_rate != cfg.expected_sample_rate {
        log::warn!(
            "{}: sample rate {} Hz differs from expected {} Hz",
            path.display(),
            spec.sample_rate,
            cfg.expected_sample_rate
        );
    }

    let frames = reader.duration() as usize;
    let mut left = Vec::with_capacity(frames);
    let mut right = Vec::with_capacity(frames);
    let mut samples = reader.into_samples::<i16>();
    while let Some(l) = samples.next() {
        let l = pcm_to_unit(l.map_err(|e| decode_err(path, e))?);
        let r = if channels == 2 {
            match samples.next() {
                Some(r) => pcm_to_unit(r.map_err(|e| decode_err(path, e))?),
                None => break,
            }
        } else {
            l
        };
        left.push(l);
        right.push(r);
    }
    AudioClip::new(left, right, spec.sample_rate)
}

fn decode_err(path: &Path, e: hound::Error) -> Error {
    Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

#[inline]
fn pcm_to_unit(s: i16) -> f64 {
    s as f64 / 32768.0
}

#[inline]
fn unit_to_pcm(x: f64) -> i16 {
    (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Writes a clip as 16-bit stereo PCM. Samples outside [-1, 1) saturate.
pub fn write_wav(path: impl AsRef<Path>, clip: &AudioClip) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 2,
        sample_rate: clip.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let wrap = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => decode_err(path, other),
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wrap)?;
    for (&l, &r) in clip.left.iter().zip(&clip.right) {
        writer.write_sample(unit_to_pcm(l)).map_err(wrap)?;
        writer.write_sample(unit_to_pcm(r)).map_err(wrap)?;
    }
    writer.finalize().map_err(wrap)
}

/// Trims leading and trailing samples whose stereo peak stays below the
/// silence threshold. Interior samples are never touched.
pub fn crop_silence(clip: &AudioClip, cfg: &PreprocessConfig) -> Result<AudioClip> {
    if clip.is_empty() {
        return Err(Error::SilentInput);
    }
    let threshold = cfg.silence_amplitude();
    let loud = |i: usize| clip.left[i].abs().max(clip.right[i].abs()) >= threshold;
    let Some(start) = (0..clip.len()).find(|&i| loud(i)) else {
        return Err(Error::SilentInput);
    };
    let end = (start..clip.len()).rev().find(|&i| loud(i)).unwrap_or(start) + 1;
    Ok(clip.slice(start, end))
}

/// Peak-normalizes so the largest absolute sample over both channels is 1.
pub fn normalize(clip: &AudioClip) -> Result<AudioClip> {
    let peak = clip
        .left
        .iter()
        .chain(&clip.right)
        .fold(0.0f64, |m, x| m.max(x.abs()));
    if peak == 0.0 || !peak.is_finite() {
        return Err(Error::SilentInput);
    }
    Ok(AudioClip {
        left: clip.left.iter().map(|x| x / peak).collect(),
        right: clip.right.iter().map(|x| x / peak).collect(),
        sample_rate: clip.sample_rate,
    })
}

/// Result of [`central_section`].
#[derive(Debug, Clone, PartialEq)]
pub struct CentralSection {
    pub clip: AudioClip,
    /// The input was shorter than the requested duration and passed through whole.
    pub short: bool,
}

/// Keeps the centered span of `center_duration_s` seconds.
pub fn central_section(clip: &AudioClip, cfg: &PreprocessConfig) -> CentralSection {
    let target = (cfg.center_duration_s * clip.sample_rate as f64).round() as usize;
    if clip.len() <= target {
        let short = clip.len() < target;
        if short {
            log::warn!(
                "clip of {:.1} s is shorter than {:.1} s; analyzing it whole",
                clip.duration_s(),
                cfg.center_duration_s
            );
        }
        return CentralSection {
            clip: clip.clone(),
            short,
        };
    }
    let offset = (clip.len() - target) / 2;
    CentralSection {
        clip: clip.slice(offset, offset + target),
        short: false,
    }
}

/// Number of full windows in `len` samples.
pub fn window_count(len: usize, window_len: usize) -> usize {
    len / window_len
}

/// Splits a clip into consecutive non-overlapping windows; the trailing
/// remainder shorter than one window is discarded.
pub fn segment(clip: &AudioClip, cfg: &PreprocessConfig) -> Result<Vec<WindowFrame>> {
    segment_channels(&clip.left, &clip.right, cfg.window_len)
}

pub(crate) fn segment_channels(
    left: &[f64],
    right: &[f64],
    window_len: usize,
) -> Result<Vec<WindowFrame>> {
    if window_len == 0 {
        return Err(Error::Config("window_len must be > 0".into()));
    }
    if left.len() < window_len {
        return Err(Error::TooShort {
            len: left.len(),
            window: window_len,
        });
    }
    Ok(left
        .chunks_exact(window_len)
        .zip(right.chunks_exact(window_len))
        .enumerate()
        .map(|(index, (l, r))| WindowFrame::new(l.to_vec(), r.to_vec(), index))
        .collect())
}
