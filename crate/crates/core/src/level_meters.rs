//! Single-channel level meters evaluated over one analysis window:
//! pseudo-VU, PPM, dynamic range and RMS.

use std::f64::consts::PI;

/// Floor for log meters; corresponds to -120 dB.
pub const SILENCE_EPS: f64 = 1e-6;

/// Length of a dynamic-range sub-segment in seconds.
pub const DR_SUBSEGMENT_S: f64 = 0.010;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeterReading {
    pub vu_db: f64,
    pub ppm_db: f64,
    pub dr_db: f64,
    pub rms_linear: f64,
}

#[inline]
fn to_db(ratio: f64) -> f64 {
    20.0 * ratio.max(SILENCE_EPS).log10()
}

/// Sum of |sin(2π·1000·t)| over `len` samples starting at zero phase.
pub fn vu_reference(len: usize, sample_rate: u32) -> f64 {
    let step = 2.0 * PI * 1000.0 / sample_rate as f64;
    (0..len).map(|d| (step * d as f64).sin().abs()).sum()
}

/// Pseudo-VU level: mean rectified amplitude relative to a full-scale 1 kHz
/// sine over the same number of samples.
pub fn vu(channel: &[f64], sample_rate: u32) -> f64 {
    vu_with_reference(channel, vu_reference(channel.len(), sample_rate))
}

/// [`vu`] with a precomputed reference sum.
pub fn vu_with_reference(channel: &[f64], reference: f64) -> f64 {
    let num: f64 = channel.iter().map(|x| x.abs()).sum();
    to_db(num / reference)
}

pub fn peak(channel: &[f64]) -> f64 {
    channel.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Peak programme level in dBFS.
pub fn ppm(channel: &[f64]) -> f64 {
    to_db(peak(channel))
}

/// Sub-segment length used by [`dr`].
pub fn dr_subsegment_len(sample_rate: u32) -> usize {
    ((DR_SUBSEGMENT_S * sample_rate as f64).round() as usize).max(1)
}

/// Ratio of the largest to the smallest 10 ms sub-segment peak, in dB.
/// A trailing partial sub-segment is ignored.
pub fn dr(channel: &[f64], sample_rate: u32) -> f64 {
    let seg = dr_subsegment_len(sample_rate);
    let (lo, hi) = channel
        .chunks_exact(seg)
        .map(peak)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p), hi.max(p)));
    if lo.is_infinite() {
        // window shorter than one sub-segment
        return 0.0;
    }
    20.0 * (hi.max(SILENCE_EPS) / lo.max(SILENCE_EPS)).log10()
}

/// Quadratic mean.
pub fn rms(channel: &[f64]) -> f64 {
    if channel.is_empty() {
        return 0.0;
    }
    (channel.iter().map(|x| x * x).sum::<f64>() / channel.len() as f64).sqrt()
}

pub fn read_all(channel: &[f64], sample_rate: u32) -> MeterReading {
    MeterReading {
        vu_db: vu(channel, sample_rate),
        ppm_db: ppm(channel),
        dr_db: dr(channel, sample_rate),
        rms_linear: rms(channel),
    }
}
