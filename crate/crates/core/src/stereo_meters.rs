//! Phase-scope statistics of a stereo window: grid occupancy, mean panning
//! angle and Pearson channel correlation.

use crate::audio_io::WindowFrame;

/// Cells per axis of the occupancy grid over [-1, 1]².
pub const GRID: usize = 20;

/// Standard deviation below which a channel is treated as constant.
const SIGMA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StereoReading {
    pub box_count: u32,
    pub pan_deg: f64,
    pub correlation: f64,
}

pub fn read_all(frame: &WindowFrame) -> StereoReading {
    read_channels(&frame.left, &frame.right)
}

/// Single fused pass for the occupancy grid, panning and channel means,
/// then a second pass for the centered moments. Matches the individual
/// meters exactly.
pub(crate) fn read_channels(left: &[f64], right: &[f64]) -> StereoReading {
    let mut rows = [0u32; GRID];
    let (mut sum_l, mut sum_r, mut pan, mut voiced) = (0.0f64, 0.0f64, 0.0f64, 0usize);
    for (&l, &r) in left.iter().zip(right) {
        rows[grid_cell(l)] |= 1 << grid_cell(r);
        sum_l += l;
        sum_r += r;
        let (a, b) = (l.abs(), r.abs());
        if a + b > 0.0 {
            pan += angle(a, b);
            voiced += 1;
        }
    }
    let n = left.len().min(right.len());
    StereoReading {
        box_count: rows.iter().map(|r| r.count_ones()).sum(),
        pan_deg: mean_angle_deg(pan, voiced),
        correlation: if n == 0 {
            0.0
        } else {
            pearson(left, right, sum_l / n as f64, sum_r / n as f64)
        },
    }
}

/// Grid cell of an amplitude. Interior boundaries belong to the upper cell
/// and +1 falls into the last cell.
#[inline]
pub fn grid_cell(x: f64) -> usize {
    // clamped to [0, 20], where truncation equals floor
    let x = x.clamp(-1.0, 1.0);
    (((x + 1.0) * (GRID as f64 / 2.0)) as usize).min(GRID - 1)
}

/// Number of occupied cells in a 20×20 grid laid over the (L, R) plane.
pub fn box_count(frame: &WindowFrame) -> u32 {
    box_count_channels(&frame.left, &frame.right)
}

pub(crate) fn box_count_channels(left: &[f64], right: &[f64]) -> u32 {
    let mut rows = [0u32; GRID];
    for (&l, &r) in left.iter().zip(right) {
        rows[grid_cell(l)] |= 1 << grid_cell(r);
    }
    rows.iter().map(|r| r.count_ones()).sum()
}

/// Mean polar angle of (|L|, |R|) in degrees; 0 is hard left, 90 hard right.
/// Samples with no energy in either channel are skipped; a silent window
/// reads 45.
pub fn panning(frame: &WindowFrame) -> f64 {
    panning_channels(&frame.left, &frame.right)
}

pub(crate) fn panning_channels(left: &[f64], right: &[f64]) -> f64 {
    let (mut sum, mut n) = (0.0f64, 0usize);
    for (&l, &r) in left.iter().zip(right) {
        let (a, b) = (l.abs(), r.abs());
        if a + b > 0.0 {
            sum += angle(a, b);
            n += 1;
        }
    }
    mean_angle_deg(sum, n)
}

/// atan2(b, a) for non-negative `a`, `b` not both zero, via the reduced
/// argument so the swap `a <-> b` mirrors exactly around 45 degrees.
#[inline]
fn angle(a: f64, b: f64) -> f64 {
    if b <= a {
        (b / a).atan()
    } else {
        std::f64::consts::FRAC_PI_2 - (a / b).atan()
    }
}

#[inline]
fn mean_angle_deg(sum: f64, n: usize) -> f64 {
    if n == 0 {
        45.0
    } else {
        (sum / n as f64).to_degrees()
    }
}

/// Pearson correlation of the two channels with population statistics.
/// Returns 0 when either channel is constant.
pub fn correlation(frame: &WindowFrame) -> f64 {
    correlation_channels(&frame.left, &frame.right)
}

pub(crate) fn correlation_channels(left: &[f64], right: &[f64]) -> f64 {
    let n = left.len();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let (mut sum_l, mut sum_r) = (0.0f64, 0.0f64);
    for (&l, &r) in left.iter().zip(right) {
        sum_l += l;
        sum_r += r;
    }
    pearson(left, right, sum_l / nf, sum_r / nf)
}

fn pearson(left: &[f64], right: &[f64], ml: f64, mr: f64) -> f64 {
    let nf = left.len().min(right.len()) as f64;
    let (mut cov, mut vl, mut vr) = (0.0, 0.0, 0.0);
    for (&l, &r) in left.iter().zip(right) {
        let (dl, dr) = (l - ml, r - mr);
        cov += dl * dr;
        vl += dl * dl;
        vr += dr * dr;
    }
    let (sl, sr) = ((vl / nf).sqrt(), (vr / nf).sqrt());
    if sl < SIGMA_FLOOR || sr < SIGMA_FLOOR {
        return 0.0;
    }
    (cov / nf / (sl * sr)).clamp(-1.0, 1.0)
}

/// Peak magnitude of the unnormalized cross-correlation over all lags.
/// Diagnostic only; not part of the feature layout.
pub fn cross_correlation_peak(frame: &WindowFrame) -> f64 {
    let (l, r) = (&frame.left, &frame.right);
    let n = l.len() as isize;
    (-(n - 1)..n)
        .map(|lag| {
            let s: f64 = (0..n)
                .filter_map(|i| {
                    let j = i + lag;
                    (0..n).contains(&j).then(|| l[i as usize] * r[j as usize])
                })
                .sum();
            s.abs()
        })
        .fold(0.0, f64::max)
}
