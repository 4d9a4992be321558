//! VU, PPM, DR and RMS of a few reference signals.
//!
//! cargo run --release --example level_meters

use std::f64::consts::PI;

use djmeter::level_meters::read_all;

const FS: u32 = 44_100;
const N: usize = 4096;

fn main() {
    let sine = |amp: f64| -> Vec<f64> {
        (0..N).map(|i| amp * (2.0 * PI * 1000.0 * i as f64 / FS as f64).sin()).collect()
    };
    let mut bursts = vec![0.0; N];
    for (k, seg) in bursts.chunks_exact_mut(441).enumerate() {
        seg[200] = if k % 2 == 0 { 1.0 } else { 0.1 };
    }
    let signals = [
        ("1 kHz sine, full scale", sine(1.0)),
        ("1 kHz sine, half amplitude", sine(0.5)),
        ("DC 1.0", vec![1.0; N]),
        ("clicks alternating 1.0 / 0.1", bursts),
        ("silence", vec![0.0; N]),
    ];
    println!("{:<30} {:>8} {:>8} {:>8} {:>8}", "signal", "VU dB", "PPM dB", "DR dB", "RMS");
    for (name, x) in &signals {
        let m = read_all(x, FS);
        println!(
            "{name:<30} {:>8.2} {:>8.2} {:>8.2} {:>8.4}",
            m.vu_db, m.ppm_db, m.dr_db, m.rms_linear
        );
    }
}
