//! Prints the third-octave bank: edges, design gains and measured attenuation.
//!
//! cargo run --release --example filterbank_response -- [sample_rate]

use djmeter::filterbank::{design_bank, BAND_COUNT};

fn main() -> djmeter::Result<()> {
    let fs: u32 = std::env::args().nth(1).map_or(44_100, |s| s.parse().expect("sample rate"));
    let bank = design_bank(fs)?;
    let nyq = fs as f64 / 2.0;
    println!("band  center     lower     upper   @center  @edges   2 bands  octave");
    for f in bank.filters() {
        let s = f.spec;
        let two = [-2i32, 2]
            .iter()
            .filter_map(|o| {
                let j = s.index as i32 + o;
                (0..BAND_COUNT as i32).contains(&j).then(|| -f.magnitude_db(bank.band(j as usize).spec.center_hz))
            })
            .fold(f64::INFINITY, f64::min);
        let oct = [0.5, 2.0]
            .iter()
            .map(|r| s.center_hz * r)
            .filter(|&hz| hz < 0.95 * nyq)
            .map(|hz| -f.magnitude_db(hz))
            .fold(f64::INFINITY, f64::min);
        println!(
            "{:>4}  {:>7.1}  {:>8.1}  {:>8.1}  {:>7.3}  {:>6.3}  {:>7.1}  {:>6.1}",
            s.label(),
            s.center_hz,
            s.lower_edge_hz,
            s.upper_edge_hz,
            f.magnitude_db(s.center_hz),
            f.magnitude_db(s.lower_edge_hz).min(f.magnitude_db(s.upper_edge_hz)),
            two,
            oct
        );
    }
    Ok(())
}
