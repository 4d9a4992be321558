//! Box count, pan and channel correlation for typical stereo images, with a
//! coarse text rendering of the 20 x 20 goniometer grid.
//!
//! cargo run --release --example stereo_scope

use std::f64::consts::PI;

use djmeter::audio_io::WindowFrame;
use djmeter::stereo_meters::{grid_cell, read_all};
use rand::{Rng, SeedableRng};

const N: usize = 4096;

fn scope(frame: &WindowFrame) -> String {
    let mut grid = [[false; 20]; 20];
    for (l, r) in frame.left.iter().zip(&frame.right) {
        grid[19 - grid_cell(*r)][grid_cell(*l)] = true;
    }
    grid.iter()
        .map(|row| row.iter().map(|&c| if c { '#' } else { '.' }).collect::<String>() + "\n")
        .collect()
}

fn main() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let t = |i: usize| 2.0 * PI * 440.0 * i as f64 / 44_100.0;
    let s: Vec<f64> = (0..N).map(|i| 0.8 * t(i).sin()).collect();
    let noise = |rng: &mut rand_chacha::ChaCha8Rng| (0..N).map(|_| rng.random_range(-0.7..0.7)).collect::<Vec<f64>>();
    let frames = [
        ("mono", WindowFrame::new(s.clone(), s.clone(), 0)),
        ("anti-phase", WindowFrame::new(s.clone(), s.iter().map(|x| -x).collect(), 0)),
        ("panned left", WindowFrame::new(s.clone(), s.iter().map(|x| 0.3 * x).collect(), 0)),
        ("quadrature", WindowFrame::new(s.clone(), (0..N).map(|i| 0.8 * t(i).cos()).collect(), 0)),
        ("independent noise", WindowFrame::new(noise(&mut rng), noise(&mut rng), 0)),
    ];
    for (name, f) in &frames {
        let r = read_all(f);
        println!(
            "{name}: box count {}, pan {:.2} deg, correlation {:+.3}",
            r.box_count, r.pan_deg, r.correlation
        );
        print!("{}", scope(f));
        println!();
    }
}
