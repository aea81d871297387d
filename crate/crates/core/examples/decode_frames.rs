//! Writes a few PGM/PPM frames to a scratch directory and loads them back
//! as a naturally ordered sequence.
//!
//! `cargo run --example decode_frames`

use facedeform::imageio::{encode_ppm, load_sequence, write_pgm, RgbImage};
use facedeform::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("facedeform-decode-frames");
    std::fs::create_dir_all(&dir)?;

    let tex = make_texture(48, 32, 1)?;
    // frame_10 sorts after frame_2 under natural ordering
    for i in [1, 2, 10] {
        write_pgm(&dir.join(format!("frame_{i}.pgm")), &tex)?;
    }
    let rgb: Vec<u8> = tex.data().iter().flat_map(|v| { let b = (v * 255.0).round() as u8; [b, b, b] }).collect();
    std::fs::write(dir.join("frame_11.ppm"), encode_ppm(&RgbImage::new(48, 32, rgb)?))?;

    let seq = load_sequence(&dir, "frame_*.p[gp]m")?;
    let (w, h) = seq.dims();
    println!("loaded {} frames of {w}x{h} from {}", seq.len(), dir.display());
    for (i, f) in seq.frames().iter().enumerate() {
        let mean = f.data().iter().sum::<f64>() / f.data().len() as f64;
        println!("  #{i}: mean intensity {mean:.4}");
    }

    match decode_pgm(b"P5\n4 4\n255\n\x00\x01") {
        Ok(_) => unreachable!(),
        Err(e) => println!("truncated file rejected: {e}"),
    }
    Ok(())
}
