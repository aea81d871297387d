//! Coarse-to-fine flow for shifts beyond the single-level range.

use facedeform::prelude::*;

fn mean_u(f: &FlowField) -> f64 {
    let (w, h) = f.dims();
    let (mut s, mut n) = (0.0, 0);
    for y in 32..h - 32 {
        for x in 32..w - 32 {
            let (u, _, ok) = f.at(x, y);
            if ok {
                s += u;
                n += 1;
            }
        }
    }
    s / n as f64
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = make_texture(256, 256, 3)?;
    let (seq, _) = translate_sequence(&base, 4.0, 0.0, 2)?;
    let (a, b) = (seq.get(0).unwrap(), seq.get(1).unwrap());

    for levels in 1..=3 {
        let p = FlowParams { pyramid_levels: levels, ..FlowParams::default() };
        let f = pyramidal_lk(a, b, &p)?;
        println!("levels {levels}: mean u = {:.3} (true 4.0)", mean_u(&f));
    }

    let too_deep = FlowParams { pyramid_levels: 6, ..FlowParams::default() };
    if let Err(e) = pyramidal_lk(a, b, &too_deep) {
        println!("levels 6: {e}");
    }
    Ok(())
}
