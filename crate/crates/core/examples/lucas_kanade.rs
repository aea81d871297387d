//! Dense single-level flow on a sub-pixel translation.

use facedeform::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = make_texture(128, 128, 7)?;
    let (seq, _) = translate_sequence(&base, 0.6, -0.4, 2)?;
    let flow = lucas_kanade(seq.get(0).unwrap(), seq.get(1).unwrap(), &FlowParams::default())?;

    let (mut su, mut sv, mut n) = (0.0, 0.0, 0);
    for y in 16..112 {
        for x in 16..112 {
            let (u, v, ok) = flow.at(x, y);
            if ok {
                su += u;
                sv += v;
                n += 1;
            }
        }
    }
    println!("true shift (0.600, -0.400)");
    println!("mean flow  ({:.3}, {:.3}) over {n} interior pixels", su / n as f64, sv / n as f64);
    println!("valid pixels: {} of {}", flow.valid_count(), 128 * 128);

    // flat images carry no gradient: everything is invalid
    let flat = Image::constant(32, 32, 0.5);
    let f = lucas_kanade(&flat, &flat, &FlowParams::default())?;
    println!("flat image valid pixels: {}", f.valid_count());
    Ok(())
}
