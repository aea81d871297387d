//! Per-region motion intensity for a synthetic mouth movement, in both
//! reference and consecutive modes.

use facedeform::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = make_grid(120, 180, 6, 4)?;
    let map = RegionMap::default_layout();
    let active = [ActiveRegion::new("mouth", 2.0, Profile::triangle(2, 10, 18))];
    let (seq, _) = synth_expression(&grid, &map, &active, 20, 4)?;

    for mode in [Mode::Reference, Mode::Consecutive] {
        let s = intensity_series(&seq, &grid, &map, &FlowParams::default(), mode, Units::Pixels)?;
        println!("{mode} mode, pixels");
        println!("frame {:>14} {:>14} {:>14}", s.regions()[0], s.regions()[1], s.regions()[2]);
        for (f, row) in s.frames().iter().zip(s.values()) {
            println!("{f:>5} {:>14.4} {:>14.4} {:>14.4}", row[0], row[1], row[2]);
        }
    }
    Ok(())
}
