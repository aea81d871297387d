//! Onset/apex/offset detection and region ranking on a happy-like
//! sequence: mouth and cheeks moving together.

use facedeform::cli::report_json;
use facedeform::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = make_grid(120, 180, 6, 4)?;
    let map = RegionMap::default_layout();
    let profile = Profile::with_hold(8, 14, 86, 93);
    let active = [
        ActiveRegion::new("mouth", 1.0, profile),
        ActiveRegion::new("cheeks", 0.6, profile).with_direction_deg(-90.0),
    ];
    let (seq, _) = synth_expression(&grid, &map, &active, 100, 1)?;
    let series = intensity_series(&seq, &grid, &map, &FlowParams::default(), Mode::Reference, Units::Normalized)?;

    let report = build_report(&series, &AnalysisParams::default())?;
    print!("{}", report_json(&report));
    Ok(())
}
