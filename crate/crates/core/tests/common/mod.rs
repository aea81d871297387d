#![allow(dead_code)]

use facedeform::prelude::*;

pub const FACE_W: usize = 120;
pub const FACE_H: usize = 180;

pub fn face_grid() -> (GridSpec, RegionMap) {
    (
        make_grid(FACE_W, FACE_H, 6, 4).unwrap(),
        RegionMap::default_layout(),
    )
}

/// Runs the default pipeline on a synthetic expression.
pub fn expression_series(active: &[ActiveRegion], n: usize, seed: u64, units: Units) -> IntensitySeries {
    let (grid, map) = face_grid();
    let (seq, _) = synth_expression(&grid, &map, active, n, seed).unwrap();
    intensity_series(&seq, &grid, &map, &FlowParams::default(), Mode::Reference, units).unwrap()
}

/// Mouth and cheeks moving together, onset 8 and back to rest by 93.
pub fn happy_like() -> Vec<ActiveRegion> {
    let profile = Profile::with_hold(8, 14, 86, 93);
    vec![
        ActiveRegion::new("mouth", 1.0, profile),
        ActiveRegion::new("cheeks", 0.6, profile).with_direction_deg(-90.0),
    ]
}

pub fn mouth_only(amplitude: f64, n: usize) -> Vec<ActiveRegion> {
    vec![ActiveRegion::new("mouth", amplitude, Profile::triangle(2, n / 2, n - 3))]
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}
