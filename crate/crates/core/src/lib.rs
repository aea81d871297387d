//! # facedeform
//!
//! Measures facial-feature deformation in frame sequences. Dense
//! Lucas-Kanade optical flow is computed between a neutral reference frame
//! and every later frame, displacement magnitudes are averaged over
//! grid-defined facial regions, and the resulting per-region intensity
//! curves are analysed for onset, apex and offset.
//!
//! ## Pipeline
//!
//! 1. [`imageio`] decodes PGM/PPM frames to normalized grayscale.
//! 2. [`flow`] estimates per-pixel motion by windowed least squares,
//!    optionally coarse-to-fine.
//! 3. [`regions`] splits the frame into a 6×4 grid and names the cells
//!    that make up `eyes_eyebrows`, `cheeks` and `mouth`.
//! 4. [`intensity`] turns each flow field into one mean magnitude per
//!    region, yielding a time series.
//! 5. [`analysis`] extracts events and ranks regions into an
//!    [`ExpressionReport`](analysis::ExpressionReport).
//!
//! [`synth`] generates sequences with known motion for testing, and
//! [`cli`] wires everything into the `facedeform` binary.
//!
//! ```
//! use facedeform::prelude::*;
//!
//! let grid = make_grid(120, 180, 6, 4).unwrap();
//! let map = RegionMap::default_layout();
//! let mouth = ActiveRegion::new("mouth", 0.8, Profile::triangle(2, 6, 10));
//! let (frames, _truth) = synth_expression(&grid, &map, &[mouth], 12, 7).unwrap();
//!
//! let series = intensity_series(
//!     &frames, &grid, &map, &FlowParams::default(), Mode::Reference, Units::Pixels,
//! ).unwrap();
//! let report = build_report(&series, &AnalysisParams::default()).unwrap();
//! assert_eq!(report.dominant_region.as_deref(), Some("mouth"));
//! ```

pub mod analysis;
pub mod cli;
pub mod flow;
pub mod imageio;
pub mod intensity;
pub mod regions;
pub mod synth;

pub mod prelude {
    pub use crate::analysis::{
        build_report, detect_events, rank_regions, smooth_series, AnalysisParams, DetectParams,
        ExpressionReport, RegionEvents,
    };
    pub use crate::flow::{
        gaussian_smooth, lucas_kanade, pyramidal_lk, spatiotemporal_gradients, FlowField,
        FlowParams, GradientField, StructureTensor,
    };
    pub use crate::imageio::{
        decode_pgm, decode_ppm, encode_pgm, load_sequence, rgb_to_gray, FrameSequence, Image,
        RgbImage,
    };
    pub use crate::intensity::{
        displacement_magnitude, intensity_series, region_mean_magnitude, FlowVector,
        IntensitySeries, Mode, Units,
    };
    pub use crate::regions::{make_grid, parse_region_map, region_mask, GridSpec, RegionMap};
    pub use crate::synth::{
        make_texture, synth_expression, translate_sequence, ActiveRegion, GroundTruth, Profile,
    };
}
