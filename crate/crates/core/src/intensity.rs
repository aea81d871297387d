//! Displacement magnitudes and per-region intensity time series.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{self, FlowError, FlowField, FlowParams};
use crate::imageio::FrameSequence;
use crate::regions::{region_mask, GridSpec, PixelMask, RegionError, RegionMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntensityError {
    #[error("mask is {0}x{1} but flow is {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("need at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Region(#[from] RegionError),
}

/// A displaced point: current position `(xi, yi)` and reference position
/// `(x, y)`. For dense flow the reference is the pixel itself and the
/// difference is the flow vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowVector {
    pub xi: f64,
    pub yi: f64,
    pub x: f64,
    pub y: f64,
}

impl FlowVector {
    pub fn from_displacement(u: f64, v: f64) -> Self {
        Self {
            xi: u,
            yi: v,
            x: 0.0,
            y: 0.0,
        }
    }
}

/// Euclidean distance between the current and reference positions.
pub fn displacement_magnitude(v: &FlowVector) -> f64 {
    (v.xi - v.x).hypot(v.yi - v.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every frame against frame 0, the neutral reference.
    #[default]
    Reference,
    /// Every frame against its predecessor.
    Consecutive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    /// Pixels divided by the image diagonal.
    #[default]
    Normalized,
    Pixels,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Reference => "reference",
            Mode::Consecutive => "consecutive",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reference" => Ok(Mode::Reference),
            "consecutive" => Ok(Mode::Consecutive),
            other => Err(format!("unknown mode '{other}' (reference|consecutive)")),
        }
    }
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Units::Normalized => "normalized",
            Units::Pixels => "pixels",
        })
    }
}

impl FromStr for Units {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "normalized" => Ok(Units::Normalized),
            "pixels" => Ok(Units::Pixels),
            other => Err(format!("unknown units '{other}' (normalized|pixels)")),
        }
    }
}

/// Mean magnitude over a region and the number of pixels behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionMean {
    pub value: f64,
    pub count: usize,
}

/// Mean displacement magnitude over pixels that are both in `mask` and
/// valid in `flow`, optionally divided by `diag`. An empty selection
/// yields 0 with a count of 0.
pub fn region_mean_magnitude(
    flow: &FlowField,
    mask: &PixelMask,
    normalize: bool,
    diag: f64,
) -> Result<RegionMean, IntensityError> {
    if (mask.width, mask.height) != flow.dims() {
        return Err(IntensityError::DimensionMismatch(
            mask.width,
            mask.height,
            flow.width(),
            flow.height(),
        ));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, (&inside, &ok)) in mask.data.iter().zip(flow.valid()).enumerate() {
        if inside && ok {
            sum += displacement_magnitude(&FlowVector::from_displacement(flow.u()[i], flow.v()[i]));
            count += 1;
        }
    }
    if count == 0 {
        return Ok(RegionMean { value: 0.0, count });
    }
    let mean = sum / count as f64;
    Ok(RegionMean {
        value: if normalize { mean / diag } else { mean },
        count,
    })
}

/// Per-region mean magnitude per frame.
///
/// Row `i` holds the values for frame `frames[i]`; columns follow
/// `regions`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensitySeries {
    regions: Vec<String>,
    frames: Vec<usize>,
    values: Vec<Vec<f64>>,
    valid_counts: Option<Vec<Vec<usize>>>,
    units: Units,
    mode: Mode,
}

impl IntensitySeries {
    pub fn new(
        regions: Vec<String>,
        frames: Vec<usize>,
        values: Vec<Vec<f64>>,
        units: Units,
        mode: Mode,
    ) -> Result<Self, IntensityError> {
        if frames.len() != values.len() {
            return Err(IntensityError::InvalidSeries(format!(
                "{} frame indices for {} rows",
                frames.len(),
                values.len()
            )));
        }
        for (row, f) in values.iter().zip(&frames) {
            if row.len() != regions.len() {
                return Err(IntensityError::InvalidSeries(format!(
                    "frame {f} has {} values for {} regions",
                    row.len(),
                    regions.len()
                )));
            }
            if let Some(bad) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(IntensityError::InvalidSeries(format!(
                    "frame {f} has invalid magnitude {bad}"
                )));
            }
        }
        Ok(Self {
            regions,
            frames,
            values,
            valid_counts: None,
            units,
            mode,
        })
    }

    pub fn regions(&self) -> &[String] {
        &self.regions
    }

    pub fn frames(&self) -> &[usize] {
        &self.frames
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Valid-pixel counts behind each value, when computed from flow.
    pub fn valid_counts(&self) -> Option<&[Vec<usize>]> {
        self.valid_counts.as_deref()
    }

    pub fn units(&self) -> Units {
        self.units
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn region_index(&self, name: &str) -> Option<usize> {
        self.regions.iter().position(|r| r == name)
    }

    /// The time series of one region.
    pub fn column(&self, index: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[index]).collect()
    }

    pub fn column_by_name(&self, name: &str) -> Option<Vec<f64>> {
        self.region_index(name).map(|i| self.column(i))
    }

    /// Every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self
                .values
                .iter()
                .map(|row| row.iter().map(|v| v * factor).collect())
                .collect(),
            ..self.clone()
        }
    }
}

/// Image diagonal in pixels, the normalization length.
pub fn diagonal(width: usize, height: usize) -> f64 {
    (width as f64).hypot(height as f64)
}

/// Runs flow over every frame pair and averages magnitudes per region.
pub fn intensity_series(
    seq: &FrameSequence,
    grid: &GridSpec,
    map: &RegionMap,
    params: &FlowParams,
    mode: Mode,
    units: Units,
) -> Result<IntensitySeries, IntensityError> {
    if seq.len() < 2 {
        return Err(IntensityError::TooFewFrames(seq.len()));
    }
    params.validate()?;
    let (w, h) = seq.dims();
    if (grid.width(), grid.height()) != (w, h) {
        return Err(RegionError::GridMismatch {
            grid_w: grid.width(),
            grid_h: grid.height(),
            width: w,
            height: h,
        }
        .into());
    }
    map.check_grid(grid)?;
    let names: Vec<String> = map.names().map(str::to_string).collect();
    let masks = names
        .iter()
        .map(|n| region_mask(grid, map, n))
        .collect::<Result<Vec<_>, _>>()?;
    let diag = diagonal(w, h);
    let normalize = units == Units::Normalized;
    let frames = seq.frames();

    // single-level runs share the smoothed reference frame
    let reference = (params.pyramid_levels == 1 && mode == Mode::Reference)
        .then(|| flow::gaussian_smooth(&frames[0], params.smooth_sigma));

    let rows = (1..seq.len())
        .into_par_iter()
        .map(|t| {
            let prev = match mode {
                Mode::Reference => 0,
                Mode::Consecutive => t - 1,
            };
            let field = match &reference {
                Some(r) => {
                    let cur = flow::gaussian_smooth(&frames[t], params.smooth_sigma);
                    flow::lucas_kanade_smoothed(r, &cur, params)
                }
                None => flow::pyramidal_lk(&frames[prev], &frames[t], params)?,
            };
            masks
                .iter()
                .map(|m| region_mean_magnitude(&field, m, normalize, diag))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;

    let values = rows.iter().map(|r| r.iter().map(|m| m.value).collect()).collect();
    let counts = rows.iter().map(|r| r.iter().map(|m| m.count).collect()).collect();
    let mut series = IntensitySeries::new(names, (1..seq.len()).collect(), values, units, mode)?;
    series.valid_counts = Some(counts);
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn magnitude_examples() {
        let m = |u, v| displacement_magnitude(&FlowVector::from_displacement(u, v));
        assert_eq!(m(3.0, 4.0), 5.0);
        assert_eq!(m(0.0, 0.0), 0.0);
        assert_eq!(m(-3.0, 4.0), 5.0);
        let p = FlowVector {
            xi: 10.0,
            yi: 2.0,
            x: 7.0,
            y: 6.0,
        };
        assert_eq!(displacement_magnitude(&p), 5.0);
    }

    #[test]
    fn region_mean_cases() {
        let f = FlowField::uniform(640, 480, 0.6, 0.8);
        let mut mask = PixelMask::empty(640, 480);
        mask.data[..1000].fill(true);
        let raw = region_mean_magnitude(&f, &mask, false, 800.0).unwrap();
        assert!((raw.value - 1.0).abs() < 1e-15);
        assert_eq!(raw.count, 1000);
        let norm = region_mean_magnitude(&f, &mask, true, diagonal(640, 480)).unwrap();
        assert_eq!(diagonal(640, 480), 800.0);
        assert!((norm.value - 0.00125).abs() < 1e-18);

        let invalid = FlowField::new(
            640,
            480,
            vec![1.0; 640 * 480],
            vec![1.0; 640 * 480],
            vec![false; 640 * 480],
        );
        assert_eq!(
            region_mean_magnitude(&invalid, &mask, false, 800.0).unwrap(),
            RegionMean { value: 0.0, count: 0 }
        );
        let small = PixelMask::empty(10, 10);
        assert!(matches!(
            region_mean_magnitude(&f, &small, false, 1.0),
            Err(IntensityError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn series_validation() {
        let ok = IntensitySeries::new(
            vec!["a".into()],
            vec![1, 2],
            vec![vec![0.0], vec![1.0]],
            Units::Pixels,
            Mode::Reference,
        );
        assert!(ok.is_ok());
        assert!(IntensitySeries::new(
            vec!["a".into()],
            vec![1],
            vec![vec![-1.0]],
            Units::Pixels,
            Mode::Reference
        )
        .is_err());
        assert!(IntensitySeries::new(
            vec!["a".into(), "b".into()],
            vec![1],
            vec![vec![0.0]],
            Units::Pixels,
            Mode::Reference
        )
        .is_err());
    }

    #[test]
    fn mode_units_parse() {
        assert_eq!("consecutive".parse::<Mode>().unwrap(), Mode::Consecutive);
        assert_eq!("pixels".parse::<Units>().unwrap(), Units::Pixels);
        assert!("bogus".parse::<Mode>().is_err());
        assert_eq!(Units::Normalized.to_string(), "normalized");
    }
}
