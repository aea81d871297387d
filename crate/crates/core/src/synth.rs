//! Synthetic sequences with exactly known motion.
//!
//! These generators stand in for recorded face videos in tests: the
//! displacement of every pixel in every frame is known by construction,
//! so flow, intensity and event detection can be checked against it.
//!
//! Randomness comes from `ChaCha8Rng::seed_from_u64(seed)`; outputs are a
//! pure function of the parameters and seed.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::imageio::{FrameSequence, Image};
use crate::regions::{region_mask, GridSpec, RegionError, RegionMap};

/// Width of the feathered band inside a moving region's mask, in pixels.
pub const FEATHER_PX: f64 = 4.0;

const TEXTURE_COMPONENTS: usize = 8;
const MIN_WAVELENGTH: f64 = 8.0;
const MAX_WAVELENGTH: f64 = 64.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("texture must be at least 16x16, got {0}x{1}")]
    TooSmall(usize, usize),
    #[error("sequence needs at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("shift ({dx}, {dy}) px/frame over {n} frames exceeds a quarter of {min_dim} px")]
    ExcessiveShift { dx: f64, dy: f64, n: usize, min_dim: usize },
    #[error("amplitude {amplitude} px for '{region}' must be below a quarter of the {cell} px cell size")]
    AmplitudeTooLarge { region: String, amplitude: f64, cell: usize },
    #[error("unknown region '{0}'")]
    UnknownRegion(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error(transparent)]
    Region(#[from] RegionError),
}

/// Band-limited texture: eight random-phase plane waves with wavelengths
/// between 8 and 64 px, rescaled to `[0.1, 0.9]`.
pub fn make_texture(width: usize, height: usize, seed: u64) -> Result<Image, SynthError> {
    if width < 16 || height < 16 {
        return Err(SynthError::TooSmall(width, height));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<(f64, f64, f64)> = (0..TEXTURE_COMPONENTS)
        .map(|_| {
            let wavelength = rng.random_range(MIN_WAVELENGTH..=MAX_WAVELENGTH);
            let angle = rng.random_range(0.0..std::f64::consts::PI);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let k = std::f64::consts::TAU / wavelength;
            (k * angle.cos(), k * angle.sin(), phase)
        })
        .collect();
    let raw: Vec<f64> = (0..width * height)
        .map(|i| {
            let (x, y) = ((i % width) as f64, (i / width) as f64);
            waves.iter().map(|(kx, ky, ph)| (kx * x + ky * y + ph).sin()).sum()
        })
        .collect();
    let (lo, hi) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    let data = raw
        .into_iter()
        .map(|v| {
            if span > 0.0 {
                (0.1 + 0.8 * (v - lo) / span).clamp(0.1, 0.9)
            } else {
                0.5
            }
        })
        .collect();
    Ok(Image::from_raw(width, height, data))
}

/// Known motion behind a generated sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundTruth {
    /// Global cumulative shift of frame `t` relative to frame 0.
    Translation { shifts: Vec<(f64, f64)> },
    /// Per-region local motion; displacement of frame `t` relative to the
    /// undeformed texture.
    Expression {
        width: usize,
        height: usize,
        frames: usize,
        regions: Vec<RegionMotion>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionMotion {
    pub name: String,
    pub amplitude: f64,
    pub direction: (f64, f64),
    pub profile: Profile,
    /// Feathered per-pixel weight in `[0, 1]`, zero outside the region.
    pub weights: Vec<f64>,
}

impl GroundTruth {
    pub fn frames(&self) -> usize {
        match self {
            Self::Translation { shifts } => shifts.len(),
            Self::Expression { frames, .. } => *frames,
        }
    }

    /// First region carrying motion, if any.
    pub fn active_region(&self) -> Option<&str> {
        match self {
            Self::Translation { .. } => None,
            Self::Expression { regions, .. } => regions.first().map(|r| r.name.as_str()),
        }
    }

    pub fn displacement_at(&self, t: usize, x: usize, y: usize) -> (f64, f64) {
        match self {
            Self::Translation { shifts } => shifts[t],
            Self::Expression { width, regions, .. } => {
                let i = y * width + x;
                regions.iter().fold((0.0, 0.0), |(dx, dy), m| {
                    let s = m.amplitude * m.profile.weight(t) * m.weights[i];
                    (dx + s * m.direction.0, dy + s * m.direction.1)
                })
            }
        }
    }

    /// Dense displacement rasters `(dx, dy)` for frame `t`.
    pub fn displacement_field(&self, t: usize, width: usize, height: usize) -> (Vec<f64>, Vec<f64>) {
        let mut dx = vec![0.0; width * height];
        let mut dy = vec![0.0; width * height];
        for y in 0..height {
            for x in 0..width {
                let (a, b) = self.displacement_at(t, x, y);
                dx[y * width + x] = a;
                dy[y * width + x] = b;
            }
        }
        (dx, dy)
    }

    /// CSV form: `frame,dx,dy` for translations, one row per frame;
    /// `frame,region,amplitude,dx,dy` for expressions, one row per frame
    /// and active region.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self {
            Self::Translation { shifts } => {
                out.push_str("frame,dx,dy\n");
                for (t, (dx, dy)) in shifts.iter().enumerate() {
                    let _ = writeln!(out, "{t},{dx:.8e},{dy:.8e}");
                }
            }
            Self::Expression { frames, regions, .. } => {
                out.push_str("frame,region,amplitude,dx,dy\n");
                for t in 0..*frames {
                    for m in regions {
                        let a = m.amplitude * m.profile.weight(t);
                        let _ = writeln!(
                            out,
                            "{t},{},{a:.8e},{:.8e},{:.8e}",
                            m.name,
                            a * m.direction.0,
                            a * m.direction.1
                        );
                    }
                }
            }
        }
        out
    }
}

/// Frame `t` is `base` sampled at `(x − dx·t, y − dy·t)`.
pub fn translate_sequence(
    base: &Image,
    dx: f64,
    dy: f64,
    n: usize,
) -> Result<(FrameSequence, GroundTruth), SynthError> {
    if n < 2 {
        return Err(SynthError::TooFewFrames(n));
    }
    let min_dim = base.width().min(base.height());
    let limit = min_dim as f64 / 4.0;
    if !((dx * n as f64).abs() < limit && (dy * n as f64).abs() < limit) {
        return Err(SynthError::ExcessiveShift { dx, dy, n, min_dim });
    }
    let (w, h) = base.dims();
    let frames: Vec<Image> = (0..n)
        .into_par_iter()
        .map(|t| {
            let (sx, sy) = (dx * t as f64, dy * t as f64);
            Image::from_fn(w, h, |x, y| base.sample_bilinear(x as f64 - sx, y as f64 - sy))
        })
        .collect();
    let shifts = (0..n).map(|t| (dx * t as f64, dy * t as f64)).collect();
    let seq = FrameSequence::new(frames).expect("uniform frames");
    Ok((seq, GroundTruth::Translation { shifts }))
}

/// Piecewise-linear temporal envelope: 0 until `onset`, rising to 1 at
/// `apex`, held until `release`, falling back to 0 at `offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Profile {
    pub onset: usize,
    pub apex: usize,
    pub release: usize,
    pub offset: usize,
}

impl Profile {
    /// Rise then immediate fall.
    pub fn triangle(onset: usize, apex: usize, offset: usize) -> Self {
        Self {
            onset,
            apex,
            release: apex,
            offset,
        }
    }

    pub fn with_hold(onset: usize, apex: usize, release: usize, offset: usize) -> Self {
        Self {
            onset,
            apex,
            release,
            offset,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.onset <= self.apex && self.apex <= self.release && self.release <= self.offset {
            Ok(())
        } else {
            Err(SynthError::InvalidProfile(format!(
                "need onset <= apex <= release <= offset, got {}/{}/{}/{}",
                self.onset, self.apex, self.release, self.offset
            )))
        }
    }

    pub fn weight(&self, t: usize) -> f64 {
        if t < self.onset {
            0.0
        } else if t < self.apex {
            (t - self.onset) as f64 / (self.apex - self.onset) as f64
        } else if t <= self.release {
            1.0
        } else if t < self.offset {
            (self.offset - t) as f64 / (self.offset - self.release) as f64
        } else {
            0.0
        }
    }
}

/// One moving region of a synthetic expression.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveRegion {
    pub name: String,
    /// Peak displacement in pixels.
    pub amplitude: f64,
    /// Unit direction of motion, image coordinates (y down).
    pub direction: (f64, f64),
    pub profile: Profile,
}

impl ActiveRegion {
    /// Downward motion, the default.
    pub fn new(name: impl Into<String>, amplitude: f64, profile: Profile) -> Self {
        Self {
            name: name.into(),
            amplitude,
            direction: (0.0, 1.0),
            profile,
        }
    }

    /// Sets the direction from an angle in degrees (0 = +x, 90 = +y).
    pub fn with_direction_deg(mut self, degrees: f64) -> Self {
        let r = degrees.to_radians();
        self.direction = (r.cos(), r.sin());
        self
    }
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Feathered weights: 1 deep inside the mask, easing to 0 at its edge.
/// The image border does not count as an edge.
fn feather_weights(mask: &[bool], width: usize, height: usize) -> Vec<f64> {
    let reach = FEATHER_PX.ceil() as isize + 1;
    (0..width * height)
        .map(|i| {
            if !mask[i] {
                return 0.0;
            }
            let (x, y) = ((i % width) as isize, (i / width) as isize);
            let mut nearest = f64::INFINITY;
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                        continue;
                    }
                    if !mask[ny as usize * width + nx as usize] {
                        nearest = nearest.min(((dx * dx + dy * dy) as f64).sqrt());
                    }
                }
            }
            smoothstep(((nearest - 0.5) / FEATHER_PX).clamp(0.0, 1.0))
        })
        .collect()
}

/// Renders `n` frames of a seeded texture deformed inside the `active`
/// regions. Motion is zero outside the active masks; frame pixels are
/// backward-warped from the texture.
pub fn synth_expression(
    grid: &GridSpec,
    map: &RegionMap,
    active: &[ActiveRegion],
    n: usize,
    seed: u64,
) -> Result<(FrameSequence, GroundTruth), SynthError> {
    if n < 2 {
        return Err(SynthError::TooFewFrames(n));
    }
    map.check_grid(grid)?;
    let (w, h) = (grid.width(), grid.height());
    let cell = grid.min_cell_size();
    let mut motions = Vec::with_capacity(active.len());
    for a in active {
        if map.get(&a.name).is_none() {
            return Err(SynthError::UnknownRegion(a.name.clone()));
        }
        if !(a.amplitude.is_finite() && a.amplitude.abs() < cell as f64 / 4.0) {
            return Err(SynthError::AmplitudeTooLarge {
                region: a.name.clone(),
                amplitude: a.amplitude,
                cell,
            });
        }
        a.profile.validate()?;
        let norm = a.direction.0.hypot(a.direction.1);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(SynthError::InvalidProfile(format!(
                "direction of '{}' must be a nonzero vector",
                a.name
            )));
        }
        let mask = region_mask(grid, map, &a.name)?;
        motions.push(RegionMotion {
            name: a.name.clone(),
            amplitude: a.amplitude,
            direction: (a.direction.0 / norm, a.direction.1 / norm),
            profile: a.profile,
            weights: feather_weights(&mask.data, w, h),
        });
    }
    let truth = GroundTruth::Expression {
        width: w,
        height: h,
        frames: n,
        regions: motions,
    };
    let texture = make_texture(w, h, seed)?;
    let frames: Vec<Image> = (0..n)
        .into_par_iter()
        .map(|t| {
            Image::from_fn(w, h, |x, y| {
                let (dx, dy) = truth.displacement_at(t, x, y);
                texture.sample_bilinear(x as f64 - dx, y as f64 - dy)
            })
        })
        .collect();
    let seq = FrameSequence::new(frames).expect("uniform frames");
    Ok((seq, truth))
}
