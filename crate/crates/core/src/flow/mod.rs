//! Dense Lucas-Kanade optical flow.
//!
//! Each pixel's displacement `(u, v)` is the least-squares solution of the
//! brightness constancy constraint `ix·u + iy·v + it = 0` stacked over a
//! square window. The window normal equations reduce to a 2×2 system whose
//! matrix is the structure tensor of the window.

mod pyramid;

use rayon::prelude::*;
use thiserror::Error;

use crate::imageio::Image;

pub use pyramid::{downsample, pyramidal_lk, upsample_flow, warp};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("frame dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("invalid flow parameters: {0}")]
    InvalidParams(String),
    #[error(
        "pyramid too deep: {levels} levels with window radius {radius} need a minimum \
         dimension of {required} px, image has {min_dim} px"
    )]
    PyramidTooDeep {
        levels: usize,
        radius: usize,
        min_dim: usize,
        required: usize,
    },
}

/// Solver configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    /// Window half-size; the window side is `2r + 1`.
    pub window_radius: usize,
    /// Gaussian pre-smoothing sigma in pixels, `0` disables it.
    pub smooth_sigma: f64,
    /// Minimum smaller eigenvalue of the structure tensor per window pixel.
    pub eigen_threshold: f64,
    pub pyramid_levels: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            window_radius: 7,
            smooth_sigma: 1.0,
            eigen_threshold: 1e-6,
            pyramid_levels: 1,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<(), FlowError> {
        if self.window_radius < 1 {
            return Err(FlowError::InvalidParams("window_radius must be >= 1".into()));
        }
        if self.pyramid_levels < 1 {
            return Err(FlowError::InvalidParams("pyramid_levels must be >= 1".into()));
        }
        if !(self.eigen_threshold >= 0.0 && self.eigen_threshold.is_finite()) {
            return Err(FlowError::InvalidParams(
                "eigen_threshold must be finite and >= 0".into(),
            ));
        }
        if !(self.smooth_sigma >= 0.0 && self.smooth_sigma.is_finite()) {
            return Err(FlowError::InvalidParams(
                "smooth_sigma must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Spatial and temporal brightness derivatives of a frame pair.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub ix: Vec<f64>,
    pub iy: Vec<f64>,
    pub it: Vec<f64>,
}

/// Per-pixel displacement from the first frame to the second.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    u: Vec<f64>,
    v: Vec<f64>,
    valid: Vec<bool>,
}

impl FlowField {
    /// Builds a field, zeroing displacement wherever `valid` is false.
    pub fn new(
        width: usize,
        height: usize,
        mut u: Vec<f64>,
        mut v: Vec<f64>,
        valid: Vec<bool>,
    ) -> Self {
        let n = width * height;
        assert!(
            u.len() == n && v.len() == n && valid.len() == n,
            "flow rasters must be {width}x{height}"
        );
        for ((u, v), ok) in u.iter_mut().zip(v.iter_mut()).zip(&valid) {
            if !ok {
                *u = 0.0;
                *v = 0.0;
            }
        }
        Self { width, height, u, v, valid }
    }

    /// A field that is valid everywhere with the given components.
    pub fn uniform(width: usize, height: usize, u: f64, v: f64) -> Self {
        let n = width * height;
        Self::new(width, height, vec![u; n], vec![v; n], vec![true; n])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    /// `(u, v, valid)` at a pixel.
    pub fn at(&self, x: usize, y: usize) -> (f64, f64, bool) {
        let i = y * self.width + x;
        (self.u[i], self.v[i], self.valid[i])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&b| b).count()
    }
}

/// Window sums of gradient products. `count` is the number of pixels
/// that contributed.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StructureTensor {
    pub gxx: f64,
    pub gxy: f64,
    pub gyy: f64,
    pub bx: f64,
    pub by: f64,
    pub count: usize,
}

impl StructureTensor {
    pub fn from_gradients(ix: &[f64], iy: &[f64], it: &[f64]) -> Self {
        assert!(ix.len() == iy.len() && iy.len() == it.len());
        let mut t = Self::default();
        for ((&gx, &gy), &gt) in ix.iter().zip(iy).zip(it) {
            t.gxx += gx * gx;
            t.gxy += gx * gy;
            t.gyy += gy * gy;
            t.bx += gx * gt;
            t.by += gy * gt;
        }
        t.count = ix.len();
        t
    }

    pub fn determinant(&self) -> f64 {
        self.gxx * self.gyy - self.gxy * self.gxy
    }

    /// Smaller eigenvalue of the symmetric 2×2 tensor, computed as
    /// `det / λmax` to avoid cancellation near rank deficiency.
    pub fn min_eigenvalue(&self) -> f64 {
        let half_trace = 0.5 * (self.gxx + self.gyy);
        let radius = (0.5 * (self.gxx - self.gyy)).hypot(self.gxy);
        let max = half_trace + radius;
        if max <= 0.0 {
            return 0.0;
        }
        self.determinant() / max
    }

    /// Solves `G·[u, v]ᵀ = −b`. Returns `None` when the smaller eigenvalue
    /// falls below `eigen_threshold × count` or the system is singular.
    pub fn solve(&self, eigen_threshold: f64) -> Option<(f64, f64)> {
        let min_eig = self.min_eigenvalue();
        if !(min_eig > 0.0) || min_eig < eigen_threshold * self.count as f64 {
            return None;
        }
        let det = self.determinant();
        if !(det > 0.0) {
            return None;
        }
        let u = (self.gxy * self.by - self.gyy * self.bx) / det;
        let v = (self.gxy * self.bx - self.gxx * self.by) / det;
        Some((u, v))
    }
}

fn check_dims(i1: &Image, i2: &Image) -> Result<(), FlowError> {
    if i1.dims() != i2.dims() {
        return Err(FlowError::DimensionMismatch(
            i1.width(),
            i1.height(),
            i2.width(),
            i2.height(),
        ));
    }
    Ok(())
}

/// Normalized sampled Gaussian of radius `ceil(3σ)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let denom = 2.0 * sigma * sigma;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / denom).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= sum);
    k
}

/// Separable Gaussian blur with replicate border. `sigma == 0` is the
/// identity.
pub fn gaussian_smooth(img: &Image, sigma: f64) -> Image {
    if sigma <= 0.0 {
        return img.clone();
    }
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as isize;
    let (w, h) = img.dims();
    let src = img.data();

    let mut tmp = vec![0.0; w * h];
    tmp.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let line = &src[y * w..(y + 1) * w];
        for (x, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, wgt) in kernel.iter().enumerate() {
                let xs = (x as isize + k as isize - r).clamp(0, w as isize - 1) as usize;
                acc += wgt * line[xs];
            }
            *out = acc;
        }
    });

    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, wgt) in kernel.iter().enumerate() {
                let ys = (y as isize + k as isize - r).clamp(0, h as isize - 1) as usize;
                acc += wgt * tmp[ys * w + x];
            }
            *o = acc.clamp(0.0, 1.0);
        }
    });
    Image::from_raw(w, h, out)
}

/// Central differences of the frame average for `ix`/`iy`, plain frame
/// difference for `it`. Spatial differences use replicate border.
pub fn spatiotemporal_gradients(i1: &Image, i2: &Image) -> Result<GradientField, FlowError> {
    check_dims(i1, i2)?;
    Ok(gradients_unchecked(i1, i2))
}

fn gradients_unchecked(i1: &Image, i2: &Image) -> GradientField {
    let (w, h) = i1.dims();
    let avg: Vec<f64> = i1
        .data()
        .iter()
        .zip(i2.data())
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let it: Vec<f64> = i1.data().iter().zip(i2.data()).map(|(a, b)| b - a).collect();
    let mut ix = vec![0.0; w * h];
    let mut iy = vec![0.0; w * h];
    for y in 0..h {
        let up = y.saturating_sub(1);
        let down = (y + 1).min(h - 1);
        for x in 0..w {
            let left = x.saturating_sub(1);
            let right = (x + 1).min(w - 1);
            ix[y * w + x] = 0.5 * (avg[y * w + right] - avg[y * w + left]);
            iy[y * w + x] = 0.5 * (avg[down * w + x] - avg[up * w + x]);
        }
    }
    GradientField {
        width: w,
        height: h,
        ix,
        iy,
        it,
    }
}

/// Single-level dense Lucas-Kanade flow from `i1` to `i2`.
pub fn lucas_kanade(i1: &Image, i2: &Image, p: &FlowParams) -> Result<FlowField, FlowError> {
    p.validate()?;
    check_dims(i1, i2)?;
    let s1 = gaussian_smooth(i1, p.smooth_sigma);
    let s2 = gaussian_smooth(i2, p.smooth_sigma);
    Ok(lucas_kanade_smoothed(&s1, &s2, p))
}

/// Solver core on frames that have already been smoothed with
/// `p.smooth_sigma`. Windows are clipped at the image bounds.
pub(crate) fn lucas_kanade_smoothed(s1: &Image, s2: &Image, p: &FlowParams) -> FlowField {
    let g = gradients_unchecked(s1, s2);
    let (w, h) = (g.width, g.height);
    let r = p.window_radius;

    // per-pixel products: gxx, gxy, gyy, bx, by
    let products: Vec<[f64; 5]> = (0..w * h)
        .map(|i| {
            let (gx, gy, gt) = (g.ix[i], g.iy[i], g.it[i]);
            [gx * gx, gx * gy, gy * gy, gx * gt, gy * gt]
        })
        .collect();

    // horizontal window sums
    let mut rows = vec![[0.0f64; 5]; w * h];
    rows.par_chunks_mut(w).enumerate().for_each(|(y, out)| {
        let line = &products[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(w - 1);
            let mut acc = [0.0; 5];
            for p in &line[lo..=hi] {
                for k in 0..5 {
                    acc[k] += p[k];
                }
            }
            *o = acc;
        }
    });

    let mut u = vec![0.0; w * h];
    let mut v = vec![0.0; w * h];
    let mut valid = vec![false; w * h];
    u.par_chunks_mut(w)
        .zip(v.par_chunks_mut(w))
        .zip(valid.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, ((u_row, v_row), ok_row))| {
            let lo_y = y.saturating_sub(r);
            let hi_y = (y + r).min(h - 1);
            for x in 0..w {
                let mut acc = [0.0; 5];
                for yy in lo_y..=hi_y {
                    let s = &rows[yy * w + x];
                    for k in 0..5 {
                        acc[k] += s[k];
                    }
                }
                let span_x = (x + r).min(w - 1) - x.saturating_sub(r) + 1;
                let tensor = StructureTensor {
                    gxx: acc[0],
                    gxy: acc[1],
                    gyy: acc[2],
                    bx: acc[3],
                    by: acc[4],
                    count: span_x * (hi_y - lo_y + 1),
                };
                if let Some((du, dv)) = tensor.solve(p.eigen_threshold) {
                    u_row[x] = du;
                    v_row[x] = dv;
                    ok_row[x] = true;
                }
            }
        });
    FlowField::new(w, h, u, v, valid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use proptest::prelude::*;

    fn texture(w: usize, h: usize, seed: u64) -> Image {
        synth::make_texture(w, h, seed).unwrap()
    }

    #[test]
    fn smoothing_constant_and_identity() {
        let img = Image::constant(9, 7, 0.375);
        let s = gaussian_smooth(&img, 1.7);
        assert!(s.data().iter().all(|v| (v - 0.375).abs() < 1e-15));
        let t = texture(20, 20, 3);
        assert_eq!(gaussian_smooth(&t, 0.0), t);
    }

    #[test]
    fn smoothing_impulse_matches_direct_gaussian() {
        let mut data = vec![0.0; 121];
        data[5 * 11 + 5] = 1.0;
        let img = Image::new(11, 11, data).unwrap();
        let s = gaussian_smooth(&img, 1.0);
        // independently evaluated 2-D kernel over the 7×7 support
        let mut norm = 0.0;
        for dy in -3i32..=3 {
            for dx in -3i32..=3 {
                norm += (-((dx * dx + dy * dy) as f64) / 2.0).exp();
            }
        }
        for y in 0..11i32 {
            for x in 0..11i32 {
                let (dx, dy) = (x - 5, y - 5);
                let expected = if dx.abs() <= 3 && dy.abs() <= 3 {
                    (-((dx * dx + dy * dy) as f64) / 2.0).exp() / norm
                } else {
                    0.0
                };
                assert!(
                    (s.get(x as usize, y as usize) - expected).abs() < 1e-6,
                    "({x},{y})"
                );
            }
        }
    }

    #[test]
    fn gradients_cases() {
        let t = texture(24, 24, 1);
        let g = spatiotemporal_gradients(&t, &t).unwrap();
        assert!(g.it.iter().all(|&v| v == 0.0));

        let c = 0.03125;
        let ramp = Image::from_fn(16, 8, |x, _| x as f64 * c);
        let g = spatiotemporal_gradients(&ramp, &ramp).unwrap();
        for y in 0..8 {
            for x in 1..15 {
                assert_eq!(g.ix[y * 16 + x], c);
                assert_eq!(g.iy[y * 16 + x], 0.0);
            }
        }

        let a = Image::constant(5, 5, 0.2);
        let b = Image::constant(5, 5, 0.7);
        let g = spatiotemporal_gradients(&a, &b).unwrap();
        assert!(g.it.iter().all(|&v| (v - 0.5).abs() < 1e-15));
        assert!(g.ix.iter().chain(&g.iy).all(|&v| v == 0.0));

        let small = Image::constant(4, 5, 0.2);
        assert!(matches!(
            spatiotemporal_gradients(&a, &small),
            Err(FlowError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn identical_frames_give_zero_flow() {
        let t = texture(48, 40, 9);
        let f = lucas_kanade(&t, &t, &FlowParams::default()).unwrap();
        assert!(f.valid_count() > 0);
        for i in 0..f.u().len() {
            assert_eq!(f.u()[i].abs(), 0.0);
            assert_eq!(f.v()[i].abs(), 0.0);
        }
    }

    #[test]
    fn flat_frames_are_invalid() {
        let a = Image::constant(32, 32, 0.4);
        let b = Image::constant(32, 32, 0.6);
        let f = lucas_kanade(&a, &b, &FlowParams::default()).unwrap();
        assert_eq!(f.valid_count(), 0);
        assert!(f.u().iter().chain(f.v()).all(|&x| x == 0.0));
    }

    #[test]
    fn unit_shift_recovered_per_pixel() {
        let base = texture(96, 96, 5);
        let (seq, _) = synth::translate_sequence(&base, 1.0, 0.0, 2).unwrap();
        let f = lucas_kanade(&seq.frames()[0], &seq.frames()[1], &FlowParams::default()).unwrap();
        let margin = 16;
        let mut checked = 0;
        for y in margin..96 - margin {
            for x in margin..96 - margin {
                let (u, v, ok) = f.at(x, y);
                if ok {
                    checked += 1;
                    assert!((0.85..=1.15).contains(&u), "u={u} at ({x},{y})");
                    assert!((-0.15..=0.15).contains(&v), "v={v} at ({x},{y})");
                }
            }
        }
        assert!(checked > 1000);
    }

    #[test]
    fn rejects_bad_params_and_dims() {
        let t = texture(20, 20, 0);
        let p = FlowParams {
            window_radius: 0,
            ..FlowParams::default()
        };
        assert!(matches!(lucas_kanade(&t, &t, &p), Err(FlowError::InvalidParams(_))));
        let other = texture(20, 24, 0);
        assert!(matches!(
            lucas_kanade(&t, &other, &FlowParams::default()),
            Err(FlowError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn tensor_solve_known_system() {
        // gradients chosen so that u = 0.5, v = -0.25 exactly
        let ix = [1.0, 0.0, 1.0];
        let iy = [0.0, 1.0, 1.0];
        let it: Vec<f64> = ix
            .iter()
            .zip(&iy)
            .map(|(gx, gy)| -(gx * 0.5 + gy * -0.25))
            .collect();
        let t = StructureTensor::from_gradients(&ix, &iy, &it);
        let (u, v) = t.solve(0.0).unwrap();
        assert!((u - 0.5).abs() < 1e-15 && (v + 0.25).abs() < 1e-15);
        assert_eq!(StructureTensor::default().solve(0.0), None);
    }

    #[test]
    fn mirror_equivariance() {
        let base = texture(64, 64, 11);
        let (seq, _) = synth::translate_sequence(&base, 0.6, -0.3, 2).unwrap();
        let (a, b) = (&seq.frames()[0], &seq.frames()[1]);
        let p = FlowParams::default();
        let f = lucas_kanade(a, b, &p).unwrap();
        let m = lucas_kanade(&a.flip_horizontal(), &b.flip_horizontal(), &p).unwrap();
        for y in 12..52 {
            for x in 12..52 {
                let (u, v, ok) = f.at(x, y);
                let (mu, mv, mok) = m.at(63 - x, y);
                assert_eq!(ok, mok);
                assert!((u + mu).abs() < 1e-9, "u at ({x},{y})");
                assert!((v - mv).abs() < 1e-9, "v at ({x},{y})");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn zero_motion_any_texture(seed in any::<u64>(), r in 1usize..6) {
            let t = texture(32, 32, seed);
            let p = FlowParams { window_radius: r, ..FlowParams::default() };
            let f = lucas_kanade(&t, &t, &p).unwrap();
            prop_assert!(f.u().iter().chain(f.v()).all(|x| *x == 0.0));
        }

        #[test]
        fn brightness_scale_invariance(seed in any::<u64>(), c in 0.2f64..=1.0) {
            let base = texture(40, 40, seed);
            let (seq, _) = synth::translate_sequence(&base, 0.4, 0.2, 2).unwrap();
            let (a, b) = (&seq.frames()[0], &seq.frames()[1]);
            let p = FlowParams { window_radius: 4, ..FlowParams::default() };
            let f = lucas_kanade(a, b, &p).unwrap();
            let g = lucas_kanade(&a.scaled(c), &b.scaled(c), &p).unwrap();
            for i in 0..f.u().len() {
                if f.valid()[i] && g.valid()[i] {
                    prop_assert!((f.u()[i] - g.u()[i]).abs() < 1e-6);
                    prop_assert!((f.v()[i] - g.v()[i]).abs() < 1e-6);
                }
            }
        }

        #[test]
        fn validity_monotone_in_threshold(seed in any::<u64>(), lo in 0.0f64..1e-3, extra in 0.0f64..1e-3) {
            let base = texture(32, 32, seed);
            let (seq, _) = synth::translate_sequence(&base, 0.5, 0.0, 2).unwrap();
            let (a, b) = (&seq.frames()[0], &seq.frames()[1]);
            let p_lo = FlowParams { eigen_threshold: lo, window_radius: 3, ..FlowParams::default() };
            let p_hi = FlowParams { eigen_threshold: lo + extra, ..p_lo };
            let f_lo = lucas_kanade(a, b, &p_lo).unwrap();
            let f_hi = lucas_kanade(a, b, &p_hi).unwrap();
            for i in 0..f_lo.valid().len() {
                prop_assert!(!f_hi.valid()[i] || f_lo.valid()[i]);
            }
        }
    }
}
