//! Coarse-to-fine refinement for displacements beyond the ~1 px range of
//! the single-level solver.

use rayon::prelude::*;

use super::{check_dims, lucas_kanade, FlowError, FlowField, FlowParams};
use crate::imageio::{bilinear, Image};

/// Halves each dimension with a 2×2 box average. Odd trailing rows and
/// columns are dropped.
pub fn downsample(img: &Image) -> Image {
    let (w, h) = img.dims();
    let (cw, ch) = ((w / 2).max(1), (h / 2).max(1));
    let data = (0..cw * ch)
        .map(|i| {
            let (x, y) = ((i % cw) as isize * 2, (i / cw) as isize * 2);
            0.25 * (img.get_clamped(x, y)
                + img.get_clamped(x + 1, y)
                + img.get_clamped(x, y + 1)
                + img.get_clamped(x + 1, y + 1))
        })
        .collect();
    Image::from_raw(cw, ch, data)
}

/// Resamples a coarse flow field onto a `width × height` grid one level
/// finer, doubling the displacements.
pub fn upsample_flow(
    u: &[f64],
    v: &[f64],
    coarse_w: usize,
    coarse_h: usize,
    width: usize,
    height: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut fu = vec![0.0; width * height];
    let mut fv = vec![0.0; width * height];
    for y in 0..height {
        let cy = (y as f64 + 0.5) * 0.5 - 0.5;
        for x in 0..width {
            let cx = (x as f64 + 0.5) * 0.5 - 0.5;
            fu[y * width + x] = 2.0 * bilinear(u, coarse_w, coarse_h, cx, cy);
            fv[y * width + x] = 2.0 * bilinear(v, coarse_w, coarse_h, cx, cy);
        }
    }
    (fu, fv)
}

/// Backward warp: `out(x, y) = img(x + u(x, y), y + v(x, y))`, bilinear
/// with replicate border.
pub fn warp(img: &Image, u: &[f64], v: &[f64]) -> Image {
    let (w, h) = img.dims();
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let i = y * w + x;
            *o = img.sample_bilinear(x as f64 + u[i], y as f64 + v[i]);
        }
    });
    Image::from_raw(w, h, out)
}

/// Pyramidal Lucas-Kanade. With a single level this is exactly
/// [`lucas_kanade`].
pub fn pyramidal_lk(i1: &Image, i2: &Image, p: &FlowParams) -> Result<FlowField, FlowError> {
    p.validate()?;
    check_dims(i1, i2)?;
    let levels = p.pyramid_levels;
    let min_dim = i1.width().min(i1.height());
    let required = 1usize
        .checked_shl((levels - 1) as u32)
        .and_then(|s| s.checked_mul(2 * p.window_radius + 1))
        .unwrap_or(usize::MAX);
    if min_dim < required {
        return Err(FlowError::PyramidTooDeep {
            levels,
            radius: p.window_radius,
            min_dim,
            required,
        });
    }
    if levels == 1 {
        return lucas_kanade(i1, i2, p);
    }

    let mut first = vec![i1.clone()];
    let mut second = vec![i2.clone()];
    for _ in 1..levels {
        first.push(downsample(first.last().unwrap()));
        second.push(downsample(second.last().unwrap()));
    }

    let mut estimate: Option<FlowField> = None;
    for level in (0..levels).rev() {
        let (a, b) = (&first[level], &second[level]);
        let (w, h) = a.dims();
        let Some(coarse) = estimate.take() else {
            estimate = Some(lucas_kanade(a, b, p)?);
            continue;
        };
        let (mut u, mut v) =
            upsample_flow(coarse.u(), coarse.v(), coarse.width(), coarse.height(), w, h);
        let warped = warp(b, &u, &v);
        let residual = lucas_kanade(a, &warped, p)?;
        for i in 0..w * h {
            if residual.valid()[i] {
                u[i] += residual.u()[i];
                v[i] += residual.v()[i];
            }
        }
        let valid = if level == 0 {
            residual.valid().to_vec()
        } else {
            // intermediate levels keep the propagated estimate everywhere
            vec![true; w * h]
        };
        estimate = Some(FlowField::new(w, h, u, v, valid));
    }
    Ok(estimate.expect("at least one level"))
}
