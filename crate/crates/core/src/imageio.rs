//! Frame ingestion: binary PGM/PPM decoding, grayscale conversion and
//! ordered frame sequences.
//!
//! Intensities are normalized to `[0, 1]` at decode time so that every
//! downstream threshold is independent of bit depth.

use std::cmp::Ordering;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("unsupported maxval {0} (must be 1..=255)")]
    UnsupportedMaxval(u32),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("no frames matching '{pattern}' in {dir}")]
    EmptySequence { dir: PathBuf, pattern: String },
    #[error("dimension mismatch: expected {expected_w}x{expected_h}, found {found_w}x{found_h}")]
    DimensionMismatch {
        expected_w: usize,
        expected_h: usize,
        found_w: usize,
        found_h: usize,
    },
    #[error("invalid frame pattern '{0}'")]
    BadPattern(String),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<ImageError>,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Single-channel intensity raster, row-major, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(ImageError::InvalidImage(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(ImageError::InvalidImage(format!(
                "intensity {bad} outside [0, 1]"
            )));
        }
        Ok(Self { width, height, data })
    }

    /// Builds an image from a per-pixel function `f(x, y)`; values are
    /// clamped into `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Self { width, height, data }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    /// Crate-internal constructor for rasters produced by filters whose
    /// output is a convex combination of in-range inputs.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self { width, height, data }
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Sample with coordinates clamped to the image (replicate border).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    /// Bilinear sample at a real-valued position, replicate border.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        bilinear(&self.data, self.width, self.height, x, y)
    }

    /// Left-right mirror image.
    pub fn flip_horizontal(&self) -> Self {
        Self::from_fn(self.width, self.height, |x, y| {
            self.get(self.width - 1 - x, y)
        })
    }

    /// Multiplies every intensity by `factor`, clamping to `[0, 1]`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_raw(
            self.width,
            self.height,
            self.data.iter().map(|v| (v * factor).clamp(0.0, 1.0)).collect(),
        )
    }
}

/// Bilinear sample of a row-major raster at a real-valued position with
/// replicate border. Integer positions return the stored value exactly.
pub(crate) fn bilinear(data: &[f64], width: usize, height: usize, x: f64, y: f64) -> f64 {
    let at = |xi: isize, yi: isize| {
        let xi = xi.clamp(0, width as isize - 1) as usize;
        let yi = yi.clamp(0, height as isize - 1) as usize;
        data[yi * width + xi]
    };
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let (xi, yi) = (x0 as isize, y0 as isize);
    let a = at(xi, yi);
    if fx == 0.0 && fy == 0.0 {
        return a;
    }
    let b = at(xi + 1, yi);
    let c = at(xi, yi + 1);
    let d = at(xi + 1, yi + 1);
    let top = a + (b - a) * fx;
    let bottom = c + (d - c) * fx;
    top + (bottom - top) * fy
}

/// Interleaved 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != 3 * width * height {
            return Err(ImageError::InvalidImage(format!(
                "data length {} does not match 3x{width}x{height}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

/// Ordered frames sharing one set of dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Image>,
}

impl FrameSequence {
    pub fn new(frames: Vec<Image>) -> Result<Self, ImageError> {
        let Some(first) = frames.first() else {
            return Err(ImageError::EmptySequence {
                dir: PathBuf::new(),
                pattern: String::new(),
            });
        };
        let (w, h) = first.dims();
        for f in &frames[1..] {
            if f.dims() != (w, h) {
                return Err(ImageError::DimensionMismatch {
                    expected_w: w,
                    expected_h: h,
                    found_w: f.width(),
                    found_h: f.height(),
                });
            }
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[Image] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    pub fn get(&self, index: usize) -> Option<&Image> {
        self.frames.get(index)
    }
}

// ---------------------------------------------------------------------------
// Netpbm decoding
// ---------------------------------------------------------------------------

struct Header {
    width: usize,
    height: usize,
    maxval: u32,
    payload_offset: usize,
}

fn parse_header(bytes: &[u8], magic: &[u8; 2]) -> Result<Header, ImageError> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        let found = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
        return Err(ImageError::MalformedHeader(format!(
            "expected magic {}, found {found:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for (i, field) in fields.iter_mut().enumerate() {
        // whitespace and '#' comments may separate tokens
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(pos) {
                        pos += 1;
                        if b == b'\n' || b == b'\r' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        if i == 0 && pos == 2 {
            return Err(ImageError::MalformedHeader(
                "missing whitespace after magic".into(),
            ));
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(ImageError::MalformedHeader(format!(
                "expected a decimal number at byte {start}"
            )));
        }
        let token = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = token
            .parse()
            .map_err(|_| ImageError::MalformedHeader(format!("number {token} out of range")))?;
    }
    // exactly one whitespace byte separates maxval from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(ImageError::MalformedHeader(
                "missing whitespace after maxval".into(),
            ))
        }
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(ImageError::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval == 0 {
        return Err(ImageError::MalformedHeader("maxval is zero".into()));
    }
    if maxval > 255 {
        return Err(ImageError::UnsupportedMaxval(
            maxval.min(u32::MAX as u64) as u32,
        ));
    }
    Ok(Header {
        width: width as usize,
        height: height as usize,
        maxval: maxval as u32,
        payload_offset: pos,
    })
}

fn payload<'a>(bytes: &'a [u8], header: &Header, channels: usize) -> Result<&'a [u8], ImageError> {
    let expected = header
        .width
        .checked_mul(header.height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| ImageError::MalformedHeader("dimensions overflow".into()))?;
    let body = &bytes[header.payload_offset..];
    if body.len() < expected {
        return Err(ImageError::TruncatedPayload {
            expected,
            found: body.len(),
        });
    }
    Ok(&body[..expected])
}

/// Decodes a binary (P5) graymap; samples are divided by maxval.
pub fn decode_pgm(bytes: &[u8]) -> Result<Image, ImageError> {
    let header = parse_header(bytes, b"P5")?;
    let raw = payload(bytes, &header, 1)?;
    let maxval = header.maxval as f64;
    let data = raw
        .iter()
        .map(|&b| (b as f64 / maxval).min(1.0))
        .collect();
    Ok(Image::from_raw(header.width, header.height, data))
}

/// Decodes a binary (P6) pixmap. Bytes are kept verbatim; samples above
/// a maxval below 255 are not rescaled.
pub fn decode_ppm(bytes: &[u8]) -> Result<RgbImage, ImageError> {
    let header = parse_header(bytes, b"P6")?;
    let raw = payload(bytes, &header, 3)?;
    Ok(RgbImage {
        width: header.width,
        height: header.height,
        data: raw.to_vec(),
    })
}

/// Encodes an image as an 8-bit P5 graymap (maxval 255).
pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.data.iter().map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8));
    out
}

pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

const LUMA_R: f64 = 0.299;
const LUMA_G: f64 = 0.587;
const LUMA_B: f64 = 0.114;

/// BT.601 luma, normalized to `[0, 1]`.
pub fn rgb_to_gray(img: &RgbImage) -> Image {
    let data = img
        .data
        .chunks_exact(3)
        .map(|px| {
            let (r, g, b) = (px[0], px[1], px[2]);
            if r == g && g == b {
                // coefficients sum to one; skip the rounding they introduce
                return r as f64 / 255.0;
            }
            ((LUMA_R * r as f64 + LUMA_G * g as f64 + LUMA_B * b as f64) / 255.0).clamp(0.0, 1.0)
        })
        .collect();
    Image::from_raw(img.width, img.height, data)
}

/// Decodes either a P5 or a P6 buffer into a grayscale image.
pub fn decode_any(bytes: &[u8]) -> Result<Image, ImageError> {
    match bytes.get(..2) {
        Some(b"P6") => decode_ppm(bytes).map(|rgb| rgb_to_gray(&rgb)),
        _ => decode_pgm(bytes),
    }
}

pub fn read_image(path: &Path) -> Result<Image, ImageError> {
    let bytes = fs::read(path).map_err(|source| ImageError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_any(&bytes).map_err(|e| ImageError::File {
        path: path.to_path_buf(),
        source: Box::new(e),
    })
}

pub fn write_pgm(path: &Path, img: &Image) -> Result<(), ImageError> {
    fs::write(path, encode_pgm(img)).map_err(|source| ImageError::Io {
        path: path.to_path_buf(),
        source,
    })
}

// ---------------------------------------------------------------------------
// Sequences
// ---------------------------------------------------------------------------

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Chunk<'a> {
    Num(u128, usize),
    Text(&'a str),
}

fn natural_chunks(s: &str) -> Vec<Chunk<'_>> {
    let mut out = Vec::new();
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let start = i;
        let digit = bytes[i].is_ascii_digit();
        while i < bytes.len() && bytes[i].is_ascii_digit() == digit {
            i += 1;
        }
        let part = &s[start..i];
        out.push(match part.parse::<u128>() {
            // leading-zero count breaks ties between "01" and "1"
            Ok(n) if digit => Chunk::Num(n, part.len()),
            _ => Chunk::Text(part),
        });
    }
    out
}

/// Natural ordering: digit runs compare by numeric value, so `frame2`
/// sorts before `frame10`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    natural_chunks(a).cmp(&natural_chunks(b)).then_with(|| a.cmp(b))
}

/// Loads every file in `dir` whose name matches the glob `pattern`,
/// ordered naturally by filename. PPM frames are converted to gray.
pub fn load_sequence(dir: &Path, pattern: &str) -> Result<FrameSequence, ImageError> {
    let matcher =
        glob::Pattern::new(pattern).map_err(|_| ImageError::BadPattern(pattern.to_string()))?;
    let entries = fs::read_dir(dir).map_err(|source| ImageError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| ImageError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        if !entry.path().is_file() {
            continue;
        }
        if let Some(name) = entry.file_name().to_str() {
            if matcher.matches(name) {
                names.push(name.to_string());
            }
        }
    }
    if names.is_empty() {
        return Err(ImageError::EmptySequence {
            dir: dir.to_path_buf(),
            pattern: pattern.to_string(),
        });
    }
    names.sort_by(|a, b| natural_cmp(a, b));

    let frames = names
        .par_iter()
        .map(|name| read_image(&dir.join(name)))
        .collect::<Result<Vec<_>, _>>()?;

    let (w, h) = frames[0].dims();
    for (name, f) in names.iter().zip(&frames) {
        if f.dims() != (w, h) {
            return Err(ImageError::File {
                path: dir.join(name),
                source: Box::new(ImageError::DimensionMismatch {
                    expected_w: w,
                    expected_h: h,
                    found_w: f.width(),
                    found_h: f.height(),
                }),
            });
        }
    }
    FrameSequence::new(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pgm(header: &str, payload: &[u8]) -> Vec<u8> {
        let mut v = header.as_bytes().to_vec();
        v.extend_from_slice(payload);
        v
    }

    #[test]
    fn decode_pgm_normalizes() {
        let img = decode_pgm(&pgm("P5 2 2 255\n", &[0, 255, 128, 64])).unwrap();
        assert_eq!(img.dims(), (2, 2));
        assert_eq!(img.data(), &[0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0]);
    }

    #[test]
    fn decode_pgm_with_comments_and_small_maxval() {
        let img = decode_pgm(&pgm("P5\n# made by hand\n3 # width\n1\n#m\n4\n", &[0, 2, 4])).unwrap();
        assert_eq!(img.data(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn decode_pgm_errors() {
        assert!(matches!(
            decode_pgm(&pgm("P6 1 1 255\n", &[1, 2, 3])),
            Err(ImageError::MalformedHeader(_))
        ));
        assert!(matches!(
            decode_pgm(&pgm("P5 x 1 255\n", &[1])),
            Err(ImageError::MalformedHeader(_))
        ));
        assert!(matches!(
            decode_pgm(&pgm("P5 3 1 255\n", &[1, 2])),
            Err(ImageError::TruncatedPayload { expected: 3, found: 2 })
        ));
        assert!(matches!(
            decode_pgm(&pgm("P5 1 1 65535\n", &[0, 0])),
            Err(ImageError::UnsupportedMaxval(65535))
        ));
        assert!(matches!(decode_pgm(b"P5"), Err(ImageError::MalformedHeader(_))));
    }

    #[test]
    fn decode_ppm_cases() {
        let rgb = decode_ppm(&pgm("P6 1 1 255\n", &[255, 0, 0])).unwrap();
        assert_eq!((rgb.width(), rgb.height()), (1, 1));
        assert_eq!(rgb.pixel(0, 0), [255, 0, 0]);
        assert!(matches!(
            decode_ppm(&pgm("P6 2 1 255\n", &[1, 2, 3])),
            Err(ImageError::TruncatedPayload { expected: 6, found: 3 })
        ));
        assert!(matches!(
            decode_ppm(&pgm("P5 1 1 255\n", &[1])),
            Err(ImageError::MalformedHeader(_))
        ));
    }

    #[test]
    fn gray_conversion() {
        let rgb = RgbImage::new(3, 1, vec![255, 255, 255, 0, 0, 0, 255, 0, 0]).unwrap();
        let g = rgb_to_gray(&rgb);
        assert_eq!(g.data()[0], 1.0);
        assert_eq!(g.data()[1], 0.0);
        assert!((g.data()[2] - 0.299).abs() < 1e-15);
    }

    #[test]
    fn natural_sort() {
        let mut v = vec!["f10.pgm", "f2.pgm", "f1.pgm", "f010.pgm", "a.pgm"];
        v.sort_by(|a, b| natural_cmp(a, b));
        assert_eq!(v, ["a.pgm", "f1.pgm", "f2.pgm", "f10.pgm", "f010.pgm"]);
    }

    #[test]
    fn bilinear_half_offset() {
        let img = Image::new(2, 1, vec![0.2, 0.6]).unwrap();
        assert!((img.sample_bilinear(0.5, 0.0) - 0.4).abs() < 1e-15);
        assert_eq!(img.sample_bilinear(-3.0, 0.0), 0.2);
        assert_eq!(img.sample_bilinear(7.5, 2.0), 0.6);
    }

    #[test]
    fn image_new_validates() {
        assert!(Image::new(2, 2, vec![0.0; 3]).is_err());
        assert!(Image::new(1, 1, vec![1.5]).is_err());
        assert!(Image::new(0, 1, vec![]).is_err());
    }

    proptest! {
        #[test]
        fn pgm_round_trip((w, h, payload) in (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
            (Just(w), Just(h), proptest::collection::vec(any::<u8>(), w * h))
        })) {
            let bytes = pgm(&format!("P5\n{w} {h}\n255\n"), &payload);
            let img = decode_pgm(&bytes).unwrap();
            prop_assert_eq!(encode_pgm(&img), bytes);
        }

        #[test]
        fn gray_in_range(r in any::<u8>(), g in any::<u8>(), b in any::<u8>(), k in any::<u8>()) {
            let img = rgb_to_gray(&RgbImage::new(2, 1, vec![r, g, b, k, k, k]).unwrap());
            prop_assert!((0.0..=1.0).contains(&img.data()[0]));
            prop_assert_eq!(img.data()[1], k as f64 / 255.0);
        }
    }
}
