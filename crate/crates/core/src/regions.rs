//! Grid segmentation of the frame and named facial regions built from
//! grid cells.
//!
//! The default layout is a 6-row × 4-column grid over a frontal face with
//! three regions: `eyes_eyebrows`, `cheeks` and `mouth`. The layout ships
//! as data (`default.regions`) rather than code.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub const DEFAULT_ROWS: usize = 6;
pub const DEFAULT_COLS: usize = 4;

/// Contents of the bundled `default.regions` file.
pub const DEFAULT_REGIONS: &str = include_str!("../default.regions");

/// Canonical region order, used to break ranking ties.
pub const CANONICAL_ORDER: [&str; 3] = ["eyes_eyebrows", "cheeks", "mouth"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegionError {
    #[error("degenerate grid: {rows}x{cols} cells do not fit a {width}x{height} frame")]
    DegenerateGrid {
        width: usize,
        height: usize,
        rows: usize,
        cols: usize,
    },
    #[error("pixel ({x}, {y}) outside {width}x{height} frame")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
    #[error("unknown region '{0}'")]
    UnknownRegion(String),
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("cell r{}c{} assigned to both '{first}' and '{second}'", cell.0, cell.1)]
    OverlappingCells {
        cell: (usize, usize),
        first: String,
        second: String,
    },
    #[error("cell r{}c{} of region '{region}' outside a {rows}x{cols} grid", cell.0, cell.1)]
    CellOutOfGrid {
        region: String,
        cell: (usize, usize),
        rows: usize,
        cols: usize,
    },
    #[error("region '{0}' defined more than once")]
    DuplicateRegion(String),
    #[error("region map is defined on a {map_rows}x{map_cols} grid, not {rows}x{cols}")]
    ShapeMismatch {
        map_rows: usize,
        map_cols: usize,
        rows: usize,
        cols: usize,
    },
    #[error("grid {grid_w}x{grid_h} does not match {width}x{height} frames")]
    GridMismatch {
        grid_w: usize,
        grid_h: usize,
        width: usize,
        height: usize,
    },
}

/// Cell geometry. Cells are `⌊width/cols⌋ × ⌊height/rows⌋` except the last
/// row and column, which absorb the remainder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    width: usize,
    height: usize,
    rows: usize,
    cols: usize,
}

pub fn make_grid(width: usize, height: usize, rows: usize, cols: usize) -> Result<GridSpec, RegionError> {
    if rows == 0 || cols == 0 || width < cols || height < rows {
        return Err(RegionError::DegenerateGrid {
            width,
            height,
            rows,
            cols,
        });
    }
    Ok(GridSpec {
        width,
        height,
        rows,
        cols,
    })
}

impl GridSpec {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn cell_w(&self) -> usize {
        self.width / self.cols
    }

    fn cell_h(&self) -> usize {
        self.height / self.rows
    }

    /// Half-open pixel range `x0..x1` of column `col`.
    pub fn col_range(&self, col: usize) -> std::ops::Range<usize> {
        let start = col * self.cell_w();
        let end = if col + 1 == self.cols {
            self.width
        } else {
            start + self.cell_w()
        };
        start..end
    }

    pub fn row_range(&self, row: usize) -> std::ops::Range<usize> {
        let start = row * self.cell_h();
        let end = if row + 1 == self.rows {
            self.height
        } else {
            start + self.cell_h()
        };
        start..end
    }

    /// Smallest cell side, in pixels.
    pub fn min_cell_size(&self) -> usize {
        self.cell_w().min(self.cell_h())
    }

    pub fn cell_of_pixel(&self, x: usize, y: usize) -> Result<(usize, usize), RegionError> {
        if x >= self.width || y >= self.height {
            return Err(RegionError::OutOfBounds {
                x,
                y,
                width: self.width,
                height: self.height,
            });
        }
        let row = (y / self.cell_h()).min(self.rows - 1);
        let col = (x / self.cell_w()).min(self.cols - 1);
        Ok((row, col))
    }
}

/// Boolean raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl PixelMask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// A named set of grid cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub name: String,
    pub cells: BTreeSet<(usize, usize)>,
}

/// Ordered, disjoint named regions over a `rows × cols` grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMap {
    rows: usize,
    cols: usize,
    regions: Vec<Region>,
}

impl RegionMap {
    pub fn new(rows: usize, cols: usize, regions: Vec<Region>) -> Result<Self, RegionError> {
        let mut owner: std::collections::BTreeMap<(usize, usize), &str> = Default::default();
        for (i, region) in regions.iter().enumerate() {
            if regions[..i].iter().any(|r| r.name == region.name) {
                return Err(RegionError::DuplicateRegion(region.name.clone()));
            }
            for &cell in &region.cells {
                if cell.0 >= rows || cell.1 >= cols {
                    return Err(RegionError::CellOutOfGrid {
                        region: region.name.clone(),
                        cell,
                        rows,
                        cols,
                    });
                }
                if let Some(first) = owner.insert(cell, &region.name) {
                    return Err(RegionError::OverlappingCells {
                        cell,
                        first: first.to_string(),
                        second: region.name.clone(),
                    });
                }
            }
        }
        Ok(Self {
            rows,
            cols,
            regions,
        })
    }

    /// The bundled three-region layout on the 6×4 grid.
    pub fn default_layout() -> Self {
        parse_region_map(DEFAULT_REGIONS, DEFAULT_ROWS, DEFAULT_COLS)
            .expect("bundled region map is valid")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.regions.iter().map(|r| r.name.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.name == name)
    }

    /// Checks that the map's grid shape agrees with `grid`.
    pub fn check_grid(&self, grid: &GridSpec) -> Result<(), RegionError> {
        if grid.rows() != self.rows || grid.cols() != self.cols {
            return Err(RegionError::ShapeMismatch {
                map_rows: self.rows,
                map_cols: self.cols,
                rows: grid.rows(),
                cols: grid.cols(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for RegionMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for region in &self.regions {
            write!(f, "region {} =", region.name)?;
            for (i, (r, c)) in region.cells.iter().enumerate() {
                let sep = if i == 0 { " " } else { ", " };
                write!(f, "{sep}r{r}c{c}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Pixels whose cell belongs to region `name`.
pub fn region_mask(grid: &GridSpec, map: &RegionMap, name: &str) -> Result<PixelMask, RegionError> {
    let region = map
        .get(name)
        .ok_or_else(|| RegionError::UnknownRegion(name.to_string()))?;
    let mut mask = PixelMask::empty(grid.width(), grid.height());
    for &(row, col) in &region.cells {
        if row >= grid.rows() || col >= grid.cols() {
            return Err(RegionError::CellOutOfGrid {
                region: name.to_string(),
                cell: (row, col),
                rows: grid.rows(),
                cols: grid.cols(),
            });
        }
        let xs = grid.col_range(col);
        for y in grid.row_range(row) {
            mask.data[y * grid.width() + xs.start..y * grid.width() + xs.end].fill(true);
        }
    }
    Ok(mask)
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_cell(token: &str) -> Option<(usize, usize)> {
    let rest = token.strip_prefix('r')?;
    let (row, col) = rest.split_once('c')?;
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(row) || !digits(col) {
        return None;
    }
    Some((row.parse().ok()?, col.parse().ok()?))
}

/// Parses the line format `region <name> = r<row>c<col>[, r<row>c<col> ...]`
/// with `#` comments, validating against a `rows × cols` grid.
pub fn parse_region_map(text: &str, rows: usize, cols: usize) -> Result<RegionMap, RegionError> {
    let mut regions: Vec<Region> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| RegionError::ParseError {
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let rest = line
            .strip_prefix("region")
            .filter(|r| r.starts_with(char::is_whitespace))
            .ok_or_else(|| err(format!("expected 'region <name> = ...', got '{line}'")))?;
        let (name, cells) = rest
            .split_once('=')
            .ok_or_else(|| err("missing '='".into()))?;
        let name = name.trim();
        if !is_ident(name) {
            return Err(err(format!("invalid region name '{name}'")));
        }
        let mut set = BTreeSet::new();
        let cells = cells.trim();
        if !cells.is_empty() {
            for token in cells.split(',') {
                let token = token.trim();
                let cell = parse_cell(token)
                    .ok_or_else(|| err(format!("invalid cell '{token}', expected r<row>c<col>")))?;
                set.insert(cell);
            }
        }
        if regions.iter().any(|r| r.name == name) {
            return Err(RegionError::DuplicateRegion(name.to_string()));
        }
        regions.push(Region {
            name: name.to_string(),
            cells: set,
        });
    }
    RegionMap::new(rows, cols, regions)
}
