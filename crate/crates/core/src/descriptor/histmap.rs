//! Spatial palette histograms ("HistMaps") and sketch queries.

use std::io::{self, Read, Write};

use crate::ingest::Raster;

/// Cells per side of the descriptor grid.
pub const GRID: usize = 4;
/// Number of cells.
pub const CELLS: usize = GRID * GRID;
/// Histogram bins per cell (one per palette color).
pub const BINS: usize = 16;

/// The fixed 16-color palette. Index order is part of the file format.
pub const PALETTE: [[u8; 3]; BINS] = [
    [0, 0, 0],       // black
    [255, 255, 255], // white
    [128, 128, 128], // gray
    [192, 192, 192], // silver
    [255, 0, 0],     // red
    [128, 0, 0],     // maroon
    [255, 255, 0],   // yellow
    [128, 128, 0],   // olive
    [0, 255, 0],     // lime
    [0, 128, 0],     // green
    [0, 255, 255],   // cyan
    [0, 128, 128],   // teal
    [0, 0, 255],     // blue
    [0, 0, 128],     // navy
    [255, 0, 255],   // magenta
    [128, 0, 128],   // purple
];

pub const PALETTE_NAMES: [&str; BINS] = [
    "black", "white", "gray", "silver", "red", "maroon", "yellow", "olive", "lime", "green", "cyan", "teal", "blue",
    "navy", "magenta", "purple",
];

/// Nearest palette entry by squared RGB distance; ties go to the lower index.
#[inline]
pub fn quantize(rgb: [u8; 3]) -> usize {
    let mut best = 0;
    let mut best_d = u32::MAX;
    for (i, p) in PALETTE.iter().enumerate() {
        let d: u32 = (0..3)
            .map(|c| {
                let diff = i32::from(rgb[c]) - i32::from(p[c]);
                (diff * diff) as u32
            })
            .sum();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// A GRID×GRID array of per-cell palette histograms, each summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct HistMap {
    cells: [[f64; BINS]; CELLS],
}

/// Which cells take part in a comparison. Row-major, `cell = row * GRID + col`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellMask([bool; CELLS]);

impl CellMask {
    pub const FULL: CellMask = CellMask([true; CELLS]);

    pub fn new(cells: [bool; CELLS]) -> Self {
        Self(cells)
    }

    pub fn is_set(&self, cell: usize) -> bool {
        self.0[cell]
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..CELLS).filter(|&c| self.0[c])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DescriptorError {
    #[error("raster {width}x{height} is smaller than the {GRID}x{GRID} descriptor grid")]
    RasterTooSmall { width: usize, height: usize },
    #[error("comparison mask selects no cell")]
    EmptyMask,
    #[error("sketch has no painted cell")]
    AllBlank,
    #[error("palette index {0} out of range")]
    BadPaletteIndex(usize),
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
}

/// Pixel span `[lo, hi)` of grid band `i` over an axis of `len` pixels.
#[inline]
fn band(i: usize, len: usize) -> (usize, usize) {
    (i * len / GRID, (i + 1) * len / GRID)
}

/// Computes the HistMap of a raster at least GRID pixels on each side.
pub fn compute_histmap(r: &Raster) -> Result<HistMap, DescriptorError> {
    let (w, h) = (r.width(), r.height());
    if w < GRID || h < GRID {
        return Err(DescriptorError::RasterTooSmall { width: w, height: h });
    }
    let mut cells = [[0.0; BINS]; CELLS];
    for row in 0..GRID {
        let (y0, y1) = band(row, h);
        for col in 0..GRID {
            let (x0, x1) = band(col, w);
            let mut counts = [0u32; BINS];
            for y in y0..y1 {
                for x in x0..x1 {
                    counts[quantize(r.pixel(x, y))] += 1;
                }
            }
            let total = ((y1 - y0) * (x1 - x0)) as f64;
            let cell = &mut cells[row * GRID + col];
            for (bin, &c) in cell.iter_mut().zip(&counts) {
                *bin = f64::from(c) / total;
            }
        }
    }
    Ok(HistMap { cells })
}

impl HistMap {
    /// Builds a HistMap from explicit per-cell histograms, renormalizing
    /// each cell. Cells with zero mass are rejected.
    pub fn from_cells(cells: [[f64; BINS]; CELLS]) -> Option<Self> {
        let mut out = cells;
        for cell in &mut out {
            if cell.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return None;
            }
            let sum: f64 = cell.iter().sum();
            if sum <= 0.0 {
                return None;
            }
            cell.iter_mut().for_each(|v| *v /= sum);
        }
        Some(Self { cells: out })
    }

    pub fn cell(&self, cell: usize) -> &[f64; BINS] {
        &self.cells[cell]
    }

    pub fn cells(&self) -> &[[f64; BINS]; CELLS] {
        &self.cells
    }
}

/// Total-variation distance between two histograms.
#[inline]
fn cell_tv(a: &[f64; BINS], b: &[f64; BINS]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Mean per-cell total-variation distance over the masked cells.
pub fn histmap_distance(a: &HistMap, b: &HistMap, mask: &CellMask) -> Result<f64, DescriptorError> {
    let n = mask.count();
    if n == 0 {
        return Err(DescriptorError::EmptyMask);
    }
    let sum: f64 = mask.cells().map(|c| cell_tv(&a.cells[c], &b.cells[c])).sum();
    Ok(sum / n as f64)
}

/// A hand-drawn query: painted cells carry a one-hot histogram, blank
/// cells are masked out.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchHistMap {
    pub histmap: HistMap,
    pub mask: CellMask,
}

impl SketchHistMap {
    /// Uses a full keyframe descriptor as a query over every cell.
    pub fn from_histmap(histmap: HistMap) -> Self {
        Self { histmap, mask: CellMask::FULL }
    }
}

/// Converts a painted canvas (row-major, `None` = blank) to a sketch query.
pub fn sketch_to_histmap(canvas: &[Option<usize>; CELLS]) -> Result<SketchHistMap, DescriptorError> {
    let mut cells = [[0.0; BINS]; CELLS];
    let mut mask = [false; CELLS];
    for (i, c) in canvas.iter().enumerate() {
        match *c {
            Some(p) if p >= BINS => return Err(DescriptorError::BadPaletteIndex(p)),
            Some(p) => {
                cells[i][p] = 1.0;
                mask[i] = true;
            }
            // blank cells are never compared; keep them a valid distribution
            None => cells[i][0] = 1.0,
        }
    }
    if !mask.contains(&true) {
        return Err(DescriptorError::AllBlank);
    }
    Ok(SketchHistMap { histmap: HistMap { cells }, mask: CellMask(mask) })
}

const MAGIC: &[u8; 4] = b"HMAP";
const VERSION: u32 = 1;

/// Writes descriptors in the `histmaps.bin` layout: magic `HMAP`, then
/// little-endian u32 version, G, K, count, then per entry a u64 segment id
/// followed by G·G·K f32 values.
pub fn write_histmaps<W: Write>(mut w: W, entries: &[(u64, HistMap)]) -> io::Result<()> {
    w.write_all(MAGIC)?;
    for v in [VERSION, GRID as u32, BINS as u32, entries.len() as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    for (id, hm) in entries {
        w.write_all(&id.to_le_bytes())?;
        for cell in &hm.cells {
            for &v in cell {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
        }
    }
    Ok(())
}

/// Reads a `histmaps.bin` stream. Values are widened from f32, so cell sums
/// hold only to f32 precision.
pub fn read_histmaps<R: Read>(mut r: R) -> io::Result<Vec<(u64, HistMap)>> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let mut u32s = [0u32; 4];
    for v in &mut u32s {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        *v = u32::from_le_bytes(b);
    }
    let [version, g, k, count] = u32s;
    if version != VERSION {
        return Err(bad("unsupported version"));
    }
    if g as usize != GRID || k as usize != BINS {
        return Err(bad("grid or palette size mismatch"));
    }
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let mut id = [0u8; 8];
        r.read_exact(&mut id)?;
        let mut cells = [[0.0; BINS]; CELLS];
        for cell in &mut cells {
            for v in cell.iter_mut() {
                let mut b = [0u8; 4];
                r.read_exact(&mut b)?;
                *v = f64::from(f32::from_le_bytes(b));
            }
        }
        out.push((u64::from_le_bytes(id), HistMap { cells }));
    }
    Ok(out)
}
