//! Hierarchical keyframe grids ("feature maps").
//!
//! Level 0 lays out every segment sorted by a criterion score in snake
//! order (left to right on even rows, right to left on odd rows), so the
//! 1D sort order stays spatially coherent. Coarser levels pick one
//! representative per 2×2 block until the grid fits the viewport.

use serde::Serialize;

/// One occupied grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapCell {
    pub segment_id: u64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridLevel {
    pub rows: usize,
    pub cols: usize,
    /// Row-major cells; `None` marks an empty position.
    pub cells: Vec<Option<MapCell>>,
}

impl GridLevel {
    pub fn get(&self, row: usize, col: usize) -> Option<&MapCell> {
        if row >= self.rows || col >= self.cols {
            return None;
        }
        self.cells[row * self.cols + col].as_ref()
    }

    pub fn occupied(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    /// Cells of the window starting at `(row0, col0)`, clipped to the level.
    /// Returns the clipped extent and the row-major cells.
    pub fn tile(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> (usize, usize, Vec<Option<MapCell>>) {
        let r1 = row0.saturating_add(rows).min(self.rows);
        let c1 = col0.saturating_add(cols).min(self.cols);
        let (r0, c0) = (row0.min(r1), col0.min(c1));
        let mut out = Vec::with_capacity((r1 - r0) * (c1 - c0));
        for r in r0..r1 {
            out.extend_from_slice(&self.cells[r * self.cols + c0..r * self.cols + c1]);
        }
        (r1 - r0, c1 - c0, out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FeatMapError {
    #[error("feature map needs at least one segment")]
    EmptyInput,
    #[error("{segments} segments but {scores} scores")]
    LengthMismatch { segments: usize, scores: usize },
    #[error("coordinate ({row}, {col}) on level {level} is out of bounds")]
    OutOfBounds { level: usize, row: usize, col: usize },
}

/// Grid position in snake order: `(row, col)` of the `i`-th sorted item.
#[inline]
pub fn snake_position(i: usize, cols: usize) -> (usize, usize) {
    let row = i / cols;
    let k = i % cols;
    (row, if row.is_multiple_of(2) { k } else { cols - 1 - k })
}

fn ceil_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r < n {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= n {
        r -= 1;
    }
    r
}

/// Lays out segments sorted by ascending `(score, segment_id)`.
pub fn build_level0(segment_ids: &[u64], scores: &[f64]) -> Result<GridLevel, FeatMapError> {
    if segment_ids.len() != scores.len() {
        return Err(FeatMapError::LengthMismatch { segments: segment_ids.len(), scores: scores.len() });
    }
    let n = segment_ids.len();
    if n == 0 {
        return Err(FeatMapError::EmptyInput);
    }
    let mut items: Vec<MapCell> =
        segment_ids.iter().zip(scores).map(|(&segment_id, &score)| MapCell { segment_id, score }).collect();
    items.sort_by(|a, b| a.score.total_cmp(&b.score).then(a.segment_id.cmp(&b.segment_id)));
    let cols = ceil_sqrt(n);
    let rows = n.div_ceil(cols);
    let mut cells = vec![None; rows * cols];
    for (i, item) in items.into_iter().enumerate() {
        let (r, c) = snake_position(i, cols);
        cells[r * cols + c] = Some(item);
    }
    Ok(GridLevel { rows, cols, cells })
}

/// Lower-median block member by `(score, segment_id)`.
fn representative(block: &mut [MapCell]) -> Option<MapCell> {
    if block.is_empty() {
        return None;
    }
    block.sort_by(|a, b| a.score.total_cmp(&b.score).then(a.segment_id.cmp(&b.segment_id)));
    Some(block[(block.len() - 1) / 2])
}

fn downsample(level: &GridLevel) -> GridLevel {
    let rows = level.rows.div_ceil(2);
    let cols = level.cols.div_ceil(2);
    let mut cells = Vec::with_capacity(rows * cols);
    let mut block = Vec::with_capacity(4);
    for r in 0..rows {
        for c in 0..cols {
            block.clear();
            for (dr, dc) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                if let Some(cell) = level.get(2 * r + dr, 2 * c + dc) {
                    block.push(*cell);
                }
            }
            cells.push(representative(&mut block));
        }
    }
    GridLevel { rows, cols, cells }
}

pub const DEFAULT_VIEWPORT: usize = 8;

/// Level 0 plus coarser levels; the last level fits the viewport.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMapPyramid {
    pub levels: Vec<GridLevel>,
    pub viewport: usize,
}

/// Coordinates of a cell on one pyramid level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MapCoord {
    pub level: usize,
    pub row: usize,
    pub col: usize,
}

/// Halves level 0 until both dimensions are at most `viewport`.
pub fn build_pyramid(level0: GridLevel, viewport: usize) -> FeatureMapPyramid {
    let viewport = viewport.max(1);
    let mut levels = vec![level0];
    loop {
        let top = levels.last().expect("at least one level");
        if top.rows <= viewport && top.cols <= viewport {
            break;
        }
        let next = downsample(top);
        levels.push(next);
    }
    FeatureMapPyramid { levels, viewport }
}

impl FeatureMapPyramid {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, level: usize) -> Option<&GridLevel> {
        self.levels.get(level)
    }

    /// Center of a cell in level-relative unit coordinates `(x, y)`.
    pub fn locate(&self, c: MapCoord) -> Result<(f64, f64), FeatMapError> {
        let lvl = self
            .levels
            .get(c.level)
            .filter(|l| c.row < l.rows && c.col < l.cols)
            .ok_or(FeatMapError::OutOfBounds { level: c.level, row: c.row, col: c.col })?;
        Ok(((c.col as f64 + 0.5) / lvl.cols as f64, (c.row as f64 + 0.5) / lvl.rows as f64))
    }

    /// Inverse of [`Self::locate`]: the cell of `level` containing `(x, y)`.
    pub fn cell_at(&self, level: usize, x: f64, y: f64) -> Option<MapCoord> {
        let lvl = self.levels.get(level)?;
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return None;
        }
        let col = ((x * lvl.cols as f64) as usize).min(lvl.cols - 1);
        let row = ((y * lvl.rows as f64) as usize).min(lvl.rows - 1);
        Some(MapCoord { level, row, col })
    }
}

/// Outward spiral over a `rows × cols` grid starting at the center cell,
/// runs of 1, 1, 2, 2, 3, 3, … cells turning right → down → left → up.
/// Positions outside the grid are skipped, so every cell appears once.
pub fn spiral_order(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let total = rows * cols;
    let mut out = Vec::with_capacity(total);
    if total == 0 {
        return out;
    }
    let (mut r, mut c) = (((rows - 1) / 2) as i64, ((cols - 1) / 2) as i64);
    out.push((r as usize, c as usize));
    const DIRS: [(i64, i64); 4] = [(0, 1), (1, 0), (0, -1), (-1, 0)];
    let mut run = 1;
    let mut dir = 0;
    while out.len() < total {
        for _ in 0..2 {
            let (dr, dc) = DIRS[dir % 4];
            for _ in 0..run {
                r += dr;
                c += dc;
                if (0..rows as i64).contains(&r) && (0..cols as i64).contains(&c) {
                    out.push((r as usize, c as usize));
                }
            }
            dir += 1;
        }
        run += 1;
    }
    out
}
