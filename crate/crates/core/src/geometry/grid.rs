use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{point_in_polygon, polygon_area, PosedScene};
use crate::scene::Scene;

/// Objects whose vertical extent meets this band block traversal.
pub const BLOCKING_Z: [f64; 2] = [0.1, 1.8];

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("cell size {0} outside (0.01, 1.0]")]
    InvalidCellSize(f64),
    #[error("floor polygon area is below one cell")]
    DegenerateFloor,
}

/// Grid cell; ordering is row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: u32,
    pub col: u32,
}

impl Cell {
    pub fn new(col: u32, row: u32) -> Self {
        Self { row, col }
    }
}

/// Traversability raster. Row 0 sits at the smallest y; column 0 at the
/// smallest x.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub origin: [f64; 2],
    pub cell_size: f64,
    pub width: usize,
    pub height: usize,
    pub traversable: Vec<bool>,
}

impl OccupancyGrid {
    pub fn from_raster(origin: [f64; 2], cell_size: f64, width: usize, height: usize, traversable: Vec<bool>) -> Self {
        assert_eq!(traversable.len(), width * height);
        Self {
            origin,
            cell_size,
            width,
            height,
            traversable,
        }
    }

    pub fn build(scene: &Scene, cell_size: f64) -> Result<Self, GridError> {
        Self::build_posed(scene, &PosedScene::new(scene), cell_size)
    }

    pub fn build_posed(scene: &Scene, posed: &PosedScene, cell_size: f64) -> Result<Self, GridError> {
        if !(cell_size > 0.01 && cell_size <= 1.0) {
            return Err(GridError::InvalidCellSize(cell_size));
        }
        let poly = &scene.floor_polygon;
        if poly.len() < 3 || polygon_area(poly) < cell_size * cell_size {
            return Err(GridError::DegenerateFloor);
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in poly {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let width = ((hi[0] - lo[0]) / cell_size - 1e-9).ceil().max(1.0) as usize;
        let height = ((hi[1] - lo[1]) / cell_size - 1e-9).ceil().max(1.0) as usize;
        let mut g = Self::from_raster(lo, cell_size, width, height, vec![false; width * height]);
        for r in 0..height {
            for c in 0..width {
                let [x, y] = g.center(Cell::new(c as u32, r as u32));
                g.traversable[r * width + c] = point_in_polygon(poly, x, y);
            }
        }
        for pi in posed.instances.iter().filter(|p| !p.structural) {
            let b = pi.aabb;
            if b.max.z < BLOCKING_Z[0] || b.min.z > BLOCKING_Z[1] {
                continue;
            }
            let c0 = (((b.min.x - lo[0]) / cell_size - 0.5).ceil().max(0.0)) as usize;
            let r0 = (((b.min.y - lo[1]) / cell_size - 0.5).ceil().max(0.0)) as usize;
            let c1 = ((b.max.x - lo[0]) / cell_size - 0.5).floor();
            let r1 = ((b.max.y - lo[1]) / cell_size - 0.5).floor();
            if c1 < 0.0 || r1 < 0.0 {
                continue;
            }
            let c1 = (c1 as usize).min(width - 1);
            let r1 = (r1 as usize).min(height - 1);
            for r in r0..=r1 {
                for c in c0..=c1 {
                    g.traversable[r * width + c] = false;
                }
            }
        }
        Ok(g)
    }

    pub fn index(&self, c: Cell) -> usize {
        c.row as usize * self.width + c.col as usize
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new((index % self.width) as u32, (index / self.width) as u32)
    }

    pub fn in_bounds(&self, col: i64, row: i64) -> bool {
        col >= 0 && row >= 0 && (col as usize) < self.width && (row as usize) < self.height
    }

    pub fn is_traversable(&self, c: Cell) -> bool {
        (c.col as usize) < self.width && (c.row as usize) < self.height && self.traversable[self.index(c)]
    }

    pub fn center(&self, c: Cell) -> [f64; 2] {
        [
            self.origin[0] + (c.col as f64 + 0.5) * self.cell_size,
            self.origin[1] + (c.row as f64 + 0.5) * self.cell_size,
        ]
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Option<Cell> {
        let c = ((x - self.origin[0]) / self.cell_size).floor();
        let r = ((y - self.origin[1]) / self.cell_size).floor();
        self.in_bounds(c as i64, r as i64).then(|| Cell::new(c as u32, r as u32))
    }

    pub fn traversable_count(&self) -> usize {
        self.traversable.iter().filter(|&&t| t).count()
    }

    pub fn traversable_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.traversable.len()).filter(|&i| self.traversable[i]).map(|i| self.cell_at(i))
    }

    /// Disc radius in cells used for a metric erosion radius.
    pub fn radius_cells(&self, radius_m: f64) -> i64 {
        (radius_m / self.cell_size - 1e-9).ceil().max(0.0) as i64
    }

    /// Morphological erosion by a disc of `ceil(radius_m / cell_size)` cells.
    /// Cells outside the raster count as blocked.
    pub fn erode(&self, radius_m: f64) -> OccupancyGrid {
        let r = self.radius_cells(radius_m.max(0.0));
        if r == 0 {
            return self.clone();
        }
        let mut offsets = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if dx * dx + dy * dy <= r * r {
                    offsets.push((dx, dy));
                }
            }
        }
        let mut out = self.clone();
        for row in 0..self.height as i64 {
            for col in 0..self.width as i64 {
                let i = row as usize * self.width + col as usize;
                if !self.traversable[i] {
                    continue;
                }
                out.traversable[i] = offsets.iter().all(|&(dx, dy)| {
                    let (c, r) = (col + dx, row + dy);
                    self.in_bounds(c, r) && self.traversable[r as usize * self.width + c as usize]
                });
            }
        }
        out
    }

    /// Keeps only the largest 8-connected traversable component (ties go to
    /// the component containing the lowest row-major index).
    pub fn largest_component(&self) -> OccupancyGrid {
        let n = self.traversable.len();
        let mut label = vec![usize::MAX; n];
        let mut best = (0usize, usize::MAX);
        let mut stack = Vec::new();
        for s in 0..n {
            if !self.traversable[s] || label[s] != usize::MAX {
                continue;
            }
            let mut size = 0;
            label[s] = s;
            stack.push(s);
            while let Some(i) = stack.pop() {
                size += 1;
                for j in super::path::neighbors(self, i).map(|(j, _)| j) {
                    if label[j] == usize::MAX {
                        label[j] = s;
                        stack.push(j);
                    }
                }
            }
            if size > best.0 {
                best = (size, s);
            }
        }
        let mut out = self.clone();
        for i in 0..n {
            out.traversable[i] = self.traversable[i] && label[i] == best.1;
        }
        out
    }

    /// Binary PGM, traversable = 255, blocked = 0. The first image row is the
    /// largest y so the picture reads north-up.
    pub fn write_pgm(&self, mut w: impl Write) -> std::io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.width, self.height)?;
        let mut buf = Vec::with_capacity(self.traversable.len());
        for r in (0..self.height).rev() {
            for c in 0..self.width {
                buf.push(if self.traversable[r * self.width + c] { 255u8 } else { 0 });
            }
        }
        w.write_all(&buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full(w: usize, h: usize) -> OccupancyGrid {
        OccupancyGrid::from_raster([0.0, 0.0], 0.1, w, h, vec![true; w * h])
    }

    #[test]
    fn erode_border() {
        let g = full(10, 10);
        assert_eq!(g.erode(0.0), g);
        let e = g.erode(0.1);
        assert_eq!(e.traversable_count(), 64);
        assert!(!e.is_traversable(Cell::new(0, 5)));
        assert!(e.is_traversable(Cell::new(1, 1)));
    }

    #[test]
    fn pgm_header_and_size() {
        let g = full(3, 2);
        let mut buf = Vec::new();
        g.write_pgm(&mut buf).unwrap();
        assert!(buf.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(buf.len(), 11 + 6);
    }

    #[test]
    fn largest_component_picks_bigger_blob() {
        let mut g = full(5, 1);
        g.traversable[2] = false;
        g.traversable[0] = true;
        g.traversable[1] = false;
        let lc = g.largest_component();
        assert_eq!(lc.traversable, vec![false, false, false, true, true]);
    }
}
