//! Grid search: A*, Dijkstra distance fields and geodesic farthest point
//! sampling. Moves are 8-connected with cost 1 or √2; a diagonal step needs
//! both adjacent orthogonal cells free.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use thiserror::Error;

use super::{Cell, OccupancyGrid};

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("no path between {0:?} and {1:?}")]
    NoPath(Cell, Cell),
    #[error("cell {0:?} is not traversable")]
    NotTraversable(Cell),
    #[error("grid has {have} traversable cells, {want} requested")]
    NotEnoughCells { have: usize, want: usize },
}

const STEPS: [(i64, i64, f64); 8] = [
    (1, 0, 1.0),
    (-1, 0, 1.0),
    (0, 1, 1.0),
    (0, -1, 1.0),
    (1, 1, SQRT_2),
    (1, -1, SQRT_2),
    (-1, 1, SQRT_2),
    (-1, -1, SQRT_2),
];

pub(crate) fn neighbors(g: &OccupancyGrid, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
    let col = (i % g.width) as i64;
    let row = (i / g.width) as i64;
    let free = move |c: i64, r: i64| g.in_bounds(c, r) && g.traversable[r as usize * g.width + c as usize];
    STEPS.iter().filter_map(move |&(dx, dy, cost)| {
        let (c, r) = (col + dx, row + dy);
        if !free(c, r) {
            return None;
        }
        if dx != 0 && dy != 0 && !(free(col + dx, row) && free(col, row + dy)) {
            return None;
        }
        Some((r as usize * g.width + c as usize, cost))
    })
}

#[derive(PartialEq)]
struct Entry {
    key: f64,
    idx: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // min-heap on key, then on index
    fn cmp(&self, o: &Self) -> Ordering {
        o.key.total_cmp(&self.key).then(o.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

fn octile(g: &OccupancyGrid, a: usize, b: usize) -> f64 {
    let dx = ((a % g.width) as i64 - (b % g.width) as i64).unsigned_abs() as f64;
    let dy = ((a / g.width) as i64 - (b / g.width) as i64).unsigned_abs() as f64;
    let (lo, hi) = if dx < dy { (dx, dy) } else { (dy, dx) };
    (hi - lo) + SQRT_2 * lo
}

/// A* shortest path including both endpoints.
pub fn shortest_path(g: &OccupancyGrid, a: Cell, b: Cell) -> Result<Vec<Cell>, PathError> {
    for c in [a, b] {
        if !g.is_traversable(c) {
            return Err(PathError::NotTraversable(c));
        }
    }
    let (s, t) = (g.index(a), g.index(b));
    let n = g.traversable.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(Entry {
        key: octile(g, s, t),
        idx: s,
    });
    while let Some(Entry { idx, .. }) = heap.pop() {
        if closed[idx] {
            continue;
        }
        if idx == t {
            let mut path = vec![g.cell_at(t)];
            let mut cur = t;
            while cur != s {
                cur = parent[cur];
                path.push(g.cell_at(cur));
            }
            path.reverse();
            return Ok(path);
        }
        closed[idx] = true;
        for (j, cost) in neighbors(g, idx) {
            let nd = dist[idx] + cost;
            if nd < dist[j] {
                dist[j] = nd;
                parent[j] = idx;
                heap.push(Entry {
                    key: nd + octile(g, j, t),
                    idx: j,
                });
            }
        }
    }
    Err(PathError::NoPath(a, b))
}

/// Sum of step costs along a cell path.
pub fn path_cost(path: &[Cell]) -> f64 {
    path.windows(2)
        .map(|w| {
            let diag = w[0].row != w[1].row && w[0].col != w[1].col;
            if diag {
                SQRT_2
            } else {
                1.0
            }
        })
        .sum()
}

/// Geodesic distance (in cells) from the nearest source to every cell;
/// infinity where unreachable or blocked.
pub fn dijkstra_distances(g: &OccupancyGrid, sources: &[Cell]) -> Vec<f64> {
    let n = g.traversable.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        if g.is_traversable(s) {
            let i = g.index(s);
            dist[i] = 0.0;
            heap.push(Entry { key: 0.0, idx: i });
        }
    }
    while let Some(Entry { key, idx }) = heap.pop() {
        if key > dist[idx] {
            continue;
        }
        for (j, cost) in neighbors(g, idx) {
            let nd = key + cost;
            if nd < dist[j] {
                dist[j] = nd;
                heap.push(Entry { key: nd, idx: j });
            }
        }
    }
    dist
}

/// Greedy geodesic farthest point sampling. The first point is the
/// traversable cell nearest the traversable centroid; each next point
/// maximizes its geodesic distance to the chosen set (unreachable counts as
/// infinitely far). Ties go to the lowest row-major index, so `_seed` has no
/// effect.
pub fn farthest_point_sampling(g: &OccupancyGrid, k: usize, _seed: u64) -> Result<Vec<Cell>, PathError> {
    let have = g.traversable_count();
    if k == 0 || have < k {
        return Err(PathError::NotEnoughCells { have, want: k });
    }
    let (mut sx, mut sy) = (0.0, 0.0);
    for c in g.traversable_cells() {
        sx += c.col as f64;
        sy += c.row as f64;
    }
    let (mx, my) = (sx / have as f64, sy / have as f64);
    let mut first = None;
    let mut best = f64::INFINITY;
    for c in g.traversable_cells() {
        let d = (c.col as f64 - mx).powi(2) + (c.row as f64 - my).powi(2);
        if d < best {
            best = d;
            first = Some(c);
        }
    }
    let first = first.expect("at least one traversable cell");
    let mut chosen = vec![first];
    let mut min_d = dijkstra_distances(g, &[first]);
    while chosen.len() < k {
        let mut pick = usize::MAX;
        let mut far = -1.0;
        for i in 0..min_d.len() {
            if g.traversable[i] && min_d[i] > far {
                far = min_d[i];
                pick = i;
            }
        }
        let c = g.cell_at(pick);
        chosen.push(c);
        let d = dijkstra_distances(g, &[c]);
        for (m, v) in min_d.iter_mut().zip(d) {
            if v < *m {
                *m = v;
            }
        }
    }
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(w: usize, h: usize, free: Vec<bool>) -> OccupancyGrid {
        OccupancyGrid::from_raster([0.0, 0.0], 0.1, w, h, free)
    }

    #[test]
    fn trivial_paths() {
        let g = grid(10, 1, vec![true; 10]);
        let a = Cell::new(0, 0);
        assert_eq!(shortest_path(&g, a, a).unwrap(), vec![a]);
        let p = shortest_path(&g, a, Cell::new(9, 0)).unwrap();
        assert_eq!(p.len(), 10);
        assert_eq!(path_cost(&p), 9.0);
    }

    #[test]
    fn wall_with_gap() {
        let (w, h) = (9, 9);
        let mut free = vec![true; w * h];
        for r in 0..h {
            if r != 6 {
                free[r * w + 4] = false;
            }
        }
        let g = grid(w, h, free);
        let (a, b) = (Cell::new(0, 0), Cell::new(8, 0));
        let p = shortest_path(&g, a, b).unwrap();
        assert!(p.contains(&Cell::new(4, 6)));
        let d = dijkstra_distances(&g, &[a]);
        assert!((path_cost(&p) - d[g.index(b)]).abs() < 1e-9);
        let mut blocked = g.clone();
        blocked.traversable[6 * w + 4] = false;
        assert_eq!(shortest_path(&blocked, a, b), Err(PathError::NoPath(a, b)));
    }

    #[test]
    fn fps_corridor_endpoints() {
        let g = grid(10, 1, vec![true; 10]);
        let pts = farthest_point_sampling(&g, 2, 0).unwrap();
        let mut ends: Vec<u32> = pts.iter().map(|c| c.col).collect();
        ends.sort();
        // centroid 4.5: first pick is col 4, the farthest is col 9; with k = 3 col 0 follows
        assert_eq!(pts[0].col, 4);
        assert_eq!(pts[1].col, 9);
        let three = farthest_point_sampling(&g, 3, 0).unwrap();
        assert_eq!(three[2].col, 0);
        assert!(farthest_point_sampling(&g, 11, 0).is_err());
    }

    proptest! {
        #[test]
        fn astar_matches_dijkstra(bits in prop::collection::vec(prop::bool::weighted(0.7), 225), a in 0usize..225, b in 0usize..225) {
            let g = grid(15, 15, bits);
            let (ca, cb) = (g.cell_at(a), g.cell_at(b));
            prop_assume!(g.traversable[a] && g.traversable[b]);
            let d = dijkstra_distances(&g, &[ca])[b];
            match shortest_path(&g, ca, cb) {
                Ok(p) => {
                    prop_assert!(p.iter().all(|&c| g.is_traversable(c)));
                    prop_assert!((path_cost(&p) - d).abs() < 1e-9);
                }
                Err(_) => prop_assert!(d.is_infinite()),
            }
        }

        #[test]
        fn fps_is_prefix_stable(bits in prop::collection::vec(prop::bool::weighted(0.8), 100), k in 1usize..6) {
            let g = grid(10, 10, bits);
            prop_assume!(g.traversable_count() > k);
            let a = farthest_point_sampling(&g, k, 0).unwrap();
            let b = farthest_point_sampling(&g, k + 1, 0).unwrap();
            prop_assert_eq!(&a[..], &b[..k]);
        }

        #[test]
        fn erosion_is_antiextensive_and_monotone(bits in prop::collection::vec(prop::bool::weighted(0.85), 144), r in 0.0f64..0.4) {
            let g = grid(12, 12, bits);
            let e1 = g.erode(r);
            let e2 = g.erode(r + 0.1);
            for i in 0..144 {
                prop_assert!(!e1.traversable[i] || g.traversable[i]);
                prop_assert!(!e2.traversable[i] || e1.traversable[i]);
            }
        }
    }
}
