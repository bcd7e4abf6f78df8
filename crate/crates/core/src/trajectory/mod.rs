//! Scene traversal: keypoints on the eroded traversal map, a 360° visibility
//! sweep at each, greedy coverage selection, open-path TSP ordering and the
//! frame-by-frame camera schedule.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{PI, TAU};
use std::path::Path;

use nalgebra::{Point3, Vector3};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    dijkstra_distances, farthest_point_sampling, shortest_path, wrap_angle, Cell, OccupancyGrid, PathError, Pose,
    PosedScene,
};
use crate::io::write_atomic;
use crate::labels::{frame_record, frame_scene_graph, ClipLabels, ClipWriter, Evaluator, LabelError};
use crate::render::{render, trace, yaw_pitch_pose, CameraIntrinsics};
use crate::scene::InstanceId;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("eroded grid has {have} traversable cells, {want} keypoints requested")]
    NotEnoughCells { have: usize, want: usize },
    #[error("waypoints {0} and {1} are not connected")]
    Disconnected(usize, usize),
    #[error("no waypoints")]
    Empty,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad trajectory file: {0}")]
    Format(String),
}

/// Probe used by the visibility sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_yaw: usize,
    pub width: u32,
    pub height: u32,
    pub hfov: f64,
    /// Pixels an instance needs in the probe to count as visible.
    pub min_pixels: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_yaw: 36,
            width: 160,
            height: 120,
            hfov: 60f64.to_radians(),
            min_pixels: 20,
        }
    }
}

impl SweepConfig {
    pub fn intrinsics(&self) -> CameraIntrinsics {
        CameraIntrinsics::from_hfov(self.width, self.height, self.hfov)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub cell: Cell,
    pub position: Point3<f64>,
    pub best_yaw: f64,
    pub visible_set: BTreeSet<InstanceId>,
}

/// Instances with at least `min_pixels` pixels in one probe view.
pub fn probe_visible(scene: &PosedScene, pose: &Pose, sweep: &SweepConfig) -> BTreeSet<InstanceId> {
    let pass = trace(scene, pose, &sweep.intrinsics(), None);
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    for &i in &pass.instance {
        if i != u32::MAX {
            *counts.entry(i).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .filter(|&(_, c)| c >= sweep.min_pixels)
        .map(|(i, _)| scene.instances[i as usize].instance_id)
        .collect()
}

/// Yaw of sweep step `i`.
pub fn sweep_yaw(i: usize, n: usize) -> f64 {
    TAU * i as f64 / n as f64
}

/// Sweeps all yaws at `position` and returns the best yaw with its visible
/// set; ties keep the smaller yaw.
pub fn sweep(scene: &PosedScene, position: Point3<f64>, sweep_cfg: &SweepConfig) -> (f64, BTreeSet<InstanceId>) {
    let mut best: Option<(f64, BTreeSet<InstanceId>)> = None;
    for i in 0..sweep_cfg.n_yaw {
        let yaw = sweep_yaw(i, sweep_cfg.n_yaw);
        let vis = probe_visible(scene, &yaw_pitch_pose(position, yaw, 0.0), sweep_cfg);
        if best.as_ref().is_none_or(|(_, b)| vis.len() > b.len()) {
            best = Some((yaw, vis));
        }
    }
    best.expect("n_yaw >= 1")
}

/// The eroded map keypoints are drawn from: `grid` eroded by `erosion_m`,
/// reduced to its largest connected component.
pub fn keypoint_grid(grid: &OccupancyGrid, erosion_m: f64) -> OccupancyGrid {
    grid.erode(erosion_m).largest_component()
}

/// Farthest-point keypoints on the eroded map, each with its sweep result.
pub fn candidate_keypoints(
    scene: &PosedScene,
    grid: &OccupancyGrid,
    erosion_m: f64,
    k: usize,
    camera_height: f64,
    sweep_cfg: &SweepConfig,
) -> Result<Vec<Waypoint>, TrajectoryError> {
    let eroded = keypoint_grid(grid, erosion_m);
    let cells = farthest_point_sampling(&eroded, k, 0).map_err(|e| match e {
        PathError::NotEnoughCells { have, want } => TrajectoryError::NotEnoughCells { have, want },
        _ => TrajectoryError::NotEnoughCells { have: 0, want: k },
    })?;
    Ok(cells
        .par_iter()
        .map(|&cell| {
            let [x, y] = eroded.center(cell);
            let position = Point3::new(x, y, camera_height);
            let (best_yaw, visible_set) = sweep(scene, position, sweep_cfg);
            Waypoint {
                cell,
                position,
                best_yaw,
                visible_set,
            }
        })
        .collect())
}

/// Visits the candidates in a seeded random order and keeps each one that
/// sees an instance no kept waypoint sees.
pub fn select_waypoints(candidates: &[Waypoint], seed: u64) -> Vec<Waypoint> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut seen: BTreeSet<InstanceId> = BTreeSet::new();
    let mut kept = Vec::new();
    for i in order {
        let c = &candidates[i];
        if kept.is_empty() || !c.visible_set.is_subset(&seen) {
            seen.extend(c.visible_set.iter().copied());
            kept.push(c.clone());
        }
    }
    kept
}

/// Pairwise geodesic distances in meters.
pub fn geodesic_matrix(cells: &[Cell], grid: &OccupancyGrid) -> Result<Vec<Vec<f64>>, TrajectoryError> {
    let rows: Vec<Vec<f64>> = cells
        .par_iter()
        .map(|&a| {
            let d = dijkstra_distances(grid, &[a]);
            cells.iter().map(|&b| d[grid.index(b)] * grid.cell_size).collect()
        })
        .collect();
    for (i, r) in rows.iter().enumerate() {
        if let Some(j) = r.iter().position(|d| !d.is_finite()) {
            return Err(TrajectoryError::Disconnected(i, j));
        }
    }
    Ok(rows)
}

/// Length of an open path through `order`.
pub fn path_length(order: &[usize], d: &[Vec<f64>]) -> f64 {
    order.windows(2).map(|w| d[w[0]][w[1]]).sum()
}

/// Nearest-neighbour path from every start; the shortest wins, ties to the
/// lower start index.
pub fn nearest_neighbor_path(d: &[Vec<f64>]) -> Vec<usize> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for start in 0..d.len() {
        let order = nearest_neighbor_from(d, start);
        let len = path_length(&order, d);
        if best.as_ref().is_none_or(|(b, _)| len < *b) {
            best = Some((len, order));
        }
    }
    best.map(|(_, o)| o).unwrap_or_default()
}

const IMPROVE_EPS: f64 = 1e-12;

/// Gain of reversing `order[i..=j]` in an open path.
fn two_opt_gain(order: &[usize], d: &[Vec<f64>], i: usize, j: usize) -> f64 {
    let n = order.len();
    let (a, b) = (order[i], order[j]);
    let mut before = 0.0;
    let mut after = 0.0;
    if i > 0 {
        let p = order[i - 1];
        before += d[p][a];
        after += d[p][b];
    }
    if j + 1 < n {
        let q = order[j + 1];
        before += d[b][q];
        after += d[a][q];
    }
    before - after
}

/// Applies improving segment reversals until none is left.
pub fn two_opt(order: &mut [usize], d: &[Vec<f64>]) {
    let n = order.len();
    loop {
        let mut improved = false;
        for i in 0..n {
            for j in i + 1..n {
                if two_opt_gain(order, d, i, j) > IMPROVE_EPS {
                    order[i..=j].reverse();
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// True when no single segment reversal shortens the path.
pub fn is_two_opt_optimal(order: &[usize], d: &[Vec<f64>]) -> bool {
    let n = order.len();
    (0..n).all(|i| (i + 1..n).all(|j| two_opt_gain(order, d, i, j) <= IMPROVE_EPS))
}

/// Nearest-neighbour path from a fixed start.
fn nearest_neighbor_from(d: &[Vec<f64>], start: usize) -> Vec<usize> {
    let n = d.len();
    let mut used = vec![false; n];
    let mut order = vec![start];
    used[start] = true;
    while order.len() < n {
        let cur = *order.last().expect("nonempty");
        let next = (0..n)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| d[cur][a].total_cmp(&d[cur][b]).then(a.cmp(&b)))
            .expect("unused node");
        used[next] = true;
        order.push(next);
    }
    order
}

/// Open-path TSP over a distance matrix: a nearest-neighbour path from
/// every start, each refined by 2-opt; the shortest wins, ties to the lower
/// start.
pub fn order_by_matrix(d: &[Vec<f64>]) -> Vec<usize> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for start in 0..d.len() {
        let mut order = nearest_neighbor_from(d, start);
        two_opt(&mut order, d);
        let len = path_length(&order, d);
        if best.as_ref().is_none_or(|(b, _)| len < *b - IMPROVE_EPS) {
            best = Some((len, order));
        }
    }
    best.map(|(_, o)| o).unwrap_or_default()
}

/// Visiting order of the waypoints over geodesic distances on `grid`.
pub fn order_waypoints(waypoints: &[Waypoint], grid: &OccupancyGrid) -> Result<Vec<usize>, TrajectoryError> {
    if waypoints.is_empty() {
        return Err(TrajectoryError::Empty);
    }
    let cells: Vec<Cell> = waypoints.iter().map(|w| w.cell).collect();
    let d = geodesic_matrix(&cells, grid)?;
    Ok(order_by_matrix(&d))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryParams {
    pub fps: f64,
    /// Meters per second.
    pub move_speed: f64,
    /// Radians per second.
    pub turn_speed: f64,
    pub pause_s: f64,
    /// Window of the heading moving average.
    pub smoothing_s: f64,
    /// Heading changes above this turn in place instead of gliding.
    pub corner_turn: f64,
    pub intrinsics: CameraIntrinsics,
    /// Heading before the first dwell.
    pub initial_yaw: f64,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        Self {
            fps: 30.0,
            move_speed: 1.0,
            turn_speed: 90f64.to_radians(),
            pause_s: 1.0,
            smoothing_s: 0.3,
            corner_turn: 5f64.to_radians(),
            intrinsics: CameraIntrinsics::from_hfov(640, 480, 60f64.to_radians()),
            initial_yaw: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryFrame {
    pub t: f64,
    pub pose: Pose,
    pub intrinsics: CameraIntrinsics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraTrajectory {
    pub fps: f64,
    pub frames: Vec<TrajectoryFrame>,
    /// Frames where the camera starts holding still at a waypoint.
    pub waypoint_indices: Vec<usize>,
}

impl CameraTrajectory {
    pub fn position(&self, i: usize) -> Point3<f64> {
        Point3::from(self.frames[i].pose.translation)
    }
}

struct Schedule {
    fps: f64,
    z: f64,
    intrinsics: CameraIntrinsics,
    xy: Vec<[f64; 2]>,
    yaw: Vec<f64>,
    waypoints: Vec<usize>,
}

impl Schedule {
    fn push(&mut self, xy: [f64; 2], yaw: f64) {
        self.xy.push(xy);
        self.yaw.push(wrap_angle(yaw));
    }

    fn here(&self) -> ([f64; 2], f64) {
        (*self.xy.last().expect("started"), *self.yaw.last().expect("started"))
    }

    /// Rotates in place along the shorter direction at `step` per frame.
    fn turn_to(&mut self, target: f64, step: f64) {
        let (xy, mut yaw) = self.here();
        loop {
            let diff = wrap_angle(target - yaw);
            if diff.abs() <= 1e-12 {
                break;
            }
            let s = diff.clamp(-step, step);
            yaw += s;
            if (diff - s).abs() <= 1e-12 {
                self.push(xy, target);
                break;
            }
            self.push(xy, yaw);
        }
    }

    fn hold(&mut self, frames: usize) {
        let (xy, yaw) = self.here();
        for _ in 0..frames {
            self.push(xy, yaw);
        }
    }

    /// Glides along a polyline at `step` meters per frame with the heading
    /// averaged over `window` frames either side.
    fn glide(&mut self, pts: &[[f64; 2]], step: f64, window: usize) {
        let mut samples: Vec<[f64; 2]> = Vec::new();
        let mut dirs: Vec<[f64; 2]> = Vec::new();
        let mut seg = 0usize;
        let mut offset = 0.0f64;
        'outer: loop {
            let mut remaining = step;
            loop {
                if seg + 1 >= pts.len() {
                    break 'outer;
                }
                let (a, b) = (pts[seg], pts[seg + 1]);
                let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                if offset + remaining < len - 1e-12 {
                    offset += remaining;
                    let f = offset / len;
                    samples.push([a[0] + (b[0] - a[0]) * f, a[1] + (b[1] - a[1]) * f]);
                    dirs.push([(b[0] - a[0]) / len, (b[1] - a[1]) / len]);
                    break;
                }
                remaining -= len - offset;
                seg += 1;
                offset = 0.0;
                if seg + 1 >= pts.len() {
                    // final partial step lands on the end point
                    samples.push(b);
                    dirs.push([(b[0] - a[0]) / len, (b[1] - a[1]) / len]);
                    break 'outer;
                }
            }
        }
        for i in 0..samples.len() {
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(samples.len() - 1);
            let (mut sx, mut sy) = (0.0, 0.0);
            for d in &dirs[lo..=hi] {
                sx += d[0];
                sy += d[1];
            }
            self.push(samples[i], sy.atan2(sx));
        }
    }
}

fn heading(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[1] - a[1]).atan2(b[0] - a[0])
}

/// True when every sample along `a`→`b` lies in a traversable cell.
fn line_of_sight(grid: &OccupancyGrid, a: [f64; 2], b: [f64; 2]) -> bool {
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    let n = (len / (grid.cell_size * 0.1)).ceil().max(1.0) as usize;
    (0..=n).all(|i| {
        let f = i as f64 / n as f64;
        grid.cell_of(a[0] + (b[0] - a[0]) * f, a[1] + (b[1] - a[1]) * f)
            .is_some_and(|c| grid.is_traversable(c))
    })
}

/// Drops path vertices that a straight traversable line can skip.
pub fn string_pull(grid: &OccupancyGrid, pts: &[[f64; 2]]) -> Vec<[f64; 2]> {
    if pts.len() <= 2 {
        return pts.to_vec();
    }
    let mut out = vec![pts[0]];
    let mut i = 0;
    while i + 1 < pts.len() {
        let mut j = pts.len() - 1;
        while j > i + 1 && !line_of_sight(grid, pts[i], pts[j]) {
            j -= 1;
        }
        out.push(pts[j]);
        i = j;
    }
    out
}

/// Splits a polyline into straight runs at heading changes above `corner`.
fn split_corners(pts: &[[f64; 2]], corner: f64) -> Vec<Vec<[f64; 2]>> {
    let mut runs = vec![vec![pts[0]]];
    for i in 1..pts.len() {
        runs.last_mut().expect("nonempty").push(pts[i]);
        if i + 1 < pts.len() {
            let turn = wrap_angle(heading(pts[i], pts[i + 1]) - heading(pts[i - 1], pts[i])).abs();
            if turn > corner {
                runs.push(vec![pts[i]]);
            }
        }
    }
    runs
}

/// Frame schedule through `waypoints` in order: dwell turn to each best yaw,
/// hold, turn toward the next leg, then glide along the stitched path.
pub fn build_trajectory(
    waypoints: &[Waypoint],
    grid: &OccupancyGrid,
    params: &TrajectoryParams,
) -> Result<CameraTrajectory, TrajectoryError> {
    let first = waypoints.first().ok_or(TrajectoryError::Empty)?;
    let step_turn = params.turn_speed / params.fps;
    let step_move = params.move_speed / params.fps;
    let window = ((params.smoothing_s * params.fps) / 2.0).round() as usize;
    let hold = (params.pause_s * params.fps).round() as usize;
    let mut legs = Vec::new();
    for (i, w) in waypoints.windows(2).enumerate() {
        let path = shortest_path(grid, w[0].cell, w[1].cell).map_err(|_| TrajectoryError::Disconnected(i, i + 1))?;
        let mut pts: Vec<[f64; 2]> = path.iter().map(|&c| grid.center(c)).collect();
        pts[0] = [w[0].position.x, w[0].position.y];
        let last = pts.len() - 1;
        pts[last] = [w[1].position.x, w[1].position.y];
        let pts = string_pull(grid, &pts);
        legs.push(pts);
    }
    let mut s = Schedule {
        fps: params.fps,
        z: first.position.z,
        intrinsics: params.intrinsics,
        xy: Vec::new(),
        yaw: Vec::new(),
        waypoints: Vec::new(),
    };
    s.push([first.position.x, first.position.y], params.initial_yaw);
    for (i, w) in waypoints.iter().enumerate() {
        s.turn_to(w.best_yaw, step_turn);
        s.waypoints.push(s.xy.len() - 1);
        s.hold(hold);
        let Some(leg) = legs.get(i) else { break };
        if leg.len() < 2 || leg[0] == leg[leg.len() - 1] {
            continue;
        }
        for run in split_corners(leg, params.corner_turn) {
            s.turn_to(heading(run[0], run[1]), step_turn);
            s.glide(&run, step_move, window);
        }
    }
    let frames = s
        .xy
        .iter()
        .zip(&s.yaw)
        .enumerate()
        .map(|(i, (xy, &yaw))| TrajectoryFrame {
            t: i as f64 / s.fps,
            pose: yaw_pitch_pose(Point3::new(xy[0], xy[1], s.z), yaw, 0.0),
            intrinsics: s.intrinsics,
        })
        .collect();
    Ok(CameraTrajectory {
        fps: params.fps,
        frames,
        waypoint_indices: s.waypoints,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameJson {
    pub t: f64,
    pub pos: [f64; 3],
    /// `[w, x, y, z]`
    pub q: [f64; 4],
    pub fx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryJson {
    pub fps: f64,
    pub width: u32,
    pub height: u32,
    pub frames: Vec<FrameJson>,
    pub waypoints: Vec<usize>,
}

impl CameraTrajectory {
    pub fn to_json(&self) -> TrajectoryJson {
        let k = self.frames.first().map(|f| f.intrinsics).unwrap_or(CameraIntrinsics::new(0, 0, 1.0));
        TrajectoryJson {
            fps: self.fps,
            width: k.width,
            height: k.height,
            frames: self
                .frames
                .iter()
                .map(|f| {
                    let t = f.pose.translation;
                    FrameJson {
                        t: f.t,
                        pos: [t.x, t.y, t.z],
                        q: f.pose.quat_wxyz(),
                        fx: f.intrinsics.fx,
                    }
                })
                .collect(),
            waypoints: self.waypoint_indices.clone(),
        }
    }

    pub fn from_json(j: &TrajectoryJson) -> Result<Self, TrajectoryError> {
        let frames = j
            .frames
            .iter()
            .map(|f| {
                let q = crate::geometry::quat_from_wxyz(f.q, 1e-6)
                    .ok_or_else(|| TrajectoryError::Format(format!("frame at t={} has a non-unit quaternion", f.t)))?;
                Ok(TrajectoryFrame {
                    t: f.t,
                    pose: Pose::new(Vector3::from(f.pos), q),
                    intrinsics: CameraIntrinsics::new(j.width, j.height, f.fx),
                })
            })
            .collect::<Result<Vec<_>, TrajectoryError>>()?;
        Ok(Self {
            fps: j.fps,
            frames,
            waypoint_indices: j.waypoints.clone(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), TrajectoryError> {
        let mut s = serde_json::to_string(&self.to_json()).map_err(|e| TrajectoryError::Format(e.to_string()))?;
        s.push('\n');
        write_atomic(path, s.as_bytes()).map_err(|source| TrajectoryError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, TrajectoryError> {
        let s = std::fs::read_to_string(path).map_err(|source| TrajectoryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let j: TrajectoryJson = serde_json::from_str(&s).map_err(|e| TrajectoryError::Format(e.to_string()))?;
        Self::from_json(&j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraversalConfig {
    pub cell_size: f64,
    pub erosion: f64,
    pub k: usize,
    pub camera_height: f64,
    pub seed: u64,
    pub sweep: SweepConfig,
    pub params: TrajectoryParams,
}

impl Default for TraversalConfig {
    fn default() -> Self {
        Self {
            cell_size: 0.1,
            erosion: 0.3,
            k: 24,
            camera_height: 1.2,
            seed: 0,
            sweep: SweepConfig::default(),
            params: TrajectoryParams::default(),
        }
    }
}

/// Everything the traversal pipeline produced.
#[derive(Debug, Clone)]
pub struct Traversal {
    pub grid: OccupancyGrid,
    pub eroded: OccupancyGrid,
    pub candidates: Vec<Waypoint>,
    pub selected: Vec<Waypoint>,
    /// `selected` in visiting order.
    pub ordered: Vec<Waypoint>,
    pub trajectory: CameraTrajectory,
}

/// Runs keypoints → sweep → selection → ordering → schedule.
pub fn plan_traversal(scene: &crate::scene::Scene, cfg: &TraversalConfig) -> Result<Traversal, TrajectoryError> {
    let posed = PosedScene::new(scene);
    let grid = OccupancyGrid::build_posed(scene, &posed, cfg.cell_size)
        .map_err(|_| TrajectoryError::NotEnoughCells { have: 0, want: cfg.k })?;
    let eroded = keypoint_grid(&grid, cfg.erosion);
    let candidates = candidate_keypoints(&posed, &grid, cfg.erosion, cfg.k, cfg.camera_height, &cfg.sweep)?;
    let selected = select_waypoints(&candidates, cfg.seed);
    let order = order_waypoints(&selected, &eroded)?;
    let ordered: Vec<Waypoint> = order.iter().map(|&i| selected[i].clone()).collect();
    let trajectory = build_trajectory(&ordered, &eroded, &cfg.params)?;
    Ok(Traversal {
        grid,
        eroded,
        candidates,
        selected,
        ordered,
        trajectory,
    })
}

/// Smallest absolute angle between two headings.
pub fn angle_between(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs().min(PI)
}

/// Renders every trajectory frame with all labels into `clips/<clip_id>`
/// under `root`, next to the scene it was rendered from, and returns the
/// labels path. Traversal frames have no target, so intensity is 0 and no
/// visibility is recorded.
pub fn write_traversal_clip(
    scene: &crate::scene::Scene,
    traj: &CameraTrajectory,
    root: &Path,
    clip_id: &str,
) -> Result<std::path::PathBuf, LabelError> {
    let k = traj.frames.first().map(|f| f.intrinsics);
    let header = ClipLabels {
        clip_id: clip_id.to_string(),
        axis: None,
        target: None,
        occluder: None,
        scene_id: scene.scene_id.clone(),
        scene_seed: scene.seed,
        width: k.map_or(0, |k| k.width),
        height: k.map_or(0, |k| k.height),
        categories: scene.instances.iter().map(|i| (i.instance_id, i.category.clone())).collect(),
        frames: Vec::new(),
    };
    let mut writer = ClipWriter::create(root, header)?;
    let scene_path = writer.dir().join("scene.json");
    write_atomic(&scene_path, scene.to_json_string().as_bytes()).map_err(|source| LabelError::Io {
        path: scene_path.display().to_string(),
        source,
    })?;
    let posed = PosedScene::new(scene);
    let ev = Evaluator::new(scene, &posed);
    for (i, f) in traj.frames.iter().enumerate() {
        let labels = render(&posed, &scene.lights, &f.pose, &f.intrinsics, 1.0);
        let graph = frame_scene_graph(&ev, &labels, false);
        let record = frame_record(i as u32, 0.0, &f.pose, &f.intrinsics, &labels, None, 1.0, graph);
        writer.push(&labels, record)?;
    }
    writer.finish()
}
