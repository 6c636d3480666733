//! Mission log, merged-map accumulation, coverage and volume metrics,
//! and the file exports consumers plot from.
//!
//! Exports are plain text and byte-reproducible for a fixed seed: a
//! trajectory CSV, a line-oriented event log, an ASCII PLY cloud and a
//! key:value metrics file. Matching readers round-trip each format.

use std::collections::HashSet;
use std::io::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::geometry::{transform, FrameTag, GeometryError, PointCloud, Pose, Vec3};
use crate::kdtree::KdTree;
use crate::mission::Mode;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("log has no inspection ticks to average over")]
    NoInspectionData,
    #[error("export failed: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("cannot parse {file} line {line}: {reason}")]
    Parse { file: String, line: usize, reason: String },
}

/// How the mission ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissionOutcome {
    /// Exploration exhausted every tier: normal completion.
    Done,
    /// Step budget ran out first.
    BudgetExceeded,
}

impl std::fmt::Display for MissionOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MissionOutcome::Done => "DONE",
            MissionOutcome::BudgetExceeded => "BUDGET_EXCEEDED",
        })
    }
}

/// One planner cycle as recorded in the log. `mode` is the mode after
/// the cycle's decision, `commanded` the pose it asked for and `actual`
/// the settled pose reached.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub step: usize,
    pub mode: Mode,
    pub commanded: Pose,
    pub actual: Pose,
    pub cloud_size: usize,
    pub score: Option<f64>,
    pub threshold: f64,
    pub gain: Option<usize>,
    /// Distance to the nearest sensed point at decision time, recorded
    /// on inspection ticks.
    pub surface_distance: Option<f64>,
}

/// Discrete things that happened during a tick, for the event log.
#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Mode { from: Mode, to: Mode },
    Score { score: f64, threshold: f64, visited: bool },
    Query { size: usize },
    Ascend { z: f64 },
    TopReached,
    Tier { tier: crate::explorer::Tier },
    Gain { tier: crate::explorer::Tier, index: usize, gain: usize },
    Engage { tier: crate::explorer::Tier },
    LostSurface,
    Degenerate,
    Exhausted,
    Budget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub step: usize,
    pub kind: EventKind,
}

impl Event {
    /// One whitespace-separated line: tag, step, then payload fields.
    pub fn line(&self) -> String {
        match &self.kind {
            EventKind::Mode { from, to } => format!("MODE {} {} {}", self.step, from, to),
            EventKind::Score { score, threshold, visited } => format!(
                "SCORE {} {:.6} {:.6} {}",
                self.step, score, threshold, visited
            ),
            EventKind::Query { size } => format!("QUERY {} {}", self.step, size),
            EventKind::Ascend { z } => format!("ASCEND {} {:.6}", self.step, z),
            EventKind::TopReached => format!("TOP_REACHED {}", self.step),
            EventKind::Tier { tier } => format!("TIER {} {}", self.step, tier),
            EventKind::Gain { tier, index, gain } => {
                format!("GAIN {} {} {} {}", self.step, tier, index, gain)
            }
            EventKind::Engage { tier } => format!("ENGAGE {} {}", self.step, tier),
            EventKind::LostSurface => format!("LOST_SURFACE {}", self.step),
            EventKind::Degenerate => format!("DEGENERATE {}", self.step),
            EventKind::Exhausted => format!("EXHAUSTED {}", self.step),
            EventKind::Budget => format!("BUDGET {}", self.step),
        }
    }
}

/// Everything a finished mission leaves behind.
#[derive(Debug, Clone)]
pub struct MissionLog {
    pub ticks: Vec<TickRecord>,
    pub events: Vec<Event>,
    /// World-frame map built from every sensed cloud, one point per voxel.
    pub merged: PointCloud,
    pub outcome: MissionOutcome,
    pub start_pose: Pose,
    /// Snapshot of the inspection-pose repository at mission end.
    pub repo_poses: Vec<Pose>,
    pub base_loop_len: usize,
    voxel_size: f64,
    seen_voxels: HashSet<(i64, i64, i64)>,
}

impl MissionLog {
    pub fn new(voxel_size: f64, start_pose: Pose) -> Self {
        MissionLog {
            ticks: Vec::new(),
            events: Vec::new(),
            merged: PointCloud::new(FrameTag::World),
            outcome: MissionOutcome::Done,
            start_pose,
            repo_poses: Vec::new(),
            base_loop_len: 0,
            voxel_size,
            seen_voxels: HashSet::new(),
        }
    }

    pub fn push_event(&mut self, step: usize, kind: EventKind) {
        self.events.push(Event { step, kind });
    }

    /// Merge a body-frame cloud sensed at `agent` into the world map.
    /// The first point to claim a voxel keeps it, so re-sensing the same
    /// surface never grows or perturbs the map.
    pub fn accumulate(&mut self, cloud: &PointCloud, agent: &Pose) -> Result<(), MetricsError> {
        if cloud.frame != FrameTag::Body {
            return Err(GeometryError::FrameMismatch {
                expected: FrameTag::Body,
                found: cloud.frame,
            }
            .into());
        }
        let world = transform(cloud, FrameTag::World, agent);
        for p in world.points {
            let key = (
                (p.x / self.voxel_size).floor() as i64,
                (p.y / self.voxel_size).floor() as i64,
                (p.z / self.voxel_size).floor() as i64,
            );
            if self.seen_voxels.insert(key) {
                self.merged.points.push(p);
            }
        }
        Ok(())
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }
}

/// Fraction of truth points with a merged-map point within `radius`.
pub fn coverage(merged: &PointCloud, truth: &[Vec3], radius: f64) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    if merged.is_empty() {
        return 0.0;
    }
    let tree = KdTree::build_from(&merged.points);
    let hit = truth
        .iter()
        .filter(|t| tree.nearest_distance(**t).is_some_and(|d| d <= radius))
        .count();
    hit as f64 / truth.len() as f64
}

/// Occupied-voxel volume of a cloud: distinct voxels times voxel cube.
pub fn voxel_volume(cloud: &PointCloud, voxel: f64) -> f64 {
    let mut seen = HashSet::new();
    for p in &cloud.points {
        seen.insert((
            (p.x / voxel).floor() as i64,
            (p.y / voxel).floor() as i64,
            (p.z / voxel).floor() as i64,
        ));
    }
    seen.len() as f64 * voxel * voxel * voxel
}

/// Mean stand-off regulation error over inspection ticks.
pub fn mean_distance_error(log: &MissionLog, d_safety: f64) -> Result<f64, MetricsError> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for t in &log.ticks {
        if t.mode == Mode::Inspect {
            if let Some(d) = t.surface_distance {
                sum += (d - d_safety).abs();
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(MetricsError::NoInspectionData);
    }
    Ok(sum / n as f64)
}

/// Total distance flown, settled pose to settled pose.
pub fn path_length(log: &MissionLog) -> f64 {
    let mut total = 0.0;
    let mut prev = log.start_pose.position;
    for t in &log.ticks {
        total += prev.distance(t.actual.position);
        prev = t.actual.position;
    }
    total
}

/// Summary numbers for one mission.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub coverage_fraction: f64,
    pub inspected_volume: f64,
    pub path_length: f64,
    pub mean_distance_error: f64,
    pub num_view_poses: usize,
    pub termination: MissionOutcome,
}

/// Build the report against ground truth sampled at the sensor voxel
/// size, keeping only points above the floor mask (the sensor can never
/// see below it).
pub fn metrics_report(log: &MissionLog, scenario: &crate::world::Scenario) -> MetricsReport {
    let truth: Vec<Vec3> = crate::world::surface_points(&scenario.structures, log.voxel_size)
        .into_iter()
        .filter(|p| p.z >= scenario.sensor.ground_mask)
        .collect();
    MetricsReport {
        coverage_fraction: coverage(&log.merged, &truth, scenario.coverage_radius),
        inspected_volume: voxel_volume(&log.merged, log.voxel_size),
        path_length: path_length(log),
        mean_distance_error: mean_distance_error(log, scenario.planner.d_safety).unwrap_or(0.0),
        num_view_poses: log.repo_poses.len(),
        termination: log.outcome,
    }
}

fn write_atomically(path: &Path, content: &str) -> Result<(), MetricsError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(content.as_bytes())?;
    Ok(())
}

pub fn trajectory_csv(log: &MissionLog) -> String {
    let mut out = String::from("step,mode,cx,cy,cz,cyaw,ax,ay,az,ayaw\n");
    for t in &log.ticks {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            t.step,
            t.mode,
            t.commanded.position.x,
            t.commanded.position.y,
            t.commanded.position.z,
            t.commanded.yaw,
            t.actual.position.x,
            t.actual.position.y,
            t.actual.position.z,
            t.actual.yaw,
        ));
    }
    out
}

pub fn events_log(log: &MissionLog) -> String {
    let mut out = String::new();
    for e in &log.events {
        out.push_str(&e.line());
        out.push('\n');
    }
    out
}

pub fn cloud_ply(log: &MissionLog) -> String {
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    out.push_str(&format!("element vertex {}\n", log.merged.len()));
    out.push_str("property float x\nproperty float y\nproperty float z\nend_header\n");
    for p in &log.merged.points {
        out.push_str(&format!("{} {} {}\n", p.x as f32, p.y as f32, p.z as f32));
    }
    out
}

pub fn metrics_txt(report: &MetricsReport) -> String {
    format!(
        "coverage_fraction: {:.6}\ninspected_volume: {:.6}\npath_length: {:.6}\nmean_distance_error: {:.6}\nnum_view_poses: {}\ntermination: {}\n",
        report.coverage_fraction,
        report.inspected_volume,
        report.path_length,
        report.mean_distance_error,
        report.num_view_poses,
        report.termination,
    )
}

/// Write the export set into `out_dir`. The cloud is the largest file
/// and is optional.
pub fn export(
    log: &MissionLog,
    report: &MetricsReport,
    out_dir: &Path,
    include_cloud: bool,
) -> Result<(), MetricsError> {
    std::fs::create_dir_all(out_dir)?;
    write_atomically(&out_dir.join("trajectory.csv"), &trajectory_csv(log))?;
    write_atomically(&out_dir.join("events.log"), &events_log(log))?;
    write_atomically(&out_dir.join("metrics.txt"), &metrics_txt(report))?;
    if include_cloud {
        write_atomically(&out_dir.join("cloud.ply"), &cloud_ply(log))?;
    }
    Ok(())
}

/// Parsed trajectory row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub step: usize,
    pub mode: String,
    pub commanded: Pose,
    pub actual: Pose,
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryRow>, MetricsError> {
    let text = std::fs::read_to_string(path)?;
    let fname = path.display().to_string();
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 10 {
            return Err(MetricsError::Parse {
                file: fname,
                line: i + 1,
                reason: format!("expected 10 fields, found {}", parts.len()),
            });
        }
        let num = |s: &str| -> Result<f64, MetricsError> {
            s.parse().map_err(|_| MetricsError::Parse {
                file: path.display().to_string(),
                line: i + 1,
                reason: format!("bad float {s:?}"),
            })
        };
        rows.push(TrajectoryRow {
            step: parts[0].parse().map_err(|_| MetricsError::Parse {
                file: path.display().to_string(),
                line: i + 1,
                reason: format!("bad step {:?}", parts[0]),
            })?,
            mode: parts[1].to_string(),
            commanded: Pose::new(
                Vec3::new(num(parts[2])?, num(parts[3])?, num(parts[4])?),
                num(parts[5])?,
            ),
            actual: Pose::new(
                Vec3::new(num(parts[6])?, num(parts[7])?, num(parts[8])?),
                num(parts[9])?,
            ),
        });
    }
    Ok(rows)
}

/// Parsed event line: tag, step, remaining payload tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRow {
    pub tag: String,
    pub step: usize,
    pub payload: Vec<String>,
}

pub fn read_events(path: &Path) -> Result<Vec<EventRow>, MetricsError> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let tag = it.next().unwrap_or_default().to_string();
        let step: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| MetricsError::Parse {
                file: path.display().to_string(),
                line: i + 1,
                reason: "missing step".into(),
            })?;
        rows.push(EventRow {
            tag,
            step,
            payload: it.map(str::to_string).collect(),
        });
    }
    Ok(rows)
}

pub fn read_metrics(path: &Path) -> Result<std::collections::BTreeMap<String, String>, MetricsError> {
    let text = std::fs::read_to_string(path)?;
    let mut map = std::collections::BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line.split_once(':').ok_or_else(|| MetricsError::Parse {
            file: path.display().to_string(),
            line: i + 1,
            reason: "missing colon".into(),
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

pub fn read_ply(path: &Path) -> Result<Vec<Vec3>, MetricsError> {
    let text = std::fs::read_to_string(path)?;
    let fname = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let mut count = None;
    for (i, line) in lines.by_ref() {
        if let Some(rest) = line.strip_prefix("element vertex ") {
            count = Some(rest.parse::<usize>().map_err(|_| MetricsError::Parse {
                file: fname.clone(),
                line: i + 1,
                reason: format!("bad vertex count {rest:?}"),
            })?);
        }
        if line == "end_header" {
            break;
        }
    }
    let expected = count.ok_or(MetricsError::Parse {
        file: fname.clone(),
        line: 0,
        reason: "no element vertex line".into(),
    })?;
    let mut points = Vec::with_capacity(expected);
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|s| s.parse::<f32>().map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(|_| MetricsError::Parse {
                file: fname.clone(),
                line: i + 1,
                reason: format!("bad vertex line {line:?}"),
            })?;
        if vals.len() != 3 {
            return Err(MetricsError::Parse {
                file: fname.clone(),
                line: i + 1,
                reason: format!("expected 3 coordinates, found {}", vals.len()),
            });
        }
        points.push(Vec3::new(vals[0], vals[1], vals[2]));
    }
    if points.len() != expected {
        return Err(MetricsError::Parse {
            file: fname,
            line: 0,
            reason: format!("header promised {expected} vertices, found {}", points.len()),
        });
    }
    Ok(points)
}
