//! Mock world: structures built from axis-aligned boxes on a ground plane,
//! visual landmarks scattered over their faces, and the scenario files that
//! describe a run.
//!
//! Everything here is deterministic for a fixed seed. Landmark placement
//! and surface sampling iterate structures, blocks and faces in a fixed
//! order so two loads of the same scenario produce identical worlds.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::geometry::{Pose, Vec3};
use crate::mission::VehicleParams;
use crate::planner::PlannerParams;
use crate::recognizer::RecognitionParams;
use crate::sensor::SensorParams;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("cannot read scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse scenario file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Validation(String),
}

/// Axis-aligned box, the only solid primitive in the mock world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

/// One of the six faces of a box: axis 0..2 and whether it is the
/// positive-side face.
#[derive(Debug, Clone, Copy)]
pub struct Face {
    pub axis: usize,
    pub positive: bool,
}

pub const FACES: [Face; 6] = [
    Face { axis: 0, positive: false },
    Face { axis: 0, positive: true },
    Face { axis: 1, positive: false },
    Face { axis: 1, positive: true },
    Face { axis: 2, positive: false },
    Face { axis: 2, positive: true },
];

fn component(v: Vec3, axis: usize) -> f64 {
    match axis {
        0 => v.x,
        1 => v.y,
        _ => v.z,
    }
}

fn with_component(mut v: Vec3, axis: usize, value: f64) -> Vec3 {
    match axis {
        0 => v.x = value,
        1 => v.y = value,
        _ => v.z = value,
    }
    v
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Aabb { min, max }
    }

    pub fn extent(&self, axis: usize) -> f64 {
        component(self.max, axis) - component(self.min, axis)
    }

    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    /// Strict interior test with a small margin, used to discard surface
    /// samples swallowed by an overlapping block.
    pub fn contains_strictly(&self, p: Vec3, margin: f64) -> bool {
        p.x > self.min.x + margin
            && p.x < self.max.x - margin
            && p.y > self.min.y + margin
            && p.y < self.max.y - margin
            && p.z > self.min.z + margin
            && p.z < self.max.z - margin
    }

    /// Euclidean distance from a point to the box (zero when inside).
    pub fn distance_to_point(&self, p: Vec3) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        let dz = (self.min.z - p.z).max(0.0).max(p.z - self.max.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// Slab-method ray intersection. Returns the entry distance along a
    /// unit direction when the box is hit in front of the origin within
    /// `t_max`; rays starting inside the box report no hit.
    pub fn intersect_ray(&self, origin: Vec3, dir: Vec3, t_max: f64) -> Option<f64> {
        let mut t_enter = 0.0_f64;
        let mut t_exit = t_max;
        let mut entered = false;
        for axis in 0..3 {
            let o = component(origin, axis);
            let d = component(dir, axis);
            let lo = component(self.min, axis);
            let hi = component(self.max, axis);
            if d.abs() < 1e-15 {
                if o < lo || o > hi {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / d;
            let (mut t0, mut t1) = ((lo - o) * inv, (hi - o) * inv);
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            if t0 > t_enter {
                t_enter = t0;
                entered = true;
            }
            t_exit = t_exit.min(t1);
            if t_enter > t_exit {
                return None;
            }
        }
        if entered && t_enter >= 0.0 && t_enter <= t_max {
            Some(t_enter)
        } else {
            None
        }
    }

    pub fn face_area(&self, face: Face) -> f64 {
        let (u, v) = face_tangents(face.axis);
        self.extent(u) * self.extent(v)
    }

    /// Point on the face plane for in-face coordinates (u, v) in [0, 1].
    pub fn face_point(&self, face: Face, u: f64, v: f64) -> Vec3 {
        let (ua, va) = face_tangents(face.axis);
        let plane = if face.positive {
            component(self.max, face.axis)
        } else {
            component(self.min, face.axis)
        };
        let mut p = with_component(Vec3::ZERO, face.axis, plane);
        p = with_component(p, ua, component(self.min, ua) + self.extent(ua) * u);
        with_component(p, va, component(self.min, va) + self.extent(va) * v)
    }
}

fn face_tangents(axis: usize) -> (usize, usize) {
    match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

fn face_normal(face: Face) -> Vec3 {
    let sign = if face.positive { 1.0 } else { -1.0 };
    with_component(Vec3::ZERO, face.axis, sign)
}

/// A structure is a union of boxes; fractured profiles are several blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Structure {
    pub id: u32,
    pub blocks: Vec<Aabb>,
    pub landmark_density: f64,
}

/// A point feature fixed to a structure surface, identified across views
/// by its id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landmark {
    pub id: u32,
    pub position: Vec3,
    pub structure_id: u32,
}

/// Deterministically scatter landmarks over every block face at each
/// structure's density (landmarks per square metre, rounded per face).
pub fn scatter_landmarks(structures: &[Structure], seed: u64) -> Vec<Landmark> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut landmarks = Vec::new();
    let mut next_id = 0u32;
    for s in structures {
        for block in &s.blocks {
            for face in FACES {
                let quota = (block.face_area(face) * s.landmark_density).round() as usize;
                for _ in 0..quota {
                    let u: f64 = rng.gen();
                    let v: f64 = rng.gen();
                    landmarks.push(Landmark {
                        id: next_id,
                        position: block.face_point(face, u, v),
                        structure_id: s.id,
                    });
                    next_id += 1;
                }
            }
        }
    }
    landmarks
}

const SEAM_PROBE: f64 = 1e-7;
const DEDUP_QUANTUM: f64 = 1e-9;

fn quantize(p: Vec3) -> (i64, i64, i64) {
    (
        (p.x / DEDUP_QUANTUM).round() as i64,
        (p.y / DEDUP_QUANTUM).round() as i64,
        (p.z / DEDUP_QUANTUM).round() as i64,
    )
}

fn sample_faces(blocks: &[Aabb], all_blocks: &[Aabb], resolution: f64) -> Vec<Vec3> {
    let mut seen = std::collections::HashSet::new();
    let mut points = Vec::new();
    for block in blocks {
        for face in FACES {
            let (ua, va) = face_tangents(face.axis);
            let nu = ((block.extent(ua) / resolution).ceil() as usize).max(1);
            let nv = ((block.extent(va) / resolution).ceil() as usize).max(1);
            let normal = face_normal(face);
            for i in 0..=nu {
                for j in 0..=nv {
                    let p = block.face_point(face, i as f64 / nu as f64, j as f64 / nv as f64);
                    let probe = p + normal * SEAM_PROBE;
                    let interior = all_blocks.iter().any(|b| {
                        b.contains_strictly(p, DEDUP_QUANTUM)
                            || b.contains_strictly(probe, DEDUP_QUANTUM)
                    });
                    if interior {
                        continue;
                    }
                    if seen.insert(quantize(p)) {
                        points.push(p);
                    }
                }
            }
        }
    }
    points
}

/// Uniform grid samples of all exterior faces, deduplicated along shared
/// edges. The ground truth for coverage metrics.
pub fn surface_points(structures: &[Structure], resolution: f64) -> Vec<Vec3> {
    let all: Vec<Aabb> = structures.iter().flat_map(|s| s.blocks.iter().copied()).collect();
    sample_faces(&all, &all, resolution)
}

/// Same sampling restricted to one structure's blocks, still treating the
/// other structures' blocks as solid when discarding interior samples.
pub fn structure_surface_points(
    target: &Structure,
    structures: &[Structure],
    resolution: f64,
) -> Vec<Vec3> {
    let all: Vec<Aabb> = structures.iter().flat_map(|s| s.blocks.iter().copied()).collect();
    sample_faces(&target.blocks, &all, resolution)
}

/// Everything a run needs: the world, the start state and every parameter
/// block, with defaults filled in.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub structures: Vec<Structure>,
    pub start_pose: Pose,
    pub seed: u64,
    pub max_steps: usize,
    pub planner: PlannerParams,
    pub sensor: SensorParams,
    pub recognition: RecognitionParams,
    pub vehicle: VehicleParams,
    pub coverage_radius: f64,
    pub landmark_density: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum StructureSpec {
    Single([f64; 6]),
    Blocks(Vec<[f64; 6]>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    structures: Vec<StructureSpec>,
    start_pose: [f64; 4],
    seed: u64,
    max_steps: Option<usize>,
    alpha_deg: Option<f64>,
    beta_deg: Option<f64>,
    gamma_h: Option<f64>,
    gamma_v: Option<f64>,
    d_safety: Option<f64>,
    gamma_threshold_init: Option<f64>,
    #[serde(rename = "N_horizon")]
    n_horizon: Option<usize>,
    sensor_max_range: Option<f64>,
    sensor_min_range: Option<f64>,
    lateral_clamp: Option<f64>,
    ground_mask: Option<f64>,
    landmark_density: Option<f64>,
    ray_rows: Option<usize>,
    ray_cols: Option<usize>,
    voxel_size: Option<f64>,
    noise_sigma: Option<f64>,
    coverage_radius: Option<f64>,
    optical_offset: Option<[f64; 3]>,
    max_speed: Option<f64>,
    max_yaw_rate: Option<f64>,
    dt: Option<f64>,
    arrival_tol: Option<f64>,
    heading_tol: Option<f64>,
}

impl Scenario {
    pub fn from_file(path: &Path) -> Result<Scenario, WorldError> {
        let text = std::fs::read_to_string(path)?;
        Scenario::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Scenario, WorldError> {
        let file: ScenarioFile = toml::from_str(text)?;
        Scenario::from_parsed(file)
    }

    fn from_parsed(file: ScenarioFile) -> Result<Scenario, WorldError> {
        let alpha = file.alpha_deg.unwrap_or(86.0).to_radians();
        let beta = file.beta_deg.unwrap_or(57.0).to_radians();
        let landmark_density = file.landmark_density.unwrap_or(40.0);

        let mut structures = Vec::new();
        for (i, spec) in file.structures.into_iter().enumerate() {
            let raw_blocks = match spec {
                StructureSpec::Single(b) => vec![b],
                StructureSpec::Blocks(bs) => bs,
            };
            let mut blocks = Vec::new();
            for b in raw_blocks {
                let aabb = Aabb::new(Vec3::new(b[0], b[1], b[2]), Vec3::new(b[3], b[4], b[5]));
                for axis in 0..3 {
                    if aabb.extent(axis) <= 0.0 {
                        return Err(WorldError::Validation(format!(
                            "structure {i} has a box with non-positive extent on axis {axis}"
                        )));
                    }
                }
                blocks.push(aabb);
            }
            if blocks.is_empty() {
                return Err(WorldError::Validation(format!("structure {i} has no boxes")));
            }
            structures.push(Structure { id: i as u32, blocks, landmark_density });
        }

        let [sx, sy, sz, syaw] = file.start_pose;
        let start_pose = Pose::new(Vec3::new(sx, sy, sz), syaw);
        for s in &structures {
            for b in &s.blocks {
                if b.contains(start_pose.position) {
                    return Err(WorldError::Validation(format!(
                        "start pose lies inside structure {}",
                        s.id
                    )));
                }
            }
        }

        let scenario = Scenario {
            structures,
            start_pose,
            seed: file.seed,
            max_steps: file.max_steps.unwrap_or(500),
            planner: PlannerParams {
                alpha,
                beta,
                gamma_h: file.gamma_h.unwrap_or(0.8),
                gamma_v: file.gamma_v.unwrap_or(0.5),
                d_safety: file.d_safety.unwrap_or(1.0),
            },
            sensor: SensorParams {
                alpha,
                beta,
                max_range: file.sensor_max_range.unwrap_or(1.5),
                min_range: file.sensor_min_range.unwrap_or(0.5),
                lateral_clamp: file.lateral_clamp.unwrap_or(1.0),
                ground_mask: file.ground_mask.unwrap_or(0.2),
                ray_rows: file.ray_rows.unwrap_or(32),
                ray_cols: file.ray_cols.unwrap_or(48),
                voxel_size: file.voxel_size.unwrap_or(0.05),
                noise_sigma: file.noise_sigma.unwrap_or(0.0),
                optical_offset: file
                    .optical_offset
                    .map(|o| Vec3::new(o[0], o[1], o[2]))
                    .unwrap_or(Vec3::ZERO),
            },
            recognition: RecognitionParams {
                initial_threshold: file.gamma_threshold_init.unwrap_or(0.6),
                horizon: file.n_horizon.unwrap_or(6),
            },
            vehicle: VehicleParams {
                max_speed: file.max_speed.unwrap_or(1.0),
                max_yaw_rate: file.max_yaw_rate.unwrap_or(1.5),
                dt: file.dt.unwrap_or(0.05),
                arrival_tol: file.arrival_tol.unwrap_or(0.05),
                heading_tol: file.heading_tol.unwrap_or(0.05),
            },
            coverage_radius: file.coverage_radius.unwrap_or(0.1),
            landmark_density,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    fn validate(&self) -> Result<(), WorldError> {
        let fail = |m: String| Err(WorldError::Validation(m));
        let p = &self.planner;
        if !(p.alpha > 0.0 && p.alpha < std::f64::consts::PI) {
            return fail(format!("horizontal field of view must be in (0, pi), got {}", p.alpha));
        }
        if !(p.beta > 0.0 && p.beta < std::f64::consts::PI) {
            return fail(format!("vertical field of view must be in (0, pi), got {}", p.beta));
        }
        for (name, g) in [("gamma_h", p.gamma_h), ("gamma_v", p.gamma_v)] {
            if !(0.0..1.0).contains(&g) {
                return fail(format!("{name} must be in [0, 1), got {g}"));
            }
        }
        if p.d_safety <= 0.0 {
            return fail(format!("d_safety must be positive, got {}", p.d_safety));
        }
        let s = &self.sensor;
        if !(s.min_range > 0.0 && s.min_range < s.max_range) {
            return fail(format!(
                "need 0 < min_range < max_range, got {} and {}",
                s.min_range, s.max_range
            ));
        }
        if s.ray_rows < 2 || s.ray_cols < 2 {
            return fail("ray grid must be at least 2x2".into());
        }
        if s.voxel_size <= 0.0 || s.lateral_clamp <= 0.0 {
            return fail("voxel size and lateral clamp must be positive".into());
        }
        if s.noise_sigma < 0.0 {
            return fail("noise sigma must be non-negative".into());
        }
        if self.recognition.horizon == 0 {
            return fail("N_horizon must be at least 1".into());
        }
        let v = &self.vehicle;
        if v.max_speed <= 0.0 || v.max_yaw_rate <= 0.0 || v.dt <= 0.0 {
            return fail("vehicle speed, yaw rate and dt must be positive".into());
        }
        if v.arrival_tol <= 0.0 || v.heading_tol <= 0.0 {
            return fail("arrival and heading tolerances must be positive".into());
        }
        if self.max_steps == 0 {
            return fail("max_steps must be at least 1".into());
        }
        if self.coverage_radius <= 0.0 {
            return fail("coverage radius must be positive".into());
        }
        if self.landmark_density < 0.0 {
            return fail("landmark density must be non-negative".into());
        }
        Ok(())
    }

    pub fn all_blocks(&self) -> Vec<Aabb> {
        self.structures.iter().flat_map(|s| s.blocks.iter().copied()).collect()
    }

    /// Distance from a point to the nearest structure surface.
    pub fn clearance(&self, p: Vec3) -> f64 {
        self.structures
            .iter()
            .flat_map(|s| s.blocks.iter())
            .map(|b| b.distance_to_point(p))
            .fold(f64::INFINITY, f64::min)
    }
}
