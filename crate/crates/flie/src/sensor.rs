//! Simulated depth camera: a spherical ray fan cast against the boxes and
//! the ground plane, plus landmark visibility for place recognition.
//!
//! Rays leave the optical centre on an angular grid, rows sweeping the
//! vertical field of view and columns the horizontal one, both endpoint
//! inclusive. Hits come back in the body frame of the vehicle so the
//! range filter can work on camera-relative coordinates before anything
//! is merged into the world map.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geometry::{FrameTag, GeometryError, PointCloud, Pose, Vec3};
use crate::world::{Aabb, Landmark};

#[derive(Debug, Clone, Copy)]
pub struct SensorParams {
    /// Horizontal field of view in radians.
    pub alpha: f64,
    /// Vertical field of view in radians.
    pub beta: f64,
    pub max_range: f64,
    pub min_range: f64,
    /// Half-width of the kept corridor: points with |y| above this are cut.
    pub lateral_clamp: f64,
    /// World height below which returns are treated as floor and dropped.
    pub ground_mask: f64,
    pub ray_rows: usize,
    pub ray_cols: usize,
    pub voxel_size: f64,
    /// Standard deviation of range noise in metres; zero disables it.
    pub noise_sigma: f64,
    /// Camera position in the body frame.
    pub optical_offset: Vec3,
}

impl Default for SensorParams {
    fn default() -> Self {
        SensorParams {
            alpha: 86.0_f64.to_radians(),
            beta: 57.0_f64.to_radians(),
            max_range: 1.5,
            min_range: 0.5,
            lateral_clamp: 1.0,
            ground_mask: 0.2,
            ray_rows: 32,
            ray_cols: 48,
            voxel_size: 0.05,
            noise_sigma: 0.0,
            optical_offset: Vec3::ZERO,
        }
    }
}

/// One sensing cycle: the filtered body-frame cloud and the ids of the
/// landmarks in view.
#[derive(Debug, Clone)]
pub struct SensorFrame {
    pub cloud: PointCloud,
    pub landmarks: Vec<u32>,
}

fn ray_direction(theta_h: f64, theta_v: f64) -> Vec3 {
    let (sv, cv) = theta_v.sin_cos();
    let (sh, ch) = theta_h.sin_cos();
    Vec3::new(cv * ch, cv * sh, sv)
}

fn nearest_hit(blocks: &[Aabb], origin: Vec3, dir: Vec3, t_max: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    for b in blocks {
        if let Some(t) = b.intersect_ray(origin, dir, t_max) {
            if best.map_or(true, |cur| t < cur) {
                best = Some(t);
            }
        }
    }
    // The ground plane z = 0 is a real return; the height mask in the
    // filter decides later whether it survives.
    if dir.z < 0.0 && origin.z > 0.0 {
        let t = -origin.z / dir.z;
        if t <= t_max && best.map_or(true, |cur| t < cur) {
            best = Some(t);
        }
    }
    best
}

/// Cast the full ray fan from a pose. Returns every hit in the body frame
/// of the vehicle, unfiltered.
pub fn raycast(
    blocks: &[Aabb],
    pose: &Pose,
    params: &SensorParams,
    rng: &mut ChaCha8Rng,
) -> PointCloud {
    let origin = pose.body_to_world(params.optical_offset);
    let mut points = Vec::new();
    for row in 0..params.ray_rows {
        let theta_v =
            -params.beta / 2.0 + params.beta * row as f64 / (params.ray_rows - 1) as f64;
        for col in 0..params.ray_cols {
            let theta_h =
                -params.alpha / 2.0 + params.alpha * col as f64 / (params.ray_cols - 1) as f64;
            let dir_world = pose.rotate_to_world(ray_direction(theta_h, theta_v));
            if let Some(mut t) = nearest_hit(blocks, origin, dir_world, params.max_range) {
                if params.noise_sigma > 0.0 {
                    let n: f64 = rng.sample(StandardNormal);
                    t = (t + params.noise_sigma * n).max(0.0);
                }
                let hit = origin + dir_world * t;
                points.push(pose.world_to_body(hit));
            }
        }
    }
    PointCloud::from_points(points, FrameTag::Body)
}

fn voxel_key(p: Vec3, size: f64) -> (i64, i64, i64) {
    (
        (p.x / size).floor() as i64,
        (p.y / size).floor() as i64,
        (p.z / size).floor() as i64,
    )
}

/// Range, corridor and floor filter followed by a centroid voxel
/// downsample. The cloud stays in the body frame; `agent_z` anchors the
/// floor mask, which works on world height.
pub fn filter_cloud(
    cloud: &PointCloud,
    agent_z: f64,
    params: &SensorParams,
) -> Result<PointCloud, GeometryError> {
    if cloud.frame != FrameTag::Body {
        return Err(GeometryError::FrameMismatch {
            expected: FrameTag::Body,
            found: cloud.frame,
        });
    }
    let mut sums: std::collections::HashMap<(i64, i64, i64), (Vec3, usize)> =
        std::collections::HashMap::new();
    let mut order = Vec::new();
    for &p in &cloud.points {
        if p.x < params.min_range || p.x > params.max_range {
            continue;
        }
        if p.y.abs() > params.lateral_clamp {
            continue;
        }
        if agent_z + p.z < params.ground_mask {
            continue;
        }
        let key = voxel_key(p, params.voxel_size);
        let entry = sums.entry(key).or_insert_with(|| {
            order.push(key);
            (Vec3::ZERO, 0)
        });
        entry.0 = entry.0 + p;
        entry.1 += 1;
    }
    let points = order
        .iter()
        .map(|key| {
            let (sum, count) = sums[key];
            sum * (1.0 / count as f64)
        })
        .collect();
    Ok(PointCloud::from_points(points, FrameTag::Body))
}

/// Ids of landmarks inside the view frustum and not hidden behind a box.
/// Landmarks are points, so the floor mask does not apply to them.
pub fn visible_landmarks(
    blocks: &[Aabb],
    landmarks: &[Landmark],
    pose: &Pose,
    params: &SensorParams,
) -> Vec<u32> {
    let origin = pose.body_to_world(params.optical_offset);
    let mut ids = Vec::new();
    for lm in landmarks {
        let rel = pose.rotate_to_body(lm.position - origin);
        let dist = rel.norm();
        if dist <= 1e-12 || dist > params.max_range {
            continue;
        }
        if rel.y.atan2(rel.x).abs() > params.alpha / 2.0 {
            continue;
        }
        if rel.z.atan2(rel.x.hypot(rel.y)).abs() > params.beta / 2.0 {
            continue;
        }
        let dir = (lm.position - origin) * (1.0 / dist);
        let occluded = blocks
            .iter()
            .filter_map(|b| b.intersect_ray(origin, dir, dist))
            .any(|t| t < dist - 1e-6);
        if !occluded {
            ids.push(lm.id);
        }
    }
    ids
}

/// Full sensing cycle at a pose: cast, filter, look up landmarks.
pub fn sense(
    blocks: &[Aabb],
    landmarks: &[Landmark],
    pose: &Pose,
    params: &SensorParams,
    rng: &mut ChaCha8Rng,
) -> SensorFrame {
    let raw = raycast(blocks, pose, params, rng);
    let cloud = filter_cloud(&raw, pose.position.z, params)
        .expect("raycast output is always body frame");
    SensorFrame {
        cloud,
        landmarks: visible_landmarks(blocks, landmarks, pose, params),
    }
}
