//! Shared geometric vocabulary: vectors, yaw-only poses, tagged point clouds
//! and the rigid transforms between the world and vehicle frames.
//!
//! Attitude is yaw-only. The vehicle carries a body frame with x forward,
//! y left and z up; the optical frame is coincident with the body frame
//! unless a scenario mounts the sensor with a translation offset.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("cannot normalize a near-zero vector (norm {norm:.3e})")]
    ZeroVector { norm: f64 },
    #[error("expected cloud in {expected:?} frame, found {found:?}")]
    FrameMismatch { expected: FrameTag, found: FrameTag },
}

/// Coordinate frame a cloud or pose quantity is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameTag {
    World,
    Body,
    Optical,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };
    /// World up direction; the planner builds its view bases around it.
    pub const UP: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, rhs: Vec3) -> f64 {
        self.x * rhs.x + self.y * rhs.y + self.z * rhs.z
    }

    pub fn cross(self, rhs: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * rhs.z - self.z * rhs.y,
            y: self.z * rhs.x - self.x * rhs.z,
            z: self.x * rhs.y - self.y * rhs.x,
        }
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Horizontal (xy-plane) magnitude, used to detect degenerate view rays.
    pub fn horizontal_norm(self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    pub fn normalized(self) -> Result<Vec3, GeometryError> {
        let n = self.norm();
        if n < 1e-12 {
            return Err(GeometryError::ZeroVector { norm: n });
        }
        Ok(self * (1.0 / n))
    }

    pub fn distance(self, rhs: Vec3) -> f64 {
        (self - rhs).norm()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Vehicle pose: position plus yaw about world z. Yaw is kept wrapped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub yaw: f64,
}

impl Pose {
    pub fn new(position: Vec3, yaw: f64) -> Self {
        Pose { position, yaw: wrap_angle(yaw) }
    }

    /// Unit vector the vehicle faces along, in the world xy-plane.
    pub fn forward(&self) -> Vec3 {
        Vec3::new(self.yaw.cos(), self.yaw.sin(), 0.0)
    }

    /// Rotate a body-frame vector into the world frame (yaw only).
    pub fn rotate_to_world(&self, v: Vec3) -> Vec3 {
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
    }

    /// Rotate a world-frame vector into the body frame.
    pub fn rotate_to_body(&self, v: Vec3) -> Vec3 {
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(c * v.x + s * v.y, -s * v.x + c * v.y, v.z)
    }

    pub fn body_to_world(&self, p: Vec3) -> Vec3 {
        self.rotate_to_world(p) + self.position
    }

    pub fn world_to_body(&self, p: Vec3) -> Vec3 {
        self.rotate_to_body(p - self.position)
    }
}

/// A point set tagged with the frame its coordinates live in.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub frame: FrameTag,
}

impl PointCloud {
    pub fn new(frame: FrameTag) -> Self {
        PointCloud { points: Vec::new(), frame }
    }

    pub fn from_points(points: Vec<Vec3>, frame: FrameTag) -> Self {
        PointCloud { points, frame }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest z coordinate, or None for an empty cloud.
    pub fn max_z(&self) -> Option<f64> {
        self.points
            .iter()
            .map(|p| p.z)
            .fold(None, |acc, z| Some(acc.map_or(z, |m: f64| m.max(z))))
    }
}

/// Wrap an angle to (-pi, pi]; the -pi boundary maps to +pi so every
/// heading has a single representative.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let r = (a + PI).rem_euclid(two_pi) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

/// Re-express a cloud in another frame given the agent pose. The optical
/// frame is treated as coincident with the body frame here; a sensor
/// mounting offset is applied at ray-cast time instead.
pub fn transform(cloud: &PointCloud, to: FrameTag, agent: &Pose) -> PointCloud {
    let from = cloud.frame;
    if from == to || frames_coincident(from, to) {
        return PointCloud::from_points(cloud.points.clone(), to);
    }
    let points = match (body_like(from), body_like(to)) {
        (true, false) => cloud.points.iter().map(|&p| agent.body_to_world(p)).collect(),
        (false, true) => cloud.points.iter().map(|&p| agent.world_to_body(p)).collect(),
        _ => cloud.points.clone(),
    };
    PointCloud::from_points(points, to)
}

fn body_like(f: FrameTag) -> bool {
    matches!(f, FrameTag::Body | FrameTag::Optical)
}

fn frames_coincident(a: FrameTag, b: FrameTag) -> bool {
    body_like(a) && body_like(b)
}
