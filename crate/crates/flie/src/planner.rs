//! Recursive next-view planner with an integrated stand-off safety layer.
//!
//! Each step looks at the current cloud, picks the nearest surface point
//! as the point of interest, builds a view-aligned basis and slides one
//! overlap stride along the surface while correcting the distance back
//! to the configured stand-off. When the recognizer reports a closed
//! loop the step also climbs one vertical stride; if the cloud shows no
//! surface above that commanded height the structure top is reached.

use thiserror::Error;

use crate::geometry::{wrap_angle, FrameTag, GeometryError, PointCloud, Pose, Vec3};
use crate::kdtree::KdTree;

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("cannot plan from an empty cloud")]
    EmptyCloud,
    #[error("view direction is vertical, no usable heading")]
    DegenerateView,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy)]
pub struct PlannerParams {
    /// Horizontal field of view in radians.
    pub alpha: f64,
    /// Vertical field of view in radians.
    pub beta: f64,
    /// Horizontal image-overlap fraction in [0, 1).
    pub gamma_h: f64,
    /// Vertical image-overlap fraction in [0, 1).
    pub gamma_v: f64,
    /// Stand-off distance the safety layer regulates to, in metres.
    pub d_safety: f64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams {
            alpha: 86.0_f64.to_radians(),
            beta: 57.0_f64.to_radians(),
            gamma_h: 0.8,
            gamma_v: 0.5,
            d_safety: 1.0,
        }
    }
}

/// Right-handed orthonormal triad aligned with the view: `x` toward the
/// point of interest, `y` horizontal to its left, `z` completing the
/// triad and always pointing upward.
#[derive(Debug, Clone, Copy)]
pub struct ViewBasis {
    pub x: Vec3,
    pub y: Vec3,
    pub z: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Lateral,
    Ascend,
    TopReached,
    LostSurface,
}

/// One planner decision: where to go, what it was looking at, and why.
#[derive(Debug, Clone, Copy)]
pub struct InspectionStep {
    pub next_pose: Pose,
    pub poi: Vec3,
    pub basis: ViewBasis,
    pub ascended: bool,
    pub kind: StepKind,
}

/// Surface point closest to `p`, via a fresh k-d tree over the cloud.
/// Ties go to the earliest point in insertion order.
pub fn nearest_point(cloud: &PointCloud, p: Vec3) -> Result<Vec3, PlannerError> {
    if cloud.is_empty() {
        return Err(PlannerError::EmptyCloud);
    }
    let (point, _) = KdTree::build_from(&cloud.points)
        .nearest(p)
        .expect("cloud checked non-empty");
    Ok(point)
}

/// View basis looking from `p_mav` toward `p_poi`.
pub fn view_basis(p_poi: Vec3, p_mav: Vec3) -> Result<ViewBasis, PlannerError> {
    let x = (p_poi - p_mav)
        .normalized()
        .map_err(|_| PlannerError::DegenerateView)?;
    if x.horizontal_norm() < 1e-6 {
        return Err(PlannerError::DegenerateView);
    }
    let y = Vec3::UP
        .cross(x)
        .normalized()
        .expect("horizontal component checked above");
    // The raw cross of the up axis with the view direction points down
    // whenever the view tilts upward; rebuilding z from x and y keeps
    // ascent strides positive.
    let z = x.cross(y);
    Ok(ViewBasis { x, y, z })
}

/// Yaw that points the body x axis at the view direction.
pub fn heading_of(v_x: Vec3) -> Result<f64, PlannerError> {
    if v_x.horizontal_norm() < 1e-6 {
        return Err(PlannerError::DegenerateView);
    }
    Ok(wrap_angle(v_x.y.atan2(v_x.x)))
}

/// Camera footprint stride: the move that keeps the given overlap
/// fraction between consecutive views of a surface at this distance.
pub fn footprint_stride(fov: f64, distance: f64, overlap: f64) -> f64 {
    2.0 * (fov / 2.0).tan() * distance * (1.0 - overlap)
}

/// Lateral stride between neighboring views so images keep the required
/// horizontal overlap.
pub fn horizontal_overlap(p_mav: Vec3, p_poi: Vec3, alpha: f64, gamma_h: f64) -> f64 {
    footprint_stride(alpha, p_mav.distance(p_poi), gamma_h)
}

/// Vertical stride between inspection loops for the vertical overlap.
pub fn vertical_overlap(p_mav: Vec3, p_poi: Vec3, beta: f64, gamma_v: f64) -> f64 {
    footprint_stride(beta, p_mav.distance(p_poi), gamma_v)
}

/// One planner iteration. `visited_scene` is the recognizer's verdict at
/// this pose; it requests the climb to the next inspection loop. The
/// cloud must be in the world frame and non-empty; the mission engine
/// handles the empty-cloud case before calling.
pub fn inspection_step(
    p_mav: &Pose,
    cloud: &PointCloud,
    visited_scene: bool,
    params: &PlannerParams,
) -> Result<InspectionStep, PlannerError> {
    if cloud.frame != FrameTag::World {
        return Err(GeometryError::FrameMismatch {
            expected: FrameTag::World,
            found: cloud.frame,
        }
        .into());
    }
    let poi = nearest_point(cloud, p_mav.position)?;
    let basis = view_basis(poi, p_mav.position)?;
    let d = p_mav.position.distance(poi);
    let o_h = footprint_stride(params.alpha, d, params.gamma_h);

    // Slide one horizontal stride and regulate the stand-off distance in
    // the same move.
    let mut target = p_mav.position + basis.y * o_h + basis.x * (d - params.d_safety);
    let mut kind = StepKind::Lateral;
    let mut ascended = false;
    if visited_scene {
        let o_v = footprint_stride(params.beta, d, params.gamma_v);
        target = target + basis.z * o_v;
        let top = cloud.max_z().expect("cloud checked non-empty");
        if top < target.z {
            kind = StepKind::TopReached;
        } else {
            kind = StepKind::Ascend;
            ascended = true;
        }
    }
    let yaw = heading_of(basis.x)?;
    Ok(InspectionStep {
        next_pose: Pose::new(target, yaw),
        poi,
        basis,
        ascended,
        kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::kdtree::brute_force_nearest;

    const ALPHA: f64 = 86.0 * std::f64::consts::PI / 180.0;
    const BETA: f64 = 57.0 * std::f64::consts::PI / 180.0;

    #[test]
    fn overlap_strides_match_hand_computed_values() {
        // 2 tan(43 deg) * 0.2 and 2 tan(28.5 deg) * 0.5, from tables.
        let a = Vec3::ZERO;
        let b = Vec3::new(1.0, 0.0, 0.0);
        assert_relative_eq!(horizontal_overlap(a, b, ALPHA, 0.8), 0.3730, epsilon = 1e-4);
        assert_relative_eq!(vertical_overlap(a, b, BETA, 0.5), 0.5430, epsilon = 1e-4);
    }

    #[test]
    fn overlap_edge_cases() {
        let a = Vec3::ZERO;
        let b = Vec3::new(1.0, 0.0, 0.0);
        assert_relative_eq!(horizontal_overlap(a, b, ALPHA, 1.0), 0.0);
        let c = Vec3::new(1.0, 0.0, 0.0);
        assert_relative_eq!(
            horizontal_overlap(a, c, std::f64::consts::FRAC_PI_2, 0.0),
            2.0,
            epsilon = 1e-12
        );
        // Homogeneous in distance.
        let far = Vec3::new(2.0, 0.0, 0.0);
        assert_relative_eq!(
            vertical_overlap(a, far, BETA, 0.5),
            2.0 * vertical_overlap(a, b, BETA, 0.5),
            epsilon = 1e-12
        );
    }

    #[test]
    fn basis_axis_cases() {
        let b = view_basis(Vec3::new(1.0, 0.0, 1.0), Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert_relative_eq!(b.x.x, 1.0);
        assert_relative_eq!(b.y.y, 1.0);
        assert_relative_eq!(b.z.z, 1.0);

        let b = view_basis(Vec3::new(0.0, 2.0, 1.0), Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert_relative_eq!(b.x.y, 1.0);
        assert_relative_eq!(b.y.x, -1.0);
        assert_relative_eq!(b.z.z, 1.0);
    }

    #[test]
    fn basis_is_right_handed_orthonormal_with_upward_z() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let poi = Vec3::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(0.0..3.0),
            );
            let mav = Vec3::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(0.0..3.0),
            );
            let Ok(b) = view_basis(poi, mav) else { continue };
            assert_relative_eq!(b.x.norm(), 1.0, epsilon = 1e-9);
            assert_relative_eq!(b.y.norm(), 1.0, epsilon = 1e-9);
            assert_relative_eq!(b.z.norm(), 1.0, epsilon = 1e-9);
            assert!(b.x.dot(b.y).abs() < 1e-9);
            assert!(b.x.dot(b.z).abs() < 1e-9);
            assert!(b.y.dot(b.z).abs() < 1e-9);
            // Right-handed: det of [x y z] = x . (y cross z) = +1.
            assert_relative_eq!(b.x.dot(b.y.cross(b.z)), 1.0, epsilon = 1e-9);
            assert!(b.z.z > 0.0, "z axis must point up");
            // The y axis stays horizontal by construction.
            assert!(b.y.z.abs() < 1e-12);
        }
    }

    #[test]
    fn vertical_poi_is_degenerate() {
        let r = view_basis(Vec3::new(0.0, 0.0, 5.0), Vec3::new(0.0, 0.0, 1.0));
        assert!(matches!(r, Err(PlannerError::DegenerateView)));
        let same = view_basis(Vec3::ZERO, Vec3::ZERO);
        assert!(matches!(same, Err(PlannerError::DegenerateView)));
    }

    #[test]
    fn heading_examples() {
        assert_relative_eq!(heading_of(Vec3::new(1.0, 0.0, 0.0)).unwrap(), 0.0);
        assert_relative_eq!(
            heading_of(Vec3::new(0.0, 1.0, 0.0)).unwrap(),
            std::f64::consts::FRAC_PI_2
        );
        let s = 0.5_f64.sqrt();
        assert_relative_eq!(
            heading_of(Vec3::new(-s, -s, 0.0)).unwrap(),
            -3.0 * std::f64::consts::FRAC_PI_4,
            epsilon = 1e-12
        );
        assert!(matches!(
            heading_of(Vec3::new(0.0, 0.0, 1.0)),
            Err(PlannerError::DegenerateView)
        ));
    }

    #[test]
    fn nearest_point_basics() {
        let cloud = PointCloud::from_points(
            vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)],
            FrameTag::World,
        );
        let p = nearest_point(&cloud, Vec3::ZERO).unwrap();
        assert_relative_eq!(p.x, 1.0);
        let empty = PointCloud::new(FrameTag::World);
        assert!(matches!(
            nearest_point(&empty, Vec3::ZERO),
            Err(PlannerError::EmptyCloud)
        ));
    }

    #[test]
    fn nearest_point_agrees_with_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let pts: Vec<Vec3> = (0..200)
                .map(|_| {
                    Vec3::new(
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                    )
                })
                .collect();
            let query = Vec3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let cloud = PointCloud::from_points(pts.clone(), FrameTag::World);
            let got = nearest_point(&cloud, query).unwrap();
            let want = brute_force_nearest(&pts, query).unwrap().0;
            assert_eq!(got, want);
        }
    }

    fn wall_cloud() -> PointCloud {
        // Dense samples of the plane x = 1 around z = 1.
        let mut pts = Vec::new();
        for iy in -10..=10 {
            for iz in 0..=20 {
                pts.push(Vec3::new(1.0, iy as f64 * 0.1, iz as f64 * 0.1));
            }
        }
        PointCloud::from_points(pts, FrameTag::World)
    }

    #[test]
    fn lateral_slide_at_standoff() {
        let pose = Pose::new(Vec3::new(0.0, 0.0, 1.0), 0.0);
        let step =
            inspection_step(&pose, &wall_cloud(), false, &PlannerParams::default()).unwrap();
        assert_eq!(step.kind, StepKind::Lateral);
        assert!(!step.ascended);
        assert_relative_eq!(step.poi.x, 1.0);
        assert_relative_eq!(step.next_pose.position.x, 0.0, epsilon = 1e-9);
        assert_relative_eq!(step.next_pose.position.y, 0.3730, epsilon = 1e-4);
        assert_relative_eq!(step.next_pose.position.z, 1.0, epsilon = 1e-9);
        assert_relative_eq!(step.next_pose.yaw, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn distance_regulation_restores_standoff_in_one_step() {
        // From 1.5 m out, the correction term is exactly +0.5 along x.
        let pose = Pose::new(Vec3::new(-0.5, 0.0, 1.0), 0.0);
        let step =
            inspection_step(&pose, &wall_cloud(), false, &PlannerParams::default()).unwrap();
        assert_relative_eq!(step.next_pose.position.x, 0.0, epsilon = 1e-9);
        let d_after = (1.0 - step.next_pose.position.x).abs();
        assert_relative_eq!(d_after, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn distance_regulation_contracts_from_anywhere() {
        let params = PlannerParams::default();
        for d0 in [0.6, 0.8, 1.2, 1.4] {
            let pose = Pose::new(Vec3::new(1.0 - d0, 0.0, 1.0), 0.0);
            let step = inspection_step(&pose, &wall_cloud(), false, &params).unwrap();
            // One exact-POI step restores the stand-off against a flat wall.
            assert_relative_eq!(1.0 - step.next_pose.position.x, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn visited_scene_climbs_one_vertical_stride() {
        let pose = Pose::new(Vec3::new(0.0, 0.0, 1.0), 0.0);
        let step =
            inspection_step(&pose, &wall_cloud(), true, &PlannerParams::default()).unwrap();
        assert_eq!(step.kind, StepKind::Ascend);
        assert!(step.ascended);
        assert_relative_eq!(step.next_pose.position.z, 1.5430, epsilon = 1e-4);
    }

    #[test]
    fn top_reached_when_no_cloud_above_target() {
        // Wall only up to z = 1.2: the 1.543 m ascent has nothing above it.
        let mut pts = Vec::new();
        for iy in -10..=10 {
            for iz in 0..=12 {
                pts.push(Vec3::new(1.0, iy as f64 * 0.1, iz as f64 * 0.1));
            }
        }
        let cloud = PointCloud::from_points(pts, FrameTag::World);
        let pose = Pose::new(Vec3::new(0.0, 0.0, 1.0), 0.0);
        let step = inspection_step(&pose, &cloud, true, &PlannerParams::default()).unwrap();
        assert_eq!(step.kind, StepKind::TopReached);
        assert!(!step.ascended);
    }

    #[test]
    fn lateral_steps_never_report_top() {
        let mut pts = Vec::new();
        for iy in -10..=10 {
            pts.push(Vec3::new(1.0, iy as f64 * 0.1, 0.9));
        }
        let cloud = PointCloud::from_points(pts, FrameTag::World);
        let pose = Pose::new(Vec3::new(0.0, 0.0, 1.0), 0.0);
        let step = inspection_step(&pose, &cloud, false, &PlannerParams::default()).unwrap();
        assert_eq!(step.kind, StepKind::Lateral);
    }

    #[test]
    fn body_frame_cloud_is_rejected() {
        let cloud = PointCloud::from_points(vec![Vec3::new(1.0, 0.0, 0.0)], FrameTag::Body);
        let pose = Pose::new(Vec3::ZERO, 0.0);
        assert!(matches!(
            inspection_step(&pose, &cloud, false, &PlannerParams::default()),
            Err(PlannerError::Geometry(GeometryError::FrameMismatch { .. }))
        ));
    }
}
