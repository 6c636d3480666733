//! Three-dimensional k-d tree used for nearest-point queries against the
//! current sensor cloud.
//!
//! Ties on distance are broken toward the smallest insertion index so a
//! query between duplicate points always resolves the same way as a
//! linear scan would.

use crate::geometry::Vec3;

#[derive(Debug)]
struct Node {
    point: Vec3,
    index: usize,
    axis: usize,
    left: Option<Box<Node>>,
    right: Option<Box<Node>>,
}

/// Static k-d tree over a point set. Build once per sensor frame.
#[derive(Debug)]
pub struct KdTree {
    root: Option<Box<Node>>,
    len: usize,
}

fn axis_value(p: &Vec3, axis: usize) -> f64 {
    match axis {
        0 => p.x,
        1 => p.y,
        _ => p.z,
    }
}

fn build(mut items: Vec<(Vec3, usize)>, depth: usize) -> Option<Box<Node>> {
    if items.is_empty() {
        return None;
    }
    let axis = depth % 3;
    items.sort_by(|a, b| {
        axis_value(&a.0, axis)
            .partial_cmp(&axis_value(&b.0, axis))
            .unwrap()
            .then(a.1.cmp(&b.1))
    });
    let median = items.len() / 2;
    let right_items = items.split_off(median + 1);
    let (point, index) = items.pop().unwrap();
    Some(Box::new(Node {
        point,
        index,
        axis,
        left: build(items, depth + 1),
        right: build(right_items, depth + 1),
    }))
}

impl KdTree {
    pub fn build_from(points: &[Vec3]) -> Self {
        let items: Vec<(Vec3, usize)> = points.iter().copied().zip(0..).collect();
        let len = items.len();
        KdTree { root: build(items, 0), len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Nearest stored point to `query` and its insertion index. None when
    /// the tree is empty.
    pub fn nearest(&self, query: Vec3) -> Option<(Vec3, usize)> {
        let root = self.root.as_deref()?;
        let mut best = Best { dist_sq: f64::INFINITY, point: root.point, index: usize::MAX };
        search(root, query, &mut best);
        Some((best.point, best.index))
    }

    /// Distance from `query` to the nearest stored point.
    pub fn nearest_distance(&self, query: Vec3) -> Option<f64> {
        self.nearest(query).map(|(p, _)| p.distance(query))
    }
}

struct Best {
    dist_sq: f64,
    point: Vec3,
    index: usize,
}

fn search(node: &Node, query: Vec3, best: &mut Best) {
    let d = node.point - query;
    let dist_sq = d.dot(d);
    if dist_sq < best.dist_sq || (dist_sq == best.dist_sq && node.index < best.index) {
        best.dist_sq = dist_sq;
        best.point = node.point;
        best.index = node.index;
    }
    let delta = axis_value(&query, node.axis) - axis_value(&node.point, node.axis);
    let (near, far) = if delta < 0.0 {
        (&node.left, &node.right)
    } else {
        (&node.right, &node.left)
    };
    if let Some(n) = near {
        search(n, query, best);
    }
    // The far half-space can still hold an equal-distance point with a
    // smaller index, so prune only on strict excess.
    if let Some(f) = far {
        if delta * delta <= best.dist_sq {
            search(f, query, best);
        }
    }
}

/// Linear scan with the same tie-break contract; the reference the tree is
/// checked against in tests.
pub fn brute_force_nearest(points: &[Vec3], query: Vec3) -> Option<(Vec3, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (i, p) in points.iter().enumerate() {
        let d = *p - query;
        let dist_sq = d.dot(d);
        let better = match best {
            None => true,
            Some((bd, _)) => dist_sq < bd,
        };
        if better {
            best = Some((dist_sq, i));
        }
    }
    best.map(|(_, i)| (points[i], i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_tree_has_no_nearest() {
        let tree = KdTree::build_from(&[]);
        assert!(tree.nearest(Vec3::ZERO).is_none());
    }

    #[test]
    fn single_point_is_always_nearest() {
        let p = Vec3::new(1.0, -2.0, 0.5);
        let tree = KdTree::build_from(&[p]);
        assert_eq!(tree.nearest(Vec3::new(9.0, 9.0, 9.0)), Some((p, 0)));
    }

    #[test]
    fn duplicate_points_resolve_to_first_inserted() {
        let p = Vec3::new(1.0, 1.0, 1.0);
        let pts = vec![Vec3::new(5.0, 5.0, 5.0), p, p, p];
        let tree = KdTree::build_from(&pts);
        let (_, idx) = tree.nearest(Vec3::new(1.1, 1.0, 1.0)).unwrap();
        assert_eq!(idx, 1);
        assert_eq!(brute_force_nearest(&pts, Vec3::new(1.1, 1.0, 1.0)).unwrap().1, 1);
    }

    #[test]
    fn symmetric_tie_prefers_lower_index() {
        // Query sits exactly between two points; index order decides.
        let pts = vec![Vec3::new(2.0, 0.0, 0.0), Vec3::new(-2.0, 0.0, 0.0)];
        let tree = KdTree::build_from(&pts);
        let (_, idx) = tree.nearest(Vec3::ZERO).unwrap();
        assert_eq!(idx, 0);
    }

    #[test]
    fn matches_linear_scan_on_random_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..200 {
            let pts: Vec<Vec3> = (0..64)
                .map(|_| {
                    Vec3::new(
                        rng.gen_range(-3.0..3.0),
                        rng.gen_range(-3.0..3.0),
                        rng.gen_range(-3.0..3.0),
                    )
                })
                .collect();
            let tree = KdTree::build_from(&pts);
            for _ in 0..16 {
                let q = Vec3::new(
                    rng.gen_range(-4.0..4.0),
                    rng.gen_range(-4.0..4.0),
                    rng.gen_range(-4.0..4.0),
                );
                let got = tree.nearest(q).unwrap();
                let want = brute_force_nearest(&pts, q).unwrap();
                assert_eq!(got.1, want.1);
            }
        }
    }
}
