use super::Vec3;
use crate::error::{Error, Result};

/// Static 3-d tree for nearest-neighbour queries.
#[derive(Clone, Debug)]
pub struct KdTree {
    points: Vec<Vec3>,
    // Implicit balanced layout: node = median of `order[lo..hi]`.
    order: Vec<usize>,
}

impl KdTree {
    pub fn new(points: &[Vec3]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        build(points, &mut order, 0);
        Self {
            points: points.to_vec(),
            order,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index and squared distance of the nearest point.
    pub fn nearest(&self, q: &Vec3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(q, 0, self.order.len(), 0, &mut best);
        Some(best)
    }

    fn search(&self, q: &Vec3, lo: usize, hi: usize, depth: usize, best: &mut (usize, f64)) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let idx = self.order[mid];
        let p = &self.points[idx];
        let d2 = (p - q).norm_squared();
        if d2 < best.1 || (d2 == best.1 && idx < best.0) {
            *best = (idx, d2);
        }
        let axis = depth % 3;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(q, near.0, near.1, depth + 1, best);
        if diff * diff <= best.1 {
            self.search(q, far.0, far.1, depth + 1, best);
        }
    }
}

fn build(points: &[Vec3], order: &mut [usize], depth: usize) {
    if order.len() <= 1 {
        return;
    }
    let axis = depth % 3;
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| points[a][axis].total_cmp(&points[b][axis]));
    let (left, right) = order.split_at_mut(mid);
    build(points, left, depth + 1);
    build(points, &mut right[1..], depth + 1);
}

/// Mean distance from each of `points` to its nearest `target`, in mm.
pub fn chamfer_one_way(points: &[Vec3], target: &[Vec3]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyInput("chamfer source points"));
    }
    if target.is_empty() {
        return Err(Error::EmptyInput("chamfer target samples"));
    }
    let tree = KdTree::new(target);
    let mut sum = 0.0;
    for p in points {
        let (_, d2) = tree.nearest(p).expect("target is non-empty");
        sum += d2.sqrt();
    }
    Ok(sum / points.len() as f64 * 1000.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(points: &[Vec3], target: &[Vec3]) -> f64 {
        let mut sum = 0.0;
        for p in points {
            let d2 = target
                .iter()
                .map(|t| (t - p).norm_squared())
                .fold(f64::INFINITY, f64::min);
            sum += d2.sqrt();
        }
        sum / points.len() as f64 * 1000.0
    }

    #[test]
    fn one_metre_is_a_thousand_mm() {
        let d = chamfer_one_way(&[Vec3::new(1.0, 0.0, 0.0)], &[Vec3::zeros()]).unwrap();
        assert_eq!(d, 1000.0);
    }

    #[test]
    fn identical_sets_are_zero() {
        let pts: Vec<Vec3> = (0..50).map(|i| Vec3::new(i as f64, (i * 7 % 5) as f64, 0.3)).collect();
        assert_eq!(chamfer_one_way(&pts, &pts).unwrap(), 0.0);
    }

    #[test]
    fn empty_inputs_error() {
        assert!(chamfer_one_way(&[], &[Vec3::zeros()]).is_err());
        assert!(chamfer_one_way(&[Vec3::zeros()], &[]).is_err());
    }

    proptest! {
        #[test]
        fn kd_tree_matches_brute_force_exactly(
            src in prop::collection::vec(prop::array::uniform3(-2.0f64..2.0), 1..60),
            dst in prop::collection::vec(prop::array::uniform3(-2.0f64..2.0), 1..200),
        ) {
            let src: Vec<Vec3> = src.into_iter().map(Vec3::from).collect();
            let dst: Vec<Vec3> = dst.into_iter().map(Vec3::from).collect();
            prop_assert_eq!(chamfer_one_way(&src, &dst).unwrap(), brute(&src, &dst));
        }
    }
}
