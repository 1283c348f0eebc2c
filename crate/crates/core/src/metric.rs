//! Finite metric spaces: balls, offsets and the Hausdorff family of
//! subset distances.
//!
//! Balls are closed (`d <= eps`). Two closed `eps`-balls are taken to meet
//! when their centres are within `2 eps`, which is exact for Euclidean
//! input. All threshold comparisons go through [`within`] so that ties are
//! resolved identically everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subset::{Partition, SubsetId};
use crate::union_find::DisjointSets;

/// Tolerance used when comparing a distance against a threshold.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Above this many points the O(n^3) triangle check is skipped by default.
pub const TRIANGLE_CHECK_LIMIT: usize = 500;

/// `value <= threshold` up to [`TIE_TOLERANCE`].
#[inline]
pub fn within(value: f64, threshold: f64) -> bool {
    value <= threshold + TIE_TOLERANCE
}

/// Whether the closed `eps`-balls around two points at distance `d` meet.
#[inline]
pub fn balls_meet(d: f64, eps: f64) -> bool {
    within(d * 0.5, eps)
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TriangleCheck {
    /// Check when `n <= TRIANGLE_CHECK_LIMIT`.
    #[default]
    Auto,
    Always,
    Never,
}

/// A finite metric sample, either Euclidean coordinates or a distance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    points: Option<Vec<Vec<f64>>>,
    n: usize,
    dist: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl PointCloud {
    /// Euclidean cloud. Rejects ragged rows, non-finite values and
    /// duplicate points.
    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        if let Some(first) = points.first() {
            let dim = first.len();
            if dim == 0 {
                return Err(Error::InvalidParameter("points have dimension 0".into()));
            }
            for (i, p) in points.iter().enumerate() {
                if p.len() != dim {
                    return Err(Error::InvalidParameter(format!(
                        "point {i} has dimension {} but expected {dim}",
                        p.len()
                    )));
                }
                if p.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "point {i} has a non-finite coordinate"
                    )));
                }
            }
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = euclidean(&points[i], &points[j]);
                if d <= 0.0 {
                    return Err(Error::InvalidMetric(format!(
                        "points {i} and {j} coincide"
                    )));
                }
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Ok(PointCloud {
            points: Some(points),
            n,
            dist,
            labels: None,
        })
    }

    /// Cloud given only by a full symmetric distance matrix.
    pub fn from_distances(matrix: Vec<Vec<f64>>, check: TriangleCheck) -> Result<Self> {
        let n = matrix.len();
        let mut dist = vec![0.0; n * n];
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMetric(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &d) in row.iter().enumerate() {
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::InvalidMetric(format!(
                        "entry ({i},{j}) = {d} is not a finite non-negative real"
                    )));
                }
                dist[i * n + j] = d;
            }
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(Error::InvalidMetric(format!("diagonal entry {i} is nonzero")));
            }
            for j in (i + 1)..n {
                if dist[i * n + j] != dist[j * n + i] {
                    return Err(Error::InvalidMetric(format!(
                        "entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
                if dist[i * n + j] == 0.0 {
                    return Err(Error::InvalidMetric(format!(
                        "points {i} and {j} are at distance zero"
                    )));
                }
            }
        }
        let run_check = match check {
            TriangleCheck::Always => true,
            TriangleCheck::Never => false,
            TriangleCheck::Auto => n <= TRIANGLE_CHECK_LIMIT,
        };
        if run_check {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let direct = dist[i * n + k];
                        let detour = dist[i * n + j] + dist[j * n + k];
                        if direct > detour + TIE_TOLERANCE * (1.0 + detour) {
                            return Err(Error::InvalidMetric(format!(
                                "triangle inequality fails for ({i},{j},{k})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(PointCloud {
            points: None,
            n,
            dist,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::InvalidParameter(format!(
                "{} labels for {} points",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn points(&self) -> Option<&[Vec<f64>]> {
        self.points.as_deref()
    }

    pub fn point(&self, i: usize) -> Option<&[f64]> {
        self.points.as_ref().map(|p| p[i].as_slice())
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Label of point `i`, falling back to its index.
    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        }
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                len: self.n,
            })
        }
    }

    pub fn all(&self) -> SubsetId {
        SubsetId::full(self.n)
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Filter values given by one coordinate.
    pub fn coordinate(&self, axis: usize) -> Result<Vec<f64>> {
        let points = self.points.as_ref().ok_or_else(|| {
            Error::InvalidParameter("coordinate filter needs point coordinates".into())
        })?;
        if points.first().is_some_and(|p| axis >= p.len()) {
            return Err(Error::InvalidParameter(format!(
                "axis {axis} out of range for dimension {}",
                points[0].len()
            )));
        }
        Ok(points.iter().map(|p| p[axis]).collect())
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be a positive real, got {v}"
        )))
    }
}

/// Closed `eps`-ball around `center`, as a set of sample points.
pub fn ball(cloud: &PointCloud, center: usize, eps: f64) -> Result<SubsetId> {
    cloud.check_index(center)?;
    check_positive("eps", eps)?;
    Ok((0..cloud.len())
        .filter(|&q| within(cloud.dist(center, q), eps))
        .collect())
}

/// Connected components of the `eps`-offset of `subset`, traced on the
/// subset's own points.
pub fn offset_components(cloud: &PointCloud, subset: &SubsetId, eps: f64) -> Result<Partition> {
    check_positive("eps", eps)?;
    subset.check_bound(cloud.len())?;
    Ok(offset_components_unchecked(cloud, subset, eps))
}

pub(crate) fn offset_components_unchecked(
    cloud: &PointCloud,
    subset: &SubsetId,
    eps: f64,
) -> Partition {
    let m = subset.members();
    let mut ds = DisjointSets::new(m.len());
    for a in 0..m.len() {
        for b in (a + 1)..m.len() {
            if balls_meet(cloud.dist(m[a], m[b]), eps) {
                ds.union(a, b);
            }
        }
    }
    ds.blocks()
        .into_iter()
        .map(|block| block.iter().map(|k| m[k]).collect())
        .collect()
}

fn check_nonempty(s: &SubsetId, t: &SubsetId, n: usize) -> Result<()> {
    if s.is_empty() || t.is_empty() {
        return Err(Error::EmptySubspace);
    }
    s.check_bound(n)?;
    t.check_bound(n)
}

/// `sup_{t in T} inf_{s in S} d(s, t)`
fn partial_hausdorff(cloud: &PointCloud, s: &SubsetId, t: &SubsetId) -> f64 {
    t.iter()
        .map(|y| {
            s.iter()
                .map(|x| cloud.dist(x, y))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

pub fn hausdorff(cloud: &PointCloud, s: &SubsetId, t: &SubsetId) -> Result<f64> {
    check_nonempty(s, t, cloud.len())?;
    Ok(partial_hausdorff(cloud, s, t).max(partial_hausdorff(cloud, t, s)))
}

/// Smallest pairwise distance between the subsets.
pub fn single_link_dist(cloud: &PointCloud, s: &SubsetId, t: &SubsetId) -> Result<f64> {
    check_nonempty(s, t, cloud.len())?;
    Ok(s.iter()
        .flat_map(|x| t.iter().map(move |y| (x, y)))
        .map(|(x, y)| cloud.dist(x, y))
        .fold(f64::INFINITY, f64::min))
}

/// Largest pairwise distance between the subsets.
pub fn complete_link_dist(cloud: &PointCloud, s: &SubsetId, t: &SubsetId) -> Result<f64> {
    check_nonempty(s, t, cloud.len())?;
    Ok(s.iter()
        .flat_map(|x| t.iter().map(move |y| (x, y)))
        .map(|(x, y)| cloud.dist(x, y))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::VecDeque;

    fn line(xs: &[f64]) -> PointCloud {
        PointCloud::from_points(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    fn s(v: &[usize]) -> SubsetId {
        SubsetId::new(v.to_vec())
    }

    /// Threshold graph with edges `d <= 2 eps`, components by BFS.
    fn bfs_components(cloud: &PointCloud, subset: &SubsetId, eps: f64) -> Vec<SubsetId> {
        let m = subset.members();
        let mut seen = vec![false; m.len()];
        let mut out = Vec::new();
        for start in 0..m.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            let mut block = Vec::new();
            while let Some(a) = queue.pop_front() {
                block.push(m[a]);
                for b in 0..m.len() {
                    if !seen[b] && cloud.dist(m[a], m[b]) * 0.5 <= eps + TIE_TOLERANCE {
                        seen[b] = true;
                        queue.push_back(b);
                    }
                }
            }
            out.push(SubsetId::new(block));
        }
        out.sort_by_key(|b| b.min());
        out
    }

    #[test]
    fn ball_examples() {
        let c = line(&[0.0, 1.0]);
        assert_eq!(ball(&c, 0, 0.5).unwrap(), s(&[0]));
        assert_eq!(ball(&c, 0, 1.5).unwrap(), s(&[0, 1]));
        let c3 = line(&[0.0, 0.1, 0.2]);
        assert_eq!(ball(&c3, 1, 0.15).unwrap(), s(&[0, 1, 2]));
        assert!(matches!(ball(&c, 2, 1.0), Err(Error::IndexOutOfRange { .. })));
        assert!(ball(&c, 0, 0.0).is_err());
    }

    #[test]
    fn closed_ball_contains_boundary() {
        let c = line(&[0.0, 1.0]);
        assert_eq!(ball(&c, 0, 1.0).unwrap(), s(&[0, 1]));
    }

    #[test]
    fn offset_examples() {
        let c = line(&[0.0, 1.0, 3.0]);
        let parts = offset_components(&c, &c.all(), 0.6).unwrap();
        assert_eq!(parts, vec![s(&[0, 1]), s(&[2])]);
        let all = offset_components(&c, &c.all(), c.diameter() / 2.0).unwrap();
        assert_eq!(all, vec![s(&[0, 1, 2])]);
        assert_eq!(offset_components(&c, &s(&[2]), 0.1).unwrap(), vec![s(&[2])]);
        assert!(offset_components(&c, &SubsetId::empty(), 0.1).unwrap().is_empty());
    }

    #[test]
    fn hausdorff_examples() {
        let c = line(&[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(hausdorff(&c, &s(&[0]), &s(&[3])).unwrap(), 3.0);
        // S = {0,1}, T = {0,3}: d_S|T = max(0, 2) = 2, d_T|S = max(0, 1) = 1
        assert_eq!(hausdorff(&c, &s(&[0, 1]), &s(&[0, 3])).unwrap(), 2.0);
        assert_eq!(hausdorff(&c, &s(&[1, 2]), &s(&[1, 2])).unwrap(), 0.0);
        assert_eq!(hausdorff(&c, &SubsetId::empty(), &s(&[1])), Err(Error::EmptySubspace));
    }

    #[test]
    fn linkage_examples() {
        let c = line(&[0.0, 1.0, 2.0, 3.0]);
        let (a, b) = (s(&[0, 1]), s(&[0, 3]));
        assert_eq!(single_link_dist(&c, &a, &b).unwrap(), 0.0);
        assert_eq!(complete_link_dist(&c, &a, &b).unwrap(), 3.0);
        assert_eq!(single_link_dist(&c, &s(&[0]), &s(&[3])).unwrap(), 3.0);
        assert_eq!(complete_link_dist(&c, &s(&[0]), &s(&[3])).unwrap(), 3.0);
        assert_eq!(single_link_dist(&c, &a, &a).unwrap(), 0.0);
        assert_eq!(complete_link_dist(&c, &a, &a).unwrap(), 1.0);
        assert!(complete_link_dist(&c, &a, &SubsetId::empty()).is_err());
    }

    #[test]
    fn distance_matrix_validation() {
        let ok = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!(PointCloud::from_distances(ok, TriangleCheck::Auto).is_ok());
        let asym = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(PointCloud::from_distances(asym, TriangleCheck::Auto).is_err());
        let diag = vec![vec![1.0, 1.0], vec![1.0, 0.0]];
        assert!(PointCloud::from_distances(diag, TriangleCheck::Auto).is_err());
        let pseudo = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        assert!(PointCloud::from_distances(pseudo, TriangleCheck::Auto).is_err());
        let tri = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ];
        assert!(PointCloud::from_distances(tri.clone(), TriangleCheck::Auto).is_err());
        assert!(PointCloud::from_distances(tri, TriangleCheck::Never).is_ok());
    }

    #[test]
    fn duplicate_points_rejected() {
        assert!(PointCloud::from_points(vec![vec![0.0], vec![0.0]]).is_err());
        assert!(PointCloud::from_points(vec![vec![0.0], vec![1.0, 2.0]]).is_err());
    }

    fn cloud_strategy() -> impl Strategy<Value = PointCloud> {
        prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 2), 1..40).prop_filter_map(
            "distinct points",
            |pts| PointCloud::from_points(pts).ok(),
        )
    }

    proptest! {
        #[test]
        fn offset_matches_bfs(cloud in cloud_strategy(), eps in 0.05f64..5.0) {
            let all = cloud.all();
            prop_assert_eq!(offset_components(&cloud, &all, eps).unwrap(), bfs_components(&cloud, &all, eps));
        }

        #[test]
        fn offset_is_monotone(cloud in cloud_strategy(), e1 in 0.05f64..3.0, de in 0.0f64..3.0) {
            let all = cloud.all();
            let fine = offset_components(&cloud, &all, e1).unwrap();
            let coarse = offset_components(&cloud, &all, e1 + de).unwrap();
            prop_assert!(crate::subset::refines(&fine, &coarse));
        }

        #[test]
        fn hausdorff_chain(cloud in cloud_strategy(), seed in any::<u64>()) {
            let n = cloud.len();
            let pick = |salt: u64| -> SubsetId {
                let v: Vec<usize> = (0..n).filter(|&i| (seed.wrapping_mul(31).wrapping_add(salt * 7 + i as u64 * 13)) % 3 == 0).collect();
                if v.is_empty() { SubsetId::singleton((salt as usize) % n) } else { SubsetId::new(v) }
            };
            let (a, b) = (pick(1), pick(2));
            let lo = single_link_dist(&cloud, &a, &b).unwrap();
            let h = hausdorff(&cloud, &a, &b).unwrap();
            let hi = complete_link_dist(&cloud, &a, &b).unwrap();
            prop_assert!(lo <= h && h <= hi);
            prop_assert_eq!(h, hausdorff(&cloud, &b, &a).unwrap());
            prop_assert_eq!(hausdorff(&cloud, &a, &a).unwrap(), 0.0);
        }
    }
}
