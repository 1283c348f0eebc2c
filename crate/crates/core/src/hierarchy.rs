//! Linkage hierarchies, density-based clustering and merge trees of radius
//! filtrations.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{ball, complete_link_dist, offset_components_unchecked, single_link_dist, within, PointCloud};
use crate::subset::{canonical_partition, Partition, SubsetId};
use crate::thd::{Level, ThdKind, ThdNode, ThdPoset};
use crate::union_find::DisjointSets;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkageMode {
    Single,
    Complete,
}

impl FromStr for LinkageMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(LinkageMode::Single),
            "complete" => Ok(LinkageMode::Complete),
            other => Err(Error::InvalidParameter(format!("unknown linkage mode {other}"))),
        }
    }
}

impl fmt::Display for LinkageMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkageMode::Single => "single",
            LinkageMode::Complete => "complete",
        })
    }
}

/// A linkage hierarchy: the partitions after each merge step together with
/// the step heights. `partitions[0]` is the discrete partition.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkageTree {
    pub mode: LinkageMode,
    pub heights: Vec<f64>,
    pub partitions: Vec<Partition>,
    pub thd: ThdPoset,
}

impl LinkageTree {
    /// The partition in force at height `h`.
    pub fn partition_at(&self, h: f64) -> &Partition {
        let steps = self.heights.iter().take_while(|&&l| within(l, h)).count();
        &self.partitions[steps]
    }
}

/// Agglomerative clustering where every pair of current clusters at the
/// minimum linkage distance merges at once.
pub fn linkage_thd(cloud: &PointCloud, mode: LinkageMode) -> Result<LinkageTree> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let n = cloud.len();
    let mut current: Partition = (0..n).map(SubsetId::singleton).collect();
    let mut partitions = vec![current.clone()];
    let mut heights = Vec::new();
    while current.len() > 1 {
        let pairs: Vec<(usize, usize)> = (0..current.len())
            .flat_map(|a| ((a + 1)..current.len()).map(move |b| (a, b)))
            .collect();
        let dists: Vec<f64> = pairs
            .par_iter()
            .map(|&(a, b)| {
                let (s, t) = (&current[a], &current[b]);
                match mode {
                    LinkageMode::Single => single_link_dist(cloud, s, t),
                    LinkageMode::Complete => complete_link_dist(cloud, s, t),
                }
                .expect("blocks are nonempty")
            })
            .collect();
        let level = dists.iter().copied().fold(f64::INFINITY, f64::min);
        let mut ds = DisjointSets::new(current.len());
        for (&(a, b), &d) in pairs.iter().zip(&dists) {
            if within(d, level) {
                ds.union(a, b);
            }
        }
        let merged = ds
            .blocks()
            .into_iter()
            .map(|group| group.iter().fold(SubsetId::empty(), |acc, k| acc.union(&current[k])))
            .collect();
        current = canonical_partition(merged);
        heights.push(level);
        partitions.push(current.clone());
    }
    let mut levels = vec![0.0];
    levels.extend(&heights);
    let mut thd = chain_thd(&levels, &partitions);
    thd.heights = Some(heights.clone());
    Ok(LinkageTree {
        mode,
        heights,
        partitions,
        thd,
    })
}

/// Dendrogram of nested partitions, one level per entry of `levels`, with
/// edges from each block to the block containing it one level up.
fn chain_thd(levels: &[f64], partitions: &[Partition]) -> ThdPoset {
    let mut thd = ThdPoset::empty(ThdKind::DendrogramChain);
    let mut previous: Vec<usize> = Vec::new();
    for (&h, partition) in levels.iter().zip(partitions) {
        let start = thd.nodes.len();
        for block in partition {
            thd.nodes.push(ThdNode {
                level: Level::Height(h),
                simplex: None,
                label: block.to_string(),
                block: Some(block.clone()),
            });
        }
        for &child in &previous {
            let member = thd.nodes[child].block.as_ref().and_then(SubsetId::min).expect("nonempty block");
            let parent = partition
                .iter()
                .position(|b| b.contains(member))
                .expect("partitions are nested");
            thd.edges.push((child, start + parent));
        }
        previous = (start..thd.nodes.len()).collect();
    }
    thd
}

/// Output of density-based clustering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DbsClustering {
    pub clusters: Partition,
    pub outliers: SubsetId,
    pub core: SubsetId,
}

/// Core points have at least `k` sample points (themselves included) within
/// `delta`. Each core point `q` contributes the canonical clustering of the
/// `eps`-offset of its `delta`-neighbourhood, and the result is the join of
/// those clusterings.
pub fn dbs_clustering(cloud: &PointCloud, k: usize, delta: f64, eps: f64) -> Result<DbsClustering> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if !(delta > 0.0 && delta.is_finite()) || !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter("delta and eps must be positive".into()));
    }
    let n = cloud.len();
    let neighbourhoods: Vec<SubsetId> = (0..n)
        .into_par_iter()
        .map(|q| ball(cloud, q, delta))
        .collect::<Result<_>>()?;
    let core: SubsetId = (0..n).filter(|&q| neighbourhoods[q].len() >= k).collect();
    let blocks: Vec<Vec<SubsetId>> = core
        .members()
        .par_iter()
        .map(|&q| {
            offset_components_unchecked(cloud, &neighbourhoods[q], eps)
                .into_iter()
                .map(|centers| {
                    (0..n)
                        .filter(|&x| centers.iter().any(|c| within(cloud.dist(c, x), eps)))
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut ds = DisjointSets::new(n);
    let mut reached = vec![false; n];
    for block in blocks.iter().flatten() {
        let m = block.members();
        for &x in m {
            reached[x] = true;
            ds.union(m[0], x);
        }
    }
    let clusters = canonical_partition(
        ds.blocks()
            .into_iter()
            .filter(|b| reached[b.members()[0]])
            .collect(),
    );
    let outliers = (0..n).filter(|&x| !reached[x]).collect();
    Ok(DbsClustering {
        clusters,
        outliers,
        core,
    })
}

/// Merge tree of `eps ↦ π₀(P^eps)` sampled at the given radii.
pub fn radius_filtration_thd(cloud: &PointCloud, radii: &[f64]) -> Result<ThdPoset> {
    if radii.is_empty() {
        return Err(Error::InvalidParameter("no radii given".into()));
    }
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidParameter("radii must be positive".into()));
    }
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("radii must be strictly increasing".into()));
    }
    let all = cloud.all();
    let partitions: Vec<Partition> = radii
        .par_iter()
        .map(|&r| offset_components_unchecked(cloud, &all, r))
        .collect();
    Ok(chain_thd(radii, &partitions))
}
