//! Covers of finite samples, their nerves, and the canonical map from a
//! space to the nerve of a cover.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{balls_meet, within, PointCloud};
use crate::miniball::minimum_enclosing_ball;
use crate::subset::{Partition, SubsetId};
use crate::union_find::DisjointSets;

/// A simplex of a nerve: a sorted list of cover identifiers.
pub type Simplex = Vec<usize>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallDescriptor {
    pub center: usize,
    pub radius: f64,
}

/// An indexed family of subsets of a finite universe whose union is the
/// whole universe. Identifiers are `0..len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cover {
    universe: usize,
    realize: Vec<SubsetId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    geometry: Option<Vec<BallDescriptor>>,
    /// Contractible intersections are assumed, never verified.
    #[serde(default)]
    pub good_cover_assumed: bool,
}

impl Cover {
    pub fn new(universe: usize, realize: Vec<SubsetId>) -> Result<Self> {
        let mut covered = vec![false; universe];
        for set in &realize {
            set.check_bound(universe)?;
            for x in set.iter() {
                covered[x] = true;
            }
        }
        if let Some(x) = covered.iter().position(|c| !c) {
            return Err(Error::CoverConditionViolated(x));
        }
        Ok(Cover {
            universe,
            realize,
            geometry: None,
            good_cover_assumed: false,
        })
    }

    /// Closed `eps`-balls around every sample point.
    pub fn balls(cloud: &PointCloud, eps: f64) -> Result<Self> {
        let realize = (0..cloud.len())
            .map(|c| crate::metric::ball(cloud, c, eps))
            .collect::<Result<Vec<_>>>()?;
        let mut cover = Cover::new(cloud.len(), realize)?;
        cover.geometry = Some(
            (0..cloud.len())
                .map(|center| BallDescriptor { center, radius: eps })
                .collect(),
        );
        Ok(cover)
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.realize.len()
    }

    pub fn is_empty(&self) -> bool {
        self.realize.is_empty()
    }

    pub fn realize(&self, i: usize) -> &SubsetId {
        &self.realize[i]
    }

    pub fn sets(&self) -> &[SubsetId] {
        &self.realize
    }

    pub fn geometry(&self) -> Option<&[BallDescriptor]> {
        self.geometry.as_deref()
    }

    /// `U_sigma`, the common intersection of the cover sets in `sigma`.
    pub fn simplex_trace(&self, sigma: &[usize]) -> SubsetId {
        let mut it = sigma.iter();
        let Some(&first) = it.next() else {
            return SubsetId::full(self.universe);
        };
        it.fold(self.realize[first].clone(), |acc, &i| {
            acc.intersection(&self.realize[i])
        })
    }

    pub fn has_duplicates(&self) -> bool {
        let distinct: BTreeSet<&SubsetId> = self.realize.iter().collect();
        distinct.len() != self.realize.len()
    }

    /// Merges identifiers realizing identical subsets, keeping first
    /// occurrences in order. Returns the old-to-new identifier map.
    pub fn dedup(&self) -> (Cover, Vec<usize>) {
        let mut kept: Vec<SubsetId> = Vec::new();
        let mut geometry = Vec::new();
        let mut map = Vec::with_capacity(self.realize.len());
        for (i, set) in self.realize.iter().enumerate() {
            match kept.iter().position(|k| k == set) {
                Some(j) => map.push(j),
                None => {
                    map.push(kept.len());
                    kept.push(set.clone());
                    if let Some(g) = &self.geometry {
                        geometry.push(g[i]);
                    }
                }
            }
        }
        let cover = Cover {
            universe: self.universe,
            realize: kept,
            geometry: self.geometry.as_ref().map(|_| geometry),
            good_cover_assumed: self.good_cover_assumed,
        };
        (cover, map)
    }
}

/// A nerve: a downward-closed family of simplices, stored in lexicographic
/// order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Nerve {
    simplices: BTreeSet<Simplex>,
    /// `None` when every simplex of the underlying nerve is present.
    #[serde(default)]
    dim_cap: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NerveMode {
    /// Minimum enclosing ball test on coordinates.
    Geometric,
    /// A simplex is present iff some sample point lies in all its sets.
    Witness,
}

impl Nerve {
    /// Builds from arbitrary simplices, closing downward.
    pub fn from_simplices<I: IntoIterator<Item = Simplex>>(simplices: I, dim_cap: Option<usize>) -> Self {
        let mut set = BTreeSet::new();
        for mut s in simplices {
            s.sort_unstable();
            s.dedup();
            add_with_faces(&mut set, &s);
        }
        Nerve {
            simplices: set,
            dim_cap,
        }
    }

    /// The full nerve of a cover, witnessed by sample points.
    pub fn of_cover(cover: &Cover) -> Self {
        Self::witness(cover, None)
    }

    /// Witness nerve, optionally truncated at dimension `dim_cap`.
    pub fn witness(cover: &Cover, dim_cap: Option<usize>) -> Self {
        let mut set = BTreeSet::new();
        for i in 0..cover.len() {
            if !cover.realize(i).is_empty() {
                set.insert(vec![i]);
            }
        }
        let mut tops: BTreeSet<Simplex> = BTreeSet::new();
        for x in 0..cover.universe() {
            tops.insert(eta_unchecked(cover, x));
        }
        for top in tops {
            match dim_cap {
                None => add_with_faces(&mut set, &top),
                Some(cap) => add_faces_up_to(&mut set, &top, cap + 1),
            }
        }
        Nerve {
            simplices: set,
            dim_cap,
        }
    }

    pub fn simplices(&self) -> impl Iterator<Item = &Simplex> {
        self.simplices.iter()
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn dim_cap(&self) -> Option<usize> {
        self.dim_cap
    }

    pub fn contains(&self, sigma: &[usize]) -> bool {
        self.simplices.contains(sigma)
    }

    pub fn vertices(&self) -> Vec<usize> {
        self.simplices
            .iter()
            .filter(|s| s.len() == 1)
            .map(|s| s[0])
            .collect()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.simplices
            .iter()
            .filter(|s| s.len() == 2)
            .map(|s| (s[0], s[1]))
            .collect()
    }

    /// Simplices containing `sigma`.
    pub fn up_set(&self, sigma: &[usize]) -> Vec<Simplex> {
        self.simplices
            .iter()
            .filter(|t| is_sorted_subset(sigma, t))
            .cloned()
            .collect()
    }

    pub fn is_subcomplex_of(&self, other: &Nerve) -> bool {
        self.simplices.is_subset(&other.simplices)
    }

    pub fn is_downward_closed(&self) -> bool {
        self.simplices.iter().all(|s| {
            s.len() == 1
                || (0..s.len()).all(|k| {
                    let mut face = s.clone();
                    face.remove(k);
                    self.simplices.contains(&face)
                })
        })
    }

    /// Connected components of the 1-skeleton, as sets of vertices.
    pub fn components(&self) -> Partition {
        let vertices = self.vertices();
        let max = vertices.iter().copied().max().map_or(0, |m| m + 1);
        let mut ds = DisjointSets::new(max);
        for (a, b) in self.edges() {
            ds.union(a, b);
        }
        let present: SubsetId = vertices.iter().copied().collect();
        ds.blocks()
            .into_iter()
            .map(|b| b.intersection(&present))
            .filter(|b| !b.is_empty())
            .collect()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({ "simplices": self.simplices.iter().collect::<Vec<_>>() })
    }

    pub fn from_json_value(value: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            simplices: Vec<Simplex>,
        }
        let raw: Raw = serde_json::from_value(value.clone())?;
        let nerve = Nerve {
            simplices: raw
                .simplices
                .into_iter()
                .map(|mut s| {
                    s.sort_unstable();
                    s
                })
                .collect(),
            dim_cap: None,
        };
        if !nerve.is_downward_closed() {
            return Err(Error::Parse("nerve is not downward closed".into()));
        }
        Ok(nerve)
    }

    /// Graphviz view of the 1-skeleton.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph nerve {\n");
        for v in self.vertices() {
            let _ = writeln!(out, "  {v};");
        }
        for (a, b) in self.edges() {
            let _ = writeln!(out, "  {a} -- {b};");
        }
        out.push_str("}\n");
        out
    }
}

fn is_sorted_subset(small: &[usize], big: &[usize]) -> bool {
    let mut it = big.iter();
    small.iter().all(|s| it.any(|b| b == s))
}

fn add_with_faces(set: &mut BTreeSet<Simplex>, top: &[usize]) {
    if top.is_empty() || set.contains(top) {
        return;
    }
    let k = top.len();
    assert!(k < 32, "simplex with {k} vertices is too large to enumerate faces");
    for mask in 1u32..(1u32 << k) {
        let face: Simplex = (0..k).filter(|b| mask >> b & 1 == 1).map(|b| top[b]).collect();
        set.insert(face);
    }
}

fn add_faces_up_to(set: &mut BTreeSet<Simplex>, top: &[usize], max_len: usize) {
    fn rec(top: &[usize], start: usize, cur: &mut Simplex, max_len: usize, set: &mut BTreeSet<Simplex>) {
        for i in start..top.len() {
            cur.push(top[i]);
            set.insert(cur.clone());
            if cur.len() < max_len {
                rec(top, i + 1, cur, max_len, set);
            }
            cur.pop();
        }
    }
    if top.len() <= max_len {
        add_with_faces(set, top);
    } else {
        rec(top, 0, &mut Vec::new(), max_len, set);
    }
}

fn check_dim_cap(dim_cap: usize) -> Result<()> {
    if dim_cap < 1 {
        return Err(Error::InvalidParameter("dim_cap must be at least 1".into()));
    }
    Ok(())
}

/// Grows simplices dimension by dimension; `accept` decides each candidate
/// whose facets are all present.
fn grow<F>(n: usize, edges: &[(usize, usize)], dim_cap: usize, accept: F) -> BTreeSet<Simplex>
where
    F: Fn(&[usize]) -> bool + Sync,
{
    let mut adjacency = vec![vec![false; n]; n];
    for &(a, b) in edges {
        adjacency[a][b] = true;
        adjacency[b][a] = true;
    }
    let mut all: BTreeSet<Simplex> = (0..n).map(|v| vec![v]).collect();
    let mut layer: Vec<Simplex> = edges.iter().map(|&(a, b)| vec![a, b]).collect();
    layer.sort();
    all.extend(layer.iter().cloned());
    for _ in 2..=dim_cap {
        let candidates: Vec<Simplex> = layer
            .iter()
            .flat_map(|s| {
                let last = *s.last().unwrap();
                ((last + 1)..n)
                    .filter(|&v| s.iter().all(|&u| adjacency[u][v]))
                    .map(move |v| {
                        let mut t = s.clone();
                        t.push(v);
                        t
                    })
            })
            .collect();
        let accepted: Vec<Simplex> = candidates
            .into_par_iter()
            .filter(|t| {
                (0..t.len()).all(|k| {
                    let mut face = t.clone();
                    face.remove(k);
                    face.len() < 2 || layer.binary_search(&face).is_ok()
                }) && accept(t)
            })
            .collect();
        if accepted.is_empty() {
            break;
        }
        all.extend(accepted.iter().cloned());
        layer = accepted;
        layer.sort();
    }
    all
}

/// Čech complex of the closed `eps`-balls around the sample, up to
/// dimension `dim_cap`. Geometric when coordinates are available, witness
/// otherwise.
pub fn cech_nerve(cloud: &PointCloud, eps: f64, dim_cap: usize) -> Result<(Cover, Nerve)> {
    let mode = if cloud.points().is_some() {
        NerveMode::Geometric
    } else {
        NerveMode::Witness
    };
    cech_nerve_with_mode(cloud, eps, dim_cap, mode)
}

pub fn cech_nerve_with_mode(
    cloud: &PointCloud,
    eps: f64,
    dim_cap: usize,
    mode: NerveMode,
) -> Result<(Cover, Nerve)> {
    check_dim_cap(dim_cap)?;
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let cover = Cover::balls(cloud, eps)?;
    let nerve = match mode {
        NerveMode::Witness => Nerve::witness(&cover, Some(dim_cap)),
        NerveMode::Geometric => {
            let points = cloud.points().ok_or_else(|| {
                Error::InvalidParameter("geometric Čech mode needs coordinates".into())
            })?;
            let n = cloud.len();
            let edges = pair_edges(cloud, eps);
            let simplices = grow(n, &edges, dim_cap, |t| {
                let refs: Vec<&[f64]> = t.iter().map(|&i| points[i].as_slice()).collect();
                within(minimum_enclosing_ball(&refs).radius, eps)
            });
            Nerve {
                simplices,
                dim_cap: Some(dim_cap),
            }
        }
    };
    Ok((cover, nerve))
}

/// Vietoris–Rips complex: a simplex is present iff all pairwise distances
/// are at most `2 eps`.
pub fn rips_nerve(cloud: &PointCloud, eps: f64, dim_cap: usize) -> Result<(Cover, Nerve)> {
    check_dim_cap(dim_cap)?;
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let cover = Cover::balls(cloud, eps)?;
    let edges = pair_edges(cloud, eps);
    let simplices = grow(cloud.len(), &edges, dim_cap, |_| true);
    Ok((
        cover,
        Nerve {
            simplices,
            dim_cap: Some(dim_cap),
        },
    ))
}

fn pair_edges(cloud: &PointCloud, eps: f64) -> Vec<(usize, usize)> {
    let n = cloud.len();
    (0..n)
        .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
        .filter(|&(a, b)| balls_meet(cloud.dist(a, b), eps))
        .collect()
}

/// The canonical map: identifiers of the cover sets containing `x`.
pub fn eta(cover: &Cover, x: usize) -> Result<Simplex> {
    if x >= cover.universe() {
        return Err(Error::IndexOutOfRange {
            index: x,
            len: cover.universe(),
        });
    }
    Ok(eta_unchecked(cover, x))
}

pub(crate) fn eta_unchecked(cover: &Cover, x: usize) -> Simplex {
    (0..cover.len())
        .filter(|&i| cover.realize(i).contains(x))
        .collect()
}

/// Left adjoint of the preimage: the union of the principal up-sets of
/// `eta(x)` over `x` in `open`.
pub fn eta_shriek(cover: &Cover, nerve: &Nerve, open: &SubsetId) -> Result<Vec<Simplex>> {
    open.check_bound(cover.universe())?;
    let mut out = BTreeSet::new();
    for x in open.iter() {
        let sigma = eta_unchecked(cover, x);
        if !nerve.contains(&sigma) {
            return Err(Error::NerveTooSmall(sigma));
        }
        out.extend(nerve.up_set(&sigma));
    }
    Ok(out.into_iter().collect())
}

/// Preimage under the canonical map of a set of simplices.
pub fn eta_preimage(cover: &Cover, simplices: &[Simplex]) -> SubsetId {
    let set: BTreeSet<&Simplex> = simplices.iter().collect();
    (0..cover.universe())
        .filter(|&x| set.contains(&eta_unchecked(cover, x)))
        .collect()
}

/// Pixelization of an open set by the cover: the union over `x` in `open`
/// of the intersection of all cover sets containing `x`.
pub fn pixelize_open(cover: &Cover, open: &SubsetId) -> Result<SubsetId> {
    open.check_bound(cover.universe())?;
    Ok(pixelize_unchecked(cover, open))
}

pub(crate) fn pixelize_unchecked(cover: &Cover, open: &SubsetId) -> SubsetId {
    let mut out = SubsetId::empty();
    for x in open.iter() {
        out = out.union(&cover.simplex_trace(&eta_unchecked(cover, x)));
    }
    out
}

/// Partition of the cover identifiers by the components of the nerve.
pub fn cover_clustering(cover: &Cover, nerve: &Nerve) -> Partition {
    let mut ds = DisjointSets::new(cover.len());
    for (a, b) in nerve.edges() {
        ds.union(a, b);
    }
    ds.blocks()
}
