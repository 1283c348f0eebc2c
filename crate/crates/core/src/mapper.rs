//! The single-scale mapper pipeline: a real-valued filter, a cover of its
//! image by intervals, clustering of each piece and the nerve of the
//! resulting pieces.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::{Cover, Nerve, Simplex};
use crate::error::{Error, Result};
use crate::metric::{offset_components_unchecked, PointCloud, TIE_TOLERANCE};
use crate::subset::SubsetId;
use crate::verify::Report;

/// One filter value per sample point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterAssignment {
    values: Vec<f64>,
}

impl FilterAssignment {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("filter value at point {i} is not finite")));
        }
        Ok(FilterAssignment { values })
    }

    pub fn coordinate(cloud: &PointCloud, axis: usize) -> Result<Self> {
        Self::new(cloud.coordinate(axis)?)
    }

    /// Second coordinate.
    pub fn y(cloud: &PointCloud) -> Result<Self> {
        Self::coordinate(cloud, 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_total(&self, cloud: &PointCloud) -> Result<()> {
        if self.values.len() != cloud.len() {
            return Err(Error::InvalidParameter(format!(
                "filter has {} values for {} points",
                self.values.len(),
                cloud.len()
            )));
        }
        Ok(())
    }

    pub fn range(&self) -> Option<(f64, f64)> {
        if self.values.is_empty() {
            return None;
        }
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    }
}

/// Closed intervals covering `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalCover {
    pub lo: f64,
    pub hi: f64,
    pub intervals: Vec<(f64, f64)>,
}

/// `n` intervals of base width `b = (hi - lo) / n`, each widened by
/// `overlap * b` on both sides and clipped to `[lo, hi]`.
pub fn interval_cover(lo: f64, hi: f64, n: usize, overlap: f64) -> Result<IntervalCover> {
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(Error::InvalidParameter(format!("degenerate range [{lo}, {hi}]")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("at least one interval is needed".into()));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::InvalidParameter(format!("overlap {overlap} is outside [0, 1)")));
    }
    Ok(IntervalCover {
        lo,
        hi,
        intervals: subdivide(lo, hi, n, overlap),
    })
}

pub(crate) fn subdivide(lo: f64, hi: f64, n: usize, overlap: f64) -> Vec<(f64, f64)> {
    let b = (hi - lo) / n as f64;
    (0..n)
        .map(|i| {
            let a = if i == 0 { lo } else { (lo + i as f64 * b - overlap * b).max(lo) };
            let z = if i + 1 == n { hi } else { (lo + (i + 1) as f64 * b + overlap * b).min(hi) };
            (a, z)
        })
        .collect()
}

pub(crate) fn in_interval(v: f64, (a, z): (f64, f64)) -> bool {
    v >= a - TIE_TOLERANCE && v <= z + TIE_TOLERANCE
}

impl IntervalCover {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Pulls the intervals back to the sample.
    pub fn realize(&self, filter: &FilterAssignment) -> Result<Cover> {
        let sets = self
            .intervals
            .iter()
            .map(|&iv| {
                filter
                    .values()
                    .iter()
                    .enumerate()
                    .filter(|&(_, &v)| in_interval(v, iv))
                    .map(|(x, _)| x)
                    .collect()
            })
            .collect();
        Cover::new(filter.len(), sets)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapperVertex {
    pub cover_set: usize,
    pub block: SubsetId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub eps: f64,
    pub cover_sets: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<Vec<(f64, f64)>>,
    /// Pairs `(dropped, kept)` of cover sets with identical traces.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub merged_cover_sets: Vec<(usize, usize)>,
}

/// Vertices are clusters of the pieces of a cover; simplices are sets of
/// vertices whose clusters share a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapperGraph {
    pub vertices: Vec<MapperVertex>,
    pub edges: Vec<(usize, usize)>,
    /// Simplices of dimension two and up, when requested.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub higher_simplices: Vec<Simplex>,
    pub provenance: Provenance,
}

impl MapperGraph {
    pub fn component_count(&self) -> usize {
        let mut ds = crate::union_find::DisjointSets::new(self.vertices.len());
        for &(a, b) in &self.edges {
            ds.union(a, b);
        }
        ds.labels().1
    }

    /// `|E| - |V| + components`.
    pub fn cycle_rank(&self) -> usize {
        self.edges.len() + self.component_count() - self.vertices.len()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("mapper graph serializes")
    }

    pub fn from_json_value(value: &serde_json::Value) -> Result<Self> {
        let g: MapperGraph = serde_json::from_value(value.clone())?;
        let n = g.vertices.len();
        for s in g.edges.iter().map(|&(a, b)| vec![a, b]).chain(g.higher_simplices.iter().cloned()) {
            if let Some(&v) = s.iter().find(|&&v| v >= n) {
                return Err(Error::IndexOutOfRange { index: v, len: n });
            }
        }
        Ok(g)
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph mapper {\n");
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = writeln!(out, "  v{i} [label=\"{}:{}\", size={}];", v.cover_set, v.block, v.block.len());
        }
        for &(a, b) in &self.edges {
            let _ = writeln!(out, "  v{a} -- v{b};");
        }
        out.push_str("}\n");
        out
    }
}

/// Clusters each cover set with `offset_components` at `eps` and links
/// clusters that share points. Simplices up to `max_dim` are kept (at least
/// edges). Cover sets with identical traces are merged first.
pub fn mapper_graph(cloud: &PointCloud, cover: &Cover, eps: f64, max_dim: usize) -> Result<MapperGraph> {
    mapper_complex(cloud, cover, eps, max_dim, true)
}

pub(crate) fn mapper_complex(
    cloud: &PointCloud,
    cover: &Cover,
    eps: f64,
    max_dim: usize,
    merge_duplicates: bool,
) -> Result<MapperGraph> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    if cover.universe() != cloud.len() {
        return Err(Error::InvalidCover(format!(
            "cover of {} points used on a sample of {}",
            cover.universe(),
            cloud.len()
        )));
    }
    let mut merged = Vec::new();
    let mut kept = vec![true; cover.len()];
    for i in 0..cover.len() {
        if !merge_duplicates {
            break;
        }
        if let Some(j) = (0..i).find(|&j| kept[j] && cover.realize(j) == cover.realize(i)) {
            kept[i] = false;
            merged.push((i, j));
        }
    }
    let vertices = cluster_pieces(cloud, cover, eps, &kept);
    let simplices = block_simplices(&vertices, Some(max_dim.max(1)));
    let edges = simplices
        .iter()
        .filter(|(s, _)| s.len() == 2)
        .map(|(s, _)| (s[0], s[1]))
        .collect();
    let higher_simplices = simplices
        .into_iter()
        .filter(|(s, _)| s.len() > 2)
        .map(|(s, _)| s)
        .collect();
    Ok(MapperGraph {
        vertices,
        edges,
        higher_simplices,
        provenance: Provenance {
            eps,
            cover_sets: cover.len(),
            filter: None,
            intervals: None,
            merged_cover_sets: merged,
        },
    })
}

/// The whole pipeline from a filter and an interval cover of its image.
pub fn mapper_graph_intervals(
    cloud: &PointCloud,
    filter: &FilterAssignment,
    intervals: &IntervalCover,
    eps: f64,
    max_dim: usize,
) -> Result<MapperGraph> {
    filter.check_total(cloud)?;
    let cover = intervals.realize(filter)?;
    let mut g = mapper_graph(cloud, &cover, eps, max_dim)?;
    g.provenance.intervals = Some(intervals.intervals.clone());
    Ok(g)
}

fn cluster_pieces(cloud: &PointCloud, cover: &Cover, eps: f64, kept: &[bool]) -> Vec<MapperVertex> {
    let pieces: Vec<Vec<MapperVertex>> = (0..cover.len())
        .into_par_iter()
        .map(|i| {
            if !kept[i] {
                return Vec::new();
            }
            offset_components_unchecked(cloud, cover.realize(i), eps)
                .into_iter()
                .map(|block| MapperVertex { cover_set: i, block })
                .collect()
        })
        .collect();
    pieces.into_iter().flatten().collect()
}

/// Sets of vertices (dimension at least one, at most `max_dim`) whose
/// blocks have a common point, with that common intersection.
fn block_simplices(vertices: &[MapperVertex], max_dim: Option<usize>) -> Vec<(Simplex, SubsetId)> {
    let cap = max_dim.map_or(usize::MAX, |d| d + 1);
    let mut out = Vec::new();
    fn grow(
        vertices: &[MapperVertex],
        current: &mut Vec<usize>,
        inter: &SubsetId,
        cap: usize,
        out: &mut Vec<(Simplex, SubsetId)>,
    ) {
        if current.len() >= 2 {
            out.push((current.clone(), inter.clone()));
        }
        if current.len() == cap {
            return;
        }
        let start = current.last().map_or(0, |&v| v + 1);
        for w in start..vertices.len() {
            let next = inter.intersection(&vertices[w].block);
            if !next.is_empty() {
                current.push(w);
                grow(vertices, current, &next, cap, out);
                current.pop();
            }
        }
    }
    let roots: Vec<Vec<(Simplex, SubsetId)>> = (0..vertices.len())
        .into_par_iter()
        .map(|v| {
            let mut local = Vec::new();
            let mut current = vec![v];
            grow(vertices, &mut current, &vertices[v].block, cap, &mut local);
            local
        })
        .collect();
    for r in roots {
        out.extend(r);
    }
    out.sort();
    out
}

/// Fault to inject into the nerve side of the display-space check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisplayFault {
    /// Adds an edge between two vertices whose blocks are disjoint.
    SpuriousEdge,
}

struct DisplaySide {
    // (σ, component of U_σ)
    elements: Vec<(Simplex, SubsetId)>,
}

fn display_space(cloud: &PointCloud, cover: &Cover, eps: f64) -> DisplaySide {
    let nerve = Nerve::witness(cover, None);
    let sigmas: Vec<Simplex> = nerve.simplices().cloned().collect();
    let elements = sigmas
        .par_iter()
        .flat_map_iter(|sigma| {
            offset_components_unchecked(cloud, &cover.simplex_trace(sigma), eps)
                .into_iter()
                .map(move |alpha| (sigma.clone(), alpha))
        })
        .collect();
    DisplaySide { elements }
}

/// Whether every simplex of the nerve of the clustered pieces has its
/// common points inside a single cluster of the corresponding intersection
/// `U_σ`. The display-space isomorphism depends on it.
pub fn display_hypothesis_holds(cloud: &PointCloud, cover: &Cover, eps: f64) -> bool {
    let kept = vec![true; cover.len()];
    let vertices = cluster_pieces(cloud, cover, eps, &kept);
    block_simplices(&vertices, None).par_iter().all(|(s, inter)| {
        let sigma: Simplex = s.iter().map(|&v| vertices[v].cover_set).collect();
        let comps = offset_components_unchecked(cloud, &cover.simplex_trace(&sigma), eps);
        comps.iter().filter(|c| c.intersects(inter)).count() == 1
    })
}

/// Builds the nerve of the clustered pieces (all dimensions) and the
/// elements `(σ, α)` of the display space independently, then checks that
/// `φ(B) = (σ(B), the cluster of U_σ holding ∩B)` and
/// `ψ(σ, α) = {(i, the cluster of U_i holding α) : i ∈ σ}` are inverse
/// order isomorphisms.
pub fn verify_display_nerve_iso(
    cloud: &PointCloud,
    cover: &Cover,
    eps: f64,
    seed: u64,
    fault: Option<DisplayFault>,
) -> Result<Report> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    if cover.universe() != cloud.len() {
        return Err(Error::InvalidCover("cover and sample sizes differ".into()));
    }
    let mut report = Report::new("display_nerve_iso", seed);
    let kept = vec![true; cover.len()];
    let vertices = cluster_pieces(cloud, cover, eps, &kept);
    let mut nerve: Vec<(Simplex, SubsetId)> = (0..vertices.len())
        .map(|v| (vec![v], vertices[v].block.clone()))
        .chain(block_simplices(&vertices, None))
        .collect();
    if fault == Some(DisplayFault::SpuriousEdge) {
        let pair = (0..vertices.len())
            .flat_map(|a| ((a + 1)..vertices.len()).map(move |b| (a, b)))
            .find(|&(a, b)| {
                vertices[a].cover_set != vertices[b].cover_set
                    && !vertices[a].block.intersects(&vertices[b].block)
            });
        match pair {
            Some((a, b)) => nerve.push((vec![a, b], SubsetId::empty())),
            None => report.note("no pair of disjoint clusters to join"),
        }
    }
    nerve.sort();
    let display = display_space(cloud, cover, eps);
    let display_index: BTreeMap<&(Simplex, SubsetId), usize> =
        display.elements.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let nerve_index: BTreeMap<&Simplex, usize> = nerve.iter().enumerate().map(|(i, (s, _))| (s, i)).collect();
    report.check(nerve.len() == display.elements.len(), || {
        format!(
            "nerve has {} simplices, display space has {} elements",
            nerve.len(),
            display.elements.len()
        )
    });

    let sigma_of = |s: &Simplex| -> Simplex {
        let set: BTreeSet<usize> = s.iter().map(|&v| vertices[v].cover_set).collect();
        set.into_iter().collect()
    };
    let mut phi: Vec<Option<usize>> = Vec::with_capacity(nerve.len());
    for (s, inter) in &nerve {
        let sigma = sigma_of(s);
        let comps = offset_components_unchecked(cloud, &cover.simplex_trace(&sigma), eps);
        let hits: Vec<&SubsetId> = comps.iter().filter(|c| c.intersects(inter)).collect();
        let image = match hits[..] {
            [alpha] => display_index.get(&(sigma.clone(), alpha.clone())).copied(),
            [] => None,
            _ => None,
        };
        report.check(image.is_some(), || {
            if hits.is_empty() {
                format!("simplex {s:?} has no common point")
            } else {
                format!(
                    "common points {inter} of simplex {s:?} split over {} clusters of U_{sigma:?}",
                    hits.len()
                )
            }
        });
        phi.push(image);
    }
    let mut psi: Vec<Option<usize>> = Vec::with_capacity(display.elements.len());
    for (sigma, alpha) in &display.elements {
        let b: Simplex = sigma
            .iter()
            .filter_map(|&i| {
                vertices
                    .iter()
                    .position(|v| v.cover_set == i && alpha.is_subset(&v.block))
            })
            .collect();
        let image = if b.len() == sigma.len() { nerve_index.get(&b).copied() } else { None };
        report.check(image.is_some(), || format!("({sigma:?}, {alpha}) has no simplex over it"));
        psi.push(image);
    }
    for (b, image) in phi.iter().enumerate() {
        if let Some(e) = image {
            report.check(psi[*e] == Some(b), || format!("ψ(φ({:?})) differs", nerve[b].0));
        }
    }
    for (e, image) in psi.iter().enumerate() {
        if let Some(b) = image {
            report.check(phi[*b] == Some(e), || {
                format!("φ(ψ({:?}, {})) differs", display.elements[e].0, display.elements[e].1)
            });
        }
    }
    // order: B ⊆ B' iff σ ⊆ σ' and α' ⊆ α
    let failures: Vec<String> = (0..nerve.len())
        .into_par_iter()
        .flat_map_iter(|a| {
            let mut local = Vec::new();
            let Some(ea) = phi[a] else { return local };
            for (b, eb) in phi.iter().enumerate() {
                let Some(eb) = *eb else { continue };
                let faces = nerve[a].0.iter().all(|v| nerve[b].0.contains(v));
                let (sa, aa) = &display.elements[ea];
                let (sb, ab) = &display.elements[eb];
                let below = sa.iter().all(|i| sb.contains(i)) && ab.is_subset(aa);
                if faces != below {
                    local.push(format!("order differs on {:?} and {:?}", nerve[a].0, nerve[b].0));
                }
            }
            local
        })
        .collect();
    report.checks += 1;
    for f in failures {
        report.fail(f);
    }
    Ok(report)
}

/// Random cloud in the plane: `n` points in a few clusters.
pub fn random_clustered_cloud<R: Rng>(rng: &mut R, n: usize, clusters: usize) -> PointCloud {
    let centers: Vec<(f64, f64)> = (0..clusters.max(1))
        .map(|_| (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)))
        .collect();
    let points = (0..n)
        .map(|i| {
            let (cx, cy) = centers[i % centers.len()];
            vec![cx + rng.gen_range(-0.6..0.6), cy + rng.gen_range(-0.6..0.6)]
        })
        .collect();
    PointCloud::from_points(points).expect("finite coordinates")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle12() -> PointCloud {
        let pts = (0..12)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / 12.0;
                vec![t.cos(), t.sin()]
            })
            .collect();
        PointCloud::from_points(pts).unwrap()
    }

    #[test]
    fn interval_examples() {
        let c = interval_cover(0.0, 1.0, 2, 0.2).unwrap();
        assert_eq!(c.intervals.len(), 2);
        assert!((c.intervals[0].1 - 0.6).abs() < 1e-12 && (c.intervals[1].0 - 0.4).abs() < 1e-12);
        assert_eq!(interval_cover(0.0, 1.0, 1, 0.5).unwrap().intervals, vec![(0.0, 1.0)]);
        let touching = interval_cover(0.0, 1.0, 2, 0.0).unwrap();
        assert_eq!(touching.intervals[0].1, touching.intervals[1].0);
        assert!(interval_cover(1.0, 1.0, 2, 0.1).is_err());
    }

    #[test]
    fn circle_graph() {
        let cloud = circle12();
        let filter = FilterAssignment::y(&cloud).unwrap();
        let cover = interval_cover(-1.0, 1.0, 3, 0.25).unwrap();
        let g = mapper_graph_intervals(&cloud, &filter, &cover, 0.3, 1).unwrap();
        assert_eq!(g.vertices.len(), 4);
        assert_eq!(g.edges.len(), 4);
        assert_eq!(g.component_count(), 1);
        assert_eq!(g.cycle_rank(), 1);
        let back = MapperGraph::from_json_value(&g.to_json_value()).unwrap();
        assert_eq!(back, g);
        let realized = cover.realize(&filter).unwrap();
        let r = verify_display_nerve_iso(&cloud, &realized, 0.3, 0, None).unwrap();
        assert!(r.passed, "{:?}", r.failures);
        let bad = verify_display_nerve_iso(&cloud, &realized, 0.3, 0, Some(DisplayFault::SpuriousEdge)).unwrap();
        assert!(!bad.passed);
    }

    #[test]
    fn blobs_in_one_interval() {
        let cloud = PointCloud::from_points(vec![vec![0.0, 0.0], vec![0.1, 0.0], vec![5.0, 0.0]]).unwrap();
        let filter = FilterAssignment::coordinate(&cloud, 1).unwrap();
        let cover = Cover::new(3, vec![SubsetId::full(3)]).unwrap();
        let g = mapper_graph(&cloud, &cover, 0.2, 1).unwrap();
        assert_eq!((g.vertices.len(), g.edges.len()), (2, 0));
        assert_eq!(filter.len(), 3);
    }

    #[test]
    fn uncovered_point_is_an_error() {
        let cloud = circle12();
        let filter = FilterAssignment::y(&cloud).unwrap();
        let cover = interval_cover(-0.5, 1.0, 2, 0.1).unwrap();
        assert!(matches!(cover.realize(&filter), Err(Error::CoverConditionViolated(_))));
    }

    #[test]
    fn duplicates_are_merged() {
        let cloud = circle12();
        let s = SubsetId::full(12);
        let cover = Cover::new(12, vec![s.clone(), s]).unwrap();
        let g = mapper_graph(&cloud, &cover, 0.3, 1).unwrap();
        assert_eq!(g.vertices.len(), 1);
        assert_eq!(g.provenance.merged_cover_sets, vec![(1, 0)]);
    }
}
