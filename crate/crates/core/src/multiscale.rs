//! Towers of covers indexed by a finite chain, their limit nerve and the
//! multiscale mapper THD.
//!
//! Level `0` is the coarsest cover and is reported as level `1` in THDs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::{eta_unchecked, Cover, Nerve, Simplex};
use crate::cosheaf::{merge_tree_of, Precosheaf};
use crate::error::{Error, Result};
use crate::mapper::{display_hypothesis_holds, in_interval, mapper_complex, subdivide, FilterAssignment};
use crate::metric::{balls_meet, offset_components_unchecked, PointCloud};
use crate::subset::{Partition, SubsetId};
use crate::thd::{Level, ThdKind, ThdNode, ThdPoset};
use crate::topology::FinitePoset;
use crate::verify::Report;

/// Covers of one sample, coarse to fine, with maps sending each fine
/// identifier to a coarse identifier whose set contains it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    levels: Vec<Cover>,
    /// `reindex[l][j]` is the level-`l` identifier of level-`l+1` set `j`.
    reindex: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TowerLevel {
    pub n_intervals: usize,
    pub overlap: f64,
}

fn default_true() -> bool {
    true
}

/// Each level splits every interval of the previous level (the filter
/// range for the first level) into `n_intervals` overlapping pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerConfig {
    pub levels: Vec<TowerLevel>,
    #[serde(default = "default_true")]
    pub strict_check: bool,
}

impl Refinement {
    pub fn new(levels: Vec<Cover>, reindex: Vec<Vec<usize>>) -> Result<Self> {
        let r = Refinement { levels, reindex };
        r.validate()?;
        Ok(r)
    }

    pub fn single(cover: Cover) -> Self {
        Refinement {
            levels: vec![cover],
            reindex: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        let Some(first) = self.levels.first() else {
            return Err(Error::InvalidRefinement("no levels".into()));
        };
        if self.reindex.len() + 1 != self.levels.len() {
            return Err(Error::InvalidRefinement(format!(
                "{} levels need {} reindex maps, got {}",
                self.levels.len(),
                self.levels.len() - 1,
                self.reindex.len()
            )));
        }
        for (l, map) in self.reindex.iter().enumerate() {
            let (coarse, fine) = (&self.levels[l], &self.levels[l + 1]);
            if fine.universe() != first.universe() || coarse.universe() != first.universe() {
                return Err(Error::InvalidRefinement("levels cover different samples".into()));
            }
            if map.len() != fine.len() || map.iter().any(|&i| i >= coarse.len()) {
                return Err(Error::InvalidRefinement(format!(
                    "reindex map {} is not a function between the identifier sets",
                    l + 1
                )));
            }
            for (j, &i) in map.iter().enumerate() {
                if !fine.realize(j).is_subset(coarse.realize(i)) {
                    return Err(Error::InvalidRefinement(format!(
                        "set {j} of level {} is not inside set {i} of level {}",
                        l + 2,
                        l + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.levels[0].universe()
    }

    pub fn levels(&self) -> &[Cover] {
        &self.levels
    }

    pub fn level(&self, l: usize) -> &Cover {
        &self.levels[l]
    }

    pub fn reindex(&self, l: usize) -> &[usize] {
        &self.reindex[l]
    }

    /// Image of a level-`l+1` simplex at level `l`.
    pub fn map_down(&self, l: usize, sigma: &[usize]) -> Simplex {
        let set: BTreeSet<usize> = sigma.iter().map(|&j| self.reindex[l][j]).collect();
        set.into_iter().collect()
    }

    /// Finds a point and a pair of consecutive levels where the canonical
    /// maps do not commute with the reindexing.
    pub fn strict_witness(&self) -> Option<(usize, usize, usize)> {
        for l in 0..self.reindex.len() {
            for x in 0..self.universe() {
                let coarse = eta_unchecked(&self.levels[l], x);
                let fine = eta_unchecked(&self.levels[l + 1], x);
                if self.map_down(l, &fine) != coarse {
                    return Some((x, l + 2, l + 1));
                }
            }
        }
        None
    }

    pub fn check_strict(&self) -> Result<()> {
        match self.strict_witness() {
            None => Ok(()),
            Some((point, fine, coarse)) => Err(Error::NotStrict { point, fine, coarse }),
        }
    }

    pub fn is_strict(&self) -> bool {
        self.strict_witness().is_none()
    }

    /// Merges sets with identical traces and the same coarse set within
    /// each level, keeping first occurrences. Sets with equal traces but
    /// different parents stay apart, so strictness is preserved. Returns the
    /// old-to-new identifier maps.
    pub fn dedup(&self) -> (Refinement, Vec<Vec<usize>>) {
        let mut levels = Vec::with_capacity(self.levels.len());
        let mut maps: Vec<Vec<usize>> = Vec::with_capacity(self.levels.len());
        let mut reindex = Vec::with_capacity(self.reindex.len());
        for (l, cover) in self.levels.iter().enumerate() {
            let parent = |j: usize| if l == 0 { 0 } else { maps[l - 1][self.reindex[l - 1][j]] };
            let mut kept: Vec<(SubsetId, usize)> = Vec::new();
            let mut map = Vec::with_capacity(cover.len());
            for (j, set) in cover.sets().iter().enumerate() {
                let key = (set.clone(), parent(j));
                match kept.iter().position(|k| *k == key) {
                    Some(k) => map.push(k),
                    None => {
                        map.push(kept.len());
                        kept.push(key);
                    }
                }
            }
            if l > 0 {
                reindex.push(kept.iter().map(|k| k.1).collect());
            }
            let sets = kept.into_iter().map(|k| k.0).collect();
            levels.push(Cover::new(cover.universe(), sets).expect("same union"));
            maps.push(map);
        }
        (Refinement { levels, reindex }, maps)
    }

    /// Interval tower on a filter.
    pub fn from_interval_tower(filter: &FilterAssignment, config: &TowerConfig) -> Result<Self> {
        if config.levels.is_empty() {
            return Err(Error::InvalidRefinement("no levels".into()));
        }
        for level in &config.levels {
            if level.n_intervals == 0 || !(0.0..1.0).contains(&level.overlap) {
                return Err(Error::InvalidParameter(format!(
                    "tower level {level:?} needs n_intervals >= 1 and overlap in [0, 1)"
                )));
            }
        }
        let (lo, hi) = filter
            .range()
            .ok_or_else(|| Error::InvalidParameter("empty filter".into()))?;
        let r = build_tower(filter, lo, hi, config.levels.len(), |l, _| {
            (config.levels[l].n_intervals, config.levels[l].overlap)
        })?;
        if config.strict_check {
            r.check_strict()?;
        }
        Ok(r)
    }

    /// Whole tower as JSON: per level the realized sets and reindex map.
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("refinement serializes")
    }

    pub fn from_json_value(value: &serde_json::Value) -> Result<Self> {
        let r: Refinement = serde_json::from_value(value.clone())?;
        r.validate()?;
        Ok(r)
    }
}

/// Interval subdivision tower. `split(level, parent)` gives the number of
/// pieces and the overlap for one parent interval.
fn build_tower<F: FnMut(usize, usize) -> (usize, f64)>(
    filter: &FilterAssignment,
    lo: f64,
    hi: f64,
    depth: usize,
    mut split: F,
) -> Result<Refinement> {
    let mut intervals = vec![(lo, hi)];
    let mut levels = Vec::new();
    let mut reindex = Vec::new();
    for l in 0..depth {
        let mut next = Vec::new();
        let mut parents = Vec::new();
        for (p, &(a, z)) in intervals.iter().enumerate() {
            let (n, overlap) = split(l, p);
            let pieces = if a < z { subdivide(a, z, n, overlap) } else { vec![(a, z)] };
            for piece in pieces {
                next.push(piece);
                parents.push(p);
            }
        }
        let sets = next
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
        levels.push(Cover::new(filter.len(), sets)?);
        if l > 0 {
            reindex.push(parents);
        }
        intervals = next;
    }
    Refinement::new(levels, reindex)
}

/// A random strict tower of `depth` levels on the filter range.
pub fn random_strict_tower<R: Rng>(rng: &mut R, filter: &FilterAssignment, depth: usize) -> Result<Refinement> {
    let (lo, hi) = filter
        .range()
        .ok_or_else(|| Error::InvalidParameter("empty filter".into()))?;
    let (lo, hi) = if lo < hi { (lo, hi) } else { (lo - 1.0, hi + 1.0) };
    build_tower(filter, lo, hi, depth, |l, _| {
        let n = if l == 0 { rng.gen_range(1..=3) } else { rng.gen_range(1..=2) };
        (n, rng.gen_range(0.0..0.35))
    })
}

/// Consistent families of simplices, one per level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimitNerve {
    pub tuples: Vec<Vec<Simplex>>,
}

impl LimitNerve {
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, tuple: &[Simplex]) -> bool {
        self.tuples.binary_search_by(|t| t.as_slice().cmp(tuple)).is_ok()
    }

    /// Componentwise inclusion.
    pub fn leq(a: &[Simplex], b: &[Simplex]) -> bool {
        a.iter().zip(b).all(|(s, t)| s.iter().all(|i| t.contains(i)))
    }

    pub fn to_poset(&self) -> Result<FinitePoset> {
        let names = self.tuples.iter().map(|t| format!("{t:?}")).collect();
        let mut pairs = Vec::new();
        for (a, s) in self.tuples.iter().enumerate() {
            for (b, t) in self.tuples.iter().enumerate() {
                if Self::leq(s, t) {
                    pairs.push((a, b));
                }
            }
        }
        FinitePoset::from_relation(names, &pairs)
    }
}

/// Nerves of every level, built from common points.
pub fn level_nerves(refinement: &Refinement) -> Vec<Nerve> {
    refinement.levels.iter().map(|c| Nerve::witness(c, None)).collect()
}

pub fn limit_nerve(refinement: &Refinement, nerves: &[Nerve]) -> Result<LimitNerve> {
    refinement.check_strict()?;
    if nerves.len() != refinement.len() {
        return Err(Error::InvalidParameter("one nerve per level is needed".into()));
    }
    // finer simplices grouped by their image one level down
    let fibres: Vec<BTreeMap<Simplex, Vec<Simplex>>> = (1..nerves.len())
        .map(|l| {
            let mut m: BTreeMap<Simplex, Vec<Simplex>> = BTreeMap::new();
            for s in nerves[l].simplices() {
                m.entry(refinement.map_down(l - 1, s)).or_default().push(s.clone());
            }
            m
        })
        .collect();
    let mut tuples = Vec::new();
    fn extend(
        fibres: &[BTreeMap<Simplex, Vec<Simplex>>],
        nerves: &[Nerve],
        current: &mut Vec<Simplex>,
        out: &mut Vec<Vec<Simplex>>,
    ) {
        let l = current.len();
        if l == nerves.len() {
            out.push(current.clone());
            return;
        }
        if let Some(children) = fibres[l - 1].get(&current[l - 1]) {
            for c in children {
                current.push(c.clone());
                extend(fibres, nerves, current, out);
                current.pop();
            }
        }
    }
    for s in nerves[0].simplices() {
        let mut current = vec![s.clone()];
        extend(&fibres, nerves, &mut current, &mut tuples);
    }
    tuples.sort();
    Ok(LimitNerve { tuples })
}

/// `(η_l(x))_l`.
pub fn hat_eta(refinement: &Refinement, x: usize) -> Result<Vec<Simplex>> {
    refinement.check_strict()?;
    if x >= refinement.universe() {
        return Err(Error::IndexOutOfRange {
            index: x,
            len: refinement.universe(),
        });
    }
    Ok(refinement.levels.iter().map(|c| eta_unchecked(c, x)).collect())
}

/// `∧U_σ`: the points in every `U^l_{σ^l}`.
pub fn wedge_trace(refinement: &Refinement, tuple: &[Simplex]) -> SubsetId {
    refinement
        .levels
        .iter()
        .zip(tuple)
        .map(|(c, s)| c.simplex_trace(s))
        .reduce(|a, b| a.intersection(&b))
        .unwrap_or_default()
}

/// `U^l_U`: the union over `x ∈ U` of `U^l_{η_l(x)}`.
pub fn level_pixel(refinement: &Refinement, l: usize, open: &SubsetId) -> SubsetId {
    let cover = &refinement.levels[l];
    open.iter()
        .fold(SubsetId::empty(), |acc, x| acc.union(&cover.simplex_trace(&eta_unchecked(cover, x))))
}

/// Checks that `η̂(x)` lies in the limit for every point, that
/// `η̂⁻¹(↑σ) = ∧U_σ`, `U ⊆ η̂⁻¹η̂_!(U)` on sampled subsets, and
/// `η̂_!η̂⁻¹(↑σ) ⊆ ↑σ` for every tuple.
pub fn check_hat_eta(refinement: &Refinement, trials: usize, seed: u64) -> Result<Report> {
    let mut report = Report::new("hat_eta", seed);
    let limit = limit_nerve(refinement, &level_nerves(refinement))?;
    let n = refinement.universe();
    let hats: Vec<Vec<Simplex>> = (0..n).map(|x| hat_eta(refinement, x)).collect::<Result<_>>()?;
    for (x, h) in hats.iter().enumerate() {
        report.check(limit.contains(h), || format!("η̂({x}) = {h:?} is not consistent"));
    }
    let preimage = |tuples: &[&Vec<Simplex>]| -> SubsetId {
        (0..n).filter(|&x| tuples.iter().any(|t| LimitNerve::leq(t, &hats[x]))).collect()
    };
    for t in &limit.tuples {
        let pre = preimage(&[t]);
        report.check(pre == wedge_trace(refinement, t), || format!("η̂⁻¹(↑{t:?}) differs from ∧U_σ"));
        let ok = pre.iter().all(|x| LimitNerve::leq(t, &hats[x]));
        report.check(ok, || format!("η̂_!η̂⁻¹(↑{t:?}) leaves ↑σ"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..trials.max(n) {
        let u: SubsetId = if k < n {
            SubsetId::singleton(k)
        } else {
            (0..n).filter(|_| rng.gen_bool(0.3)).collect()
        };
        // η̂_!(U) is generated by the η̂(x), x ∈ U
        let gens: Vec<&Vec<Simplex>> = u.iter().map(|x| &hats[x]).collect();
        let back = preimage(&gens);
        report.check(u.is_subset(&back), || format!("{u} is not inside η̂⁻¹η̂_!({u})"));
    }
    Ok(report)
}

/// Components of the `eps`-offset of `points`.
fn clusters(cloud: &PointCloud, points: &SubsetId, eps: f64) -> Partition {
    offset_components_unchecked(cloud, points, eps)
}

fn cluster_holding<'a>(partition: &'a [SubsetId], part: &SubsetId) -> Option<&'a SubsetId> {
    let x = part.min()?;
    partition.iter().find(|b| b.contains(x))
}

type NodeKey = (usize, Simplex, SubsetId);

fn thd_from_keys(nodes: BTreeSet<NodeKey>, edges: BTreeSet<(NodeKey, NodeKey)>) -> ThdPoset {
    let index: BTreeMap<&NodeKey, usize> = nodes.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let mut thd = ThdPoset::empty(ThdKind::GeneralPoset);
    let mut edge_list: Vec<(usize, usize)> = edges.iter().map(|(c, p)| (index[c], index[p])).collect();
    edge_list.sort();
    thd.edges = edge_list;
    thd.nodes = nodes
        .iter()
        .map(|(l, s, b)| ThdNode {
            level: Level::Index(l + 1),
            simplex: Some(s.clone()),
            block: Some(b.clone()),
            label: format!("{}:{s:?}:{b}", l + 1),
        })
        .collect();
    thd
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter("eps must be positive".into()))
    }
}

/// The multiscale mapper THD by the level loop: for each level and each
/// tuple of the limit nerve, the clusters of `∧U_σ` are pushed into
/// `U^n_σ` and linked to their images one level coarser. Sets with
/// identical traces are merged first.
pub fn multiscale_thd(cloud: &PointCloud, refinement: &Refinement, eps: f64) -> Result<ThdPoset> {
    check_eps(eps)?;
    if refinement.universe() != cloud.len() {
        return Err(Error::InvalidRefinement("tower and sample sizes differ".into()));
    }
    refinement.check_strict()?;
    let (refinement, _) = refinement.dedup();
    let limit = limit_nerve(&refinement, &level_nerves(&refinement))?;
    let per_tuple: Vec<(Vec<NodeKey>, Vec<(NodeKey, NodeKey)>)> = limit
        .tuples
        .par_iter()
        .map(|sigma| {
            let mut nodes = Vec::new();
            let mut edges = Vec::new();
            let wedge = wedge_trace(&refinement, sigma);
            let level_clusters: Vec<Partition> = (0..refinement.len())
                .map(|n| clusters(cloud, &refinement.levels[n].simplex_trace(&sigma[n]), eps))
                .collect();
            for alpha in clusters(cloud, &wedge, eps) {
                let mut below: Option<NodeKey> = None;
                for n in 0..refinement.len() {
                    let alpha_n = cluster_holding(&level_clusters[n], &alpha)
                        .expect("a cluster of a subset sits inside a cluster of the superset")
                        .clone();
                    let key = (n, sigma[n].clone(), alpha_n);
                    if let Some(coarser) = below.take() {
                        edges.push((key.clone(), coarser));
                    }
                    nodes.push(key.clone());
                    below = Some(key);
                }
            }
            (nodes, edges)
        })
        .collect();
    let mut nodes = BTreeSet::new();
    let mut edges = BTreeSet::new();
    for (n, e) in per_tuple {
        nodes.extend(n);
        edges.extend(e);
    }
    Ok(thd_from_keys(nodes, edges))
}

/// Reference for [`multiscale_thd`]: enumerates the product of all level
/// simplex sets, keeps consistent tuples and collects
/// `(n, σ^n, image of α in U^n_σ)` for every cluster `α` of `∧U_σ`, with
/// clusters found by breadth-first search.
pub fn multiscale_thd_reference(cloud: &PointCloud, refinement: &Refinement, eps: f64) -> Result<ThdPoset> {
    check_eps(eps)?;
    refinement.check_strict()?;
    let (refinement, _) = refinement.dedup();
    let n = refinement.universe();
    let level_simplices: Vec<Vec<Simplex>> = refinement
        .levels
        .iter()
        .map(|c| {
            let m = c.len();
            let mut out = Vec::new();
            let mut stack: Vec<(Simplex, SubsetId)> = (0..m).map(|i| (vec![i], c.realize(i).clone())).collect();
            while let Some((s, trace)) = stack.pop() {
                if trace.is_empty() {
                    continue;
                }
                for j in (s[s.len() - 1] + 1)..m {
                    let mut t = s.clone();
                    t.push(j);
                    stack.push((t, trace.intersection(c.realize(j))));
                }
                out.push(s);
            }
            out
        })
        .collect();
    let bfs = |points: &SubsetId| -> Vec<SubsetId> {
        let members = points.members();
        let mut seen = vec![false; members.len()];
        let mut out = Vec::new();
        for s in 0..members.len() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            let mut block = Vec::new();
            while let Some(a) = queue.pop_front() {
                block.push(members[a]);
                for b in 0..members.len() {
                    if !seen[b] && balls_meet(cloud.dist(members[a], members[b]), eps) {
                        seen[b] = true;
                        queue.push_back(b);
                    }
                }
            }
            out.push(SubsetId::new(block));
        }
        out
    };
    let mut nodes = BTreeSet::new();
    let depth = refinement.len();
    let mut counters = vec![0usize; depth];
    'product: loop {
        let tuple: Vec<Simplex> = (0..depth).map(|l| level_simplices[l][counters[l]].clone()).collect();
        let consistent = (1..depth).all(|l| {
            let image: BTreeSet<usize> = tuple[l].iter().map(|&j| refinement.reindex[l - 1][j]).collect();
            image.into_iter().eq(tuple[l - 1].iter().copied())
        });
        if consistent {
            let wedge: SubsetId = (0..n)
                .filter(|&x| (0..depth).all(|l| tuple[l].iter().all(|&i| refinement.levels[l].realize(i).contains(x))))
                .collect();
            for alpha in bfs(&wedge) {
                for (l, sigma) in tuple.iter().enumerate() {
                    let big = bfs(&refinement.levels[l].simplex_trace(sigma));
                    let image = big
                        .into_iter()
                        .find(|b| alpha.is_subset(b))
                        .expect("clusters are nested");
                    nodes.insert((l, sigma.clone(), image));
                }
            }
        }
        for l in (0..depth).rev() {
            counters[l] += 1;
            if counters[l] < level_simplices[l].len() {
                continue 'product;
            }
            counters[l] = 0;
        }
        break;
    }
    // covering edges of the order: one level down, image simplex, containing cluster
    let mut edges = BTreeSet::new();
    for (l, sigma, alpha) in &nodes {
        if *l == 0 {
            continue;
        }
        let image: Simplex = sigma
            .iter()
            .map(|&j| refinement.reindex[l - 1][j])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        for other in nodes.range((l - 1, image.clone(), SubsetId::empty())..) {
            if other.0 != l - 1 || other.1 != image {
                break;
            }
            if alpha.is_subset(&other.2) {
                edges.insert(((*l, sigma.clone(), alpha.clone()), other.clone()));
            }
        }
    }
    Ok(thd_from_keys(nodes, edges))
}

/// Whether every level of the deduplicated tower satisfies
/// [`display_hypothesis_holds`], which the merge tree isomorphism needs.
pub fn tower_hypothesis_holds(cloud: &PointCloud, refinement: &Refinement, eps: f64) -> bool {
    let (tower, _) = refinement.dedup();
    tower.levels.iter().all(|c| display_hypothesis_holds(cloud, c, eps))
}

/// Fault to inject into the mapper-graph side of the merge tree check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TowerFault {
    /// Sends one fine cover set to a coarse set that does not contain it.
    CorruptReindex,
}

/// Builds the merge tree of the filtration of mapper complexes (one per
/// level, with the simplicial maps induced by the reindexing) and checks
/// that `(n, B) ↦ (n, σ(B), the cluster of U_σ holding ∩B)` is an order
/// isomorphism onto [`multiscale_thd`].
pub fn verify_thd_merge_tree(
    cloud: &PointCloud,
    refinement: &Refinement,
    eps: f64,
    seed: u64,
    fault: Option<TowerFault>,
) -> Result<Report> {
    let mut report = Report::new("thd_merge_tree", seed);
    let thd = multiscale_thd(cloud, refinement, eps)?;
    let (tower, _) = refinement.dedup();
    let mut reindex = tower.reindex.clone();
    if fault == Some(TowerFault::CorruptReindex) {
        let target = (0..reindex.len()).find_map(|l| {
            (0..reindex[l].len()).find_map(|j| {
                (0..tower.levels[l].len())
                    .find(|&i| !tower.levels[l + 1].realize(j).is_subset(tower.levels[l].realize(i)))
                    .map(|i| (l, j, i))
            })
        });
        match target {
            Some((l, j, i)) => reindex[l][j] = i,
            None => report.note("no reindex entry can be corrupted"),
        }
    }
    let depth = tower.len();
    let graphs = (0..depth)
        .map(|l| mapper_complex(cloud, &tower.levels[l], eps, tower.levels[l].len(), false))
        .collect::<Result<Vec<_>>>()?;
    // all simplices of each mapper complex, with the common points
    let simplices: Vec<Vec<(Simplex, SubsetId)>> = graphs
        .iter()
        .map(|g| {
            let mut all: Vec<(Simplex, SubsetId)> = Vec::new();
            let blocks = |s: &Simplex| {
                s.iter()
                    .map(|&v| g.vertices[v].block.clone())
                    .reduce(|a, b| a.intersection(&b))
                    .unwrap_or_default()
            };
            for v in 0..g.vertices.len() {
                all.push((vec![v], g.vertices[v].block.clone()));
            }
            for &(a, b) in &g.edges {
                let s = vec![a, b];
                let i = blocks(&s);
                all.push((s, i));
            }
            for s in &g.higher_simplices {
                all.push((s.clone(), blocks(s)));
            }
            all.sort();
            all
        })
        .collect();
    // simplicial maps, fine to coarse
    let mut maps: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for l in 1..depth {
        let (fine, coarse) = (&graphs[l], &graphs[l - 1]);
        let vertex_image: Vec<Option<usize>> = fine
            .vertices
            .iter()
            .map(|v| {
                let i = reindex[l - 1][v.cover_set];
                let hits: Vec<usize> = (0..coarse.vertices.len())
                    .filter(|&w| coarse.vertices[w].cover_set == i && v.block.is_subset(&coarse.vertices[w].block))
                    .collect();
                (hits.len() == 1).then(|| hits[0])
            })
            .collect();
        for (v, img) in vertex_image.iter().enumerate() {
            report.check(img.is_some(), || {
                format!("vertex {v} of level {} has no image one level down", l + 1)
            });
        }
        if vertex_image.iter().any(Option::is_none) {
            return Ok(report);
        }
        let index: BTreeMap<&Simplex, usize> =
            simplices[l - 1].iter().enumerate().map(|(k, (s, _))| (s, k)).collect();
        let mut map = Vec::with_capacity(simplices[l].len());
        for (s, _) in &simplices[l] {
            let image: Simplex = s
                .iter()
                .map(|&v| vertex_image[v].expect("checked"))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            match index.get(&image) {
                Some(&k) => map.push(k),
                None => {
                    report.fail(format!("image of {s:?} at level {} is not a simplex", l + 1));
                    return Ok(report);
                }
            }
        }
        maps.insert((l - 1, l), map);
    }
    let costalks: Vec<Vec<String>> = simplices
        .iter()
        .map(|ss| ss.iter().map(|(s, _)| format!("{s:?}")).collect())
        .collect();
    let filtration = Precosheaf::from_hasse_maps(FinitePoset::chain(depth), costalks, maps)?;
    let tree = merge_tree_of(&filtration);
    let thd_index: BTreeMap<(usize, Simplex, SubsetId), usize> = thd
        .nodes
        .iter()
        .enumerate()
        .map(|(k, node)| {
            let Level::Index(l) = node.level else { unreachable!("index levels") };
            (
                (
                    l - 1,
                    node.simplex.clone().expect("simplex"),
                    node.block.clone().expect("block"),
                ),
                k,
            )
        })
        .collect();
    // merge tree nodes are enumerated level by level in simplex order
    let mut phi = Vec::with_capacity(tree.len());
    for (l, ss) in simplices.iter().enumerate() {
        let g = &graphs[l];
        let cover = &tower.levels[l];
        for (s, inter) in ss {
            let sigma: Simplex = s
                .iter()
                .map(|&v| g.vertices[v].cover_set)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let comps = clusters(cloud, &cover.simplex_trace(&sigma), eps);
            let hits: Vec<&SubsetId> = comps.iter().filter(|c| c.intersects(inter)).collect();
            let target = match hits[..] {
                [alpha] => thd_index.get(&(l, sigma.clone(), alpha.clone())).copied(),
                _ => None,
            };
            if !report.check(target.is_some(), || {
                format!("simplex {s:?} at level {} has no matching THD node", l + 1)
            }) {
                return Ok(report);
            }
            phi.push(target.expect("checked"));
        }
    }
    if let Err(e) = tree.check_isomorphism(&thd, &phi) {
        report.fail(e);
    } else {
        report.checks += 1;
    }
    Ok(report)
}

/// For sampled subsets `U`, compares the clusters of `∧U_U` with the
/// consistent families of clusters of the `U^l_U`.
pub fn verify_multi_iso(cloud: &PointCloud, refinement: &Refinement, eps: f64, trials: usize, seed: u64) -> Result<Report> {
    check_eps(eps)?;
    refinement.check_strict()?;
    let mut report = Report::new("multi_iso", seed);
    let n = refinement.universe();
    let depth = refinement.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut opens: Vec<SubsetId> = (0..n).map(SubsetId::singleton).collect();
    for _ in 0..trials {
        opens.push((0..n).filter(|_| rng.gen_bool(0.3)).collect());
    }
    let outcomes: Vec<Report> = opens
        .par_iter()
        .map(|u| {
            let mut r = Report::new("open", seed);
            let pixels: Vec<SubsetId> = (0..depth).map(|l| level_pixel(refinement, l, u)).collect();
            let wedge = pixels.iter().cloned().reduce(|a, b| a.intersection(&b)).unwrap_or_default();
            r.check(u.is_subset(&wedge), || format!("{u} is not inside ∧U_U"));
            let level_clusters: Vec<Partition> = pixels.iter().map(|p| clusters(cloud, p, eps)).collect();
            let mut diagram = crate::cosheaf::Diagram::new(level_clusters.iter().map(Vec::len).collect());
            for q in 0..depth {
                for p in 0..q {
                    let map = level_clusters[q]
                        .iter()
                        .map(|b| {
                            level_clusters[p]
                                .iter()
                                .position(|c| b.is_subset(c))
                                .expect("pixels shrink with the level")
                        })
                        .collect();
                    diagram.add_arrow(q, p, map).expect("valid arrow");
                }
            }
            let limit = crate::cosheaf::set_limit(&diagram).expect("limit");
            let value = clusters(cloud, &wedge, eps);
            let families: Vec<Vec<usize>> = value
                .iter()
                .map(|alpha| {
                    level_clusters
                        .iter()
                        .map(|lc| lc.iter().position(|c| alpha.is_subset(c)).expect("nested"))
                        .collect()
                })
                .collect();
            let distinct: BTreeSet<&Vec<usize>> = families.iter().collect();
            let onto: BTreeSet<&Vec<usize>> = limit.tuples.iter().collect();
            r.check(distinct.len() == families.len() && distinct == onto, || {
                format!(
                    "F(∧U_{u}) has {} elements, the limit has {}",
                    value.len(),
                    limit.tuples.len()
                )
            });
            r
        })
        .collect();
    for r in outcomes {
        report.absorb(r);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> (PointCloud, FilterAssignment) {
        let mut pts = Vec::new();
        for k in 0..6 {
            pts.push(vec![0.1 * k as f64, 0.2 * k as f64]);
            pts.push(vec![5.0 + 0.1 * k as f64, 0.2 * k as f64]);
        }
        let cloud = PointCloud::from_points(pts).unwrap();
        let f = FilterAssignment::y(&cloud).unwrap();
        (cloud, f)
    }

    fn config(levels: &[(usize, f64)]) -> TowerConfig {
        TowerConfig {
            levels: levels
                .iter()
                .map(|&(n_intervals, overlap)| TowerLevel { n_intervals, overlap })
                .collect(),
            strict_check: true,
        }
    }

    #[test]
    fn two_level_blob_tower() {
        let (cloud, f) = blobs();
        let r = Refinement::from_interval_tower(&f, &config(&[(1, 0.0), (2, 0.2)])).unwrap();
        assert!(r.is_strict());
        let thd = multiscale_thd(&cloud, &r, 0.15).unwrap();
        let levels = thd.levels();
        // root level: one cover set with two blob clusters
        assert_eq!(levels[0].1.len(), 2);
        // two intervals, their overlap, each split per blob
        assert_eq!(levels[1].1.len(), 6);
        assert_eq!(thd, multiscale_thd_reference(&cloud, &r, 0.15).unwrap());
        let report = verify_thd_merge_tree(&cloud, &r, 0.15, 0, None).unwrap();
        assert!(report.passed, "{:?}", report.failures);
        let multi = verify_multi_iso(&cloud, &r, 0.15, 10, 0).unwrap();
        assert!(multi.passed, "{:?}", multi.failures);
        assert!(check_hat_eta(&r, 10, 0).unwrap().passed);
    }

    #[test]
    fn non_strict_is_detected() {
        let c0 = Cover::new(3, vec![SubsetId::new(vec![0, 1]), SubsetId::new(vec![1, 2])]).unwrap();
        let c1 = Cover::new(3, vec![SubsetId::new(vec![0, 1]), SubsetId::new(vec![2])]).unwrap();
        let r = Refinement::new(vec![c0, c1], vec![vec![0, 1]]).unwrap();
        assert_eq!(r.strict_witness(), Some((1, 2, 1)));
        assert!(matches!(hat_eta(&r, 0), Err(Error::NotStrict { .. })));
    }

    #[test]
    fn containment_is_enforced() {
        let c0 = Cover::new(2, vec![SubsetId::new(vec![0]), SubsetId::new(vec![1])]).unwrap();
        let c1 = Cover::new(2, vec![SubsetId::new(vec![0, 1])]).unwrap();
        assert!(Refinement::new(vec![c0, c1], vec![vec![0]]).is_err());
    }

    #[test]
    fn single_level_limit_is_the_nerve() {
        let (_, f) = blobs();
        let r = Refinement::from_interval_tower(&f, &config(&[(3, 0.2)])).unwrap();
        let nerves = level_nerves(&r);
        let limit = limit_nerve(&r, &nerves).unwrap();
        assert_eq!(limit.len(), nerves[0].len());
    }

    #[test]
    fn duplicates_do_not_change_the_thd() {
        let (cloud, f) = blobs();
        let r = Refinement::from_interval_tower(&f, &config(&[(2, 0.2), (2, 0.2)])).unwrap();
        let mut levels = r.levels().to_vec();
        let mut sets = levels[1].sets().to_vec();
        sets.push(sets[0].clone());
        levels[1] = Cover::new(cloud.len(), sets).unwrap();
        let mut map = r.reindex(0).to_vec();
        map.push(map[0]);
        let dup = Refinement::new(levels, vec![map]).unwrap();
        assert_eq!(multiscale_thd(&cloud, &r, 0.15).unwrap(), multiscale_thd(&cloud, &dup, 0.15).unwrap());
    }

    #[test]
    fn corrupted_reindex_is_caught() {
        let (cloud, f) = blobs();
        let r = Refinement::from_interval_tower(&f, &config(&[(2, 0.2), (2, 0.2)])).unwrap();
        let ok = verify_thd_merge_tree(&cloud, &r, 0.15, 0, None).unwrap();
        assert!(ok.passed, "{:?}", ok.failures);
        let bad = verify_thd_merge_tree(&cloud, &r, 0.15, 0, Some(TowerFault::CorruptReindex)).unwrap();
        assert!(!bad.passed);
    }
}
