//! Finite posets under the specialization topology, whose open sets are
//! the up-closed subsets.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::ops::Deref;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subset::{Partition, SubsetId};
use crate::union_find::DisjointSets;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitePoset {
    names: Vec<String>,
    leq: Vec<Vec<bool>>,
    up: Vec<SubsetId>,
    down: Vec<SubsetId>,
    hasse: Vec<(usize, usize)>,
}

/// An up-closed subset, i.e. an open set of the specialization topology.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UpSet(SubsetId);

impl UpSet {
    pub fn new(poset: &FinitePoset, members: SubsetId) -> Result<Self> {
        poset.check_open(&members)?;
        Ok(UpSet(members))
    }

    pub fn into_subset(self) -> SubsetId {
        self.0
    }
}

impl Deref for UpSet {
    type Target = SubsetId;

    fn deref(&self) -> &SubsetId {
        &self.0
    }
}

fn default_names(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

impl FinitePoset {
    /// Builds from a full order relation given as pairs `(a, b)` meaning
    /// `a <= b`. The relation must already be reflexive, transitive and
    /// antisymmetric.
    pub fn from_relation(names: Vec<String>, pairs: &[(usize, usize)]) -> Result<Self> {
        let n = names.len();
        let mut leq = vec![vec![false; n]; n];
        for &(a, b) in pairs {
            if a >= n || b >= n {
                return Err(Error::IndexOutOfRange { index: a.max(b), len: n });
            }
            leq[a][b] = true;
        }
        for (a, row) in leq.iter().enumerate() {
            if !row[a] {
                return Err(Error::InvalidOrder(format!("relation is not reflexive at {}", names[a])));
            }
        }
        for a in 0..n {
            for b in 0..n {
                if a != b && leq[a][b] && leq[b][a] {
                    return Err(Error::InvalidOrder(format!(
                        "relation is not antisymmetric on {} and {}",
                        names[a], names[b]
                    )));
                }
                if !leq[a][b] {
                    continue;
                }
                for c in 0..n {
                    if leq[b][c] && !leq[a][c] {
                        return Err(Error::InvalidOrder(format!(
                            "relation is not transitive on {} <= {} <= {}",
                            names[a], names[b], names[c]
                        )));
                    }
                }
            }
        }
        Self::from_matrix(names, leq)
    }

    /// Builds the order generated by `edges` (each `(a, b)` meaning
    /// `a < b`). Cycles are rejected.
    pub fn from_covers(names: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = names.len();
        let mut succ = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::IndexOutOfRange { index: a.max(b), len: n });
            }
            succ[a].push(b);
        }
        let mut leq = vec![vec![false; n]; n];
        for (a, row) in leq.iter_mut().enumerate() {
            let mut queue = VecDeque::from([a]);
            row[a] = true;
            while let Some(x) = queue.pop_front() {
                for &y in &succ[x] {
                    if !row[y] {
                        row[y] = true;
                        queue.push_back(y);
                    }
                }
            }
        }
        for a in 0..n {
            for b in (a + 1)..n {
                if leq[a][b] && leq[b][a] {
                    return Err(Error::InvalidOrder(format!(
                        "cycle through {} and {}",
                        names[a], names[b]
                    )));
                }
            }
        }
        for &(a, b) in edges {
            if a == b {
                return Err(Error::InvalidOrder(format!("loop at {}", names[a])));
            }
        }
        Self::from_matrix(names, leq)
    }

    fn from_matrix(names: Vec<String>, leq: Vec<Vec<bool>>) -> Result<Self> {
        let n = names.len();
        let distinct: BTreeSet<&String> = names.iter().collect();
        if distinct.len() != n {
            return Err(Error::InvalidOrder("element names must be distinct".into()));
        }
        let up: Vec<SubsetId> = (0..n).map(|p| (0..n).filter(|&q| leq[p][q]).collect()).collect();
        let down: Vec<SubsetId> = (0..n).map(|p| (0..n).filter(|&q| leq[q][p]).collect()).collect();
        let mut hasse = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a != b
                    && leq[a][b]
                    && !(0..n).any(|c| c != a && c != b && leq[a][c] && leq[c][b])
                {
                    hasse.push((a, b));
                }
            }
        }
        Ok(FinitePoset {
            names,
            leq,
            up,
            down,
            hasse,
        })
    }

    pub fn antichain(n: usize) -> Self {
        Self::from_covers(default_names(n), &[]).expect("antichain")
    }

    /// `0 < 1 < ... < n-1`.
    pub fn chain(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_covers(default_names(n), &edges).expect("chain")
    }

    /// Subsets ordered by inclusion, named by their display form.
    pub fn from_subsets<T: AsRef<[usize]>>(sets: &[T]) -> Result<Self> {
        let n = sets.len();
        let subsets: Vec<SubsetId> = sets.iter().map(|s| SubsetId::new(s.as_ref().to_vec())).collect();
        let leq = (0..n)
            .map(|a| (0..n).map(|b| subsets[a].is_subset(&subsets[b])).collect())
            .collect();
        let names = subsets.iter().map(|s| s.to_string()).collect();
        Self::from_matrix(names, leq)
    }

    pub fn with_names(self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.len() {
            return Err(Error::InvalidParameter("wrong number of element names".into()));
        }
        Self::from_matrix(names, self.leq)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, p: usize) -> &str {
        &self.names[p]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownElement(name.to_string()))
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.leq[a][b]
    }

    /// Covering pairs `(a, b)` with `a < b` and nothing strictly between.
    pub fn hasse(&self) -> &[(usize, usize)] {
        &self.hasse
    }

    /// All pairs `(a, b)` with `a < b`.
    pub fn strict_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .filter(|&(a, b)| a != b && self.leq[a][b])
            .collect()
    }

    fn check(&self, p: usize) -> Result<()> {
        if p >= self.len() {
            return Err(Error::UnknownElement(p.to_string()));
        }
        Ok(())
    }

    pub fn up_set(&self, p: usize) -> Result<UpSet> {
        self.check(p)?;
        Ok(UpSet(self.up[p].clone()))
    }

    pub fn down_set(&self, p: usize) -> Result<SubsetId> {
        self.check(p)?;
        Ok(self.down[p].clone())
    }

    pub(crate) fn up(&self, p: usize) -> &SubsetId {
        &self.up[p]
    }

    pub(crate) fn down(&self, p: usize) -> &SubsetId {
        &self.down[p]
    }

    pub fn is_open(&self, subset: &SubsetId) -> bool {
        subset.iter().all(|p| p < self.len() && self.up[p].is_subset(subset))
    }

    pub fn check_open(&self, subset: &SubsetId) -> Result<()> {
        subset.check_bound(self.len())?;
        if let Some(p) = subset.iter().find(|&p| !self.up[p].is_subset(subset)) {
            return Err(Error::NotOpen(p));
        }
        Ok(())
    }

    /// Smallest open set containing `subset`.
    pub fn up_closure(&self, subset: &SubsetId) -> SubsetId {
        subset.iter().fold(SubsetId::empty(), |acc, p| acc.union(&self.up[p]))
    }

    pub fn whole(&self) -> UpSet {
        UpSet(SubsetId::full(self.len()))
    }

    /// Connected components of an open subset.
    pub fn components(&self, subset: &SubsetId) -> Result<Partition> {
        self.check_open(subset)?;
        Ok(self.components_unchecked(subset))
    }

    pub(crate) fn components_unchecked(&self, subset: &SubsetId) -> Partition {
        let mut ds = DisjointSets::new(self.len());
        for &(a, b) in &self.hasse {
            if subset.contains(a) && subset.contains(b) {
                ds.union(a, b);
            }
        }
        ds.blocks()
            .into_iter()
            .filter(|b| subset.contains(b.members()[0]))
            .collect()
    }

    /// Every open set, in increasing order of the bitmask. Intended for
    /// small posets.
    pub fn opens(&self) -> Vec<UpSet> {
        let n = self.len();
        let mut out = Vec::new();
        let mut chosen = vec![false; n];
        // decide elements in a linear extension reversed, so that every
        // strict successor is decided first
        let order = self.linear_extension();
        fn rec(
            poset: &FinitePoset,
            order: &[usize],
            k: usize,
            chosen: &mut Vec<bool>,
            out: &mut Vec<UpSet>,
        ) {
            if k == order.len() {
                out.push(UpSet(SubsetId::from_mask(chosen)));
                return;
            }
            let p = order[order.len() - 1 - k];
            rec(poset, order, k + 1, chosen, out);
            if poset.up[p].iter().all(|q| q == p || chosen[q]) {
                chosen[p] = true;
                rec(poset, order, k + 1, chosen, out);
                chosen[p] = false;
            }
        }
        rec(self, &order, 0, &mut chosen, &mut out);
        out.sort_by_key(|u| {
            let mut key = vec![false; n];
            for p in u.iter() {
                key[n - 1 - p] = true;
            }
            key
        });
        out
    }

    /// Elements ordered so that `a < b` implies `a` comes first.
    pub fn linear_extension(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&p| (self.down[p].len(), p));
        order
    }

    pub fn is_connected(&self) -> bool {
        self.components_unchecked(&SubsetId::full(self.len())).len() <= 1
    }

    /// Whether `f` (indexed by elements of `self`) is order preserving into
    /// `codomain`.
    pub fn is_monotone(&self, codomain: &FinitePoset, f: &[usize]) -> bool {
        f.len() == self.len()
            && f.iter().all(|&y| y < codomain.len())
            && self.hasse.iter().all(|&(a, b)| codomain.leq(f[a], f[b]))
    }

    pub fn check_monotone(&self, codomain: &FinitePoset, f: &[usize]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::NotMonotone(format!(
                "map has {} values for {} elements",
                f.len(),
                self.len()
            )));
        }
        if let Some(&y) = f.iter().find(|&&y| y >= codomain.len()) {
            return Err(Error::UnknownElement(y.to_string()));
        }
        if let Some(&(a, b)) = self.hasse.iter().find(|&&(a, b)| !codomain.leq(f[a], f[b])) {
            return Err(Error::NotMonotone(format!(
                "{} <= {} but {} is not below {}",
                self.names[a],
                self.names[b],
                codomain.name(f[a]),
                codomain.name(f[b])
            )));
        }
        Ok(())
    }

    /// Preimage of a subset of the codomain.
    pub fn preimage(f: &[usize], subset: &SubsetId) -> SubsetId {
        (0..f.len()).filter(|&x| subset.contains(f[x])).collect()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let hasse: Vec<[&str; 2]> = self
            .hasse
            .iter()
            .map(|&(a, b)| [self.names[a].as_str(), self.names[b].as_str()])
            .collect();
        serde_json::json!({ "elements": self.names, "hasse": hasse })
    }

    pub fn from_json_value(value: &serde_json::Value) -> Result<Self> {
        let raw: PosetJson = serde_json::from_value(value.clone())?;
        let index: BTreeMap<&str, usize> = raw
            .elements
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::UnknownElement(name.to_string()))
        };
        let edges = raw
            .hasse
            .iter()
            .map(|[a, b]| Ok((lookup(a)?, lookup(b)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_covers(raw.elements.clone(), &edges)
    }

    /// Canonical form up to relabelling: the lexicographically least
    /// relation matrix over all orderings compatible with a degree
    /// signature.
    pub fn canonical_key(&self) -> Vec<bool> {
        let n = self.len();
        let sig = |p: usize| (self.down[p].len(), self.up[p].len());
        let mut elems: Vec<usize> = (0..n).collect();
        elems.sort_by_key(|&p| sig(p));
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for &p in &elems {
            match groups.last_mut() {
                Some(g) if sig(g[0]) == sig(p) => g.push(p),
                _ => groups.push(vec![p]),
            }
        }
        let mut best: Option<Vec<bool>> = None;
        let mut perm = Vec::with_capacity(n);
        fn rec(
            poset: &FinitePoset,
            groups: &mut [Vec<usize>],
            g: usize,
            perm: &mut Vec<usize>,
            best: &mut Option<Vec<bool>>,
        ) {
            if g == groups.len() {
                let key: Vec<bool> = perm
                    .iter()
                    .flat_map(|&a| perm.iter().map(move |&b| poset.leq[a][b]))
                    .collect();
                if best.as_ref().is_none_or(|b| key < *b) {
                    *best = Some(key);
                }
                return;
            }
            permute(poset, groups, g, 0, perm, best);
        }
        fn permute(
            poset: &FinitePoset,
            groups: &mut [Vec<usize>],
            g: usize,
            k: usize,
            perm: &mut Vec<usize>,
            best: &mut Option<Vec<bool>>,
        ) {
            if k == groups[g].len() {
                rec(poset, groups, g + 1, perm, best);
                return;
            }
            for i in k..groups[g].len() {
                groups[g].swap(k, i);
                perm.push(groups[g][k]);
                permute(poset, groups, g, k + 1, perm, best);
                perm.pop();
                groups[g].swap(k, i);
            }
        }
        rec(self, &mut groups, 0, &mut perm, &mut best);
        best.unwrap_or_default()
    }
}

#[derive(Serialize, Deserialize)]
struct PosetJson {
    elements: Vec<String>,
    hasse: Vec<[String; 2]>,
}

/// Every poset on `n` elements up to isomorphism.
pub fn poset_catalog(n: usize) -> Vec<FinitePoset> {
    // naturally labelled posets: element k is added above a down-closed
    // subset of 0..k
    let mut layer: Vec<Vec<Vec<bool>>> = vec![Vec::new()];
    for k in 0..n {
        let mut next = Vec::new();
        for rel in &layer {
            for mask in 0u32..(1u32 << k) {
                let below: Vec<usize> = (0..k).filter(|b| mask >> b & 1 == 1).collect();
                let closed = below
                    .iter()
                    .all(|&b| (0..k).all(|a| !rel[a][b] || mask >> a & 1 == 1));
                if !closed {
                    continue;
                }
                let mut new = vec![vec![false; k + 1]; k + 1];
                for a in 0..k {
                    new[a][..k].copy_from_slice(&rel[a][..k]);
                }
                for &b in &below {
                    new[b][k] = true;
                }
                new[k][k] = true;
                next.push(new);
            }
        }
        layer = next;
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for rel in layer {
        let poset = FinitePoset::from_matrix(default_names(n), rel).expect("catalog poset");
        if seen.insert(poset.canonical_key()) {
            out.push(poset);
        }
    }
    out
}

/// A random poset: each pair `a < b` of a random labelling is related with
/// probability `density` before transitive closure.
pub fn random_poset<R: Rng>(rng: &mut R, n: usize, density: f64) -> FinitePoset {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.gen_bool(density) {
                edges.push((a, b));
            }
        }
    }
    FinitePoset::from_covers(default_names(n), &edges).expect("acyclic by construction")
}

/// A random order preserving map, built along a linear extension of the
/// domain. Falls back to a constant map when a choice gets stuck.
pub fn random_monotone_map<R: Rng>(rng: &mut R, domain: &FinitePoset, codomain: &FinitePoset) -> Vec<usize> {
    assert!(!codomain.is_empty(), "monotone map into an empty poset");
    let order = domain.linear_extension();
    for _ in 0..16 {
        let mut f = vec![usize::MAX; domain.len()];
        let mut ok = true;
        for &x in &order {
            let candidates: Vec<usize> = (0..codomain.len())
                .filter(|&y| {
                    domain
                        .down(x)
                        .iter()
                        .filter(|&w| w != x)
                        .all(|w| codomain.leq(f[w], y))
                })
                .collect();
            if candidates.is_empty() {
                ok = false;
                break;
            }
            f[x] = candidates[rng.gen_range(0..candidates.len())];
        }
        if ok {
            return f;
        }
    }
    vec![rng.gen_range(0..codomain.len()); domain.len()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn v_poset() -> FinitePoset {
        // c < a, c < b
        FinitePoset::from_covers(vec!["a".into(), "b".into(), "c".into()], &[(2, 0), (2, 1)]).unwrap()
    }

    /// Components by breadth-first search on the comparability graph.
    fn bfs_components(p: &FinitePoset, subset: &SubsetId) -> Vec<SubsetId> {
        let mut seen = vec![false; p.len()];
        let mut out = Vec::new();
        for s in subset.iter() {
            if seen[s] {
                continue;
            }
            let mut block = vec![s];
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                for y in subset.iter() {
                    if !seen[y] && (p.leq(x, y) || p.leq(y, x)) {
                        seen[y] = true;
                        block.push(y);
                        queue.push_back(y);
                    }
                }
            }
            out.push(SubsetId::new(block));
        }
        crate::subset::canonical_partition(out)
    }

    #[test]
    fn up_and_down_sets() {
        let chain = FinitePoset::chain(2);
        assert_eq!(chain.up_set(0).unwrap().members(), &[0, 1]);
        assert_eq!(chain.up_set(1).unwrap().members(), &[1]);
        assert_eq!(chain.down_set(1).unwrap().members(), &[0, 1]);
        let anti = FinitePoset::antichain(2);
        assert_eq!(anti.up_set(0).unwrap().members(), &[0]);
        assert_eq!(chain.up_set(5).unwrap_err(), Error::UnknownElement("5".into()));
    }

    #[test]
    fn component_examples() {
        let anti = FinitePoset::antichain(2);
        assert_eq!(anti.components(&SubsetId::full(2)).unwrap().len(), 2);
        let chain = FinitePoset::chain(2);
        assert_eq!(chain.components(&SubsetId::full(2)).unwrap(), vec![SubsetId::full(2)]);
        let v = v_poset();
        let ab = SubsetId::new(vec![0, 1]);
        assert_eq!(v.components(&ab).unwrap(), vec![SubsetId::singleton(0), SubsetId::singleton(1)]);
        assert_eq!(v.components(&SubsetId::full(3)).unwrap().len(), 1);
        assert_eq!(v.components(&SubsetId::singleton(2)).unwrap_err(), Error::NotOpen(2));
    }

    #[test]
    fn validation() {
        let names = || vec!["x".to_string(), "y".to_string()];
        assert!(FinitePoset::from_covers(names(), &[(0, 1), (1, 0)]).is_err());
        assert!(FinitePoset::from_relation(names(), &[(0, 0), (1, 1), (0, 1)]).is_ok());
        assert!(FinitePoset::from_relation(names(), &[(0, 0), (0, 1)]).is_err());
        let three: Vec<String> = vec!["x".into(), "y".into(), "z".into()];
        assert!(FinitePoset::from_relation(three, &[(0, 0), (1, 1), (2, 2), (0, 1), (1, 2)]).is_err());
    }

    #[test]
    fn catalog_sizes() {
        let sizes: Vec<usize> = (0..=5).map(|n| poset_catalog(n).len()).collect();
        assert_eq!(sizes, vec![1, 1, 2, 5, 16, 63]);
    }

    #[test]
    fn opens_are_all_up_sets() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let p = random_poset(&mut rng, 6, 0.3);
            let opens = p.opens();
            let brute: Vec<SubsetId> = (0u32..64)
                .map(|m| (0..6).filter(|i| m >> i & 1 == 1).collect::<SubsetId>())
                .filter(|s| p.is_open(s))
                .collect();
            assert_eq!(opens.len(), brute.len());
            let got: BTreeSet<SubsetId> = opens.into_iter().map(UpSet::into_subset).collect();
            assert_eq!(got, brute.into_iter().collect());
        }
    }

    #[test]
    fn components_match_bfs_and_are_functorial() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let p = random_poset(&mut rng, 7, 0.25);
            let opens = p.opens();
            for u in &opens {
                let comps = p.components(u).unwrap();
                assert_eq!(comps, bfs_components(&p, u));
                for v in &opens {
                    if !v.is_subset(u) {
                        continue;
                    }
                    for block in p.components(v).unwrap() {
                        assert_eq!(comps.iter().filter(|c| block.is_subset(c)).count(), 1);
                    }
                }
            }
            assert_eq!(p.is_connected(), bfs_components(&p, &SubsetId::full(7)).len() == 1);
        }
    }

    #[test]
    fn monotone_maps() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let chain = FinitePoset::chain(3);
        for _ in 0..20 {
            let dom = random_poset(&mut rng, 5, 0.4);
            let f = random_monotone_map(&mut rng, &dom, &chain);
            assert!(dom.is_monotone(&chain, &f));
        }
        let v = v_poset();
        assert!(v.check_monotone(&chain, &[0, 0, 2]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let v = v_poset();
        let json = v.to_json_value();
        assert_eq!(json.to_string(), r#"{"elements":["a","b","c"],"hasse":[["c","a"],["c","b"]]}"#);
        assert_eq!(FinitePoset::from_json_value(&json).unwrap(), v);
    }
}
