//! Set-valued precosheaves on finite posets.
//!
//! A [`Precosheaf`] stores its values on the basic opens `↑p` together with
//! the transition maps `F(↑q) -> F(↑p)` for `p <= q`; values on arbitrary
//! opens are recomputed as colimits over the basic opens they contain.
//! [`ReebCosheaf`] and [`ConstantPrecosheaf`] are given directly on every
//! open and serve as independent references.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::complex::{eta_shriek, eta_unchecked, pixelize_unchecked, Cover, Nerve, Simplex};
use crate::error::{Error, Result};
use crate::subset::SubsetId;
use crate::thd::{Level, ThdKind, ThdNode, ThdPoset};
use crate::topology::FinitePoset;
use crate::union_find::DisjointSets;
use crate::verify::Report;

/// A function between two objects of a [`Diagram`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arrow {
    pub src: usize,
    pub dst: usize,
    pub map: Vec<usize>,
}

/// A finite diagram of finite sets `0..sizes[k]`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Diagram {
    sizes: Vec<usize>,
    arrows: Vec<Arrow>,
}

impl Diagram {
    pub fn new(sizes: Vec<usize>) -> Self {
        Diagram {
            sizes,
            arrows: Vec::new(),
        }
    }

    pub fn add_arrow(&mut self, src: usize, dst: usize, map: Vec<usize>) -> Result<()> {
        let k = self.sizes.len();
        if src >= k || dst >= k {
            return Err(Error::IndexOutOfRange { index: src.max(dst), len: k });
        }
        if map.len() != self.sizes[src] || map.iter().any(|&y| y >= self.sizes[dst]) {
            return Err(Error::NotFunctorial(format!(
                "arrow {src} -> {dst} is not a function between the given sets"
            )));
        }
        self.arrows.push(Arrow { src, dst, map });
        Ok(())
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    /// Identity arrows are identities, parallel arrows agree and every
    /// composable pair agrees with an arrow between its ends, when present.
    pub fn check_functorial(&self) -> Result<()> {
        let mut by_ends: BTreeMap<(usize, usize), &Arrow> = BTreeMap::new();
        for a in &self.arrows {
            if a.src == a.dst && a.map.iter().enumerate().any(|(i, &j)| i != j) {
                return Err(Error::NotFunctorial(format!("arrow {0} -> {0} is not the identity", a.src)));
            }
            if let Some(prev) = by_ends.insert((a.src, a.dst), a) {
                if prev.map != a.map {
                    return Err(Error::NotFunctorial(format!(
                        "parallel arrows {} -> {} differ",
                        a.src, a.dst
                    )));
                }
            }
        }
        let mut outgoing: BTreeMap<usize, Vec<&Arrow>> = BTreeMap::new();
        for a in by_ends.values() {
            outgoing.entry(a.src).or_default().push(a);
        }
        for a in by_ends.values() {
            for b in outgoing.get(&a.dst).into_iter().flatten() {
                if let Some(c) = by_ends.get(&(a.src, b.dst)) {
                    if a.map.iter().map(|&x| b.map[x]).ne(c.map.iter().copied()) {
                        return Err(Error::NotFunctorial(format!(
                            "{} -> {} -> {} does not compose to {} -> {}",
                            a.src, a.dst, b.dst, a.src, b.dst
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// The quotient of the disjoint union. Classes are numbered in order of
/// their least element `(object, element)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Colimit {
    pub size: usize,
    pub coprojections: Vec<Vec<usize>>,
    pub representatives: Vec<(usize, usize)>,
}

pub fn set_colimit(diagram: &Diagram) -> Result<Colimit> {
    diagram.check_functorial()?;
    Ok(colimit_unchecked(diagram))
}

fn colimit_unchecked(diagram: &Diagram) -> Colimit {
    let mut offsets = Vec::with_capacity(diagram.sizes.len());
    let mut total = 0;
    for &s in &diagram.sizes {
        offsets.push(total);
        total += s;
    }
    let mut ds = DisjointSets::new(total);
    for a in &diagram.arrows {
        for (x, &y) in a.map.iter().enumerate() {
            ds.union(offsets[a.src] + x, offsets[a.dst] + y);
        }
    }
    let (labels, size) = ds.labels();
    let mut representatives = vec![(usize::MAX, 0); size];
    let coprojections = diagram
        .sizes
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            (0..s)
                .map(|x| {
                    let c = labels[offsets[k] + x];
                    if representatives[c].0 == usize::MAX {
                        representatives[c] = (k, x);
                    }
                    c
                })
                .collect()
        })
        .collect();
    Colimit {
        size,
        coprojections,
        representatives,
    }
}

/// Consistent families: tuples with one element per object such that every
/// arrow sends the source component to the target component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Limit {
    pub tuples: Vec<Vec<usize>>,
}

pub fn set_limit(diagram: &Diagram) -> Result<Limit> {
    let k = diagram.sizes.len();
    let mut tuples = Vec::new();
    let mut current = vec![0usize; k];
    fn rec(d: &Diagram, obj: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if obj == d.sizes.len() {
            out.push(current.clone());
            return;
        }
        for x in 0..d.sizes[obj] {
            current[obj] = x;
            let ok = d.arrows.iter().all(|a| {
                a.src.max(a.dst) != obj || a.map[current[a.src]] == current[a.dst]
            });
            if ok {
                rec(d, obj + 1, current, out);
            }
        }
    }
    rec(diagram, 0, &mut current, &mut tuples);
    Ok(Limit { tuples })
}

/// A precosheaf given on every open set of a finite poset.
pub trait Cosections: Sync {
    fn base(&self) -> &FinitePoset;

    /// Labels of the elements of `F(open)`.
    fn labels(&self, open: &SubsetId) -> Result<Vec<String>>;

    /// The map `F(inner) -> F(outer)` for open `inner ⊆ outer`.
    fn extend(&self, inner: &SubsetId, outer: &SubsetId) -> Result<Vec<usize>>;
}

fn check_inclusion(base: &FinitePoset, inner: &SubsetId, outer: &SubsetId) -> Result<()> {
    base.check_open(inner)?;
    base.check_open(outer)?;
    if !inner.is_subset(outer) {
        return Err(Error::InvalidParameter(format!("{inner} is not contained in {outer}")));
    }
    Ok(())
}

/// A precosheaf represented on the basis of principal up-sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Precosheaf {
    base: FinitePoset,
    costalks: Vec<Vec<String>>,
    trans: BTreeMap<(usize, usize), Vec<usize>>,
}

/// `F(U)` as a colimit, remembering where each basic element goes.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub open: SubsetId,
    pub labels: Vec<String>,
    class_of: HashMap<usize, Vec<usize>>,
    representatives: Vec<(usize, usize)>,
}

impl Evaluation {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Class of element `beta` of `F(↑p)`, for `p` in the open.
    pub fn class(&self, p: usize, beta: usize) -> usize {
        self.class_of[&p][beta]
    }

    pub fn representative(&self, class: usize) -> (usize, usize) {
        self.representatives[class]
    }

    /// The induced map into the evaluation on a larger open.
    pub fn map_into(&self, outer: &Evaluation) -> Vec<usize> {
        self.representatives
            .iter()
            .map(|&(p, b)| outer.class(p, b))
            .collect()
    }
}

impl Precosheaf {
    /// `trans` must hold a map for every pair `p < q` of the base.
    pub fn new(
        base: FinitePoset,
        costalks: Vec<Vec<String>>,
        trans: BTreeMap<(usize, usize), Vec<usize>>,
    ) -> Result<Self> {
        let n = base.len();
        if costalks.len() != n {
            return Err(Error::InvalidParameter(format!(
                "{} costalks for {} base elements",
                costalks.len(),
                n
            )));
        }
        for (p, labels) in costalks.iter().enumerate() {
            let distinct: BTreeSet<&String> = labels.iter().collect();
            if distinct.len() != labels.len() {
                return Err(Error::InvalidParameter(format!(
                    "duplicate labels in the costalk at {}",
                    base.name(p)
                )));
            }
        }
        for (p, q) in base.strict_pairs() {
            let map = trans.get(&(p, q)).ok_or_else(|| {
                Error::NotFunctorial(format!("missing transition map {} <= {}", base.name(p), base.name(q)))
            })?;
            if map.len() != costalks[q].len() || map.iter().any(|&b| b >= costalks[p].len()) {
                return Err(Error::NotFunctorial(format!(
                    "transition map {} <= {} is not a function F(↑{}) -> F(↑{})",
                    base.name(p),
                    base.name(q),
                    base.name(q),
                    base.name(p)
                )));
            }
        }
        if let Some(&(p, q)) = trans.keys().find(|&&(p, q)| p == q || !base.leq(p, q)) {
            return Err(Error::NotFunctorial(format!(
                "transition map given for {} and {} which are not strictly comparable",
                base.name(p),
                base.name(q)
            )));
        }
        Ok(Precosheaf {
            base,
            costalks,
            trans,
        })
    }

    /// Builds from maps on covering pairs only, composing along paths, and
    /// then checks that all paths agree.
    pub fn from_hasse_maps(
        base: FinitePoset,
        costalks: Vec<Vec<String>>,
        maps: BTreeMap<(usize, usize), Vec<usize>>,
    ) -> Result<Self> {
        let mut trans: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for &(p, q) in base.hasse() {
            let map = maps.get(&(p, q)).ok_or_else(|| {
                Error::NotFunctorial(format!("missing transition map {} <= {}", base.name(p), base.name(q)))
            })?;
            trans.insert((p, q), map.clone());
        }
        // longer pairs in order of increasing interval size
        let mut pairs: Vec<(usize, usize)> = base
            .strict_pairs()
            .into_iter()
            .filter(|pq| !trans.contains_key(pq))
            .collect();
        pairs.sort_by_key(|&(p, q)| {
            (0..base.len())
                .filter(|&c| base.leq(p, c) && base.leq(c, q))
                .count()
        });
        for (p, q) in pairs {
            let &(_, c) = base
                .hasse()
                .iter()
                .find(|&&(a, c)| a == p && base.leq(c, q))
                .expect("a chain from p to q starts with a covering pair");
            let first = &trans[&(p, c)];
            let second = &trans[&(c, q)];
            if second.iter().any(|&x| x >= first.len()) {
                return Err(Error::NotFunctorial("transition maps have mismatched sizes".into()));
            }
            let composed = second.iter().map(|&x| first[x]).collect();
            trans.insert((p, q), composed);
        }
        let f = Precosheaf::new(base, costalks, trans)?;
        f.check_functor_laws()?;
        Ok(f)
    }

    pub fn base(&self) -> &FinitePoset {
        &self.base
    }

    pub fn costalk(&self, p: usize) -> &[String] {
        &self.costalks[p]
    }

    /// The map `F(↑q) -> F(↑p)` for `p <= q`.
    pub fn trans(&self, p: usize, q: usize) -> Vec<usize> {
        if p == q {
            (0..self.costalks[p].len()).collect()
        } else {
            self.trans[&(p, q)].clone()
        }
    }

    fn trans_at(&self, p: usize, q: usize, beta: usize) -> usize {
        if p == q {
            beta
        } else {
            self.trans[&(p, q)][beta]
        }
    }

    /// Composition law on every triple `p < q < r`.
    pub fn check_functor_laws(&self) -> Result<()> {
        let n = self.base.len();
        for (p, q) in self.base.strict_pairs() {
            for r in 0..n {
                if r == q || !self.base.leq(q, r) {
                    continue;
                }
                let pq = &self.trans[&(p, q)];
                let qr = &self.trans[&(q, r)];
                let pr = &self.trans[&(p, r)];
                if let Some(beta) = (0..qr.len()).find(|&b| pq[qr[b]] != pr[b]) {
                    return Err(Error::NotFunctorial(format!(
                        "F({}<={}) . F({}<={}) differs from F({}<={}) at {}",
                        self.base.name(p),
                        self.base.name(q),
                        self.base.name(q),
                        self.base.name(r),
                        self.base.name(p),
                        self.base.name(r),
                        self.costalks[r][beta]
                    )));
                }
            }
        }
        Ok(())
    }

    /// `F(U)` as the colimit over the basic opens inside `U`. A principal
    /// up-set returns its costalk verbatim.
    pub fn evaluation(&self, open: &SubsetId) -> Result<Evaluation> {
        self.base.check_open(open)?;
        Ok(self.evaluation_unchecked(open))
    }

    fn evaluation_unchecked(&self, open: &SubsetId) -> Evaluation {
        let minimal: Vec<usize> = open
            .iter()
            .filter(|&p| !open.iter().any(|q| q != p && self.base.leq(q, p)))
            .collect();
        if let [p] = minimal[..] {
            let class_of = open
                .iter()
                .map(|q| (q, self.trans(p, q)))
                .collect();
            return Evaluation {
                open: open.clone(),
                labels: self.costalks[p].clone(),
                class_of,
                representatives: (0..self.costalks[p].len()).map(|b| (p, b)).collect(),
            };
        }
        let objects: Vec<usize> = open.iter().collect();
        let index: HashMap<usize, usize> = objects.iter().enumerate().map(|(k, &p)| (p, k)).collect();
        let mut diagram = Diagram::new(objects.iter().map(|&p| self.costalks[p].len()).collect());
        for (&(p, q), map) in &self.trans {
            if let (Some(&kp), Some(&kq)) = (index.get(&p), index.get(&q)) {
                diagram.arrows.push(Arrow {
                    src: kq,
                    dst: kp,
                    map: map.clone(),
                });
            }
        }
        let colimit = colimit_unchecked(&diagram);
        let representatives: Vec<(usize, usize)> = colimit
            .representatives
            .iter()
            .map(|&(k, b)| (objects[k], b))
            .collect();
        let labels = representatives
            .iter()
            .map(|&(p, b)| format!("{}:{}", self.base.name(p), self.costalks[p][b]))
            .collect();
        let class_of = objects
            .iter()
            .zip(colimit.coprojections)
            .map(|(&p, c)| (p, c))
            .collect();
        Evaluation {
            open: open.clone(),
            labels,
            class_of,
            representatives,
        }
    }

    pub fn evaluate(&self, open: &SubsetId) -> Result<Vec<String>> {
        Ok(self.evaluation(open)?.labels)
    }

    /// Replaces the transition map at `p < q` by its composite with a cyclic
    /// shift of `F(↑p)`. Meant for fault injection.
    pub fn with_rotated_transition(&self, p: usize, q: usize) -> Result<Self> {
        let mut out = self.clone();
        let k = self.costalks[p].len();
        let map = out
            .trans
            .get_mut(&(p, q))
            .ok_or_else(|| Error::InvalidParameter("no transition map at that pair".into()))?;
        for b in map.iter_mut() {
            *b = (*b + 1) % k;
        }
        Ok(out)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let costalks: serde_json::Map<String, serde_json::Value> = (0..self.base.len())
            .map(|p| (self.base.name(p).to_string(), serde_json::json!(self.costalks[p])))
            .collect();
        let trans: serde_json::Map<String, serde_json::Value> = self
            .base
            .hasse()
            .iter()
            .map(|&(p, q)| {
                let map: serde_json::Map<String, serde_json::Value> = self.trans[&(p, q)]
                    .iter()
                    .enumerate()
                    .map(|(b, &a)| (self.costalks[q][b].clone(), serde_json::json!(self.costalks[p][a])))
                    .collect();
                (
                    format!("{}<={}", self.base.name(p), self.base.name(q)),
                    serde_json::Value::Object(map),
                )
            })
            .collect();
        serde_json::json!({
            "base": self.base.to_json_value(),
            "costalks": costalks,
            "trans": trans,
        })
    }

    pub fn from_json_value(value: &serde_json::Value) -> Result<Self> {
        let bad = |m: &str| Error::Parse(m.to_string());
        let base = FinitePoset::from_json_value(value.get("base").ok_or_else(|| bad("missing base"))?)?;
        let costalk_obj = value
            .get("costalks")
            .and_then(|v| v.as_object())
            .ok_or_else(|| bad("missing costalks"))?;
        let mut costalks = vec![Vec::new(); base.len()];
        for (name, labels) in costalk_obj {
            let p = base.index_of(name)?;
            costalks[p] = serde_json::from_value(labels.clone())?;
        }
        let trans_obj = value
            .get("trans")
            .and_then(|v| v.as_object())
            .ok_or_else(|| bad("missing trans"))?;
        let mut maps = BTreeMap::new();
        for (key, map) in trans_obj {
            let (a, b) = key.split_once("<=").ok_or_else(|| bad("transition keys look like p<=q"))?;
            let (p, q) = (base.index_of(a)?, base.index_of(b)?);
            let map = map.as_object().ok_or_else(|| bad("transition maps are objects"))?;
            let mut out = vec![usize::MAX; costalks[q].len()];
            for (from, to) in map {
                let from_idx = costalks[q]
                    .iter()
                    .position(|l| l == from)
                    .ok_or_else(|| Error::UnknownElement(from.clone()))?;
                let to = to.as_str().ok_or_else(|| bad("transition targets are labels"))?;
                out[from_idx] = costalks[p]
                    .iter()
                    .position(|l| l == to)
                    .ok_or_else(|| Error::UnknownElement(to.to_string()))?;
            }
            if out.contains(&usize::MAX) {
                return Err(bad("transition map is not total"));
            }
            maps.insert((p, q), out);
        }
        Self::from_hasse_maps(base, costalks, maps)
    }
}

impl Cosections for Precosheaf {
    fn base(&self) -> &FinitePoset {
        &self.base
    }

    fn labels(&self, open: &SubsetId) -> Result<Vec<String>> {
        self.evaluate(open)
    }

    fn extend(&self, inner: &SubsetId, outer: &SubsetId) -> Result<Vec<usize>> {
        check_inclusion(&self.base, inner, outer)?;
        let a = self.evaluation_unchecked(inner);
        let b = self.evaluation_unchecked(outer);
        Ok(a.map_into(&b))
    }
}

/// The Reeb cosheaf of a monotone map, evaluated directly on every open as
/// the components of the preimage.
#[derive(Debug, Clone, PartialEq)]
pub struct ReebCosheaf {
    domain: FinitePoset,
    codomain: FinitePoset,
    map: Vec<usize>,
}

impl ReebCosheaf {
    pub fn new(domain: FinitePoset, codomain: FinitePoset, map: Vec<usize>) -> Result<Self> {
        domain.check_monotone(&codomain, &map)?;
        Ok(ReebCosheaf {
            domain,
            codomain,
            map,
        })
    }

    pub fn domain(&self) -> &FinitePoset {
        &self.domain
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    /// Components of the preimage of an open set.
    pub fn blocks(&self, open: &SubsetId) -> Result<Vec<SubsetId>> {
        self.codomain.check_open(open)?;
        Ok(self
            .domain
            .components_unchecked(&FinitePoset::preimage(&self.map, open)))
    }

    fn block_label(&self, block: &SubsetId) -> String {
        let names: Vec<&str> = block.iter().map(|x| self.domain.name(x)).collect();
        format!("{{{}}}", names.join(","))
    }
}

impl Cosections for ReebCosheaf {
    fn base(&self) -> &FinitePoset {
        &self.codomain
    }

    fn labels(&self, open: &SubsetId) -> Result<Vec<String>> {
        Ok(self.blocks(open)?.iter().map(|b| self.block_label(b)).collect())
    }

    fn extend(&self, inner: &SubsetId, outer: &SubsetId) -> Result<Vec<usize>> {
        check_inclusion(&self.codomain, inner, outer)?;
        let small = self.blocks(inner)?;
        let big = self.blocks(outer)?;
        Ok(small
            .iter()
            .map(|b| {
                big.iter()
                    .position(|c| c.contains(b.members()[0]))
                    .expect("components of a smaller open sit inside components of a larger one")
            })
            .collect())
    }
}

/// The same finite set on every nonempty open, identities between them,
/// and the empty set on the empty open.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantPrecosheaf {
    base: FinitePoset,
    labels: Vec<String>,
}

impl ConstantPrecosheaf {
    pub fn new(base: FinitePoset, labels: Vec<String>) -> Self {
        ConstantPrecosheaf { base, labels }
    }
}

impl Cosections for ConstantPrecosheaf {
    fn base(&self) -> &FinitePoset {
        &self.base
    }

    fn labels(&self, open: &SubsetId) -> Result<Vec<String>> {
        self.base.check_open(open)?;
        Ok(if open.is_empty() {
            Vec::new()
        } else {
            self.labels.clone()
        })
    }

    fn extend(&self, inner: &SubsetId, outer: &SubsetId) -> Result<Vec<usize>> {
        check_inclusion(&self.base, inner, outer)?;
        Ok(if inner.is_empty() {
            Vec::new()
        } else {
            (0..self.labels.len()).collect()
        })
    }
}

/// Restricts any precosheaf to its basic opens.
pub fn basis_representation(f: &dyn Cosections) -> Result<Precosheaf> {
    let base = f.base().clone();
    let ups: Vec<SubsetId> = (0..base.len()).map(|p| base.up(p).clone()).collect();
    let costalks = ups.iter().map(|u| f.labels(u)).collect::<Result<Vec<_>>>()?;
    let mut trans = BTreeMap::new();
    for (p, q) in base.strict_pairs() {
        trans.insert((p, q), f.extend(&ups[q], &ups[p])?);
    }
    Precosheaf::new(base, costalks, trans)
}

/// The Reeb cosheaf of a monotone map on the basis of its codomain.
pub fn reeb_cosheaf(domain: &FinitePoset, codomain: &FinitePoset, map: &[usize]) -> Result<Precosheaf> {
    let direct = ReebCosheaf::new(domain.clone(), codomain.clone(), map.to_vec())?;
    basis_representation(&direct)
}

/// Direct image along a monotone map `h : base -> codomain`.
pub fn pushforward(f: &dyn Cosections, codomain: &FinitePoset, h: &[usize]) -> Result<Precosheaf> {
    f.base().check_monotone(codomain, h)?;
    let pre: Vec<SubsetId> = (0..codomain.len())
        .map(|s| FinitePoset::preimage(h, codomain.up(s)))
        .collect();
    let costalks = pre.iter().map(|u| f.labels(u)).collect::<Result<Vec<_>>>()?;
    let mut trans = BTreeMap::new();
    for (s, t) in codomain.strict_pairs() {
        trans.insert((s, t), f.extend(&pre[t], &pre[s])?);
    }
    Precosheaf::new(codomain.clone(), costalks, trans)
}

/// Checks that every cover set is open in `base` and that the cover lives
/// on the elements of `base`.
fn check_cover_on(base: &FinitePoset, cover: &Cover) -> Result<()> {
    if cover.universe() != base.len() {
        return Err(Error::InvalidCover(format!(
            "cover of {} points used on a base of {} elements",
            cover.universe(),
            base.len()
        )));
    }
    for (i, set) in cover.sets().iter().enumerate() {
        if !base.is_open(set) {
            return Err(Error::InvalidCover(format!("cover set {i} = {set} is not open")));
        }
    }
    Ok(())
}

fn check_nerve_holds_eta(cover: &Cover, nerve: &Nerve) -> Result<()> {
    for x in 0..cover.universe() {
        let sigma = eta_unchecked(cover, x);
        if !nerve.contains(&sigma) {
            return Err(Error::NerveTooSmall(sigma));
        }
    }
    Ok(())
}

/// The mapper precosheaf `U ↦ F(η⁻¹η_!(U))` on the basis of `F`'s base.
pub fn mapper_cosheaf(f: &dyn Cosections, cover: &Cover, nerve: &Nerve) -> Result<Precosheaf> {
    let base = f.base().clone();
    check_cover_on(&base, cover)?;
    check_nerve_holds_eta(cover, nerve)?;
    let pix: Vec<SubsetId> = (0..base.len())
        .map(|x| pixelize_unchecked(cover, base.up(x)))
        .collect();
    let costalks = pix.iter().map(|u| f.labels(u)).collect::<Result<Vec<_>>>()?;
    let mut trans = BTreeMap::new();
    for (x, y) in base.strict_pairs() {
        trans.insert((x, y), f.extend(&pix[y], &pix[x])?);
    }
    Precosheaf::new(base, costalks, trans)
}

/// The nerve as a poset of simplices under inclusion.
pub fn nerve_poset(nerve: &Nerve) -> (FinitePoset, Vec<Simplex>) {
    let simplices: Vec<Simplex> = nerve.simplices().cloned().collect();
    let poset = FinitePoset::from_subsets(&simplices).expect("distinct simplices");
    (poset, simplices)
}

/// The category of elements of a precosheaf: pairs `(p, β)` with
/// `(q, β') ⪯ (p, β)` when `p <= q` and `F(p<=q)(β') = β`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementsPoset {
    pub poset: FinitePoset,
    pub nodes: Vec<(usize, usize)>,
}

pub fn total_locale(f: &Precosheaf) -> ElementsPoset {
    let base = &f.base;
    let nodes: Vec<(usize, usize)> = (0..base.len())
        .flat_map(|p| (0..f.costalks[p].len()).map(move |b| (p, b)))
        .collect();
    let names = nodes
        .iter()
        .map(|&(p, b)| format!("{}:{}", base.name(p), f.costalks[p][b]))
        .collect();
    let mut pairs = Vec::new();
    for (i, &(q, bq)) in nodes.iter().enumerate() {
        for (j, &(p, bp)) in nodes.iter().enumerate() {
            if base.leq(p, q) && f.trans_at(p, q, bq) == bp {
                pairs.push((i, j));
            }
        }
    }
    let poset = FinitePoset::from_relation(names, &pairs)
        .expect("elements of a functorial precosheaf form a poset");
    ElementsPoset { poset, nodes }
}

/// Whether `subset` is connected through chains of comparable elements.
pub fn comparability_connected(poset: &FinitePoset, subset: &SubsetId) -> bool {
    let Some(start) = subset.min() else {
        return false;
    };
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        for y in subset.iter() {
            if !seen.contains(&y) && (poset.leq(x, y) || poset.leq(y, x)) {
                seen.insert(y);
                queue.push_back(y);
            }
        }
    }
    seen.len() == subset.len()
}

/// Every basic open `↓(p, β)` of the total locale is nonempty and connected.
pub fn is_spatial(f: &Precosheaf) -> bool {
    let el = total_locale(f);
    (0..el.nodes.len()).all(|i| comparability_connected(&el.poset, el.poset.down(i)))
}

/// The category of elements exported as a hierarchy, one level per base
/// element.
pub fn merge_tree_of(f: &Precosheaf) -> ThdPoset {
    let el = total_locale(f);
    let nodes = el
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &(p, _))| ThdNode {
            level: Level::Index(p),
            simplex: None,
            block: None,
            label: el.poset.name(i).to_string(),
        })
        .collect();
    ThdPoset {
        kind: ThdKind::GeneralPoset,
        nodes,
        edges: el.poset.hasse().to_vec(),
        heights: None,
    }
}

/// How a cover fails the cosheaf axiom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AxiomWitness {
    /// An element of `F(U)` not reached from any cover set.
    NotSurjective { element: String },
    /// Two distinct colimit classes with the same image in `F(U)`.
    NotInjective {
        first: (usize, String),
        second: (usize, String),
        image: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosheafCheck {
    pub holds: bool,
    pub colimit_size: usize,
    pub value_size: usize,
    pub witness: Option<AxiomWitness>,
}

/// Compares `F(U)` with the coequalizer of `⊔ F(V_k ∩ V_l) ⇉ ⊔ F(V_k)`.
pub fn check_cosheaf_axiom(f: &dyn Cosections, open: &SubsetId, cover: &[SubsetId]) -> Result<CosheafCheck> {
    let base = f.base();
    base.check_open(open)?;
    let mut union = SubsetId::empty();
    for v in cover {
        if !base.is_open(v) {
            return Err(Error::InvalidCover(format!("{v} is not open")));
        }
        if !v.is_subset(open) {
            return Err(Error::InvalidCover(format!("{v} is not inside {open}")));
        }
        union = union.union(v);
    }
    if union != *open {
        return Err(Error::InvalidCover(format!("cover sets do not exhaust {open}")));
    }
    let m = cover.len();
    let piece_labels = cover.iter().map(|v| f.labels(v)).collect::<Result<Vec<_>>>()?;
    let mut sizes: Vec<usize> = piece_labels.iter().map(Vec::len).collect();
    let mut pending = Vec::new();
    for k in 0..m {
        for l in (k + 1)..m {
            let meet = cover[k].intersection(&cover[l]);
            let obj = sizes.len();
            sizes.push(f.labels(&meet)?.len());
            pending.push((obj, k, f.extend(&meet, &cover[k])?));
            pending.push((obj, l, f.extend(&meet, &cover[l])?));
        }
    }
    let mut diagram = Diagram::new(sizes);
    for (src, dst, map) in pending {
        diagram.add_arrow(src, dst, map)?;
    }
    let colimit = colimit_unchecked(&diagram);
    let value = f.labels(open)?;
    let to_value = (0..m).map(|k| f.extend(&cover[k], open)).collect::<Result<Vec<_>>>()?;
    let mut image_of_class = vec![None; colimit.size];
    let mut witness = None;
    for (k, map) in to_value.iter().enumerate() {
        for (x, &y) in map.iter().enumerate() {
            let c = colimit.coprojections[k][x];
            match image_of_class[c] {
                None => image_of_class[c] = Some(y),
                Some(prev) if prev != y && witness.is_none() => {
                    let (rk, rx) = colimit.representatives[c];
                    witness = Some(AxiomWitness::NotInjective {
                        first: (rk, piece_labels[rk][rx].clone()),
                        second: (k, piece_labels[k][x].clone()),
                        image: format!("{} and {}", value[prev], value[y]),
                    });
                }
                _ => {}
            }
        }
    }
    if witness.is_none() {
        let mut owner: Vec<Option<usize>> = vec![None; value.len()];
        for (c, img) in image_of_class.iter().enumerate() {
            let Some(y) = *img else { continue };
            if let Some(prev) = owner[y] {
                let (ak, ax) = colimit.representatives[prev];
                let (bk, bx) = colimit.representatives[c];
                witness = Some(AxiomWitness::NotInjective {
                    first: (ak, piece_labels[ak][ax].clone()),
                    second: (bk, piece_labels[bk][bx].clone()),
                    image: value[y].clone(),
                });
                break;
            }
            owner[y] = Some(c);
        }
        if witness.is_none() {
            if let Some(y) = owner.iter().position(Option::is_none) {
                witness = Some(AxiomWitness::NotSurjective {
                    element: value[y].clone(),
                });
            }
        }
    }
    Ok(CosheafCheck {
        holds: witness.is_none(),
        colimit_size: colimit.size,
        value_size: value.len(),
        witness,
    })
}

/// The spatial pullback of a precosheaf `g` on `codomain` along a monotone
/// `h : base -> codomain`: the Reeb cosheaf of the projection from the
/// fibre product of `base` with the elements of `g`.
pub fn spatial_pullback(g: &Precosheaf, base: &FinitePoset, h: &[usize]) -> Result<(Precosheaf, ReebCosheaf, Vec<(usize, usize)>)> {
    base.check_monotone(&g.base, h)?;
    let nodes: Vec<(usize, usize)> = (0..base.len())
        .flat_map(|x| (0..g.costalks[h[x]].len()).map(move |b| (x, b)))
        .collect();
    let names = nodes
        .iter()
        .map(|&(x, b)| format!("{}|{}", base.name(x), b))
        .collect();
    let mut pairs = Vec::new();
    for (i, &(x, bx)) in nodes.iter().enumerate() {
        for (j, &(y, by)) in nodes.iter().enumerate() {
            if base.leq(x, y) && g.trans_at(h[x], h[y], by) == bx {
                pairs.push((i, j));
            }
        }
    }
    let total = FinitePoset::from_relation(names, &pairs)?;
    let projection: Vec<usize> = nodes.iter().map(|&(x, _)| x).collect();
    let direct = ReebCosheaf::new(total, base.clone(), projection)?;
    let pulled = basis_representation(&direct)?;
    Ok((pulled, direct, nodes))
}

/// Which side of the mapper isomorphism to corrupt in a verification run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapperFault {
    /// Rotate one transition map of the mapper precosheaf.
    RotateMapperTransition,
}

/// Checks, on a finite base, that the pixelization `η*η_*F` and the mapper
/// precosheaf `F η⁻¹ η_!` agree: both are functorial, the basic
/// components `Λ_x` are bijections natural in `x`, the induced maps on
/// sampled opens are bijections, and `F(η⁻¹η_!(U))` is the colimit of
/// `F(U_σ)` over `σ ∈ η_!(U)`, naturally in `U`.
pub fn verify_mapper_theorem(
    f: &Precosheaf,
    cover: &Cover,
    nerve: &Nerve,
    trials: usize,
    seed: u64,
    fault: Option<MapperFault>,
) -> Result<Report> {
    let mut report = Report::new("mapper_theorem", seed);
    let base = f.base().clone();
    check_cover_on(&base, cover)?;
    check_nerve_holds_eta(cover, nerve)?;
    report.check(f.check_functor_laws().is_ok(), || "F is not functorial".into());

    let (npos, simplices) = nerve_poset(nerve);
    let index: HashMap<&Simplex, usize> = simplices.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let h: Vec<usize> = (0..base.len())
        .map(|x| index[&eta_unchecked(cover, x)])
        .collect();
    let g = pushforward(f, &npos, &h)?;
    let (pixelized, display, fibre) = spatial_pullback(&g, &base, &h)?;
    let mut mapper = mapper_cosheaf(f, cover, nerve)?;
    if fault == Some(MapperFault::RotateMapperTransition) {
        let target = base
            .strict_pairs()
            .into_iter()
            .find(|&(x, y)| mapper.costalk(x).len() >= 2 && !mapper.costalk(y).is_empty());
        match target {
            Some((x, y)) => mapper = mapper.with_rotated_transition(x, y)?,
            None => report.note("no transition map with a target of two or more elements to corrupt"),
        }
    }
    report.check(pixelized.check_functor_laws().is_ok(), || "pixelization is not functorial".into());
    if let Err(e) = mapper.check_functor_laws() {
        report.fail(format!("mapper precosheaf: {e}"));
    }

    // Λ_x sends the fibre component over ↑x holding (x, β) to β
    let mut lambda: Vec<Vec<usize>> = Vec::with_capacity(base.len());
    for x in 0..base.len() {
        let pix = pixelize_unchecked(cover, base.up(x));
        let u_sigma = cover.simplex_trace(&simplices[h[x]]);
        report.check(pix == u_sigma, || {
            format!("pixelization of ↑{} differs from U_η({})", base.name(x), base.name(x))
        });
        let blocks = display.blocks(base.up(x))?;
        let map: Vec<usize> = blocks
            .iter()
            .map(|block| {
                let over_x: Vec<usize> = block
                    .iter()
                    .filter(|&e| fibre[e].0 == x)
                    .map(|e| fibre[e].1)
                    .collect();
                if over_x.len() == 1 {
                    over_x[0]
                } else {
                    usize::MAX
                }
            })
            .collect();
        report.check(is_bijection(&map, mapper.costalk(x).len()), || {
            format!("Λ at {} is not a bijection", base.name(x))
        });
        lambda.push(map);
    }
    for (x, y) in base.strict_pairs() {
        let left: Vec<usize> = pixelized.trans(x, y).iter().map(|&c| lambda[x].get(c).copied().unwrap_or(usize::MAX)).collect();
        let right: Vec<usize> = lambda[y]
            .iter()
            .map(|&b| mapper.trans(x, y).get(b).copied().unwrap_or(usize::MAX))
            .collect();
        report.check(left == right, || {
            format!("Λ is not natural on {} <= {}", base.name(x), base.name(y))
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut opens: Vec<SubsetId> = (0..base.len()).map(|x| base.up(x).clone()).collect();
    let mut pairs = Vec::new();
    for _ in 0..trials {
        let u = random_open(&mut rng, &base, None);
        let v = random_open(&mut rng, &base, Some(&u));
        opens.push(u.clone());
        pairs.push((v, u));
    }
    let outcomes: Vec<Report> = opens
        .par_iter()
        .map(|u| {
            let mut r = Report::new("open", seed);
            let pe = pixelized.evaluation_unchecked(u);
            let me = mapper.evaluation_unchecked(u);
            let induced: Vec<usize> = (0..pe.len())
                .map(|c| {
                    let (x, b) = pe.representative(c);
                    lambda[x].get(b).map_or(usize::MAX, |&beta| me.class(x, beta))
                })
                .collect();
            r.check(is_bijection(&induced, me.len()), || {
                format!("Λ on {u} is not a bijection ({} against {})", pe.len(), me.len())
            });
            if let Err(e) = colimit_formula(f, cover, nerve, u, &mut r) {
                r.fail(format!("colimit formula on {u}: {e}"));
            }
            r
        })
        .collect();
    for r in outcomes {
        report.absorb(r);
    }
    let naturality: Vec<Report> = pairs
        .par_iter()
        .map(|(v, u)| {
            let mut r = Report::new("naturality", seed);
            let pv = pixelize_unchecked(cover, v);
            let pu = pixelize_unchecked(cover, u);
            let ev = f.evaluation_unchecked(&pv);
            let eu = f.evaluation_unchecked(&pu);
            let direct = ev.map_into(&eu);
            match (
                colimit_side(f, cover, nerve, v, &pv),
                colimit_side(f, cover, nerve, u, &pu),
            ) {
                (Ok((cv, map_v, sv)), Ok((cu, map_u, su))) => {
                    // colim over η_!(V) -> colim over η_!(U) through shared simplices
                    let via_colimit: Vec<Option<usize>> = (0..cv.size)
                        .map(|c| {
                            let (k, b) = cv.representatives[c];
                            let sigma = &sv[k];
                            su.iter().position(|s| s == sigma).map(|ku| cu.coprojections[ku][b])
                        })
                        .collect();
                    let ok = (0..cv.size).all(|c| match via_colimit[c] {
                        Some(cu_class) => map_u[cu_class] == direct[map_v[c]],
                        None => false,
                    });
                    r.check(ok, || format!("mapper square does not commute for {v} ⊆ {u}"));
                }
                (Err(e), _) | (_, Err(e)) => r.fail(format!("naturality on {v} ⊆ {u}: {e}")),
            }
            r
        })
        .collect();
    for r in naturality {
        report.absorb(r);
    }
    Ok(report)
}

fn is_bijection(map: &[usize], target: usize) -> bool {
    if map.len() != target {
        return false;
    }
    let mut hit = vec![false; target];
    for &y in map {
        if y >= target || hit[y] {
            return false;
        }
        hit[y] = true;
    }
    true
}

/// The colimit of `F(U_σ)` over `σ ∈ η_!(U)` with its canonical map into
/// `F(η⁻¹η_!(U))`.
fn colimit_side(
    f: &Precosheaf,
    cover: &Cover,
    nerve: &Nerve,
    open: &SubsetId,
    pixel: &SubsetId,
) -> Result<(Colimit, Vec<usize>, Vec<Simplex>)> {
    let sigmas = eta_shriek(cover, nerve, open)?;
    let traces: Vec<SubsetId> = sigmas.iter().map(|s| cover.simplex_trace(s)).collect();
    let evals: Vec<Evaluation> = traces.iter().map(|t| f.evaluation_unchecked(t)).collect();
    let mut diagram = Diagram::new(evals.iter().map(Evaluation::len).collect());
    for (a, sa) in sigmas.iter().enumerate() {
        for (b, sb) in sigmas.iter().enumerate() {
            if a != b && sa.iter().all(|i| sb.contains(i)) {
                diagram.add_arrow(b, a, evals[b].map_into(&evals[a]))?;
            }
        }
    }
    let colimit = set_colimit(&diagram)?;
    let target = f.evaluation_unchecked(pixel);
    let canonical = (0..colimit.size)
        .map(|c| {
            let (k, b) = colimit.representatives[c];
            let (p, beta) = evals[k].representative(b);
            target.class(p, beta)
        })
        .collect();
    Ok((colimit, canonical, sigmas))
}

fn colimit_formula(f: &Precosheaf, cover: &Cover, nerve: &Nerve, open: &SubsetId, report: &mut Report) -> Result<()> {
    let pixel = pixelize_unchecked(cover, open);
    let (_, canonical, _) = colimit_side(f, cover, nerve, open, &pixel)?;
    let size = f.evaluation_unchecked(&pixel).len();
    report.check(is_bijection(&canonical, size), || {
        format!(
            "colimit over η_!({open}) has {} classes but F(η⁻¹η_!({open})) has {size} elements",
            canonical.len()
        )
    });
    Ok(())
}

/// A random open set, inside `within` when given.
pub fn random_open<R: Rng>(rng: &mut R, base: &FinitePoset, within: Option<&SubsetId>) -> SubsetId {
    let pool: Vec<usize> = match within {
        Some(u) => u.iter().collect(),
        None => (0..base.len()).collect(),
    };
    let picked: SubsetId = pool.iter().copied().filter(|_| rng.gen_bool(0.25)).collect();
    base.up_closure(&picked)
}
