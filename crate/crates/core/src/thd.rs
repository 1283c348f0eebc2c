//! Topological hierarchical decompositions: posets of (level, cluster)
//! pairs with edges from a cluster to the cluster it maps into.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subset::SubsetId;
use crate::union_find::DisjointSets;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Height(f64),
    Index(usize),
}

impl Level {
    fn sort_key(&self) -> f64 {
        match *self {
            Level::Height(h) => h,
            Level::Index(i) => i as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThdKind {
    DendrogramChain,
    GeneralPoset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThdNode {
    pub level: Level,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simplex: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<SubsetId>,
    pub label: String,
}

/// Nodes plus covering edges `(child, parent)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThdPoset {
    pub kind: ThdKind,
    pub nodes: Vec<ThdNode>,
    pub edges: Vec<(usize, usize)>,
    /// Merge heights of linkage hierarchies, one per merge step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heights: Option<Vec<f64>>,
}

impl ThdPoset {
    pub fn empty(kind: ThdKind) -> Self {
        ThdPoset {
            kind,
            nodes: Vec::new(),
            edges: Vec::new(),
            heights: None,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn parents(&self, node: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.0 == node).map(|e| e.1).collect()
    }

    pub fn children(&self, node: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.1 == node).map(|e| e.0).collect()
    }

    /// Nodes at each distinct level, in increasing level order.
    pub fn levels(&self) -> Vec<(Level, Vec<usize>)> {
        let mut out: Vec<(Level, Vec<usize>)> = Vec::new();
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by(|&a, &b| {
            self.nodes[a]
                .level
                .sort_key()
                .total_cmp(&self.nodes[b].level.sort_key())
                .then(a.cmp(&b))
        });
        for i in order {
            let level = self.nodes[i].level;
            match out.last_mut() {
                Some((l, members)) if *l == level => members.push(i),
                _ => out.push((level, vec![i])),
            }
        }
        out
    }

    /// Checks disjointness of blocks per level, containment along edges
    /// and, for dendrograms, unique parents at strictly larger levels.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        for &(c, p) in &self.edges {
            if c >= n || p >= n {
                return Err(Error::IndexOutOfRange { index: c.max(p), len: n });
            }
            if let (Some(bc), Some(bp)) = (&self.nodes[c].block, &self.nodes[p].block) {
                if !bc.is_subset(bp) {
                    return Err(Error::InvalidParameter(format!(
                        "block {bc} is not contained in its parent {bp}"
                    )));
                }
            }
        }
        if self.kind == ThdKind::DendrogramChain {
            for (_, members) in self.levels() {
                let blocks: Vec<&SubsetId> =
                    members.iter().filter_map(|&i| self.nodes[i].block.as_ref()).collect();
                for (a, x) in blocks.iter().enumerate() {
                    for y in &blocks[a + 1..] {
                        if x.intersects(y) {
                            return Err(Error::InvalidParameter(format!(
                                "blocks {x} and {y} overlap at one level"
                            )));
                        }
                    }
                }
            }
            let top = self.levels().last().map(|l| l.0);
            for i in 0..n {
                let parents = self.parents(i);
                let is_top = Some(self.nodes[i].level) == top;
                if parents.len() > 1 || (!is_top && parents.is_empty()) {
                    return Err(Error::InvalidParameter(format!(
                        "node {i} has {} parents",
                        parents.len()
                    )));
                }
                for p in parents {
                    if self.nodes[p].level.sort_key() <= self.nodes[i].level.sort_key() {
                        return Err(Error::InvalidParameter(format!(
                            "edge {i} -> {p} does not increase the level"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// The order relation generated by the edges (reflexive, transitive).
    pub fn order(&self) -> Vec<Vec<bool>> {
        let n = self.nodes.len();
        let mut leq = vec![vec![false; n]; n];
        let mut succ = vec![Vec::new(); n];
        for &(c, p) in &self.edges {
            succ[c].push(p);
        }
        for (a, row) in leq.iter_mut().enumerate() {
            let mut stack = vec![a];
            row[a] = true;
            while let Some(x) = stack.pop() {
                for &y in &succ[x] {
                    if !row[y] {
                        row[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        leq
    }

    /// Number of connected pieces of the underlying graph.
    pub fn tree_count(&self) -> usize {
        let mut ds = DisjointSets::new(self.nodes.len());
        for &(a, b) in &self.edges {
            ds.union(a, b);
        }
        ds.labels().1
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("thd serializes")
    }

    pub fn from_json_value(value: &serde_json::Value) -> Result<Self> {
        let thd: ThdPoset = serde_json::from_value(value.clone())?;
        thd.validate()?;
        Ok(thd)
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph thd {\n  rankdir=BT;\n");
        for (i, node) in self.nodes.iter().enumerate() {
            let level = match node.level {
                Level::Height(h) => format!("{h}"),
                Level::Index(k) => format!("{k}"),
            };
            let _ = writeln!(out, "  n{i} [label=\"{} @ {}\"];", node.label.replace('"', "'"), level);
        }
        for &(c, p) in &self.edges {
            let _ = writeln!(out, "  n{c} -> n{p};");
        }
        out.push_str("}\n");
        out
    }

    /// Newick view of a dendrogram with a single root. Unary chains are
    /// collapsed and branch lengths are height differences. `leaf_name`
    /// names the points of singleton leaves.
    pub fn to_newick<F: Fn(usize) -> String>(&self, leaf_name: F) -> Result<String> {
        if self.kind != ThdKind::DendrogramChain {
            return Err(Error::InvalidParameter("newick export needs a dendrogram".into()));
        }
        let roots: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| self.parents(i).is_empty())
            .collect();
        if roots.len() != 1 {
            return Err(Error::InvalidParameter(format!(
                "newick export needs one root, found {}",
                roots.len()
            )));
        }
        let mut children: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(c, p) in &self.edges {
            children.entry(p).or_default().push(c);
        }
        let height = |i: usize| self.nodes[i].level.sort_key();
        // follow a unary chain down to the node where it branches or ends
        let descend = |mut i: usize| {
            while let Some(cs) = children.get(&i) {
                if cs.len() != 1 {
                    break;
                }
                i = cs[0];
            }
            i
        };
        fn render<F: Fn(usize) -> String, H: Fn(usize) -> f64, D: Fn(usize) -> usize>(
            thd: &ThdPoset,
            node: usize,
            children: &BTreeMap<usize, Vec<usize>>,
            height: &H,
            descend: &D,
            leaf_name: &F,
            out: &mut String,
        ) {
            let bottom = descend(node);
            match children.get(&bottom) {
                None => {
                    let name = match &thd.nodes[bottom].block {
                        Some(b) if b.len() == 1 => leaf_name(b.members()[0]),
                        _ => thd.nodes[bottom].label.clone(),
                    };
                    out.push_str(&name);
                }
                Some(cs) => {
                    let mut cs = cs.clone();
                    cs.sort_by_key(|&c| thd.nodes[c].block.as_ref().and_then(|b| b.min()).unwrap_or(c));
                    out.push('(');
                    for (k, &c) in cs.iter().enumerate() {
                        if k > 0 {
                            out.push(',');
                        }
                        render(thd, c, children, height, descend, leaf_name, out);
                        let len = height(bottom) - height(descend(c));
                        let _ = write!(out, ":{len}");
                    }
                    out.push(')');
                }
            }
        }
        let mut out = String::new();
        let root = roots[0];
        render(self, root, &children, &height, &descend, &leaf_name, &mut out);
        out.push(';');
        Ok(out)
    }

    /// Whether an explicit node map `phi` from `self` to `other` is a
    /// bijection that preserves and reflects the generated order. Returns a
    /// description of the first failure.
    pub fn check_isomorphism(&self, other: &ThdPoset, phi: &[usize]) -> std::result::Result<(), String> {
        if phi.len() != self.len() || self.len() != other.len() {
            return Err(format!(
                "node counts differ: {} against {}",
                self.len(),
                other.len()
            ));
        }
        let image: BTreeSet<usize> = phi.iter().copied().collect();
        if image.len() != phi.len() || image.iter().any(|&j| j >= other.len()) {
            return Err("node map is not a bijection".into());
        }
        let a = self.order();
        let b = other.order();
        for x in 0..self.len() {
            for y in 0..self.len() {
                if a[x][y] != b[phi[x]][phi[y]] {
                    return Err(format!(
                        "order differs on {} and {}",
                        self.nodes[x].label, self.nodes[y].label
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ThdPoset {
        let node = |level: f64, members: Vec<usize>| ThdNode {
            level: Level::Height(level),
            simplex: None,
            label: SubsetId::new(members.clone()).to_string(),
            block: Some(SubsetId::new(members)),
        };
        ThdPoset {
            kind: ThdKind::DendrogramChain,
            nodes: vec![
                node(0.0, vec![0]),
                node(0.0, vec![1]),
                node(0.0, vec![2]),
                node(1.0, vec![0, 1]),
                node(1.0, vec![2]),
                node(2.0, vec![0, 1, 2]),
            ],
            edges: vec![(0, 3), (1, 3), (2, 4), (3, 5), (4, 5)],
            heights: Some(vec![1.0, 2.0]),
        }
    }

    #[test]
    fn newick_collapses_unary_chains() {
        let t = small();
        t.validate().unwrap();
        assert_eq!(t.to_newick(|i| i.to_string()).unwrap(), "((0:1,1:1):1,2:2);");
    }

    #[test]
    fn validation_catches_bad_edges() {
        let mut t = small();
        t.edges.push((0, 4));
        assert!(t.validate().is_err());
        let mut t = small();
        t.edges[3] = (3, 4);
        assert!(t.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let t = small();
        let v = t.to_json_value();
        assert_eq!(ThdPoset::from_json_value(&v).unwrap(), t);
        assert!(t.to_dot().contains("n0 -> n3"));
    }

    #[test]
    fn isomorphism_check() {
        let t = small();
        let id: Vec<usize> = (0..t.len()).collect();
        assert!(t.check_isomorphism(&t, &id).is_ok());
        let mut swapped = id.clone();
        swapped.swap(0, 5);
        assert!(t.check_isomorphism(&t, &swapped).is_err());
        assert_eq!(t.tree_count(), 1);
    }
}
