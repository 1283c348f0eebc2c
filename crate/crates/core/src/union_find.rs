use crate::subset::{canonical_partition, Partition, SubsetId};

/// Disjoint sets over `0..n` with path compression and union by size.
///
/// Block representatives are not exposed; callers read the structure back
/// through [`DisjointSets::blocks`] which orders blocks by least member.
#[derive(Debug, Clone)]
pub struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Returns true when two distinct sets were merged.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        true
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    /// Dense class labels `0..k`, numbered in order of least member.
    pub fn labels(&mut self) -> (Vec<usize>, usize) {
        let n = self.parent.len();
        let mut root_label = vec![usize::MAX; n];
        let mut labels = vec![0; n];
        let mut next = 0;
        for x in 0..n {
            let r = self.find(x);
            if root_label[r] == usize::MAX {
                root_label[r] = next;
                next += 1;
            }
            labels[x] = root_label[r];
        }
        (labels, next)
    }

    pub fn blocks(&mut self) -> Partition {
        let (labels, k) = self.labels();
        let mut blocks = vec![Vec::new(); k];
        for (x, &l) in labels.iter().enumerate() {
            blocks[l].push(x);
        }
        canonical_partition(blocks.into_iter().map(SubsetId::new).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_and_labels() {
        let mut ds = DisjointSets::new(5);
        assert!(ds.union(3, 4));
        assert!(ds.union(0, 3));
        assert!(!ds.union(4, 0));
        assert!(ds.same(0, 4));
        assert!(!ds.same(1, 2));
        let (labels, k) = ds.labels();
        assert_eq!(k, 3);
        assert_eq!(labels, vec![0, 1, 2, 0, 0]);
        let blocks = ds.blocks();
        assert_eq!(blocks[0].members(), &[0, 3, 4]);
    }
}
