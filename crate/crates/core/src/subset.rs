use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite subset of indices, stored sorted and duplicate-free.
///
/// Used for sample-point traces of open sets, cluster blocks, up-sets of a
/// finite poset and cover-element index sets alike.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubsetId {
    members: Vec<usize>,
}

impl SubsetId {
    pub fn new(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        SubsetId { members }
    }

    pub fn empty() -> Self {
        SubsetId::default()
    }

    /// `{0, 1, ..., n-1}`
    pub fn full(n: usize) -> Self {
        SubsetId {
            members: (0..n).collect(),
        }
    }

    pub fn singleton(i: usize) -> Self {
        SubsetId { members: vec![i] }
    }

    /// Builds from a membership mask.
    pub fn from_mask(mask: &[bool]) -> Self {
        SubsetId {
            members: mask
                .iter()
                .enumerate()
                .filter_map(|(i, &b)| b.then_some(i))
                .collect(),
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn min(&self) -> Option<usize> {
        self.members.first().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn is_subset(&self, other: &SubsetId) -> bool {
        let mut it = other.members.iter();
        'outer: for m in &self.members {
            for o in it.by_ref() {
                if o == m {
                    continue 'outer;
                }
                if o > m {
                    return false;
                }
            }
            return false;
        }
        true
    }

    pub fn intersects(&self, other: &SubsetId) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.members.len() && j < other.members.len() {
            match self.members[i].cmp(&other.members[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    pub fn intersection(&self, other: &SubsetId) -> SubsetId {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.members.len() && j < other.members.len() {
            match self.members[i].cmp(&other.members[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(self.members[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        SubsetId { members: out }
    }

    pub fn union(&self, other: &SubsetId) -> SubsetId {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.members.len() || j < other.members.len() {
            let next = match (self.members.get(i), other.members.get(j)) {
                (Some(&a), Some(&b)) if a == b => {
                    i += 1;
                    j += 1;
                    a
                }
                (Some(&a), Some(&b)) if a < b => {
                    i += 1;
                    a
                }
                (Some(_), Some(&b)) => {
                    j += 1;
                    b
                }
                (Some(&a), None) => {
                    i += 1;
                    a
                }
                (None, Some(&b)) => {
                    j += 1;
                    b
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        SubsetId { members: out }
    }

    pub fn difference(&self, other: &SubsetId) -> SubsetId {
        SubsetId {
            members: self
                .members
                .iter()
                .copied()
                .filter(|&m| !other.contains(m))
                .collect(),
        }
    }

    /// Fails if some member is `>= n`.
    pub fn check_bound(&self, n: usize) -> Result<()> {
        match self.members.last() {
            Some(&last) if last >= n => Err(Error::IndexOutOfRange {
                index: last,
                len: n,
            }),
            _ => Ok(()),
        }
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &m in &self.members {
            mask[m] = true;
        }
        mask
    }
}

impl fmt::Debug for SubsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, m) in self.members.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for SubsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromIterator<usize> for SubsetId {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        SubsetId::new(iter.into_iter().collect())
    }
}

/// A partition into blocks, canonically ordered by least member.
pub type Partition = Vec<SubsetId>;

/// Sorts blocks by least member; empty blocks are dropped.
pub fn canonical_partition(mut blocks: Vec<SubsetId>) -> Partition {
    blocks.retain(|b| !b.is_empty());
    blocks.sort_by_key(|b| b.min());
    blocks
}

/// Index of the block containing `x`, if any.
pub fn block_of(partition: &[SubsetId], x: usize) -> Option<usize> {
    partition.iter().position(|b| b.contains(x))
}

/// True iff every block of `fine` lies inside some block of `coarse`.
pub fn refines(fine: &[SubsetId], coarse: &[SubsetId]) -> bool {
    fine.iter()
        .all(|b| coarse.iter().any(|c| b.is_subset(c)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_operations() {
        let a = SubsetId::new(vec![3, 1, 2, 1]);
        let b = SubsetId::new(vec![2, 5]);
        assert_eq!(a.members(), &[1, 2, 3]);
        assert_eq!(a.union(&b).members(), &[1, 2, 3, 5]);
        assert_eq!(a.intersection(&b).members(), &[2]);
        assert_eq!(a.difference(&b).members(), &[1, 3]);
        assert!(SubsetId::new(vec![1, 3]).is_subset(&a));
        assert!(!b.is_subset(&a));
        assert!(SubsetId::empty().is_subset(&b));
        assert!(a.intersects(&b));
        assert_eq!(format!("{a:?}"), "{1,2,3}");
    }

    #[test]
    fn bounds() {
        assert!(SubsetId::new(vec![0, 4]).check_bound(4).is_err());
        assert!(SubsetId::new(vec![0, 3]).check_bound(4).is_ok());
    }

    #[test]
    fn refinement_of_partitions() {
        let fine = vec![SubsetId::new(vec![0]), SubsetId::new(vec![1])];
        let coarse = vec![SubsetId::new(vec![0, 1])];
        assert!(refines(&fine, &coarse));
        assert!(!refines(&coarse, &fine));
    }
}
