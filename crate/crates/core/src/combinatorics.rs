//! Subsets and set partitions of site index sets.
//!
//! Sites are numbered `0..N` and a set of sites is a bitmask. Partitions are
//! generated as restricted-growth strings over the elements of the set taken
//! in ascending order, which yields every partition exactly once and in
//! lexicographic order of the string.

use std::fmt;

use crate::error::{Error, Result};

/// Largest number of sites a [`CellSubset`] can address.
pub const MAX_SITES: usize = 24;

/// A set of sites, stored as a bitmask (bit `i` set means site `i` is a member).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellSubset(u32);

impl CellSubset {
    pub const EMPTY: CellSubset = CellSubset(0);

    /// Wraps a raw mask. Panics if bits at or above [`MAX_SITES`] are set.
    pub fn from_mask(mask: u32) -> Self {
        assert!(
            mask >> MAX_SITES == 0,
            "mask {mask:#b} addresses sites beyond {MAX_SITES}"
        );
        CellSubset(mask)
    }

    /// All sites `0..n`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_SITES);
        CellSubset(((1u64 << n) - 1) as u32)
    }

    pub fn singleton(site: usize) -> Self {
        assert!(site < MAX_SITES);
        CellSubset(1 << site)
    }

    pub fn from_sites<I: IntoIterator<Item = usize>>(sites: I) -> Self {
        sites
            .into_iter()
            .fold(Self::EMPTY, |acc, s| acc.union(Self::singleton(s)))
    }

    #[inline]
    pub fn mask(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn contains(self, site: usize) -> bool {
        site < MAX_SITES && self.0 >> site & 1 == 1
    }

    #[inline]
    pub fn union(self, other: Self) -> Self {
        CellSubset(self.0 | other.0)
    }

    #[inline]
    pub fn intersection(self, other: Self) -> Self {
        CellSubset(self.0 & other.0)
    }

    /// Members of `self` that are not in `other`.
    #[inline]
    pub fn difference(self, other: Self) -> Self {
        CellSubset(self.0 & !other.0)
    }

    #[inline]
    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    #[inline]
    pub fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    pub fn insert(self, site: usize) -> Self {
        self.union(Self::singleton(site))
    }

    pub fn remove(self, site: usize) -> Self {
        self.difference(Self::singleton(site))
    }

    /// Smallest member, if any.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Members in ascending order.
    pub fn sites(self) -> Sites {
        Sites(self.0)
    }

    /// Position of `site` among the members in ascending order.
    pub fn rank_of(self, site: usize) -> Option<usize> {
        self.contains(site)
            .then(|| (self.0 & ((1u32 << site) - 1)).count_ones() as usize)
    }
}

impl fmt::Display for CellSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, s) in self.sites().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "}}")
    }
}

/// Iterator over the members of a [`CellSubset`], ascending.
#[derive(Clone, Debug)]
pub struct Sites(u32);

impl Iterator for Sites {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let s = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(s)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Sites {}

/// All subsets of `set`, in increasing mask order, each exactly once.
pub fn enumerate_subsets(set: CellSubset) -> Vec<CellSubset> {
    let full = set.mask();
    let mut out = Vec::with_capacity(1 << set.len());
    let mut sub = 0u32;
    loop {
        out.push(CellSubset(sub));
        if sub == full {
            break;
        }
        // next submask in increasing order
        sub = sub.wrapping_sub(full) & full;
    }
    out
}

/// Subsets of `set` with exactly `k` members, in increasing mask order.
pub fn subsets_of_size(set: CellSubset, k: usize) -> impl Iterator<Item = CellSubset> {
    enumerate_subsets(set).into_iter().filter(move |s| s.len() == k)
}

/// A partition of a set of sites into disjoint nonempty blocks.
///
/// Blocks are ordered by their smallest member.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    blocks: Vec<CellSubset>,
}

impl Partition {
    pub fn blocks(&self) -> &[CellSubset] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Union of all blocks.
    pub fn support(&self) -> CellSubset {
        self.blocks
            .iter()
            .fold(CellSubset::EMPTY, |acc, b| acc.union(*b))
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, b) in self.blocks.iter().enumerate() {
            if k > 0 {
                write!(f, "|")?;
            }
            for s in b.sites() {
                write!(f, "{s}")?;
            }
        }
        Ok(())
    }
}

/// Iterator over the partitions of a set, driven by a restricted-growth string.
#[derive(Clone, Debug)]
pub struct Partitions {
    elements: Vec<usize>,
    // rgs[k] is the block label of elements[k]; max_prefix[k] = max(rgs[..=k])
    rgs: Vec<usize>,
    max_prefix: Vec<usize>,
    done: bool,
}

impl Partitions {
    fn new(set: CellSubset) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::EmptyPartition);
        }
        let elements: Vec<usize> = set.sites().collect();
        let n = elements.len();
        Ok(Partitions {
            elements,
            rgs: vec![0; n],
            max_prefix: vec![0; n],
            done: false,
        })
    }

    fn current(&self) -> Partition {
        let nblocks = self.max_prefix.last().map_or(0, |m| m + 1);
        let mut blocks = vec![CellSubset::EMPTY; nblocks];
        for (&label, &site) in self.rgs.iter().zip(&self.elements) {
            blocks[label] = blocks[label].insert(site);
        }
        Partition { blocks }
    }

    fn advance(&mut self) {
        let n = self.rgs.len();
        // rightmost position that can still grow; position 0 is pinned at 0
        for k in (1..n).rev() {
            if self.rgs[k] <= self.max_prefix[k - 1] {
                self.rgs[k] += 1;
                self.max_prefix[k] = self.max_prefix[k - 1].max(self.rgs[k]);
                for j in k + 1..n {
                    self.rgs[j] = 0;
                    self.max_prefix[j] = self.max_prefix[k];
                }
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for Partitions {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        let p = self.current();
        self.advance();
        Some(p)
    }
}

/// Lazily enumerates all partitions of `set`.
pub fn partitions(set: CellSubset) -> Result<Partitions> {
    Partitions::new(set)
}

/// All partitions of `set`, in lexicographic restricted-growth-string order.
pub fn enumerate_partitions(set: CellSubset) -> Result<Vec<Partition>> {
    Ok(partitions(set)?.collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    // Bell numbers from the Bell triangle, independent of the enumerator.
    fn bell_triangle(n: usize) -> Vec<usize> {
        let mut bells = vec![1usize];
        let mut row = vec![1usize];
        for _ in 1..=n {
            let mut next = vec![*row.last().unwrap()];
            for &v in &row {
                let last = *next.last().unwrap();
                next.push(last + v);
            }
            bells.push(next[0]);
            row = next;
        }
        bells
    }

    #[test]
    fn subsets_of_four_element_set() {
        let subs = enumerate_subsets(CellSubset::full(4));
        assert_eq!(subs.len(), 16);
        let masks: Vec<u32> = subs.iter().map(|s| s.mask()).collect();
        assert_eq!(masks, (0..16).collect::<Vec<_>>());
    }

    #[test]
    fn subsets_of_empty_set() {
        assert_eq!(enumerate_subsets(CellSubset::EMPTY), vec![CellSubset::EMPTY]);
    }

    #[test]
    fn subsets_of_sparse_mask_are_increasing() {
        let set = CellSubset::from_sites([1, 4, 6]);
        let subs = enumerate_subsets(set);
        assert_eq!(subs.len(), 8);
        assert!(subs.windows(2).all(|w| w[0] < w[1]));
        assert!(subs.iter().all(|s| s.is_subset_of(set)));
    }

    #[test]
    fn bell_counts() {
        let bells = bell_triangle(8);
        assert_eq!(&bells[1..6], &[1, 2, 5, 15, 52]);
        for n in 1..=8 {
            let count = partitions(CellSubset::full(n)).unwrap().count();
            assert_eq!(count, bells[n], "n = {n}");
        }
    }

    #[test]
    fn empty_set_cannot_be_partitioned() {
        assert_eq!(
            enumerate_partitions(CellSubset::EMPTY).unwrap_err(),
            Error::EmptyPartition
        );
        assert_eq!(
            Error::EmptyPartition.to_string(),
            "cannot partition empty set"
        );
    }

    #[test]
    fn partitions_are_valid_and_distinct() {
        let set = CellSubset::from_sites([0, 2, 3, 5, 7]);
        let parts = enumerate_partitions(set).unwrap();
        let mut seen = HashSet::new();
        for p in &parts {
            assert_eq!(p.support(), set);
            for (a, b) in p.blocks().iter().zip(p.blocks().iter().skip(1)) {
                assert!(a.first() < b.first(), "blocks not ordered in {p}");
            }
            for (i, a) in p.blocks().iter().enumerate() {
                assert!(!a.is_empty());
                for b in &p.blocks()[i + 1..] {
                    assert!(a.is_disjoint(*b));
                }
            }
            assert!(seen.insert(p.clone()), "duplicate partition {p}");
        }
        assert_eq!(parts.len(), 52);
    }

    #[test]
    fn partition_order_starts_with_single_block() {
        let parts = enumerate_partitions(CellSubset::full(3)).unwrap();
        let shown: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
        assert_eq!(shown, ["012", "01|2", "02|1", "0|12", "0|1|2"]);
    }

    #[test]
    fn rank_of_members() {
        let s = CellSubset::from_sites([1, 3, 4]);
        assert_eq!(s.rank_of(1), Some(0));
        assert_eq!(s.rank_of(4), Some(2));
        assert_eq!(s.rank_of(2), None);
        assert_eq!(s.to_string(), "{1,3,4}");
    }
}
