use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Assignment of the `p` coordinates to `L` disjoint, nonempty groups.
///
/// Group ids are relabelled to `0..L` in increasing order of the original
/// labels; `labels()` keeps the original values so a partition can be
/// written back out unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPartition {
    group_of: Vec<usize>,
    sizes: Vec<usize>,
    weights: Vec<f64>,
    members: Vec<Vec<usize>>,
    labels: Vec<i64>,
}

impl GroupPartition {
    /// Builds a partition from arbitrary integer labels.
    pub fn from_membership(membership: &[i64]) -> Result<Self> {
        if membership.is_empty() {
            return Err(Error::EmptyPartition);
        }
        let mut relabel = BTreeMap::new();
        for &m in membership {
            relabel.entry(m).or_insert(0usize);
        }
        for (next, id) in relabel.values_mut().enumerate() {
            *id = next;
        }
        let labels: Vec<i64> = relabel.keys().copied().collect();
        let group_of: Vec<usize> = membership.iter().map(|m| relabel[m]).collect();
        Ok(Self::from_ids(group_of, labels))
    }

    fn from_ids(group_of: Vec<usize>, labels: Vec<i64>) -> Self {
        let l = labels.len();
        let mut members = vec![Vec::new(); l];
        for (j, &g) in group_of.iter().enumerate() {
            members[g].push(j);
        }
        let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
        assert!(sizes.iter().all(|&s| s > 0), "relabelled group with no members");
        let weights = sizes.iter().map(|&s| libm::sqrt(s as f64)).collect();
        Self {
            group_of,
            sizes,
            weights,
            members,
            labels,
        }
    }

    /// All `p` coordinates in one group.
    pub fn single(p: usize) -> Result<Self> {
        Self::from_membership(&vec![1; p])
    }

    /// Contiguous groups of the given sizes, labelled `1..=L`.
    pub fn contiguous(sizes: &[usize]) -> Result<Self> {
        let mut membership = Vec::with_capacity(sizes.iter().sum());
        for (l, &s) in sizes.iter().enumerate() {
            if s == 0 {
                return Err(crate::error::invalid("sizes", "group sizes must be positive"));
            }
            membership.extend(core::iter::repeat_n(l as i64 + 1, s));
        }
        Self::from_membership(&membership)
    }

    /// Number of coordinates `p`.
    pub fn len(&self) -> usize {
        self.group_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.group_of.is_empty()
    }

    /// Number of groups `L`.
    pub fn num_groups(&self) -> usize {
        self.sizes.len()
    }

    /// Zero-based group id of coordinate `j`.
    pub fn group_of(&self, j: usize) -> usize {
        self.group_of[j]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// `√p_l` for every group.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Coordinates of group `l`, ascending.
    pub fn members(&self, l: usize) -> &[usize] {
        &self.members[l]
    }

    pub fn groups(&self) -> impl Iterator<Item = &[usize]> {
        self.members.iter().map(Vec::as_slice)
    }

    /// Original labels, indexed by zero-based group id.
    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    /// Membership vector in the original labels.
    pub fn membership(&self) -> Vec<i64> {
        self.group_of.iter().map(|&g| self.labels[g]).collect()
    }
}
