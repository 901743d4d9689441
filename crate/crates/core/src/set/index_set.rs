use crate::error::{EtopeError, Result};
use crate::set::Violation;

/// Partition of the generator indices `0..m` into norm blocks.
///
/// Every block's coefficients share one unit `p`-ball. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexSet {
    blocks: Vec<Vec<usize>>,
    card: usize,
}

impl IndexSet {
    pub fn new(blocks: Vec<Vec<usize>>, m: usize) -> Result<Self> {
        let v = Self::check(&blocks, m);
        if v.is_empty() {
            Ok(Self { blocks, card: m })
        } else {
            Err(EtopeError::Invalid(v))
        }
    }

    /// `{{0}, {1}, ..., {m-1}}`.
    pub fn singletons(m: usize) -> Self {
        Self {
            blocks: (0..m).map(|i| vec![i]).collect(),
            card: m,
        }
    }

    /// `{{0, ..., m-1}}`, or no blocks at all when `m = 0`.
    pub fn single_block(m: usize) -> Self {
        let blocks = if m == 0 { vec![] } else { vec![(0..m).collect()] };
        Self { blocks, card: m }
    }

    pub(crate) fn from_blocks_unchecked(blocks: Vec<Vec<usize>>, m: usize) -> Self {
        debug_assert!(Self::check(&blocks, m).is_empty(), "{blocks:?} over {m}");
        Self { blocks, card: m }
    }

    /// Lists every way `blocks` fails to partition `0..m`.
    pub fn check(blocks: &[Vec<usize>], m: usize) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut owner: Vec<Option<usize>> = vec![None; m];
        for (bi, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                out.push(Violation::EmptyBlock { block: bi });
            }
            for &j in block {
                if j >= m {
                    out.push(Violation::IndexOutOfRange { index: j, m });
                    continue;
                }
                match owner[j] {
                    Some(first) => out.push(Violation::BlocksOverlap {
                        index: j,
                        first,
                        second: bi,
                    }),
                    None => owner[j] = Some(bi),
                }
            }
        }
        for (j, o) in owner.iter().enumerate() {
            if o.is_none() {
                out.push(Violation::IndexMissing { index: j });
            }
        }
        out
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Number of blocks.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Number of indices partitioned (the generator count `m`).
    pub fn cardinality(&self) -> usize {
        self.card
    }

    pub fn is_singletons(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 1)
    }

    /// Every index moved up by `offset`.
    pub fn shifted(&self, offset: usize) -> Self {
        Self {
            blocks: self
                .blocks
                .iter()
                .map(|b| b.iter().map(|j| j + offset).collect())
                .collect(),
            card: self.card + offset,
        }
    }

    /// `self ∪ (other + m_self)`, the index set of a concatenated coefficient vector.
    pub fn concat(&self, other: &IndexSet) -> Self {
        let mut blocks = self.blocks.clone();
        blocks.extend(other.shifted(self.card).blocks);
        Self {
            blocks,
            card: self.card + other.card,
        }
    }

    /// Appends `count` singleton blocks for new trailing indices.
    pub fn with_singletons(&self, count: usize) -> Self {
        self.concat(&IndexSet::singletons(count))
    }

    /// Position of the block that holds index `j`.
    pub fn block_of(&self, j: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(&j))
    }

    /// Restricts to the kept indices (given in their new order) and renumbers;
    /// blocks that lose all members disappear.
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let mut new_pos = vec![None; self.card];
        for (new, &old) in keep.iter().enumerate() {
            new_pos[old] = Some(new);
        }
        let blocks: Vec<Vec<usize>> = self
            .blocks
            .iter()
            .map(|b| b.iter().filter_map(|&j| new_pos[j]).collect::<Vec<_>>())
            .filter(|b: &Vec<usize>| !b.is_empty())
            .collect();
        Self::from_blocks_unchecked(blocks, keep.len())
    }

    pub fn into_blocks(self) -> Vec<Vec<usize>> {
        self.blocks
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_and_missing_are_reported() {
        let v = IndexSet::check(&[vec![0], vec![0, 1]], 2);
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().contains("index set blocks overlap"));
        let v = IndexSet::check(&[vec![0], vec![]], 2);
        assert!(v.iter().any(|x| matches!(x, Violation::EmptyBlock { .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::IndexMissing { index: 1 })));
        assert!(!IndexSet::check(&[vec![3]], 1).is_empty());
    }

    #[test]
    fn concat_shifts_second_operand() {
        let a = IndexSet::single_block(2);
        let b = IndexSet::singletons(2);
        let c = a.concat(&b);
        assert_eq!(c.blocks(), &[vec![0, 1], vec![2], vec![3]]);
        assert_eq!(c.cardinality(), 4);
    }

    #[test]
    fn restrict_drops_emptied_blocks() {
        let s = IndexSet::new(vec![vec![0, 2], vec![1], vec![3]], 4).unwrap();
        let r = s.restrict(&[3, 2]);
        assert_eq!(r.blocks(), &[vec![1], vec![0]]);
    }
}
