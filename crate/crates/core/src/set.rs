//! Fixed-capacity bitset over element indices.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Largest universe any instance may have.
pub const MAX_UNIVERSE: usize = 128;

const WORDS: usize = MAX_UNIVERSE / 64;

/// Dense index of an element inside its universe.
pub type ElementId = usize;

/// A set of element indices in `[0, MAX_UNIVERSE)`.
///
/// `Copy` so that oracles and enumerators can pass sets around by value.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementSet {
    words: [u64; WORDS],
}

impl ElementSet {
    pub const fn empty() -> Self {
        ElementSet { words: [0; WORDS] }
    }

    /// `{0, 1, ..., n-1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_UNIVERSE, "universe of {n} exceeds {MAX_UNIVERSE}");
        let mut s = ElementSet::empty();
        for (w, word) in s.words.iter_mut().enumerate() {
            let lo = w * 64;
            if n >= lo + 64 {
                *word = u64::MAX;
            } else if n > lo {
                *word = (1u64 << (n - lo)) - 1;
            }
        }
        s
    }

    pub fn singleton(e: ElementId) -> Self {
        let mut s = ElementSet::empty();
        s.insert(e);
        s
    }

    /// Builds a set from the low bits of a mask (universes up to 64).
    pub fn from_mask(mask: u64) -> Self {
        let mut s = ElementSet::empty();
        s.words[0] = mask;
        s
    }

    /// Low 64 bits of the set.
    pub fn low_mask(&self) -> u64 {
        self.words[0]
    }

    #[inline]
    pub fn contains(&self, e: ElementId) -> bool {
        e < MAX_UNIVERSE && self.words[e / 64] >> (e % 64) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, e: ElementId) {
        assert!(e < MAX_UNIVERSE, "element {e} exceeds {MAX_UNIVERSE}");
        self.words[e / 64] |= 1u64 << (e % 64);
    }

    #[inline]
    pub fn remove(&mut self, e: ElementId) {
        if e < MAX_UNIVERSE {
            self.words[e / 64] &= !(1u64 << (e % 64));
        }
    }

    #[inline]
    pub fn with(mut self, e: ElementId) -> Self {
        self.insert(e);
        self
    }

    #[inline]
    pub fn without(mut self, e: ElementId) -> Self {
        self.remove(e);
        self
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn union(&self, other: &ElementSet) -> ElementSet {
        let mut out = *self;
        for (a, b) in out.words.iter_mut().zip(other.words.iter()) {
            *a |= b;
        }
        out
    }

    #[inline]
    pub fn intersection(&self, other: &ElementSet) -> ElementSet {
        let mut out = *self;
        for (a, b) in out.words.iter_mut().zip(other.words.iter()) {
            *a &= b;
        }
        out
    }

    #[inline]
    pub fn difference(&self, other: &ElementSet) -> ElementSet {
        let mut out = *self;
        for (a, b) in out.words.iter_mut().zip(other.words.iter()) {
            *a &= !b;
        }
        out
    }

    #[inline]
    pub fn is_subset(&self, other: &ElementSet) -> bool {
        self.words
            .iter()
            .zip(other.words.iter())
            .all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &ElementSet) -> bool {
        self.intersection(other).is_empty()
    }

    /// Largest element plus one, or 0 for the empty set.
    pub fn bound(&self) -> usize {
        for w in (0..WORDS).rev() {
            if self.words[w] != 0 {
                return w * 64 + 64 - self.words[w].leading_zeros() as usize;
            }
        }
        0
    }

    pub fn iter(&self) -> Iter {
        Iter {
            words: self.words,
            word: 0,
        }
    }

    pub fn to_vec(&self) -> Vec<ElementId> {
        self.iter().collect()
    }

    /// All subsets of `self`, including the empty set and `self`.
    ///
    /// The caller is responsible for keeping `self` small.
    pub fn subsets(&self) -> Subsets {
        let members = self.to_vec();
        assert!(members.len() < 64, "too many members to enumerate subsets");
        Subsets {
            total: 1u64 << members.len(),
            next: 0,
            members,
        }
    }
}

impl FromIterator<ElementId> for ElementSet {
    fn from_iter<I: IntoIterator<Item = ElementId>>(iter: I) -> Self {
        let mut s = ElementSet::empty();
        for e in iter {
            s.insert(e);
        }
        s
    }
}

impl<'a> FromIterator<&'a ElementId> for ElementSet {
    fn from_iter<I: IntoIterator<Item = &'a ElementId>>(iter: I) -> Self {
        iter.into_iter().copied().collect()
    }
}

impl fmt::Debug for ElementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for ElementSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for ElementSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let ids = Vec::<usize>::deserialize(deserializer)?;
        if let Some(&bad) = ids.iter().find(|&&e| e >= MAX_UNIVERSE) {
            return Err(serde::de::Error::custom(format!(
                "element {bad} exceeds the supported universe of {MAX_UNIVERSE}"
            )));
        }
        Ok(ids.into_iter().collect())
    }
}

pub struct Iter {
    words: [u64; WORDS],
    word: usize,
}

impl Iterator for Iter {
    type Item = ElementId;

    fn next(&mut self) -> Option<ElementId> {
        while self.word < WORDS {
            let w = self.words[self.word];
            if w != 0 {
                let bit = w.trailing_zeros() as usize;
                self.words[self.word] &= w - 1;
                return Some(self.word * 64 + bit);
            }
            self.word += 1;
        }
        None
    }
}

pub struct Subsets {
    members: Vec<ElementId>,
    next: u64,
    total: u64,
}

impl Iterator for Subsets {
    type Item = ElementSet;

    fn next(&mut self) -> Option<ElementSet> {
        if self.next >= self.total {
            return None;
        }
        let code = self.next;
        self.next += 1;
        Some(
            self.members
                .iter()
                .enumerate()
                .filter(|(i, _)| code >> i & 1 == 1)
                .map(|(_, &e)| e)
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_and_len_span_word_boundary() {
        assert_eq!(ElementSet::full(0).len(), 0);
        assert_eq!(ElementSet::full(64).len(), 64);
        assert_eq!(ElementSet::full(100).len(), 100);
        assert!(ElementSet::full(100).contains(99));
        assert!(!ElementSet::full(100).contains(100));
        assert_eq!(ElementSet::full(100).bound(), 100);
    }

    #[test]
    fn iteration_is_ascending() {
        let s: ElementSet = [70, 3, 64, 0].into_iter().collect();
        assert_eq!(s.to_vec(), vec![0, 3, 64, 70]);
    }

    #[test]
    fn subsets_enumerates_power_set() {
        let s: ElementSet = [1, 4, 9].into_iter().collect();
        let all: Vec<_> = s.subsets().collect();
        assert_eq!(all.len(), 8);
        assert!(all.iter().all(|t| t.is_subset(&s)));
    }
}
