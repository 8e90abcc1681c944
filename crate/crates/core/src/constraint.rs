//! Independence systems over a finite universe.
//!
//! Every variant answers the same oracle questions: independence, rank, span,
//! separation over the rank-constraint polytope, and the `k` for which the
//! system is a k-system. Matroid variants answer structurally; intersections
//! and explicit families fall back to exact enumeration under a size cap.

use std::collections::HashSet;
use std::sync::{Arc, OnceLock};

use crate::error::{ProbingError, Result};
use crate::set::{ElementId, ElementSet, MAX_UNIVERSE};

/// Largest queried set for which rank is enumerated exactly.
pub const RANK_ENUMERATION_CAP: usize = 20;

/// Largest universe for which separation enumerates subsets.
pub const SEPARATION_ENUMERATION_CAP: usize = 20;

/// Largest universe for which the k-parameter of an explicit family is enumerated.
pub const K_ENUMERATION_CAP: usize = 15;

/// Violations at or below this amount are treated as satisfied.
pub const SEPARATION_TOL: f64 = 1e-9;

/// Universes up to this size get a precomputed rank table for enumerated variants.
const RANK_TABLE_MAX: usize = 16;

/// A set of elements together with how many of them may be selected.
#[derive(Clone, Debug, PartialEq)]
pub struct CapacitySet {
    pub members: ElementSet,
    pub capacity: usize,
}

impl CapacitySet {
    pub fn new(members: impl IntoIterator<Item = ElementId>, capacity: usize) -> Self {
        CapacitySet {
            members: members.into_iter().collect(),
            capacity,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SystemKind {
    Uniform {
        rank: usize,
    },
    /// Disjoint parts with capacities; elements outside every part are free.
    Partition {
        parts: Vec<CapacitySet>,
    },
    /// Nested-or-disjoint family with capacities.
    Laminar {
        sets: Vec<CapacitySet>,
    },
    /// Element `e` is the edge `edges[e]`; independent sets are forests.
    Graphic {
        vertices: usize,
        edges: Vec<(usize, usize)>,
    },
    Intersection {
        members: Vec<ConstraintSystem>,
    },
    /// Downward-closed family listed in full.
    Explicit {
        family: Vec<ElementSet>,
    },
}

/// An immutable independence system.
#[derive(Clone)]
pub struct ConstraintSystem {
    universe: usize,
    kind: SystemKind,
    /// Graphic variant: edge endpoints relabelled to `0..touched vertices`.
    compact_edges: Arc<Vec<(u16, u16)>>,
    explicit_index: Arc<HashSet<ElementSet>>,
    rank_table: Arc<OnceLock<Option<Vec<u8>>>>,
}

impl std::fmt::Debug for ConstraintSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConstraintSystem")
            .field("universe", &self.universe)
            .field("kind", &self.kind)
            .finish()
    }
}

impl PartialEq for ConstraintSystem {
    fn eq(&self, other: &Self) -> bool {
        self.universe == other.universe && self.kind == other.kind
    }
}

/// A set `S` whose point mass `x(S)` exceeds its rank.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsetWitness {
    pub members: ElementSet,
    /// `x(S)`.
    pub value: f64,
    /// The rank bound `x(S)` violates.
    pub rank: usize,
}

impl SubsetWitness {
    pub fn violation(&self) -> f64 {
        self.value - self.rank as f64
    }
}

fn check_universe(universe: usize) -> Result<()> {
    if universe > MAX_UNIVERSE {
        return Err(ProbingError::capability(format!(
            "universe of {universe} elements exceeds the supported {MAX_UNIVERSE}"
        )));
    }
    Ok(())
}

fn check_members(universe: usize, set: &ElementSet, what: &str) -> Result<()> {
    if set.bound() > universe {
        return Err(ProbingError::domain(format!(
            "{what} contains element {} outside universe of size {universe}",
            set.bound() - 1
        )));
    }
    Ok(())
}

impl ConstraintSystem {
    fn build(universe: usize, kind: SystemKind) -> Self {
        ConstraintSystem {
            universe,
            kind,
            compact_edges: Arc::new(Vec::new()),
            explicit_index: Arc::new(HashSet::new()),
            rank_table: Arc::new(OnceLock::new()),
        }
    }

    pub fn uniform(universe: usize, rank: usize) -> Result<Self> {
        check_universe(universe)?;
        Ok(Self::build(universe, SystemKind::Uniform { rank }))
    }

    /// The system in which every set is independent.
    pub fn free(universe: usize) -> Result<Self> {
        Self::partition(universe, Vec::new())
    }

    pub fn partition(universe: usize, parts: Vec<CapacitySet>) -> Result<Self> {
        check_universe(universe)?;
        let mut seen = ElementSet::empty();
        for (j, part) in parts.iter().enumerate() {
            check_members(universe, &part.members, &format!("partition part {j}"))?;
            if !seen.is_disjoint(&part.members) {
                return Err(ProbingError::domain(format!(
                    "partition part {j} overlaps an earlier part"
                )));
            }
            seen = seen.union(&part.members);
        }
        Ok(Self::build(universe, SystemKind::Partition { parts }))
    }

    pub fn laminar(universe: usize, sets: Vec<CapacitySet>) -> Result<Self> {
        check_universe(universe)?;
        for (j, s) in sets.iter().enumerate() {
            check_members(universe, &s.members, &format!("laminar set {j}"))?;
        }
        for (a, sa) in sets.iter().enumerate() {
            for (b, sb) in sets.iter().enumerate().skip(a + 1) {
                let nested = sa.members.is_subset(&sb.members)
                    || sb.members.is_subset(&sa.members)
                    || sa.members.is_disjoint(&sb.members);
                if !nested {
                    return Err(ProbingError::domain(format!(
                        "laminar sets {a} and {b} cross (neither nested nor disjoint)"
                    )));
                }
            }
        }
        Ok(Self::build(universe, SystemKind::Laminar { sets }))
    }

    pub fn graphic(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        check_universe(edges.len())?;
        let mut relabel = vec![u16::MAX; vertices];
        let mut next = 0u16;
        let mut compact = Vec::with_capacity(edges.len());
        for (e, &(u, v)) in edges.iter().enumerate() {
            if u >= vertices || v >= vertices {
                return Err(ProbingError::domain(format!(
                    "edge {e} = ({u},{v}) references a vertex outside 0..{vertices}"
                )));
            }
            let mut label = |w: usize| {
                if relabel[w] == u16::MAX {
                    relabel[w] = next;
                    next += 1;
                }
                relabel[w]
            };
            let cu = label(u);
            let cv = label(v);
            compact.push((cu, cv));
        }
        let mut sys = Self::build(edges.len(), SystemKind::Graphic { vertices, edges });
        sys.compact_edges = Arc::new(compact);
        Ok(sys)
    }

    /// Intersection of systems over a common universe. Nested intersections are flattened.
    pub fn intersection(members: Vec<ConstraintSystem>) -> Result<Self> {
        let universe = match members.first() {
            Some(m) => m.universe,
            None => {
                return Err(ProbingError::domain(
                    "intersection needs at least one member system",
                ))
            }
        };
        let mut flat = Vec::new();
        for m in members {
            if m.universe != universe {
                return Err(ProbingError::domain(format!(
                    "intersection members disagree on universe size ({} vs {universe})",
                    m.universe
                )));
            }
            match m.kind {
                SystemKind::Intersection { members } => flat.extend(members),
                _ => flat.push(m),
            }
        }
        Ok(Self::build(
            universe,
            SystemKind::Intersection { members: flat },
        ))
    }

    /// An explicit family; it must contain the empty set and be closed under removal.
    pub fn explicit(universe: usize, family: Vec<ElementSet>) -> Result<Self> {
        check_universe(universe)?;
        let index: HashSet<ElementSet> = family.iter().copied().collect();
        if !index.contains(&ElementSet::empty()) {
            return Err(ProbingError::domain(
                "explicit family must contain the empty set",
            ));
        }
        for s in &index {
            check_members(universe, s, "explicit family member")?;
            for e in s.iter() {
                if !index.contains(&s.without(e)) {
                    return Err(ProbingError::domain(format!(
                        "explicit family is not downward closed: {s:?} minus {e} is missing"
                    )));
                }
            }
        }
        let mut sys = Self::build(universe, SystemKind::Explicit { family });
        sys.explicit_index = Arc::new(index);
        Ok(sys)
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    pub fn ground_set(&self) -> ElementSet {
        ElementSet::full(self.universe)
    }

    /// True for the single-matroid variants.
    pub fn is_matroid(&self) -> bool {
        !matches!(
            self.kind,
            SystemKind::Intersection { .. } | SystemKind::Explicit { .. }
        )
    }

    /// True when every subset of the universe is independent.
    pub fn is_free(&self) -> bool {
        self.independent(self.ground_set())
    }

    /// The member matroids for an intersection, or `[self]` otherwise.
    pub fn factors(&self) -> Vec<&ConstraintSystem> {
        match &self.kind {
            SystemKind::Intersection { members } => members.iter().collect(),
            _ => vec![self],
        }
    }

    fn check_set(&self, s: &ElementSet) -> Result<()> {
        check_members(self.universe, s, "queried set")
    }

    pub fn is_independent(&self, s: &ElementSet) -> Result<bool> {
        self.check_set(s)?;
        Ok(self.independent(*s))
    }

    /// Independence without the universe check.
    pub fn independent(&self, s: ElementSet) -> bool {
        match &self.kind {
            SystemKind::Uniform { rank } => s.len() <= *rank,
            SystemKind::Partition { parts } => parts
                .iter()
                .all(|p| s.intersection(&p.members).len() <= p.capacity),
            SystemKind::Laminar { sets } => sets
                .iter()
                .all(|p| s.intersection(&p.members).len() <= p.capacity),
            SystemKind::Graphic { .. } => self.forest_rank(s) == s.len(),
            SystemKind::Intersection { members } => members.iter().all(|m| m.independent(s)),
            SystemKind::Explicit { .. } => self.explicit_index.contains(&s),
        }
    }

    /// Size of a spanning forest of the edges in `s`.
    fn forest_rank(&self, s: ElementSet) -> usize {
        let mut parent = [0u16; 2 * MAX_UNIVERSE];
        for (i, p) in parent.iter_mut().enumerate() {
            *p = i as u16;
        }
        fn find(parent: &mut [u16], mut v: u16) -> u16 {
            while parent[v as usize] != v {
                let grand = parent[parent[v as usize] as usize];
                parent[v as usize] = grand;
                v = grand;
            }
            v
        }
        let mut merged = 0;
        for e in s.iter() {
            let (u, v) = self.compact_edges[e];
            let ru = find(&mut parent, u);
            let rv = find(&mut parent, v);
            if ru != rv {
                // deterministic: lower root wins
                let (lo, hi) = if ru < rv { (ru, rv) } else { (rv, ru) };
                parent[hi as usize] = lo;
                merged += 1;
            }
        }
        merged
    }

    pub fn rank(&self, s: &ElementSet) -> Result<usize> {
        self.check_set(s)?;
        self.rank_unchecked(*s)
    }

    fn rank_unchecked(&self, s: ElementSet) -> Result<usize> {
        Ok(match &self.kind {
            SystemKind::Uniform { rank } => s.len().min(*rank),
            SystemKind::Partition { parts } => {
                let mut free = s;
                let mut total = 0;
                for p in parts {
                    total += s.intersection(&p.members).len().min(p.capacity);
                    free = free.difference(&p.members);
                }
                total + free.len()
            }
            SystemKind::Laminar { .. } => {
                // greedy is exact on a matroid
                let mut kept = ElementSet::empty();
                for e in s.iter() {
                    if self.independent(kept.with(e)) {
                        kept.insert(e);
                    }
                }
                kept.len()
            }
            SystemKind::Graphic { .. } => self.forest_rank(s),
            SystemKind::Intersection { .. } | SystemKind::Explicit { .. } => {
                self.enumerated_rank(s)?
            }
        })
    }

    fn table(&self) -> Option<&Vec<u8>> {
        self.rank_table
            .get_or_init(|| {
                if self.universe > RANK_TABLE_MAX {
                    return None;
                }
                let size = 1usize << self.universe;
                let mut table = vec![0u8; size];
                for mask in 1..size {
                    let s = ElementSet::from_mask(mask as u64);
                    table[mask] = if self.independent(s) {
                        mask.count_ones() as u8
                    } else {
                        let mut best = 0;
                        let mut rest = mask;
                        while rest != 0 {
                            let bit = rest & rest.wrapping_neg();
                            best = best.max(table[mask ^ bit]);
                            rest ^= bit;
                        }
                        best
                    };
                }
                Some(table)
            })
            .as_ref()
    }

    fn enumerated_rank(&self, s: ElementSet) -> Result<usize> {
        if let Some(table) = self.table() {
            return Ok(table[s.low_mask() as usize] as usize);
        }
        if s.len() > RANK_ENUMERATION_CAP {
            return Err(ProbingError::capability(format!(
                "exact rank of a {}-element set exceeds the enumeration cap of {RANK_ENUMERATION_CAP}",
                s.len()
            )));
        }
        let members = s.to_vec();
        let mut best = 0;
        self.max_independent_dfs(&members, 0, ElementSet::empty(), &mut best);
        Ok(best)
    }

    fn max_independent_dfs(
        &self,
        members: &[ElementId],
        at: usize,
        current: ElementSet,
        best: &mut usize,
    ) {
        let size = current.len();
        if size > *best {
            *best = size;
        }
        if at == members.len() || size + (members.len() - at) <= *best {
            return;
        }
        let with = current.with(members[at]);
        if self.independent(with) {
            self.max_independent_dfs(members, at + 1, with, best);
        }
        self.max_independent_dfs(members, at + 1, current, best);
    }

    /// `{e : rank(t ∪ {e}) = rank(t)}`.
    pub fn span(&self, t: &ElementSet) -> Result<ElementSet> {
        self.check_set(t)?;
        let base = self.rank_unchecked(*t)?;
        let mut out = *t;
        for e in 0..self.universe {
            if !t.contains(e) && self.rank_unchecked(t.with(e))? == base {
                out.insert(e);
            }
        }
        Ok(out)
    }

    /// Finds a set `S` with `x(S) > rank(S) + SEPARATION_TOL`, or `None` if `x`
    /// satisfies every rank constraint of the system's polytope.
    ///
    /// For intersections the polytope is the intersection of the member
    /// polytopes, and the returned witness is the most violated member constraint.
    pub fn separate(&self, x: &[f64]) -> Result<Option<SubsetWitness>> {
        if x.len() != self.universe {
            return Err(ProbingError::domain(format!(
                "point has {} coordinates, universe has {}",
                x.len(),
                self.universe
            )));
        }
        if let Some((e, v)) = x
            .iter()
            .enumerate()
            .find(|(_, &v)| !(-SEPARATION_TOL..=1.0 + SEPARATION_TOL).contains(&v))
        {
            return Err(ProbingError::domain(format!(
                "coordinate {e} = {v} outside [0,1]"
            )));
        }
        let support: ElementSet = x
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(e, _)| e)
            .collect();
        let mass = |s: &ElementSet| s.iter().map(|e| x[e]).sum::<f64>();
        let witness = |s: ElementSet, rank: usize| SubsetWitness {
            members: s,
            value: mass(&s),
            rank,
        };
        let best = match &self.kind {
            SystemKind::Uniform { rank } => {
                let w = witness(support, support.len().min(*rank));
                Some(w)
            }
            SystemKind::Partition { parts } => {
                let mut members = ElementSet::empty();
                let mut rank = 0;
                for p in parts {
                    let s = p.members.intersection(&support);
                    if mass(&s) > p.capacity as f64 + SEPARATION_TOL {
                        members = members.union(&s);
                        rank += p.capacity;
                    }
                }
                Some(witness(members, rank))
            }
            SystemKind::Laminar { sets } => sets
                .iter()
                .map(|p| {
                    let s = p.members.intersection(&support);
                    let r = self.rank_unchecked(s).expect("laminar rank is structural");
                    witness(s, r)
                })
                .max_by(|a, b| a.violation().total_cmp(&b.violation())),
            SystemKind::Graphic { .. } => Some(self.separate_graphic(x, support)?),
            SystemKind::Intersection { members } => {
                let mut best: Option<SubsetWitness> = None;
                for m in members {
                    if let Some(w) = m.separate(x)? {
                        if best.as_ref().is_none_or(|b| w.violation() > b.violation()) {
                            best = Some(w);
                        }
                    }
                }
                best
            }
            SystemKind::Explicit { .. } => {
                if support.len() > SEPARATION_ENUMERATION_CAP {
                    return Err(ProbingError::capability(format!(
                        "separation over an explicit family with {} supported elements exceeds {SEPARATION_ENUMERATION_CAP}",
                        support.len()
                    )));
                }
                let mut best: Option<SubsetWitness> = None;
                for s in support.subsets() {
                    let w = witness(s, self.enumerated_rank(s)?);
                    if best.as_ref().is_none_or(|b| w.violation() > b.violation()) {
                        best = Some(w);
                    }
                }
                best
            }
        };
        Ok(best.filter(|w| w.violation() > SEPARATION_TOL))
    }

    /// Forest-polytope separation over vertex subsets: every rank constraint is
    /// implied by the constraints on edge sets induced by vertex subsets.
    fn separate_graphic(&self, x: &[f64], support: ElementSet) -> Result<SubsetWitness> {
        let touched = self
            .compact_edges
            .iter()
            .map(|&(u, v)| u.max(v) as usize + 1)
            .max()
            .unwrap_or(0);
        let mut best = SubsetWitness {
            members: ElementSet::empty(),
            value: 0.0,
            rank: 0,
        };
        if touched > SEPARATION_ENUMERATION_CAP {
            if support.len() > SEPARATION_ENUMERATION_CAP {
                return Err(ProbingError::capability(format!(
                    "graphic separation over {touched} vertices and {} supported edges exceeds {SEPARATION_ENUMERATION_CAP}",
                    support.len()
                )));
            }
            for s in support.subsets() {
                let value = s.iter().map(|e| x[e]).sum::<f64>();
                let rank = self.forest_rank(s);
                if value - rank as f64 > best.violation() {
                    best = SubsetWitness {
                        members: s,
                        value,
                        rank,
                    };
                }
            }
            return Ok(best);
        }
        let endpoints: Vec<(ElementId, u32)> = support
            .iter()
            .map(|e| {
                let (u, v) = self.compact_edges[e];
                (e, (1u32 << u) | (1u32 << v))
            })
            .collect();
        for vertex_mask in 1u32..(1u32 << touched) {
            let s: ElementSet = endpoints
                .iter()
                .filter(|(_, ends)| ends & !vertex_mask == 0)
                .map(|(e, _)| *e)
                .collect();
            if s.is_empty() {
                continue;
            }
            let value = s.iter().map(|e| x[e]).sum::<f64>();
            if value <= best.violation() {
                continue;
            }
            let rank = self.forest_rank(s);
            if value - rank as f64 > best.violation() {
                best = SubsetWitness {
                    members: s,
                    value,
                    rank,
                };
            }
        }
        Ok(best)
    }

    /// Smallest integer `k` such that this is a k-system.
    pub fn k_parameter(&self) -> Result<usize> {
        match &self.kind {
            SystemKind::Intersection { members } => {
                let mut k = 0;
                for m in members {
                    k += m.k_parameter()?;
                }
                Ok(k)
            }
            SystemKind::Explicit { family } => self.explicit_k(family),
            _ => Ok(1),
        }
    }

    fn explicit_k(&self, family: &[ElementSet]) -> Result<usize> {
        let n = self.universe;
        if n > K_ENUMERATION_CAP {
            return Err(ProbingError::capability(format!(
                "k-parameter of an explicit family over {n} elements exceeds the cap of {K_ENUMERATION_CAP}"
            )));
        }
        let size = 1usize << n;
        // smallest maximal independent subset of each S
        let mut min_maximal = vec![u8::MAX; size];
        for &ind in family {
            let blockers: ElementSet = (0..n)
                .filter(|&e| !ind.contains(e) && !self.independent(ind.with(e)))
                .collect();
            for extra in blockers.subsets() {
                let s = ind.union(&extra).low_mask() as usize;
                min_maximal[s] = min_maximal[s].min(ind.len() as u8);
            }
        }
        let mut k = 1;
        for (mask, &smallest) in min_maximal.iter().enumerate().skip(1) {
            let smallest = smallest as usize;
            let largest = self.enumerated_rank(ElementSet::from_mask(mask as u64))?;
            if smallest > 0 {
                k = k.max(largest.div_ceil(smallest));
            }
        }
        Ok(k)
    }

    /// Parallel extension onto a lifted universe: element `e` of `self` becomes
    /// the copies `copies[e]`. A lifted set is independent iff it holds at most
    /// one copy of each original element and its projection is independent.
    pub fn lift(&self, copies: &[Vec<ElementId>], lifted_universe: usize) -> Result<Self> {
        if copies.len() != self.universe {
            return Err(ProbingError::domain(format!(
                "lift needs copies for {} elements, got {}",
                self.universe,
                copies.len()
            )));
        }
        let copy_set = |members: &ElementSet| -> ElementSet {
            members
                .iter()
                .flat_map(|e| copies[e].iter().copied())
                .collect()
        };
        let per_element: Vec<CapacitySet> = copies
            .iter()
            .filter(|c| c.len() > 1)
            .map(|c| CapacitySet::new(c.iter().copied(), 1))
            .collect();
        match &self.kind {
            SystemKind::Uniform { rank } => {
                let mut sets = per_element;
                sets.push(CapacitySet {
                    members: ElementSet::full(lifted_universe),
                    capacity: *rank,
                });
                Self::laminar(lifted_universe, sets)
            }
            SystemKind::Partition { parts: family } | SystemKind::Laminar { sets: family } => {
                let mut sets = per_element;
                sets.extend(family.iter().map(|p| CapacitySet {
                    members: copy_set(&p.members),
                    capacity: p.capacity,
                }));
                Self::laminar(lifted_universe, sets)
            }
            SystemKind::Graphic { vertices, edges } => {
                let mut lifted = vec![(0, 0); lifted_universe];
                let mut covered = ElementSet::empty();
                for (e, c) in copies.iter().enumerate() {
                    for &copy in c {
                        lifted[copy] = edges[e];
                        covered.insert(copy);
                    }
                }
                if covered != ElementSet::full(lifted_universe) {
                    return Err(ProbingError::domain(
                        "graphic lift requires every lifted element to be a copy",
                    ));
                }
                Self::graphic(*vertices, lifted)
            }
            SystemKind::Intersection { members } => Self::intersection(
                members
                    .iter()
                    .map(|m| m.lift(copies, lifted_universe))
                    .collect::<Result<Vec<_>>>()?,
            ),
            SystemKind::Explicit { .. } => Err(ProbingError::capability(
                "explicit families cannot be lifted; use matroid variants",
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[usize]) -> ElementSet {
        items.iter().copied().collect()
    }

    fn triangle() -> ConstraintSystem {
        ConstraintSystem::graphic(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn partition_01_2() -> ConstraintSystem {
        ConstraintSystem::partition(
            3,
            vec![CapacitySet::new([0, 1], 1), CapacitySet::new([2], 1)],
        )
        .unwrap()
    }

    /// Matchings of a graph as an explicit family.
    fn matchings(vertices: usize, edges: &[(usize, usize)]) -> ConstraintSystem {
        let n = edges.len();
        let family = ElementSet::full(n)
            .subsets()
            .filter(|s| {
                let mut used = vec![false; vertices];
                s.iter().all(|e| {
                    let (u, v) = edges[e];
                    let ok = !used[u] && !used[v];
                    used[u] = true;
                    used[v] = true;
                    ok
                })
            })
            .collect();
        ConstraintSystem::explicit(n, family).unwrap()
    }

    #[test]
    fn independence_examples() {
        let u = ConstraintSystem::uniform(4, 2).unwrap();
        assert!(u.is_independent(&ElementSet::empty()).unwrap());
        assert!(!triangle().is_independent(&set(&[0, 1, 2])).unwrap());
        assert!(triangle().is_independent(&set(&[0, 1])).unwrap());
        let p = partition_01_2();
        assert!(p.is_independent(&set(&[0, 2])).unwrap());
        assert!(!p.is_independent(&set(&[0, 1])).unwrap());
    }

    #[test]
    fn out_of_universe_is_domain_error() {
        let u = ConstraintSystem::uniform(3, 1).unwrap();
        assert!(matches!(
            u.is_independent(&set(&[5])),
            Err(ProbingError::Domain(_))
        ));
    }

    #[test]
    fn rank_examples() {
        let u = ConstraintSystem::uniform(5, 3).unwrap();
        assert_eq!(u.rank(&ElementSet::full(5)).unwrap(), 3);
        let path = ConstraintSystem::graphic(4, vec![(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(path.rank(&ElementSet::full(3)).unwrap(), 3);
    }

    #[test]
    fn bipartite_intersection_rank_matches_brute_force() {
        // edges of K_{2,2}: e = 2*row + col
        let rows = ConstraintSystem::partition(
            4,
            vec![CapacitySet::new([0, 1], 1), CapacitySet::new([2, 3], 1)],
        )
        .unwrap();
        let cols = ConstraintSystem::partition(
            4,
            vec![CapacitySet::new([0, 2], 1), CapacitySet::new([1, 3], 1)],
        )
        .unwrap();
        let both = ConstraintSystem::intersection(vec![rows.clone(), cols.clone()]).unwrap();
        let all = ElementSet::full(4);
        let brute = all
            .subsets()
            .filter(|s| rows.independent(*s) && cols.independent(*s))
            .map(|s| s.len())
            .max()
            .unwrap();
        assert_eq!(brute, 2);
        assert_eq!(both.rank(&all).unwrap(), brute);
        assert_eq!(both.k_parameter().unwrap(), 2);
    }

    #[test]
    fn span_examples() {
        let u = ConstraintSystem::uniform(3, 2).unwrap();
        assert_eq!(u.span(&ElementSet::empty()).unwrap(), ElementSet::empty());
        assert_eq!(triangle().span(&set(&[0, 1])).unwrap(), set(&[0, 1, 2]));
        let p = ConstraintSystem::partition(
            4,
            vec![CapacitySet::new([0, 1, 2], 1), CapacitySet::new([3], 1)],
        )
        .unwrap();
        assert_eq!(p.span(&set(&[1])).unwrap(), set(&[0, 1, 2]));
    }

    #[test]
    fn rank_zero_elements_are_in_every_span() {
        let g = ConstraintSystem::graphic(2, vec![(0, 0), (0, 1)]).unwrap();
        assert_eq!(g.span(&ElementSet::empty()).unwrap(), set(&[0]));
    }

    #[test]
    fn separation_examples() {
        let u = ConstraintSystem::uniform(2, 1).unwrap();
        let w = u.separate(&[0.6, 0.6]).unwrap().unwrap();
        assert_eq!(w.members, set(&[0, 1]));
        assert!((w.value - 1.2).abs() < 1e-12);
        assert_eq!(w.rank, 1);

        assert!(partition_01_2()
            .separate(&[0.5, 0.5, 1.0])
            .unwrap()
            .is_none());

        let w = triangle().separate(&[0.7, 0.7, 0.7]).unwrap().unwrap();
        assert_eq!(w.members, set(&[0, 1, 2]));
        assert!((w.value - 2.1).abs() < 1e-12);
        assert_eq!(w.rank, 2);
    }

    #[test]
    fn separation_rejects_points_outside_the_box() {
        let u = ConstraintSystem::uniform(2, 1).unwrap();
        assert!(u.separate(&[1.5, 0.0]).is_err());
        assert!(u.separate(&[0.5]).is_err());
    }

    #[test]
    fn k_parameter_examples() {
        assert_eq!(
            ConstraintSystem::uniform(4, 2)
                .unwrap()
                .k_parameter()
                .unwrap(),
            1
        );
        let parts = |n: usize| {
            ConstraintSystem::partition(n, (0..n).map(|e| CapacitySet::new([e], 1)).collect())
                .unwrap()
        };
        let three = ConstraintSystem::intersection(vec![parts(3), parts(3), parts(3)]).unwrap();
        assert_eq!(three.k_parameter().unwrap(), 3);
        // matchings of a path with three edges: {e0,e2} and {e1} are both maximal
        let p4 = matchings(4, &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(p4.k_parameter().unwrap(), 2);
        // a triangle's matchings are its single edges: a rank-1 uniform matroid
        let tri = matchings(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(tri.k_parameter().unwrap(), 1);
    }

    #[test]
    fn constructors_reject_malformed_families() {
        assert!(ConstraintSystem::partition(
            3,
            vec![CapacitySet::new([0, 1], 1), CapacitySet::new([1, 2], 1)]
        )
        .is_err());
        assert!(ConstraintSystem::laminar(
            3,
            vec![CapacitySet::new([0, 1], 1), CapacitySet::new([1, 2], 1)]
        )
        .is_err());
        assert!(ConstraintSystem::explicit(2, vec![ElementSet::empty(), set(&[0, 1])]).is_err());
    }

    #[test]
    fn partition_free_elements_are_unconstrained() {
        let p = ConstraintSystem::partition(4, vec![CapacitySet::new([0, 1], 1)]).unwrap();
        assert!(p.is_independent(&set(&[0, 2, 3])).unwrap());
        assert_eq!(p.rank(&ElementSet::full(4)).unwrap(), 3);
    }

    #[test]
    fn lifted_uniform_allows_one_copy_per_agent() {
        let u = ConstraintSystem::uniform(2, 1).unwrap();
        let lifted = u.lift(&[vec![0, 1], vec![2, 3]], 4).unwrap();
        assert!(lifted.is_independent(&set(&[1])).unwrap());
        assert!(!lifted.is_independent(&set(&[0, 1])).unwrap());
        assert!(!lifted.is_independent(&set(&[0, 2])).unwrap());
        assert_eq!(lifted.k_parameter().unwrap(), 1);
    }

    #[test]
    fn lifted_graphic_copies_are_parallel() {
        let g = ConstraintSystem::graphic(3, vec![(0, 1), (1, 2)]).unwrap();
        let lifted = g.lift(&[vec![0, 1], vec![2]], 3).unwrap();
        assert!(!lifted.is_independent(&set(&[0, 1])).unwrap());
        assert!(lifted.is_independent(&set(&[1, 2])).unwrap());
    }
}
