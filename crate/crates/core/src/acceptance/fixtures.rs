//! Seeded instance generators and fixed fixtures used by the acceptance suite.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::constraint::{CapacitySet, ConstraintSystem};
use crate::error::Result;
use crate::instance::{Element, ProbingInstance};
use crate::spm::AuctionSpec;

/// Which matroid families a generator may draw from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatroidFamily {
    PartitionOrGraphic,
    PartitionOrUniform,
}

fn random_partition<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<ConstraintSystem> {
    let parts = rng.gen_range(2..=4.min(n.max(2)));
    let mut members = vec![Vec::new(); parts];
    for e in 0..n {
        members[rng.gen_range(0..parts)].push(e);
    }
    let sets = members
        .into_iter()
        .filter(|m| !m.is_empty())
        .map(|m| CapacitySet::new(m, rng.gen_range(1..=2)))
        .collect();
    ConstraintSystem::partition(n, sets)
}

fn random_graphic<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<ConstraintSystem> {
    let vertices = rng.gen_range(3..=5);
    let edges = (0..n)
        .map(|_| {
            let u = rng.gen_range(0..vertices);
            let mut w = rng.gen_range(0..vertices - 1);
            if w >= u {
                w += 1;
            }
            (u, w)
        })
        .collect();
    ConstraintSystem::graphic(vertices, edges)
}

pub fn random_matroid<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    family: MatroidFamily,
) -> Result<ConstraintSystem> {
    match family {
        MatroidFamily::PartitionOrGraphic if rng.gen_bool(0.5) => random_graphic(rng, n),
        MatroidFamily::PartitionOrUniform if rng.gen_bool(0.3) => {
            ConstraintSystem::uniform(n, rng.gen_range(1..=(n / 2).max(1)))
        }
        _ => random_partition(rng, n),
    }
}

/// Intersection of `k` random matroids (the matroid itself when `k = 1`).
pub fn random_system<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    k: usize,
    family: MatroidFamily,
) -> Result<ConstraintSystem> {
    let members = (0..k)
        .map(|_| random_matroid(rng, n, family))
        .collect::<Result<Vec<_>>>()?;
    if k == 1 {
        Ok(members.into_iter().next().expect("k = 1"))
    } else {
        ConstraintSystem::intersection(members)
    }
}

/// Probability on a coarse grid so that ties occur.
fn grid_probability<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen_range(1..=20) as f64 / 20.0
}

/// Unit-weight instance with `n` in `4..=10`.
pub fn random_unweighted<R: Rng + ?Sized>(
    rng: &mut R,
    k_in: usize,
    k_out: usize,
) -> Result<ProbingInstance> {
    let n = rng.gen_range(4..=10);
    let elements = (0..n)
        .map(|_| Element::new(1.0, grid_probability(rng)))
        .collect();
    let inner = random_system(rng, n, k_in, MatroidFamily::PartitionOrGraphic)?;
    let outer = random_system(rng, n, k_out, MatroidFamily::PartitionOrGraphic)?;
    ProbingInstance::new(elements, inner, outer)
}

/// Weighted instance over partition and uniform matroids with `n` in `5..=10`.
pub fn random_weighted<R: Rng + ?Sized>(
    rng: &mut R,
    k_in: usize,
    k_out: usize,
) -> Result<ProbingInstance> {
    let n = rng.gen_range(5..=10);
    let elements = (0..n)
        .map(|_| Element::new(rng.gen_range(1..=20) as f64 / 2.0, grid_probability(rng)))
        .collect();
    let inner = random_system(rng, n, k_in, MatroidFamily::PartitionOrUniform)?;
    let outer = random_system(rng, n, k_out, MatroidFamily::PartitionOrUniform)?;
    ProbingInstance::new(elements, inner, outer)
}

/// Unit-weight instance with deadlines and `n` in `3..=8`.
pub fn random_deadline<R: Rng + ?Sized>(
    rng: &mut R,
    k_in: usize,
    k_out: usize,
) -> Result<ProbingInstance> {
    let n = rng.gen_range(3..=8);
    let elements = (0..n)
        .map(|_| {
            Element::new(1.0, grid_probability(rng)).with_deadline(rng.gen_range(1..=n as u32))
        })
        .collect();
    let inner = random_system(rng, n, k_in, MatroidFamily::PartitionOrGraphic)?;
    let outer = random_system(rng, n, k_out, MatroidFamily::PartitionOrGraphic)?;
    ProbingInstance::new(elements, inner, outer)
}

/// Number of gadgets in the shipped tightness fixture.
pub const TIGHTNESS_GADGETS: usize = 7;

/// All-certain instance where greedy collects a third of the optimum.
///
/// Each gadget holds four triples over private coordinates: a blocker
/// `(x0, y0, z0)` listed first, and three pairwise-disjoint triples that
/// each share one coordinate with it. The inner system is the intersection
/// of the partition matroids on the first two coordinates, the outer one is
/// the partition matroid on the third.
pub fn tightness_fixture(gadgets: usize) -> Result<ProbingInstance> {
    let n = 4 * gadgets;
    let triples: [[usize; 3]; 4] = [[0, 0, 0], [0, 1, 1], [1, 0, 2], [2, 2, 0]];
    let mut coords = [
        vec![Vec::new(); 3 * gadgets],
        vec![Vec::new(); 3 * gadgets],
        vec![Vec::new(); 3 * gadgets],
    ];
    for g in 0..gadgets {
        for (t, triple) in triples.iter().enumerate() {
            let e = 4 * g + t;
            for (axis, &c) in triple.iter().enumerate() {
                coords[axis][3 * g + c].push(e);
            }
        }
    }
    let partition = |axis: usize| {
        ConstraintSystem::partition(
            n,
            coords[axis]
                .iter()
                .map(|m| CapacitySet::new(m.iter().copied(), 1))
                .collect(),
        )
    };
    let inner = ConstraintSystem::intersection(vec![partition(0)?, partition(1)?])?;
    let outer = partition(2)?;
    ProbingInstance::new(vec![Element::new(1.0, 1.0); n], inner, outer)
}

/// A fractional point strictly inside the polytope of a `k`-system.
#[derive(Clone, Debug)]
pub struct CrFixture {
    pub name: String,
    pub k: usize,
    pub system: ConstraintSystem,
    pub z: Vec<f64>,
    pub weights: Vec<f64>,
}

fn descending_weights(n: usize) -> Vec<f64> {
    (0..n).map(|e| (n - e) as f64).collect()
}

/// Fixtures for ordered schemes: a uniform matroid and `K_4` (k = 1), a 3×3
/// bipartite grid (k = 2) and the 2×2×2 cube of triples (k = 3).
pub fn ordered_cr_fixtures() -> Result<Vec<CrFixture>> {
    let mut out = Vec::new();
    out.push(CrFixture {
        name: "uniform-6-rank-2".into(),
        k: 1,
        system: ConstraintSystem::uniform(6, 2)?,
        z: vec![1.0 / 3.0; 6],
        weights: descending_weights(6),
    });
    out.push(CrFixture {
        name: "graphic-k4".into(),
        k: 1,
        system: ConstraintSystem::graphic(4, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])?,
        z: vec![0.5; 6],
        weights: descending_weights(6),
    });
    let grid = |axis: usize| {
        ConstraintSystem::partition(
            9,
            (0..3)
                .map(|line| {
                    CapacitySet::new(
                        (0..9).filter(move |e| {
                            if axis == 0 {
                                e / 3 == line
                            } else {
                                e % 3 == line
                            }
                        }),
                        1,
                    )
                })
                .collect(),
        )
    };
    out.push(CrFixture {
        name: "bipartite-3x3".into(),
        k: 2,
        system: ConstraintSystem::intersection(vec![grid(0)?, grid(1)?])?,
        z: vec![1.0 / 3.0; 9],
        weights: descending_weights(9),
    });
    let cube = |bit: usize| {
        ConstraintSystem::partition(
            8,
            (0..2)
                .map(|side| CapacitySet::new((0..8).filter(move |e| (e >> bit) & 1 == side), 1))
                .collect(),
        )
    };
    out.push(CrFixture {
        name: "cube-2x2x2".into(),
        k: 3,
        system: ConstraintSystem::intersection(vec![cube(0)?, cube(1)?, cube(2)?])?,
        z: vec![0.25; 8],
        weights: descending_weights(8),
    });
    Ok(out)
}

/// Unit-capacity partition with spread, concentrated and single-member parts.
pub fn partition_cr_fixture() -> Result<CrFixture> {
    let system = ConstraintSystem::partition(
        7,
        vec![
            CapacitySet::new(0..4, 1),
            CapacitySet::new(4..6, 1),
            CapacitySet::new([6], 1),
        ],
    )?;
    Ok(CrFixture {
        name: "partition-mixed".into(),
        k: 1,
        system,
        z: vec![0.25, 0.25, 0.25, 0.25, 0.9, 0.1, 1.0],
        weights: descending_weights(7),
    })
}

fn random_distribution<R: Rng + ?Sized>(rng: &mut R, max_value: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..=max_value).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|m| m / total).collect()
}

/// Single-parameter auctions under a uniform matroid: `n ≤ 6`, `B ≤ 5`.
pub fn spm_uniform<R: Rng + ?Sized>(rng: &mut R) -> Result<AuctionSpec> {
    let n = rng.gen_range(2..=6);
    let b = rng.gen_range(2..=5);
    let rank = rng.gen_range(1..=(n / 2).max(1));
    let distributions = (0..n).map(|_| random_distribution(rng, b)).collect();
    AuctionSpec::new(distributions, ConstraintSystem::uniform(n, rank)?)
}

/// Auctions whose agents are the edges of a complete bipartite graph and
/// whose feasible sets are matchings.
pub fn spm_matching<R: Rng + ?Sized>(rng: &mut R) -> Result<AuctionSpec> {
    let left = 2;
    let right = *[2usize, 3].choose(rng).expect("non-empty");
    let n = left * right;
    let b = rng.gen_range(2..=4);
    let side = |by_left: bool| {
        let count = if by_left { left } else { right };
        ConstraintSystem::partition(
            n,
            (0..count)
                .map(|v| {
                    CapacitySet::new(
                        (0..n).filter(move |e| {
                            if by_left {
                                e / right == v
                            } else {
                                e % right == v
                            }
                        }),
                        1,
                    )
                })
                .collect(),
        )
    };
    let feasibility = ConstraintSystem::intersection(vec![side(true)?, side(false)?])?;
    let distributions = (0..n).map(|_| random_distribution(rng, b)).collect();
    AuctionSpec::new(distributions, feasibility)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{exact_greedy_value, optimal_adaptive};
    use crate::rng::trial_rng;

    #[test]
    fn tightness_ratio_is_one_third() {
        let inst = tightness_fixture(TIGHTNESS_GADGETS).unwrap();
        assert_eq!(inst.len(), 28);
        assert_eq!(
            inst.inner.k_parameter().unwrap() + inst.outer.k_parameter().unwrap(),
            3
        );
        let active = vec![true; inst.len()];
        let greedy = crate::greedy::run_greedy(&inst, &active).chosen.len();
        assert_eq!(greedy, TIGHTNESS_GADGETS);
        assert_eq!(
            optimal_adaptive(&inst).unwrap(),
            3.0 * TIGHTNESS_GADGETS as f64
        );
    }

    #[test]
    fn single_gadget_matches_exact_evaluation() {
        let inst = tightness_fixture(1).unwrap();
        assert_eq!(exact_greedy_value(&inst).unwrap(), 1.0);
        assert_eq!(optimal_adaptive(&inst).unwrap(), 3.0);
    }

    #[test]
    fn cr_points_are_feasible() {
        for f in ordered_cr_fixtures()
            .unwrap()
            .into_iter()
            .chain([partition_cr_fixture().unwrap()])
        {
            assert!(f.system.separate(&f.z).unwrap().is_none(), "{}", f.name);
            assert_eq!(f.system.k_parameter().unwrap(), f.k, "{}", f.name);
        }
    }

    #[test]
    fn generators_respect_sizes() {
        let mut rng = trial_rng(1, 0);
        for _ in 0..20 {
            let inst = random_unweighted(&mut rng, 2, 2).unwrap();
            assert!((4..=10).contains(&inst.len()));
            assert_eq!(inst.inner.k_parameter().unwrap(), 2);
            let d = random_deadline(&mut rng, 1, 2).unwrap();
            assert!(d.len() <= 8 && d.deadlines().is_ok());
            let s = spm_uniform(&mut rng).unwrap();
            assert!(s.agents() <= 6 && s.max_value() <= 5);
            assert_eq!(spm_matching(&mut rng).unwrap().k().unwrap(), 2);
        }
    }
}
