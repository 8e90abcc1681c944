//! The probing relaxation: `max Σ w_e x_e` with `x_e = p_e y_e`, `x` in the
//! inner polytope and `y` in the outer polytope.
//!
//! The substitution leaves `y` as the only decision vector. Rank constraints
//! are generated lazily from the separation oracles of both systems until the
//! simplex optimum violates none of them.

use serde::Serialize;

use crate::constraint::{ConstraintSystem, SEPARATION_TOL};
use crate::error::{ProbingError, Result};
use crate::instance::ProbingInstance;
use crate::lp::simplex::{maximize, Constraint};
use crate::set::ElementSet;

/// Cut-generation rounds before giving up.
const MAX_ROUNDS: usize = 5_000;

/// Universe cap for solving with every rank constraint written out.
pub const FULL_ENUMERATION_CAP: usize = 12;

/// Tolerance for `lp_value >= opt_value` checks.
pub const LP_OPT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CutSide {
    /// `Σ_{e∈S} p_e y_e <= r_in(S)`
    Inner,
    /// `Σ_{e∈S} y_e <= r_out(S)`
    Outer,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cut {
    pub side: CutSide,
    pub members: ElementSet,
    pub rank: usize,
}

/// An optimal point of the probing relaxation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FractionalSolution {
    /// Marginal probability each element is chosen.
    pub x: Vec<f64>,
    /// Marginal probability each element is probed.
    pub y: Vec<f64>,
    pub objective: f64,
    pub cuts: Vec<Cut>,
    pub rounds: usize,
}

impl FractionalSolution {
    /// Builds `x = p·y` from a given `y` and evaluates the objective.
    pub fn from_y(instance: &ProbingInstance, y: Vec<f64>) -> Self {
        let x: Vec<f64> = y
            .iter()
            .zip(&instance.elements)
            .map(|(y, el)| el.p * y)
            .collect();
        let objective = x
            .iter()
            .zip(&instance.elements)
            .map(|(x, el)| el.weight * x)
            .sum();
        FractionalSolution {
            x,
            y,
            objective,
            cuts: Vec::new(),
            rounds: 0,
        }
    }

    /// Checks box bounds, `x = p·y`, and both polytopes via separation.
    pub fn check_feasible(&self, instance: &ProbingInstance) -> Result<()> {
        let n = instance.len();
        if self.x.len() != n || self.y.len() != n {
            return Err(ProbingError::domain(
                "solution length does not match instance",
            ));
        }
        for e in 0..n {
            let y = self.y[e];
            if !(-SEPARATION_TOL..=1.0 + SEPARATION_TOL).contains(&y) {
                return Err(ProbingError::domain(format!("y[{e}] = {y} outside [0,1]")));
            }
            if (self.x[e] - instance.p(e) * y).abs() > 1e-9 {
                return Err(ProbingError::domain(format!(
                    "x[{e}] = {} differs from p·y = {}",
                    self.x[e],
                    instance.p(e) * y
                )));
            }
        }
        if let Some(w) = instance.inner.separate(&clamp_unit(&self.x))? {
            return Err(ProbingError::domain(format!(
                "x violates inner rank constraint on {:?}: {} > {}",
                w.members, w.value, w.rank
            )));
        }
        if let Some(w) = instance.outer.separate(&clamp_unit(&self.y))? {
            return Err(ProbingError::domain(format!(
                "y violates outer rank constraint on {:?}: {} > {}",
                w.members, w.value, w.rank
            )));
        }
        Ok(())
    }
}

fn clamp_unit(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.clamp(0.0, 1.0)).collect()
}

/// Elements that can contribute to the objective.
fn decision_elements(instance: &ProbingInstance) -> Vec<usize> {
    (0..instance.len())
        .filter(|&e| instance.p(e) > 0.0 && instance.weight(e) > 0.0)
        .collect()
}

struct Model<'a> {
    instance: &'a ProbingInstance,
    vars: Vec<usize>,
    rows: Vec<Constraint>,
    cuts: Vec<Cut>,
}

impl<'a> Model<'a> {
    fn new(instance: &'a ProbingInstance) -> Self {
        let vars = decision_elements(instance);
        let rows = (0..vars.len())
            .map(|i| {
                let mut coefficients = vec![0.0; vars.len()];
                coefficients[i] = 1.0;
                Constraint {
                    coefficients,
                    rhs: 1.0,
                }
            })
            .collect();
        Model {
            instance,
            vars,
            rows,
            cuts: Vec::new(),
        }
    }

    fn add_cut(&mut self, cut: Cut) {
        let coefficients = self
            .vars
            .iter()
            .map(|&e| {
                if !cut.members.contains(e) {
                    0.0
                } else if cut.side == CutSide::Inner {
                    self.instance.p(e)
                } else {
                    1.0
                }
            })
            .collect();
        self.rows.push(Constraint {
            coefficients,
            rhs: cut.rank as f64,
        });
        self.cuts.push(cut);
    }

    fn solve(&self) -> Result<(Vec<f64>, usize)> {
        let objective: Vec<f64> = self
            .vars
            .iter()
            .map(|&e| self.instance.weight(e) * self.instance.p(e))
            .collect();
        let opt = maximize(&objective, &self.rows)?;
        let mut y = vec![0.0; self.instance.len()];
        for (i, &e) in self.vars.iter().enumerate() {
            y[e] = opt.x[i].clamp(0.0, 1.0);
        }
        Ok((y, opt.pivots))
    }

    fn finish(self, y: Vec<f64>, rounds: usize) -> FractionalSolution {
        let mut sol = FractionalSolution::from_y(self.instance, y);
        sol.cuts = self.cuts;
        sol.rounds = rounds;
        sol
    }
}

/// Solves the probing relaxation exactly by cut generation.
pub fn solve_probing_lp(instance: &ProbingInstance) -> Result<FractionalSolution> {
    let mut model = Model::new(instance);
    for round in 1..=MAX_ROUNDS {
        let (y, _) = model.solve()?;
        let x: Vec<f64> = y
            .iter()
            .enumerate()
            .map(|(e, y)| instance.p(e) * y)
            .collect();
        let mut added = false;
        for (side, system, point) in [
            (CutSide::Inner, &instance.inner, &x),
            (CutSide::Outer, &instance.outer, &y),
        ] {
            if let Some(w) = system.separate(point)? {
                let cut = Cut {
                    side,
                    members: w.members,
                    rank: w.rank,
                };
                if model.cuts.contains(&cut) {
                    // already enforced; what remains is floating-point noise
                    if w.violation() > 1e-7 {
                        return Err(ProbingError::capability(format!(
                            "cut on {:?} re-separated with violation {}",
                            w.members,
                            w.violation()
                        )));
                    }
                    continue;
                }
                model.add_cut(cut);
                added = true;
            }
        }
        if !added {
            return Ok(model.finish(y, round));
        }
    }
    Err(ProbingError::capability(format!(
        "cut generation did not converge in {MAX_ROUNDS} rounds"
    )))
}

fn all_rank_cuts(
    system: &ConstraintSystem,
    side: CutSide,
    support: ElementSet,
) -> Result<Vec<Cut>> {
    let mut cuts = Vec::new();
    for s in support.subsets().filter(|s| !s.is_empty()) {
        let rank = system.rank(&s)?;
        if rank < s.len() {
            cuts.push(Cut {
                side,
                members: s,
                rank,
            });
        }
    }
    Ok(cuts)
}

/// Solves the relaxation with every rank constraint of both systems written
/// out up front. Independent of the separation oracles; capped at
/// [`FULL_ENUMERATION_CAP`] decision elements.
pub fn solve_probing_lp_enumerated(instance: &ProbingInstance) -> Result<FractionalSolution> {
    let mut model = Model::new(instance);
    if model.vars.len() > FULL_ENUMERATION_CAP {
        return Err(ProbingError::capability(format!(
            "full enumeration of {} elements exceeds {FULL_ENUMERATION_CAP}",
            model.vars.len()
        )));
    }
    let support: ElementSet = model.vars.iter().collect();
    let mut cuts = all_rank_cuts(&instance.inner, CutSide::Inner, support)?;
    cuts.extend(all_rank_cuts(&instance.outer, CutSide::Outer, support)?);
    for cut in cuts {
        model.add_cut(cut);
    }
    let (y, _) = model.solve()?;
    Ok(model.finish(y, 1))
}

/// True when the LP value upper-bounds the optimal adaptive value.
pub fn check_claim_lp_opt(lp_value: f64, opt_value: f64) -> bool {
    lp_value >= opt_value - LP_OPT_TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::CapacitySet;
    use crate::instance::Element;

    fn uniform(n: usize, r: usize) -> ConstraintSystem {
        ConstraintSystem::uniform(n, r).unwrap()
    }

    #[test]
    fn single_element_is_fully_probed() {
        let inst = ProbingInstance::new(vec![Element::new(1.0, 1.0)], uniform(1, 1), uniform(1, 1))
            .unwrap();
        let sol = solve_probing_lp(&inst).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-9);
        assert!((sol.y[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn inner_rank_binds() {
        let inst = ProbingInstance::new(
            vec![Element::new(1.0, 1.0), Element::new(1.0, 1.0)],
            uniform(2, 1),
            uniform(2, 2),
        )
        .unwrap();
        let sol = solve_probing_lp(&inst).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-9);
        assert!(sol.x.iter().sum::<f64>() <= 1.0 + 1e-9);
    }

    /// Vertex enumeration of `max y1 + y2 + y3` over the three-copy auction
    /// instance (p = (1, 1, 0.5), w = (0, 1, 2)): the only constraints on the
    /// value-bearing copies are `y1 + y2 <= 1` (outer) and
    /// `y1 + 0.5 y2 <= 1` (inner), whose vertices are (0,0), (1,0), (0,1).
    #[test]
    fn auction_instance_matches_vertex_enumeration() {
        let vertices = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let oracle = vertices
            .iter()
            .map(|[y1, y2]| 1.0 * 1.0 * y1 + 2.0 * 0.5 * y2)
            .fold(f64::MIN, f64::max);
        assert_eq!(oracle, 1.0);

        let outer = ConstraintSystem::partition(3, vec![CapacitySet::new([0, 1, 2], 1)]).unwrap();
        let inst = ProbingInstance::new(
            vec![
                Element::new(0.0, 1.0),
                Element::new(1.0, 1.0),
                Element::new(2.0, 0.5),
            ],
            uniform(3, 1),
            outer,
        )
        .unwrap();
        let sol = solve_probing_lp(&inst).unwrap();
        assert!((sol.objective - oracle).abs() < 1e-9);
        let full = solve_probing_lp_enumerated(&inst).unwrap();
        assert!((full.objective - oracle).abs() < 1e-9);
    }

    #[test]
    fn zero_probability_elements_are_dropped() {
        let inst = ProbingInstance::new(
            vec![Element::new(5.0, 0.0), Element::new(1.0, 0.5)],
            uniform(2, 1),
            uniform(2, 1),
        )
        .unwrap();
        let sol = solve_probing_lp(&inst).unwrap();
        assert_eq!(sol.y[0], 0.0);
        assert!((sol.objective - 0.5).abs() < 1e-9);
    }

    #[test]
    fn claim_check_examples() {
        assert!(check_claim_lp_opt(1.0, 1.0));
        assert!(check_claim_lp_opt(0.95, 0.95));
        assert!(!check_claim_lp_opt(0.9, 1.0));
    }
}
