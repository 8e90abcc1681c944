use crate::constraint::ConstraintSystem;
use crate::error::{ProbingError, Result};
use crate::set::{ElementId, ElementSet};

#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    pub weight: f64,
    /// Probability the element is active.
    pub p: f64,
    pub deadline: Option<u32>,
}

impl Element {
    pub fn new(weight: f64, p: f64) -> Self {
        Element {
            weight,
            p,
            deadline: None,
        }
    }

    pub fn with_deadline(mut self, deadline: u32) -> Self {
        self.deadline = Some(deadline);
        self
    }
}

/// A universe of stochastic elements with an inner constraint on the chosen
/// set and an outer constraint on the probed set.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbingInstance {
    pub elements: Vec<Element>,
    pub inner: ConstraintSystem,
    pub outer: ConstraintSystem,
}

impl ProbingInstance {
    pub fn new(
        elements: Vec<Element>,
        inner: ConstraintSystem,
        outer: ConstraintSystem,
    ) -> Result<Self> {
        let n = elements.len();
        if inner.universe() != n || outer.universe() != n {
            return Err(ProbingError::domain(format!(
                "constraint universes ({}, {}) do not match {n} elements",
                inner.universe(),
                outer.universe()
            )));
        }
        for (e, el) in elements.iter().enumerate() {
            if !(0.0..=1.0).contains(&el.p) {
                return Err(ProbingError::domain(format!(
                    "element {e} has probability {} outside [0,1]",
                    el.p
                )));
            }
            if !(el.weight >= 0.0 && el.weight.is_finite()) {
                return Err(ProbingError::domain(format!(
                    "element {e} has invalid weight {}",
                    el.weight
                )));
            }
            if el.deadline == Some(0) {
                return Err(ProbingError::domain(format!(
                    "element {e} has deadline 0; deadlines start at 1"
                )));
            }
        }
        Ok(ProbingInstance {
            elements,
            inner,
            outer,
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn p(&self, e: ElementId) -> f64 {
        self.elements[e].p
    }

    pub fn weight(&self, e: ElementId) -> f64 {
        self.elements[e].weight
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.elements.iter().map(|e| e.p).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.elements.iter().map(|e| e.weight).collect()
    }

    pub fn weight_of(&self, s: &ElementSet) -> f64 {
        s.iter().map(|e| self.elements[e].weight).sum()
    }

    /// Deadlines of every element, or an error naming the first element without one.
    pub fn deadlines(&self) -> Result<Vec<u32>> {
        self.elements
            .iter()
            .enumerate()
            .map(|(e, el)| {
                el.deadline
                    .ok_or_else(|| ProbingError::domain(format!("element {e} has no deadline")))
            })
            .collect()
    }

    /// True when `e` may be probed next given probed set `q` and chosen set `s`.
    #[inline]
    pub fn can_probe(&self, q: ElementSet, s: ElementSet, e: ElementId) -> bool {
        !q.contains(e) && self.outer.independent(q.with(e)) && self.inner.independent(s.with(e))
    }

    /// Same instance with every weight set to one.
    pub fn unweighted(&self) -> ProbingInstance {
        let mut out = self.clone();
        for el in &mut out.elements {
            el.weight = 1.0;
        }
        out
    }
}
