//! Dual certificates for the unweighted probing LP.
//!
//! Primal: `max Σ p_e y_e` s.t. `Σ_{e∈S} p_e y_e <= r_in(S)`, `Σ_{e∈S} y_e <= r_out(S)`.
//! Dual: `min Σ r_in(S) α(S) + Σ r_out(S) β(S)` s.t. for every element
//! `p_e Σ_{S∋e} α(S) + Σ_{S∋e} β(S) >= p_e`, with `α, β >= 0`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{ProbingError, Result};
use crate::instance::ProbingInstance;
use crate::set::ElementSet;

/// Tolerance on non-negativity and covering constraints.
pub const DUAL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DualCertificate {
    pub alpha: BTreeMap<ElementSet, f64>,
    pub beta: BTreeMap<ElementSet, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualCheck {
    pub feasible: bool,
    pub value: f64,
    /// Smallest covering slack over all elements (negative when infeasible).
    pub min_slack: f64,
}

impl DualCertificate {
    pub fn add_alpha(&mut self, set: ElementSet, weight: f64) {
        *self.alpha.entry(set).or_insert(0.0) += weight;
    }

    pub fn add_beta(&mut self, set: ElementSet, weight: f64) {
        *self.beta.entry(set).or_insert(0.0) += weight;
    }

    /// `Σ_i λ_i · cert_i`, the certificate of a convex combination.
    pub fn combine<'a>(parts: impl IntoIterator<Item = (f64, &'a DualCertificate)>) -> Self {
        let mut out = DualCertificate::default();
        for (lambda, cert) in parts {
            for (&s, &a) in &cert.alpha {
                out.add_alpha(s, lambda * a);
            }
            for (&s, &b) in &cert.beta {
                out.add_beta(s, lambda * b);
            }
        }
        out
    }

    /// Dual objective `Σ r_in(S) α(S) + Σ r_out(S) β(S)`.
    pub fn value(&self, instance: &ProbingInstance) -> Result<f64> {
        let mut total = 0.0;
        for (s, &a) in &self.alpha {
            if a != 0.0 {
                total += instance.inner.rank(s)? as f64 * a;
            }
        }
        for (s, &b) in &self.beta {
            if b != 0.0 {
                total += instance.outer.rank(s)? as f64 * b;
            }
        }
        Ok(total)
    }
}

/// Verifies non-negativity and every covering constraint, and evaluates the
/// dual objective with the instance's rank oracles.
pub fn check_dual(certificate: &DualCertificate, instance: &ProbingInstance) -> Result<DualCheck> {
    let n = instance.len();
    let universe = ElementSet::full(n);
    for s in certificate.alpha.keys().chain(certificate.beta.keys()) {
        if !s.is_subset(&universe) {
            return Err(ProbingError::domain(format!(
                "certificate set {s:?} is not inside the universe"
            )));
        }
    }
    let nonnegative = certificate
        .alpha
        .values()
        .chain(certificate.beta.values())
        .all(|&w| w >= -DUAL_TOL);
    let mut alpha_cover = vec![0.0; n];
    let mut beta_cover = vec![0.0; n];
    for (s, &a) in &certificate.alpha {
        for e in s.iter() {
            alpha_cover[e] += a;
        }
    }
    for (s, &b) in &certificate.beta {
        for e in s.iter() {
            beta_cover[e] += b;
        }
    }
    let min_slack = (0..n)
        .map(|e| {
            let p = instance.p(e);
            p * alpha_cover[e] + beta_cover[e] - p
        })
        .fold(f64::INFINITY, f64::min);
    let min_slack = if n == 0 { 0.0 } else { min_slack };
    Ok(DualCheck {
        feasible: nonnegative && min_slack >= -DUAL_TOL,
        value: certificate.value(instance)?,
        min_slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::ConstraintSystem;
    use crate::instance::Element;

    fn instance(ps: &[f64]) -> ProbingInstance {
        let n = ps.len();
        ProbingInstance::new(
            ps.iter().map(|&p| Element::new(1.0, p)).collect(),
            ConstraintSystem::uniform(n, 1).unwrap(),
            ConstraintSystem::uniform(n, n).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn empty_certificate_covers_zero_probabilities() {
        let check = check_dual(&DualCertificate::default(), &instance(&[0.0, 0.0])).unwrap();
        assert!(check.feasible);
        assert_eq!(check.value, 0.0);
    }

    #[test]
    fn empty_certificate_fails_positive_probabilities() {
        let check = check_dual(&DualCertificate::default(), &instance(&[0.0, 0.4])).unwrap();
        assert!(!check.feasible);
    }

    #[test]
    fn alpha_on_ground_set_is_feasible() {
        let inst = instance(&[0.3, 0.9]);
        let mut cert = DualCertificate::default();
        cert.add_alpha(ElementSet::full(2), 1.0);
        let check = check_dual(&cert, &inst).unwrap();
        assert!(check.feasible);
        assert_eq!(check.value, 1.0);
    }

    #[test]
    fn negative_weights_are_infeasible() {
        let inst = instance(&[0.5]);
        let mut cert = DualCertificate::default();
        cert.add_beta(ElementSet::full(1), 2.0);
        cert.add_alpha(ElementSet::full(1), -0.5);
        assert!(!check_dual(&cert, &inst).unwrap().feasible);
    }
}
