//! Bayesian adversary: posterior over true locations, the distance-optimal
//! point estimate, and the two objectives (expected inference error and
//! quality loss).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::mechanism::ObfuscationMatrix;

/// Objective values of one partition. Both are in distance units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePair {
    pub qloss: f64,
    pub exp_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub observed: usize,
    /// `(x, Pr(x | observed))` for every `x` with positive mass, ascending `x`.
    pub probs: Vec<(usize, f64)>,
    /// `Pr(observed) = sum_x pi(x) f(observed | x)`.
    pub evidence: f64,
}

/// `Pr(x | observed)` by Bayes' rule.
pub fn posterior(domain: &Domain, matrix: &ObfuscationMatrix, observed: usize) -> Result<Posterior> {
    if observed >= matrix.len() {
        return Err(Error::InvalidArgument(format!("output index {observed} not in matrix")));
    }
    let joint: Vec<(usize, f64)> = matrix
        .column(observed)
        .iter()
        .map(|&(x, f)| (x, domain.prior()[x] * f))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    let evidence: f64 = joint.iter().map(|p| p.1).sum();
    if !(evidence > 0.0) {
        return Err(Error::UnreachableOutput {
            id: domain.id(observed),
        });
    }
    Ok(Posterior {
        observed,
        probs: joint.into_iter().map(|(x, w)| (x, w / evidence)).collect(),
        evidence,
    })
}

/// The estimate minimizing the posterior-expected distance, with that expected distance.
pub fn optimal_attack(posterior: &Posterior, domain: &Domain) -> (usize, f64) {
    domain.weighted_median(&posterior.probs)
}

/// Per-output attack outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputAttack {
    pub observed: usize,
    pub estimate: usize,
    /// `Pr(observed)`.
    pub evidence: f64,
    /// Conditional expected inference error given `observed`.
    pub conditional_error: f64,
}

/// Optimal attack against every reachable output, ascending by output.
pub fn attack_all(domain: &Domain, matrix: &ObfuscationMatrix) -> Vec<OutputAttack> {
    (0..matrix.len())
        .into_par_iter()
        .filter_map(|o| {
            let post = posterior(domain, matrix, o).ok()?;
            let (estimate, conditional_error) = optimal_attack(&post, domain);
            Some(OutputAttack {
                observed: o,
                estimate,
                evidence: post.evidence,
                conditional_error,
            })
        })
        .collect()
}

/// `sum_{x'} Pr(x') * ExpEr(x')`; unreachable outputs contribute nothing.
pub fn expected_inference_error(domain: &Domain, matrix: &ObfuscationMatrix) -> f64 {
    attack_all(domain, matrix)
        .iter()
        .map(|a| a.evidence * a.conditional_error)
        .sum()
}

/// `sum_x pi(x) sum_{x'} f(x'|x) d(x, x')`.
pub fn quality_loss(domain: &Domain, matrix: &ObfuscationMatrix) -> f64 {
    matrix
        .rows()
        .iter()
        .enumerate()
        .map(|(x, r)| {
            domain.prior()[x]
                * r.support
                    .iter()
                    .zip(&r.probs)
                    .map(|(&o, &p)| p * domain.dist(x, o))
                    .sum::<f64>()
        })
        .sum()
}

/// Smallest conditional expected inference error over reachable outputs.
pub fn min_conditional_error(domain: &Domain, matrix: &ObfuscationMatrix) -> f64 {
    attack_all(domain, matrix)
        .iter()
        .map(|a| a.conditional_error)
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub qloss: f64,
    pub exp_err: f64,
    pub min_conditional_error: f64,
}

impl Evaluation {
    pub fn objectives(&self) -> ObjectivePair {
        ObjectivePair {
            qloss: self.qloss,
            exp_err: self.exp_err,
        }
    }
}

/// Both objectives and the distortion floor from a single attack pass.
pub fn evaluate(domain: &Domain, matrix: &ObfuscationMatrix) -> Evaluation {
    let attacks = attack_all(domain, matrix);
    Evaluation {
        qloss: quality_loss(domain, matrix),
        exp_err: attacks.iter().map(|a| a.evidence * a.conditional_error).sum(),
        min_conditional_error: attacks
            .iter()
            .map(|a| a.conditional_error)
            .fold(f64::INFINITY, f64::min),
    }
}
