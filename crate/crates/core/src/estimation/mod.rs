//! Likelihood machinery over witness-family data.
//!
//! The unconstrained and separable maximizers both stop on a concavity
//! certificate: for the normalized operator `R = sum_k (n_k / N) / p_k |k><k|`,
//! every state `sigma` in the search set satisfies
//! `L(sigma) <= L(rho) + N (<R>_sigma - 1)`, so once the maximum of `<R>` over
//! the set is within `tol` of one, `L(rho)` is within `N tol` of the optimum.

mod ml;
mod mlme;
mod separable;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use ml::{ml_estimate, ml_estimate_traced};
pub use mlme::{mlme_estimate, mlme_estimate_from, MLME_LAMBDA};
pub use separable::{ml_separable, ml_separable_with, SeparableAnsatz, SEPARABLE_TERMS};

use crate::measurement::Dataset;
use crate::qcore::{min_pt_eigenvalue, DensityMatrix, Ket4, Mat4, C64};

/// Probabilities below this are floored inside optimizers.
pub(crate) const PROB_FLOOR: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq)]
pub struct EstimationResult {
    pub estimate: DensityMatrix,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final value of the optimized objective.
    pub objective: f64,
}

impl EstimationResult {
    /// `key=value` diagnostics.
    pub fn diagnostics(&self) -> String {
        format!(
            "iterations={}\nconverged={}\nlog_likelihood={}\nobjective={}\n",
            self.iterations, self.converged, self.log_likelihood, self.objective
        )
    }
}

/// Nonzero-count outcomes flattened to `(ket, count)` pairs.
#[derive(Clone, Debug)]
pub(crate) struct Outcomes {
    pub kets: Vec<Ket4>,
    pub counts: Vec<f64>,
    pub total: f64,
}

impl Outcomes {
    pub fn new(d: &Dataset) -> Self {
        let mut kets = Vec::new();
        let mut counts = Vec::new();
        for r in d.records() {
            for (k, &n) in r.family.kets().iter().zip(r.counts.iter()) {
                if n > 0 {
                    kets.push(*k);
                    counts.push(n as f64);
                }
            }
        }
        let total = counts.iter().sum();
        Outcomes {
            kets,
            counts,
            total,
        }
    }

    pub fn probabilities(&self, rho: &Mat4) -> Vec<f64> {
        self.kets
            .iter()
            .map(|k| rho.expectation(k).max(PROB_FLOOR))
            .collect()
    }

    pub fn log_likelihood_of(&self, p: &[f64]) -> f64 {
        self.counts.iter().zip(p).map(|(n, p)| n * p.ln()).sum()
    }

    /// `sum_k (n_k / N) / p_k |k><k|`
    pub fn r_operator(&self, p: &[f64]) -> Mat4 {
        let mut r = Mat4::zeros();
        for ((k, n), p) in self.kets.iter().zip(&self.counts).zip(p) {
            let w = n / (self.total * p);
            for i in 0..4 {
                let ki = k.0[i] * w;
                for j in 0..4 {
                    r.0[i][j] += ki * k.0[j].conj();
                }
            }
        }
        r
    }
}

/// `sum n_j ln p_j(rho)` over all records; `-inf` if an observed outcome has
/// zero probability.
pub fn log_likelihood(rho: &DensityMatrix, d: &Dataset) -> f64 {
    let mut total = 0.0;
    for r in d.records() {
        for (k, &n) in r.family.kets().iter().zip(r.counts.iter()) {
            if n == 0 {
                continue;
            }
            let p = rho.overlap(k);
            if p <= 0.0 {
                return f64::NEG_INFINITY;
            }
            total += n as f64 * p.ln();
        }
    }
    total
}

/// Empirical-frequency bound `sum n_j ln(n_j / n)`, attained only when the
/// frequencies are jointly realizable.
pub fn frequency_bound(d: &Dataset) -> f64 {
    d.records()
        .iter()
        .map(|r| {
            let n = r.n_total() as f64;
            r.counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| c as f64 * (c as f64 / n).ln())
                .sum::<f64>()
        })
        .sum()
}

/// Peres-Horodecki test; exact for two qubits.
pub fn ppt_separable(rho: &DensityMatrix, tol: f64) -> bool {
    min_pt_eigenvalue(rho) >= -tol
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Conclusion {
    Entangled,
    Inconclusive,
}

impl fmt::Display for Conclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conclusion::Entangled => write!(f, "Entangled"),
            Conclusion::Inconclusive => write!(f, "Inconclusive"),
        }
    }
}

/// Default likelihood-ratio margin in natural-log units.
pub const DEFAULT_DELTA: f64 = 1.0;

#[derive(Clone, Debug)]
pub struct SetCheck {
    pub conclusion: Conclusion,
    pub log_l_max: f64,
    /// Best separable value found; exact only when the search converged.
    pub log_l_sep: f64,
    /// Certified upper bound on the separable maximum.
    pub log_l_sep_upper: f64,
    /// Set when either optimizer failed to certify convergence.
    pub flagged: bool,
}

impl SetCheck {
    pub fn gap(&self) -> f64 {
        self.log_l_max - self.log_l_sep
    }
}

/// Solver settings for [`ml_set_check_with`].
#[derive(Clone, Copy, Debug)]
pub struct SetCheckOptions {
    pub delta: f64,
    /// Target absolute accuracy of both log-likelihood maxima.
    pub accuracy: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SetCheckOptions {
    fn default() -> Self {
        SetCheckOptions {
            delta: DEFAULT_DELTA,
            accuracy: 1e-3,
            max_iter: 20_000,
            restarts: 5,
            seed: 0,
        }
    }
}

/// Entangled iff no separable state comes within `delta` of the maximal
/// log-likelihood. Never concludes separability.
pub fn ml_set_check(d: &Dataset) -> SetCheck {
    ml_set_check_with(d, &SetCheckOptions::default())
}

pub fn ml_set_check_with(d: &Dataset, opts: &SetCheckOptions) -> SetCheck {
    ml_set_check_deltas(d, opts, &[opts.delta])
        .pop()
        .expect("one margin")
}

/// One check per margin in `deltas`, sharing the unconstrained fit.
/// `opts.delta` is ignored.
pub fn ml_set_check_deltas(d: &Dataset, opts: &SetCheckOptions, deltas: &[f64]) -> Vec<SetCheck> {
    let n = d.n_total().max(1) as f64;
    let tol = opts.accuracy / n;
    let ml = ml_estimate(d, tol, opts.max_iter);
    deltas
        .iter()
        .map(|&delta| {
            // The separable search may stop as soon as its certified interval
            // settles which side of `L_max - delta` the separable maximum is on.
            let fit = separable::search(
                d,
                opts.restarts,
                tol,
                opts.seed,
                Some(ml.log_likelihood - delta),
            );
            // The separable set is a subset; a larger separable value means the
            // unconstrained optimizer stopped short.
            let log_l_max = ml.log_likelihood.max(fit.log_likelihood);
            let flagged = !ml.converged || fit.status == separable::Status::Exhausted;
            // Both sides stay valid bounds without convergence: the fitted
            // maximum never exceeds the true one, the upper bound never falls
            // below the separable optimum.
            let conclusion = if log_l_max - fit.upper_bound > delta {
                Conclusion::Entangled
            } else {
                Conclusion::Inconclusive
            };
            SetCheck {
                conclusion,
                log_l_max,
                log_l_sep: fit.log_likelihood,
                log_l_sep_upper: fit.upper_bound,
                flagged,
            }
        })
        .collect()
}

pub(crate) fn identity_plus(t: &Mat4, eps: f64) -> Mat4 {
    let mut a = t.scale(C64::new(eps, 0.0));
    for i in 0..4 {
        a.0[i][i] += C64::new(1.0, 0.0);
    }
    a
}
