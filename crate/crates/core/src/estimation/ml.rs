use super::{identity_plus, EstimationResult, Outcomes};
use crate::measurement::Dataset;
use crate::qcore::{eig_hermitian, DensityMatrix, Mat4};

const INITIAL_STEP: f64 = 0.2;
const MAX_STEP: f64 = 50.0;
const MIN_STEP: f64 = 1e-12;
const GAP_CHECK_EVERY: usize = 4;

/// Diluted `R rho R` iteration `rho <- N[(1 + eps T) rho (1 + eps T)]` with
/// `T = R - 1`. The step shrinks on any likelihood decrease and grows after
/// accepted steps. Converged once `lambda_max(R) - 1 < tol`, which bounds the
/// remaining log-likelihood deficit by `N tol`.
pub fn ml_estimate(d: &Dataset, tol: f64, max_iter: usize) -> EstimationResult {
    run(d, tol, max_iter, None)
}

/// Same as [`ml_estimate`], also returning the log-likelihood after every
/// iteration.
pub fn ml_estimate_traced(d: &Dataset, tol: f64, max_iter: usize) -> (EstimationResult, Vec<f64>) {
    let mut trace = Vec::new();
    let r = run(d, tol, max_iter, Some(&mut trace));
    (r, trace)
}

fn run(
    d: &Dataset,
    tol: f64,
    max_iter: usize,
    mut trace: Option<&mut Vec<f64>>,
) -> EstimationResult {
    let data = Outcomes::new(d);
    let mut rho = Mat4::identity().scale_re(0.25);
    if data.kets.is_empty() {
        return EstimationResult {
            estimate: DensityMatrix::maximally_mixed(),
            log_likelihood: 0.0,
            iterations: 0,
            converged: true,
            objective: 0.0,
        };
    }
    let mut p = data.probabilities(&rho);
    let mut ll = data.log_likelihood_of(&p);
    let mut eps = INITIAL_STEP;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        let r = data.r_operator(&p);
        if iterations % GAP_CHECK_EVERY == 0 {
            let lmax = eig_hermitian(&r.hermitian_part()).expect("Hermitian").max();
            if lmax - 1.0 < tol {
                converged = true;
                break;
            }
        }
        let mut t = r;
        for i in 0..4 {
            t.0[i][i] -= 1.0;
        }
        let mut accepted = false;
        while eps >= MIN_STEP {
            let a = identity_plus(&t, eps);
            let cand = a * rho * a.adjoint();
            let tr = cand.trace().re;
            let cand = cand.scale_re(1.0 / tr);
            let cp = data.probabilities(&cand);
            let cll = data.log_likelihood_of(&cp);
            if cll >= ll {
                rho = cand;
                p = cp;
                ll = cll;
                accepted = true;
                eps = (eps * 2.0).min(MAX_STEP);
                break;
            }
            eps *= 0.5;
        }
        iterations += 1;
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(ll);
        }
        if !accepted {
            // No ascent direction left at machine precision.
            let lmax = eig_hermitian(&data.r_operator(&p).hermitian_part())
                .expect("Hermitian")
                .max();
            converged = lmax - 1.0 < tol.max(1e-9);
            break;
        }
    }

    let estimate = DensityMatrix::from_psd_unchecked(rho);
    let log_likelihood = super::log_likelihood(&estimate, d);
    EstimationResult {
        estimate,
        log_likelihood,
        iterations,
        converged,
        objective: ll,
    }
}
