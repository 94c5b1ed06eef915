use super::{identity_plus, EstimationResult, Outcomes};
use crate::measurement::Dataset;
use crate::qcore::{eig_hermitian, DensityMatrix, Mat4};

/// Entropy weight of the regularized objective.
pub const MLME_LAMBDA: f64 = 1e-3;
pub const MLME_MAX_ITER: usize = 5000;

const INITIAL_STEP: f64 = 0.2;
const MAX_STEP: f64 = 50.0;
const MIN_STEP: f64 = 1e-12;
const EIG_FLOOR: f64 = 1e-300;
const WARM_START_MIXING: f64 = 1e-3;

/// Maximizes `(1/N) ln L(rho) + lambda S(rho)` by the diluted multiplicative
/// ascent `rho <- N[(1 + eps T) rho (1 + eps T)]`, where `T` is the objective
/// gradient minus its expectation. Starts from the maximally mixed state.
pub fn mlme_estimate(d: &Dataset, lambda: f64, tol: f64) -> EstimationResult {
    run(
        d,
        lambda,
        tol,
        MLME_MAX_ITER,
        Mat4::identity().scale_re(0.25),
    )
}

/// Warm-started variant; `start` is blended with a little white noise so the
/// entropy gradient stays finite.
pub fn mlme_estimate_from(
    d: &Dataset,
    lambda: f64,
    tol: f64,
    start: &DensityMatrix,
) -> EstimationResult {
    let s = *start.matrix();
    let init =
        s.scale_re(1.0 - WARM_START_MIXING) + Mat4::identity().scale_re(WARM_START_MIXING / 4.0);
    run(d, lambda, tol, MLME_MAX_ITER, init)
}

struct Point {
    rho: Mat4,
    p: Vec<f64>,
    objective: f64,
    log_rho: Mat4,
    entropy: f64,
}

fn evaluate(data: &Outcomes, lambda: f64, rho: Mat4) -> Point {
    let p = data.probabilities(&rho);
    let spec = eig_hermitian(&rho.hermitian_part()).expect("Hermitian");
    let entropy: f64 = spec
        .eigenvalues
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.ln())
        .sum();
    let log_rho = spec.map(|x| x.max(EIG_FLOOR).ln());
    let data_term = if data.total > 0.0 {
        data.log_likelihood_of(&p) / data.total
    } else {
        0.0
    };
    Point {
        rho,
        p,
        objective: data_term + lambda * entropy,
        log_rho,
        entropy,
    }
}

fn run(d: &Dataset, lambda: f64, tol: f64, max_iter: usize, init: Mat4) -> EstimationResult {
    let data = Outcomes::new(d);
    let mut cur = evaluate(&data, lambda, init);
    let mut eps = INITIAL_STEP;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        // T = (R - <R>) - lambda (ln rho + S)
        let mut t = if data.total > 0.0 {
            data.r_operator(&cur.p)
        } else {
            Mat4::zeros()
        };
        let r_mean = t.trace_product(&cur.rho).re;
        t = t - cur.log_rho.scale_re(lambda);
        for i in 0..4 {
            t.0[i][i] -= r_mean + lambda * cur.entropy;
        }
        let t = t.hermitian_part();
        let stationarity = (t * t).trace_product(&cur.rho).re;
        if stationarity < tol {
            converged = true;
            break;
        }
        let mut accepted = false;
        while eps >= MIN_STEP {
            let a = identity_plus(&t, eps);
            let cand = a * cur.rho * a.adjoint();
            let cand = cand.scale_re(1.0 / cand.trace().re);
            let next = evaluate(&data, lambda, cand);
            if next.objective >= cur.objective {
                cur = next;
                accepted = true;
                eps = (eps * 2.0).min(MAX_STEP);
                break;
            }
            eps *= 0.5;
        }
        iterations += 1;
        if !accepted {
            converged = stationarity < tol.max(1e-9);
            break;
        }
    }

    let estimate = DensityMatrix::from_psd_unchecked(cur.rho);
    let log_likelihood = super::log_likelihood(&estimate, d);
    EstimationResult {
        estimate,
        log_likelihood,
        iterations,
        converged,
        objective: cur.objective,
    }
}
