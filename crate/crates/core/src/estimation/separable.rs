//! Likelihood maximization over mixtures of product states.
//!
//! Fully corrective Frank-Wolfe: each round adds the product ket maximizing
//! `<ab|R|ab>`, line-searches its weight, refits all weights by EM and then
//! nudges every ket along its local gradient. The LMO value doubles as the
//! stopping certificate described in the parent module.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::Outcomes;
use crate::error::{Error, Result};
use crate::measurement::Dataset;
use crate::qcore::{top_eigvec2, DensityMatrix, Ket, Ket2, Ket4, Mat2, Mat4, C64, ONE, ZERO};

/// Maximum number of product terms.
pub const SEPARABLE_TERMS: usize = 20;

const MAX_ROUNDS: usize = 3000;
const EM_SWEEPS: usize = 8;
const LMO_ALTERNATIONS: usize = 60;
const RANDOM_SEEDS: usize = 2;
const INITIAL_TERMS: usize = 4;
const PRUNE_BELOW: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct SeparableAnsatz {
    pub weights: Vec<f64>,
    pub kets: Vec<(Ket2, Ket2)>,
}

impl SeparableAnsatz {
    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn state(&self) -> DensityMatrix {
        let mut m = Mat4::zeros();
        for (w, (a, b)) in self.weights.iter().zip(&self.kets) {
            m = m + a.kron(b).projector().scale_re(*w);
        }
        DensityMatrix::from_psd_unchecked(m.hermitian_part().scale_re(1.0 / m.trace().re))
    }
}

/// Best separable log-likelihood over `restarts` seeded starts. A restart
/// counts as converged once `max <ab|R|ab> - 1 < tol`.
pub fn ml_separable(d: &Dataset, restarts: usize, tol: f64) -> Result<(SeparableAnsatz, f64)> {
    ml_separable_with(d, restarts, tol, 0)
}

pub fn ml_separable_with(
    d: &Dataset,
    restarts: usize,
    tol: f64,
    seed: u64,
) -> Result<(SeparableAnsatz, f64)> {
    let fit = search(d, restarts, tol, seed, None);
    if fit.status == Status::Exhausted {
        return Err(Error::NotConverged(fit.rounds));
    }
    Ok((fit.ansatz, fit.log_likelihood))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Status {
    Converged,
    /// Stopped because the certified interval cleared the target level.
    Decided,
    Exhausted,
}

pub(crate) struct Fit {
    pub ansatz: SeparableAnsatz,
    pub log_likelihood: f64,
    /// Upper bound on the separable maximum, exact if the LMO is global.
    pub upper_bound: f64,
    pub status: Status,
    pub rounds: usize,
}

/// Runs restarts until one converges. With `level`, a restart also stops as
/// soon as its interval `[ll, upper]` lies entirely on one side of `level`.
pub(crate) fn search(d: &Dataset, restarts: usize, tol: f64, seed: u64, level: Option<f64>) -> Fit {
    let data = Outcomes::new(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<Fit> = None;
    let mut rounds = 0;
    for _ in 0..restarts.max(1) {
        let mut fit = Solver::new(&data, &mut rng).run(tol, level, &mut rng);
        rounds += fit.rounds;
        let done = fit.status != Status::Exhausted;
        let better = best.as_ref().is_none_or(|b| {
            fit.log_likelihood > b.log_likelihood || (done && b.status == Status::Exhausted)
        });
        if better {
            if let Some(b) = &best {
                fit.upper_bound = fit.upper_bound.min(b.upper_bound.max(fit.log_likelihood));
            }
            best = Some(fit);
        }
        if done {
            break;
        }
    }
    let mut fit = best.expect("at least one restart");
    fit.rounds = rounds;
    fit
}

struct Atom {
    weight: f64,
    a: Ket2,
    b: Ket2,
    q: Vec<f64>,
}

struct Solver<'a> {
    data: &'a Outcomes,
    atoms: Vec<Atom>,
    p: Vec<f64>,
}

fn random_qubit<R: Rng>(rng: &mut R) -> Ket2 {
    let mut z = [ZERO; 2];
    for c in z.iter_mut() {
        *c = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    }
    Ket::new(z).unwrap_or_else(|_| Ket::basis(0))
}

fn normalized(v: [C64; 2]) -> Option<Ket2> {
    Ket::new(v).ok()
}

/// The six Pauli eigenstates.
fn pauli_kets() -> [Ket2; 6] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = |x: f64| C64::new(x, 0.0);
    [
        Ket([ONE, ZERO]),
        Ket([ZERO, ONE]),
        Ket([r(h), r(h)]),
        Ket([r(h), r(-h)]),
        Ket([r(h), C64::new(0.0, h)]),
        Ket([r(h), C64::new(0.0, -h)]),
    ]
}

/// `<b|_2 R |b>_2`, an operator on the first qubit.
fn contract_second(r: &Mat4, b: &Ket2) -> Mat2 {
    let mut m = Mat2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let mut s = ZERO;
            for k in 0..2 {
                for l in 0..2 {
                    s += b.0[k].conj() * r.0[2 * i + k][2 * j + l] * b.0[l];
                }
            }
            m.0[i][j] = s;
        }
    }
    m
}

/// `<a|_1 R |a>_1`, an operator on the second qubit.
fn contract_first(r: &Mat4, a: &Ket2) -> Mat2 {
    let mut m = Mat2::zeros();
    for k in 0..2 {
        for l in 0..2 {
            let mut s = ZERO;
            for i in 0..2 {
                for j in 0..2 {
                    s += a.0[i].conj() * r.0[2 * i + k][2 * j + l] * a.0[j];
                }
            }
            m.0[k][l] = s;
        }
    }
    m
}

/// Local maximum of `<ab|R|ab>` by alternating top eigenvectors.
fn polish_lmo(r: &Mat4, mut a: Ket2, mut b: Ket2) -> (f64, Ket2, Ket2) {
    let mut val = f64::NEG_INFINITY;
    for _ in 0..LMO_ALTERNATIONS {
        b = top_eigvec2(&contract_first(r, &a)).1;
        let (v, na) = top_eigvec2(&contract_second(r, &b));
        a = na;
        if v - val <= 1e-15 * v.abs().max(1.0) {
            val = v.max(val);
            break;
        }
        val = v;
    }
    (val, a, b)
}

impl<'a> Solver<'a> {
    fn new<R: Rng>(data: &'a Outcomes, rng: &mut R) -> Self {
        let mut s = Solver {
            data,
            atoms: Vec::new(),
            p: vec![0.0; data.kets.len()],
        };
        let w = 1.0 / INITIAL_TERMS as f64;
        for _ in 0..INITIAL_TERMS {
            let (a, b) = (random_qubit(rng), random_qubit(rng));
            let q = s.atom_probs(&a.kron(&b));
            s.atoms.push(Atom { weight: w, a, b, q });
        }
        s.refresh();
        s
    }

    fn atom_probs(&self, v: &Ket4) -> Vec<f64> {
        self.data
            .kets
            .iter()
            .map(|k| k.inner(v).norm_sqr())
            .collect()
    }

    fn refresh(&mut self) {
        for (j, pj) in self.p.iter_mut().enumerate() {
            *pj = self
                .atoms
                .iter()
                .map(|a| a.weight * a.q[j])
                .sum::<f64>()
                .max(super::PROB_FLOOR);
        }
    }

    fn ll(&self, p: &[f64]) -> f64 {
        self.data.log_likelihood_of(p)
    }

    fn lmo<R: Rng>(&self, r: &Mat4, rng: &mut R) -> (f64, Ket2, Ket2) {
        let mut best = (f64::NEG_INFINITY, Ket::basis(0), Ket::basis(0));
        let mut consider = |cand: (f64, Ket2, Ket2)| {
            if cand.0 > best.0 {
                best = cand;
            }
        };
        for a in pauli_kets() {
            consider(polish_lmo(r, a, a));
        }
        for atom in &self.atoms {
            consider(polish_lmo(r, atom.a, atom.b));
        }
        for _ in 0..RANDOM_SEEDS {
            let a = random_qubit(rng);
            consider(polish_lmo(r, a, a));
        }
        best
    }

    /// Maximizes the concave `sum n_k ln((1-g) p_k + g q_k)` over `g` in [0, 1].
    fn line_search(&self, q: &[f64]) -> f64 {
        let slope = |g: f64| -> f64 {
            self.data
                .counts
                .iter()
                .zip(&self.p)
                .zip(q)
                .map(|((n, p), q)| n * (q - p) / ((1.0 - g) * p + g * q).max(super::PROB_FLOOR))
                .sum()
        };
        if slope(1.0) >= 0.0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn em(&mut self) {
        let inv_total = 1.0 / self.data.total;
        for _ in 0..EM_SWEEPS {
            for atom in self.atoms.iter_mut() {
                let g: f64 = self
                    .data
                    .counts
                    .iter()
                    .zip(&self.p)
                    .zip(&atom.q)
                    .map(|((n, p), q)| n * q / p)
                    .sum();
                atom.weight *= g * inv_total;
            }
            let s: f64 = self.atoms.iter().map(|a| a.weight).sum();
            for atom in self.atoms.iter_mut() {
                atom.weight /= s;
            }
            self.refresh();
        }
        self.atoms.retain(|a| a.weight > PRUNE_BELOW);
        let s: f64 = self.atoms.iter().map(|a| a.weight).sum();
        for atom in self.atoms.iter_mut() {
            atom.weight /= s;
        }
        self.refresh();
    }

    /// One ascent step per ket with step halving on any decrease.
    fn polish_kets(&mut self) {
        let mut ll = self.ll(&self.p);
        for i in 0..self.atoms.len() {
            for side in 0..2 {
                let r = self.data.r_operator(&self.p);
                let atom = &self.atoms[i];
                let (m, v) = if side == 0 {
                    (contract_second(&r, &atom.b), atom.a)
                } else {
                    (contract_first(&r, &atom.a), atom.b)
                };
                let mv = m.apply(&v);
                let mean = v.inner(&mv);
                let g = [mv.0[0] - mean * v.0[0], mv.0[1] - mean * v.0[1]];
                let gnorm = (g[0].norm_sqr() + g[1].norm_sqr()).sqrt();
                if gnorm < 1e-14 {
                    continue;
                }
                let mut eta = 1.0 / mean.re.abs().max(1e-12);
                while eta > 1e-10 {
                    let Some(nv) = normalized([v.0[0] + g[0] * eta, v.0[1] + g[1] * eta]) else {
                        break;
                    };
                    let (na, nb) = if side == 0 {
                        (nv, atom.b)
                    } else {
                        (atom.a, nv)
                    };
                    let nq = self.atom_probs(&na.kron(&nb));
                    let w = atom.weight;
                    let np: Vec<f64> = self
                        .p
                        .iter()
                        .zip(&atom.q)
                        .zip(&nq)
                        .map(|((p, oq), q)| (p + w * (q - oq)).max(super::PROB_FLOOR))
                        .collect();
                    let nll = self.ll(&np);
                    if nll >= ll {
                        let atom = &mut self.atoms[i];
                        atom.a = na;
                        atom.b = nb;
                        atom.q = nq;
                        self.p = np;
                        ll = nll;
                        break;
                    }
                    eta *= 0.5;
                }
            }
        }
        self.refresh();
    }

    fn ansatz(&self) -> SeparableAnsatz {
        SeparableAnsatz {
            weights: self.atoms.iter().map(|a| a.weight).collect(),
            kets: self.atoms.iter().map(|a| (a.a, a.b)).collect(),
        }
    }

    fn run<R: Rng>(mut self, tol: f64, level: Option<f64>, rng: &mut R) -> Fit {
        let n = self.data.total;
        let mut upper = f64::INFINITY;
        let mut status = Status::Exhausted;
        let mut rounds = 0;
        if self.data.kets.is_empty() {
            return Fit {
                ansatz: self.ansatz(),
                log_likelihood: 0.0,
                upper_bound: 0.0,
                status: Status::Converged,
                rounds,
            };
        }
        while rounds < MAX_ROUNDS {
            let ll = self.ll(&self.p);
            let r = self.data.r_operator(&self.p);
            let (val, a, b) = self.lmo(&r, rng);
            let gap = val - 1.0;
            upper = upper.min(ll + n * gap.max(0.0));
            if gap < tol {
                status = Status::Converged;
                break;
            }
            if let Some(level) = level {
                if ll >= level || upper < level {
                    status = Status::Decided;
                    break;
                }
            }
            rounds += 1;

            if self.atoms.len() >= SEPARABLE_TERMS {
                let (imin, _) = self
                    .atoms
                    .iter()
                    .enumerate()
                    .min_by(|x, y| x.1.weight.total_cmp(&y.1.weight))
                    .expect("nonempty");
                self.atoms.swap_remove(imin);
                let s: f64 = self.atoms.iter().map(|a| a.weight).sum();
                for atom in self.atoms.iter_mut() {
                    atom.weight /= s;
                }
                self.refresh();
            }
            let q = self.atom_probs(&a.kron(&b));
            let g = self.line_search(&q);
            for atom in self.atoms.iter_mut() {
                atom.weight *= 1.0 - g;
            }
            self.atoms.push(Atom { weight: g, a, b, q });
            self.refresh();
            self.em();
            self.polish_kets();
        }
        let ll = self.ll(&self.p);
        Fit {
            ansatz: self.ansatz(),
            log_likelihood: ll,
            upper_bound: upper.max(ll),
            status,
            rounds,
        }
    }
}
