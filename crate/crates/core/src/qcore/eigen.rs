//! Cyclic Jacobi eigensolver for small Hermitian matrices.

use super::matrix::{Ket, Matrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

const OFF_DIAGONAL_THRESHOLD: f64 = 1e-13;
const MAX_SWEEPS: usize = 100;
const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct Spectrum<const N: usize> {
    pub eigenvalues: [f64; N],
    pub eigenvectors: [Ket<N>; N],
}

impl<const N: usize> Spectrum<N> {
    /// `sum_i f(lambda_i) |v_i><v_i|`
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix<N> {
        let mut m = Matrix::zeros();
        for (lam, v) in self.eigenvalues.iter().zip(self.eigenvectors.iter()) {
            let w = f(*lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..N {
                let vi = v.0[i] * w;
                for j in 0..N {
                    m.0[i][j] += vi * v.0[j].conj();
                }
            }
        }
        m
    }

    pub fn reconstruct(&self) -> Matrix<N> {
        self.map(|x| x)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[N - 1]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Diagonalizes `h`, which must be Hermitian to `1e-10` (relative to its norm
/// when the norm exceeds one).
pub fn eig_hermitian<const N: usize>(h: &Matrix<N>) -> Result<Spectrum<N>> {
    let scale = h.frobenius_norm().max(1.0);
    let defect = h.hermitian_defect();
    if defect.is_nan() || defect > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(defect));
    }
    Ok(jacobi(&h.hermitian_part(), scale))
}

fn off_diagonal_norm<const N: usize>(a: &Matrix<N>) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        for j in 0..N {
            if i != j {
                s += a.0[i][j].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn jacobi<const N: usize>(h: &Matrix<N>, scale: f64) -> Spectrum<N> {
    let mut a = *h;
    let mut q = Matrix::<N>::identity();
    let threshold = OFF_DIAGONAL_THRESHOLD * scale;

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) < threshold {
            break;
        }
        for p in 0..N {
            for r in (p + 1)..N {
                let apr = a.0[p][r];
                let mag = apr.norm();
                if mag == 0.0 {
                    continue;
                }
                let phase = apr / mag;
                let app = a.0[p][p].re;
                let arr = a.0[r][r].re;
                let theta = (arr - app) / (2.0 * mag);
                let t = if theta.is_finite() {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                } else {
                    0.0
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // G = diag(1, conj(phase)) . [[c, s], [-s, c]] acting on (p, r)
                let gpp = C64::new(c, 0.0);
                let gpr = C64::new(s, 0.0);
                let grp = phase.conj() * (-s);
                let grr = phase.conj() * c;

                // A <- A G
                for k in 0..N {
                    let akp = a.0[k][p];
                    let akr = a.0[k][r];
                    a.0[k][p] = akp * gpp + akr * grp;
                    a.0[k][r] = akp * gpr + akr * grr;
                }
                // A <- G^dagger A
                for k in 0..N {
                    let apk = a.0[p][k];
                    let ark = a.0[r][k];
                    a.0[p][k] = gpp.conj() * apk + grp.conj() * ark;
                    a.0[r][k] = gpr.conj() * apk + grr.conj() * ark;
                }
                a.0[p][r] = ZERO;
                a.0[r][p] = ZERO;
                a.0[p][p] = C64::new(a.0[p][p].re, 0.0);
                a.0[r][r] = C64::new(a.0[r][r].re, 0.0);
                // Q <- Q G
                for k in 0..N {
                    let qkp = q.0[k][p];
                    let qkr = q.0[k][r];
                    q.0[k][p] = qkp * gpp + qkr * grp;
                    q.0[k][r] = qkp * gpr + qkr * grr;
                }
            }
        }
    }

    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&i, &j| a.0[j][j].re.total_cmp(&a.0[i][i].re));
    let eigenvalues = order.map(|k| a.0[k][k].re);
    let eigenvectors = order.map(|k| {
        let mut v = [ZERO; N];
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = q.0[i][k];
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        Ket(v.map(|z| z / norm))
    });
    Spectrum {
        eigenvalues,
        eigenvectors,
    }
}

/// Eigenvector of the largest eigenvalue of a 2x2 Hermitian matrix, in closed
/// form. Used in tight inner loops where a full Jacobi pass is wasteful.
pub fn top_eigvec2(m: &Matrix<2>) -> (f64, Ket<2>) {
    let a = m.0[0][0].re;
    let d = m.0[1][1].re;
    let b = m.0[0][1];
    let half_diff = 0.5 * (a - d);
    let rad = (half_diff * half_diff + b.norm_sqr()).sqrt();
    let lam = 0.5 * (a + d) + rad;
    let bn = b.norm();
    if bn < 1e-300 {
        return if a >= d {
            (lam, Ket([ONE, ZERO]))
        } else {
            (lam, Ket([ZERO, ONE]))
        };
    }
    // (a - lam) x + b y = 0 ; pick the better-conditioned row.
    let v = if half_diff >= 0.0 {
        [C64::new(lam - d, 0.0), b.conj()]
    } else {
        [b, C64::new(lam - a, 0.0)]
    };
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    (lam, Ket([v[0] / n, v[1] / n]))
}
