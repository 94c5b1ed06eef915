//! Entanglement and distance functionals on two-qubit states.

use super::density::DensityMatrix;
use super::eigen::eig_hermitian;
use super::matrix::{pauli_y, Mat4};
use crate::error::{Error, Result};

/// Four-outcome probability vector.
pub type Prob4 = [f64; 4];

const NORMALIZATION_TOL: f64 = 1e-9;

pub fn validate_prob4(p: &Prob4) -> Result<()> {
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "{p:?} has a negative or non-finite entry"
        )));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidDistribution(format!("{p:?} sums to {s}")));
    }
    Ok(())
}

/// Transposes the second qubit: entry `(a b, a' b')` moves to `(a b', a' b)`.
pub fn partial_transpose(m: &Mat4) -> Mat4 {
    let mut out = Mat4::zeros();
    for a in 0..2 {
        for b in 0..2 {
            for a2 in 0..2 {
                for b2 in 0..2 {
                    out.0[2 * a + b][2 * a2 + b2] = m.0[2 * a + b2][2 * a2 + b];
                }
            }
        }
    }
    out
}

pub fn min_pt_eigenvalue(rho: &DensityMatrix) -> f64 {
    eig_hermitian(&partial_transpose(rho.matrix()))
        .expect("partial transpose of a Hermitian matrix is Hermitian")
        .min()
}

// Eigenvalues at rounding level are zeroed so rank-deficient inputs do not
// pick up sqrt(1e-17)-sized spurious contributions.
const ROUNDING_FLOOR: f64 = 1e-15;

fn clipped_sqrt(x: f64) -> f64 {
    if x > ROUNDING_FLOOR {
        x.sqrt()
    } else {
        0.0
    }
}

fn psd_sqrt(m: &Mat4) -> Mat4 {
    eig_hermitian(m).expect("Hermitian input").map(clipped_sqrt)
}

/// Root fidelity `tr sqrt(sqrt(rho) sigma sqrt(rho))`.
pub fn quantum_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let s = psd_sqrt(rho.matrix());
    let inner = s * *sigma.matrix() * s;
    let spec = eig_hermitian(&inner.hermitian_part()).expect("Hermitian by construction");
    let f: f64 = spec.eigenvalues.iter().map(|&x| clipped_sqrt(x)).sum();
    f.clamp(0.0, 1.0)
}

/// Bhattacharyya overlap `sum_j sqrt(p_j q_j)`.
pub fn classical_fidelity(p: &Prob4, q: &Prob4) -> Result<f64> {
    validate_prob4(p)?;
    validate_prob4(q)?;
    Ok(bhattacharyya(p, q).clamp(0.0, 1.0))
}

/// Unchecked overlap for arbitrary-length normalized histograms.
pub fn bhattacharyya(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum()
}

/// Wootters concurrence.
pub fn concurrence(rho: &DensityMatrix) -> f64 {
    let yy = pauli_y().kron(&pauli_y());
    let tilde = yy * rho.matrix().conj() * yy;
    // Eigenvalues of rho tilde(rho) equal those of sqrt(rho) tilde(rho) sqrt(rho).
    let s = psd_sqrt(rho.matrix());
    let h = (s * tilde * s).hermitian_part();
    let spec = eig_hermitian(&h).expect("Hermitian by construction");
    let l: Vec<f64> = spec.eigenvalues.iter().map(|&x| clipped_sqrt(x)).collect();
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::matrix::{Ket4, C64};

    fn singlet() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::pure(&Ket4::from_real([0.0, s, -s, 0.0]).unwrap())
    }

    #[test]
    fn pt_fixes_diagonal_states() {
        let p = Ket4::basis(0).projector();
        assert_eq!(partial_transpose(&p), p);
    }

    #[test]
    fn pt_index_rule() {
        // |01><10| -> |00><11|
        let mut m = Mat4::zeros();
        m.0[1][2] = C64::new(1.0, 0.0);
        let pt = partial_transpose(&m);
        let mut expected = Mat4::zeros();
        expected.0[0][3] = C64::new(1.0, 0.0);
        assert_eq!(pt, expected);
    }

    #[test]
    fn singlet_pt_spectrum() {
        let spec = eig_hermitian(&partial_transpose(singlet().matrix())).unwrap();
        let expected = [0.5, 0.5, 0.5, -0.5];
        for (a, b) in spec.eigenvalues.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        // eigenket of -1/2 is Phi+
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi_plus = Ket4::from_real([s, 0.0, 0.0, s]).unwrap();
        assert!((spec.eigenvectors[3].inner(&phi_plus).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let mm = DensityMatrix::maximally_mixed();
        assert!((quantum_fidelity(&singlet(), &singlet()) - 1.0).abs() < 1e-7);
        assert!((quantum_fidelity(&singlet(), &mm) - 0.5).abs() < 1e-12);
        let a = DensityMatrix::pure(&Ket4::basis(0));
        let b = DensityMatrix::pure(&Ket4::basis(3));
        assert!(quantum_fidelity(&a, &b).abs() < 1e-12);
    }

    #[test]
    fn classical_fidelity_examples() {
        let f = classical_fidelity(&[0.5, 0.5, 0.0, 0.0], &[0.25; 4]).unwrap();
        assert!((f - 2.0 * 0.125f64.sqrt()).abs() < 1e-12);
        assert_eq!(
            classical_fidelity(&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]).unwrap(),
            0.0
        );
        let p = [0.1, 0.2, 0.3, 0.4];
        assert!((classical_fidelity(&p, &p).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            classical_fidelity(&[-0.1, 0.6, 0.5, 0.0], &p),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(classical_fidelity(&[0.5, 0.6, 0.0, 0.0], &p).is_err());
    }

    #[test]
    fn concurrence_examples() {
        assert!((concurrence(&singlet()) - 1.0).abs() < 1e-7);
        assert!(concurrence(&DensityMatrix::maximally_mixed()).abs() < 1e-12);
        let t = std::f64::consts::PI / 6.0;
        let theta = DensityMatrix::pure(&Ket4::from_real([t.sin(), 0.0, 0.0, t.cos()]).unwrap());
        assert!((concurrence(&theta) - (2.0 * t).sin()).abs() < 1e-7);
        assert!((concurrence(&theta) - 0.86603).abs() < 1e-5);
    }
}
