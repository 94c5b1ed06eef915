//! Witness operators, witness bases and the witness-family criterion.
//!
//! All families share the outcome ordering `|00>, |11>, |Psi+>, |Psi->`, so the
//! four probabilities of any family plug directly into
//! `S = 4 f1 f2 - (f3 - f4)^2`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{
    eig_hermitian, partial_transpose, pauli_x, validate_prob4, DensityMatrix, Ket, Ket2, Ket4,
    Mat2, Mat4, Matrix, Prob4, C64, I, ONE,
};

pub const NUM_PRESETS: usize = 6;
const PT_NEGATIVITY_TOL: f64 = 1e-10;
const SCHMIDT_TOL: f64 = 1e-10;

/// `|00>, |11>, |Psi+>, |Psi->`
pub fn witness_basis() -> [Ket4; 4] {
    let s = FRAC_1_SQRT_2;
    [
        Ket4::basis(0),
        Ket4::basis(3),
        Ket4::from_real([0.0, s, s, 0.0]).unwrap(),
        Ket4::from_real([0.0, s, -s, 0.0]).unwrap(),
    ]
}

/// Spectral form of the optimal witness `(|w><w|)^T2` with
/// `|w> = cos(a/2)|00> + sin(a/2)|11>`.
pub fn witness_operator(alpha: f64) -> Mat4 {
    let (s, c) = alpha.sin_cos();
    let weights = [(1.0 + c) / 2.0, (1.0 - c) / 2.0, s / 2.0, -s / 2.0];
    witness_basis()
        .iter()
        .zip(weights)
        .fold(Mat4::zeros(), |acc, (k, w)| acc + k.projector().scale_re(w))
}

/// Cyclic Clifford `C = (1/sqrt 2) [[1, -i], [1, i]]`, mapping X -> Y -> Z -> X.
pub fn clifford_c() -> Mat2 {
    Mat2::new(ONE, -I, ONE, I).scale_re(FRAC_1_SQRT_2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FamilyLabel {
    Preset(u8),
    Custom,
}

impl fmt::Display for FamilyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyLabel::Preset(k) => write!(f, "{k}"),
            FamilyLabel::Custom => write!(f, "custom"),
        }
    }
}

/// A projective four-outcome measurement: the witness basis rotated by
/// `(U1 (x) U2)^dagger`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WitnessFamily {
    u1: Mat2,
    u2: Mat2,
    label: FamilyLabel,
    kets: [Ket4; 4],
}

impl WitnessFamily {
    pub fn new(u1: Mat2, u2: Mat2, label: FamilyLabel) -> Result<Self> {
        u1.ensure_unitary(1e-9)?;
        u2.ensure_unitary(1e-9)?;
        let u_dag = u1.kron(&u2).adjoint();
        let kets = witness_basis().map(|e| u_dag.apply(&e));
        Ok(WitnessFamily {
            u1,
            u2,
            label,
            kets,
        })
    }

    pub fn custom(u1: Mat2, u2: Mat2) -> Result<Self> {
        Self::new(u1, u2, FamilyLabel::Custom)
    }

    pub fn label(&self) -> FamilyLabel {
        self.label
    }

    pub fn preset_index(&self) -> Option<usize> {
        match self.label {
            FamilyLabel::Preset(k) => Some(k as usize),
            FamilyLabel::Custom => None,
        }
    }

    pub fn unitaries(&self) -> (Mat2, Mat2) {
        (self.u1, self.u2)
    }

    /// Measurement kets `(U1 (x) U2)^dagger |e_j>`.
    pub fn kets(&self) -> &[Ket4; 4] {
        &self.kets
    }

    pub fn projectors(&self) -> [Mat4; 4] {
        self.kets.map(|k| k.projector())
    }

    /// The family member `U^dagger W(alpha) U`.
    pub fn witness(&self, alpha: f64) -> Mat4 {
        let u = self.u1.kron(&self.u2);
        u.adjoint() * witness_operator(alpha) * u
    }

    /// Text form: `1`..`6`, or `custom:` followed by the eight entries of
    /// `U1` then `U2` (row-major) separated by `;`.
    pub fn to_label_string(&self) -> String {
        match self.label {
            FamilyLabel::Preset(k) => k.to_string(),
            FamilyLabel::Custom => {
                let entries: Vec<String> = self
                    .u1
                    .0
                    .iter()
                    .chain(self.u2.0.iter())
                    .flat_map(|row| row.iter())
                    .map(|z| z.to_string())
                    .collect();
                format!("custom:{}", entries.join(";"))
            }
        }
    }

    /// Identity used to reject re-measurement: the preset index, or the
    /// serialized unitaries for custom families.
    pub fn key(&self) -> String {
        self.to_label_string()
    }
}

impl FromStr for WitnessFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("custom:") {
            let entries: Vec<C64> = rest
                .split(';')
                .map(|e| {
                    e.trim()
                        .parse::<C64>()
                        .map_err(|err| Error::Parse(format!("complex entry {e:?}: {err}")))
                })
                .collect::<Result<_>>()?;
            if entries.len() != 8 {
                return Err(Error::Parse(format!(
                    "custom family needs 8 entries, found {}",
                    entries.len()
                )));
            }
            let u1 = Mat2::new(entries[0], entries[1], entries[2], entries[3]);
            let u2 = Mat2::new(entries[4], entries[5], entries[6], entries[7]);
            return WitnessFamily::custom(u1, u2);
        }
        let k: usize = s
            .parse()
            .map_err(|_| Error::Parse(format!("unknown family label {s:?}")))?;
        family_unitary(k)
    }
}

/// One of the six pre-chosen families; jointly informationally complete.
pub fn family_unitary(index: usize) -> Result<WitnessFamily> {
    let id = Mat2::identity();
    let x = pauli_x();
    let c = clifford_c();
    let cd = c.adjoint();
    let (u1, u2) = match index {
        1 => (id, id),
        2 => (id, x),
        3 => (cd, c),
        4 => (cd, x * c),
        5 => (c, cd),
        6 => (c, x * cd),
        _ => return Err(Error::BadIndex(index)),
    };
    WitnessFamily::new(u1, u2, FamilyLabel::Preset(index as u8))
}

pub fn preset_families() -> [WitnessFamily; NUM_PRESETS] {
    std::array::from_fn(|k| family_unitary(k + 1).expect("preset index in range"))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub s_value: f64,
    pub conclusive: bool,
}

/// Evaluates `S = 4 f1 f2 - (f3 - f4)^2` on probabilities or frequencies.
pub fn criterion_s(f: &Prob4) -> Result<CriterionResult> {
    validate_prob4(f)?;
    Ok(criterion_unchecked(f))
}

pub(crate) fn criterion_unchecked(f: &Prob4) -> CriterionResult {
    let d = f[2] - f[3];
    let s_value = 4.0 * f[0] * f[1] - d * d;
    CriterionResult {
        s_value,
        conclusive: s_value < 0.0,
    }
}

/// The negative eigenvalue of `rho^T2` and its eigenket, if below `-1e-10`.
pub fn negative_pt_eigenket(rho: &DensityMatrix) -> Option<(f64, Ket4)> {
    let spec = eig_hermitian(&partial_transpose(rho.matrix())).expect("Hermitian");
    let lam = spec.min();
    (lam < -PT_NEGATIVITY_TOL).then(|| (lam, spec.eigenvectors[3]))
}

/// Schmidt form of a two-qubit ket.
#[derive(Clone, Copy, Debug)]
pub struct Schmidt {
    /// Descending Schmidt coefficients.
    pub coefficients: [f64; 2],
    /// Local unitaries with `(u1 (x) u2) phi = c0 |00> + c1 |11>`.
    pub u1: Mat2,
    pub u2: Mat2,
}

impl Schmidt {
    /// `alpha` with `cos(alpha/2), sin(alpha/2)` equal to the coefficients.
    pub fn alpha(&self) -> f64 {
        2.0 * self.coefficients[1].atan2(self.coefficients[0])
    }
}

fn fix_phase(v: &Ket2) -> Ket2 {
    let k = if v.0[0].norm() >= v.0[1].norm() { 0 } else { 1 };
    let z = v.0[k];
    v.scale(z.conj() / z.norm())
}

/// Schmidt decomposition through the eigenvectors of `M^dagger M`, where
/// `M[a][b] = phi[2a + b]`.
pub fn schmidt_decompose(phi: &Ket4) -> Schmidt {
    let m = Matrix([[phi.0[0], phi.0[1]], [phi.0[2], phi.0[3]]]);
    let spec = eig_hermitian(&(m.adjoint() * m)).expect("Hermitian");
    let sigma = spec.eigenvalues.map(|x| x.max(0.0).sqrt());
    let v = spec.eigenvectors.map(|v| fix_phase(&v));
    let u0 = {
        let w = m.apply(&v[0]);
        Ket2::new(w.0).expect("leading singular value is positive for a unit ket")
    };
    // Second left vector: orthogonal complement of u0, phased so that
    // M v1 = sigma1 u1 holds when sigma1 > 0.
    let mut u1v = Ket([-u0.0[1].conj(), u0.0[0].conj()]);
    if sigma[1] > 0.0 {
        let w = m.apply(&v[1]);
        let ph = u1v.inner(&w);
        if ph.norm() > 0.0 {
            u1v = u1v.scale(ph / ph.norm());
        }
    }
    let a = Matrix([[u0.0[0], u1v.0[0]], [u0.0[1], u1v.0[1]]]);
    let b = Matrix([[v[0].0[0], v[1].0[0]], [v[0].0[1], v[1].0[1]]]);
    Schmidt {
        coefficients: sigma,
        u1: a.adjoint(),
        u2: b.transpose(),
    }
}

/// Custom family whose eigenbasis is that of `(|phi><phi|)^T2`.
pub fn family_from_ket(phi: &Ket4) -> Result<WitnessFamily> {
    let sd = schmidt_decompose(phi);
    if sd.coefficients[1] <= SCHMIDT_TOL {
        return Err(Error::ProductKet(sd.coefficients[1]));
    }
    // (A (x) B) X (A (x) B)^dagger partially transposes to
    // (A (x) conj B) X^T2 (A (x) conj B)^dagger, hence conj(U2).
    WitnessFamily::custom(sd.u1, sd.u2.conj())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{pauli_y, pauli_z};
    use crate::states::{psi_minus, psi_plus, singlet, werner_unchecked};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn approx_eq(a: &Mat4, b: &Mat4, tol: f64) -> bool {
        a.distance(b) < tol
    }

    #[test]
    fn basis_is_orthonormal() {
        let b = witness_basis();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((b[i].inner(&b[j]).norm() - expected).abs() < 1e-15);
            }
        }
        let s = FRAC_1_SQRT_2;
        assert_eq!(b[2], Ket4::from_real([0.0, s, s, 0.0]).unwrap());
        assert_eq!(b[3], Ket4::from_real([0.0, s, -s, 0.0]).unwrap());
    }

    #[test]
    fn witness_operator_examples() {
        let w = witness_operator(FRAC_PI_2);
        let ev = eig_hermitian(&w).unwrap().eigenvalues;
        for (a, b) in ev.iter().zip([0.5, 0.5, 0.5, -0.5]) {
            assert!((a - b).abs() < 1e-14);
        }
        for alpha in [0.1, 0.7, FRAC_PI_2, 2.5] {
            let w = witness_operator(alpha);
            assert!((w.expectation(&psi_minus()) + alpha.sin() / 2.0).abs() < 1e-14);
            assert!((w.trace().re - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn witness_equals_partial_transpose_of_w() {
        for alpha in [0.3, FRAC_PI_4, 2.0] {
            let w = Ket4::from_real([(alpha / 2.0).cos(), 0.0, 0.0, (alpha / 2.0).sin()]).unwrap();
            assert!(approx_eq(
                &partial_transpose(&w.projector()),
                &witness_operator(alpha),
                1e-14
            ));
        }
    }

    #[test]
    fn witness_pauli_form() {
        let id = Mat2::identity();
        let (x, y, z) = (pauli_x(), pauli_y(), pauli_z());
        for alpha in [0.0, 0.4, FRAC_PI_2, 2.9] {
            let (s, c) = alpha.sin_cos();
            let pauli = (Mat4::identity()
                + (z.kron(&id) + id.kron(&z)).scale_re(c)
                + z.kron(&z)
                + (x.kron(&x) + y.kron(&y)).scale_re(s))
            .scale_re(0.25);
            assert!(approx_eq(&pauli, &witness_operator(alpha), 1e-12));
        }
    }

    #[test]
    fn clifford_cycles_paulis() {
        let c = clifford_c();
        let conj = |m: Mat2| c * m * c.adjoint();
        assert!(conj(pauli_x()).distance(&pauli_y()) < 1e-15);
        assert!(conj(pauli_y()).distance(&pauli_z()) < 1e-15);
        assert!(conj(pauli_z()).distance(&pauli_x()) < 1e-15);
    }

    #[test]
    fn table_entries() {
        let f1 = family_unitary(1).unwrap();
        assert_eq!(f1.unitaries(), (Mat2::identity(), Mat2::identity()));
        let f2 = family_unitary(2).unwrap();
        assert_eq!(f2.unitaries(), (Mat2::identity(), pauli_x()));
        let f4 = family_unitary(4).unwrap();
        let c = clifford_c();
        assert_eq!(f4.unitaries(), (c.adjoint(), pauli_x() * c));
        assert!(matches!(family_unitary(0), Err(Error::BadIndex(0))));
        assert!(matches!(family_unitary(7), Err(Error::BadIndex(7))));
    }

    fn check_family_invariants(f: &WitnessFamily) {
        let p = f.projectors();
        let mut sum = Mat4::zeros();
        for i in 0..4 {
            assert!(p[i].hermitian_defect() < 1e-12);
            assert!(approx_eq(&(p[i] * p[i]), &p[i], 1e-10));
            for j in 0..4 {
                if i != j {
                    assert!((p[i] * p[j]).frobenius_norm() < 1e-10);
                }
            }
            sum = sum + p[i];
        }
        assert!(approx_eq(&sum, &Mat4::identity(), 1e-10));
    }

    #[test]
    fn preset_families_are_projective_and_complete() {
        let fams = preset_families();
        for f in &fams {
            check_family_invariants(f);
        }
        // 24 projectors span the 16-dimensional operator space.
        let mut rows: Vec<[f64; 32]> = Vec::new();
        for f in &fams {
            for p in f.projectors() {
                let mut r = [0.0; 32];
                for i in 0..4 {
                    for j in 0..4 {
                        r[2 * (4 * i + j)] = p.0[i][j].re;
                        r[2 * (4 * i + j) + 1] = p.0[i][j].im;
                    }
                }
                rows.push(r);
            }
        }
        assert_eq!(real_rank(rows, 1e-9), 16);
    }

    fn real_rank(mut rows: Vec<[f64; 32]>, tol: f64) -> usize {
        let mut rank = 0;
        for col in 0..32 {
            let Some(piv) = (rank..rows.len())
                .max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs()))
            else {
                break;
            };
            if rows[piv][col].abs() < tol {
                continue;
            }
            rows.swap(rank, piv);
            let pivot_row = rows[rank];
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank {
                    let factor = row[col] / pivot_row[col];
                    for (x, p) in row.iter_mut().zip(&pivot_row) {
                        *x -= factor * p;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    #[test]
    fn criterion_examples() {
        let r = criterion_s(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(r.s_value, -1.0);
        assert!(r.conclusive);
        let r = criterion_s(&[0.25; 4]).unwrap();
        assert_eq!(r.s_value, 0.25);
        assert!(!r.conclusive);
        let r = criterion_s(&[0.5, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!(r.s_value, 1.0);
        assert!(!r.conclusive);
        assert!(matches!(
            criterion_s(&[0.5, 0.6, 0.0, 0.0]),
            Err(Error::InvalidDistribution(_))
        ));
        let edge = criterion_s(&[0.0, 0.5, 0.5, 0.0]).unwrap();
        assert_eq!(edge.s_value, -0.25);
        assert!(edge.conclusive);
    }

    #[test]
    fn pt_eigenket_examples() {
        assert!(negative_pt_eigenket(&DensityMatrix::maximally_mixed()).is_none());
        let (lam, ket) = negative_pt_eigenket(&singlet()).unwrap();
        assert!((lam + 0.5).abs() < 1e-12);
        let s = FRAC_1_SQRT_2;
        let phi_plus = Ket4::from_real([s, 0.0, 0.0, s]).unwrap();
        assert!((ket.inner(&phi_plus).norm() - 1.0).abs() < 1e-12);
        for lambda in [0.4, 0.7, 1.0] {
            let (lam, _) = negative_pt_eigenket(&werner_unchecked(lambda)).unwrap();
            assert!((lam - (1.0 - 3.0 * lambda) / 4.0).abs() < 1e-12);
        }
        assert!(negative_pt_eigenket(&werner_unchecked(0.3)).is_none());
    }

    #[test]
    fn family_from_phi_plus_is_family_one() {
        let s = FRAC_1_SQRT_2;
        let fam = family_from_ket(&Ket4::from_real([s, 0.0, 0.0, s]).unwrap()).unwrap();
        let f1 = family_unitary(1).unwrap();
        for (a, b) in fam.projectors().iter().zip(f1.projectors().iter()) {
            assert!(approx_eq(a, b, 1e-12));
        }
    }

    #[test]
    fn family_from_pt_eigenket_detects_the_state() {
        let rho = DensityMatrix::pure(&psi_plus());
        let (_, phi) = negative_pt_eigenket(&rho).unwrap();
        let fam = family_from_ket(&phi).unwrap();
        let p = fam.kets().map(|k| rho.overlap(&k));
        let r = criterion_s(&p).unwrap();
        assert!((r.s_value + 1.0).abs() < 1e-12, "{p:?}");
    }

    #[test]
    fn product_ket_rejected() {
        let k = Ket2::from_real([0.6, 0.8])
            .unwrap()
            .kron(&Ket2::new([ONE, I]).unwrap());
        assert!(matches!(family_from_ket(&k), Err(Error::ProductKet(_))));
    }

    #[test]
    fn label_round_trip() {
        for k in 1..=6 {
            let f = family_unitary(k).unwrap();
            let back: WitnessFamily = f.to_label_string().parse().unwrap();
            assert_eq!(back, f);
        }
        let phi = Ket4::new([
            C64::new(0.3, 0.2),
            C64::new(-0.1, 0.5),
            C64::new(0.4, -0.3),
            C64::new(0.2, 0.6),
        ])
        .unwrap();
        let fam = family_from_ket(&phi).unwrap();
        let back: WitnessFamily = fam.to_label_string().parse().unwrap();
        for (a, b) in fam.kets().iter().zip(back.kets()) {
            assert!((a.inner(b).norm() - 1.0).abs() < 1e-14);
        }
        assert!("7".parse::<WitnessFamily>().is_err());
        assert!("custom:1;2".parse::<WitnessFamily>().is_err());
    }

    #[test]
    fn custom_family_realizes_pt_eigenbasis() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let amps: [C64; 4] = std::array::from_fn(|_| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let phi = Ket4::new(amps).unwrap();
            let sd = schmidt_decompose(&phi);
            let canon = sd.u1.kron(&sd.u2).apply(&phi);
            let (c0, c1) = (sd.coefficients[0], sd.coefficients[1]);
            let expected = Ket([
                C64::new(c0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(c1, 0.0),
            ]);
            for i in 0..4 {
                assert!((canon.0[i] - expected.0[i]).norm() < 1e-12);
            }
            let fam = family_from_ket(&phi).unwrap();
            check_family_invariants(&fam);
            let target = partial_transpose(&phi.projector());
            assert!(approx_eq(&fam.witness(sd.alpha()), &target, 1e-12));
        }
        let _ = PI;
    }
}
