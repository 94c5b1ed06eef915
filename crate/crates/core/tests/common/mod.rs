//! Random generators and property checks shared by the property and
//! acceptance suites.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Dirichlet, Distribution, StandardNormal};
use witfam::diagnostics::{
    all_settings, barbieri_inequality, nonlinear_bound, pauli_expectations, Axis, NonlinearG,
};
use witfam::estimation::{ml_estimate_traced, ppt_separable};
use witfam::measurement::{born_probabilities, measure, Dataset};
use witfam::qcore::{concurrence, pauli_x, pauli_y, pauli_z, DensityMatrix, Mat2, Mat4, C64};
use witfam::waveplates::{equal_up_to_phase, sandwich, solve_angles, table_ii, table_ii_unitaries};
use witfam::witness::{criterion_s, preset_families, WitnessFamily};

pub fn gaussian<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Ginibre state of the given rank (1..=4), built here independently of the
/// library sampler.
pub fn random_density<R: Rng>(rng: &mut R, rank: usize) -> DensityMatrix {
    let mut m = Mat4::zeros();
    for _ in 0..rank {
        let row: [C64; 4] = std::array::from_fn(|_| gaussian(rng));
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] += row[i].conj() * row[j];
            }
        }
    }
    let t = m.trace().re;
    DensityMatrix::new(m.scale_re(1.0 / t)).unwrap()
}

/// Haar unitary from a normalized quaternion and a global phase.
pub fn random_unitary2<R: Rng>(rng: &mut R) -> Mat2 {
    let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (a, b, c, d) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    let phase = C64::from_polar(1.0, rng.gen_range(0.0..TAU));
    Mat2::new(
        C64::new(a, b),
        C64::new(c, d),
        C64::new(-c, d),
        C64::new(a, -b),
    )
    .scale(phase)
}

/// Qubit state with a Bloch vector uniform in the ball, or on the sphere.
pub fn random_qubit<R: Rng>(rng: &mut R) -> Mat2 {
    let v: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let r = if rng.gen_bool(0.5) {
        1.0
    } else {
        rng.gen::<f64>().cbrt()
    };
    let [x, y, z] = v.map(|c| 0.5 * r * c / n);
    Mat2::identity().scale_re(0.5)
        + pauli_x().scale_re(x)
        + pauli_y().scale_re(y)
        + pauli_z().scale_re(z)
}

/// Explicit mixture of at most four product states.
pub fn random_separable<R: Rng>(rng: &mut R) -> DensityMatrix {
    let k = rng.gen_range(1..=4);
    let w: Vec<f64> = if k == 1 {
        vec![1.0]
    } else {
        Dirichlet::new_with_size(1.0, k).unwrap().sample(rng)
    };
    let m = w.iter().fold(Mat4::zeros(), |acc, &wi| {
        acc + random_qubit(rng).kron(&random_qubit(rng)).scale_re(wi)
    });
    DensityMatrix::new(m).unwrap()
}

pub fn random_family<R: Rng>(rng: &mut R) -> WitnessFamily {
    WitnessFamily::custom(random_unitary2(rng), random_unitary2(rng)).unwrap()
}

/// Disagreements between the PPT test and positive concurrence.
pub fn ppt_concurrence_disagreements<R: Rng>(n: usize, rng: &mut R) -> usize {
    (0..n)
        .filter(|i| {
            let rho = random_density(rng, 1 + i % 4);
            let c = concurrence(&rho);
            let npt = !ppt_separable(&rho, 1e-8);
            // States inside the numerical band are not counted either way.
            (c > 1e-8) != npt && (c > 1e-6 || !ppt_separable(&rho, 1e-6))
        })
        .count()
}

#[derive(Debug, Default)]
pub struct SafetyReport {
    pub states: usize,
    pub criterion: usize,
    pub witness: usize,
    pub inequality: usize,
    pub nonlinear: usize,
}

impl SafetyReport {
    pub fn violations(&self) -> usize {
        self.criterion + self.witness + self.inequality + self.nonlinear
    }
}

/// Checks every separability guarantee on `n` random separable mixtures.
pub fn separable_safety<R: Rng>(n: usize, rng: &mut R) -> SafetyReport {
    let mut r = SafetyReport {
        states: n,
        ..Default::default()
    };
    let presets = preset_families();
    for _ in 0..n {
        let rho = random_separable(rng);
        let custom = [random_family(rng), random_family(rng)];
        for fam in presets.iter().chain(&custom) {
            let p = born_probabilities(&rho, fam);
            if criterion_s(&p).unwrap().s_value < -1e-9 {
                r.criterion += 1;
            }
            for alpha in [PI / 6.0, PI / 4.0, PI / 2.0] {
                if rho.expectation(&fam.witness(alpha)).re < -1e-9 {
                    r.witness += 1;
                }
            }
        }
        let table = pauli_expectations(&rho, &all_settings());
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let b = barbieri_inequality(&table, axis).unwrap();
            if b.lhs < b.rhs - 1e-9 {
                r.inequality += 1;
            }
        }
        for alpha in [PI / 6.0, PI / 4.0, PI / 2.0, 2.0 * PI / 3.0] {
            for g in [NonlinearG::G1, NonlinearG::G2] {
                if !nonlinear_bound(&rho, alpha, g).holds {
                    r.nonlinear += 1;
                }
            }
        }
    }
    r
}

/// Datasets whose ML ascent ever lowers the log-likelihood.
pub fn ml_monotonicity_violations<R: Rng>(n: usize, rng: &mut R) -> usize {
    let fams = preset_families();
    (0..n)
        .filter(|i| {
            let truth = random_density(rng, 1 + i % 4);
            let k = 1 + i % 6;
            let d = Dataset::from_records(
                fams[..k]
                    .iter()
                    .map(|f| measure(&truth, f, 1000, rng).unwrap())
                    .collect(),
            )
            .unwrap();
            let (_, trace) = ml_estimate_traced(&d, 1e-9, 500);
            trace.windows(2).any(|w| w[1] < w[0])
        })
        .count()
}

/// Largest error over the stored settings and `n` random unitaries.
/// Returns `(table_ii_failures, random_failures)`.
pub fn waveplate_round_trips<R: Rng>(n: usize, rng: &mut R) -> (usize, usize) {
    let table = table_ii()
        .iter()
        .zip(table_ii_unitaries())
        .filter(|((_, t), u)| {
            let solved = solve_angles(u).unwrap();
            let same = (solved.alpha - t.alpha).abs() < 1e-9
                && (solved.beta - t.beta).abs() < 1e-9
                && (solved.gamma - t.gamma).abs() < 1e-9;
            !(same && equal_up_to_phase(&sandwich(t), u, 1e-9).unwrap())
        })
        .count();
    let random = (0..n)
        .filter(|_| {
            let u = random_unitary2(rng);
            !equal_up_to_phase(&sandwich(&solve_angles(&u).unwrap()), &u, 1e-8).unwrap()
        })
        .count();
    (table, random)
}
