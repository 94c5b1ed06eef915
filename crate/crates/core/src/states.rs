//! Reference state classes and random entangled-state ensembles.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{concurrence, DensityMatrix, Ket4, Mat4, C64};

/// Concurrence above which a sampled state counts as entangled.
pub const ENTANGLED_THRESHOLD: f64 = 1e-8;
pub const MAX_REJECTIONS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param")]
pub enum StateTag {
    /// `|00> sin(theta) + |11> cos(theta)`
    Rank1(f64),
    /// `mu |Phi+><Phi+| + (1 - mu) |Phi-><Phi-|`
    Rank2(f64),
    /// `lambda |Psi-><Psi-| + (1 - lambda) / 4`
    Werner(f64),
    GinibrePure,
    GinibreFull,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateClass {
    pub tag: StateTag,
    /// Weight of the ideal state against white noise.
    pub noise: f64,
}

impl StateClass {
    pub fn ideal(tag: StateTag) -> Self {
        StateClass { tag, noise: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        check_noise(self.noise)?;
        match self.tag {
            StateTag::Rank1(t) => {
                if !(t > 0.0 && t < PI) || (t - FRAC_PI_2).abs() < 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "theta={t} outside (0, pi) \\ {{pi/2}}"
                    )));
                }
            }
            StateTag::Rank2(mu) => {
                if !(0.0..=1.0).contains(&mu) || (mu - 0.5).abs() < 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "mu={mu} outside [0, 1] \\ {{1/2}}"
                    )));
                }
            }
            StateTag::Werner(l) => {
                if !(l > 1.0 / 3.0 && l <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "lambda={l} outside (1/3, 1]"
                    )));
                }
            }
            StateTag::GinibrePure | StateTag::GinibreFull => {}
        }
        Ok(())
    }
}

impl fmt::Display for StateTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateTag::Rank1(t) => write!(f, "rank1({t})"),
            StateTag::Rank2(m) => write!(f, "rank2({m})"),
            StateTag::Werner(l) => write!(f, "werner({l})"),
            StateTag::GinibrePure => write!(f, "ginibre-pure"),
            StateTag::GinibreFull => write!(f, "ginibre-full"),
        }
    }
}

fn check_noise(v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter(format!(
            "noise weight v={v} outside [0, 1]"
        )));
    }
    Ok(())
}

pub fn phi_plus() -> Ket4 {
    Ket4::from_real([FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]).unwrap()
}

pub fn phi_minus() -> Ket4 {
    Ket4::from_real([FRAC_1_SQRT_2, 0.0, 0.0, -FRAC_1_SQRT_2]).unwrap()
}

pub fn psi_plus() -> Ket4 {
    Ket4::from_real([0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0]).unwrap()
}

pub fn psi_minus() -> Ket4 {
    Ket4::from_real([0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0]).unwrap()
}

pub fn singlet() -> DensityMatrix {
    DensityMatrix::pure(&psi_minus())
}

/// Werner state without validating `lambda`; used for separable-side checks.
pub fn werner_unchecked(lambda: f64) -> DensityMatrix {
    let m =
        psi_minus().projector().scale_re(lambda) + Mat4::identity().scale_re((1.0 - lambda) / 4.0);
    DensityMatrix::new(m).expect("Werner family is a valid state for lambda in [-1/3, 1]")
}

/// `v rho + (1 - v) / 4`
pub fn apply_white_noise(rho: &DensityMatrix, v: f64) -> Result<DensityMatrix> {
    check_noise(v)?;
    DensityMatrix::mixture(&[(v, *rho), (1.0 - v, DensityMatrix::maximally_mixed())])
}

/// Ideal state of a reference class, mixed with white noise. Ginibre tags have
/// no fixed reference state and are rejected.
pub fn reference_state(class: &StateClass) -> Result<DensityMatrix> {
    class.validate()?;
    let ideal = match class.tag {
        StateTag::Rank1(t) => DensityMatrix::pure(&Ket4::from_real([t.sin(), 0.0, 0.0, t.cos()])?),
        StateTag::Rank2(mu) => DensityMatrix::new(
            phi_plus().projector().scale_re(mu) + phi_minus().projector().scale_re(1.0 - mu),
        )?,
        StateTag::Werner(l) => werner_unchecked(l),
        StateTag::GinibrePure | StateTag::GinibreFull => {
            return Err(Error::InvalidParameter(format!(
                "{} has no reference state",
                class.tag
            )))
        }
    };
    apply_white_noise(&ideal, class.noise)
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    C64::new(a, b) * FRAC_1_SQRT_2
}

/// `A^dagger A / tr(A^dagger A)` with `A` of shape `rank x 4`.
pub fn sample_ginibre<R: Rng + ?Sized>(rank: usize, rng: &mut R) -> Result<DensityMatrix> {
    if rank != 1 && rank != 4 {
        return Err(Error::InvalidParameter(format!(
            "Ginibre rank {rank} not in {{1, 4}}"
        )));
    }
    let mut m = Mat4::zeros();
    for _ in 0..rank {
        let row: [C64; 4] = std::array::from_fn(|_| complex_normal(rng));
        // A^dagger A accumulates conj(a_i) a_j per row
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] += row[i].conj() * row[j];
            }
        }
    }
    DensityMatrix::from_psd(m)
}

/// Rejection-samples [`sample_ginibre`] until the concurrence exceeds
/// [`ENTANGLED_THRESHOLD`]. Also returns the number of draws used.
pub fn sample_entangled_counted<R: Rng + ?Sized>(
    rank: usize,
    rng: &mut R,
) -> Result<(DensityMatrix, usize)> {
    for draw in 1..=MAX_REJECTIONS {
        let rho = sample_ginibre(rank, rng)?;
        if concurrence(&rho) > ENTANGLED_THRESHOLD {
            return Ok((rho, draw));
        }
    }
    Err(Error::SamplingExhausted(MAX_REJECTIONS))
}

pub fn sample_entangled<R: Rng + ?Sized>(rank: usize, rng: &mut R) -> Result<DensityMatrix> {
    sample_entangled_counted(rank, rng).map(|(rho, _)| rho)
}
