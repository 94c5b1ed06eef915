use super::eigen::{eig_hermitian, Spectrum};
use super::matrix::{Ket4, Mat4, C64};
use crate::error::{Error, Result};

const REPAIR_DRIFT: f64 = 1e-8;
const MIN_EIGENVALUE: f64 = -1e-10;

/// Two-qubit density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(Mat4);

impl DensityMatrix {
    /// Symmetrizes and renormalizes `m`, rejecting inputs that need more than
    /// `1e-8` of repair or have an eigenvalue below `-1e-10`.
    pub fn new(m: Mat4) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::InvalidDensity("non-finite entry".into()));
        }
        let herm = m.hermitian_part();
        let asym = (m - herm).frobenius_norm();
        if asym > REPAIR_DRIFT {
            return Err(Error::InvalidDensity(format!("asymmetry {asym:.3e}")));
        }
        let tr = herm.trace().re;
        if (tr - 1.0).abs() > REPAIR_DRIFT {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let rho = herm.scale_re(1.0 / tr);
        let spec = eig_hermitian(&rho)?;
        if spec.min() < MIN_EIGENVALUE {
            return Err(Error::InvalidDensity(format!(
                "eigenvalue {:.3e}",
                spec.min()
            )));
        }
        Ok(DensityMatrix(rho))
    }

    /// Normalizes an arbitrary positive semidefinite matrix by its trace.
    /// Intended for `A^dagger A` style constructions that are PSD by design.
    pub fn from_psd(m: Mat4) -> Result<Self> {
        let tr = m.trace().re;
        if !(tr.is_finite() && tr > 0.0) {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        Self::new(m.hermitian_part().scale_re(1.0 / tr))
    }

    pub(crate) fn from_psd_unchecked(m: Mat4) -> Self {
        let h = m.hermitian_part();
        DensityMatrix(h.scale_re(1.0 / h.trace().re))
    }

    pub fn pure(psi: &Ket4) -> Self {
        DensityMatrix(psi.projector().scale_re(1.0 / psi.norm().powi(2)))
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix(Mat4::identity().scale_re(0.25))
    }

    /// `weights[i] * states[i]` summed; weights must be a probability vector.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<Self> {
        let mut m = Mat4::zeros();
        for (w, rho) in parts {
            if *w < 0.0 {
                return Err(Error::InvalidParameter(format!("negative weight {w}")));
            }
            m = m + rho.0.scale_re(*w);
        }
        Self::new(m)
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn spectrum(&self) -> Spectrum<4> {
        eig_hermitian(&self.0).expect("density matrices are Hermitian")
    }

    pub fn expectation(&self, op: &Mat4) -> C64 {
        self.0.trace_product(op)
    }

    /// `<psi|rho|psi>`
    pub fn overlap(&self, psi: &Ket4) -> f64 {
        self.0.expectation(psi)
    }

    pub fn purity(&self) -> f64 {
        self.0.trace_product(&self.0).re
    }

    pub fn von_neumann_entropy(&self) -> f64 {
        self.spectrum()
            .eigenvalues
            .iter()
            .filter(|&&x| x > 0.0)
            .map(|&x| -x * x.ln())
            .sum()
    }

    pub fn distance(&self, other: &DensityMatrix) -> f64 {
        self.0.distance(&other.0)
    }
}

impl DensityMatrix {
    /// Parses a state file: four non-comment lines, each holding eight reals
    /// `re im re im re im re im`. Lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        if rows.len() != 4 {
            return Err(Error::Parse(format!(
                "expected 4 rows, found {}",
                rows.len()
            )));
        }
        let mut m = Mat4::zeros();
        for (i, row) in rows.iter().enumerate() {
            let vals: Vec<f64> = row
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("row {i}: {e}")))
                })
                .collect::<Result<_>>()?;
            if vals.len() != 8 {
                return Err(Error::Parse(format!(
                    "row {i}: expected 8 reals, found {}",
                    vals.len()
                )));
            }
            for j in 0..4 {
                m.0[i][j] = C64::new(vals[2 * j], vals[2 * j + 1]);
            }
        }
        Self::new(m)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for row in self.0 .0.iter() {
            let cells: Vec<String> = row.iter().map(|z| format!("{} {}", z.re, z.im)).collect();
            s.push_str(&cells.join(" "));
            s.push('\n');
        }
        s
    }
}
