//! Fixed-size complex matrices and kets for one and two qubits.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Dense `N x N` complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix<const N: usize>(pub [[C64; N]; N]);

pub type Mat2 = Matrix<2>;
pub type Mat4 = Matrix<4>;

impl<const N: usize> Matrix<N> {
    pub fn zeros() -> Self {
        Matrix([[ZERO; N]; N])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.0[i][i] = ONE;
        }
        m
    }

    pub fn from_real_diag(diag: [f64; N]) -> Self {
        let mut m = Self::zeros();
        for (i, d) in diag.iter().enumerate() {
            m.0[i][i] = C64::new(*d, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        N
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        let mut m = *self;
        for row in m.0.iter_mut() {
            for z in row.iter_mut() {
                *z = z.conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = *self;
        for row in m.0.iter_mut() {
            for z in row.iter_mut() {
                *z *= s;
            }
        }
        m
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..N).map(|i| self.0[i][i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest entry of `|H - H^dagger|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..N {
            for j in i..N {
                worst = worst.max((self.0[i][j] - self.0[j][i].conj()).norm());
            }
        }
        worst
    }

    /// `(H + H^dagger) / 2`
    pub fn hermitian_part(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = (self.0[i][j] + self.0[j][i].conj()) * 0.5;
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `max |U^dagger U - 1|` entrywise.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint() * *self;
        let id = Self::identity();
        let mut worst = 0.0f64;
        for i in 0..N {
            for j in 0..N {
                worst = worst.max((p.0[i][j] - id.0[i][j]).norm());
            }
        }
        worst
    }

    pub fn ensure_unitary(&self, tol: f64) -> Result<()> {
        let d = self.unitarity_defect();
        if d > tol || !d.is_finite() {
            return Err(Error::NotUnitary(d));
        }
        Ok(())
    }

    pub fn apply(&self, v: &Ket<N>) -> Ket<N> {
        let mut out = [ZERO; N];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..N).map(|j| self.0[i][j] * v.0[j]).sum();
        }
        Ket(out)
    }

    /// `<v|M|v>` real part; intended for Hermitian `M`.
    pub fn expectation(&self, v: &Ket<N>) -> f64 {
        let mut acc = ZERO;
        for i in 0..N {
            let mut row = ZERO;
            for j in 0..N {
                row += self.0[i][j] * v.0[j];
            }
            acc += v.0[i].conj() * row;
        }
        acc.re
    }

    /// `tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        let mut acc = ZERO;
        for i in 0..N {
            for j in 0..N {
                acc += self.0[i][j] * other.0[j][i];
            }
        }
        acc
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (*self - *other).frobenius_norm()
    }
}

impl Matrix<2> {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Matrix([[a, b], [c, d]])
    }

    /// `self (x) other`, qubit of `self` is the more significant index.
    pub fn kron(&self, other: &Mat2) -> Mat4 {
        let mut m = Mat4::zeros();
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        m.0[2 * a + c][2 * b + d] = self.0[a][b] * other.0[c][d];
                    }
                }
            }
        }
        m
    }
}

impl<const N: usize> Default for Matrix<N> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const N: usize> Index<(usize, usize)> for Matrix<N> {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl<const N: usize> IndexMut<(usize, usize)> for Matrix<N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}

impl<const N: usize> Mul for Matrix<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.0[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..N {
                    m.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        m
    }
}

impl<const N: usize> Add for Matrix<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for i in 0..N {
            for j in 0..N {
                self.0[i][j] += rhs.0[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Sub for Matrix<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..N {
            for j in 0..N {
                self.0[i][j] -= rhs.0[i][j];
            }
        }
        self
    }
}

/// Column vector of amplitudes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ket<const N: usize>(pub [C64; N]);

pub type Ket2 = Ket<2>;
pub type Ket4 = Ket<4>;

impl<const N: usize> Ket<N> {
    /// Normalizes `amps`; fails on a zero or non-finite vector.
    pub fn new(amps: [C64; N]) -> Result<Self> {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cannot normalize ket of norm {norm}"
            )));
        }
        Ok(Ket(amps.map(|z| z / norm)))
    }

    pub fn from_real(amps: [f64; N]) -> Result<Self> {
        Self::new(amps.map(|x| C64::new(x, 0.0)))
    }

    pub fn basis(k: usize) -> Self {
        let mut a = [ZERO; N];
        a[k] = ONE;
        Ket(a)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Self) -> C64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|self><self|`
    pub fn projector(&self) -> Matrix<N> {
        let mut m = Matrix::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = self.0[i] * self.0[j].conj();
            }
        }
        m
    }

    pub fn scale(&self, s: C64) -> Self {
        Ket(self.0.map(|z| z * s))
    }
}

impl Ket<2> {
    pub fn kron(&self, other: &Ket2) -> Ket4 {
        let a = &self.0;
        let b = &other.0;
        Ket([a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]])
    }
}

pub fn pauli_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

/// `Y = i X Z`
pub fn pauli_y() -> Mat2 {
    (pauli_x() * pauli_z()).scale(I)
}

pub fn pauli_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}
