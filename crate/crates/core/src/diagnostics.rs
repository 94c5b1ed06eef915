//! Local-measurement route to the witness families and the second-order
//! nonlinear bounds built on top of them.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::measurement::sample_counts;
use crate::qcore::{pauli_x, pauli_y, pauli_z, DensityMatrix, Ket, Ket2, Mat2, Mat4, C64, I, ONE};
use crate::witness::witness_operator;

/// Slack in the inequality tests.
pub const HOLD_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn pauli(self) -> Mat2 {
        match self {
            Axis::X => pauli_x(),
            Axis::Y => pauli_y(),
            Axis::Z => pauli_z(),
        }
    }

    /// Eigenkets for eigenvalue +1 and -1.
    pub fn eigenkets(self) -> [Ket2; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r = C64::new(h, 0.0);
        match self {
            Axis::X => [Ket([r, r]), Ket([r, -r])],
            Axis::Y => [Ket([r, I * h]), Ket([r, -I * h])],
            Axis::Z => [Ket::basis(0), Ket::basis(1)],
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    /// Next axis under the cyclic map X -> Y -> Z -> X.
    fn next(self) -> Axis {
        Axis::ALL[(self.index() + 1) % 3]
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "X" | "x" => Ok(Axis::X),
            "Y" | "y" => Ok(Axis::Y),
            "Z" | "z" => Ok(Axis::Z),
            _ => Err(Error::Parse(format!("unknown axis {s:?}"))),
        }
    }
}

/// Local setting: measure the first qubit along `.0` and the second along `.1`.
pub type Setting = (Axis, Axis);

/// The nine local settings.
pub fn all_settings() -> Vec<Setting> {
    Axis::ALL
        .iter()
        .flat_map(|&a| Axis::ALL.iter().map(move |&b| (a, b)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Exact,
    Sampled,
}

/// Single-qubit and correlator expectation values gathered from local settings.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTable {
    /// `<X1>, <Y1>, <Z1>, <X2>, <Y2>, <Z2>`; `None` if no setting touched it.
    pub singles: [Option<f64>; 6],
    pub correlators: BTreeMap<Setting, f64>,
    pub provenance: Provenance,
}

impl PauliTable {
    pub fn single(&self, qubit: usize, axis: Axis) -> Result<f64> {
        self.singles[3 * (qubit - 1) + axis.index()]
            .ok_or_else(|| Error::MissingEntry(format!("{axis}{qubit}")))
    }

    pub fn correlator(&self, a: Axis, b: Axis) -> Result<f64> {
        self.correlators
            .get(&(a, b))
            .copied()
            .ok_or_else(|| Error::MissingEntry(format!("{a}1{b}2")))
    }

    /// `key=value` lines such as `Z1Z2=-1`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let prov = match self.provenance {
            Provenance::Exact => "exact",
            Provenance::Sampled => "sampled",
        };
        writeln!(s, "provenance={prov}").unwrap();
        for q in 1..=2 {
            for a in Axis::ALL {
                if let Some(v) = self.singles[3 * (q - 1) + a.index()] {
                    writeln!(s, "{a}{q}={v}").unwrap();
                }
            }
        }
        for ((a, b), v) in &self.correlators {
            writeln!(s, "{a}1{b}2={v}").unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut t = PauliTable {
            singles: [None; 6],
            correlators: BTreeMap::new(),
            provenance: Provenance::Exact,
        };
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value: {line:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            if k == "provenance" {
                t.provenance = match v {
                    "exact" => Provenance::Exact,
                    "sampled" => Provenance::Sampled,
                    _ => return Err(Error::Parse(format!("unknown provenance {v:?}"))),
                };
                continue;
            }
            let x: f64 = v.parse().map_err(|e| Error::Parse(format!("{k}: {e}")))?;
            let bad = || Error::Parse(format!("unknown key {k:?}"));
            match k.as_bytes() {
                [a, q] => {
                    let axis: Axis = (*a as char).to_string().parse()?;
                    let q = match q {
                        b'1' => 1,
                        b'2' => 2,
                        _ => return Err(bad()),
                    };
                    t.singles[3 * (q - 1) + axis.index()] = Some(x);
                }
                [a, b'1', b, b'2'] => {
                    let a: Axis = (*a as char).to_string().parse()?;
                    let b: Axis = (*b as char).to_string().parse()?;
                    t.correlators.insert((a, b), x);
                }
                _ => return Err(bad()),
            }
        }
        Ok(t)
    }
}

fn local(a: Mat2, b: Mat2) -> Mat4 {
    a.kron(&b)
}

/// Exact table for the given settings. Each setting contributes its
/// correlator and both marginals.
pub fn pauli_expectations(rho: &DensityMatrix, settings: &[Setting]) -> PauliTable {
    let id = Mat2::identity();
    let mut t = PauliTable {
        singles: [None; 6],
        correlators: BTreeMap::new(),
        provenance: Provenance::Exact,
    };
    for &(a, b) in settings {
        let ev = |m: Mat4| rho.expectation(&m).re.clamp(-1.0, 1.0);
        t.correlators
            .insert((a, b), ev(local(a.pauli(), b.pauli())));
        t.singles[a.index()] = Some(ev(local(a.pauli(), id)));
        t.singles[3 + b.index()] = Some(ev(local(id, b.pauli())));
    }
    t
}

/// Finite-statistics table: `n` pairs per setting, each detecting the four
/// common eigenstates of the two local observables. Marginals seen by several
/// settings are averaged.
pub fn pauli_expectations_sampled<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    settings: &[Setting],
    n: u64,
    rng: &mut R,
) -> Result<PauliTable> {
    let mut t = PauliTable {
        singles: [None; 6],
        correlators: BTreeMap::new(),
        provenance: Provenance::Sampled,
    };
    let mut sums = [(0.0, 0u32); 6];
    for &(a, b) in settings {
        let (ka, kb) = (a.eigenkets(), b.eigenkets());
        let mut p = [0.0; 4];
        for i in 0..2 {
            for j in 0..2 {
                p[2 * i + j] = rho.overlap(&ka[i].kron(&kb[j])).max(0.0);
            }
        }
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        let c = sample_counts(&p, n, rng)?;
        let f = c.map(|x| x as f64 / n as f64);
        t.correlators.insert((a, b), f[0] - f[1] - f[2] + f[3]);
        let first = f[0] + f[1] - f[2] - f[3];
        let second = f[0] - f[1] + f[2] - f[3];
        for (slot, v) in [(a.index(), first), (3 + b.index(), second)] {
            sums[slot].0 += v;
            sums[slot].1 += 1;
        }
    }
    for (slot, (sum, k)) in t.singles.iter_mut().zip(sums) {
        if k > 0 {
            *slot = Some(sum / k as f64);
        }
    }
    Ok(t)
}

/// `<W(alpha)>` from the five entries it needs.
pub fn witness_from_paulis(t: &PauliTable, alpha: f64) -> Result<f64> {
    let zz = t.correlator(Axis::Z, Axis::Z)?;
    let xx = t.correlator(Axis::X, Axis::X)?;
    let yy = t.correlator(Axis::Y, Axis::Y)?;
    let z1 = t.single(1, Axis::Z)?;
    let z2 = t.single(2, Axis::Z)?;
    Ok(0.25 * (1.0 + (z1 + z2) * alpha.cos() + zz + (xx + yy) * alpha.sin()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl BoundCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        BoundCheck {
            lhs,
            rhs,
            holds: lhs >= rhs - HOLD_TOL,
        }
    }
}

/// Separability inequality on the diagonal correlators and the `axis`
/// marginals. For `Z`:
/// `1 + <ZZ>^2 >= 2 |<XX><YY> - <ZZ> + <Z1><Z2>| + <XX>^2 + <YY>^2 + <Z1>^2 + <Z2>^2`;
/// `X` and `Y` follow by cycling the axes.
pub fn barbieri_inequality(t: &PauliTable, axis: Axis) -> Result<BoundCheck> {
    let (u, v) = (axis.next(), axis.next().next());
    let c = t.correlator(axis, axis)?;
    let cu = t.correlator(u, u)?;
    let cv = t.correlator(v, v)?;
    let s1 = t.single(1, axis)?;
    let s2 = t.single(2, axis)?;
    let lhs = 1.0 + c * c;
    let rhs = 2.0 * (cu * cv - c + s1 * s2).abs() + cu * cu + cv * cv + s1 * s1 + s2 * s2;
    Ok(BoundCheck::new(lhs, rhs))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NonlinearG {
    G1,
    G2,
}

/// The non-Hermitian operator whose squared modulus bounds `<W(alpha)>`.
pub fn g_operator(alpha: f64, which: NonlinearG) -> Mat4 {
    let (x, y, z, id) = (pauli_x(), pauli_y(), pauli_z(), Mat2::identity());
    let k = 1.0 / 8f64.sqrt();
    let s = k * (alpha / 2.0 + std::f64::consts::FRAC_PI_4).sin();
    let c = k * (alpha / 2.0 + std::f64::consts::FRAC_PI_4).cos();
    let (first, second) = match which {
        NonlinearG::G1 => (
            Mat4::identity() + x.kron(&x) + y.kron(&y) + z.kron(&z),
            z.kron(&id) + id.kron(&z) + x.kron(&y).scale(I) - y.kron(&x).scale(I),
        ),
        NonlinearG::G2 => (
            x.kron(&id) + id.kron(&x) + y.kron(&z).scale(I) - z.kron(&y).scale(I),
            x.kron(&z) + z.kron(&x) + y.kron(&id).scale(I) - id.kron(&y).scale(I),
        ),
    };
    first.scale(ONE * s) + second.scale(ONE * c)
}

/// `<W(alpha)> >= |<G(alpha)>|^2`; a violation certifies entanglement.
pub fn nonlinear_bound(rho: &DensityMatrix, alpha: f64, which: NonlinearG) -> BoundCheck {
    let lhs = rho.expectation(&witness_operator(alpha)).re;
    let rhs = rho.expectation(&g_operator(alpha, which)).norm_sqr();
    BoundCheck::new(lhs, rhs)
}

/// Mixing parameter of `[1 - p (XX + YY + ZZ)] / 4` from `<W(pi/2)>`.
pub fn infer_p(w_half_pi: f64) -> f64 {
    (1.0 - 4.0 * w_half_pi) / 3.0
}
