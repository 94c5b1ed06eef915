//! Quarter-half-quarter wave-plate compilation of single-qubit unitaries.
//!
//! Matrices act on the `(|V>, |H>)` basis and plate angles are measured from
//! the vertical.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{pauli_x, Mat2, C64, I, ONE};
use crate::witness::clifford_c;

const UNITARY_TOL: f64 = 1e-9;
const SOLVE_TOL: f64 = 1e-10;
const LM_MAX_ITER: usize = 200;
/// Grid spacing used for exact canonical triples.
const GRID_STEP: f64 = FRAC_PI_8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Plate {
    Half,
    Quarter,
}

pub fn waveplate_unitary(kind: Plate, theta: f64) -> Mat2 {
    let (c, s) = ((2.0 * theta).cos(), (2.0 * theta).sin());
    let r = |x: f64| C64::new(x, 0.0);
    match kind {
        Plate::Half => Mat2::new(r(c), r(s), r(s), r(-c)),
        Plate::Quarter => {
            Mat2::new(ONE - I * c, -I * s, -I * s, ONE + I * c).scale_re(FRAC_1_SQRT_2)
        }
    }
}

fn plate_derivative(kind: Plate, theta: f64) -> Mat2 {
    let (c, s) = ((2.0 * theta).cos(), (2.0 * theta).sin());
    let r = |x: f64| C64::new(x, 0.0);
    match kind {
        Plate::Half => Mat2::new(r(-2.0 * s), r(2.0 * c), r(2.0 * c), r(2.0 * s)),
        Plate::Quarter => Mat2::new(
            I * (2.0 * s),
            -I * (2.0 * c),
            -I * (2.0 * c),
            -I * (2.0 * s),
        )
        .scale_re(FRAC_1_SQRT_2),
    }
}

/// Plate angles `(alpha, beta, gamma)` of `QWP(alpha) HWP(beta) QWP(gamma)`;
/// the `gamma` plate acts first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleTriple {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl AngleTriple {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        AngleTriple { alpha, beta, gamma }
    }

    fn as_array(&self) -> [f64; 3] {
        [self.alpha, self.beta, self.gamma]
    }

    fn from_array(a: [f64; 3]) -> Self {
        AngleTriple::new(a[0], a[1], a[2])
    }

    /// Every angle reduced to `(-pi/2, pi/2]`; plates have period `pi`.
    pub fn reduced(&self) -> Self {
        AngleTriple::from_array(self.as_array().map(reduce_angle))
    }

    fn zeros(&self) -> usize {
        self.as_array().iter().filter(|x| x.abs() < 1e-12).count()
    }
}

impl fmt::Display for AngleTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.alpha, self.beta, self.gamma)
    }
}

pub fn reduce_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(PI);
    if y > FRAC_PI_2 + 1e-12 {
        y -= PI;
    }
    if y.abs() < 1e-15 {
        0.0
    } else {
        y
    }
}

pub fn sandwich(t: &AngleTriple) -> Mat2 {
    waveplate_unitary(Plate::Quarter, t.alpha)
        * waveplate_unitary(Plate::Half, t.beta)
        * waveplate_unitary(Plate::Quarter, t.gamma)
}

/// Phase-optimal distance `min_phi ||U - e^{i phi} V||_F`.
fn phase_distance(u: &Mat2, v: &Mat2) -> f64 {
    // ||U - e^{i phi} V||^2 = 4 - 2 Re(e^{-i phi} tr V^dag U) for unitaries.
    let t = (v.adjoint() * *u).trace();
    let phase = if t.norm() > 0.0 { t / t.norm() } else { ONE };
    (*u - v.scale(phase)).frobenius_norm()
}

pub fn equal_up_to_phase(u: &Mat2, v: &Mat2, tol: f64) -> Result<bool> {
    u.ensure_unitary(UNITARY_TOL)?;
    v.ensure_unitary(UNITARY_TOL)?;
    Ok(phase_distance(u, v) < tol)
}

/// Canonical order: most zero angles, then smaller magnitudes compared
/// lexicographically, then larger signed values.
fn prefer(a: &AngleTriple, b: &AngleTriple) -> bool {
    use std::cmp::Ordering;
    let lex = |x: [f64; 3], y: [f64; 3]| {
        x.iter()
            .zip(y)
            .find(|(p, q)| (**p - *q).abs() > 1e-12)
            .map_or(Ordering::Equal, |(p, q)| p.total_cmp(&q))
    };
    let (aa, ba) = (a.as_array(), b.as_array());
    b.zeros()
        .cmp(&a.zeros())
        .then_with(|| lex(aa.map(f64::abs), ba.map(f64::abs)))
        .then_with(|| lex(ba, aa))
        == Ordering::Less
}

fn grid_values() -> Vec<f64> {
    // (-pi/2, pi/2] in steps of pi/8
    (-3..=4).map(|k| k as f64 * GRID_STEP).collect()
}

fn grid_search(u: &Mat2) -> Option<AngleTriple> {
    let g = grid_values();
    let mut best: Option<AngleTriple> = None;
    for &a in &g {
        for &b in &g {
            for &c in &g {
                let t = AngleTriple::new(a, b, c);
                if phase_distance(&sandwich(&t), u) < SOLVE_TOL
                    && best.as_ref().is_none_or(|bt| prefer(&t, bt))
                {
                    best = Some(t);
                }
            }
        }
    }
    best
}

/// Residual `U(theta) - e^{i phi} V` as eight reals.
fn residual(x: &[f64; 4], v: &Mat2) -> [f64; 8] {
    let u = sandwich(&AngleTriple::new(x[0], x[1], x[2]));
    let d = u - v.scale(C64::from_polar(1.0, x[3]));
    let mut r = [0.0; 8];
    for i in 0..2 {
        for j in 0..2 {
            r[2 * (2 * i + j)] = d.0[i][j].re;
            r[2 * (2 * i + j) + 1] = d.0[i][j].im;
        }
    }
    r
}

fn jacobian(x: &[f64; 4], v: &Mat2) -> [[f64; 4]; 8] {
    let (qa, h, qg) = (
        waveplate_unitary(Plate::Quarter, x[0]),
        waveplate_unitary(Plate::Half, x[1]),
        waveplate_unitary(Plate::Quarter, x[2]),
    );
    let cols = [
        plate_derivative(Plate::Quarter, x[0]) * h * qg,
        qa * plate_derivative(Plate::Half, x[1]) * qg,
        qa * h * plate_derivative(Plate::Quarter, x[2]),
        v.scale(-I * C64::from_polar(1.0, x[3])),
    ];
    let mut j = [[0.0; 4]; 8];
    for (k, m) in cols.iter().enumerate() {
        for a in 0..2 {
            for b in 0..2 {
                j[2 * (2 * a + b)][k] = m.0[a][b].re;
                j[2 * (2 * a + b) + 1][k] = m.0[a][b].im;
            }
        }
    }
    j
}

fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for c in 0..4 {
        let p = (c..4).max_by(|&i, &k| a[i][c].abs().total_cmp(&a[k][c].abs()))?;
        if a[p][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..4 {
            let f = a[r][c] / a[c][c];
            let pivot = a[c];
            for (x, p) in a[r][c..].iter_mut().zip(&pivot[c..]) {
                *x -= f * p;
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = [0.0; 4];
    for c in (0..4).rev() {
        let s: f64 = (c + 1..4).map(|k| a[c][k] * x[k]).sum();
        x[c] = (b[c] - s) / a[c][c];
    }
    Some(x)
}

fn norm2(r: &[f64; 8]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Levenberg-Marquardt from one seed; returns the final point.
fn levenberg_marquardt(seed: [f64; 3], v: &Mat2) -> [f64; 4] {
    let u = sandwich(&AngleTriple::from_array(seed));
    let t = (v.adjoint() * u).trace();
    let mut x = [seed[0], seed[1], seed[2], t.arg()];
    let mut r = residual(&x, v);
    let mut cost = norm2(&r);
    let mut mu = 1e-3;
    for _ in 0..LM_MAX_ITER {
        if cost < 1e-30 {
            break;
        }
        let j = jacobian(&x, v);
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        for row in 0..8 {
            for a in 0..4 {
                jtr[a] -= j[row][a] * r[row];
                for b in 0..4 {
                    jtj[a][b] += j[row][a] * j[row][b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut m = jtj;
            for (a, row) in m.iter_mut().enumerate() {
                row[a] += mu * (1.0 + jtj[a][a]);
            }
            let Some(step) = solve4(m, jtr) else { break };
            let cand = [
                x[0] + step[0],
                x[1] + step[1],
                x[2] + step[2],
                x[3] + step[3],
            ];
            let rc = residual(&cand, v);
            let cc = norm2(&rc);
            if cc < cost {
                x = cand;
                r = rc;
                cost = cc;
                mu = (mu * 0.3).max(1e-15);
                improved = true;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    x
}

fn seeds() -> Vec<[f64; 3]> {
    let mut s: Vec<[f64; 3]> = table_ii().iter().map(|(_, t)| t.as_array()).collect();
    let g = [-FRAC_PI_4, 0.1, FRAC_PI_4];
    for a in g {
        for b in g {
            for c in g {
                if s.len() < 32 {
                    s.push([a + 0.05, b - 0.07, c + 0.11]);
                }
            }
        }
    }
    s
}

/// Angles realizing `u` up to a global phase.
pub fn solve_angles(u: &Mat2) -> Result<AngleTriple> {
    u.ensure_unitary(UNITARY_TOL)?;
    if let Some(t) = grid_search(u) {
        return Ok(t);
    }
    let mut best: Option<(f64, AngleTriple)> = None;
    for seed in seeds() {
        let x = levenberg_marquardt(seed, u);
        let mut t = AngleTriple::new(x[0], x[1], x[2]).reduced();
        // Snap angles that sit on the grid.
        let mut snapped = t.as_array();
        for a in snapped.iter_mut() {
            let k = (*a / GRID_STEP).round() * GRID_STEP;
            if (*a - k).abs() < 1e-9 {
                *a = reduce_angle(k);
            }
        }
        let st = AngleTriple::from_array(snapped);
        if phase_distance(&sandwich(&st), u) <= phase_distance(&sandwich(&t), u).max(SOLVE_TOL) {
            t = st;
        }
        let d = phase_distance(&sandwich(&t), u);
        let better = match &best {
            None => true,
            Some((bd, bt)) => {
                if d < SOLVE_TOL && *bd < SOLVE_TOL {
                    prefer(&t, bt)
                } else {
                    d < *bd
                }
            }
        };
        if better {
            best = Some((d, t));
        }
    }
    let (d, t) = best.expect("seeds are nonempty");
    if d > 1e-8 {
        return Err(Error::NotConverged(LM_MAX_ITER));
    }
    Ok(t)
}

/// The six family unitaries with their plate settings.
pub fn table_ii() -> [(&'static str, AngleTriple); 6] {
    [
        ("1", AngleTriple::new(0.0, 0.0, 0.0)),
        ("X", AngleTriple::new(0.0, FRAC_PI_4, 0.0)),
        ("C", AngleTriple::new(0.0, FRAC_PI_4, -FRAC_PI_4)),
        ("C†", AngleTriple::new(-FRAC_PI_4, 0.0, 0.0)),
        ("XC", AngleTriple::new(0.0, 0.0, -FRAC_PI_4)),
        ("XC†", AngleTriple::new(FRAC_PI_4, 0.0, 0.0)),
    ]
}

/// Target unitaries in the order of [`table_ii`].
pub fn table_ii_unitaries() -> [Mat2; 6] {
    let c = clifford_c();
    let x = pauli_x();
    [Mat2::identity(), x, c, c.adjoint(), x * c, x * c.adjoint()]
}
