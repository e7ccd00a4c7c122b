use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::pauli::Letter;

/// A two-outcome Hermitian Clifford operator `(x X + y Y + z Z) / √k` with
/// `x, y, z ∈ {-1, 0, 1}` and `k ∈ {1, 2}` nonzero components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HermitianAxis {
    x: i8,
    y: i8,
    z: i8,
}

impl HermitianAxis {
    pub fn new(x: i8, y: i8, z: i8) -> Result<Self> {
        let comps = [x, y, z];
        if comps.iter().any(|c| !(-1..=1).contains(c)) {
            return Err(Error::Domain("axis components must be -1, 0 or 1".into()));
        }
        match comps.iter().filter(|c| **c != 0).count() {
            1 | 2 => Ok(HermitianAxis { x, y, z }),
            _ => Err(Error::Domain("axis must have one or two nonzero components".into())),
        }
    }

    pub fn pauli(letter: Letter) -> Self {
        match letter {
            Letter::X => HermitianAxis { x: 1, y: 0, z: 0 },
            Letter::Y => HermitianAxis { x: 0, y: 1, z: 0 },
            Letter::Z => HermitianAxis { x: 0, y: 0, z: 1 },
            Letter::I => panic!("identity is not a measurement axis"),
        }
    }

    /// Recovers the axis from a single-qubit matrix `(x X + y Y + z Z)/√k`, if it has that form.
    pub fn from_matrix(m: &CMatrix) -> Option<Self> {
        if m.nrows() != 2 || m.ncols() != 2 {
            return None;
        }
        let coeff = |l: Letter| (m * linalg::letter_matrix(l)).trace().re / 2.0;
        let raw = [coeff(Letter::X), coeff(Letter::Y), coeff(Letter::Z)];
        let k = raw.iter().filter(|v| v.abs() > 1e-9).count();
        if k == 0 || k > 2 {
            return None;
        }
        let scale = (k as f64).sqrt();
        let mut comps = [0i8; 3];
        for (c, v) in comps.iter_mut().zip(raw) {
            let s = v * scale;
            let r = s.round();
            if (s - r).abs() > 1e-9 {
                return None;
            }
            *c = r as i8;
        }
        let axis = HermitianAxis::new(comps[0], comps[1], comps[2]).ok()?;
        (linalg::distance(&axis.matrix(), m) < 1e-9).then_some(axis)
    }

    pub fn components(&self) -> [i8; 3] {
        [self.x, self.y, self.z]
    }

    /// The Pauli letter when the axis is `±X`, `±Y` or `±Z`.
    pub fn as_pauli(&self) -> Option<(Letter, i8)> {
        match (self.x, self.y, self.z) {
            (s, 0, 0) if s != 0 => Some((Letter::X, s)),
            (0, s, 0) if s != 0 => Some((Letter::Y, s)),
            (0, 0, s) if s != 0 => Some((Letter::Z, s)),
            _ => None,
        }
    }

    pub fn is_pauli(&self) -> bool {
        self.as_pauli().is_some()
    }

    pub fn matrix(&self) -> CMatrix {
        let k = self.components().iter().filter(|c| **c != 0).count() as f64;
        let scale = Complex64::new(1.0 / k.sqrt(), 0.0);
        let [x, y, z] = self.components().map(|c| Complex64::new(c as f64, 0.0));
        (linalg::letter_matrix(Letter::X) * x + linalg::letter_matrix(Letter::Y) * y + linalg::letter_matrix(Letter::Z) * z) * scale
    }

    /// The `+1` eigenvector.
    pub fn eigenstate(&self) -> [Complex64; 2] {
        let [x, y, z] = self.components().map(|c| c as f64);
        let norm = (x * x + y * y + z * z).sqrt();
        let (nx, ny, nz) = (x / norm, y / norm, z / norm);
        // Bloch vector (nx, ny, nz): cos(t/2)|0> + e^{i f} sin(t/2)|1>.
        let theta = nz.clamp(-1.0, 1.0).acos();
        let phi = ny.atan2(nx);
        [Complex64::new((theta / 2.0).cos(), 0.0), Complex64::from_polar((theta / 2.0).sin(), phi)]
    }

    /// A Pauli letter anticommuting with the axis operator.
    pub fn anticommuting_error(&self) -> Letter {
        match (self.x != 0, self.y != 0, self.z != 0) {
            (true, false, false) => Letter::Z,
            (false, true, false) => Letter::Z,
            (false, false, true) => Letter::X,
            (true, true, false) => Letter::Z,
            (true, false, true) => Letter::Y,
            _ => Letter::X,
        }
    }

    /// Short label such as `X`, `-Z` or `X+Y`.
    pub fn label(&self) -> String {
        let mut out = String::new();
        for (c, name) in self.components().iter().zip(['X', 'Y', 'Z']) {
            match *c {
                1 => {
                    if !out.is_empty() {
                        out.push('+');
                    }
                    out.push(name);
                }
                -1 => {
                    out.push('-');
                    out.push(name);
                }
                _ => {}
            }
        }
        out
    }
}

impl fmt::Display for HermitianAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for HermitianAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut comps = [0i8; 3];
        let mut sign = 1i8;
        let mut seen = false;
        for ch in s.chars().filter(|c| !c.is_whitespace()) {
            match ch.to_ascii_uppercase() {
                '+' => sign = 1,
                '-' => sign = -1,
                letter @ ('X' | 'Y' | 'Z') => {
                    let i = (letter as u8 - b'X') as usize;
                    if comps[i] != 0 {
                        return Err(Error::Config(format!("repeated component in axis \"{s}\"")));
                    }
                    comps[i] = sign;
                    sign = 1;
                    seen = true;
                }
                _ => return Err(Error::Config(format!("invalid axis \"{s}\""))),
            }
        }
        if !seen {
            return Err(Error::Config(format!("invalid axis \"{s}\"")));
        }
        HermitianAxis::new(comps[0], comps[1], comps[2]).map_err(|e| Error::Config(format!("axis \"{s}\": {e}")))
    }
}
