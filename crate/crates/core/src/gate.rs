//! Single-qubit gates, the four CHSH observables and their diagonalizing rotations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::matrix::CMatrix;
use crate::scalar::{cis, one, zero, Scalar};

/// Rotation diagonalizing `S`: `Ry(ϑ) S Ry(−ϑ) = Z`.
pub const THETA_S: f64 = -5.0 * std::f64::consts::PI / 4.0;
/// Rotation diagonalizing `T`: `Ry(α) T Ry(−α) = Z`.
pub const ALPHA_T: f64 = std::f64::consts::PI / 4.0;
/// `φ = ϑ − α`, the extra rotation that turns `Ry(α)` into `Ry(ϑ)`.
pub const PHI: f64 = THETA_S - ALPHA_T;

/// A named 2×2 unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate<T> {
    name: String,
    matrix: CMatrix<T>,
}

impl<T: Scalar> Gate<T> {
    /// Validated constructor; rejects anything further than
    /// [`Scalar::UNITARITY_TOL`] from unitary.
    pub fn new(name: impl Into<String>, matrix: CMatrix<T>) -> Result<Self> {
        let gate = Self::from_matrix_unchecked(name, matrix);
        gate.validate()?;
        Ok(gate)
    }

    /// Skips the unitarity check. Consumers that apply gates re-validate.
    pub fn from_matrix_unchecked(name: impl Into<String>, matrix: CMatrix<T>) -> Self {
        assert_eq!(matrix.dim(), 2, "single-qubit gates are 2x2");
        Self {
            name: name.into(),
            matrix,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.matrix.is_finite() {
            return Err(SimError::NotUnitary {
                name: self.name.clone(),
                residual: f64::NAN,
            });
        }
        let residual = self.matrix.unitarity_residual();
        if residual > T::UNITARITY_TOL {
            return Err(SimError::NotUnitary {
                name: self.name.clone(),
                residual: residual.as_f64(),
            });
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            name: format!("{}†", self.name),
            matrix: self.matrix.adjoint(),
        }
    }

    /// Product `self · rhs` (rhs acts first).
    pub fn then_after(&self, rhs: &Self) -> Self {
        Self {
            name: format!("{}·{}", self.name, rhs.name),
            matrix: &self.matrix * &rhs.matrix,
        }
    }

    /// Block matrix `[[I, 0], [0, U]]` with the control as the high bit.
    pub fn controlled_matrix(&self) -> CMatrix<T> {
        let mut m = CMatrix::identity(4);
        for i in 0..2 {
            for j in 0..2 {
                m[(2 + i, 2 + j)] = self.matrix[(i, j)];
            }
        }
        m
    }
}

pub fn identity<T: Scalar>() -> Gate<T> {
    Gate::from_matrix_unchecked("I", CMatrix::identity(2))
}

pub fn pauli_x<T: Scalar>() -> Gate<T> {
    Gate::from_matrix_unchecked("X", CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]))
}

pub fn pauli_y<T: Scalar>() -> Gate<T> {
    let i = num_complex::Complex::new(T::zero(), T::one());
    Gate::from_matrix_unchecked(
        "Y",
        CMatrix::from_rows(&[vec![zero(), -i], vec![i, zero()]]),
    )
}

pub fn pauli_z<T: Scalar>() -> Gate<T> {
    Gate::from_matrix_unchecked("Z", CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]))
}

pub fn hadamard<T: Scalar>() -> Gate<T> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Gate::from_matrix_unchecked("H", CMatrix::from_real_rows(&[&[h, h], &[h, -h]]))
}

/// `Ry(θ) = cos(θ/2) I − i sin(θ/2) Y`.
pub fn ry<T: Scalar>(theta: T) -> Gate<T> {
    let half = theta / T::lit(2.0);
    let (s, co) = half.sin_cos();
    Gate::from_matrix_unchecked(
        format!("Ry({theta})"),
        CMatrix::from_rows(&[
            vec![
                num_complex::Complex::new(co, T::zero()),
                num_complex::Complex::new(-s, T::zero()),
            ],
            vec![
                num_complex::Complex::new(s, T::zero()),
                num_complex::Complex::new(co, T::zero()),
            ],
        ]),
    )
}

/// `Rz(θ) = diag(e^{−iθ/2}, e^{iθ/2})`.
pub fn rz<T: Scalar>(theta: T) -> Gate<T> {
    let half = theta / T::lit(2.0);
    Gate::from_matrix_unchecked(
        format!("Rz({theta})"),
        CMatrix::diagonal(&[cis(-half), cis(half)]),
    )
}

/// `P(η) = diag(1, e^{iη})`.
pub fn phase<T: Scalar>(eta: T) -> Gate<T> {
    Gate::from_matrix_unchecked(format!("P({eta})"), CMatrix::diagonal(&[one(), cis(eta)]))
}

/// Global phase `e^{iη} I`; only meaningful as a factor in matrix identities.
pub fn global_phase<T: Scalar>(eta: T) -> Gate<T> {
    Gate::from_matrix_unchecked(
        format!("e^i{eta}"),
        CMatrix::diagonal(&[cis(eta), cis(eta)]),
    )
}

/// One of the four ±1-valued CHSH observables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Observable {
    Q,
    R,
    S,
    T,
}

impl Observable {
    pub const ALL: [Observable; 4] = [Observable::Q, Observable::R, Observable::S, Observable::T];
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Observable::Q => "Q",
            Observable::R => "R",
            Observable::S => "S",
            Observable::T => "T",
        };
        f.write_str(s)
    }
}

impl FromStr for Observable {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "Q" => Ok(Observable::Q),
            "R" => Ok(Observable::R),
            "S" => Ok(Observable::S),
            "T" => Ok(Observable::T),
            _ => Err(SimError::UnknownLabel(s.to_string())),
        }
    }
}

/// `Q = Z`, `R = X`, `S = −(Z+X)/√2`, `T = (Z−X)/√2`, all acting on one qubit.
pub fn observable<T: Scalar>(label: Observable) -> Gate<T> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let matrix = match label {
        Observable::Q => pauli_z::<T>().matrix,
        Observable::R => pauli_x::<T>().matrix,
        Observable::S => CMatrix::from_real_rows(&[&[-h, -h], &[-h, h]]),
        Observable::T => CMatrix::from_real_rows(&[&[h, -h], &[-h, -h]]),
    };
    Gate::from_matrix_unchecked(label.to_string(), matrix)
}

/// Unitary `O` with `O U O† = Z` for the observable `U`.
pub fn diagonalizer<T: Scalar>(label: Observable) -> Gate<T> {
    match label {
        Observable::Q => identity(),
        Observable::R => hadamard(),
        Observable::S => ry(T::lit(THETA_S)),
        Observable::T => ry(T::lit(ALPHA_T)),
    }
}

/// Serializable description of a single-qubit gate, used inside circuits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GateKind {
    I,
    X,
    Y,
    Z,
    H,
    Ry(f64),
    Rz(f64),
    Phase(f64),
    /// The CHSH observable `S` as a gate.
    ObsS,
    /// The CHSH observable `T` as a gate.
    ObsT,
}

impl GateKind {
    pub fn from_observable(label: Observable) -> Self {
        match label {
            Observable::Q => GateKind::Z,
            Observable::R => GateKind::X,
            Observable::S => GateKind::ObsS,
            Observable::T => GateKind::ObsT,
        }
    }

    pub fn to_gate<T: Scalar>(self) -> Gate<T> {
        match self {
            GateKind::I => identity(),
            GateKind::X => pauli_x(),
            GateKind::Y => pauli_y(),
            GateKind::Z => pauli_z(),
            GateKind::H => hadamard(),
            GateKind::Ry(a) => ry(T::lit(a)),
            GateKind::Rz(a) => rz(T::lit(a)),
            GateKind::Phase(a) => phase(T::lit(a)),
            GateKind::ObsS => observable(Observable::S),
            GateKind::ObsT => observable(Observable::T),
        }
    }

    /// Mnemonic used by the circuit text format.
    pub fn mnemonic(self) -> &'static str {
        match self {
            GateKind::I => "i",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::H => "h",
            GateKind::Ry(_) => "ry",
            GateKind::Rz(_) => "rz",
            GateKind::Phase(_) => "p",
            GateKind::ObsS => "sobs",
            GateKind::ObsT => "tobs",
        }
    }

    pub fn angle(self) -> Option<f64> {
        match self {
            GateKind::Ry(a) | GateKind::Rz(a) | GateKind::Phase(a) => Some(a),
            _ => None,
        }
    }

    /// Inverse of [`GateKind::mnemonic`]; `angle` is required for rotations.
    pub fn from_mnemonic(name: &str, angle: Option<f64>) -> Option<Self> {
        let fixed = match name {
            "i" => GateKind::I,
            "x" => GateKind::X,
            "y" => GateKind::Y,
            "z" => GateKind::Z,
            "h" => GateKind::H,
            "sobs" => GateKind::ObsS,
            "tobs" => GateKind::ObsT,
            "ry" => return angle.map(GateKind::Ry),
            "rz" => return angle.map(GateKind::Rz),
            "p" => return angle.map(GateKind::Phase),
            _ => return None,
        };
        angle.is_none().then_some(fixed)
    }
}
