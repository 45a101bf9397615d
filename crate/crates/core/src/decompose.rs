//! Controlled single-qubit unitaries from CNOTs and rotations.
//!
//! A unitary is written `U = e^{iη} Rz(β) Ry(γ) Rz(δ)` and then as
//! `U = e^{iη} A X B X C` with `A B C = I`, where
//! `A = Rz(β) Ry(γ/2)`, `B = Ry(−γ/2) Rz(−(δ+β)/2)`, `C = Rz((δ−β)/2)`.
//! The controlled version is `C`, CNOT, `B`, CNOT, `A` on the target followed by
//! `P(η)` on the control.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::CircuitOp;
use crate::error::{Result, SimError};
use crate::gate::{self, Gate, GateKind, Observable};
use crate::matrix::CMatrix;
use crate::scalar::Scalar;

/// Gates with a known angle table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DecomposeTarget {
    Observable(Observable),
    Hadamard,
    Ry(f64),
}

impl DecomposeTarget {
    /// `(η, β, γ, δ)`.
    pub fn angles(self) -> (f64, f64, f64, f64) {
        match self {
            DecomposeTarget::Observable(Observable::Q) => (FRAC_PI_2, PI, 0.0, 0.0),
            DecomposeTarget::Observable(Observable::R) => (-FRAC_PI_2, PI, PI, 0.0),
            DecomposeTarget::Observable(Observable::S) => (FRAC_PI_2, 0.0, FRAC_PI_2, -PI),
            DecomposeTarget::Observable(Observable::T) => (FRAC_PI_2, PI, FRAC_PI_2, 0.0),
            DecomposeTarget::Hadamard => (FRAC_PI_2, 0.0, FRAC_PI_2, PI),
            DecomposeTarget::Ry(phi) => (0.0, 0.0, phi, 0.0),
        }
    }

    /// The gate the angle table is supposed to reproduce.
    pub fn target_gate<T: Scalar>(self) -> Gate<T> {
        match self {
            DecomposeTarget::Observable(label) => gate::observable(label),
            DecomposeTarget::Hadamard => gate::hadamard(),
            DecomposeTarget::Ry(phi) => gate::ry(T::lit(phi)),
        }
    }
}

impl fmt::Display for DecomposeTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecomposeTarget::Observable(label) => write!(f, "{label}"),
            DecomposeTarget::Hadamard => f.write_str("H"),
            DecomposeTarget::Ry(phi) => write!(f, "Ry({phi})"),
        }
    }
}

impl FromStr for DecomposeTarget {
    type Err = SimError;

    /// Accepts `Q`, `R`, `S`, `T`, `H` and `Ry(<radians>)`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("h") {
            return Ok(DecomposeTarget::Hadamard);
        }
        if let Some(inner) = t
            .strip_prefix("Ry(")
            .or_else(|| t.strip_prefix("ry("))
            .and_then(|r| r.strip_suffix(')'))
        {
            return inner
                .trim()
                .parse::<f64>()
                .map(DecomposeTarget::Ry)
                .map_err(|_| SimError::UnknownLabel(s.to_string()));
        }
        t.parse::<Observable>().map(DecomposeTarget::Observable)
    }
}

#[derive(Clone, Debug)]
pub struct AbcDecomposition<T> {
    pub eta: T,
    pub beta: T,
    pub gamma: T,
    pub delta: T,
    pub a: Gate<T>,
    pub b: Gate<T>,
    pub c: Gate<T>,
}

/// Looks up the angle table for `target` and builds `A`, `B`, `C`.
pub fn abc_decompose<T: Scalar>(target: DecomposeTarget) -> AbcDecomposition<T> {
    let (eta, beta, gamma, delta) = target.angles();
    AbcDecomposition::from_angles(T::lit(eta), T::lit(beta), T::lit(gamma), T::lit(delta))
}

impl<T: Scalar> AbcDecomposition<T> {
    pub fn from_angles(eta: T, beta: T, gamma: T, delta: T) -> Self {
        let two = T::lit(2.0);
        let a = gate::rz(beta).then_after(&gate::ry(gamma / two));
        let b = gate::ry(-gamma / two).then_after(&gate::rz(-(delta + beta) / two));
        let c = gate::rz((delta - beta) / two);
        Self {
            eta,
            beta,
            gamma,
            delta,
            a,
            b,
            c,
        }
    }

    /// `e^{iη} Rz(β) Ry(γ) Rz(δ)`.
    pub fn euler_form(&self) -> CMatrix<T> {
        let m = gate::global_phase(self.eta)
            .then_after(&gate::rz(self.beta))
            .then_after(&gate::ry(self.gamma))
            .then_after(&gate::rz(self.delta));
        m.matrix().clone()
    }

    /// `e^{iη} A X B X C`.
    pub fn abc_form(&self) -> CMatrix<T> {
        let x = gate::pauli_x::<T>();
        gate::global_phase(self.eta)
            .then_after(&self.a)
            .then_after(&x)
            .then_after(&self.b)
            .then_after(&x)
            .then_after(&self.c)
            .matrix()
            .clone()
    }

    /// `A B C`, which must be the identity.
    pub fn abc_product(&self) -> CMatrix<T> {
        self.a
            .then_after(&self.b)
            .then_after(&self.c)
            .matrix()
            .clone()
    }

    /// Circuit ops realizing controlled-U. Zero-angle rotations are dropped.
    pub fn fragment(&self, control: usize, target: usize) -> Result<Vec<CircuitOp>> {
        if control == target {
            return Err(SimError::ControlIsTarget(control));
        }
        let [eta, beta, gamma, delta] =
            [self.eta, self.beta, self.gamma, self.delta].map(T::as_f64);
        let rotations = |kinds: &[GateKind], ops: &mut Vec<CircuitOp>| {
            for &kind in kinds {
                if kind.angle() != Some(0.0) {
                    ops.push(CircuitOp::Gate { gate: kind, target });
                }
            }
        };
        let cnot = CircuitOp::Controlled {
            gate: GateKind::X,
            control,
            target,
        };
        let mut ops = Vec::with_capacity(8);
        rotations(&[GateKind::Rz((delta - beta) / 2.0)], &mut ops);
        ops.push(cnot.clone());
        rotations(
            &[
                GateKind::Rz(-(delta + beta) / 2.0),
                GateKind::Ry(-gamma / 2.0),
            ],
            &mut ops,
        );
        ops.push(cnot);
        rotations(&[GateKind::Ry(gamma / 2.0), GateKind::Rz(beta)], &mut ops);
        if eta != 0.0 {
            ops.push(CircuitOp::Gate {
                gate: GateKind::Phase(eta),
                target: control,
            });
        }
        Ok(ops)
    }
}

/// Fragment for the named gate on `(control, target)`.
pub fn build_controlled_from_abc<T: Scalar>(
    dec: &AbcDecomposition<T>,
    control: usize,
    target: usize,
) -> Result<Vec<CircuitOp>> {
    dec.fragment(control, target)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TARGETS: [DecomposeTarget; 6] = [
        DecomposeTarget::Observable(Observable::Q),
        DecomposeTarget::Observable(Observable::R),
        DecomposeTarget::Observable(Observable::S),
        DecomposeTarget::Observable(Observable::T),
        DecomposeTarget::Hadamard,
        DecomposeTarget::Ry(gate::PHI),
    ];

    #[test]
    fn every_angle_table_reconstructs_its_gate() {
        for target in TARGETS {
            let dec = abc_decompose::<f64>(target);
            let u = target.target_gate::<f64>();
            assert!(
                dec.euler_form().max_abs_diff(u.matrix()) < 1e-10,
                "{target} euler"
            );
            assert!(
                dec.abc_form().max_abs_diff(u.matrix()) < 1e-10,
                "{target} abc"
            );
            assert!(
                dec.abc_product().max_abs_diff(&CMatrix::identity(2)) < 1e-10,
                "{target} ABC=I"
            );
        }
    }

    #[test]
    fn hadamard_table_including_phase() {
        assert_eq!(
            DecomposeTarget::Hadamard.angles(),
            (FRAC_PI_2, 0.0, FRAC_PI_2, PI)
        );
        let dec = abc_decompose::<f64>(DecomposeTarget::Hadamard);
        assert!(
            dec.euler_form()
                .max_abs_diff(gate::hadamard::<f64>().matrix())
                < 1e-12
        );
    }

    #[test]
    fn ry_table_gives_half_angle_a_and_b() {
        let phi = -3.0 * PI / 2.0;
        let dec = abc_decompose::<f64>(DecomposeTarget::Ry(phi));
        assert!(
            dec.a
                .matrix()
                .max_abs_diff(gate::ry(-3.0 * PI / 4.0).matrix())
                < 1e-12
        );
        assert!(
            dec.b
                .matrix()
                .max_abs_diff(gate::ry(3.0 * PI / 4.0).matrix())
                < 1e-12
        );
        assert!(dec.c.matrix().max_abs_diff(&CMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn q_reconstruction_is_z() {
        let dec = abc_decompose::<f64>(DecomposeTarget::Observable(Observable::Q));
        assert!(
            dec.euler_form()
                .max_abs_diff(gate::pauli_z::<f64>().matrix())
                < 1e-12
        );
    }

    #[test]
    fn controlled_h_fragment_matches_figure_layout() {
        let ops = abc_decompose::<f64>(DecomposeTarget::Hadamard)
            .fragment(0, 1)
            .unwrap();
        let expected = vec![
            CircuitOp::Gate {
                gate: GateKind::Rz(FRAC_PI_2),
                target: 1,
            },
            CircuitOp::Controlled {
                gate: GateKind::X,
                control: 0,
                target: 1,
            },
            CircuitOp::Gate {
                gate: GateKind::Rz(-FRAC_PI_2),
                target: 1,
            },
            CircuitOp::Gate {
                gate: GateKind::Ry(-PI / 4.0),
                target: 1,
            },
            CircuitOp::Controlled {
                gate: GateKind::X,
                control: 0,
                target: 1,
            },
            CircuitOp::Gate {
                gate: GateKind::Ry(PI / 4.0),
                target: 1,
            },
            CircuitOp::Gate {
                gate: GateKind::Phase(FRAC_PI_2),
                target: 0,
            },
        ];
        assert_eq!(ops, expected);
    }

    #[test]
    fn identity_fragment_is_two_cnots() {
        let dec = AbcDecomposition::<f64>::from_angles(0.0, 0.0, 0.0, 0.0);
        let ops = dec.fragment(1, 0).unwrap();
        assert_eq!(ops.len(), 2);
        assert!(ops.iter().all(|op| matches!(
            op,
            CircuitOp::Controlled {
                gate: GateKind::X,
                ..
            }
        )));
    }

    #[test]
    fn fragment_rejects_equal_wires() {
        let dec = abc_decompose::<f64>(DecomposeTarget::Hadamard);
        assert_eq!(dec.fragment(2, 2), Err(SimError::ControlIsTarget(2)));
    }

    #[test]
    fn target_parsing() {
        assert_eq!(
            "H".parse::<DecomposeTarget>().unwrap(),
            DecomposeTarget::Hadamard
        );
        assert_eq!(
            "Ry(0.5)".parse::<DecomposeTarget>().unwrap(),
            DecomposeTarget::Ry(0.5)
        );
        assert_eq!(
            "s".parse::<DecomposeTarget>().unwrap(),
            DecomposeTarget::Observable(Observable::S)
        );
        assert!("Rx(1)".parse::<DecomposeTarget>().is_err());
    }
}
