//! Final states and outcome probabilities built directly from Kronecker
//! products of gate matrices, without running any circuit.

use num_complex::Complex;

use crate::gate::{self, Observable, ALPHA_T, PHI};
use crate::matrix::{kron_vec, CMatrix};
use crate::scalar::{zero, Scalar};
use crate::variants::{label_for_ancillas, theoretical_expectations, ObservableLabel};

/// `(|01⟩ − |10⟩)/√2`.
pub fn bell_state<T: Scalar>() -> Vec<Complex<T>> {
    let h = T::FRAC_1_SQRT_2();
    vec![
        zero(),
        Complex::new(h, T::zero()),
        Complex::new(-h, T::zero()),
        zero(),
    ]
}

/// `(O₁ ⊗ O₂)|Φ⟩` with the diagonalizers of the two factors of `label`.
pub fn rotated_bell<T: Scalar>(label: ObservableLabel) -> Vec<Complex<T>> {
    let (a, b) = label.parts();
    let op = gate::diagonalizer::<T>(a)
        .matrix()
        .kron(gate::diagonalizer::<T>(b).matrix());
    op.mul_vec(&bell_state())
}

/// `⟨Φ|U₁ ⊗ U₂|Φ⟩`.
pub fn bell_expectation<T: Scalar>(label: ObservableLabel) -> T {
    let (a, b) = label.parts();
    let op = gate::observable::<T>(a)
        .matrix()
        .kron(gate::observable::<T>(b).matrix());
    let phi = bell_state::<T>();
    let v = op.mul_vec(&phi);
    phi.iter()
        .zip(&v)
        .fold(zero::<T>(), |acc, (x, y)| acc + x.conj() * y)
        .re
}

/// Ancilla `p₀ = ½(1 + ⟨U₁U₂⟩)` of the single-ancilla circuit.
pub fn variant_ii_p0<T: Scalar>(label: ObservableLabel) -> T {
    T::lit(0.5) * (T::one() + bell_expectation::<T>(label))
}

/// Two-qubit data block selected by ancilla pattern `(a1, a2)`, unnormalized
/// by the ½ ancilla amplitude: `(H^{a1} ⊗ Ry(φ)^{a2} Ry(α))|Φ⟩`.
fn randomized_block<T: Scalar>(a1: u8, a2: u8) -> Vec<Complex<T>> {
    let id = CMatrix::<T>::identity(2);
    let first = if a1 == 1 {
        gate::hadamard::<T>().matrix().clone()
    } else {
        id.clone()
    };
    let alpha = gate::ry::<T>(T::lit(ALPHA_T));
    let second = if a2 == 1 {
        gate::ry::<T>(T::lit(PHI)).then_after(&alpha)
    } else {
        alpha
    };
    first.kron(second.matrix()).mul_vec(&bell_state())
}

/// Final state of the randomized four-qubit circuit, wires `a1 d1 d2 a2`.
pub fn variant_iii_state<T: Scalar>() -> Vec<Complex<T>> {
    let mut out = vec![zero(); 16];
    let half = T::lit(0.5);
    for a1 in 0..2u8 {
        for a2 in 0..2u8 {
            for (d, amp) in randomized_block::<T>(a1, a2).into_iter().enumerate() {
                out[(usize::from(a1) << 3) | (d << 1) | usize::from(a2)] = amp * half;
            }
        }
    }
    out
}

/// Distribution over `a1 a2 a3` for the five-qubit circuit.
pub fn variant_iv_probabilities<T: Scalar>() -> Vec<T> {
    let zz = gate::pauli_z::<T>()
        .matrix()
        .kron(gate::pauli_z::<T>().matrix());
    let mut out = vec![T::zero(); 8];
    for a1 in 0..2u8 {
        for a2 in 0..2u8 {
            // Each pattern has weight ¼; the third ancilla reads ⟨Z⊗Z⟩ of the block.
            let block = randomized_block::<T>(a1, a2);
            let v = zz.mul_vec(&block);
            let parity = block
                .iter()
                .zip(&v)
                .fold(zero::<T>(), |acc, (x, y)| acc + x.conj() * y)
                .re;
            let base = (usize::from(a1) << 2) | (usize::from(a2) << 1);
            let quarter = T::lit(0.25);
            out[base] = quarter * T::lit(0.5) * (T::one() + parity);
            out[base | 1] = quarter * T::lit(0.5) * (T::one() - parity);
        }
    }
    out
}

/// `(1 + v·E)/16` for the four-bit outcome `a1 d1 d2 a2`, where `E` is the
/// singlet value of the selected product and `v` the data parity.
pub fn variant_iii_closed_form(bits: usize) -> f64 {
    let bit = |k: usize| ((bits >> (3 - k)) & 1) as u8;
    let label = label_for_ancillas(bit(0), bit(3));
    let v = if bit(1) ^ bit(2) == 0 { 1.0 } else { -1.0 };
    (1.0 + v * theoretical_expectations()[&label]) / 16.0
}

/// `(1 + (−1)^{a3}·E)/8` for the three-bit outcome `a1 a2 a3`.
pub fn variant_iv_closed_form(bits: usize) -> f64 {
    let label = label_for_ancillas(((bits >> 2) & 1) as u8, ((bits >> 1) & 1) as u8);
    let v = if bits & 1 == 0 { 1.0 } else { -1.0 };
    (1.0 + v * theoretical_expectations()[&label]) / 8.0
}

/// Probabilities of `|ψ⟩`'s basis states.
pub fn probabilities<T: Scalar>(psi: &[Complex<T>]) -> Vec<T> {
    psi.iter().map(|a| a.norm_sqr()).collect()
}

/// The pre-measurement state of the two-qubit circuit for `label`, assembled
/// from single-qubit pieces: `X⊗X`, then `H⊗I`, then CNOT, then rotations.
pub fn variant_i_state_stepwise<T: Scalar>(label: ObservableLabel) -> Vec<Complex<T>> {
    let zero_ket = vec![Complex::new(T::one(), T::zero()), zero()];
    let x = gate::pauli_x::<T>();
    let one_ket = x.matrix().mul_vec(&zero_ket);
    let start = kron_vec(&one_ket, &one_ket);
    let h_i = gate::hadamard::<T>().matrix().kron(&CMatrix::identity(2));
    let cnot = gate::pauli_x::<T>().controlled_matrix();
    let bell = cnot.mul_vec(&h_i.mul_vec(&start));
    let (a, b) = label.parts();
    let first = if a == Observable::R {
        gate::hadamard::<T>()
    } else {
        gate::identity::<T>()
    };
    let rot = first.matrix().kron(gate::diagonalizer::<T>(b).matrix());
    rot.mul_vec(&bell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    #[test]
    fn bell_expectations_match_theory() {
        for (label, v) in theoretical_expectations() {
            assert!((bell_expectation::<f64>(label) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn randomized_state_is_normalized() {
        let p: f64 = probabilities(&variant_iii_state::<f64>()).iter().sum();
        assert!((p - 1.0).abs() < 1e-12);
        let q: f64 = variant_iv_probabilities::<f64>().iter().sum();
        assert!((q - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_forms_agree_with_states() {
        let p = probabilities(&variant_iii_state::<f64>());
        for (k, pk) in p.iter().enumerate() {
            assert!((pk - variant_iii_closed_form(k)).abs() < 1e-12, "{k:04b}");
        }
        for (k, pk) in variant_iv_probabilities::<f64>().iter().enumerate() {
            assert!((pk - variant_iv_closed_form(k)).abs() < 1e-12, "{k:03b}");
        }
        assert!((variant_iv_closed_form(0) - (2.0 - SQRT_2) / 16.0).abs() < 1e-15);
    }

    #[test]
    fn stepwise_matches_direct() {
        for label in ObservableLabel::ALL {
            let a = variant_i_state_stepwise::<f64>(label);
            let b = rotated_bell::<f64>(label);
            let diff = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-12, "{label}");
        }
    }
}
