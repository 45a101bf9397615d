//! Dense statevector over at most [`MAX_QUBITS`] qubits.
//!
//! Qubit 0 is the top circuit wire and the most significant bit of the
//! amplitude index, so index `0b01` of a two-qubit register is `|01⟩`.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::gate::Gate;
use crate::matrix::CMatrix;
use crate::scalar::{one, zero, Scalar};

pub const MAX_QUBITS: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T> {
    n_qubits: usize,
    amps: Vec<Complex<T>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord<T> {
    pub qubit: usize,
    pub outcome: u8,
    /// Born probability of `outcome` before collapse.
    pub probability: T,
}

fn check_qubit_count(n: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&n) {
        Ok(())
    } else {
        Err(SimError::Config(format!(
            "qubit count must be in 1..={MAX_QUBITS}, got {n}"
        )))
    }
}

impl<T: Scalar> StateVector<T> {
    /// `|0…0⟩` on `n` qubits.
    pub fn new_zero_state(n: usize) -> Result<Self> {
        check_qubit_count(n)?;
        let mut amps = vec![zero(); 1 << n];
        amps[0] = one();
        Ok(Self { n_qubits: n, amps })
    }

    /// Wraps explicit amplitudes; the vector must be normalized.
    pub fn from_amplitudes(amps: Vec<Complex<T>>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(SimError::Config(format!(
                "amplitude count {len} is not 2^n with n ≥ 1"
            )));
        }
        let n = len.trailing_zeros() as usize;
        check_qubit_count(n)?;
        let state = Self { n_qubits: n, amps };
        let norm = state.norm_sqr();
        if !norm.is_finite() || (norm - T::one()).abs() > T::NORM_TOL * T::lit(100.0) {
            return Err(SimError::NotNormalized(norm.as_f64()));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps
            .iter()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    fn bit(&self, q: usize) -> usize {
        1 << (self.n_qubits - 1 - q)
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q < self.n_qubits {
            Ok(())
        } else {
            Err(SimError::QubitOutOfRange {
                index: q,
                n_qubits: self.n_qubits,
            })
        }
    }

    /// Applies `gate` to qubit `q` (identity elsewhere).
    pub fn apply_single(&mut self, gate: &Gate<T>, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        gate.validate()?;
        self.apply_matrix_1q(gate.matrix(), q, None);
        Ok(())
    }

    /// Applies `gate` to `target` on the subspace where `control` is `|1⟩`.
    pub fn apply_controlled(
        &mut self,
        gate: &Gate<T>,
        control: usize,
        target: usize,
    ) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(SimError::ControlIsTarget(control));
        }
        gate.validate()?;
        self.apply_matrix_1q(gate.matrix(), target, Some(control));
        Ok(())
    }

    /// Raw 2×2 action without unitarity checks; used for Kraus trajectories.
    pub(crate) fn apply_matrix_1q(&mut self, m: &CMatrix<T>, q: usize, control: Option<usize>) {
        let tbit = self.bit(q);
        let cbit = control.map_or(0, |c| self.bit(c));
        let (m00, m01, m10, m11) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        for i in 0..self.amps.len() {
            if i & tbit != 0 || i & cbit != cbit {
                continue;
            }
            let j = i | tbit;
            let (a0, a1) = (self.amps[i], self.amps[j]);
            self.amps[i] = m00 * a0 + m01 * a1;
            self.amps[j] = m10 * a0 + m11 * a1;
        }
    }

    /// Raw 4×4 action on `(q_hi, q_lo)`; `q_hi` is the operator's high bit.
    pub(crate) fn apply_matrix_2q(&mut self, m: &CMatrix<T>, q_hi: usize, q_lo: usize) {
        let (bh, bl) = (self.bit(q_hi), self.bit(q_lo));
        for i in 0..self.amps.len() {
            if i & (bh | bl) != 0 {
                continue;
            }
            let idx = [i, i | bl, i | bh, i | bh | bl];
            let old = idx.map(|k| self.amps[k]);
            for (r, &k) in idx.iter().enumerate() {
                self.amps[k] = (0..4).fold(zero(), |acc, c| acc + m[(r, c)] * old[c]);
            }
        }
    }

    pub(crate) fn renormalize(&mut self) -> Result<()> {
        let norm = self.norm_sqr();
        if norm < T::DEGENERATE_PROB {
            return Err(SimError::DegenerateBranch(norm.as_f64()));
        }
        let s = T::one() / norm.sqrt();
        for a in &mut self.amps {
            *a *= s;
        }
        Ok(())
    }

    /// `|amp_i|²` for every basis index.
    pub fn outcome_probabilities(&self) -> Vec<T> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Distribution over the listed qubits, `qubits[0]` as the most significant bit.
    pub fn marginal_probabilities(&self, qubits: &[usize]) -> Result<Vec<T>> {
        for &q in qubits {
            self.check_qubit(q)?;
        }
        let bits: Vec<usize> = qubits.iter().map(|&q| self.bit(q)).collect();
        let mut out = vec![T::zero(); 1 << qubits.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let k = bits
                .iter()
                .fold(0usize, |acc, &b| (acc << 1) | usize::from(i & b != 0));
            out[k] += a.norm_sqr();
        }
        Ok(out)
    }

    /// Probability of reading `1` on qubit `q`.
    pub fn probability_of_one(&self, q: usize) -> Result<T> {
        self.check_qubit(q)?;
        let b = self.bit(q);
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & b != 0)
            .fold(T::zero(), |acc, (_, a)| acc + a.norm_sqr()))
    }

    /// Projects qubit `q` onto `outcome` and renormalizes, returning the
    /// pre-collapse probability of that outcome.
    pub fn project(&mut self, q: usize, outcome: u8) -> Result<T> {
        let p1 = self.probability_of_one(q)?;
        let p = if outcome == 1 {
            p1
        } else {
            self.norm_sqr() - p1
        };
        if p < T::DEGENERATE_PROB {
            return Err(SimError::DegenerateBranch(p.as_f64()));
        }
        let b = self.bit(q);
        let keep_set = outcome == 1;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & b != 0) != keep_set {
                *a = zero();
            }
        }
        self.renormalize()?;
        Ok(p)
    }

    /// Measures qubit `q` in the computational basis, collapsing the state.
    pub fn measure_qubit<R: Rng + ?Sized>(
        &mut self,
        q: usize,
        rng: &mut R,
    ) -> Result<MeasurementRecord<T>> {
        let u: f64 = rng.gen();
        self.measure_with_draw(q, u)
    }

    /// Measurement driven by a uniform draw `u ∈ [0, 1)`: outcome 0 iff `u < p₀`.
    pub fn measure_with_draw(&mut self, q: usize, u: f64) -> Result<MeasurementRecord<T>> {
        let p1 = self.probability_of_one(q)?;
        let p0 = self.norm_sqr() - p1;
        let outcome = u8::from(u >= p0.as_f64());
        let probability = self.project(q, outcome)?;
        Ok(MeasurementRecord {
            qubit: q,
            outcome,
            probability,
        })
    }

    /// `⟨ψ|A|ψ⟩` for an operator on the full register.
    pub fn expectation(&self, op: &CMatrix<T>) -> Result<Complex<T>> {
        if op.dim() != self.amps.len() {
            return Err(SimError::DimensionMismatch {
                expected: self.amps.len(),
                found: op.dim(),
            });
        }
        let v = op.mul_vec(&self.amps);
        Ok(self
            .amps
            .iter()
            .zip(&v)
            .fold(zero(), |acc, (a, b)| acc + a.conj() * b))
    }

    /// `⟨Z_{q₁} Z_{q₂} …⟩` straight from the probabilities.
    pub fn z_parity_expectation(&self, qubits: &[usize]) -> Result<T> {
        for &q in qubits {
            self.check_qubit(q)?;
        }
        let mask: usize = qubits.iter().map(|&q| self.bit(q)).fold(0, |a, b| a ^ b);
        Ok(self.amps.iter().enumerate().fold(T::zero(), |acc, (i, a)| {
            if (i & mask).count_ones().is_multiple_of(2) {
                acc + a.norm_sqr()
            } else {
                acc - a.norm_sqr()
            }
        }))
    }

    pub fn is_finite(&self) -> bool {
        self.amps
            .iter()
            .all(|a| a.re.is_finite() && a.im.is_finite())
    }

    /// Full unitary of a sequence of state updates, column by column.
    pub fn unitary_of(
        n_qubits: usize,
        apply: impl Fn(&mut Self) -> Result<()>,
    ) -> Result<CMatrix<T>> {
        check_qubit_count(n_qubits)?;
        let dim = 1 << n_qubits;
        let mut m = CMatrix::zeros(dim);
        for col in 0..dim {
            let mut amps = vec![zero(); dim];
            amps[col] = one();
            let mut s = Self { n_qubits, amps };
            apply(&mut s)?;
            for (row, a) in s.amps.iter().enumerate() {
                m[(row, col)] = *a;
            }
        }
        Ok(m)
    }
}
