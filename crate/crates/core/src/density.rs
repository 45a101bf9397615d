use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Result, SimError};
use crate::gate::Gate;
use crate::matrix::CMatrix;
use crate::scalar::Scalar;
use crate::state::StateVector;

/// Mixed state over `n_qubits`, same bit convention as [`StateVector`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T> {
    n_qubits: usize,
    matrix: CMatrix<T>,
}

impl<T: Scalar> DensityMatrix<T> {
    /// `|ψ⟩⟨ψ|`.
    pub fn from_state(state: &StateVector<T>) -> Self {
        let amps = state.amplitudes();
        Self {
            n_qubits: state.n_qubits(),
            matrix: CMatrix::outer(amps, amps),
        }
    }

    /// Wraps a matrix after checking Hermiticity, unit trace and positivity.
    pub fn from_matrix(matrix: CMatrix<T>) -> Result<Self> {
        let dim = matrix.dim();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(SimError::DimensionMismatch {
                expected: dim.next_power_of_two().max(2),
                found: dim,
            });
        }
        let rho = Self {
            n_qubits: dim.trailing_zeros() as usize,
            matrix,
        };
        rho.validate()?;
        Ok(rho)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn trace(&self) -> Complex<T> {
        self.matrix.trace()
    }

    /// Smallest eigenvalue, computed in `f64`.
    pub fn min_eigenvalue(&self) -> f64 {
        let dim = self.matrix.dim();
        let m = DMatrix::from_fn(dim, dim, |i, j| {
            let z = self.matrix[(i, j)];
            Complex::new(z.re.as_f64(), z.im.as_f64())
        });
        SymmetricEigen::new(m)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.matrix.hermiticity_residual();
        if herm > T::IDENTITY_TOL {
            return Err(SimError::Config(format!(
                "density matrix not Hermitian (residual {:e})",
                herm.as_f64()
            )));
        }
        let tr = self.trace();
        if (tr.re - T::one()).abs() > T::IDENTITY_TOL || tr.im.abs() > T::IDENTITY_TOL {
            return Err(SimError::Config(format!("density matrix trace {tr} ≠ 1")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -1e-10 {
            return Err(SimError::Config(format!(
                "density matrix has eigenvalue {min_eig:e} < 0"
            )));
        }
        Ok(())
    }

    /// `tr[A ρ]` for an operator on the full register.
    pub fn expectation(&self, op: &CMatrix<T>) -> Result<Complex<T>> {
        if op.dim() != self.matrix.dim() {
            return Err(SimError::DimensionMismatch {
                expected: self.matrix.dim(),
                found: op.dim(),
            });
        }
        Ok((op * &self.matrix).trace())
    }

    pub(crate) fn with_matrix(&self, matrix: CMatrix<T>) -> Self {
        Self {
            n_qubits: self.n_qubits,
            matrix,
        }
    }
}

/// `tr[(A₁ ⊗ A₂) ρ]` on a two-qubit state, real part.
pub fn noisy_expectation<T: Scalar>(
    rho: &DensityMatrix<T>,
    pair: (&Gate<T>, &Gate<T>),
) -> Result<T> {
    let op = pair.0.matrix().kron(pair.1.matrix());
    let value = rho.expectation(&op)?;
    debug_assert!(
        value.im.abs() < T::UNITARITY_TOL,
        "imaginary residue {}",
        value.im
    );
    Ok(value.re)
}
