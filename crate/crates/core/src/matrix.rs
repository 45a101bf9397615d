//! Small dense square complex matrices.
//!
//! Dimensions never exceed 64 here, so everything is a plain row-major
//! `Vec` with naive O(d³) products.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;

use crate::scalar::{one, zero, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> CMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = one();
        }
        m
    }

    /// Builds a matrix from rows. Panics if the rows are not square.
    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            assert_eq!(row.len(), dim, "matrix rows must form a square");
            data.extend_from_slice(row);
        }
        Self { dim, data }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let rows: Vec<Vec<Complex<T>>> = rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&x| Complex::new(T::lit(x), T::zero()))
                    .collect()
            })
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diagonal(entries: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    /// Outer product `|a⟩⟨b|`.
    pub fn outer(a: &[Complex<T>], b: &[Complex<T>]) -> Self {
        assert_eq!(a.len(), b.len());
        let dim = a.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = a[i] * b[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(Complex::new(s, T::zero()))
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).fold(zero(), |acc, i| acc + self[(i, i)])
    }

    /// Kronecker product `self ⊗ rhs`; `self` acts on the more significant index bits.
    pub fn kron(&self, rhs: &Self) -> Self {
        let dim = self.dim * rhs.dim;
        let mut m = Self::zeros(dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self[(i, j)];
                if a == zero() {
                    continue;
                }
                for k in 0..rhs.dim {
                    for l in 0..rhs.dim {
                        m[(i * rhs.dim + k, j * rhs.dim + l)] = a * rhs[(k, l)];
                    }
                }
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).fold(zero(), |acc, j| acc + self[(i, j)] * v[j]))
            .collect()
    }

    /// Largest entry-wise modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Self) -> T {
        assert_eq!(self.dim, rhs.dim);
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }

    /// Residual of `self` against `rhs` once the best global phase is divided out.
    pub fn max_abs_diff_up_to_phase(&self, rhs: &Self) -> T {
        let pivot = rhs
            .data
            .iter()
            .zip(&self.data)
            .max_by(|a, b| a.0.norm().partial_cmp(&b.0.norm()).unwrap())
            .map(|(r, s)| (*r, *s));
        match pivot {
            Some((r, s)) if s.norm() > T::zero() => {
                let phase = r / s;
                let phase = phase / phase.norm();
                self.scale(phase).max_abs_diff(rhs)
            }
            _ => self.max_abs_diff(rhs),
        }
    }

    pub fn unitarity_residual(&self) -> T {
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.dim))
    }

    pub fn hermiticity_residual(&self) -> T {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Commutator `[self, rhs] = self·rhs − rhs·self`.
    pub fn commutator(&self, rhs: &Self) -> Self {
        &(self * rhs) - &(rhs * self)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> CMatrix<U> {
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .map(|z| Complex::new(f(z.re), f(z.im)))
                .collect(),
        }
    }

    /// Lifts an operator on `targets` (first target = most significant bit of
    /// the operator's own index) into an `n_qubits` register.
    pub fn embed(&self, targets: &[usize], n_qubits: usize) -> Self {
        let arity = targets.len();
        assert_eq!(
            1 << arity,
            self.dim,
            "operator arity does not match targets"
        );
        let full = 1usize << n_qubits;
        let masks: Vec<usize> = targets.iter().map(|&q| 1 << (n_qubits - 1 - q)).collect();
        let target_mask: usize = masks.iter().sum();
        let sub_index = |i: usize| {
            masks
                .iter()
                .fold(0usize, |acc, &m| (acc << 1) | usize::from(i & m != 0))
        };
        let mut out = Self::zeros(full);
        for i in 0..full {
            for j in 0..full {
                if i & !target_mask != j & !target_mask {
                    continue;
                }
                out[(i, j)] = self[(sub_index(i), sub_index(j))];
            }
        }
        out
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.dim + j]
    }
}

impl<T: Scalar> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn mul(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut out = CMatrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self[(i, k)];
                if a == zero() {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * rhs.data[k * d + j];
                }
            }
        }
        out
    }
}

impl<T: Scalar> Add for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn add(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.dim, rhs.dim);
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| *a + *b)
                .collect(),
        }
    }
}

impl<T: Scalar> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn sub(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.dim, rhs.dim);
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| *a - *b)
                .collect(),
        }
    }
}

/// Kronecker product of state vectors, left factor most significant.
pub fn kron_vec<T: Scalar>(a: &[Complex<T>], b: &[Complex<T>]) -> Vec<Complex<T>> {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| x * y))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    fn x() -> CMatrix<f64> {
        CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    #[test]
    fn kron_orders_left_factor_as_high_bits() {
        let id = CMatrix::<f64>::identity(2);
        // X ⊗ I flips the high bit: |00⟩ → |10⟩
        let m = x().kron(&id);
        let v = m.mul_vec(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(v[2], c(1.0, 0.0));
    }

    #[test]
    fn embed_matches_kron() {
        let id = CMatrix::<f64>::identity(2);
        let on_middle = x().embed(&[1], 3);
        assert_eq!(on_middle, id.kron(&x()).kron(&id));
    }

    #[test]
    fn embed_two_qubit_operator_reversed_targets() {
        // CNOT with control 0 target 1, embedded on (1, 0) becomes control 1 target 0
        let cnot = CMatrix::<f64>::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ]);
        let flipped = cnot.embed(&[1, 0], 2);
        let expected = CMatrix::<f64>::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
        ]);
        assert_eq!(flipped, expected);
    }

    #[test]
    fn phase_insensitive_difference() {
        let m = x();
        let shifted = m.scale(c(0.0, 1.0));
        assert!(shifted.max_abs_diff(&m) > 1.0);
        assert!(shifted.max_abs_diff_up_to_phase(&m) < 1e-15);
    }
}
