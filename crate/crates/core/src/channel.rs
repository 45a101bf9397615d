//! Kraus-operator noise channels and their closed-form effect on the CHSH terms.
//!
//! Conventions: in the flip channels `p` is the probability that *nothing*
//! happens, `θ` parametrizes amplitude damping through `sin²θ`, and the
//! two-qubit depolarizing channel maps `ρ ↦ p_d I/4 + (1 − p_d) ρ`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Result, SimError};
use crate::gate;
use crate::matrix::CMatrix;
use crate::scalar::Scalar;
use crate::state::StateVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChannelKind {
    B,
    P,
    BP,
    A,
    GA,
    D,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 6] = [
        ChannelKind::B,
        ChannelKind::P,
        ChannelKind::BP,
        ChannelKind::A,
        ChannelKind::GA,
        ChannelKind::D,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelKind::B => "B",
            ChannelKind::P => "P",
            ChannelKind::BP => "BP",
            ChannelKind::A => "A",
            ChannelKind::GA => "GA",
            ChannelKind::D => "D",
        }
    }

    /// Name of the swept parameter.
    pub fn primary_param(self) -> &'static str {
        match self {
            ChannelKind::B | ChannelKind::P | ChannelKind::BP => "p",
            ChannelKind::A | ChannelKind::GA => "theta",
            ChannelKind::D => "pd",
        }
    }

    /// The eleven-point sweep used for the noise table.
    pub fn grid(self) -> Vec<f64> {
        let top = match self {
            ChannelKind::A | ChannelKind::GA => std::f64::consts::FRAC_PI_2,
            _ => 1.0,
        };
        (0..=10).map(|k| top * f64::from(k) / 10.0).collect()
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for ChannelKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "B" => Ok(ChannelKind::B),
            "P" => Ok(ChannelKind::P),
            "BP" => Ok(ChannelKind::BP),
            "A" => Ok(ChannelKind::A),
            "GA" => Ok(ChannelKind::GA),
            "D" => Ok(ChannelKind::D),
            _ => Err(SimError::UnknownLabel(s.to_string())),
        }
    }
}

/// A channel together with its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "channel")]
pub enum ChannelSpec {
    B { p: f64 },
    P { p: f64 },
    BP { p: f64 },
    A { theta: f64 },
    GA { theta: f64, p2: f64 },
    D { pd: f64 },
}

fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(SimError::ProbabilityOutOfRange { name, value })
    }
}

fn check_angle(value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(SimError::Config(format!(
            "theta must be finite, got {value}"
        )))
    }
}

impl ChannelSpec {
    pub fn kind(&self) -> ChannelKind {
        match self {
            ChannelSpec::B { .. } => ChannelKind::B,
            ChannelSpec::P { .. } => ChannelKind::P,
            ChannelSpec::BP { .. } => ChannelKind::BP,
            ChannelSpec::A { .. } => ChannelKind::A,
            ChannelSpec::GA { .. } => ChannelKind::GA,
            ChannelSpec::D { .. } => ChannelKind::D,
        }
    }

    /// Builds a spec from a kind and named parameters; GA's `p2` defaults to ½.
    pub fn from_params(kind: ChannelKind, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |name: &'static str| {
            params
                .get(name)
                .copied()
                .ok_or_else(|| SimError::Config(format!("channel {kind} needs parameter {name}")))
        };
        for key in params.keys() {
            let allowed = match kind {
                ChannelKind::GA => key == "theta" || key == "p2",
                _ => key == kind.primary_param(),
            };
            if !allowed {
                return Err(SimError::Config(format!(
                    "channel {kind} has no parameter {key}"
                )));
            }
        }
        let spec = match kind {
            ChannelKind::B => ChannelSpec::B { p: get("p")? },
            ChannelKind::P => ChannelSpec::P { p: get("p")? },
            ChannelKind::BP => ChannelSpec::BP { p: get("p")? },
            ChannelKind::A => ChannelSpec::A {
                theta: get("theta")?,
            },
            ChannelKind::GA => ChannelSpec::GA {
                theta: get("theta")?,
                p2: params.get("p2").copied().unwrap_or(0.5),
            },
            ChannelKind::D => ChannelSpec::D { pd: get("pd")? },
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The spec at `value` of the swept parameter (GA uses the given `p2`).
    pub fn at(kind: ChannelKind, value: f64, p2: f64) -> Self {
        match kind {
            ChannelKind::B => ChannelSpec::B { p: value },
            ChannelKind::P => ChannelSpec::P { p: value },
            ChannelKind::BP => ChannelSpec::BP { p: value },
            ChannelKind::A => ChannelSpec::A { theta: value },
            ChannelKind::GA => ChannelSpec::GA { theta: value, p2 },
            ChannelKind::D => ChannelSpec::D { pd: value },
        }
    }

    pub fn primary_value(&self) -> f64 {
        match *self {
            ChannelSpec::B { p } | ChannelSpec::P { p } | ChannelSpec::BP { p } => p,
            ChannelSpec::A { theta } | ChannelSpec::GA { theta, .. } => theta,
            ChannelSpec::D { pd } => pd,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ChannelSpec::B { p } | ChannelSpec::P { p } | ChannelSpec::BP { p } => {
                check_probability("p", p).map(drop)
            }
            ChannelSpec::A { theta } => check_angle(theta).map(drop),
            ChannelSpec::GA { theta, p2 } => {
                check_angle(theta)?;
                check_probability("p2", p2).map(drop)
            }
            ChannelSpec::D { pd } => check_probability("pd", pd).map(drop),
        }
    }

    /// Number of qubits the channel acts on.
    pub fn arity(&self) -> usize {
        if matches!(self, ChannelSpec::D { .. }) {
            2
        } else {
            1
        }
    }

    /// Closed forms of `√2·⟨QS⟩, √2·⟨QT⟩, √2·⟨RS⟩, √2·⟨RT⟩` after the channel
    /// acts on the Bell state (single-qubit channels on the first data qubit).
    pub fn closed_form_terms(&self) -> [f64; 4] {
        match *self {
            ChannelSpec::B { p } => [2.0 * p - 1.0, 1.0 - 2.0 * p, 1.0, 1.0],
            ChannelSpec::P { p } => [1.0, -1.0, 2.0 * p - 1.0, 2.0 * p - 1.0],
            ChannelSpec::BP { p } => [2.0 * p - 1.0, 1.0 - 2.0 * p, 2.0 * p - 1.0, 2.0 * p - 1.0],
            ChannelSpec::A { theta } | ChannelSpec::GA { theta, .. } => {
                let c = theta.cos();
                [c * c, -c * c, c, c]
            }
            ChannelSpec::D { pd } => [1.0 - pd, pd - 1.0, 1.0 - pd, 1.0 - pd],
        }
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ChannelSpec::B { p } => write!(f, "B:p={p}"),
            ChannelSpec::P { p } => write!(f, "P:p={p}"),
            ChannelSpec::BP { p } => write!(f, "BP:p={p}"),
            ChannelSpec::A { theta } => write!(f, "A:theta={theta}"),
            ChannelSpec::GA { theta, p2 } => write!(f, "GA:theta={theta},p2={p2}"),
            ChannelSpec::D { pd } => write!(f, "D:pd={pd}"),
        }
    }
}

impl FromStr for ChannelSpec {
    type Err = SimError;

    /// `NAME:key=value[,key=value]`, e.g. `GA:theta=0.3,p2=0.25`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let kind: ChannelKind = name.parse()?;
        let mut params = BTreeMap::new();
        for pair in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| SimError::Config(format!("expected key=value, found {pair:?}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| SimError::Config(format!("parameter {k} is not a number: {v:?}")))?;
            params.insert(k.trim().to_string(), v);
        }
        Self::from_params(kind, &params)
    }
}

/// A trace-preserving map `ρ ↦ Σ_k E_k ρ E_k†`.
#[derive(Clone, Debug)]
pub struct KrausChannel<T> {
    pub spec: ChannelSpec,
    pub operators: Vec<CMatrix<T>>,
}

fn real_diag<T: Scalar>(a: T, b: T) -> CMatrix<T> {
    CMatrix::diagonal(&[Complex::new(a, T::zero()), Complex::new(b, T::zero())])
}

fn single_entry<T: Scalar>(row: usize, col: usize, v: T) -> CMatrix<T> {
    let mut m = CMatrix::zeros(2);
    m[(row, col)] = Complex::new(v, T::zero());
    m
}

/// Builds the standard Kraus set for `spec`.
pub fn make_channel<T: Scalar>(spec: ChannelSpec) -> Result<KrausChannel<T>> {
    spec.validate()?;
    let pauli_set = |p: f64, flip: CMatrix<T>| {
        vec![
            CMatrix::identity(2).scale_real(T::lit(p.sqrt())),
            flip.scale_real(T::lit((1.0 - p).sqrt())),
        ]
    };
    let operators = match spec {
        ChannelSpec::B { p } => pauli_set(p, gate::pauli_x::<T>().matrix().clone()),
        ChannelSpec::P { p } => pauli_set(p, gate::pauli_z::<T>().matrix().clone()),
        ChannelSpec::BP { p } => pauli_set(p, gate::pauli_y::<T>().matrix().clone()),
        ChannelSpec::A { theta } => {
            let (s, c) = T::lit(theta).sin_cos();
            vec![real_diag(T::one(), c), single_entry(0, 1, s)]
        }
        ChannelSpec::GA { theta, p2 } => {
            let (s, c) = T::lit(theta).sin_cos();
            let (w0, w1) = (T::lit(p2.sqrt()), T::lit((1.0 - p2).sqrt()));
            vec![
                real_diag(T::one(), c).scale_real(w0),
                single_entry(0, 1, s).scale_real(w0),
                real_diag(c, T::one()).scale_real(w1),
                single_entry(1, 0, s).scale_real(w1),
            ]
        }
        ChannelSpec::D { pd } => {
            let paulis: [CMatrix<T>; 4] = [
                CMatrix::identity(2),
                gate::pauli_x::<T>().matrix().clone(),
                gate::pauli_y::<T>().matrix().clone(),
                gate::pauli_z::<T>().matrix().clone(),
            ];
            let mut ops = Vec::with_capacity(16);
            for (i, a) in paulis.iter().enumerate() {
                for (j, b) in paulis.iter().enumerate() {
                    let weight = if i == 0 && j == 0 {
                        1.0 - 15.0 * pd / 16.0
                    } else {
                        pd / 16.0
                    };
                    ops.push(a.kron(b).scale_real(T::lit(weight.sqrt())));
                }
            }
            ops
        }
    };
    Ok(KrausChannel { spec, operators })
}

/// Where a channel acts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelTarget {
    Qubit(usize),
    /// Every qubit of the register, which must match the channel arity.
    Whole,
}

impl<T: Scalar> KrausChannel<T> {
    pub fn arity(&self) -> usize {
        self.spec.arity()
    }

    /// `max |Σ E_k†E_k − I|`.
    pub fn completeness_residual(&self) -> T {
        let dim = 1 << self.arity();
        let sum = self
            .operators
            .iter()
            .fold(CMatrix::zeros(dim), |acc, e| &acc + &(&e.adjoint() * e));
        sum.max_abs_diff(&CMatrix::identity(dim))
    }

    fn targets(&self, target: ChannelTarget, n_qubits: usize) -> Result<Vec<usize>> {
        let qubits: Vec<usize> = match target {
            ChannelTarget::Qubit(q) => vec![q],
            ChannelTarget::Whole => (0..n_qubits).collect(),
        };
        if qubits.len() != self.arity() {
            return Err(SimError::DimensionMismatch {
                expected: self.arity(),
                found: qubits.len(),
            });
        }
        if let Some(&q) = qubits.iter().find(|&&q| q >= n_qubits) {
            return Err(SimError::QubitOutOfRange { index: q, n_qubits });
        }
        Ok(qubits)
    }

    /// Applies the channel on explicit qubits (`qubits.len()` must equal the arity).
    pub fn apply_on(&self, rho: &DensityMatrix<T>, qubits: &[usize]) -> Result<DensityMatrix<T>> {
        let n = rho.n_qubits();
        if qubits.len() != self.arity() {
            return Err(SimError::DimensionMismatch {
                expected: self.arity(),
                found: qubits.len(),
            });
        }
        if let Some(&q) = qubits.iter().find(|&&q| q >= n) {
            return Err(SimError::QubitOutOfRange {
                index: q,
                n_qubits: n,
            });
        }
        let dim = 1 << n;
        let mut out = CMatrix::zeros(dim);
        for e in &self.operators {
            let full = e.embed(qubits, n);
            let term = &(&full * rho.matrix()) * &full.adjoint();
            out = &out + &term;
        }
        Ok(rho.with_matrix(out))
    }

    /// Draws one Kraus branch with probability `‖E_k ψ‖²` and renormalizes.
    /// `u` is a uniform draw in `[0, 1)`.
    pub fn apply_trajectory(
        &self,
        state: &mut StateVector<T>,
        qubits: &[usize],
        u: f64,
    ) -> Result<usize> {
        if qubits.len() != self.arity() {
            return Err(SimError::DimensionMismatch {
                expected: self.arity(),
                found: qubits.len(),
            });
        }
        let mut acc = 0.0;
        let mut chosen = None;
        for (k, e) in self.operators.iter().enumerate() {
            let mut branch = state.clone();
            match qubits {
                [q] => branch.apply_matrix_1q(e, *q, None),
                [hi, lo] => branch.apply_matrix_2q(e, *hi, *lo),
                _ => unreachable!("channels act on one or two qubits"),
            }
            let weight = branch.norm_sqr().as_f64();
            if weight <= 0.0 {
                continue;
            }
            chosen = Some((k, branch));
            acc += weight;
            if u < acc {
                break;
            }
        }
        // Rounding can leave u just above the accumulated total; the last
        // non-empty branch absorbs it.
        let (k, mut branch) = chosen.ok_or(SimError::DegenerateBranch(0.0))?;
        branch.renormalize()?;
        *state = branch;
        Ok(k)
    }
}

/// `E(ρ)` with the channel on `target`.
pub fn apply_channel<T: Scalar>(
    rho: &DensityMatrix<T>,
    ch: &KrausChannel<T>,
    target: ChannelTarget,
) -> Result<DensityMatrix<T>> {
    let qubits = ch.targets(target, rho.n_qubits())?;
    ch.apply_on(rho, &qubits)
}
