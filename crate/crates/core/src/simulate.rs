//! Exact outcome distributions and seeded shot sampling.
//!
//! Classical outcomes are packed into an integer with bit `c0` as the most
//! significant of `n_bits`, so formatting the integer in binary gives the
//! bitstring read top to bottom.
//!
//! Each shot draws from two ChaCha8 streams derived from `(seed, circuit,
//! shot)`: one for measurements and one for noise. Results therefore do not
//! depend on how shots are spread over worker threads, and a noise model
//! that never fires leaves the measurement draws untouched.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{make_channel, ChannelSpec, KrausChannel};
use crate::circuit::{CircuitOp, CircuitSpec, WireRole};
use crate::error::{Result, SimError};
use crate::gate::{self, Gate};
use crate::matrix::CMatrix;
use crate::scalar::Scalar;
use crate::state::StateVector;

/// Largest per-operation depolarizing rate accepted.
pub const MAX_DEPOLARIZING_RATE: f64 = 0.1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseModel {
    #[default]
    None,
    /// After every executed gate, each touched qubit independently suffers
    /// a uniformly chosen X, Y or Z with probability `rate`.
    Depolarizing { rate: f64 },
    /// A Kraus channel applied once, at the barrier, to the first data qubit
    /// (or to both data qubits for the two-qubit channel).
    Channel { spec: ChannelSpec },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::Depolarizing { rate } => {
                if (0.0..=MAX_DEPOLARIZING_RATE).contains(&rate) {
                    Ok(())
                } else {
                    Err(SimError::Config(format!(
                        "depolarizing rate must be in [0, {MAX_DEPOLARIZING_RATE}], got {rate}"
                    )))
                }
            }
            NoiseModel::Channel { spec } => spec.validate(),
        }
    }

    /// True when the model cannot change any outcome.
    pub fn is_silent(&self) -> bool {
        matches!(
            self,
            NoiseModel::None | NoiseModel::Depolarizing { rate: 0.0 }
        )
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::None => f.write_str("none"),
            NoiseModel::Depolarizing { rate } => write!(f, "depolarizing:{rate}"),
            NoiseModel::Channel { spec } => write!(f, "{spec}"),
        }
    }
}

impl FromStr for NoiseModel {
    type Err = SimError;

    /// `none`, `depolarizing:<rate>` or a channel spec such as `B:p=0.9`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("none") {
            return Ok(NoiseModel::None);
        }
        let model = match t.strip_prefix("depolarizing:") {
            Some(rate) => NoiseModel::Depolarizing {
                rate: rate
                    .trim()
                    .parse()
                    .map_err(|_| SimError::Config(format!("bad depolarizing rate {rate:?}")))?,
            },
            None => NoiseModel::Channel { spec: t.parse()? },
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Clone, Debug)]
enum Step<T> {
    Gate {
        m: CMatrix<T>,
        q: usize,
    },
    Controlled {
        m: CMatrix<T>,
        control: usize,
        target: usize,
    },
    Measure {
        q: usize,
        bit: usize,
    },
    Classical {
        m: CMatrix<T>,
        bit: usize,
        target: usize,
    },
    Barrier,
}

/// A validated circuit with its gate matrices built once.
#[derive(Clone, Debug)]
pub struct CompiledCircuit<T> {
    spec: CircuitSpec,
    steps: Vec<Step<T>>,
    n_bits: usize,
    terminal_start: usize,
}

impl<T: Scalar> CompiledCircuit<T> {
    pub fn new(spec: &CircuitSpec) -> Result<Self> {
        spec.validate()?;
        let matrix = |kind: crate::gate::GateKind| -> Result<CMatrix<T>> {
            let g: Gate<T> = kind.to_gate();
            g.validate()?;
            Ok(g.matrix().clone())
        };
        let steps = spec
            .ops
            .iter()
            .map(|op| {
                Ok(match *op {
                    CircuitOp::Gate { gate, target } => Step::Gate {
                        m: matrix(gate)?,
                        q: target,
                    },
                    CircuitOp::Controlled {
                        gate,
                        control,
                        target,
                    } => Step::Controlled {
                        m: matrix(gate)?,
                        control,
                        target,
                    },
                    CircuitOp::Measure { qubit, bit } => Step::Measure { q: qubit, bit },
                    CircuitOp::ClassicallyControlled { gate, bit, target } => Step::Classical {
                        m: matrix(gate)?,
                        bit,
                        target,
                    },
                    CircuitOp::Barrier => Step::Barrier,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spec: spec.clone(),
            steps,
            n_bits: spec.n_bits(),
            terminal_start: spec.terminal_start(),
        })
    }

    pub fn spec(&self) -> &CircuitSpec {
        &self.spec
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    fn terminal_measures(&self) -> Vec<(usize, usize)> {
        self.steps[self.terminal_start..]
            .iter()
            .filter_map(|s| match *s {
                Step::Measure { q, bit } => Some((q, bit)),
                _ => None,
            })
            .collect()
    }

    fn set_bit(&self, bits: &mut usize, bit: usize, value: u8) {
        let mask = 1 << (self.n_bits - 1 - bit);
        if value == 1 {
            *bits |= mask;
        } else {
            *bits &= !mask;
        }
    }

    fn get_bit(&self, bits: usize, bit: usize) -> bool {
        bits & (1 << (self.n_bits - 1 - bit)) != 0
    }

    /// Writes the outcome of the terminal block, given as an index into the
    /// marginal over `measures`, into `bits`.
    fn scatter_terminal(&self, measures: &[(usize, usize)], k: usize, bits: &mut usize) {
        let w = measures.len();
        for (pos, &(_, bit)) in measures.iter().enumerate() {
            self.set_bit(bits, bit, ((k >> (w - 1 - pos)) & 1) as u8);
        }
    }

    /// State just before the terminal measurements, for circuits without
    /// mid-circuit measurement.
    pub fn pre_measurement_state(&self) -> Result<StateVector<T>> {
        if self.spec.has_mid_circuit_measurement() {
            return Err(SimError::InvalidCircuit(
                "circuit measures before its final block".into(),
            ));
        }
        let mut state = StateVector::new_zero_state(self.spec.n_qubits)?;
        let mut bits = 0;
        for step in &self.steps[..self.terminal_start] {
            self.apply_unitary(&mut state, step, &mut bits);
        }
        Ok(state)
    }

    /// Applies a non-measuring step; returns the qubits it acted on.
    fn apply_unitary(
        &self,
        state: &mut StateVector<T>,
        step: &Step<T>,
        bits: &mut usize,
    ) -> Option<Vec<usize>> {
        match step {
            Step::Gate { m, q } => {
                state.apply_matrix_1q(m, *q, None);
                Some(vec![*q])
            }
            Step::Controlled { m, control, target } => {
                state.apply_matrix_1q(m, *target, Some(*control));
                Some(vec![*control, *target])
            }
            Step::Classical { m, bit, target } => {
                if self.get_bit(*bits, *bit) {
                    state.apply_matrix_1q(m, *target, None);
                    Some(vec![*target])
                } else {
                    None
                }
            }
            Step::Measure { .. } | Step::Barrier => None,
        }
    }

    /// Exact probability of every classical outcome, branching on
    /// mid-circuit measurements. Bits never written read as 0.
    pub fn exact_distribution(&self) -> Result<Vec<f64>> {
        let mut out = vec![0.0; 1 << self.n_bits];
        let state = StateVector::new_zero_state(self.spec.n_qubits)?;
        self.branch(state, 0, 0, 1.0, &mut out)?;
        Ok(out)
    }

    fn branch(
        &self,
        mut state: StateVector<T>,
        from: usize,
        mut bits: usize,
        weight: f64,
        out: &mut [f64],
    ) -> Result<()> {
        for idx in from..self.terminal_start {
            match self.steps[idx] {
                Step::Measure { q, bit } => {
                    let p1 = state.probability_of_one(q)?.as_f64();
                    for (outcome, p) in [(0u8, 1.0 - p1), (1u8, p1)] {
                        if p < T::DEGENERATE_PROB.as_f64() {
                            continue;
                        }
                        let mut next = state.clone();
                        next.project(q, outcome)?;
                        let mut b = bits;
                        self.set_bit(&mut b, bit, outcome);
                        self.branch(next, idx + 1, b, weight * p, out)?;
                    }
                    return Ok(());
                }
                ref step => {
                    self.apply_unitary(&mut state, step, &mut bits);
                }
            }
        }
        let measures = self.terminal_measures();
        let qubits: Vec<usize> = measures.iter().map(|m| m.0).collect();
        for (k, p) in state
            .marginal_probabilities(&qubits)?
            .into_iter()
            .enumerate()
        {
            let mut b = bits;
            self.scatter_terminal(&measures, k, &mut b);
            out[b] += weight * p.as_f64();
        }
        Ok(())
    }
}

/// Index of the first entry whose running sum exceeds `u`.
fn pick(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = k;
        if u < acc {
            return k;
        }
    }
    last
}

/// Derives the per-shot stream for `(circuit, shot)`; `noise` selects the
/// second of the pair.
fn shot_rng(base: &ChaCha8Rng, circuit: u64, shot: u64, noise: bool) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(((circuit << 32 | shot) << 1) | u64::from(noise));
    rng
}

/// Runs seeded shots of one circuit under a noise model.
pub struct Sampler<T> {
    circuit: CompiledCircuit<T>,
    noise: NoiseModel,
    channel: Option<(KrausChannel<T>, Vec<usize>)>,
    /// Cached terminal marginal for noiseless circuits without mid-circuit measurement.
    cached: Option<Vec<f64>>,
    base: ChaCha8Rng,
    circuit_index: u64,
}

impl<T: Scalar> Sampler<T> {
    pub fn new(
        spec: &CircuitSpec,
        noise: NoiseModel,
        seed: u64,
        circuit_index: u64,
    ) -> Result<Self> {
        noise.validate()?;
        let circuit = CompiledCircuit::new(spec)?;
        let channel = match noise {
            NoiseModel::Channel { spec: ch } => {
                let kraus = make_channel::<T>(ch)?;
                let role_wire = |role| {
                    spec.wire(role).ok_or_else(|| {
                        SimError::InvalidCircuit(format!("no {} wire", role.as_str()))
                    })
                };
                let qubits = if kraus.arity() == 2 {
                    vec![role_wire(WireRole::Data1)?, role_wire(WireRole::Data2)?]
                } else {
                    vec![role_wire(WireRole::Data1)?]
                };
                if spec.barrier_index().is_none() {
                    return Err(SimError::InvalidCircuit(
                        "channel noise needs a barrier".into(),
                    ));
                }
                Some((kraus, qubits))
            }
            _ => None,
        };
        let cached = if noise.is_silent() && !spec.has_mid_circuit_measurement() {
            let state = circuit.pre_measurement_state()?;
            let qubits: Vec<usize> = circuit.terminal_measures().iter().map(|m| m.0).collect();
            Some(
                state
                    .marginal_probabilities(&qubits)?
                    .into_iter()
                    .map(T::as_f64)
                    .collect(),
            )
        } else {
            None
        };
        Ok(Self {
            circuit,
            noise,
            channel,
            cached,
            base: ChaCha8Rng::seed_from_u64(seed),
            circuit_index,
        })
    }

    pub fn n_bits(&self) -> usize {
        self.circuit.n_bits
    }

    /// One shot; returns the packed classical outcome.
    pub fn shot(&self, shot: u64) -> Result<usize> {
        let mut meas = shot_rng(&self.base, self.circuit_index, shot, false);
        let measures = self.circuit.terminal_measures();
        let mut bits = 0;
        if let Some(marginal) = &self.cached {
            let k = pick(marginal, meas.gen());
            self.circuit.scatter_terminal(&measures, k, &mut bits);
            return Ok(bits);
        }
        let mut noise_rng = shot_rng(&self.base, self.circuit_index, shot, true);
        let mut state = StateVector::<T>::new_zero_state(self.circuit.spec.n_qubits)?;
        for step in &self.circuit.steps[..self.circuit.terminal_start] {
            match step {
                Step::Measure { q, bit } => {
                    let rec = state.measure_with_draw(*q, meas.gen())?;
                    self.circuit.set_bit(&mut bits, *bit, rec.outcome);
                }
                Step::Barrier => {
                    if let Some((kraus, qubits)) = &self.channel {
                        kraus.apply_trajectory(&mut state, qubits, noise_rng.gen())?;
                    }
                }
                step => {
                    if let Some(touched) = self.circuit.apply_unitary(&mut state, step, &mut bits) {
                        self.depolarize(&mut state, &touched, &mut noise_rng);
                    }
                }
            }
        }
        if !state.is_finite() {
            return Err(SimError::NotNormalized(f64::NAN));
        }
        let qubits: Vec<usize> = measures.iter().map(|m| m.0).collect();
        let marginal: Vec<f64> = state
            .marginal_probabilities(&qubits)?
            .into_iter()
            .map(T::as_f64)
            .collect();
        let k = pick(&marginal, meas.gen());
        self.circuit.scatter_terminal(&measures, k, &mut bits);
        Ok(bits)
    }

    fn depolarize(&self, state: &mut StateVector<T>, touched: &[usize], rng: &mut ChaCha8Rng) {
        let NoiseModel::Depolarizing { rate } = self.noise else {
            return;
        };
        for &q in touched {
            if rng.gen::<f64>() < rate {
                let pauli = match rng.gen_range(0..3) {
                    0 => gate::pauli_x::<T>(),
                    1 => gate::pauli_y::<T>(),
                    _ => gate::pauli_z::<T>(),
                };
                state.apply_matrix_1q(pauli.matrix(), q, None);
            }
        }
    }

    /// Outcome counts of `shots` shots, indexed by packed outcome.
    ///
    /// `workers = 0` uses rayon's default pool size.
    pub fn run(&self, shots: u64, workers: usize) -> Result<Vec<u64>> {
        let width = 1usize << self.n_bits();
        let job = || {
            (0..shots)
                .into_par_iter()
                .try_fold(
                    || vec![0u64; width],
                    |mut acc, s| {
                        acc[self.shot(s)?] += 1;
                        Ok::<_, SimError>(acc)
                    },
                )
                .try_reduce(
                    || vec![0u64; width],
                    |mut a, b| {
                        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                        Ok(a)
                    },
                )
        };
        if workers == 0 {
            return job();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| SimError::Config(format!("cannot start worker pool: {e}")))?;
        pool.install(job)
    }
}

/// `k` as a `width`-character bitstring, `c0` first.
pub fn format_bits(k: usize, width: usize) -> String {
    (0..width)
        .map(|i| {
            if k >> (width - 1 - i) & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

/// Inverse of [`format_bits`].
pub fn parse_bits(s: &str) -> Result<usize> {
    s.chars().try_fold(0usize, |acc, ch| match ch {
        '0' => Ok(acc << 1),
        '1' => Ok(acc << 1 | 1),
        _ => Err(SimError::Config(format!("not a bitstring: {s:?}"))),
    })
}
