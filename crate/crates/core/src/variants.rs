//! Circuit builders for the five experiment variants.
//!
//! Wire layouts (top wire first):
//!
//! | variant | wires |
//! |---|---|
//! | I | data1, data2 |
//! | II | ancilla1, data1, data2 |
//! | III | ancilla1, data1, data2, ancilla2 |
//! | IV | ancilla1, data1, data2, ancilla2, ancilla3 |
//!
//! Every builder emits a `barrier` right after the Bell pair is prepared.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitOp, CircuitSpec, WireRole};
use crate::decompose::{abc_decompose, DecomposeTarget};
use crate::error::{Result, SimError};
use crate::gate::{GateKind, Observable, ALPHA_T, PHI, THETA_S};

/// One of the four two-qubit products entering the CHSH sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ObservableLabel {
    QS,
    RS,
    RT,
    QT,
}

impl ObservableLabel {
    pub const ALL: [ObservableLabel; 4] = [
        ObservableLabel::QS,
        ObservableLabel::RS,
        ObservableLabel::RT,
        ObservableLabel::QT,
    ];

    /// `(first-qubit observable, second-qubit observable)`.
    pub fn parts(self) -> (Observable, Observable) {
        match self {
            ObservableLabel::QS => (Observable::Q, Observable::S),
            ObservableLabel::RS => (Observable::R, Observable::S),
            ObservableLabel::RT => (Observable::R, Observable::T),
            ObservableLabel::QT => (Observable::Q, Observable::T),
        }
    }

    /// Sign with which the term enters the CHSH sum.
    pub fn chsh_sign(self) -> f64 {
        if self == ObservableLabel::QT {
            -1.0
        } else {
            1.0
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ObservableLabel::QS => "QS",
            ObservableLabel::RS => "RS",
            ObservableLabel::RT => "RT",
            ObservableLabel::QT => "QT",
        }
    }
}

impl fmt::Display for ObservableLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for ObservableLabel {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "QS" => Ok(ObservableLabel::QS),
            "RS" => Ok(ObservableLabel::RS),
            "RT" => Ok(ObservableLabel::RT),
            "QT" => Ok(ObservableLabel::QT),
            _ => Err(SimError::UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VariantLabel {
    #[serde(rename = "I")]
    I,
    #[serde(rename = "II")]
    II,
    #[serde(rename = "III-quantum")]
    IIIQuantum,
    #[serde(rename = "III-classical")]
    IIIClassical,
    #[serde(rename = "IV")]
    IV,
}

impl VariantLabel {
    pub const ALL: [VariantLabel; 5] = [
        VariantLabel::I,
        VariantLabel::II,
        VariantLabel::IIIQuantum,
        VariantLabel::IIIClassical,
        VariantLabel::IV,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VariantLabel::I => "I",
            VariantLabel::II => "II",
            VariantLabel::IIIQuantum => "III-quantum",
            VariantLabel::IIIClassical => "III-classical",
            VariantLabel::IV => "IV",
        }
    }

    /// Whether the circuit itself picks the observable.
    pub fn is_randomized(self) -> bool {
        matches!(
            self,
            VariantLabel::IIIQuantum | VariantLabel::IIIClassical | VariantLabel::IV
        )
    }

    /// Number of classical bits one shot produces.
    pub fn outcome_width(self) -> usize {
        match self {
            VariantLabel::I => 2,
            VariantLabel::II => 1,
            VariantLabel::IIIQuantum | VariantLabel::IIIClassical => 4,
            VariantLabel::IV => 3,
        }
    }
}

impl fmt::Display for VariantLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for VariantLabel {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "i" | "1" => Ok(VariantLabel::I),
            "ii" | "2" => Ok(VariantLabel::II),
            "iii-quantum" | "iii" | "3" => Ok(VariantLabel::IIIQuantum),
            "iii-classical" => Ok(VariantLabel::IIIClassical),
            "iv" | "4" => Ok(VariantLabel::IV),
            _ => Err(SimError::UnknownLabel(s.to_string())),
        }
    }
}

/// How quantum-controlled gates are emitted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControlledStyle {
    /// CNOTs and single-qubit rotations only.
    #[default]
    Abc,
    /// A single controlled-U op.
    Primitive,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub controlled: ControlledStyle,
}

impl BuildOptions {
    pub fn primitive() -> Self {
        Self {
            controlled: ControlledStyle::Primitive,
        }
    }
}

fn push_controlled(
    spec: &mut CircuitSpec,
    target_gate: DecomposeTarget,
    control: usize,
    target: usize,
    opts: BuildOptions,
) -> Result<()> {
    match opts.controlled {
        ControlledStyle::Abc => {
            for op in abc_decompose::<f64>(target_gate).fragment(control, target)? {
                spec.push(op);
            }
        }
        ControlledStyle::Primitive => {
            let gate = match target_gate {
                DecomposeTarget::Observable(o) => GateKind::from_observable(o),
                DecomposeTarget::Hadamard => GateKind::H,
                DecomposeTarget::Ry(a) => GateKind::Ry(a),
            };
            spec.controlled(gate, control, target);
        }
    }
    Ok(())
}

/// `X⊗X`, `H` on the first wire and a CNOT: `(|01⟩ − |10⟩)/√2`.
fn push_bell_pair(spec: &mut CircuitSpec, d1: usize, d2: usize) {
    spec.gate(GateKind::X, d1)
        .gate(GateKind::X, d2)
        .gate(GateKind::H, d1)
        .controlled(GateKind::X, d1, d2)
        .push(CircuitOp::Barrier);
}

fn second_rotation(label: ObservableLabel) -> f64 {
    match label.parts().1 {
        Observable::S => THETA_S,
        _ => ALPHA_T,
    }
}

/// Two-qubit circuit: Bell pair, basis rotations, measure both wires.
pub fn build_variant_i(obs: ObservableLabel) -> CircuitSpec {
    let mut spec = CircuitSpec::new(2)
        .with_role(0, WireRole::Data1)
        .with_role(1, WireRole::Data2);
    push_bell_pair(&mut spec, 0, 1);
    if obs.parts().0 == Observable::R {
        spec.gate(GateKind::H, 0);
    }
    spec.gate(GateKind::Ry(second_rotation(obs)), 1)
        .measure(0, 0)
        .measure(1, 1);
    spec
}

/// Three-qubit circuit measuring `U₁U₂` through a single ancilla.
pub fn build_variant_ii(obs: ObservableLabel, opts: BuildOptions) -> Result<CircuitSpec> {
    let (a, d1, d2) = (0, 1, 2);
    let mut spec = CircuitSpec::new(3)
        .with_role(a, WireRole::Ancilla1)
        .with_role(d1, WireRole::Data1)
        .with_role(d2, WireRole::Data2);
    push_bell_pair(&mut spec, d1, d2);
    spec.gate(GateKind::H, a);
    let (u1, u2) = obs.parts();
    push_controlled(&mut spec, DecomposeTarget::Observable(u1), a, d1, opts)?;
    push_controlled(&mut spec, DecomposeTarget::Observable(u2), a, d2, opts)?;
    spec.gate(GateKind::H, a).measure(a, 0);
    Ok(spec)
}

/// Quantum or classical control of the randomized circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControlKind {
    Quantum,
    Classical,
}

fn push_randomized_body(spec: &mut CircuitSpec) {
    spec.gate(GateKind::H, 0).gate(GateKind::H, 3);
    push_bell_pair(spec, 1, 2);
    spec.gate(GateKind::Ry(ALPHA_T), 2);
}

fn randomized_spec(n: usize) -> CircuitSpec {
    CircuitSpec::new(n)
        .with_role(0, WireRole::Ancilla1)
        .with_role(1, WireRole::Data1)
        .with_role(2, WireRole::Data2)
        .with_role(3, WireRole::Ancilla2)
}

/// Four-qubit circuit in which the two ancillas select the observable.
/// Classical bits are `a1 d1 d2 a2`.
pub fn build_variant_iii(kind: ControlKind, opts: BuildOptions) -> Result<CircuitSpec> {
    let mut spec = randomized_spec(4);
    push_randomized_body(&mut spec);
    match kind {
        ControlKind::Quantum => {
            push_controlled(&mut spec, DecomposeTarget::Hadamard, 0, 1, opts)?;
            push_controlled(&mut spec, DecomposeTarget::Ry(PHI), 3, 2, opts)?;
            for q in 0..4 {
                spec.measure(q, q);
            }
        }
        ControlKind::Classical => {
            spec.measure(0, 0).measure(3, 3);
            spec.push(CircuitOp::ClassicallyControlled {
                gate: GateKind::H,
                bit: 0,
                target: 1,
            });
            spec.push(CircuitOp::ClassicallyControlled {
                gate: GateKind::Ry(PHI),
                bit: 3,
                target: 2,
            });
            spec.measure(1, 1).measure(2, 2);
        }
    }
    Ok(spec)
}

/// Five-qubit circuit where a third ancilla reads the data parity.
/// Classical bits are `a1 a2 a3`.
pub fn build_variant_iv(opts: BuildOptions) -> Result<CircuitSpec> {
    let mut spec = randomized_spec(5).with_role(4, WireRole::Ancilla3);
    push_randomized_body(&mut spec);
    push_controlled(&mut spec, DecomposeTarget::Hadamard, 0, 1, opts)?;
    push_controlled(&mut spec, DecomposeTarget::Ry(PHI), 3, 2, opts)?;
    spec.gate(GateKind::H, 4);
    push_controlled(
        &mut spec,
        DecomposeTarget::Observable(Observable::Q),
        4,
        1,
        opts,
    )?;
    push_controlled(
        &mut spec,
        DecomposeTarget::Observable(Observable::Q),
        4,
        2,
        opts,
    )?;
    spec.gate(GateKind::H, 4)
        .measure(0, 0)
        .measure(3, 1)
        .measure(4, 2);
    Ok(spec)
}

/// Every circuit a campaign for `variant` runs, paired with its fixed
/// observable (`None` for the randomized variants).
pub fn circuits_for(
    variant: VariantLabel,
    opts: BuildOptions,
) -> Result<Vec<(Option<ObservableLabel>, CircuitSpec)>> {
    Ok(match variant {
        VariantLabel::I => ObservableLabel::ALL
            .iter()
            .map(|&o| (Some(o), build_variant_i(o)))
            .collect(),
        VariantLabel::II => ObservableLabel::ALL
            .iter()
            .map(|&o| build_variant_ii(o, opts).map(|c| (Some(o), c)))
            .collect::<Result<_>>()?,
        VariantLabel::IIIQuantum => vec![(None, build_variant_iii(ControlKind::Quantum, opts)?)],
        VariantLabel::IIIClassical => {
            vec![(None, build_variant_iii(ControlKind::Classical, opts)?)]
        }
        VariantLabel::IV => vec![(None, build_variant_iv(opts)?)],
    })
}

/// Selection map of the randomized variants: `(a1, a2)` to observable.
pub fn label_for_ancillas(a1: u8, a2: u8) -> ObservableLabel {
    match (a1, a2) {
        (0, 0) => ObservableLabel::QT,
        (0, _) => ObservableLabel::QS,
        (_, 0) => ObservableLabel::RT,
        _ => ObservableLabel::RS,
    }
}

/// Singlet expectation values of the four products.
pub fn theoretical_expectations() -> BTreeMap<ObservableLabel, f64> {
    ObservableLabel::ALL
        .iter()
        .map(|&o| (o, o.chsh_sign() * FRAC_1_SQRT_2))
        .collect()
}

/// `⟨QS⟩ + ⟨RS⟩ + ⟨RT⟩ − ⟨QT⟩`.
pub fn chsh_sum(values: &BTreeMap<ObservableLabel, f64>) -> f64 {
    ObservableLabel::ALL
        .iter()
        .map(|o| o.chsh_sign() * values.get(o).copied().unwrap_or(f64::NAN))
        .sum()
}

/// The Tsirelson value `2√2`.
pub const QUANTUM_CHSH: f64 = 2.0 * SQRT_2;
