//! Circuit descriptions and their line-oriented text form.
//!
//! ```text
//! qubits 2
//! wire q0 data1
//! wire q1 data2
//! x q0
//! h q0
//! cnot q0 q1
//! barrier
//! ry q1 -3.9269908169872414
//! measure q0 -> c0
//! c-h c0 q1
//! ```
//!
//! Quantum-controlled gates are `c<gate> <control> <target> [angle]` with
//! `cnot` as the spelling of `cx`; classically controlled gates are
//! `c-<gate> <bit> <target> [angle]`. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::gate::GateKind;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CircuitOp {
    Gate {
        gate: GateKind,
        target: usize,
    },
    Controlled {
        gate: GateKind,
        control: usize,
        target: usize,
    },
    Measure {
        qubit: usize,
        bit: usize,
    },
    /// Applied iff classical `bit` holds 1.
    ClassicallyControlled {
        gate: GateKind,
        bit: usize,
        target: usize,
    },
    /// Marks the point where the Bell pair is ready on the data wires.
    Barrier,
}

impl CircuitOp {
    /// Qubits touched by the op (control first).
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            CircuitOp::Gate { target, .. } | CircuitOp::ClassicallyControlled { target, .. } => {
                vec![target]
            }
            CircuitOp::Controlled {
                control, target, ..
            } => vec![control, target],
            CircuitOp::Measure { qubit, .. } => vec![qubit],
            CircuitOp::Barrier => Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WireRole {
    Data1,
    Data2,
    Ancilla1,
    Ancilla2,
    Ancilla3,
}

impl WireRole {
    pub fn as_str(self) -> &'static str {
        match self {
            WireRole::Data1 => "data1",
            WireRole::Data2 => "data2",
            WireRole::Ancilla1 => "ancilla1",
            WireRole::Ancilla2 => "ancilla2",
            WireRole::Ancilla3 => "ancilla3",
        }
    }
}

impl FromStr for WireRole {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "data1" => Ok(WireRole::Data1),
            "data2" => Ok(WireRole::Data2),
            "ancilla1" => Ok(WireRole::Ancilla1),
            "ancilla2" => Ok(WireRole::Ancilla2),
            "ancilla3" => Ok(WireRole::Ancilla3),
            _ => Err(SimError::UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub n_qubits: usize,
    pub ops: Vec<CircuitOp>,
    pub wire_roles: BTreeMap<usize, WireRole>,
}

impl CircuitSpec {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            ops: Vec::new(),
            wire_roles: BTreeMap::new(),
        }
    }

    pub fn with_role(mut self, qubit: usize, role: WireRole) -> Self {
        self.wire_roles.insert(qubit, role);
        self
    }

    pub fn push(&mut self, op: CircuitOp) -> &mut Self {
        self.ops.push(op);
        self
    }

    pub fn gate(&mut self, gate: GateKind, target: usize) -> &mut Self {
        self.push(CircuitOp::Gate { gate, target })
    }

    pub fn controlled(&mut self, gate: GateKind, control: usize, target: usize) -> &mut Self {
        self.push(CircuitOp::Controlled {
            gate,
            control,
            target,
        })
    }

    pub fn measure(&mut self, qubit: usize, bit: usize) -> &mut Self {
        self.push(CircuitOp::Measure { qubit, bit })
    }

    pub fn wire(&self, role: WireRole) -> Option<usize> {
        self.wire_roles
            .iter()
            .find(|(_, r)| **r == role)
            .map(|(q, _)| *q)
    }

    /// Size of the classical register (highest written bit + 1).
    pub fn n_bits(&self) -> usize {
        self.ops
            .iter()
            .filter_map(|op| match op {
                CircuitOp::Measure { bit, .. } => Some(bit + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Index of the first op after which nothing but measurements follow.
    pub fn terminal_start(&self) -> usize {
        let trailing = self
            .ops
            .iter()
            .rev()
            .take_while(|op| matches!(op, CircuitOp::Measure { .. }))
            .count();
        self.ops.len() - trailing
    }

    pub fn has_mid_circuit_measurement(&self) -> bool {
        self.ops[..self.terminal_start()].iter().any(|op| {
            matches!(
                op,
                CircuitOp::Measure { .. } | CircuitOp::ClassicallyControlled { .. }
            )
        })
    }

    pub fn barrier_index(&self) -> Option<usize> {
        self.ops
            .iter()
            .position(|op| matches!(op, CircuitOp::Barrier))
    }

    /// Checks wire ranges and that classical controls read bits already written.
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > crate::state::MAX_QUBITS {
            return Err(SimError::InvalidCircuit(format!(
                "qubit count {} unsupported",
                self.n_qubits
            )));
        }
        let mut written = std::collections::BTreeSet::new();
        for (i, op) in self.ops.iter().enumerate() {
            for q in op.qubits() {
                if q >= self.n_qubits {
                    return Err(SimError::InvalidCircuit(format!(
                        "op {i} references q{q} but the circuit has {} qubits",
                        self.n_qubits
                    )));
                }
            }
            match *op {
                CircuitOp::Controlled {
                    control, target, ..
                } if control == target => {
                    return Err(SimError::InvalidCircuit(format!(
                        "op {i} controls q{control} on itself"
                    )));
                }
                CircuitOp::Measure { bit, .. } => {
                    written.insert(bit);
                }
                CircuitOp::ClassicallyControlled { bit, .. } if !written.contains(&bit) => {
                    return Err(SimError::InvalidCircuit(format!(
                        "op {i} reads c{bit} before it is measured"
                    )));
                }
                _ => {}
            }
        }
        for &q in self.wire_roles.keys() {
            if q >= self.n_qubits {
                return Err(SimError::InvalidCircuit(format!(
                    "wire role assigned to missing q{q}"
                )));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<Self> {
        text.parse()
    }
}

fn write_angle(out: &mut String, gate: GateKind) {
    if let Some(a) = gate.angle() {
        let _ = write!(out, " {a}");
    }
}

impl fmt::Display for CircuitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.n_qubits)?;
        for (q, role) in &self.wire_roles {
            writeln!(f, "wire q{q} {}", role.as_str())?;
        }
        for op in &self.ops {
            let mut line = String::new();
            match *op {
                CircuitOp::Gate { gate, target } => {
                    let _ = write!(line, "{} q{target}", gate.mnemonic());
                    write_angle(&mut line, gate);
                }
                CircuitOp::Controlled {
                    gate,
                    control,
                    target,
                } => {
                    let name = if gate == GateKind::X {
                        "cnot".to_string()
                    } else {
                        format!("c{}", gate.mnemonic())
                    };
                    let _ = write!(line, "{name} q{control} q{target}");
                    write_angle(&mut line, gate);
                }
                CircuitOp::Measure { qubit, bit } => {
                    let _ = write!(line, "measure q{qubit} -> c{bit}");
                }
                CircuitOp::ClassicallyControlled { gate, bit, target } => {
                    let _ = write!(line, "c-{} c{bit} q{target}", gate.mnemonic());
                    write_angle(&mut line, gate);
                }
                CircuitOp::Barrier => line.push_str("barrier"),
            }
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

fn parse_index(token: &str, prefix: char, line: usize) -> Result<usize> {
    token
        .strip_prefix(prefix)
        .and_then(|rest| rest.parse().ok())
        .ok_or_else(|| SimError::Parse {
            line,
            message: format!("expected {prefix}<index>, found {token:?}"),
        })
}

fn parse_gate(name: &str, angle: Option<&str>, line: usize) -> Result<GateKind> {
    let angle = angle
        .map(|a| {
            a.parse::<f64>().map_err(|_| SimError::Parse {
                line,
                message: format!("bad angle {a:?}"),
            })
        })
        .transpose()?;
    GateKind::from_mnemonic(name, angle).ok_or_else(|| SimError::Parse {
        line,
        message: format!("unknown gate {name:?} or wrong number of parameters"),
    })
}

impl FromStr for CircuitSpec {
    type Err = SimError;

    fn from_str(text: &str) -> Result<Self> {
        let mut n_qubits = None;
        let mut wire_roles = BTreeMap::new();
        let mut ops = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = content.split_whitespace().collect();
            let err = |message: String| SimError::Parse { line, message };
            match tokens.as_slice() {
                ["qubits", n] => {
                    n_qubits = Some(
                        n.parse::<usize>()
                            .map_err(|_| err(format!("bad qubit count {n:?}")))?,
                    );
                }
                ["wire", q, role] => {
                    wire_roles.insert(
                        parse_index(q, 'q', line)?,
                        role.parse()
                            .map_err(|_| err(format!("unknown role {role:?}")))?,
                    );
                }
                ["barrier"] => ops.push(CircuitOp::Barrier),
                ["measure", q, "->", c] => ops.push(CircuitOp::Measure {
                    qubit: parse_index(q, 'q', line)?,
                    bit: parse_index(c, 'c', line)?,
                }),
                ["cnot", c, t] => ops.push(CircuitOp::Controlled {
                    gate: GateKind::X,
                    control: parse_index(c, 'q', line)?,
                    target: parse_index(t, 'q', line)?,
                }),
                [name, bit, target, rest @ ..] if name.starts_with("c-") && rest.len() <= 1 => ops
                    .push(CircuitOp::ClassicallyControlled {
                        gate: parse_gate(&name[2..], rest.first().copied(), line)?,
                        bit: parse_index(bit, 'c', line)?,
                        target: parse_index(target, 'q', line)?,
                    }),
                [name, control, target, rest @ ..]
                    if name.starts_with('c')
                        && control.starts_with('q')
                        && target.starts_with('q')
                        && rest.len() <= 1 =>
                {
                    ops.push(CircuitOp::Controlled {
                        gate: parse_gate(&name[1..], rest.first().copied(), line)?,
                        control: parse_index(control, 'q', line)?,
                        target: parse_index(target, 'q', line)?,
                    })
                }
                [name, target, rest @ ..] if rest.len() <= 1 => ops.push(CircuitOp::Gate {
                    gate: parse_gate(name, rest.first().copied(), line)?,
                    target: parse_index(target, 'q', line)?,
                }),
                _ => return Err(err(format!("unrecognized instruction {content:?}"))),
            }
        }
        let max_wire = ops
            .iter()
            .flat_map(CircuitOp::qubits)
            .max()
            .map_or(0, |q| q + 1);
        let spec = CircuitSpec {
            n_qubits: n_qubits.unwrap_or(max_wire),
            ops,
            wire_roles,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CircuitSpec {
        let mut c = CircuitSpec::new(4)
            .with_role(0, WireRole::Ancilla1)
            .with_role(1, WireRole::Data1);
        c.gate(GateKind::X, 1)
            .gate(GateKind::H, 1)
            .controlled(GateKind::X, 1, 2)
            .push(CircuitOp::Barrier)
            .gate(GateKind::Ry(-3.9269908169872414), 2)
            .controlled(GateKind::H, 0, 1)
            .measure(0, 0)
            .push(CircuitOp::ClassicallyControlled {
                gate: GateKind::Ry(-4.71),
                bit: 0,
                target: 3,
            })
            .measure(1, 1);
        c
    }

    #[test]
    fn dump_lines() {
        let text = sample().to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "qubits 4");
        assert!(lines.contains(&"wire q0 ancilla1"));
        assert!(lines.contains(&"cnot q1 q2"));
        assert!(lines.contains(&"ry q2 -3.9269908169872414"));
        assert!(lines.contains(&"ch q0 q1"));
        assert!(lines.contains(&"measure q0 -> c0"));
        assert!(lines.contains(&"c-ry c0 q3 -4.71"));
    }

    #[test]
    fn parse_inverts_dump() {
        let c = sample();
        assert_eq!(CircuitSpec::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = CircuitSpec::parse("qubits 2\nh q0\nfoo q0 q1 q2 q3\n").unwrap_err();
        assert!(matches!(err, SimError::Parse { line: 3, .. }));
        let err = CircuitSpec::parse("qubits 2\nry q0\n").unwrap_err();
        assert!(matches!(err, SimError::Parse { line: 2, .. }));
    }

    #[test]
    fn classical_control_requires_prior_measurement() {
        let err = CircuitSpec::parse("qubits 2\nc-h c0 q1\nmeasure q0 -> c0\n").unwrap_err();
        assert!(matches!(err, SimError::InvalidCircuit(_)));
    }

    #[test]
    fn out_of_range_wire() {
        assert!(matches!(
            CircuitSpec::parse("qubits 2\nh q2\n"),
            Err(SimError::InvalidCircuit(_))
        ));
    }

    #[test]
    fn terminal_block_detection() {
        let c = sample();
        assert_eq!(c.terminal_start(), c.ops.len() - 1);
        assert!(c.has_mid_circuit_measurement());
        assert_eq!(c.n_bits(), 2);
        assert_eq!(c.barrier_index(), Some(3));
    }
}
