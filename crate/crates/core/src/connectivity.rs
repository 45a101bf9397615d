//! Checking circuits against directed two-qubit coupling maps.
//!
//! Map files hold the qubit count on the first line and one `control target`
//! pair per following line. Blank lines and `#` comments are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitOp, CircuitSpec};
use crate::error::{Result, SimError};

const BUILTIN: [(&str, &str); 4] = [
    ("qx2", include_str!("../data/coupling/qx2.txt")),
    ("vigo", include_str!("../data/coupling/vigo.txt")),
    ("tee5", include_str!("../data/coupling/tee5.txt")),
    ("ladder14", include_str!("../data/coupling/ladder14.txt")),
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingMap {
    pub name: String,
    pub n_qubits: usize,
    pub edges: BTreeSet<(usize, usize)>,
}

impl CouplingMap {
    pub fn new(
        name: impl Into<String>,
        n_qubits: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let map = Self {
            name: name.into(),
            n_qubits,
            edges: edges.into_iter().collect(),
        };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        for &(a, b) in &self.edges {
            if a == b {
                return Err(SimError::Config(format!(
                    "coupling map {}: self-loop on {a}",
                    self.name
                )));
            }
            if a >= self.n_qubits || b >= self.n_qubits {
                return Err(SimError::Config(format!(
                    "coupling map {}: edge {a} {b} outside {} qubits",
                    self.name, self.n_qubits
                )));
            }
        }
        Ok(())
    }

    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, first) = lines.next().ok_or_else(|| SimError::Parse {
            line: 1,
            message: "missing qubit count".into(),
        })?;
        let n_qubits: usize = first.parse().map_err(|_| SimError::Parse {
            line,
            message: format!("expected qubit count, found {first:?}"),
        })?;
        let mut edges = BTreeSet::new();
        for (line, l) in lines {
            let fields: Vec<&str> = l.split_whitespace().collect();
            let pair = match fields.as_slice() {
                [a, b] => a.parse::<usize>().ok().zip(b.parse::<usize>().ok()),
                _ => None,
            };
            let (a, b) = pair.ok_or_else(|| SimError::Parse {
                line,
                message: format!("expected two qubit indices, found {l:?}"),
            })?;
            if a == b || a >= n_qubits || b >= n_qubits {
                return Err(SimError::Parse {
                    line,
                    message: format!("invalid edge {a} {b} for {n_qubits} qubits"),
                });
            }
            edges.insert((a, b));
        }
        Self::new(name, n_qubits, edges)
    }

    pub fn builtin(name: &str) -> Option<Self> {
        BUILTIN
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(n, text)| Self::parse(n, text).expect("builtin coupling maps are well formed"))
    }

    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTIN.iter().map(|(n, _)| *n)
    }

    pub fn supports(&self, control: usize, target: usize, allow_direction_flip: bool) -> bool {
        self.edges.contains(&(control, target))
            || (allow_direction_flip && self.edges.contains(&(target, control)))
    }
}

/// A builtin name, or a path to a map file.
pub fn load_coupling_map(source: &str) -> Result<CouplingMap> {
    if let Some(map) = CouplingMap::builtin(source) {
        return Ok(map);
    }
    let path = Path::new(source);
    let text = std::fs::read_to_string(path).map_err(|e| {
        let known: Vec<&str> = CouplingMap::builtin_names().collect();
        SimError::Config(format!(
            "cannot read coupling map {source:?} ({e}); builtin maps: {}",
            known.join(", ")
        ))
    })?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or(source);
    CouplingMap::parse(name, &text)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub op_index: usize,
    /// Circuit wires `(control, target)`.
    pub wires: (usize, usize),
    /// Physical qubits they landed on.
    pub physical: (usize, usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "op {}: q{} -> q{} needs coupling {} {}",
            self.op_index, self.wires.0, self.wires.1, self.physical.0, self.physical.1
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Blocking ops under the best assignment found.
    pub violations: Vec<Violation>,
    /// Circuit wire to physical qubit, present when feasible.
    pub assignment: Option<BTreeMap<usize, usize>>,
}

struct Search<'a> {
    map: &'a CouplingMap,
    flip: bool,
    /// `(op index, control, target)` for every two-qubit op.
    pairs: Vec<(usize, usize, usize)>,
    /// Pairs whose later wire is the key, so each is scored once.
    closing: Vec<Vec<usize>>,
    current: Vec<usize>,
    used: Vec<bool>,
    best: Option<(usize, Vec<usize>)>,
}

impl Search<'_> {
    fn cost_of(&self, pair: usize) -> usize {
        let (_, c, t) = self.pairs[pair];
        usize::from(
            !self
                .map
                .supports(self.current[c], self.current[t], self.flip),
        )
    }

    fn go(&mut self, wire: usize, cost: usize) {
        if self.best.as_ref().is_some_and(|(b, _)| cost >= *b) {
            return;
        }
        if wire == self.current.len() {
            self.best = Some((cost, self.current.clone()));
            return;
        }
        for phys in 0..self.map.n_qubits {
            if self.used[phys] {
                continue;
            }
            self.used[phys] = true;
            self.current[wire] = phys;
            let added: usize = self.closing[wire].iter().map(|&p| self.cost_of(p)).sum();
            self.go(wire + 1, cost + added);
            self.used[phys] = false;
            if self.best.as_ref().is_some_and(|(b, _)| *b == 0) {
                return;
            }
        }
    }
}

/// Exhaustive branch-and-bound search for a wire placement on which every
/// quantum-controlled op has a coupler. Classically controlled ops, single
/// qubit gates and measurements are unconstrained.
pub fn check_feasibility(
    circuit: &CircuitSpec,
    map: &CouplingMap,
    allow_direction_flip: bool,
) -> Result<FeasibilityReport> {
    let n = circuit.n_qubits;
    if n > map.n_qubits {
        return Err(SimError::Config(format!(
            "circuit uses {n} wires but map {} has only {} qubits",
            map.name, map.n_qubits
        )));
    }
    let pairs: Vec<(usize, usize, usize)> = circuit
        .ops
        .iter()
        .enumerate()
        .filter_map(|(i, op)| match *op {
            CircuitOp::Controlled {
                control, target, ..
            } => Some((i, control, target)),
            _ => None,
        })
        .collect();
    let mut closing = vec![Vec::new(); n];
    for (k, &(_, c, t)) in pairs.iter().enumerate() {
        closing[c.max(t)].push(k);
    }
    let mut search = Search {
        map,
        flip: allow_direction_flip,
        pairs,
        closing,
        current: vec![0; n],
        used: vec![false; map.n_qubits],
        best: None,
    };
    search.go(0, 0);
    let (cost, placement) = search
        .best
        .expect("at least one injective placement exists");
    let violations: Vec<Violation> = search
        .pairs
        .iter()
        .filter(|&&(_, c, t)| !map.supports(placement[c], placement[t], allow_direction_flip))
        .map(|&(op_index, c, t)| Violation {
            op_index,
            wires: (c, t),
            physical: (placement[c], placement[t]),
        })
        .collect();
    debug_assert_eq!(cost, violations.len());
    let feasible = violations.is_empty();
    Ok(FeasibilityReport {
        feasible,
        violations,
        assignment: feasible.then(|| placement.into_iter().enumerate().collect()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::GateKind;

    fn line3() -> CouplingMap {
        CouplingMap::parse("line3", "3\n0 1\n1 2\n").unwrap()
    }

    #[test]
    fn parses_builtin_maps() {
        let qx2 = CouplingMap::builtin("qx2").unwrap();
        assert_eq!((qx2.n_qubits, qx2.edges.len()), (5, 12));
        let vigo = CouplingMap::builtin("vigo").unwrap();
        assert_eq!((vigo.n_qubits, vigo.edges.len()), (5, 8));
        assert_eq!(CouplingMap::builtin("ladder14").unwrap().n_qubits, 14);
        assert!(CouplingMap::builtin("nope").is_none());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert!(matches!(
            CouplingMap::parse("x", "3\n0 1\n1 1\n"),
            Err(SimError::Parse { line: 3, .. })
        ));
        assert!(matches!(
            CouplingMap::parse("x", "3\n0 1 2\n"),
            Err(SimError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            CouplingMap::parse("x", "three\n"),
            Err(SimError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            CouplingMap::parse("x", "2\n0 5\n"),
            Err(SimError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn direction_matters_in_strict_mode() {
        let mut c = CircuitSpec::new(2);
        c.controlled(GateKind::X, 1, 0);
        let m = CouplingMap::parse("pair", "2\n0 1\n").unwrap();
        assert!(check_feasibility(&c, &m, true).unwrap().feasible);
        // Placement may swap the wires, so strict mode still succeeds.
        let strict = check_feasibility(&c, &m, false).unwrap();
        assert!(strict.feasible);
        assert_eq!(strict.assignment.unwrap()[&1], 0);
    }

    #[test]
    fn strict_mode_can_fail() {
        let mut c = CircuitSpec::new(2);
        c.controlled(GateKind::X, 0, 1)
            .controlled(GateKind::X, 1, 0);
        let m = CouplingMap::parse("pair", "2\n0 1\n").unwrap();
        assert!(check_feasibility(&c, &m, true).unwrap().feasible);
        let r = check_feasibility(&c, &m, false).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.violations.len(), 1);
        assert!(r.assignment.is_none());
    }

    #[test]
    fn triangle_needs_triangle() {
        let mut c = CircuitSpec::new(3);
        c.controlled(GateKind::X, 0, 1)
            .controlled(GateKind::X, 1, 2)
            .controlled(GateKind::Z, 0, 2);
        let r = check_feasibility(&c, &line3(), true).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.violations.len(), 1);
        let tri = CouplingMap::parse("tri", "3\n0 1\n1 2\n2 0\n").unwrap();
        assert!(check_feasibility(&c, &tri, true).unwrap().feasible);
    }

    #[test]
    fn empty_map_and_single_qubit_circuits() {
        let empty = CouplingMap::parse("empty", "4\n").unwrap();
        let mut single = CircuitSpec::new(3);
        single.gate(GateKind::H, 0).measure(0, 0).measure(2, 1);
        assert!(check_feasibility(&single, &empty, false).unwrap().feasible);
        let mut two = CircuitSpec::new(2);
        two.controlled(GateKind::X, 0, 1);
        assert!(!check_feasibility(&two, &empty, true).unwrap().feasible);
    }

    #[test]
    fn too_many_wires() {
        let c = CircuitSpec::new(4);
        assert!(check_feasibility(&c, &line3(), true).is_err());
    }
}
