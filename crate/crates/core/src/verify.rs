//! The analytic identity suite and the noise-channel comparison table.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::analytic;
use crate::channel::{apply_channel, make_channel, ChannelKind, ChannelSpec, ChannelTarget};
use crate::circuit::CircuitSpec;
use crate::decompose::{abc_decompose, DecomposeTarget};
use crate::density::{noisy_expectation, DensityMatrix};
use crate::error::Result;
use crate::gate::{self, Gate, Observable, ALPHA_T, PHI, THETA_S};
use crate::matrix::CMatrix;
use crate::simulate::CompiledCircuit;
use crate::state::StateVector;
use crate::variants::{
    build_variant_i, build_variant_ii, build_variant_iii, build_variant_iv, chsh_sum,
    theoretical_expectations, BuildOptions, ControlKind, ObservableLabel, QUANTUM_CHSH,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.residual.is_finite() && self.residual < self.tolerance
    }
}

/// Knobs for exercising the suite itself.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VerifyOptions {
    /// Added to the S rotation angle before checking its conjugation.
    pub theta_offset: f64,
}

fn check(out: &mut Vec<IdentityCheck>, name: impl Into<String>, residual: f64, tolerance: f64) {
    out.push(IdentityCheck {
        name: name.into(),
        residual,
        tolerance,
    });
}

fn conj(o: &Gate<f64>, u: &Gate<f64>) -> CMatrix<f64> {
    o.then_after(u).then_after(&o.adjoint()).matrix().clone()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Unitary of a circuit that has no measurements.
fn circuit_unitary(spec: &CircuitSpec) -> Result<CMatrix<f64>> {
    StateVector::<f64>::unitary_of(spec.n_qubits, |s| {
        for op in &spec.ops {
            match *op {
                crate::circuit::CircuitOp::Gate { gate, target } => {
                    s.apply_single(&gate.to_gate(), target)?
                }
                crate::circuit::CircuitOp::Controlled {
                    gate,
                    control,
                    target,
                } => s.apply_controlled(&gate.to_gate(), control, target)?,
                _ => {}
            }
        }
        Ok(())
    })
}

fn gate_identities(out: &mut Vec<IdentityCheck>, opts: VerifyOptions) {
    let z = gate::pauli_z::<f64>();
    let x = gate::pauli_x::<f64>();
    let h = gate::hadamard::<f64>();
    check(
        out,
        "H X H = Z",
        conj(&h, &x).max_abs_diff(z.matrix()),
        1e-12,
    );
    let s = gate::observable::<f64>(Observable::S);
    let t = gate::observable::<f64>(Observable::T);
    let ry_s = gate::ry(THETA_S + opts.theta_offset);
    check(
        out,
        "Ry(-5pi/4) S Ry(5pi/4) = Z",
        conj(&ry_s, &s).max_abs_diff(z.matrix()),
        1e-12,
    );
    check(
        out,
        "Ry(pi/4) T Ry(-pi/4) = Z",
        conj(&gate::ry(ALPHA_T), &t).max_abs_diff(z.matrix()),
        1e-12,
    );

    let y = gate::pauli_y::<f64>().matrix().clone();
    let i_sqrt2 = num_complex::Complex::new(0.0, SQRT_2);
    let z_minus_x = (z.matrix() - x.matrix()).scale(i_sqrt2);
    let z_plus_x = (z.matrix() + x.matrix()).scale(i_sqrt2);
    check(
        out,
        "[Y, S] = i sqrt2 (Z - X)",
        y.commutator(s.matrix()).max_abs_diff(&z_minus_x),
        1e-12,
    );
    check(
        out,
        "[Y, T] = i sqrt2 (Z + X)",
        y.commutator(t.matrix()).max_abs_diff(&z_plus_x),
        1e-12,
    );

    for label in Observable::ALL {
        let u = gate::observable::<f64>(label);
        let o = gate::diagonalizer::<f64>(label);
        check(
            out,
            format!("diagonalizer of {label} gives Z"),
            conj(&o, &u).max_abs_diff(z.matrix()),
            1e-10,
        );
        let herm = u
            .matrix()
            .hermiticity_residual()
            .max(u.matrix().unitarity_residual());
        check(out, format!("{label} is a Hermitian unitary"), herm, 1e-12);
    }
}

fn abc_identities(out: &mut Vec<IdentityCheck>) -> Result<()> {
    let targets = [
        DecomposeTarget::Observable(Observable::Q),
        DecomposeTarget::Observable(Observable::R),
        DecomposeTarget::Observable(Observable::S),
        DecomposeTarget::Observable(Observable::T),
        DecomposeTarget::Hadamard,
        DecomposeTarget::Ry(PHI),
        DecomposeTarget::Ry(ALPHA_T),
    ];
    for target in targets {
        let dec = abc_decompose::<f64>(target);
        let u = target.target_gate::<f64>();
        check(
            out,
            format!("{target}: A B C = I"),
            dec.abc_product().max_abs_diff(&CMatrix::identity(2)),
            1e-10,
        );
        check(
            out,
            format!("{target}: Euler angles rebuild U"),
            dec.euler_form().max_abs_diff(u.matrix()),
            1e-10,
        );
        check(
            out,
            format!("{target}: e^(i eta) A X B X C = U"),
            dec.abc_form().max_abs_diff(u.matrix()),
            1e-10,
        );
        let mut spec = CircuitSpec::new(2);
        for op in dec.fragment(0, 1)? {
            spec.push(op);
        }
        let fragment = circuit_unitary(&spec)?;
        check(
            out,
            format!("{target}: controlled fragment equals controlled-U"),
            fragment.max_abs_diff(&u.controlled_matrix()),
            1e-10,
        );
    }
    Ok(())
}

fn distribution_identities(out: &mut Vec<IdentityCheck>) -> Result<()> {
    let theory = theoretical_expectations();
    check(
        out,
        "CHSH of the singlet is 2 sqrt2",
        (chsh_sum(&theory) - QUANTUM_CHSH).abs(),
        1e-12,
    );

    for label in ObservableLabel::ALL {
        let c = CompiledCircuit::<f64>::new(&build_variant_i(label))?;
        let state = c.pre_measurement_state()?;
        let oracle = analytic::probabilities(&analytic::rotated_bell::<f64>(label));
        check(
            out,
            format!("variant I {label}: distribution"),
            max_diff(&c.exact_distribution()?, &oracle),
            1e-12,
        );
        let zz = state.z_parity_expectation(&[0, 1])?;
        check(
            out,
            format!("variant I {label}: expectation"),
            (zz - theory[&label]).abs(),
            1e-12,
        );
    }

    for opts in [BuildOptions::default(), BuildOptions::primitive()] {
        let style = format!("{:?}", opts.controlled).to_lowercase();
        for label in ObservableLabel::ALL {
            let d = CompiledCircuit::<f64>::new(&build_variant_ii(label, opts)?)?
                .exact_distribution()?;
            let p0 = analytic::variant_ii_p0::<f64>(label);
            check(
                out,
                format!("variant II {label} ({style}): ancilla p0"),
                (d[0] - p0).abs(),
                1e-12,
            );
        }
        let oracle: Vec<f64> = (0..16).map(analytic::variant_iii_closed_form).collect();
        let quantum = CompiledCircuit::<f64>::new(&build_variant_iii(ControlKind::Quantum, opts)?)?
            .exact_distribution()?;
        check(
            out,
            format!("variant III quantum ({style}): joint distribution"),
            max_diff(&quantum, &oracle),
            1e-12,
        );
        let classical =
            CompiledCircuit::<f64>::new(&build_variant_iii(ControlKind::Classical, opts)?)?
                .exact_distribution()?;
        check(
            out,
            format!("variant III classical ({style}): equals quantum"),
            max_diff(&classical, &quantum),
            1e-12,
        );
        let iv = CompiledCircuit::<f64>::new(&build_variant_iv(opts)?)?.exact_distribution()?;
        let oracle: Vec<f64> = (0..8).map(analytic::variant_iv_closed_form).collect();
        check(
            out,
            format!("variant IV ({style}): ancilla distribution"),
            max_diff(&iv, &oracle),
            1e-12,
        );
    }
    let state = analytic::probabilities(&analytic::variant_iii_state::<f64>());
    let oracle: Vec<f64> = (0..16).map(analytic::variant_iii_closed_form).collect();
    check(
        out,
        "variant III: Kronecker state equals closed form",
        max_diff(&state, &oracle),
        1e-12,
    );
    Ok(())
}

/// One line of the noise table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseRow {
    pub channel: ChannelKind,
    pub param: f64,
    pub observable: ObservableLabel,
    pub analytic: f64,
    pub computed: f64,
}

impl NoiseRow {
    pub fn abs_error(&self) -> f64 {
        (self.analytic - self.computed).abs()
    }

    pub fn csv_header() -> &'static str {
        "channel,param,observable,analytic,computed,abs_error"
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{:e}",
            self.channel,
            self.param,
            self.observable,
            self.analytic,
            self.computed,
            self.abs_error()
        )
    }
}

/// Order of the four values in [`ChannelSpec::closed_form_terms`].
const CLOSED_FORM_ORDER: [ObservableLabel; 4] = [
    ObservableLabel::QS,
    ObservableLabel::QT,
    ObservableLabel::RS,
    ObservableLabel::RT,
];

/// `√2·⟨·⟩` of the four products after `spec` acts on the singlet.
pub fn channel_terms(spec: ChannelSpec) -> Result<[f64; 4]> {
    let psi = StateVector::from_amplitudes(analytic::bell_state::<f64>())?;
    let rho = DensityMatrix::from_state(&psi);
    let ch = make_channel::<f64>(spec)?;
    let target = if ch.arity() == 2 {
        ChannelTarget::Whole
    } else {
        ChannelTarget::Qubit(0)
    };
    let noisy = apply_channel(&rho, &ch, target)?;
    let mut out = [0.0; 4];
    for (slot, label) in out.iter_mut().zip(CLOSED_FORM_ORDER) {
        let (a, b) = label.parts();
        *slot = SQRT_2 * noisy_expectation(&noisy, (&gate::observable(a), &gate::observable(b)))?;
    }
    Ok(out)
}

/// Closed form against density-matrix evaluation over the sweep grid.
pub fn noise_table(kind: ChannelKind, points: usize, p2: f64) -> Result<Vec<NoiseRow>> {
    let top = kind.grid().last().copied().unwrap_or(1.0);
    let mut rows = Vec::new();
    for k in 0..points {
        let param = if points == 1 {
            0.0
        } else {
            top * k as f64 / (points - 1) as f64
        };
        let spec = ChannelSpec::at(kind, param, p2);
        let computed = channel_terms(spec)?;
        let analytic = spec.closed_form_terms();
        for i in 0..4 {
            rows.push(NoiseRow {
                channel: kind,
                param,
                observable: CLOSED_FORM_ORDER[i],
                analytic: analytic[i],
                computed: computed[i],
            });
        }
    }
    Ok(rows)
}

fn channel_identities(out: &mut Vec<IdentityCheck>) -> Result<()> {
    for kind in ChannelKind::ALL {
        let rows = noise_table(kind, 11, 0.5)?;
        let worst = rows.iter().map(NoiseRow::abs_error).fold(0.0, f64::max);
        check(
            out,
            format!("channel {kind}: closed forms over the grid"),
            worst,
            1e-10,
        );
        let completeness = kind
            .grid()
            .into_iter()
            .map(|v| {
                make_channel::<f64>(ChannelSpec::at(kind, v, 0.5))
                    .map(|c| c.completeness_residual())
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        check(
            out,
            format!("channel {kind}: Kraus completeness"),
            completeness,
            1e-10,
        );
        let bound = rows
            .iter()
            .map(|r| r.computed.abs() - 1.0)
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0);
        check(
            out,
            format!("channel {kind}: noise never raises a correlation"),
            bound,
            1e-9,
        );
    }
    let mut spread: f64 = 0.0;
    for theta in ChannelKind::GA.grid() {
        let base = channel_terms(ChannelSpec::GA { theta, p2: 0.0 })?;
        for p2 in [0.1, 0.25, 0.5, 0.75, 1.0] {
            let other = channel_terms(ChannelSpec::GA { theta, p2 })?;
            spread = spread.max(max_diff(&base, &other));
        }
    }
    check(
        out,
        "channel GA: independent of its second probability",
        spread,
        1e-10,
    );

    let psi = StateVector::from_amplitudes(analytic::bell_state::<f64>())?;
    let explicit = CMatrix::<f64>::from_real_rows(&[
        &[0.0, 0.0, 0.0, 0.0],
        &[0.0, 0.5, -0.5, 0.0],
        &[0.0, -0.5, 0.5, 0.0],
        &[0.0, 0.0, 0.0, 0.0],
    ]);
    check(
        out,
        "singlet density matrix",
        DensityMatrix::from_state(&psi)
            .matrix()
            .max_abs_diff(&explicit),
        1e-15,
    );
    Ok(())
}

/// Runs every identity. Errors only if a check could not be evaluated.
pub fn run_identity_suite(opts: VerifyOptions) -> Result<Vec<IdentityCheck>> {
    let mut out = Vec::new();
    gate_identities(&mut out, opts);
    abc_identities(&mut out)?;
    distribution_identities(&mut out)?;
    channel_identities(&mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let checks = run_identity_suite(VerifyOptions::default()).unwrap();
        for c in &checks {
            assert!(c.passed(), "{} residual {:e}", c.name, c.residual);
        }
        assert!(checks.len() > 60);
    }

    #[test]
    fn perturbed_angle_is_caught() {
        let checks = run_identity_suite(VerifyOptions { theta_offset: 1e-3 }).unwrap();
        let failed: Vec<&IdentityCheck> = checks.iter().filter(|c| !c.passed()).collect();
        assert_eq!(failed.len(), 1);
        assert!(failed[0].name.contains("S Ry"));
        assert!(failed[0].residual > 1e-4 && failed[0].residual < 1e-2);
    }

    #[test]
    fn noise_table_examples() {
        let b = noise_table(ChannelKind::B, 11, 0.5).unwrap();
        let mid = b
            .iter()
            .find(|r| (r.param - 0.5).abs() < 1e-12 && r.observable == ObservableLabel::QS)
            .unwrap();
        assert!(mid.computed.abs() < 1e-12 && mid.analytic.abs() < 1e-15);
        let a = noise_table(ChannelKind::A, 11, 0.5).unwrap();
        let end: Vec<&NoiseRow> = a
            .iter()
            .filter(|r| (r.param - std::f64::consts::FRAC_PI_2).abs() < 1e-12)
            .collect();
        assert_eq!(end.len(), 4);
        assert!(end.iter().all(|r| r.computed.abs() < 1e-12));
        assert_eq!(
            NoiseRow::csv_header().split(',').count(),
            b[0].to_csv().split(',').count()
        );
    }
}
