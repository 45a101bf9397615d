use std::f64::consts::PI;

use num_complex::Complex;
use proptest::prelude::*;

use chsh_core::channel::{apply_channel, make_channel, ChannelSpec, ChannelTarget};
use chsh_core::connectivity::{check_feasibility, CouplingMap};
use chsh_core::density::DensityMatrix;
use chsh_core::estimator::estimate_from_counts;
use chsh_core::gate::GateKind;
use chsh_core::matrix::CMatrix;
use chsh_core::scalar::Scalar;
use chsh_core::simulate::{format_bits, parse_bits, NoiseModel, Sampler};
use chsh_core::state::StateVector;
use chsh_core::variants::{
    build_variant_i, build_variant_ii, build_variant_iii, build_variant_iv, BuildOptions,
    ControlKind, ObservableLabel,
};
use chsh_core::{CircuitOp, CircuitSpec};

fn gate_kind() -> impl Strategy<Value = GateKind> {
    prop_oneof![
        Just(GateKind::I),
        Just(GateKind::X),
        Just(GateKind::Y),
        Just(GateKind::Z),
        Just(GateKind::H),
        Just(GateKind::ObsS),
        Just(GateKind::ObsT),
        (-2.0 * PI..2.0 * PI).prop_map(GateKind::Ry),
        (-2.0 * PI..2.0 * PI).prop_map(GateKind::Rz),
        (-2.0 * PI..2.0 * PI).prop_map(GateKind::Phase),
    ]
}

/// Unitary-only ops on `n` wires.
fn unitary_op(n: usize) -> impl Strategy<Value = CircuitOp> {
    prop_oneof![
        (gate_kind(), 0..n).prop_map(|(gate, target)| CircuitOp::Gate { gate, target }),
        (gate_kind(), 0..n, 1..n).prop_map(move |(gate, control, shift)| CircuitOp::Controlled {
            gate,
            control,
            target: (control + shift) % n,
        }),
    ]
}

fn random_state(n: usize) -> impl Strategy<Value = Vec<Complex<f64>>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n).prop_filter_map(
        "zero vector",
        |raw| {
            let norm: f64 = raw
                .iter()
                .map(|(re, im)| re * re + im * im)
                .sum::<f64>()
                .sqrt();
            (norm > 1e-3).then(|| {
                raw.iter()
                    .map(|&(re, im)| Complex::new(re / norm, im / norm))
                    .collect()
            })
        },
    )
}

fn apply_ops<T: Scalar>(state: &mut StateVector<T>, ops: &[CircuitOp]) {
    for op in ops {
        match *op {
            CircuitOp::Gate { gate, target } => {
                state.apply_single(&gate.to_gate(), target).unwrap()
            }
            CircuitOp::Controlled {
                gate,
                control,
                target,
            } => state
                .apply_controlled(&gate.to_gate(), control, target)
                .unwrap(),
            _ => unreachable!(),
        }
    }
}

/// Mixture of up to three random pure states on two qubits.
fn random_rho() -> impl Strategy<Value = DensityMatrix<f64>> {
    (
        prop::collection::vec(random_state(2), 1..4),
        prop::collection::vec(0.05f64..1.0, 3),
    )
        .prop_map(|(states, w)| {
            let total: f64 = w[..states.len()].iter().sum();
            let mut m = CMatrix::zeros(4);
            for (psi, &wk) in states.iter().zip(&w) {
                m = &m + &CMatrix::outer(psi, psi).scale_real(wk / total);
            }
            DensityMatrix::from_matrix(m).unwrap()
        })
}

fn channel_spec() -> impl Strategy<Value = ChannelSpec> {
    prop_oneof![
        (0.0f64..=1.0).prop_map(|p| ChannelSpec::B { p }),
        (0.0f64..=1.0).prop_map(|p| ChannelSpec::P { p }),
        (0.0f64..=1.0).prop_map(|p| ChannelSpec::BP { p }),
        (0.0f64..=PI / 2.0).prop_map(|theta| ChannelSpec::A { theta }),
        (0.0f64..=PI / 2.0, 0.0f64..=1.0).prop_map(|(theta, p2)| ChannelSpec::GA { theta, p2 }),
        (0.0f64..=1.0).prop_map(|pd| ChannelSpec::D { pd }),
    ]
}

fn valid_circuit() -> impl Strategy<Value = CircuitSpec> {
    (1usize..=4).prop_flat_map(|n| {
        let op = prop_oneof![
            4 => unitary_op(n.max(2)),
            1 => (0..n, 0usize..3).prop_map(|(qubit, bit)| CircuitOp::Measure { qubit, bit }),
            1 => (gate_kind(), 0usize..3, 0..n).prop_map(|(gate, bit, target)| CircuitOp::ClassicallyControlled { gate, bit, target }),
            1 => Just(CircuitOp::Barrier),
        ];
        prop::collection::vec(op, 0..12).prop_map(move |ops| {
            let mut spec = CircuitSpec::new(n);
            let mut written = [false; 3];
            for op in ops {
                match op {
                    CircuitOp::Controlled { .. } if n < 2 => continue,
                    CircuitOp::Gate { target, .. } | CircuitOp::Controlled { target, .. } if target >= n => continue,
                    CircuitOp::Controlled { control, .. } if control >= n => continue,
                    CircuitOp::Measure { bit, .. } => written[bit] = true,
                    CircuitOp::ClassicallyControlled { bit, .. } if !written[bit] => continue,
                    _ => {}
                }
                spec.push(op);
            }
            spec
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gates_preserve_norm(psi in random_state(3), ops in prop::collection::vec(unitary_op(3), 0..24)) {
        let mut s = StateVector::from_amplitudes(psi).unwrap();
        apply_ops(&mut s, &ops);
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gates_preserve_norm_in_single_precision(psi in random_state(3), ops in prop::collection::vec(unitary_op(3), 0..24)) {
        let amps = psi.iter().map(|a| Complex::new(a.re as f32, a.im as f32)).collect();
        let mut s = StateVector::<f32>::from_amplitudes(amps).unwrap();
        apply_ops(&mut s, &ops);
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn channels_keep_density_matrices_physical(rho in random_rho(), spec in channel_spec(), on_second in any::<bool>()) {
        let ch = make_channel::<f64>(spec).unwrap();
        prop_assert!(ch.completeness_residual() < 1e-12);
        let target = if ch.arity() == 2 { ChannelTarget::Whole } else { ChannelTarget::Qubit(usize::from(on_second)) };
        let out = apply_channel(&rho, &ch, target).unwrap();
        prop_assert!((out.trace() - Complex::new(1.0, 0.0)).norm() < 1e-12);
        prop_assert!(out.matrix().hermiticity_residual() < 1e-12);
        prop_assert!(out.min_eigenvalue() > -1e-12);
        prop_assert!(out.validate().is_ok());
    }

    #[test]
    fn adding_couplings_never_hurts(
        edges in prop::collection::btree_set((0usize..6, 0usize..6), 0..10),
        extra in prop::collection::btree_set((0usize..6, 0usize..6), 1..6),
        flip in any::<bool>(),
    ) {
        let clean = |set: &std::collections::BTreeSet<(usize, usize)>| -> Vec<(usize, usize)> {
            set.iter().copied().filter(|(a, b)| a != b).collect()
        };
        let base = clean(&edges);
        let mut grown = base.clone();
        grown.extend(clean(&extra));
        let small = CouplingMap::new("small", 6, base).unwrap();
        let big = CouplingMap::new("big", 6, grown).unwrap();
        let opts = BuildOptions::default();
        let circuits = [
            build_variant_i(ObservableLabel::QT),
            build_variant_ii(ObservableLabel::RS, opts).unwrap(),
            build_variant_iii(ControlKind::Quantum, opts).unwrap(),
            build_variant_iv(opts).unwrap(),
        ];
        for c in &circuits {
            let a = check_feasibility(c, &small, flip).unwrap();
            let b = check_feasibility(c, &big, flip).unwrap();
            prop_assert!(b.violations.len() <= a.violations.len());
            prop_assert!(!a.feasible || b.feasible);
        }
    }

    #[test]
    fn circuit_text_round_trips(spec in valid_circuit()) {
        prop_assert!(spec.validate().is_ok());
        let text = spec.to_text();
        let back = CircuitSpec::parse(&text).unwrap();
        prop_assert_eq!(&back, &spec, "text was:\n{}", text);
    }

    #[test]
    fn sampled_counts_cover_every_shot(spec in valid_circuit(), seed in any::<u64>(), rate in 0.0f64..=0.1) {
        let mut spec = spec;
        if spec.n_bits() == 0 {
            spec.measure(0, 0);
        }
        let noise = NoiseModel::Depolarizing { rate };
        let sampler = Sampler::<f64>::new(&spec, noise, seed, 0).unwrap();
        let counts = sampler.run(200, 1).unwrap();
        prop_assert_eq!(counts.len(), 1 << spec.n_bits());
        prop_assert_eq!(counts.iter().sum::<u64>(), 200);
    }

    #[test]
    fn estimates_stay_in_range(n_plus in 0u64..10_000, n_minus in 0u64..10_000) {
        prop_assume!(n_plus + n_minus >= 2);
        let e = estimate_from_counts(n_plus, n_minus).unwrap();
        let n = (n_plus + n_minus) as f64;
        prop_assert!(e.estimate.abs() <= 1.0);
        prop_assert!(e.stddev >= 0.0);
        prop_assert!((e.stddev - ((1.0 - e.estimate * e.estimate) / (n - 1.0)).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bitstrings_round_trip(k in 0usize..1024, extra in 0usize..4) {
        let width = 10 + extra;
        prop_assert_eq!(parse_bits(&format_bits(k, width)).unwrap(), k);
    }
}
