use std::f64::consts::SQRT_2;

use approx::assert_abs_diff_eq;

use chsh_core::analytic;
use chsh_core::estimator::{run_experiment, ExperimentConfig, TABLE_ORDER};
use chsh_core::simulate::{CompiledCircuit, NoiseModel, Sampler};
use chsh_core::variants::{
    circuits_for, theoretical_expectations, BuildOptions, ObservableLabel, VariantLabel,
};
use chsh_core::ChannelSpec;

/// Largest per-bin deviation, in standard errors, of `counts` from `probs`.
fn worst_z(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&k, &p)| (k as f64 / n as f64 - p).abs() / (p * (1.0 - p) / n as f64).sqrt())
        .fold(0.0, f64::max)
}

#[test]
fn sampled_frequencies_follow_born_rule() {
    for variant in VariantLabel::ALL {
        for (i, (_, spec)) in circuits_for(variant, BuildOptions::default())
            .unwrap()
            .iter()
            .enumerate()
        {
            let probs = CompiledCircuit::<f64>::new(spec)
                .unwrap()
                .exact_distribution()
                .unwrap();
            let counts = Sampler::<f64>::new(spec, NoiseModel::None, 31, i as u64)
                .unwrap()
                .run(100_000, 0)
                .unwrap();
            // Impossible outcomes must never show up.
            for (k, (&c, &p)) in counts.iter().zip(&probs).enumerate() {
                assert!(
                    p > 1e-15 || c == 0,
                    "{variant}: outcome {k} has p = {p} but {c} hits"
                );
            }
            let z = worst_z(&counts, &probs);
            assert!(z < 5.0, "{variant} circuit {i}: {z:.2} standard errors");
        }
    }
}

#[test]
fn oracle_probabilities_match_sampled_variant_iv() {
    let spec = &circuits_for(VariantLabel::IV, BuildOptions::default()).unwrap()[0].1;
    let probs = analytic::variant_iv_probabilities::<f64>();
    let counts = Sampler::<f64>::new(spec, NoiseModel::None, 4, 0)
        .unwrap()
        .run(100_000, 0)
        .unwrap();
    assert!(worst_z(&counts, &probs) < 5.0);
}

#[test]
fn estimates_are_unbiased_across_seeds() {
    let theory = theoretical_expectations();
    let seeds = 100;
    let mut sums = [0.0; 4];
    for seed in 0..seeds {
        let r = run_experiment(&ExperimentConfig::new(VariantLabel::I, 1024, seed)).unwrap();
        for (slot, label) in sums.iter_mut().zip(TABLE_ORDER) {
            *slot += r.per_observable[&label].estimate;
        }
    }
    // Each estimate has σ = √(0.5/1024); the mean over 100 seeds shrinks that tenfold.
    let sigma_mean = (0.5f64 / 1024.0).sqrt() / (seeds as f64).sqrt();
    for (sum, label) in sums.iter().zip(TABLE_ORDER) {
        let mean = sum / seeds as f64;
        assert_abs_diff_eq!(mean, theory[&label], epsilon = 4.0 * sigma_mean);
    }
}

#[test]
fn large_runs_converge() {
    let r = run_experiment(&ExperimentConfig::new(
        VariantLabel::IIIClassical,
        1_000_000,
        8,
    ))
    .unwrap();
    assert_abs_diff_eq!(r.chsh, 2.0 * SQRT_2, epsilon = 0.02);
    assert!(r.chsh_stddev < 0.005);
    for label in ObservableLabel::ALL {
        let frac = r.per_observable[&label].selection_fraction.unwrap();
        assert_abs_diff_eq!(frac, 0.25, epsilon = 0.005);
    }
}

#[test]
fn amplitude_damping_tracks_closed_form() {
    let theta = 0.6;
    let spec = ChannelSpec::A { theta };
    let terms = spec.closed_form_terms();
    let noise = NoiseModel::Channel { spec };
    let r = run_experiment(&ExperimentConfig::new(VariantLabel::I, 50_000, 12).with_noise(noise))
        .unwrap();
    // Terms are √2·⟨·⟩ in the order QS, QT, RS, RT.
    for (term, label) in terms.iter().zip(TABLE_ORDER) {
        let est = r.per_observable[&label];
        assert_abs_diff_eq!(est.estimate, term / SQRT_2, epsilon = 4.0 * est.stddev);
    }
}

#[test]
fn bit_flip_at_one_is_noiseless_under_sampling() {
    let noise = NoiseModel::Channel {
        spec: ChannelSpec::B { p: 1.0 },
    };
    let clean = run_experiment(&ExperimentConfig::new(VariantLabel::II, 4096, 3)).unwrap();
    let noisy = run_experiment(&ExperimentConfig::new(VariantLabel::II, 4096, 3).with_noise(noise))
        .unwrap();
    for label in ObservableLabel::ALL {
        assert_abs_diff_eq!(
            clean.per_observable[&label].estimate,
            noisy.per_observable[&label].estimate,
            epsilon = 0.1
        );
    }
}

#[test]
fn single_and_double_precision_agree() {
    for (_, spec) in circuits_for(VariantLabel::IIIQuantum, BuildOptions::default()).unwrap() {
        let p64 = CompiledCircuit::<f64>::new(&spec)
            .unwrap()
            .exact_distribution()
            .unwrap();
        let p32 = CompiledCircuit::<f32>::new(&spec)
            .unwrap()
            .exact_distribution()
            .unwrap();
        for (a, b) in p64.iter().zip(&p32) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-5);
        }
    }
}

#[test]
fn result_documents_have_expected_shape() {
    let r = run_experiment(&ExperimentConfig::new(VariantLabel::IV, 4096, 1)).unwrap();
    assert_eq!(r.batches.len(), 1);
    assert_eq!(r.batches[0].total, 4096);
    assert_eq!(r.per_observable.values().map(|o| o.n).sum::<u64>(), 4096);
    let csv = r.to_csv();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "variant,seed,shots,qs,qs_sd,qt,qt_sd,rs,rs_sd,rt,rt_sd,chsh,chsh_sd"
    );
    assert!(lines.next().unwrap().starts_with("IV,1,4096,"));

    let r = run_experiment(&ExperimentConfig::new(VariantLabel::I, 512, 1)).unwrap();
    assert_eq!(r.batches.len(), 4);
    assert!(r
        .per_observable
        .values()
        .all(|o| o.n == 512 && o.selection_fraction.is_none()));
}
