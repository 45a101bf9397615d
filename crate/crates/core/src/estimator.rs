//! Shot campaigns, outcome decoding and the CHSH estimate.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::simulate::{format_bits, NoiseModel, Sampler};
use crate::variants::{
    circuits_for, label_for_ancillas, BuildOptions, ObservableLabel, VariantLabel,
};

/// Column order used by the CSV export and the printed table.
pub const TABLE_ORDER: [ObservableLabel; 4] = [
    ObservableLabel::QS,
    ObservableLabel::QT,
    ObservableLabel::RS,
    ObservableLabel::RT,
];

/// A decoded shot: which product was measured (if the outcome says so) and its ±1 value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decoded {
    pub label: Option<ObservableLabel>,
    pub value: i8,
}

fn eigenvalue(bit: u8) -> i8 {
    if bit == 0 {
        1
    } else {
        -1
    }
}

/// Maps a bitstring (`c0` first) to an observable value.
///
/// Variants I and II carry no label in the outcome; the caller knows which
/// circuit ran.
pub fn decode_outcome(variant: VariantLabel, bits: &str) -> Result<Decoded> {
    let b: Vec<u8> = bits
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(SimError::Config(format!("not a bitstring: {bits:?}"))),
        })
        .collect::<Result<_>>()?;
    let width = variant.outcome_width();
    if b.len() != width {
        return Err(SimError::DimensionMismatch {
            expected: width,
            found: b.len(),
        });
    }
    Ok(match variant {
        VariantLabel::I => Decoded {
            label: None,
            value: eigenvalue(b[0]) * eigenvalue(b[1]),
        },
        VariantLabel::II => Decoded {
            label: None,
            value: eigenvalue(b[0]),
        },
        VariantLabel::IIIQuantum | VariantLabel::IIIClassical => Decoded {
            label: Some(label_for_ancillas(b[0], b[3])),
            value: eigenvalue(b[1]) * eigenvalue(b[2]),
        },
        VariantLabel::IV => Decoded {
            label: Some(label_for_ancillas(b[0], b[1])),
            value: eigenvalue(b[2]),
        },
    })
}

/// Counts of one circuit's outcomes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotBatch {
    pub variant: VariantLabel,
    /// The fixed product for variants I and II; `None` when the circuit chooses.
    pub observable: Option<ObservableLabel>,
    pub counts: BTreeMap<String, u64>,
    pub total: u64,
    pub seed: u64,
}

impl ShotBatch {
    /// `(n₊, n₋)` per observable.
    pub fn tallies(&self) -> Result<BTreeMap<ObservableLabel, (u64, u64)>> {
        if self.counts.values().sum::<u64>() != self.total {
            return Err(SimError::InvalidCircuit(
                "batch counts do not add up to its total".into(),
            ));
        }
        let mut out = BTreeMap::new();
        for (bits, &n) in &self.counts {
            let d = decode_outcome(self.variant, bits)?;
            let label = d.label.or(self.observable).ok_or_else(|| {
                SimError::Config(format!(
                    "variant {} batch lacks an observable",
                    self.variant
                ))
            })?;
            let e = out.entry(label).or_insert((0, 0));
            if d.value > 0 {
                e.0 += n;
            } else {
                e.1 += n;
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stddev: f64,
    pub n: u64,
}

/// `(n₊ − n₋)/n` with `σ = √((1 − e²)/(n − 1))`.
pub fn estimate_from_counts(n_plus: u64, n_minus: u64) -> Result<Estimate> {
    let n = n_plus + n_minus;
    if n < 2 {
        return Err(SimError::InsufficientData(format!(
            "need at least 2 shots, got {n}"
        )));
    }
    let e = (n_plus as f64 - n_minus as f64) / n as f64;
    let stddev = ((1.0 - e * e).max(0.0) / (n - 1) as f64).sqrt();
    Ok(Estimate {
        estimate: e,
        stddev,
        n,
    })
}

/// Estimates for every observable present in the batch.
pub fn estimate(batch: &ShotBatch) -> Result<BTreeMap<ObservableLabel, Estimate>> {
    batch
        .tallies()?
        .into_iter()
        .map(|(label, (p, m))| estimate_from_counts(p, m).map(|e| (label, e)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableResult {
    pub estimate: f64,
    pub stddev: f64,
    pub n: u64,
    /// Share of all shots that measured this product (randomized variants).
    pub selection_fraction: Option<f64>,
}

/// Everything a campaign reports. Serializes to the JSON result document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub variant: VariantLabel,
    pub seed: u64,
    /// Per observable for variants I and II, total otherwise.
    pub shots: u64,
    pub noise: NoiseModel,
    pub options: BuildOptions,
    pub per_observable: BTreeMap<ObservableLabel, ObservableResult>,
    pub chsh: f64,
    pub chsh_stddev: f64,
    pub batches: Vec<ShotBatch>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub variant: VariantLabel,
    pub shots: u64,
    pub seed: u64,
    pub noise: NoiseModel,
    pub options: BuildOptions,
    /// Worker threads; 0 picks the rayon default. Never affects the result.
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn new(variant: VariantLabel, shots: u64, seed: u64) -> Self {
        Self {
            variant,
            shots,
            seed,
            noise: NoiseModel::None,
            options: BuildOptions::default(),
            workers: 0,
        }
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots < 2 {
            return Err(SimError::Config("shots must be ≥ 2".into()));
        }
        if self.shots > u64::from(u32::MAX) {
            return Err(SimError::Config(format!(
                "shots must be at most {}",
                u32::MAX
            )));
        }
        self.noise.validate()
    }
}

/// Runs the campaign in `f64`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let circuits = circuits_for(config.variant, config.options)?;
    let mut batches = Vec::with_capacity(circuits.len());
    for (index, (observable, spec)) in circuits.iter().enumerate() {
        let sampler = Sampler::<f64>::new(spec, config.noise, config.seed, index as u64)?;
        let width = sampler.n_bits();
        let counts = sampler
            .run(config.shots, config.workers)?
            .into_iter()
            .enumerate()
            .filter(|&(_, n)| n > 0)
            .map(|(k, n)| (format_bits(k, width), n))
            .collect();
        batches.push(ShotBatch {
            variant: config.variant,
            observable: *observable,
            counts,
            total: config.shots,
            seed: config.seed,
        });
    }
    summarize(config, batches)
}

fn summarize(config: &ExperimentConfig, batches: Vec<ShotBatch>) -> Result<ExperimentResult> {
    let grand_total: u64 = batches.iter().map(|b| b.total).sum();
    let mut per_observable = BTreeMap::new();
    for batch in &batches {
        for (label, e) in estimate(batch)? {
            let selection_fraction = config
                .variant
                .is_randomized()
                .then(|| e.n as f64 / grand_total as f64);
            per_observable.insert(
                label,
                ObservableResult {
                    estimate: e.estimate,
                    stddev: e.stddev,
                    n: e.n,
                    selection_fraction,
                },
            );
        }
    }
    for label in ObservableLabel::ALL {
        if !per_observable.contains_key(&label) {
            return Err(SimError::InsufficientData(format!(
                "no shots selected {label}"
            )));
        }
    }
    let chsh = ObservableLabel::ALL
        .iter()
        .map(|l| l.chsh_sign() * per_observable[l].estimate)
        .sum();
    let chsh_stddev = ObservableLabel::ALL
        .iter()
        .map(|l| per_observable[l].stddev.powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(ExperimentResult {
        variant: config.variant,
        seed: config.seed,
        shots: config.shots,
        noise: config.noise,
        options: config.options,
        per_observable,
        chsh,
        chsh_stddev,
        batches,
    })
}

impl ExperimentResult {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| SimError::Config(format!("bad result document: {e}")))
    }

    pub fn csv_header() -> &'static str {
        "variant,seed,shots,qs,qs_sd,qt,qt_sd,rs,rs_sd,rt,rt_sd,chsh,chsh_sd"
    }

    pub fn to_csv_row(&self) -> String {
        let mut row = format!("{},{},{}", self.variant, self.seed, self.shots);
        for label in TABLE_ORDER {
            let r = &self.per_observable[&label];
            write!(row, ",{},{}", r.estimate, r.stddev).expect("write to string");
        }
        write!(row, ",{},{}", self.chsh, self.chsh_stddev).expect("write to string");
        row
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::csv_header(), self.to_csv_row())
    }

    /// Human-readable summary, four decimals.
    pub fn table(&self) -> String {
        let mut out = format!(
            "variant {}  seed {}  shots {}  noise {}\n",
            self.variant, self.seed, self.shots, self.noise
        );
        let randomized = self.variant.is_randomized();
        out.push_str(if randomized {
            "observable   estimate    stddev        n  selected\n"
        } else {
            "observable   estimate    stddev        n\n"
        });
        for label in TABLE_ORDER {
            let r = &self.per_observable[&label];
            write!(
                out,
                "{:<10} {:>10.4} {:>9.4} {:>8}",
                label, r.estimate, r.stddev, r.n
            )
            .expect("write");
            if let Some(f) = r.selection_fraction {
                write!(out, " {:>9.4}", f).expect("write");
            }
            out.push('\n');
        }
        writeln!(
            out,
            "{:<10} {:>10.4} {:>9.4}",
            "CHSH", self.chsh, self.chsh_stddev
        )
        .expect("write");
        out
    }
}
