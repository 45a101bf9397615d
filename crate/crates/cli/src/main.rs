use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use chsh_core::channel::ChannelKind;
use chsh_core::variants::{
    build_variant_i, build_variant_ii, build_variant_iii, build_variant_iv, ControlKind,
};
use chsh_core::verify::{noise_table, run_identity_suite, NoiseRow, VerifyOptions};
use chsh_core::{
    check_feasibility, load_coupling_map, run_experiment, BuildOptions, ChannelSpec, CircuitSpec,
    ExperimentConfig, NoiseModel, ObservableLabel, SimError, VariantLabel,
};

#[derive(Parser)]
#[command(name = "chsh", version, about = "Simulate CHSH Bell-test circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a circuit variant and estimate the CHSH sum.
    Run(RunArgs),
    /// Check the analytic identities the simulator relies on.
    Verify(VerifyArgs),
    /// Compare noisy correlations against their closed forms.
    NoiseTable(NoiseTableArgs),
    /// Check whether a circuit fits a qubit coupling map.
    Feasibility(FeasibilityArgs),
    /// Print a variant's circuit in the text format.
    Dump(DumpArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Default)]
struct RunArgs {
    /// key=value file with defaults for any of the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// I, II, III-quantum, III-classical or IV.
    #[arg(long)]
    variant: Option<String>,
    /// Shots per observable for I and II, total shots for III and IV.
    #[arg(long)]
    shots: Option<u64>,
    /// Falls back to the config file, then `CHSH_SEED`, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Per-gate Pauli error probability.
    #[arg(long, conflicts_with = "channel")]
    depolarizing: Option<f64>,
    /// Kraus channel on the Bell pair, e.g. `GA:theta=0.3,p2=0.5`.
    #[arg(long)]
    channel: Option<String>,
    /// Where to write the result document; `-` for stdout.
    #[arg(long)]
    output: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    workers: Option<usize>,
    /// Use single controlled-U ops instead of CNOT decompositions.
    #[arg(long)]
    primitive_controlled: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(
        long,
        default_value_t = 0.0,
        hide = true,
        allow_negative_numbers = true
    )]
    theta_offset: f64,
}

#[derive(Args)]
struct NoiseTableArgs {
    /// B, P, BP, A, GA or D; all channels when omitted.
    #[arg(long)]
    channel: Option<String>,
    #[arg(long, default_value_t = 11)]
    points: usize,
    /// Second probability of the GA channel.
    #[arg(long, default_value_t = 0.5)]
    p2: f64,
}

#[derive(Args)]
struct FeasibilityArgs {
    /// Circuit file in the text format.
    #[arg(long)]
    circuit: PathBuf,
    /// Coupling map file or builtin name (qx2, vigo, tee5, ladder14).
    #[arg(long)]
    map: String,
    /// Require each CNOT to match an edge's direction.
    #[arg(long)]
    strict_direction: bool,
}

#[derive(Args)]
struct DumpArgs {
    #[arg(long)]
    variant: String,
    /// Product measured by variants I and II.
    #[arg(long, default_value = "QS")]
    observable: String,
    #[arg(long)]
    primitive_controlled: bool,
}

/// Marks errors caused by the user's input.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match err.downcast_ref::<SimError>() {
        Some(
            SimError::Config(_)
            | SimError::UnknownLabel(_)
            | SimError::ProbabilityOutOfRange { .. }
            | SimError::Parse { .. }
            | SimError::InvalidCircuit(_),
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Verify(args) => cmd_verify(args),
        Command::NoiseTable(args) => cmd_noise_table(args),
        Command::Feasibility(args) => cmd_feasibility(args),
        Command::Dump(args) => cmd_dump(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

const CONFIG_KEYS: [&str; 9] = [
    "variant",
    "shots",
    "seed",
    "depolarizing",
    "channel",
    "output",
    "format",
    "workers",
    "primitive_controlled",
];

fn read_config(path: &Path) -> anyhow::Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
        let key = k.trim().replace('-', "_");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            bail!(usage(format!(
                "{}:{}: unknown key {key:?}",
                path.display(),
                i + 1
            )));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> anyhow::Result<T> {
    value
        .parse()
        .map_err(|_| usage(format!("invalid value for {key}: {value:?}")))
}

/// Flags override the config file.
fn merge(mut args: RunArgs) -> anyhow::Result<RunArgs> {
    let Some(path) = args.config.clone() else {
        return Ok(args);
    };
    let file = read_config(&path)?;
    for (key, value) in &file {
        match key.as_str() {
            "variant" => {
                args.variant.get_or_insert_with(|| value.clone());
            }
            "shots" if args.shots.is_none() => args.shots = Some(parse_value(key, value)?),
            "seed" if args.seed.is_none() => args.seed = Some(parse_value(key, value)?),
            "depolarizing" if args.depolarizing.is_none() && args.channel.is_none() => {
                args.depolarizing = Some(parse_value(key, value)?)
            }
            "channel" if args.channel.is_none() && args.depolarizing.is_none() => {
                args.channel = Some(value.clone())
            }
            "output" => {
                args.output.get_or_insert_with(|| value.clone());
            }
            "format" if args.format.is_none() => {
                args.format = Some(
                    Format::from_str(value, true)
                        .map_err(|_| usage(format!("invalid format {value:?}")))?,
                )
            }
            "workers" if args.workers.is_none() => args.workers = Some(parse_value(key, value)?),
            "primitive_controlled" => args.primitive_controlled |= parse_value::<bool>(key, value)?,
            _ => {}
        }
    }
    if args.depolarizing.is_some() && args.channel.is_some() {
        bail!(usage(
            "depolarizing and channel noise are mutually exclusive"
        ));
    }
    Ok(args)
}

/// Writes to stdout, treating a closed pipe as success.
fn emit(contents: &str) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    match out
        .write_all(contents.as_bytes())
        .and_then(|()| out.flush())
    {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn write_output(target: &str, contents: &str) -> anyhow::Result<()> {
    if target == "-" {
        emit(contents)?;
    } else {
        fs::write(target, contents).with_context(|| format!("writing {target}"))?;
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> anyhow::Result<u8> {
    let args = merge(args)?;
    let variant: VariantLabel = args
        .variant
        .as_deref()
        .ok_or_else(|| usage("--variant is required"))?
        .parse()?;
    let noise = match (args.depolarizing, &args.channel) {
        (Some(rate), _) => NoiseModel::Depolarizing { rate },
        (None, Some(spec)) => NoiseModel::Channel {
            spec: spec.parse::<ChannelSpec>()?,
        },
        (None, None) => NoiseModel::None,
    };
    let seed = match (args.seed, std::env::var("CHSH_SEED")) {
        (Some(seed), _) => seed,
        (None, Ok(env)) => parse_value("CHSH_SEED", &env)?,
        (None, Err(_)) => 0,
    };
    let mut config = ExperimentConfig::new(variant, args.shots.unwrap_or(1024), seed)
        .with_noise(noise)
        .with_workers(args.workers.unwrap_or(0));
    if args.primitive_controlled {
        config.options = BuildOptions::primitive();
    }
    config.validate()?;
    let result = run_experiment(&config)?;
    let document = match args.format.unwrap_or(Format::Json) {
        Format::Json => result.to_json(),
        Format::Csv => result.to_csv(),
    };
    match args.output.as_deref() {
        Some("-") => {
            eprint!("{}", result.table());
            write_output("-", &document)?;
        }
        Some(path) => {
            write_output(path, &document)?;
            emit(&result.table())?;
        }
        None => emit(&result.table())?,
    }
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<u8> {
    let checks = run_identity_suite(VerifyOptions {
        theta_offset: args.theta_offset,
    })?;
    let mut out = String::new();
    let mut failed = 0;
    for c in &checks {
        let status = if c.passed() { "PASS" } else { "FAIL" };
        writeln!(
            out,
            "{status}  {:<58} residual {:.3e} (tol {:.0e})",
            c.name, c.residual, c.tolerance
        )?;
        failed += usize::from(!c.passed());
    }
    if failed == 0 {
        writeln!(out, "all {} identities hold", checks.len())?;
    } else {
        writeln!(out, "{failed} of {} identities failed", checks.len())?;
    }
    emit(&out)?;
    Ok(u8::from(failed > 0))
}

fn cmd_noise_table(args: NoiseTableArgs) -> anyhow::Result<u8> {
    let kinds: Vec<ChannelKind> = match &args.channel {
        Some(name) => vec![name.parse()?],
        None => ChannelKind::ALL.to_vec(),
    };
    if args.points == 0 {
        bail!(usage("--points must be at least 1"));
    }
    if !(0.0..=1.0).contains(&args.p2) {
        bail!(SimError::ProbabilityOutOfRange {
            name: "p2",
            value: args.p2
        });
    }
    let mut out = String::from(NoiseRow::csv_header());
    out.push('\n');
    for kind in kinds {
        for row in noise_table(kind, args.points, args.p2)? {
            out.push_str(&row.to_csv());
            out.push('\n');
        }
    }
    emit(&out)?;
    Ok(0)
}

fn cmd_feasibility(args: FeasibilityArgs) -> anyhow::Result<u8> {
    let text = fs::read_to_string(&args.circuit)
        .map_err(|e| usage(format!("cannot read {}: {e}", args.circuit.display())))?;
    let circuit = CircuitSpec::parse(&text)?;
    let map = load_coupling_map(&args.map)?;
    let report = check_feasibility(&circuit, &map, !args.strict_direction)?;
    let mode = if args.strict_direction {
        "strict direction"
    } else {
        "direction flips allowed"
    };
    let mut out = String::new();
    if let Some(assignment) = &report.assignment {
        writeln!(out, "feasible on {} ({mode})", map.name)?;
        for (wire, phys) in assignment {
            writeln!(out, "  q{wire} -> {phys}")?;
        }
    } else {
        let n = report.violations.len();
        writeln!(
            out,
            "infeasible on {} ({mode}); best placement leaves {n} op(s) uncoupled:",
            map.name
        )?;
        for v in &report.violations {
            writeln!(out, "  {v}")?;
        }
    }
    emit(&out)?;
    Ok(0)
}

fn cmd_dump(args: DumpArgs) -> anyhow::Result<u8> {
    let variant: VariantLabel = args.variant.parse()?;
    let obs: ObservableLabel = args.observable.parse()?;
    let opts = if args.primitive_controlled {
        BuildOptions::primitive()
    } else {
        BuildOptions::default()
    };
    let spec = match variant {
        VariantLabel::I => build_variant_i(obs),
        VariantLabel::II => build_variant_ii(obs, opts)?,
        VariantLabel::IIIQuantum => build_variant_iii(ControlKind::Quantum, opts)?,
        VariantLabel::IIIClassical => build_variant_iii(ControlKind::Classical, opts)?,
        VariantLabel::IV => build_variant_iv(opts)?,
    };
    emit(&spec.to_text())?;
    Ok(0)
}
