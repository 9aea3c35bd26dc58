//! `stochdd`: stochastic noisy circuit simulation from the command line.
//!
//! Exit codes: 0 success, 2 bad flags, 3 circuit parse/validation errors,
//! 4 runtime errors (including a failed `--verify`). Errors are reported on
//! stderr as one JSON object; stdout carries only the result document.

use std::io::{IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::json;

use stochdd::circuit::{generate_ghz, generate_qft, parse_qasm_with_notes, Circuit};
use stochdd::dd::{index_to_bits, parse_bits};
use stochdd::noise::{InsertionPolicy, NoiseSpec};
use stochdd::oracle::max_amplitude_deviation;
use stochdd::report::{emit_result, OutputFormat};
use stochdd::sampler::{plan_samples, run_ensemble_with_progress, PropertySpec};
use stochdd::Error;

/// Largest register for which `--all-basis` may enumerate every outcome.
const ALL_BASIS_MAX_QUBITS: usize = 16;

/// Agreement required between the engine and the dense reference in `--verify`.
const VERIFY_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Builtin {
    Ghz,
    Qft,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Policy {
    /// Channels after each gate on the qubits it touches.
    Operands,
    /// Channels after each gate on every qubit.
    AllQubits,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "stochdd", version, about = "Stochastic noisy quantum-circuit simulation on decision diagrams")]
struct Args {
    /// Built-in benchmark circuit (requires --qubits).
    #[arg(long, value_enum, conflicts_with = "circuit", required_unless_present = "circuit")]
    builtin: Option<Builtin>,

    /// Register size for --builtin.
    #[arg(long)]
    qubits: Option<usize>,

    /// OpenQASM 2.0 file to simulate.
    #[arg(long)]
    circuit: Option<PathBuf>,

    /// Depolarizing probability per qubit per gate.
    #[arg(long, default_value_t = 0.001)]
    p_depol: f64,

    /// Amplitude-damping probability per qubit per gate.
    #[arg(long, default_value_t = 0.002)]
    p_damp: f64,

    /// Phase-flip probability per qubit per gate.
    #[arg(long, default_value_t = 0.001)]
    p_flip: f64,

    /// Where noise channels are inserted.
    #[arg(long, value_enum, default_value = "operands")]
    policy: Policy,

    /// Number of runs M; overrides the (L, eps, delta) plan.
    #[arg(long)]
    shots: Option<u64>,

    /// Target accuracy of every estimate.
    #[arg(long, default_value_t = 0.01)]
    eps: f64,

    /// Allowed failure probability of the joint guarantee.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,

    /// Number of properties L covered by the guarantee.
    #[arg(long, default_value_t = 1000)]
    num_properties: usize,

    /// Worker threads [default: available parallelism].
    #[arg(long, env = "SIM_WORKERS")]
    workers: Option<usize>,

    /// Base seed of the run generators.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Estimate the probability of this basis outcome (q0 first); repeatable.
    #[arg(long = "property", value_name = "BITS")]
    properties: Vec<String>,

    /// Estimate the probability of every basis outcome.
    #[arg(long)]
    all_basis: bool,

    /// Estimate the fidelity with the noiseless output state.
    #[arg(long)]
    fidelity: bool,

    /// Output document format.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,

    /// Write the document here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Only compare noiseless amplitudes against the dense reference.
    #[arg(long)]
    verify: bool,

    /// Largest register accepted by --verify.
    #[arg(long, default_value_t = 10)]
    qubits_max: usize,

    /// Zero the worker count and wall time in the document so identical
    /// inputs give identical bytes.
    #[arg(long)]
    reproducible: bool,

    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn flags(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            kind: "usage",
            message: message.into(),
        }
    }

    fn input(e: impl std::fmt::Display) -> Self {
        Failure {
            code: 3,
            kind: "input",
            message: e.to_string(),
        }
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Failure {
            code: 4,
            kind: "runtime",
            message: e.to_string(),
        }
    }
}

fn classify(e: Error) -> Failure {
    match e {
        Error::Parse { .. } | Error::UnsupportedConstruct { .. } | Error::Validation(_) => Failure::input(e),
        _ => Failure::runtime(e),
    }
}

fn load_circuit(args: &Args) -> Result<Circuit, Failure> {
    if let Some(path) = &args.circuit {
        if args.qubits.is_some() {
            return Err(Failure::flags("--qubits only applies to --builtin"));
        }
        let src = std::fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
        let (mut circuit, notes) = parse_qasm_with_notes(&src).map_err(|e| {
            let mut f = classify(e);
            f.message = format!("{}: {}", path.display(), f.message);
            f
        })?;
        if !args.quiet {
            for note in notes {
                eprintln!("note: {note}");
            }
        }
        circuit.name = path.display().to_string();
        circuit.check().map_err(classify)?;
        return Ok(circuit);
    }
    let n = args.qubits.ok_or_else(|| Failure::flags("--builtin requires --qubits"))?;
    let built = match args.builtin.expect("clap enforces a circuit source") {
        Builtin::Ghz => generate_ghz(n),
        Builtin::Qft => generate_qft(n),
    };
    built.map_err(|e| Failure::flags(e.to_string()))
}

fn properties(args: &Args, circuit: &Circuit) -> Result<Vec<PropertySpec>, Failure> {
    let n = circuit.num_qubits;
    let mut props = Vec::new();
    if args.all_basis {
        if n > ALL_BASIS_MAX_QUBITS {
            return Err(Failure::flags(format!(
                "--all-basis is limited to {ALL_BASIS_MAX_QUBITS} qubits, circuit has {n}"
            )));
        }
        props.extend((0..1usize << n).map(|i| PropertySpec::basis(&index_to_bits(i, n))));
    }
    for p in &args.properties {
        let bits = parse_bits(p).map_err(|e| Failure::flags(e.to_string()))?;
        if bits.len() != n {
            return Err(Failure::flags(format!(
                "--property {p} has {} bits, circuit has {n} qubits",
                bits.len()
            )));
        }
        if !args.all_basis {
            props.push(PropertySpec::basis(&bits));
        }
    }
    if args.fidelity {
        props.push(PropertySpec::ideal_fidelity(circuit));
    }
    Ok(props)
}

fn verify(args: &Args, circuit: &Circuit) -> Result<String, Failure> {
    let n = circuit.num_qubits;
    if n > args.qubits_max {
        return Err(Failure::flags(format!(
            "--verify accepts at most --qubits-max {} qubits, circuit has {n}",
            args.qubits_max
        )));
    }
    let deviation = max_amplitude_deviation(circuit).map_err(classify)?;
    if deviation > VERIFY_TOLERANCE {
        return Err(Failure::runtime(format!(
            "decision-diagram and dense amplitudes differ by {deviation:e} (tolerance {VERIFY_TOLERANCE:e})"
        )));
    }
    let doc = json!({
        "circuit": circuit.name,
        "n": n,
        "max_abs_deviation": deviation,
        "tolerance": VERIFY_TOLERANCE,
        "agree": true,
    });
    Ok(format!("{doc:#}\n"))
}

fn simulate(args: &Args, circuit: &Circuit) -> Result<String, Failure> {
    let spec = NoiseSpec {
        p_depol: args.p_depol,
        p_damp: args.p_damp,
        p_flip: args.p_flip,
        policy: match args.policy {
            Policy::Operands => InsertionPolicy::OperandsOnly,
            Policy::AllQubits => InsertionPolicy::AllQubitsPerStep,
        },
    };
    spec.validate().map_err(|e| Failure::flags(e.to_string()))?;
    let props = properties(args, circuit)?;
    let mut num_properties = args.num_properties;
    if props.len() > num_properties {
        if !args.quiet {
            eprintln!(
                "note: raising --num-properties from {num_properties} to the {} tracked properties",
                props.len()
            );
        }
        num_properties = props.len();
    }
    let mut plan = plan_samples(num_properties, args.eps, args.delta).map_err(|e| Failure::flags(e.to_string()))?;
    if let Some(m) = args.shots {
        plan = plan.with_runs(m).map_err(|e| Failure::flags(e.to_string()))?;
    }
    let workers = match args.workers {
        Some(0) => return Err(Failure::flags("--workers must be at least 1")),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |w| w.get()),
    };

    let total = plan.num_runs;
    let step = (total / 20).max(1);
    let show = !args.quiet;
    let live = std::io::stderr().is_terminal();
    let progress = move |done: u64| {
        if show && (done % step == 0 || done == total) {
            let mut err = std::io::stderr().lock();
            let end = if live && done < total { "\r" } else { "\n" };
            let _ = write!(err, "progress: {done}/{total} runs{end}");
        }
    };
    if show {
        eprintln!(
            "simulating {} ({} qubits, {} ops): M = {total} runs on {workers} worker(s)",
            circuit.name,
            circuit.num_qubits,
            circuit.ops.len()
        );
    }
    let agg = run_ensemble_with_progress(circuit, &spec, &plan, &props, workers, args.seed, Some(&progress))
        .map_err(classify)?;
    let agg = if args.reproducible { agg.reproducible() } else { agg };
    let format = match args.format {
        Format::Json => OutputFormat::Json,
        Format::Csv => OutputFormat::Csv,
    };
    if show {
        let top = agg.histogram.iter().max_by_key(|(_, &c)| c).map(|(k, _)| k.as_str()).unwrap_or("-");
        eprintln!(
            "done: {} distinct outcomes (most frequent {top}), {} error events",
            agg.histogram.len(),
            agg.error_events
        );
    }
    emit_result(&agg, format).map_err(Failure::runtime)
}

fn execute(args: &Args) -> Result<(), Failure> {
    let circuit = load_circuit(args)?;
    let doc = if args.verify {
        verify(args, &circuit)?
    } else {
        simulate(args, &circuit)?
    };
    match &args.out {
        Some(path) => std::fs::write(path, doc)
            .map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(doc.as_bytes())
            .map_err(|e| Failure::runtime(format!("cannot write output: {e}"))),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let doc = json!({ "error": { "kind": f.kind, "exit_code": f.code, "message": f.message } });
            eprintln!("{doc}");
            ExitCode::from(f.code)
        }
    }
}
