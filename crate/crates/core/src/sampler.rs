//! Monte-Carlo estimation over independent noisy runs.
//!
//! The number of runs needed to estimate `L` quadratic properties to within
//! `epsilon` with confidence `1 - delta` is `ceil(ln(2L/delta) / (4 epsilon^2))`
//! (see [`plan_samples`]).
//!
//! Runs are distributed over worker threads by static striding on the run
//! index. Each run draws from its own generator seeded by
//! [`run_seed`]`(base_seed, run_index)` and executes in a private copy of a
//! prepared decision-diagram package, so its result depends only on the
//! circuit, the noise, the base seed and its index. Per-run values are merged
//! in run-index order, which makes the aggregate bit-identical for any worker
//! count.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, GateOp};
use crate::dd::{format_bits, Complex, MatrixDD, Package, StateDD};
use crate::error::{Error, Result};
use crate::noise::{damping_kraus_pair, insert_noise, NoiseSpec, Pauli};

/// Nodes allowed in a run's package before a collection pass.
const GC_THRESHOLD: usize = 200_000;

/// `(L, epsilon, delta) -> M`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub num_properties: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub num_runs: u64,
}

impl SamplingPlan {
    /// Keeps `(L, epsilon, delta)` for error reporting but runs exactly `num_runs`.
    pub fn with_runs(mut self, num_runs: u64) -> Result<Self> {
        if num_runs == 0 {
            return Err(Error::InvalidArgument("at least one run is required".into()));
        }
        self.num_runs = num_runs;
        Ok(self)
    }
}

fn check_plan_inputs(num_properties: usize, epsilon: f64, delta: f64) -> Result<()> {
    if num_properties == 0 {
        return Err(Error::InvalidArgument("number of properties must be at least 1".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} is not in (0, 1)")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta = {delta} is not in (0, 1)")));
    }
    Ok(())
}

/// Number of runs `M = ceil(ln(2L/delta) / (4 epsilon^2))`, natural log.
pub fn plan_samples(num_properties: usize, epsilon: f64, delta: f64) -> Result<SamplingPlan> {
    check_plan_inputs(num_properties, epsilon, delta)?;
    let m = ((2.0 * num_properties as f64 / delta).ln() / (4.0 * epsilon * epsilon)).ceil();
    Ok(SamplingPlan {
        num_properties,
        epsilon,
        delta,
        num_runs: (m as u64).max(1),
    })
}

/// Hoeffding half-width `sqrt(ln(2L/delta) / (2M))` for `[0, 1]`-valued
/// per-run samples, union-bounded over `L` properties.
pub fn hoeffding_halfwidth(num_properties: usize, delta: f64, num_runs: u64) -> f64 {
    ((2.0 * num_properties as f64 / delta).ln() / (2.0 * num_runs as f64)).sqrt()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `run_index` under `base_seed`.
pub fn run_seed(base_seed: u64, run_index: u64) -> u64 {
    splitmix64(base_seed ^ splitmix64(run_index))
}

/// What a quadratic property `|<omega|psi>|^2` compares against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PropertyTarget {
    /// Outcome probability of a basis state (q0 first).
    Basis(Vec<bool>),
    /// Fidelity with the noiseless output of a circuit.
    Prepared(Circuit),
    /// Fidelity with an explicit normalized state vector.
    Amplitudes(Vec<Complex>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertySpec {
    pub label: String,
    pub target: PropertyTarget,
}

impl PropertySpec {
    pub fn basis(bits: &[bool]) -> Self {
        PropertySpec {
            label: format!("P({})", format_bits(bits)),
            target: PropertyTarget::Basis(bits.to_vec()),
        }
    }

    /// Fidelity with the noiseless output of `circuit`.
    pub fn ideal_fidelity(circuit: &Circuit) -> Self {
        PropertySpec {
            label: format!("F({})", circuit.name),
            target: PropertyTarget::Prepared(circuit.clone()),
        }
    }
}

/// Outcome of one noisy run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run_index: u64,
    pub measured_bits: Vec<bool>,
    pub property_values: Vec<f64>,
    pub error_event_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub label: String,
    pub mean: f64,
    /// Standard error of the mean; `None` with fewer than two runs.
    pub stderr: Option<f64>,
}

/// Merged results of an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub circuit: String,
    pub num_qubits: usize,
    pub noise: NoiseSpec,
    pub plan: SamplingPlan,
    pub runs: u64,
    pub seed: u64,
    pub histogram: BTreeMap<String, u64>,
    pub estimates: Vec<Estimate>,
    pub error_events: u64,
    /// Worker threads used; does not influence any other field.
    pub workers: usize,
    pub wall_time_s: f64,
}

impl Aggregate {
    /// Copy with the execution metadata (worker count, wall time) zeroed,
    /// leaving only fields that are a function of the inputs and the seed.
    pub fn reproducible(&self) -> Aggregate {
        Aggregate {
            workers: 0,
            wall_time_s: 0.0,
            ..self.clone()
        }
    }

    /// Equality ignoring the execution metadata.
    pub fn same_results(&self, other: &Aggregate) -> bool {
        self.reproducible() == other.reproducible()
    }
}

/// Hoeffding and empirical error bars of one estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBar {
    pub label: String,
    pub hoeffding_halfwidth: f64,
    pub stderr: f64,
    pub note: String,
}

/// Error bars for every estimate of `agg`.
pub fn estimate_error_bars(agg: &Aggregate) -> Result<Vec<ErrorBar>> {
    if agg.runs < 2 {
        return Err(Error::InvalidArgument(format!(
            "error bars need at least 2 runs, got {}",
            agg.runs
        )));
    }
    let hw = hoeffding_halfwidth(agg.plan.num_properties, agg.plan.delta, agg.runs);
    let note = format!(
        "with probability >= {:.4}, all {} tracked properties lie within the Hoeffding half-width",
        1.0 - agg.plan.delta,
        agg.plan.num_properties
    );
    Ok(agg
        .estimates
        .iter()
        .map(|e| ErrorBar {
            label: e.label.clone(),
            hoeffding_halfwidth: hw,
            stderr: e.stderr.unwrap_or(0.0),
            note: note.clone(),
        })
        .collect())
}

/// A package prepared with the gate operators and reference states of one
/// ensemble. Every run works on its own clone.
pub struct RunTemplate {
    circuit: Circuit,
    spec: NoiseSpec,
    pkg: Package,
    gates: Vec<Option<MatrixDD>>,
    references: Vec<StateDD>,
    initial: StateDD,
}

impl RunTemplate {
    pub fn new(circuit: &Circuit, spec: &NoiseSpec, properties: &[PropertySpec]) -> Result<Self> {
        circuit.check()?;
        spec.validate()?;
        let n = circuit.num_qubits;
        let mut pkg = Package::new();
        let gates = circuit
            .ops
            .iter()
            .map(|op| {
                if op.kind.is_unitary() {
                    pkg.gate_matrix(op, n).map(Some)
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        // Noise operators are built here once so every run finds them cached.
        let mut noisy_qubits = BTreeSet::new();
        for (i, op) in circuit.ops.iter().enumerate() {
            if op.kind.is_unitary() {
                noisy_qubits.extend(spec.schedule(op, i, n).into_iter().map(|step| step.qubit));
            }
        }
        for &q in &noisy_qubits {
            for pauli in Pauli::ALL {
                pkg.gate_matrix(&GateOp::single(pauli.gate_kind(), q), n)?;
            }
            if spec.p_damp > 0.0 {
                damping_kraus_pair(&mut pkg, n, q, spec.p_damp)?;
            }
        }
        let mut references = Vec::with_capacity(properties.len());
        for prop in properties {
            let r = match &prop.target {
                PropertyTarget::Basis(bits) => {
                    if bits.len() != n {
                        return Err(Error::InvalidArgument(format!(
                            "property `{}` has {} bits, circuit has {n} qubits",
                            prop.label,
                            bits.len()
                        )));
                    }
                    pkg.make_basis_state(n, bits)?
                }
                PropertyTarget::Prepared(reference) => {
                    if reference.num_qubits != n {
                        return Err(Error::InvalidArgument(format!(
                            "reference circuit of `{}` has {} qubits, expected {n}",
                            prop.label, reference.num_qubits
                        )));
                    }
                    reference.check()?;
                    let mut s = pkg.make_zero_state(n)?;
                    for op in reference.unitary_ops() {
                        let m = pkg.gate_matrix(op, n)?;
                        s = pkg.apply_matrix(&m, &s)?;
                    }
                    s
                }
                PropertyTarget::Amplitudes(amps) => {
                    if amps.len() != 1usize << n {
                        return Err(Error::InvalidArgument(format!(
                            "reference of `{}` has {} amplitudes, expected {}",
                            prop.label,
                            amps.len(),
                            1usize << n
                        )));
                    }
                    let s = pkg.state_from_amplitudes(amps)?;
                    let norm = pkg.norm_squared(&s);
                    if (norm - 1.0).abs() > 1e-9 {
                        return Err(Error::InvalidArgument(format!(
                            "reference of `{}` is not normalized (squared norm {norm})",
                            prop.label
                        )));
                    }
                    s
                }
            };
            references.push(r);
        }
        let initial = pkg.make_zero_state(n)?;
        let mut keep = references.clone();
        keep.push(initial);
        let ops: Vec<MatrixDD> = gates.iter().flatten().copied().collect();
        pkg.collect_garbage(&keep, &ops);
        Ok(RunTemplate {
            circuit: circuit.clone(),
            spec: spec.clone(),
            pkg,
            gates,
            references,
            initial,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.circuit.num_qubits
    }

    /// Executes run `run_index` with the generator seeded from `base_seed`.
    pub fn run(&self, run_index: u64, base_seed: u64) -> Result<RunResult> {
        let mut pkg = self.pkg.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(run_seed(base_seed, run_index));
        let mut state = self.initial;
        let mut events = 0;
        let n = self.circuit.num_qubits;
        for (i, op) in self.circuit.ops.iter().enumerate() {
            let Some(m) = self.gates[i] else { continue };
            state = pkg.apply_matrix(&m, &state)?;
            let (next, fired) = insert_noise(&mut pkg, &state, op, i, &self.spec, &mut rng)?;
            state = next;
            events += fired;
            if pkg.stats().vector_nodes > GC_THRESHOLD {
                let mut keep = self.references.clone();
                keep.push(state);
                pkg.collect_garbage(&keep, &[]);
            }
        }
        let mut values = Vec::with_capacity(self.references.len());
        for r in &self.references {
            let overlap = pkg.inner_product(r, &state)?;
            values.push(overlap.norm_sqr());
        }
        let bits = pkg.measure_all(&state, &mut rng)?;
        debug_assert_eq!(bits.len(), n);
        Ok(RunResult {
            run_index,
            measured_bits: bits,
            property_values: values,
            error_event_count: events,
        })
    }
}

/// One noisy simulation run. Equivalent to building a [`RunTemplate`] and
/// calling [`RunTemplate::run`].
pub fn run_once(
    circuit: &Circuit,
    spec: &NoiseSpec,
    properties: &[PropertySpec],
    run_index: u64,
    base_seed: u64,
) -> Result<RunResult> {
    RunTemplate::new(circuit, spec, properties)?.run(run_index, base_seed)
}

/// Runs the ensemble described by `plan` on `workers` threads.
pub fn run_ensemble(
    circuit: &Circuit,
    spec: &NoiseSpec,
    plan: &SamplingPlan,
    properties: &[PropertySpec],
    workers: usize,
    base_seed: u64,
) -> Result<Aggregate> {
    run_ensemble_with_progress(circuit, spec, plan, properties, workers, base_seed, None)
}

/// As [`run_ensemble`], calling `progress(completed_runs)` after each run.
/// The callback may be invoked from any worker thread.
pub fn run_ensemble_with_progress(
    circuit: &Circuit,
    spec: &NoiseSpec,
    plan: &SamplingPlan,
    properties: &[PropertySpec],
    workers: usize,
    base_seed: u64,
    progress: Option<&(dyn Fn(u64) + Sync)>,
) -> Result<Aggregate> {
    if workers == 0 {
        return Err(Error::InvalidArgument("at least one worker is required".into()));
    }
    if plan.num_runs == 0 {
        return Err(Error::InvalidArgument("at least one run is required".into()));
    }
    let started = Instant::now();
    let template = RunTemplate::new(circuit, spec, properties)?;
    let total = plan.num_runs;
    let workers = workers.min(total as usize).max(1);
    let abort = AtomicBool::new(false);
    let completed = AtomicU64::new(0);

    let partials: Vec<std::result::Result<Vec<RunResult>, (u64, Error)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let (template, abort, completed) = (&template, &abort, &completed);
                scope.spawn(move || {
                    let mut out = Vec::with_capacity(total as usize / workers + 1);
                    let mut index = w as u64;
                    while index < total {
                        if abort.load(Ordering::Relaxed) {
                            break;
                        }
                        match template.run(index, base_seed) {
                            Ok(r) => out.push(r),
                            Err(e) => {
                                abort.store(true, Ordering::Relaxed);
                                return Err((index, e));
                            }
                        }
                        let done = completed.fetch_add(1, Ordering::Relaxed) + 1;
                        if let Some(cb) = progress {
                            cb(done);
                        }
                        index += workers as u64;
                    }
                    Ok(out)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation worker panicked"))
            .collect()
    });

    let mut slots: Vec<Option<RunResult>> = vec![None; total as usize];
    let mut failure: Option<(u64, Error)> = None;
    for partial in partials {
        match partial {
            Ok(results) => {
                for r in results {
                    let i = r.run_index as usize;
                    slots[i] = Some(r);
                }
            }
            Err((index, e)) => {
                if failure.as_ref().is_none_or(|(i, _)| index < *i) {
                    failure = Some((index, e));
                }
            }
        }
    }
    if let Some((run_index, source)) = failure {
        return Err(Error::RunFailed {
            run_index,
            source: Box::new(source),
        });
    }
    let results: Vec<RunResult> = slots
        .into_iter()
        .map(|r| r.expect("every run index is covered by exactly one worker"))
        .collect();

    let mut agg = aggregate(circuit, spec, plan, properties, &results, base_seed);
    agg.workers = workers;
    agg.wall_time_s = started.elapsed().as_secs_f64();
    Ok(agg)
}

/// Merges run results, summing in the order given.
pub fn aggregate(
    circuit: &Circuit,
    spec: &NoiseSpec,
    plan: &SamplingPlan,
    properties: &[PropertySpec],
    results: &[RunResult],
    base_seed: u64,
) -> Aggregate {
    let m = results.len();
    let mut histogram = BTreeMap::new();
    let mut error_events = 0u64;
    for r in results {
        *histogram.entry(format_bits(&r.measured_bits)).or_insert(0u64) += 1;
        error_events += r.error_event_count as u64;
    }
    let estimates = properties
        .iter()
        .enumerate()
        .map(|(l, prop)| {
            let mean = results.iter().map(|r| r.property_values[l]).sum::<f64>() / m as f64;
            let stderr = (m >= 2).then(|| {
                let ss: f64 = results.iter().map(|r| (r.property_values[l] - mean).powi(2)).sum();
                (ss / (m as f64 - 1.0) / m as f64).sqrt()
            });
            Estimate {
                label: prop.label.clone(),
                mean,
                stderr,
            }
        })
        .collect();
    Aggregate {
        circuit: circuit.name.clone(),
        num_qubits: circuit.num_qubits,
        noise: spec.clone(),
        plan: *plan,
        runs: m as u64,
        seed: base_seed,
        histogram,
        estimates,
        error_events,
        workers: 1,
        wall_time_s: 0.0,
    }
}
