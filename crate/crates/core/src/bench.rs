//! Fault-injection benchmark over combinational netlists.
//!
//! Each test case injects a random gate substitution, draws one input vector
//! on which the faulty circuit misbehaves, and computes all single-fault
//! diagnoses of the faulty netlist against the correct outputs. Only the
//! diagnosis itself is timed; model construction is excluded.
//!
//! A run either draws a fresh fault for every vector or injects one fault
//! and draws all vectors for it; the record says which.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::builder::build_model_from_netlist;
use crate::diag::{compute_diagnoses, DiagnosisConfig, Truncation};
use crate::model::{ComponentId, ConnId, ObsRole, ObservationSet};
use crate::netlist::Netlist;
use crate::sim::{
    generate_vectors, inject_netlist, random_gate_substitution, FaultSpec, SimError, TestVector,
    VectorConfig,
};

/// How faults are assigned to the test vectors of one circuit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultMode {
    /// A fresh random fault for every vector.
    #[default]
    PerVector,
    /// One random fault shared by all vectors.
    Shared,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub vectors: usize,
    pub repeats: usize,
    pub seed: u64,
    /// Wall-clock limit per diagnosis run.
    pub time_budget: Option<Duration>,
    /// Faults tried per test case before giving up on undetectable ones.
    pub fault_attempts: usize,
    pub vector_attempts: u64,
    pub fault_mode: FaultMode,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            vectors: 100,
            repeats: 10,
            seed: 0,
            time_budget: None,
            fault_attempts: 100,
            vector_attempts: 10_000,
            fault_mode: FaultMode::PerVector,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorRun {
    pub fault: FaultSpec,
    pub inputs: Vec<bool>,
    pub diagnoses: usize,
    /// Median over the repeats.
    pub runtime_ms: f64,
    pub contains_fault: bool,
    pub truncated: Option<Truncation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub circuit: String,
    pub gates: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub fault_mode: FaultMode,
    pub runs: Vec<VectorRun>,
    pub min_ms: f64,
    pub median_ms: f64,
    pub avg_ms: f64,
    pub max_ms: f64,
    pub median_diagnoses: f64,
    pub avg_diagnoses: f64,
    /// Runs stopped by the time budget.
    pub budget_limited: usize,
    /// Worker threads used for timing; always 1.
    pub parallelism: usize,
    pub error: Option<String>,
}

/// One CSV line of a benchmark table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub circuit: String,
    pub gates: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub fault_mode: FaultMode,
    pub vectors: usize,
    pub median_diagnoses: f64,
    pub avg_diagnoses: f64,
    pub min_ms: f64,
    pub median_ms: f64,
    pub avg_ms: f64,
    pub max_ms: f64,
    pub budget_limited: usize,
    pub fault_always_found: bool,
    pub error: String,
}

/// Median of a sample; 0 for an empty one.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

impl BenchmarkRecord {
    /// A record whose summary fields are computed from `runs`.
    pub fn from_runs(
        n: &Netlist,
        fault_mode: FaultMode,
        runs: Vec<VectorRun>,
        error: Option<String>,
    ) -> Self {
        let times: Vec<f64> = runs.iter().map(|r| r.runtime_ms).collect();
        let counts: Vec<f64> = runs.iter().map(|r| r.diagnoses as f64).collect();
        BenchmarkRecord {
            circuit: n.name.clone(),
            gates: n.gates.len(),
            inputs: n.inputs.len(),
            outputs: n.outputs.len(),
            fault_mode,
            min_ms: times.iter().copied().reduce(f64::min).unwrap_or(0.0),
            median_ms: median(&times),
            avg_ms: mean(&times),
            max_ms: times.iter().copied().reduce(f64::max).unwrap_or(0.0),
            median_diagnoses: median(&counts),
            avg_diagnoses: mean(&counts),
            budget_limited: runs.iter().filter(|r| r.truncated.is_some()).count(),
            parallelism: 1,
            runs,
            error,
        }
    }

    /// Whether the summary fields agree with the per-vector data.
    pub fn is_consistent(&self, n: &Netlist) -> bool {
        let again =
            BenchmarkRecord::from_runs(n, self.fault_mode, self.runs.clone(), self.error.clone());
        again == *self
    }

    pub fn row(&self) -> BenchRow {
        BenchRow {
            circuit: self.circuit.clone(),
            gates: self.gates,
            inputs: self.inputs,
            outputs: self.outputs,
            fault_mode: self.fault_mode,
            vectors: self.runs.len(),
            median_diagnoses: self.median_diagnoses,
            avg_diagnoses: self.avg_diagnoses,
            min_ms: self.min_ms,
            median_ms: self.median_ms,
            avg_ms: self.avg_ms,
            max_ms: self.max_ms,
            budget_limited: self.budget_limited,
            fault_always_found: self.runs.iter().all(|r| r.contains_fault),
            error: self.error.clone().unwrap_or_default(),
        }
    }
}

/// Diagnoses one test case: `faulty` against the outputs `expected` of the
/// correct circuit on `inputs`.
pub fn run_case(
    faulty: &Netlist,
    fault: &FaultSpec,
    inputs: &[bool],
    expected: &[bool],
    repeats: usize,
    time_budget: Option<Duration>,
) -> VectorRun {
    let model = build_model_from_netlist(faulty).expect("parsed netlists always model");
    let mut obs = ObservationSet::new();
    for (&net, &v) in faulty.inputs.iter().zip(inputs) {
        obs.insert(ConnId(net as u32), v.into(), ObsRole::Input)
            .expect("inputs are distinct");
    }
    for (&net, &v) in faulty.outputs.iter().zip(expected) {
        // an output that is also an input already carries the same value
        let _ = obs.insert(ConnId(net as u32), v.into(), ObsRole::Expected);
    }
    let target = match fault {
        FaultSpec::GateSubstitution { gate, .. } => {
            model.component_index(&ComponentId::gate(gate.clone()))
        }
        _ => None,
    };
    let mut times = Vec::with_capacity(repeats.max(1));
    let mut last = None;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let cfg = DiagnosisConfig {
            max_cardinality: Some(1),
            deadline: time_budget.map(|b| start + b),
            ..Default::default()
        };
        let result = compute_diagnoses(&model, &obs, &cfg);
        times.push(start.elapsed().as_secs_f64() * 1e3);
        last = Some(result);
    }
    let result = last.expect("at least one repeat");
    VectorRun {
        fault: fault.clone(),
        inputs: inputs.to_vec(),
        diagnoses: result.diagnoses.len(),
        runtime_ms: median(&times),
        contains_fault: target.is_some_and(|t| result.diagnoses.contains(&vec![t])),
        truncated: result.truncated,
    }
}

/// A random detectable fault with `count` distinguishing vectors.
fn draw_case(
    netlist: &Netlist,
    config: &BenchConfig,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(FaultSpec, Vec<TestVector>), String> {
    for _ in 0..config.fault_attempts {
        let fault = random_gate_substitution(netlist, rng);
        let vc = VectorConfig {
            seed: rng.gen(),
            attempts_per_vector: config.vector_attempts,
        };
        match generate_vectors(netlist, &fault, count, &vc) {
            Ok(v) => return Ok((fault, v)),
            Err(SimError::UndetectableFault { .. }) => continue,
            Err(e) => return Err(e.to_string()),
        }
    }
    Err(format!(
        "no detectable fault in {} attempts",
        config.fault_attempts
    ))
}

/// Runs `config.vectors` test cases on `netlist`.
pub fn run_bench(netlist: &Netlist, config: &BenchConfig) -> BenchmarkRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mode = config.fault_mode;
    if config.vectors == 0 {
        return BenchmarkRecord::from_runs(netlist, mode, Vec::new(), None);
    }
    if netlist.gates.is_empty() {
        return BenchmarkRecord::from_runs(
            netlist,
            mode,
            Vec::new(),
            Some("netlist has no gates".into()),
        );
    }
    let mut cases: Vec<(FaultSpec, TestVector)> = Vec::with_capacity(config.vectors);
    match mode {
        FaultMode::PerVector => {
            for _ in 0..config.vectors {
                match draw_case(netlist, config, 1, &mut rng) {
                    Ok((fault, mut v)) => cases.push((fault, v.remove(0))),
                    Err(e) => return finish(netlist, mode, cases, config, Some(e)),
                }
            }
        }
        FaultMode::Shared => match draw_case(netlist, config, config.vectors, &mut rng) {
            Ok((fault, vs)) => cases.extend(vs.into_iter().map(|v| (fault.clone(), v))),
            Err(e) => return BenchmarkRecord::from_runs(netlist, mode, Vec::new(), Some(e)),
        },
    }
    finish(netlist, mode, cases, config, None)
}

fn finish(
    netlist: &Netlist,
    mode: FaultMode,
    cases: Vec<(FaultSpec, TestVector)>,
    config: &BenchConfig,
    error: Option<String>,
) -> BenchmarkRecord {
    let runs = cases
        .into_iter()
        .map(|(fault, vector)| {
            let faulty = inject_netlist(netlist, &fault).expect("generated faults apply");
            run_case(
                &faulty,
                &fault,
                &vector.inputs,
                &vector.expected,
                config.repeats,
                config.time_budget,
            )
        })
        .collect();
    BenchmarkRecord::from_runs(netlist, mode, runs, error)
}
