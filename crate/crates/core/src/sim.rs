//! Reference simulation, fault injection and test-vector generation.
//!
//! HDL designs are simulated in basic simulation cycles (BSCs): every cycle
//! runs, on the same input environment, each process that saw an event on
//! its sensitivity list, then commits all assigned signals at once. At the
//! first time point every process runs once. A time point ends after as many
//! cycles as there are processes; cycles after quiescence are pass-through,
//! so every time point has the same number of snapshots as the temporal
//! model.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hdl::ast::visit_statements;
use crate::hdl::{BinOp, DesignUnit, Expr, Ident, Process, Statement, StmtKind};
use crate::logic::{GateKind, Value};
use crate::netlist::Netlist;
use crate::stimulus::Stimulus;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("unknown signal or variable `{0}` in stimulus")]
    UnknownName(String),
    #[error("variable `{0}` can only be bound at the first time point")]
    LateVariableBinding(String),
    #[error("time point {time} is still active after {cycles} cycles")]
    NonQuiescent { time: usize, cycles: usize },
    #[error("no operator `{op}` number {occurrence} on line {line}")]
    UnknownSite {
        line: u32,
        op: String,
        occurrence: usize,
    },
    #[error("no gate or net named `{0}`")]
    UnknownGate(String),
    #[error("invalid substitution: {0}")]
    InvalidSubstitution(String),
    #[error("no distinguishing input vector found in {attempts} attempts")]
    UndetectableFault { attempts: u64 },
}

/// An operator as written in source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HdlOp {
    Not,
    Binary(BinOp),
}

impl std::fmt::Display for HdlOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HdlOp::Not => f.write_str("not"),
            HdlOp::Binary(op) => f.write_str(op.symbol()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaultSpec {
    /// Replaces the `occurrence`-th (0-based, left to right) `op` on `line`.
    /// A `None` replacement removes a `not`.
    OperatorSubstitution {
        line: u32,
        op: HdlOp,
        occurrence: usize,
        replacement: Option<HdlOp>,
    },
    GateSubstitution {
        gate: String,
        kind: GateKind,
    },
    /// Forces a connection to a constant. In HDL designs every read of the
    /// signal is replaced by the literal.
    StuckAt {
        connection: String,
        value: Value,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Design {
    Hdl(DesignUnit),
    Netlist(Netlist),
}

/// Returns a mutated copy of `design`.
pub fn inject_fault(design: &Design, fault: &FaultSpec) -> Result<Design, SimError> {
    match (design, fault) {
        (Design::Hdl(u), _) => inject_hdl(u, fault).map(Design::Hdl),
        (Design::Netlist(n), _) => inject_netlist(n, fault).map(Design::Netlist),
    }
}

pub fn inject_hdl(unit: &DesignUnit, fault: &FaultSpec) -> Result<DesignUnit, SimError> {
    let mut u = unit.clone();
    match fault {
        FaultSpec::OperatorSubstitution {
            line,
            op,
            occurrence,
            replacement,
        } => {
            let mut columns = Vec::new();
            for p in &mut u.processes {
                for_each_expr(&mut p.body, &mut |e| {
                    if site_matches(e, *line, *op) {
                        columns.push(e.anchor().column);
                    }
                });
            }
            columns.sort_unstable();
            let Some(&column) = columns.get(*occurrence) else {
                return Err(SimError::UnknownSite {
                    line: *line,
                    op: op.to_string(),
                    occurrence: *occurrence,
                });
            };
            let mut result = Ok(());
            for p in &mut u.processes {
                for_each_expr(&mut p.body, &mut |e| {
                    if site_matches(e, *line, *op) && e.anchor().column == column {
                        result = substitute(e, *op, *replacement);
                    }
                });
            }
            result?;
        }
        FaultSpec::StuckAt { connection, value } => {
            let name = Ident::new(connection.clone());
            if !u.is_signal(&name) {
                return Err(SimError::UnknownName(connection.clone()));
            }
            for p in &mut u.processes {
                replace_reads(&mut p.body, &name, *value);
            }
        }
        FaultSpec::GateSubstitution { gate, .. } => {
            return Err(SimError::UnknownGate(gate.clone()))
        }
    }
    Ok(u)
}

fn site_matches(e: &Expr, line: u32, op: HdlOp) -> bool {
    match (e, op) {
        (Expr::Not(_, at), HdlOp::Not) => at.line == line,
        (Expr::Binary(b, _, at), HdlOp::Binary(o)) => *b == o && at.line == line,
        _ => false,
    }
}

fn substitute(site: &mut Expr, op: HdlOp, replacement: Option<HdlOp>) -> Result<(), SimError> {
    match (site.clone(), replacement) {
        (Expr::Not(inner, _), None) => *site = *inner,
        (Expr::Binary(old, args, at), Some(HdlOp::Binary(new))) => {
            if old == new {
                return Err(SimError::InvalidSubstitution(
                    "replacement equals the original operator".into(),
                ));
            }
            if (args.len() > 2 && !new.chainable()) || new.is_relational() != old.is_relational() {
                return Err(SimError::InvalidSubstitution(format!(
                    "`{}` cannot replace `{}` here",
                    new.symbol(),
                    old.symbol()
                )));
            }
            *site = Expr::Binary(new, args, at);
        }
        _ => {
            return Err(SimError::InvalidSubstitution(format!(
                "cannot replace `{op}` by {}",
                replacement.map_or("nothing".to_string(), |r| format!("`{r}`"))
            )))
        }
    }
    Ok(())
}

/// Visits every expression node, outermost first.
fn for_each_expr(body: &mut [Statement], f: &mut impl FnMut(&mut Expr)) {
    fn walk(e: &mut Expr, f: &mut impl FnMut(&mut Expr)) {
        f(e);
        match e {
            Expr::Not(inner, _) => walk(inner, f),
            Expr::Binary(_, args, _) => args.iter_mut().for_each(|a| walk(a, f)),
            _ => {}
        }
    }
    for s in body {
        match &mut s.kind {
            StmtKind::SignalAssign { expr, .. } | StmtKind::VariableAssign { expr, .. } => {
                walk(expr, f)
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                walk(cond, f);
                for_each_expr(then_branch, f);
                if let Some(e) = else_branch {
                    for_each_expr(e, f);
                }
            }
        }
    }
}

fn replace_reads(body: &mut [Statement], name: &Ident, value: Value) {
    for_each_expr(body, &mut |e| {
        if let Expr::Name(n, at) = e {
            if n == name {
                *e = Expr::Literal(value, *at);
            }
        }
    });
}

pub fn inject_netlist(n: &Netlist, fault: &FaultSpec) -> Result<Netlist, SimError> {
    let mut out = n.clone();
    match fault {
        FaultSpec::GateSubstitution { gate, kind } => {
            let gi = n
                .gate_named(gate)
                .ok_or_else(|| SimError::UnknownGate(gate.clone()))?;
            let g = &mut out.gates[gi];
            if g.kind == *kind {
                return Err(SimError::InvalidSubstitution(
                    "replacement equals the original gate".into(),
                ));
            }
            if kind.is_unary() != g.kind.is_unary() {
                return Err(SimError::InvalidSubstitution(format!(
                    "{} with {} inputs cannot become {kind}",
                    g.kind,
                    g.inputs.len()
                )));
            }
            g.kind = *kind;
        }
        FaultSpec::StuckAt { connection, value } => {
            let net = n
                .net(connection)
                .ok_or_else(|| SimError::UnknownGate(connection.clone()))?;
            out.set_stuck_at(net, *value);
        }
        FaultSpec::OperatorSubstitution { .. } => {
            return Err(SimError::InvalidSubstitution(
                "operator substitution needs an HDL design".into(),
            ))
        }
    }
    Ok(out)
}

/// A fresh random gate substitution: unary gates swap NOT/BUFF, others get a
/// different kind of the same arity.
pub fn random_gate_substitution(n: &Netlist, rng: &mut impl Rng) -> FaultSpec {
    let g = &n.gates[rng.gen_range(0..n.gates.len())];
    let kind = if g.kind.is_unary() {
        g.kind.complement()
    } else {
        let options: Vec<GateKind> = GateKind::ALL
            .into_iter()
            .filter(|k| !k.is_unary() && *k != g.kind)
            .collect();
        options[rng.gen_range(0..options.len())]
    };
    FaultSpec::GateSubstitution {
        gate: n.net_name(g.output).to_string(),
        kind,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestVector {
    pub inputs: Vec<bool>,
    /// Outputs of the correct circuit.
    pub expected: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VectorConfig {
    pub seed: u64,
    /// Random draws allowed per emitted vector.
    pub attempts_per_vector: u64,
}

impl Default for VectorConfig {
    fn default() -> Self {
        VectorConfig {
            seed: 0,
            attempts_per_vector: 100_000,
        }
    }
}

/// Uniform random inputs on which the faulty netlist's outputs differ from
/// the correct one's, by rejection sampling.
pub fn generate_vectors(
    correct: &Netlist,
    fault: &FaultSpec,
    count: usize,
    config: &VectorConfig,
) -> Result<Vec<TestVector>, SimError> {
    let faulty = inject_netlist(correct, fault)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut found = false;
        for _ in 0..config.attempts_per_vector {
            let inputs: Vec<bool> = (0..correct.inputs.len()).map(|_| rng.gen()).collect();
            let expected = correct.simulate(&inputs);
            if faulty.simulate(&inputs) != expected {
                out.push(TestVector { inputs, expected });
                found = true;
                break;
            }
        }
        if !found {
            return Err(SimError::UndetectableFault {
                attempts: config.attempts_per_vector,
            });
        }
    }
    Ok(out)
}

/// Snapshots of one time point: `envs[i]` is the environment before cycle
/// `i`, so `envs.len()` is the cycle count plus one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeTrace {
    pub envs: Vec<Vec<bool>>,
    /// `events[i][k]`: name `k` changed in cycle `i` (signals only).
    pub events: Vec<Vec<bool>>,
    /// `active[i][p]`: process `p` ran in cycle `i`.
    pub active: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    /// Signals in declaration order, then variables as `process.VAR`.
    pub names: Vec<String>,
    pub signal_count: usize,
    pub processes: Vec<String>,
    /// Declared initial values, before any stimulus.
    pub initial: Vec<bool>,
    pub times: Vec<TimeTrace>,
}

impl Trace {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n.eq_ignore_ascii_case(name))
    }

    /// Settled value of `name` at time point `t`.
    pub fn settled(&self, t: usize, name: &str) -> Option<Value> {
        let k = self.index(name)?;
        self.times
            .get(t)
            .map(|tt| tt.envs.last().expect("nonempty")[k].into())
    }

    /// Settled values as a signal by time table, after the declared initial
    /// values.
    pub fn dump(&self) -> String {
        let width = self.names.iter().map(|n| n.len()).max().unwrap_or(0).max(6);
        let mut out = String::new();
        let _ = write!(out, "{:width$} init", "signal");
        for t in 0..self.times.len() {
            let _ = write!(out, " {:>3}", format!("t{t}"));
        }
        out.push('\n');
        for (k, n) in self.names.iter().enumerate() {
            let _ = write!(out, "{n:width$} {:>4}", self.initial[k] as u8);
            for tt in &self.times {
                let v = tt.envs.last().expect("nonempty")[k];
                let _ = write!(out, " {:>3}", v as u8);
            }
            out.push('\n');
        }
        out
    }
}

/// Names tracked by simulation and by the temporal model: signals (ports
/// first), then process variables as `process.VAR`.
pub fn environment_names(unit: &DesignUnit) -> (Vec<String>, usize) {
    let mut names: Vec<String> = unit.all_signals().iter().map(|s| s.to_string()).collect();
    let signals = names.len();
    for p in &unit.processes {
        for v in &p.variables {
            names.push(format!("{}.{}", p.label, v.name));
        }
    }
    (names, signals)
}

/// Initial value of every environment name, from declarations (`'0'` when
/// absent).
pub fn declared_initial_values(unit: &DesignUnit) -> Vec<bool> {
    let mut out: Vec<bool> = unit
        .all_signals()
        .iter()
        .map(|s| unit.initial_value(s).as_bool())
        .collect();
    for p in &unit.processes {
        for v in &p.variables {
            out.push(v.init.is_some_and(|x| x.as_bool()));
        }
    }
    out
}

pub(crate) fn name_lookup(names: &[String]) -> HashMap<String, usize> {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.to_ascii_lowercase(), i))
        .collect()
}

/// Simulates a checked design. `expect` entries in the stimulus are ignored.
pub fn simulate(unit: &DesignUnit, stimulus: &Stimulus) -> Result<Trace, SimError> {
    let (names, signal_count) = environment_names(unit);
    let index = name_lookup(&names);
    let n = unit.processes.len();
    let sens: Vec<Vec<usize>> = unit
        .processes
        .iter()
        .map(|p| {
            p.sensitivity
                .iter()
                .flatten()
                .map(|s| index[&s.key()])
                .collect()
        })
        .collect();
    let mut times = Vec::new();
    let initial = declared_initial_values(unit);
    let mut carry = initial.clone();
    for (j, tp) in stimulus.time.iter().enumerate() {
        let mut env = carry.clone();
        let mut ev = vec![false; names.len()];
        for (name, value, _) in tp.inputs.iter().chain(&tp.state).map(|(k, v)| (k, v.0, ())) {
            let k = *index
                .get(&name.to_ascii_lowercase())
                .ok_or_else(|| SimError::UnknownName(name.clone()))?;
            if j > 0 && k >= signal_count {
                return Err(SimError::LateVariableBinding(name.clone()));
            }
            if env[k] != value.as_bool() {
                ev[k] = true;
            }
            env[k] = value.as_bool();
        }
        let mut tt = TimeTrace {
            envs: vec![env.clone()],
            events: Vec::new(),
            active: Vec::new(),
        };
        for i in 0..n {
            let active: Vec<bool> = (0..n)
                .map(|p| (j == 0 && i == 0) || sens[p].iter().any(|&k| ev[k]))
                .collect();
            let mut next = env.clone();
            let mut next_ev = vec![false; names.len()];
            for (p, proc_) in unit.processes.iter().enumerate() {
                if !active[p] {
                    continue;
                }
                for (k, v) in run_process(proc_, &env, &index) {
                    if k < signal_count && v != env[k] {
                        next_ev[k] = true;
                    }
                    next[k] = v;
                }
            }
            tt.active.push(active);
            tt.events.push(next_ev.clone());
            tt.envs.push(next.clone());
            env = next;
            ev = next_ev;
        }
        if n > 0 && sens.iter().any(|s| s.iter().any(|&k| ev[k])) {
            return Err(SimError::NonQuiescent { time: j, cycles: n });
        }
        carry = env;
        times.push(tt);
    }
    Ok(Trace {
        names,
        signal_count,
        processes: unit.processes.iter().map(|p| p.label.to_string()).collect(),
        initial,
        times,
    })
}

/// Executes one process body on `env`; returns the final value of every
/// target it assigned.
pub(crate) fn run_process(
    p: &Process,
    env: &[bool],
    index: &HashMap<String, usize>,
) -> Vec<(usize, bool)> {
    let mut vars: HashMap<String, bool> = p
        .variables
        .iter()
        .map(|v| {
            let k = index[&format!("{}.{}", p.label, v.name).to_ascii_lowercase()];
            (v.name.key(), env[k])
        })
        .collect();
    let mut pending: Vec<(usize, bool)> = Vec::new();
    exec(&p.body, env, index, &mut vars, &mut pending);
    for v in &p.variables {
        let k = index[&format!("{}.{}", p.label, v.name).to_ascii_lowercase()];
        if touched(&p.body, &v.name) {
            pending.push((k, vars[&v.name.key()]));
        }
    }
    pending
}

fn touched(body: &[Statement], name: &Ident) -> bool {
    let mut hit = false;
    visit_statements(body, &mut |s| {
        if let StmtKind::VariableAssign { target, .. } = &s.kind {
            hit |= target == name;
        }
    });
    hit
}

fn exec(
    body: &[Statement],
    env: &[bool],
    index: &HashMap<String, usize>,
    vars: &mut HashMap<String, bool>,
    pending: &mut Vec<(usize, bool)>,
) {
    for s in body {
        let read = |vars: &HashMap<String, bool>, n: &Ident| {
            vars.get(&n.key())
                .copied()
                .unwrap_or_else(|| env[index[&n.key()]])
        };
        match &s.kind {
            StmtKind::SignalAssign { target, expr } => {
                let v = expr.eval(&|n| read(vars, n));
                let k = index[&target.key()];
                pending.retain(|(x, _)| *x != k);
                pending.push((k, v));
            }
            StmtKind::VariableAssign { target, expr } => {
                let v = expr.eval(&|n| read(vars, n));
                vars.insert(target.key(), v);
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                if cond.eval(&|n| read(vars, n)) {
                    exec(then_branch, env, index, vars, pending);
                } else if let Some(e) = else_branch {
                    exec(e, env, index, vars, pending);
                }
            }
        }
    }
}
