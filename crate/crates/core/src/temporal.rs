//! Unfolding a design over time points and basic simulation cycles.
//!
//! Every name (signal or process variable) has one environment line per
//! cycle boundary: `E^0 .. E^n` at each time point, with `n` the number of
//! processes. Cycle `i` instantiates every process body on `E^i` together
//! with a process shell. The shell decides whether the process runs (any
//! event on its sensitivity list), selects the body outputs or the previous
//! values for `E^{i+1}`, and emits an event flag per driven signal.
//!
//! Time points are chained by links: a signal at `E^0_j` is either the
//! override `ext` (when `ovr` is set) or the settled value `E^n_{j-1}`.
//! Variables carry over unchanged. At the first time point a constant
//! activation line runs every process in cycle 0.

use std::collections::HashMap;

use crate::builder::{BodyCompiler, Granularity};
use crate::hdl::DesignUnit;
use crate::logic::{Expr, GateKind, Value};
use crate::model::{
    BscIndex, ComponentId, ComponentKind, ComponentModel, ConnId, Constraint, ModelBuilder,
    ModelError, ObsRole, ObservationSet, SourceKind,
};
use crate::sim::{declared_initial_values, environment_names, name_lookup};
use crate::stimulus::Stimulus;

/// A temporally unfolded model and the coordinates of its lines.
#[derive(Debug, Clone)]
pub struct TemporalModel {
    pub model: ComponentModel,
    names: Vec<String>,
    signal_count: usize,
    cycles: usize,
    index: HashMap<String, usize>,
    initial: Vec<bool>,
    /// `env[j][i][k]`: name `k` before cycle `i` of time point `j`.
    env: Vec<Vec<Vec<ConnId>>>,
    /// `event[j][i][k]`: event flag of signal `k` seen by cycle `i`.
    event: Vec<Vec<Vec<ConnId>>>,
    /// `overrides[j][k]` = (`ovr`, `ext`) for `j > 0`.
    overrides: Vec<Vec<(ConnId, ConnId)>>,
}

impl TemporalModel {
    pub fn time_points(&self) -> usize {
        self.env.len()
    }

    /// Basic simulation cycles per time point.
    pub fn cycles(&self) -> usize {
        self.cycles
    }

    /// Signals first, then variables as `process.VAR`.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn signal_count(&self) -> usize {
        self.signal_count
    }

    fn name_index(&self, name: &str) -> Result<usize, ModelError> {
        self.index
            .get(&name.to_ascii_lowercase())
            .copied()
            .ok_or_else(|| ModelError::UnknownSignal(name.to_string()))
    }

    /// Line of `name` before cycle `cycle` (`cycle == cycles()` is the settled
    /// value) of time point `time`.
    pub fn env(&self, time: usize, cycle: usize, name: &str) -> Result<ConnId, ModelError> {
        let k = self.name_index(name)?;
        self.env
            .get(time)
            .and_then(|t| t.get(cycle))
            .map(|e| e[k])
            .ok_or_else(|| ModelError::UnknownSignal(format!("{name}@t{time}.c{cycle}")))
    }

    /// Event flag of signal `name` feeding cycle `cycle` of time point
    /// `time`. Not meaningful at time 0, cycle 0, where every process runs.
    pub fn event(&self, time: usize, cycle: usize, name: &str) -> Result<ConnId, ModelError> {
        let k = self.name_index(name)?;
        if k >= self.signal_count {
            return Err(ModelError::UnknownSignal(name.to_string()));
        }
        self.event
            .get(time)
            .and_then(|t| t.get(cycle))
            .map(|e| e[k])
            .ok_or_else(|| ModelError::UnknownSignal(format!("{name}@t{time}.c{cycle}")))
    }

    /// Observations for a stimulus with one entry per time point.
    ///
    /// At the first time point every name not bound by the stimulus takes its
    /// declared initial value. Later bindings override signals; unbound
    /// signals keep their settled values. Expectations constrain settled
    /// values.
    pub fn apply_stimulus(&self, stimulus: &Stimulus) -> Result<ObservationSet, ModelError> {
        if stimulus.time.len() != self.time_points() {
            return Err(ModelError::TimePointMismatch {
                stimulus: stimulus.time.len(),
                model: self.time_points(),
            });
        }
        let mut obs = ObservationSet::new();
        fn put(
            obs: &mut ObservationSet,
            c: ConnId,
            v: Value,
            role: ObsRole,
            name: &str,
        ) -> Result<(), ModelError> {
            obs.insert(c, v, role)
                .map_err(|_| ModelError::ConflictingObservation(name.to_string()))
        }
        for (j, tp) in stimulus.time.iter().enumerate() {
            let mut bound = vec![false; self.names.len()];
            for (name, value, role) in tp.bindings() {
                let k = self.name_index(name)?;
                if role == ObsRole::Expected {
                    put(&mut obs, self.env[j][self.cycles][k], value, role, name)?;
                } else if j == 0 {
                    bound[k] = true;
                    put(&mut obs, self.env[0][0][k], value, role, name)?;
                } else if k < self.signal_count {
                    bound[k] = true;
                    let (ovr, ext) = self.overrides[j][k];
                    put(&mut obs, ovr, Value::One, role, name)?;
                    put(&mut obs, ext, value, role, name)?;
                } else {
                    return Err(ModelError::NotExternal(format!("{name}@t{j}")));
                }
            }
            for k in (0..self.names.len()).filter(|&k| !bound[k]) {
                if j == 0 {
                    let v = self.initial[k].into();
                    put(
                        &mut obs,
                        self.env[0][0][k],
                        v,
                        ObsRole::State,
                        &self.names[k],
                    )?;
                } else if k < self.signal_count {
                    put(
                        &mut obs,
                        self.overrides[j][k].0,
                        Value::Zero,
                        ObsRole::Input,
                        &self.names[k],
                    )?;
                }
            }
        }
        Ok(obs)
    }
}

/// Unfolds a checked design over `time_points` time points.
pub fn unfold(
    unit: &DesignUnit,
    time_points: usize,
    granularity: Granularity,
) -> Result<TemporalModel, ModelError> {
    let (names, signal_count) = environment_names(unit);
    let index = name_lookup(&names);
    let n = unit.processes.len();
    let mut b = ModelBuilder::new(format!("{}@{}", unit.entity, time_points));

    let zero = b.connection("const:0")?;
    b.constrain(None, Constraint::constant(Value::Zero, zero));
    let init = b.connection("const:1")?;
    b.constrain(None, Constraint::constant(Value::One, init));

    // which process drives each name, if any
    let mut driver: Vec<Option<usize>> = vec![None; names.len()];
    let mut targets: Vec<Vec<usize>> = Vec::new();
    for (p, proc_) in unit.processes.iter().enumerate() {
        let mut ts: Vec<usize> = proc_
            .driven_signals()
            .iter()
            .map(|s| index[&s.key()])
            .collect();
        for v in &proc_.variables {
            let k = index[&format!("{}.{}", proc_.label, v.name).to_ascii_lowercase()];
            let mut written = false;
            crate::hdl::ast::visit_statements(&proc_.body, &mut |s| {
                written |= s.targets().contains(&&v.name);
            });
            if written {
                ts.push(k);
            }
        }
        ts.sort_unstable();
        ts.dedup();
        for &k in &ts {
            driver[k] = Some(p);
        }
        targets.push(ts);
    }

    let mut env: Vec<Vec<Vec<ConnId>>> = Vec::new();
    let mut event: Vec<Vec<Vec<ConnId>>> = Vec::new();
    let mut overrides: Vec<Vec<(ConnId, ConnId)>> = Vec::new();

    for j in 0..time_points {
        let tag = |i: usize| format!("t{j}.c{i}");
        let mut e0 = Vec::with_capacity(names.len());
        let mut ev0 = Vec::with_capacity(signal_count);
        let mut ovr_j = Vec::new();
        for (k, name) in names.iter().enumerate() {
            if j == 0 {
                let c = b.connection(format!("{name}@{}", tag(0)))?;
                b.mark_external(c);
                e0.push(c);
                if k < signal_count {
                    ev0.push(init);
                }
            } else if k < signal_count {
                let carry = env[j - 1][n][k];
                let ovr = b.connection(format!("ovr:{name}@t{j}"))?;
                let ext = b.connection(format!("ext:{name}@t{j}"))?;
                b.mark_external(ovr);
                b.mark_external(ext);
                let c = b.connection(format!("{name}@{}", tag(0)))?;
                let mux = Expr::Mux(
                    Box::new(Expr::Input(0)),
                    Box::new(Expr::Input(1)),
                    Box::new(Expr::Input(2)),
                );
                b.constrain(None, Constraint::expr(mux, vec![ovr, ext, carry], c)?);
                let ev = b.connection(format!("ev:{name}@{}", tag(0)))?;
                let changed = Expr::Gate(
                    GateKind::And,
                    vec![
                        Expr::Input(0),
                        Expr::Gate(GateKind::Xor, vec![Expr::Input(1), Expr::Input(2)]),
                    ],
                );
                b.constrain(None, Constraint::expr(changed, vec![ovr, ext, carry], ev)?);
                ovr_j.push((ovr, ext));
                e0.push(c);
                ev0.push(ev);
            } else {
                e0.push(env[j - 1][n][k]);
            }
        }
        let mut envs = vec![e0];
        let mut events = vec![ev0];
        for i in 0..n {
            let cur = envs[i].clone();
            let cur_ev = events[i].clone();
            let mut next = cur.clone();
            let mut next_ev = vec![zero; signal_count];
            for k in 0..names.len() {
                if driver[k].is_some() {
                    let c = b.connection(format!("{}@{}", names[k], tag(i + 1)))?;
                    next[k] = c;
                    if k < signal_count {
                        next_ev[k] = b.connection(format!("ev:{}@{}", names[k], tag(i + 1)))?;
                    }
                }
            }
            let instance = BscIndex {
                time: j as u32,
                cycle: i as u32,
            };
            for (p, proc_) in unit.processes.iter().enumerate() {
                let prefix = format!("{}@{}", proc_.label, tag(i));
                let signals: HashMap<String, ConnId> = (0..signal_count)
                    .map(|k| (names[k].to_ascii_lowercase(), cur[k]))
                    .collect();
                let vars: HashMap<String, ConnId> = proc_
                    .variables
                    .iter()
                    .map(|v| {
                        let k = index[&format!("{}.{}", proc_.label, v.name).to_ascii_lowercase()];
                        (v.name.key(), cur[k])
                    })
                    .collect();
                let mut finals = HashMap::new();
                let mut ins = Vec::new();
                for &k in &targets[p] {
                    let local = names[k]
                        .rsplit('.')
                        .next()
                        .expect("nonempty")
                        .to_ascii_lowercase();
                    let c = b.connection(format!("{prefix}/{}:in", names[k]))?;
                    finals.insert(local, c);
                    ins.push((k, c));
                }
                let mut pc = BodyCompiler {
                    b: &mut b,
                    process: proc_,
                    granularity,
                    prefix: prefix.clone(),
                    instance: Some(instance),
                    signals: &signals,
                    vars,
                    pending: HashMap::new(),
                    finals,
                    fresh: 0,
                };
                pc.block(&proc_.body, true)?;

                let shell = b.component(
                    ComponentId::source(
                        SourceKind::ProcessShell,
                        proc_.anchor.line,
                        proc_.anchor.column,
                    )
                    .with_instance(instance),
                    ComponentKind::ProcessShell,
                    format!("process {}", proc_.label),
                );
                let act = if j == 0 && i == 0 {
                    init
                } else {
                    let act = b.connection(format!("{prefix}/act"))?;
                    let sens: Vec<ConnId> = proc_
                        .sensitivity
                        .iter()
                        .flatten()
                        .map(|s| cur_ev[index[&s.key()]])
                        .collect();
                    b.constrain(Some(shell), Constraint::gate(GateKind::Or, sens, act));
                    act
                };
                for (k, input) in ins {
                    let select = Expr::Mux(
                        Box::new(Expr::Input(0)),
                        Box::new(Expr::Input(1)),
                        Box::new(Expr::Input(2)),
                    );
                    b.constrain(
                        Some(shell),
                        Constraint::expr(select, vec![act, input, cur[k]], next[k])?,
                    );
                    if k < signal_count {
                        b.constrain(
                            Some(shell),
                            Constraint::gate(GateKind::Xor, vec![next[k], cur[k]], next_ev[k]),
                        );
                    }
                }
            }
            envs.push(next);
            events.push(next_ev);
        }
        for &c in &envs[n][..signal_count] {
            b.mark_external(c);
        }
        env.push(envs);
        event.push(events);
        overrides.push(ovr_j);
    }
    Ok(TemporalModel {
        model: b.finish()?,
        names,
        signal_count,
        cycles: n,
        index,
        initial: declared_initial_values(unit),
        env,
        event,
        overrides,
    })
}
