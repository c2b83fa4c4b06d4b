//! Value propagation with justifications.
//!
//! Every connection carries at most one value together with the rule that
//! produced it (the constraint and the antecedent connections it read).
//! Assumption sets are not tracked eagerly; when two derivations disagree the
//! justification graph is walked back to the observations and the owners of
//! all visited constraints form the conflict.
//!
//! Local propagation alone is incomplete: reconvergent fanout can hide a
//! contradiction that no single constraint sees. [`decide`] closes the gap by
//! case splitting on unknown connections at the frontier of the active
//! model, joining the conflicts of both branches when neither is consistent.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::logic::{GateKind, Value};
use crate::model::{ComponentModel, ConnId, Constraint, ObservationSet, Relation};

pub const DEFAULT_RULE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropConfig {
    /// Maximum number of constraint firings per propagation.
    pub budget: u64,
    /// Permutes the work order; results must not depend on it.
    pub shuffle: Option<u64>,
}

impl Default for PropConfig {
    fn default() -> Self {
        PropConfig {
            budget: DEFAULT_RULE_BUDGET,
            shuffle: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PropError {
    #[error("propagation exceeded its budget of {0} rule applications")]
    BudgetExceeded(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Justification {
    Observed,
    /// A case-split decision inside [`decide`].
    Decision,
    Derived {
        constraint: u32,
        antecedents: Vec<ConnId>,
    },
}

#[derive(Debug, Clone)]
struct Cell {
    value: bool,
    depth: u32,
    why: Justification,
}

/// The result of a propagation that found no contradiction.
#[derive(Debug, Clone)]
pub struct Fixpoint<'m> {
    model: &'m ComponentModel,
    cells: Vec<Option<Cell>>,
    applications: u64,
}

impl<'m> Fixpoint<'m> {
    pub fn value(&self, c: ConnId) -> Option<Value> {
        self.cells[c.index()]
            .as_ref()
            .map(|cell| Value::from(cell.value))
    }

    pub fn justification(&self, c: ConnId) -> Option<&Justification> {
        self.cells[c.index()].as_ref().map(|cell| &cell.why)
    }

    /// Components whose correctness the value of `c` depends on.
    pub fn assumptions(&self, c: ConnId) -> BTreeSet<usize> {
        assumptions(self.model, &self.cells, [c])
    }

    pub fn applications(&self) -> u64 {
        self.applications
    }

    pub fn known(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }
}

#[derive(Debug, Clone)]
pub enum Outcome<'m> {
    Consistent(Fixpoint<'m>),
    /// Component indices that cannot all be correct.
    Conflict(Vec<usize>),
}

impl Outcome<'_> {
    pub fn conflict(&self) -> Option<&[usize]> {
        match self {
            Outcome::Conflict(c) => Some(c),
            Outcome::Consistent(_) => None,
        }
    }
}

/// Propagates `obs` through `model` with the components in `abnormal`
/// switched off.
pub fn propagate<'m>(
    model: &'m ComponentModel,
    obs: &ObservationSet,
    abnormal: &[usize],
    config: &PropConfig,
) -> Result<Outcome<'m>, PropError> {
    let mut engine = Engine::new(model, abnormal, config);
    let mut seeds: Vec<(ConnId, Value)> = obs.iter().map(|(c, v, _)| (c, v)).collect();
    if let Some(rng) = engine.rng.as_mut() {
        seeds.shuffle(rng);
    }
    for (c, v) in seeds {
        engine.cells[c.index()] = Some(Cell {
            value: v.as_bool(),
            depth: 0,
            why: Justification::Observed,
        });
    }
    let mut initial: Vec<u32> = (0..model.constraints().len() as u32)
        .filter(|&ci| engine.active[ci as usize])
        .collect();
    if let Some(rng) = engine.rng.as_mut() {
        initial.shuffle(rng);
    }
    for ci in initial {
        engine.enqueue(ci);
    }
    match engine.run()? {
        Some(conflict) => Ok(Outcome::Conflict(conflict.into_iter().collect())),
        None => Ok(Outcome::Consistent(Fixpoint {
            model,
            cells: engine.cells,
            applications: engine.applications,
        })),
    }
}

/// Complete consistency check. Like [`propagate`], but unknown connections
/// are split on until every branch either contradicts or leaves no relevant
/// connection unknown. The fixpoint returned on success holds only the
/// values entailed without splitting. The budget covers all branches.
pub fn decide<'m>(
    model: &'m ComponentModel,
    obs: &ObservationSet,
    abnormal: &[usize],
    config: &PropConfig,
) -> Result<Outcome<'m>, PropError> {
    let mut engine = Engine::new(model, abnormal, config);
    for (c, v, _) in obs.iter() {
        engine.cells[c.index()] = Some(Cell {
            value: v.as_bool(),
            depth: 0,
            why: Justification::Observed,
        });
    }
    for ci in 0..model.constraints().len() as u32 {
        engine.enqueue(ci);
    }
    if let Some(conflict) = engine.run()? {
        return Ok(Outcome::Conflict(conflict.into_iter().collect()));
    }
    let entailed = engine.cells.clone();
    let relevant = engine.relevant();
    match engine.split(&relevant)? {
        Some((conflict, _)) => Ok(Outcome::Conflict(conflict.into_iter().collect())),
        None => Ok(Outcome::Consistent(Fixpoint {
            model,
            cells: entailed,
            applications: engine.applications,
        })),
    }
}

enum Fired {
    Derive(Vec<(ConnId, bool, Vec<ConnId>)>),
    /// The listed pins' current values violate the constraint.
    Inconsistent(Vec<ConnId>),
}

struct Engine<'m> {
    model: &'m ComponentModel,
    /// Abnormal components.
    off: Vec<bool>,
    active: Vec<bool>,
    cells: Vec<Option<Cell>>,
    queue: VecDeque<u32>,
    queued: Vec<bool>,
    applications: u64,
    budget: u64,
    rng: Option<ChaCha8Rng>,
}

impl<'m> Engine<'m> {
    fn new(model: &'m ComponentModel, abnormal: &[usize], config: &PropConfig) -> Self {
        let mut off = vec![false; model.components().len()];
        for &a in abnormal {
            off[a] = true;
        }
        let active = model
            .constraints()
            .iter()
            .map(|c: &Constraint| c.owner.is_none_or(|o| !off[o]))
            .collect();
        Engine {
            model,
            off,
            active,
            cells: vec![None; model.connection_count()],
            queue: VecDeque::new(),
            queued: vec![false; model.constraints().len()],
            applications: 0,
            budget: config.budget,
            rng: config.shuffle.map(ChaCha8Rng::seed_from_u64),
        }
    }

    fn enqueue(&mut self, ci: u32) {
        if self.active[ci as usize] && !self.queued[ci as usize] {
            self.queued[ci as usize] = true;
            self.queue.push_back(ci);
        }
    }

    fn run(&mut self) -> Result<Option<BTreeSet<usize>>, PropError> {
        Ok(self.run_traced()?.map(|(owners, _)| owners))
    }

    /// Like `run`, also reporting the decisions a conflict depends on.
    fn run_traced(&mut self) -> Result<Option<Traced>, PropError> {
        while let Some(ci) = self.queue.pop_front() {
            self.queued[ci as usize] = false;
            self.applications += 1;
            if self.applications > self.budget {
                return Err(PropError::BudgetExceeded(self.budget));
            }
            let constraint = &self.model.constraints()[ci as usize];
            match self.fire(constraint) {
                Fired::Inconsistent(pins) => {
                    let (mut owners, decisions) = trace(self.model, &self.cells, pins);
                    owners.extend(constraint.owner);
                    return Ok(Some((owners, decisions)));
                }
                Fired::Derive(derived) => {
                    for (c, v, ants) in derived {
                        if let Some(conflict) = self.assign(ci, c, v, ants) {
                            return Ok(Some(conflict));
                        }
                    }
                }
            }
        }
        Ok(None)
    }

    fn assign(&mut self, ci: u32, c: ConnId, v: bool, ants: Vec<ConnId>) -> Option<Traced> {
        if let Some(cell) = &self.cells[c.index()] {
            if cell.value == v {
                return None;
            }
            let (mut owners, decisions) =
                trace(self.model, &self.cells, ants.iter().copied().chain([c]));
            owners.extend(self.model.constraints()[ci as usize].owner);
            return Some((owners, decisions));
        }
        let depth = 1 + ants
            .iter()
            .map(|a| self.cells[a.index()].as_ref().map_or(0, |x| x.depth))
            .max()
            .unwrap_or(0);
        self.cells[c.index()] = Some(Cell {
            value: v,
            depth,
            why: Justification::Derived {
                constraint: ci,
                antecedents: ants,
            },
        });
        let mut watchers = self.model.watchers(c).to_vec();
        if let Some(rng) = self.rng.as_mut() {
            watchers.shuffle(rng);
        }
        for w in watchers {
            self.enqueue(w);
        }
        None
    }

    /// Connections that are pins of an active constraint.
    fn relevant(&self) -> Vec<bool> {
        let mut out = vec![false; self.cells.len()];
        for (ci, c) in self.model.constraints().iter().enumerate() {
            if self.active[ci] {
                for p in c.pins() {
                    out[p.index()] = true;
                }
            }
        }
        out
    }

    /// An unknown relevant connection, preferring ones without an active
    /// driver so that propagation can fill in the rest.
    fn pick(&self, relevant: &[bool]) -> Option<ConnId> {
        let unknown = (0..self.cells.len())
            .filter(|&i| relevant[i] && self.cells[i].is_none())
            .map(|i| ConnId(i as u32));
        let mut fallback = None;
        for c in unknown {
            let driven = self
                .model
                .driver(c)
                .is_some_and(|d| d.owner.is_none_or(|o| !self.off[o]));
            if !driven {
                return Some(c);
            }
            fallback.get_or_insert(c);
        }
        fallback
    }

    /// Depth-first case split. A branch conflict that does not depend on the
    /// current decision is returned as is, skipping the other branch.
    fn split(&mut self, relevant: &[bool]) -> Result<Option<Traced>, PropError> {
        let Some(c) = self.pick(relevant) else {
            return Ok(None);
        };
        let snapshot = self.cells.clone();
        let mut joined: Traced = Default::default();
        for v in [false, true] {
            self.cells.clone_from(&snapshot);
            self.cells[c.index()] = Some(Cell {
                value: v,
                depth: 0,
                why: Justification::Decision,
            });
            for &w in self.model.watchers(c) {
                self.enqueue(w);
            }
            let branch = match self.run_traced()? {
                Some(conflict) => Some(conflict),
                None => self.split(relevant)?,
            };
            self.drain();
            match branch {
                None => return Ok(None),
                Some((owners, mut decisions)) => {
                    if !decisions.remove(&c) {
                        self.cells = snapshot;
                        return Ok(Some((owners, decisions)));
                    }
                    joined.0.extend(owners);
                    joined.1.extend(decisions);
                }
            }
        }
        self.cells = snapshot;
        Ok(Some(joined))
    }

    fn drain(&mut self) {
        for ci in self.queue.drain(..) {
            self.queued[ci as usize] = false;
        }
    }

    fn val(&self, c: ConnId) -> Option<bool> {
        self.cells[c.index()].as_ref().map(|x| x.value)
    }

    fn depth(&self, c: ConnId) -> u32 {
        self.cells[c.index()].as_ref().map_or(u32::MAX, |x| x.depth)
    }

    fn fire(&self, c: &Constraint) -> Fired {
        match &c.relation {
            Relation::Const(v) => Fired::Derive(vec![(c.output, v.as_bool(), Vec::new())]),
            Relation::Gate(kind) => self.gate_rules(*kind, &c.inputs, c.output),
            Relation::Table { vars, table, .. } => self.table_rules(vars, table),
        }
    }

    fn gate_rules(&self, kind: GateKind, inputs: &[ConnId], out: ConnId) -> Fired {
        let mut derived = Vec::new();
        let inv = kind.is_inverting();
        match kind {
            GateKind::Not | GateKind::Buff => {
                let a = inputs[0];
                if let Some(v) = self.val(a) {
                    derived.push((out, v ^ inv, vec![a]));
                }
                if let Some(v) = self.val(out) {
                    derived.push((a, v ^ inv, vec![out]));
                }
            }
            GateKind::Xor | GateKind::Xnor => {
                // parity over all pins equals `inv`
                let pins: Vec<ConnId> = inputs.iter().copied().chain([out]).collect();
                let unknown: Vec<ConnId> = pins
                    .iter()
                    .copied()
                    .filter(|&p| self.val(p).is_none())
                    .collect();
                let parity = pins
                    .iter()
                    .filter_map(|&p| self.val(p))
                    .fold(false, |a, b| a ^ b);
                match unknown.as_slice() {
                    [] if parity != inv => return Fired::Inconsistent(pins),
                    [last] => {
                        let ants = pins.iter().copied().filter(|p| p != last).collect();
                        derived.push((*last, parity ^ inv, ants));
                    }
                    _ => {}
                }
            }
            _ => {
                let ctrl = kind.controlling_value().expect("and/or family");
                let ctrl_out = ctrl ^ inv;
                let controlling = inputs
                    .iter()
                    .copied()
                    .filter(|&i| self.val(i) == Some(ctrl))
                    .min_by_key(|&i| self.depth(i));
                let unknown: Vec<ConnId> = inputs
                    .iter()
                    .copied()
                    .filter(|&i| self.val(i).is_none())
                    .collect();
                if let Some(i) = controlling {
                    derived.push((out, ctrl_out, vec![i]));
                } else if unknown.is_empty() {
                    derived.push((out, !ctrl_out, inputs.to_vec()));
                }
                match self.val(out) {
                    Some(o) if o != ctrl_out => {
                        for &i in &unknown {
                            derived.push((i, !ctrl, vec![out]));
                        }
                    }
                    Some(_) if controlling.is_none() && unknown.len() == 1 => {
                        let last = unknown[0];
                        let ants = inputs
                            .iter()
                            .copied()
                            .filter(|&i| i != last)
                            .chain([out])
                            .collect();
                        derived.push((last, ctrl, ants));
                    }
                    _ => {}
                }
            }
        }
        Fired::Derive(derived)
    }

    fn table_rules(&self, vars: &[ConnId], table: &crate::logic::Table) -> Fired {
        let mut mask = 0u32;
        let mut bits = 0u32;
        for (k, &c) in vars.iter().enumerate() {
            if let Some(v) = self.val(c) {
                mask |= 1 << k;
                bits |= (v as u32) << k;
            }
        }
        let Some(sup) = table.supports(mask, bits) else {
            // greedy deletion down to a minimal inconsistent subset
            let mut keep = mask;
            for k in 0..vars.len() {
                let trial = keep & !(1 << k);
                if keep >> k & 1 == 1 && table.supports(trial, bits).is_none() {
                    keep = trial;
                }
            }
            return Fired::Inconsistent(select(vars, keep));
        };
        let mut derived = Vec::new();
        for (k, &c) in vars.iter().enumerate() {
            if mask >> k & 1 == 1 || sup[k] == 0b11 {
                continue;
            }
            let value = sup[k] == 0b10;
            let forced = |m: u32| table.supports(m, bits).is_none_or(|s| s[k] != 0b11);
            let mut keep = mask;
            for u in 0..vars.len() {
                let trial = keep & !(1 << u);
                if keep >> u & 1 == 1 && forced(trial) {
                    keep = trial;
                }
            }
            derived.push((c, value, select(vars, keep)));
        }
        Fired::Derive(derived)
    }
}

fn select(vars: &[ConnId], mask: u32) -> Vec<ConnId> {
    vars.iter()
        .enumerate()
        .filter(|(k, _)| mask >> k & 1 == 1)
        .map(|(_, &c)| c)
        .collect()
}

/// Component owners and case-split decisions behind a conflict.
type Traced = (BTreeSet<usize>, BTreeSet<ConnId>);

/// Owners of every constraint reachable backwards from `roots` through
/// justifications.
fn assumptions(
    model: &ComponentModel,
    cells: &[Option<Cell>],
    roots: impl IntoIterator<Item = ConnId>,
) -> BTreeSet<usize> {
    trace(model, cells, roots).0
}

fn trace(
    model: &ComponentModel,
    cells: &[Option<Cell>],
    roots: impl IntoIterator<Item = ConnId>,
) -> Traced {
    let mut owners = BTreeSet::new();
    let mut decisions = BTreeSet::new();
    let mut seen = vec![false; cells.len()];
    let mut stack: Vec<ConnId> = roots.into_iter().collect();
    while let Some(c) = stack.pop() {
        if std::mem::replace(&mut seen[c.index()], true) {
            continue;
        }
        match &cells[c.index()] {
            Some(Cell {
                why:
                    Justification::Derived {
                        constraint,
                        antecedents,
                    },
                ..
            }) => {
                owners.extend(model.constraints()[*constraint as usize].owner);
                stack.extend(antecedents.iter().copied());
            }
            Some(Cell {
                why: Justification::Decision,
                ..
            }) => {
                decisions.insert(c);
            }
            _ => {}
        }
    }
    (owners, decisions)
}
