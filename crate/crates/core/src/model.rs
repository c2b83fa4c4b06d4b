//! Component-connection models.
//!
//! A [`ComponentModel`] is a bipartite structure of diagnosis components
//! (statements, expressions, gates, process shells) and connections (signals,
//! variable versions, nets). Each component owns one or more [`Constraint`]s
//! describing its correct behavior; when the component is assumed abnormal its
//! constraints are dropped. Structural constraints with no owner (`links`)
//! are always in force.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{Expr, GateKind, Table, Value, MAX_TABLE_VARS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConnId(pub u32);

impl ConnId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SourceKind {
    HdlStatement,
    HdlExpression,
    Gate,
    ProcessShell,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Location {
    Source { line: u32, column: u32 },
    Gate(String),
}

/// Temporal coordinate of a component instance: time point `time` and basic
/// simulation cycle `cycle` within that time point's simulation sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BscIndex {
    pub time: u32,
    pub cycle: u32,
}

/// Identity of a diagnosis component. Equality is structural, so two temporal
/// instances of one statement are distinct components.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ComponentId {
    pub source: SourceKind,
    pub location: Location,
    pub instance: Option<BscIndex>,
}

impl ComponentId {
    pub fn statement(line: u32, column: u32) -> Self {
        Self::source(SourceKind::HdlStatement, line, column)
    }

    pub fn source(source: SourceKind, line: u32, column: u32) -> Self {
        ComponentId {
            source,
            location: Location::Source { line, column },
            instance: None,
        }
    }

    pub fn gate(name: impl Into<String>) -> Self {
        ComponentId {
            source: SourceKind::Gate,
            location: Location::Gate(name.into()),
            instance: None,
        }
    }

    pub fn with_instance(mut self, at: BscIndex) -> Self {
        self.instance = Some(at);
        self
    }

    /// The source component this instance was unfolded from.
    pub fn base(&self) -> ComponentId {
        ComponentId {
            instance: None,
            ..self.clone()
        }
    }

    pub fn line(&self) -> Option<u32> {
        match self.location {
            Location::Source { line, .. } => Some(line),
            Location::Gate(_) => None,
        }
    }
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.source {
            SourceKind::HdlStatement => "stmt",
            SourceKind::HdlExpression => "expr",
            SourceKind::Gate => "gate",
            SourceKind::ProcessShell => "process",
        };
        match &self.location {
            Location::Source { line, column } => write!(f, "{tag}@{line}:{column}")?,
            Location::Gate(name) => write!(f, "{tag} {name}")?,
        }
        if let Some(at) = self.instance {
            write!(f, "[t{}.c{}]", at.time, at.cycle)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComponentKind {
    Gate(GateKind),
    Assignment,
    Condition,
    IfMux,
    ProcessShell,
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComponentKind::Gate(k) => write!(f, "{k}"),
            ComponentKind::Assignment => f.write_str("assign"),
            ComponentKind::Condition => f.write_str("cond"),
            ComponentKind::IfMux => f.write_str("if-mux"),
            ComponentKind::ProcessShell => f.write_str("process-shell"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Relation {
    Const(Value),
    Gate(GateKind),
    /// Arbitrary relation over the distinct connections in `vars`, derived
    /// from `output = expr(inputs)`.
    Table {
        expr: Expr,
        vars: Vec<ConnId>,
        table: Table,
    },
}

/// A single-output behavior relation `output = f(inputs)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    /// Owning component index, or `None` for structural links.
    pub owner: Option<usize>,
    pub inputs: Vec<ConnId>,
    pub output: ConnId,
    pub relation: Relation,
}

impl Constraint {
    /// A gate relation. Gates with repeated pins fall back to a table so the
    /// per-gate rules can assume distinct pins.
    pub fn gate(kind: GateKind, inputs: Vec<ConnId>, output: ConnId) -> Self {
        let mut pins: Vec<ConnId> = inputs
            .iter()
            .copied()
            .chain(std::iter::once(output))
            .collect();
        pins.sort();
        pins.dedup();
        if pins.len() != inputs.len() + 1 {
            let expr = Expr::Gate(kind, (0..inputs.len()).map(Expr::Input).collect());
            return Constraint::expr(expr, inputs, output).expect("gate arity within table limit");
        }
        Constraint {
            owner: None,
            inputs,
            output,
            relation: Relation::Gate(kind),
        }
    }

    pub fn constant(value: Value, output: ConnId) -> Self {
        Constraint {
            owner: None,
            inputs: Vec::new(),
            output,
            relation: Relation::Const(value),
        }
    }

    /// `output = expr(inputs)`; `Expr::Input(k)` refers to `inputs[k]`.
    pub fn expr(expr: Expr, inputs: Vec<ConnId>, output: ConnId) -> Result<Self, ModelError> {
        let mut vars: Vec<ConnId> = Vec::new();
        let var_of = |c: ConnId, vars: &mut Vec<ConnId>| match vars.iter().position(|&v| v == c) {
            Some(i) => i,
            None => {
                vars.push(c);
                vars.len() - 1
            }
        };
        let input_vars: Vec<usize> = inputs.iter().map(|&c| var_of(c, &mut vars)).collect();
        let out_var = var_of(output, &mut vars);
        if vars.len() > MAX_TABLE_VARS {
            return Err(ModelError::RelationTooWide(vars.len()));
        }
        let table = Table::functional(&expr, &input_vars, out_var, vars.len());
        Ok(Constraint {
            owner: None,
            inputs,
            output,
            relation: Relation::Table { expr, vars, table },
        })
    }

    pub fn owned_by(mut self, owner: usize) -> Self {
        self.owner = Some(owner);
        self
    }

    /// Every connection the constraint mentions, output last.
    pub fn pins(&self) -> impl Iterator<Item = ConnId> + '_ {
        self.inputs
            .iter()
            .copied()
            .chain(std::iter::once(self.output))
    }

    pub fn holds(&self, value_of: impl Fn(ConnId) -> bool) -> bool {
        let ins: Vec<bool> = self.inputs.iter().map(|&c| value_of(c)).collect();
        let out = value_of(self.output);
        match &self.relation {
            Relation::Const(v) => out == v.as_bool(),
            Relation::Gate(k) => k.eval(&ins) == out,
            Relation::Table { expr, .. } => expr.eval(&ins) == out,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub id: ComponentId,
    pub kind: ComponentKind,
    /// Human-readable text: the statement source or the gate's netlist line.
    pub label: String,
    pub constraints: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown signal or connection `{0}`")]
    UnknownSignal(String),
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("duplicate connection name `{0}`")]
    DuplicateConnection(String),
    #[error("duplicate component id {0}")]
    DuplicateComponent(String),
    #[error("connection `{0}` has more than one driver")]
    MultipleDrivers(String),
    #[error("model is still cyclic through: {}", .0.join(" -> "))]
    StillCyclic(Vec<String>),
    #[error("`{0}` is not an observable connection")]
    NotExternal(String),
    #[error("conflicting observations for `{0}`")]
    ConflictingObservation(String),
    #[error("relation over {0} distinct connections is too wide")]
    RelationTooWide(usize),
    #[error("netlist carries a stuck-at overlay and cannot be modelled")]
    FaultOverlay,
    #[error("stimulus has {stimulus} time points but the model has {model}")]
    TimePointMismatch { stimulus: usize, model: usize },
}

/// Incrementally assembles a [`ComponentModel`].
#[derive(Debug, Default, Clone)]
pub struct ModelBuilder {
    name: String,
    connections: Vec<String>,
    conn_index: HashMap<String, ConnId>,
    externals: Vec<bool>,
    components: Vec<Component>,
    constraints: Vec<Constraint>,
}

impl ModelBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        ModelBuilder {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn connection(&mut self, name: impl Into<String>) -> Result<ConnId, ModelError> {
        let name = name.into();
        if self.conn_index.contains_key(&name) {
            return Err(ModelError::DuplicateConnection(name));
        }
        let id = ConnId(self.connections.len() as u32);
        self.conn_index.insert(name.clone(), id);
        self.connections.push(name);
        self.externals.push(false);
        Ok(id)
    }

    /// Returns the named connection, creating it if needed.
    pub fn connection_or_existing(&mut self, name: &str) -> ConnId {
        match self.conn_index.get(name) {
            Some(&c) => c,
            None => self.connection(name).expect("fresh name"),
        }
    }

    pub fn lookup(&self, name: &str) -> Option<ConnId> {
        self.conn_index.get(name).copied()
    }

    pub fn connection_name(&self, c: ConnId) -> &str {
        &self.connections[c.index()]
    }

    pub fn mark_external(&mut self, c: ConnId) {
        self.externals[c.index()] = true;
    }

    pub fn component(
        &mut self,
        id: ComponentId,
        kind: ComponentKind,
        label: impl Into<String>,
    ) -> usize {
        self.components.push(Component {
            id,
            kind,
            label: label.into(),
            constraints: Vec::new(),
        });
        self.components.len() - 1
    }

    /// Adds a behavior constraint owned by `owner`, or a structural link.
    pub fn constrain(&mut self, owner: Option<usize>, mut c: Constraint) {
        c.owner = owner;
        let idx = self.constraints.len();
        if let Some(o) = owner {
            self.components[o].constraints.push(idx);
        }
        self.constraints.push(c);
    }

    /// Rewrites every reference to `from` into `to`. `from` is left dangling.
    pub fn replace_connection(&mut self, from: ConnId, to: ConnId) -> Result<(), ModelError> {
        for c in &mut self.constraints {
            for pin in c.inputs.iter_mut() {
                if *pin == from {
                    *pin = to;
                }
            }
            if c.output == from {
                c.output = to;
            }
            if let Relation::Table { expr, .. } = &c.relation {
                let rebuilt = Constraint::expr(expr.clone(), c.inputs.clone(), c.output)?;
                c.relation = rebuilt.relation;
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Result<ComponentModel, ModelError> {
        ComponentModel::assemble(
            self.name,
            self.connections,
            self.externals,
            self.components,
            self.constraints,
        )
    }
}

/// An immutable component-connection model ready for propagation.
#[derive(Debug, Clone)]
pub struct ComponentModel {
    name: String,
    connections: Vec<String>,
    conn_index: HashMap<String, ConnId>,
    externals: Vec<bool>,
    components: Vec<Component>,
    constraints: Vec<Constraint>,
    component_index: HashMap<ComponentId, usize>,
    watchers: Vec<Vec<u32>>,
    drivers: Vec<Option<u32>>,
}

impl ComponentModel {
    fn assemble(
        name: String,
        connections: Vec<String>,
        externals: Vec<bool>,
        components: Vec<Component>,
        constraints: Vec<Constraint>,
    ) -> Result<Self, ModelError> {
        let conn_index = connections
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), ConnId(i as u32)))
            .collect();
        let mut component_index = HashMap::with_capacity(components.len());
        for (i, comp) in components.iter().enumerate() {
            if component_index.insert(comp.id.clone(), i).is_some() {
                return Err(ModelError::DuplicateComponent(comp.id.to_string()));
            }
        }
        let mut watchers = vec![Vec::new(); connections.len()];
        let mut drivers = vec![None; connections.len()];
        for (ci, c) in constraints.iter().enumerate() {
            for pin in c.pins() {
                let w = &mut watchers[pin.index()];
                if w.last() != Some(&(ci as u32)) {
                    w.push(ci as u32);
                }
            }
            let slot = &mut drivers[c.output.index()];
            if slot.is_some() {
                return Err(ModelError::MultipleDrivers(
                    connections[c.output.index()].clone(),
                ));
            }
            *slot = Some(ci as u32);
        }
        Ok(ComponentModel {
            name,
            connections,
            conn_index,
            externals,
            components,
            constraints,
            component_index,
            watchers,
            drivers,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn connection_count(&self) -> usize {
        self.connections.len()
    }

    pub fn connection_name(&self, c: ConnId) -> &str {
        &self.connections[c.index()]
    }

    pub fn connections(&self) -> impl Iterator<Item = (ConnId, &str)> {
        self.connections
            .iter()
            .enumerate()
            .map(|(i, n)| (ConnId(i as u32), n.as_str()))
    }

    pub fn lookup(&self, name: &str) -> Option<ConnId> {
        self.conn_index.get(name).copied()
    }

    /// Resolves a user-facing name; a cut state signal `s` resolves to
    /// `s_current`.
    pub fn resolve(&self, name: &str) -> Result<ConnId, ModelError> {
        self.lookup(name)
            .or_else(|| self.lookup(&format!("{name}_current")))
            .ok_or_else(|| ModelError::UnknownSignal(name.to_string()))
    }

    pub fn is_external(&self, c: ConnId) -> bool {
        self.externals[c.index()]
    }

    pub fn externals(&self) -> impl Iterator<Item = ConnId> + '_ {
        self.externals
            .iter()
            .enumerate()
            .filter(|(_, &e)| e)
            .map(|(i, _)| ConnId(i as u32))
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn component(&self, idx: usize) -> &Component {
        &self.components[idx]
    }

    pub fn component_index(&self, id: &ComponentId) -> Option<usize> {
        self.component_index.get(id).copied()
    }

    pub fn component_ids(&self) -> impl Iterator<Item = &ComponentId> {
        self.components.iter().map(|c| &c.id)
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Constraints mentioning `c`, in model order.
    pub fn watchers(&self, c: ConnId) -> &[u32] {
        &self.watchers[c.index()]
    }

    pub fn driver(&self, c: ConnId) -> Option<&Constraint> {
        self.drivers[c.index()].map(|i| &self.constraints[i as usize])
    }

    /// Structural links (constraints with no owning component).
    pub fn links(&self) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter().filter(|c| c.owner.is_none())
    }

    /// Splits each state signal `s` into `s_current` (read side) and `s_next`
    /// (driven side), breaking feedback through registers.
    pub fn cut_state<S: AsRef<str>>(
        &self,
        state_signals: &[S],
    ) -> Result<ComponentModel, ModelError> {
        let mut connections = self.connections.clone();
        let mut externals = self.externals.clone();
        let mut constraints = self.constraints.clone();
        let components = self.components.clone();
        for s in state_signals {
            let s = s.as_ref();
            let cur = self
                .lookup(s)
                .ok_or_else(|| ModelError::UnknownSignal(s.to_string()))?;
            let next = ConnId(connections.len() as u32);
            connections[cur.index()] = format!("{s}_current");
            connections.push(format!("{s}_next"));
            externals[cur.index()] = true;
            externals.push(true);
            for c in constraints.iter_mut().filter(|c| c.output == cur) {
                c.output = next;
                if let Relation::Table { expr, .. } = &c.relation {
                    c.relation = Constraint::expr(expr.clone(), c.inputs.clone(), next)?.relation;
                }
            }
        }
        let model = ComponentModel::assemble(
            self.name.clone(),
            connections,
            externals,
            components,
            constraints,
        )?;
        if let Some(cycle) = model.find_cycle() {
            return Err(ModelError::StillCyclic(
                cycle
                    .iter()
                    .map(|&c| model.connection_name(c).to_string())
                    .collect(),
            ));
        }
        Ok(model)
    }

    /// A directed cycle through the input -> output dependencies of the
    /// constraints, if any.
    pub fn find_cycle(&self) -> Option<Vec<ConnId>> {
        let n = self.connections.len();
        let mut succ: Vec<Vec<ConnId>> = vec![Vec::new(); n];
        for c in &self.constraints {
            for &i in &c.inputs {
                succ[i.index()].push(c.output);
            }
        }
        // iterative DFS with colors: 0 white, 1 on stack, 2 done
        let mut color = vec![0u8; n];
        let mut parent = vec![usize::MAX; n];
        for start in 0..n {
            if color[start] != 0 {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            color[start] = 1;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if let Some(&w) = succ[v].get(*next) {
                    *next += 1;
                    let w = w.index();
                    match color[w] {
                        0 => {
                            color[w] = 1;
                            parent[w] = v;
                            stack.push((w, 0));
                        }
                        1 => {
                            let mut cycle = vec![ConnId(w as u32)];
                            let mut u = v;
                            while u != w {
                                cycle.push(ConnId(u as u32));
                                u = parent[u];
                            }
                            cycle.push(ConnId(w as u32));
                            cycle.reverse();
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    color[v] = 2;
                    stack.pop();
                }
            }
        }
        None
    }

    /// Text listing of connections and components, for golden-file tests.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let name = |c: &ConnId| self.connection_name(*c).to_string();
        let _ = writeln!(out, "model {}", self.name);
        let _ = writeln!(out, "connections {}", self.connections.len());
        for (i, n) in self.connections.iter().enumerate() {
            let ext = if self.externals[i] { " ext" } else { "" };
            let _ = writeln!(out, "  c{i} {n}{ext}");
        }
        let _ = writeln!(out, "components {}", self.components.len());
        for (i, comp) in self.components.iter().enumerate() {
            let _ = writeln!(out, "  [{i}] {} {} \"{}\"", comp.id, comp.kind, comp.label);
            for &ci in &comp.constraints {
                let _ = writeln!(out, "      {}", self.describe(&self.constraints[ci], &name));
            }
        }
        let links: Vec<&Constraint> = self.links().collect();
        let _ = writeln!(out, "links {}", links.len());
        for c in links {
            let _ = writeln!(out, "      {}", self.describe(c, &name));
        }
        out
    }

    fn describe(&self, c: &Constraint, name: &impl Fn(&ConnId) -> String) -> String {
        let ins: Vec<String> = c.inputs.iter().map(name).collect();
        let rel = match &c.relation {
            Relation::Const(v) => format!("const {v}"),
            Relation::Gate(k) => k.to_string(),
            Relation::Table { .. } => "fn".to_string(),
        };
        format!("{} = {rel}({})", name(&c.output), ins.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ObsRole {
    Input,
    State,
    Expected,
}

/// Value bindings on observable connections.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObservationSet {
    bindings: BTreeMap<ConnId, (Value, ObsRole)>,
}

impl ObservationSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Binds a named connection, resolving cut state names.
    pub fn bind(
        &mut self,
        model: &ComponentModel,
        name: &str,
        value: Value,
        role: ObsRole,
    ) -> Result<ConnId, ModelError> {
        let c = model.resolve(name)?;
        if !model.is_external(c) {
            return Err(ModelError::NotExternal(name.to_string()));
        }
        self.insert(c, value, role)
            .map_err(|_| ModelError::ConflictingObservation(name.to_string()))?;
        Ok(c)
    }

    /// Adds a binding; rebinding to a different value is an error.
    pub fn insert(&mut self, c: ConnId, value: Value, role: ObsRole) -> Result<(), ConnId> {
        match self.bindings.get(&c) {
            Some((v, _)) if *v != value => Err(c),
            _ => {
                self.bindings.insert(c, (value, role));
                Ok(())
            }
        }
    }

    pub fn get(&self, c: ConnId) -> Option<Value> {
        self.bindings.get(&c).map(|(v, _)| *v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ConnId, Value, ObsRole)> + '_ {
        self.bindings.iter().map(|(&c, &(v, r))| (c, v, r))
    }

    pub fn with_role(&self, role: ObsRole) -> impl Iterator<Item = (ConnId, Value)> + '_ {
        self.iter()
            .filter(move |e| e.2 == role)
            .map(|(c, v, _)| (c, v))
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Named view, for reports.
    pub fn named(&self, model: &ComponentModel) -> Vec<(String, Value, ObsRole)> {
        self.iter()
            .map(|(c, v, r)| (model.connection_name(c).to_string(), v, r))
            .collect()
    }
}
