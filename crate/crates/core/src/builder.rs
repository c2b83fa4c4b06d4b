//! Compiles designs and netlists into component-connection models.
//!
//! HDL processes are compiled statement by statement. Variables are versioned
//! (`proc/I1#1` is the value after the first assignment to `I1`); a signal
//! assignment produces a pending value that is invisible to later reads in
//! the same process, and the last pending value drives the signal itself.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::hdl::{self, unparse, Anchor, DesignUnit, Ident, Process, Statement, StmtKind};
use crate::logic::{Expr, GateKind};
use crate::model::{
    BscIndex, ComponentId, ComponentKind, ComponentModel, ConnId, Constraint, ModelBuilder,
    ModelError, SourceKind,
};
use crate::netlist::Netlist;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Granularity {
    /// One component per statement (plus one condition component per `if`).
    #[default]
    Statement,
    /// One component per operator application.
    Expression,
}

/// The single-instant model of a design: every process body is active and
/// signals have one connection each. Registers form cycles until
/// [`ComponentModel::cut_state`] is applied.
pub fn build_model(
    unit: &DesignUnit,
    granularity: Granularity,
) -> Result<ComponentModel, ModelError> {
    let mut b = ModelBuilder::new(unit.entity.to_string());
    let mut signals = HashMap::new();
    for name in unit.all_signals() {
        let c = b.connection(name.to_string())?;
        signals.insert(name.key(), c);
    }
    for p in &unit.ports {
        b.mark_external(signals[&p.name.key()]);
    }
    for p in &unit.processes {
        let finals: HashMap<String, ConnId> = p
            .driven_signals()
            .into_iter()
            .map(|s| (s.key(), signals[&s.key()]))
            .collect();
        let mut vars = HashMap::new();
        for v in &p.variables {
            let c = b.connection(format!("{}/{}#0", p.label, v.name))?;
            b.mark_external(c);
            vars.insert(v.name.key(), c);
        }
        let mut pc = BodyCompiler {
            b: &mut b,
            process: p,
            granularity,
            prefix: p.label.to_string(),
            instance: None,
            signals: &signals,
            vars,
            pending: HashMap::new(),
            finals,
            fresh: 0,
        };
        pc.block(&p.body, true)?;
    }
    b.finish()
}

/// One component per gate, one connection per net. Connection ids equal net
/// indices.
pub fn build_model_from_netlist(n: &Netlist) -> Result<ComponentModel, ModelError> {
    if !n.stuck_at().is_empty() {
        return Err(ModelError::FaultOverlay);
    }
    let mut b = ModelBuilder::new(n.name.clone());
    for i in 0..n.net_count() {
        b.connection(n.net_name(i))?;
    }
    for &i in n.inputs.iter().chain(&n.outputs) {
        b.mark_external(ConnId(i as u32));
    }
    for g in &n.gates {
        let comp = b.component(
            ComponentId::gate(n.net_name(g.output)),
            ComponentKind::Gate(g.kind),
            n.gate_text(g),
        );
        let inputs = g.inputs.iter().map(|&i| ConnId(i as u32)).collect();
        b.constrain(
            Some(comp),
            Constraint::gate(g.kind, inputs, ConnId(g.output as u32)),
        );
    }
    b.finish()
}

/// Compiles one process body into components. Shared by the single-instant
/// and the temporal models.
pub(crate) struct BodyCompiler<'a> {
    pub b: &'a mut ModelBuilder,
    pub process: &'a Process,
    pub granularity: Granularity,
    /// Prefix for fresh connection names.
    pub prefix: String,
    pub instance: Option<BscIndex>,
    /// Pre-process signal values, keyed by lowercase name.
    pub signals: &'a HashMap<String, ConnId>,
    /// Current version of each variable.
    pub vars: HashMap<String, ConnId>,
    /// Pending values of signals assigned so far.
    pub pending: HashMap<String, ConnId>,
    /// Connections the final write of each target must drive.
    pub finals: HashMap<String, ConnId>,
    pub fresh: usize,
}

impl BodyCompiler<'_> {
    fn id(&self, source: SourceKind, at: Anchor) -> ComponentId {
        let id = ComponentId::source(source, at.line, at.column);
        match self.instance {
            Some(i) => id.with_instance(i),
            None => id,
        }
    }

    fn fresh_conn(&mut self, what: &str) -> Result<ConnId, ModelError> {
        self.fresh += 1;
        let name = format!("{}/{}{}", self.prefix, what, self.fresh);
        self.b.connection(name)
    }

    fn read(&self, name: &Ident) -> ConnId {
        let key = name.key();
        match self.vars.get(&key) {
            Some(&c) => c,
            None => *self
                .signals
                .get(&key)
                .unwrap_or_else(|| panic!("unchecked design reads undeclared `{name}`")),
        }
    }

    /// Value of a target as seen at this point of the body.
    fn current(&self, name: &Ident) -> ConnId {
        let key = name.key();
        self.vars
            .get(&key)
            .or_else(|| self.pending.get(&key))
            .copied()
            .unwrap_or_else(|| self.signals[&key])
    }

    fn is_variable(&self, name: &Ident) -> bool {
        self.process.variable(name).is_some()
    }

    fn set(&mut self, name: &Ident, c: ConnId) {
        if self.is_variable(name) {
            self.vars.insert(name.key(), c);
        } else {
            self.pending.insert(name.key(), c);
        }
    }

    /// Output connection for the write of `target` at statement `i` of
    /// `block`.
    fn output_for(
        &mut self,
        target: &Ident,
        block: &[Statement],
        i: usize,
        top: bool,
    ) -> Result<ConnId, ModelError> {
        let written_later = block[i + 1..].iter().any(|s| s.targets().contains(&target));
        if top && !written_later {
            if let Some(&c) = self.finals.get(&target.key()) {
                return Ok(c);
            }
        }
        if self.is_variable(target) {
            self.fresh_conn(&format!("{target}#"))
        } else {
            self.fresh_conn(&format!("{target}'"))
        }
    }

    pub fn block(&mut self, block: &[Statement], top: bool) -> Result<(), ModelError> {
        for (i, s) in block.iter().enumerate() {
            match &s.kind {
                StmtKind::SignalAssign { target, expr }
                | StmtKind::VariableAssign { target, expr } => {
                    let out = self.output_for(target, block, i, top)?;
                    self.assignment(s, expr, out)?;
                    self.set(target, out);
                }
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    let cond_out = self.fresh_conn(&format!("cond@{}#", cond.start()))?;
                    match self.granularity {
                        Granularity::Statement => {
                            let comp = self.b.component(
                                self.id(SourceKind::HdlExpression, cond.start()),
                                ComponentKind::Condition,
                                unparse::expr(cond),
                            );
                            let c = self.relation(cond, cond_out)?;
                            self.b.constrain(Some(comp), c);
                        }
                        Granularity::Expression => self.expression(cond, cond_out, cond.start())?,
                    }
                    let (vars0, pending0) = (self.vars.clone(), self.pending.clone());
                    self.block(then_branch, false)?;
                    let (vars_t, pending_t) = (
                        std::mem::replace(&mut self.vars, vars0.clone()),
                        std::mem::replace(&mut self.pending, pending0.clone()),
                    );
                    if let Some(e) = else_branch {
                        self.block(e, false)?;
                    }
                    let (vars_e, pending_e) = (
                        std::mem::replace(&mut self.vars, vars0),
                        std::mem::replace(&mut self.pending, pending0),
                    );
                    let mux = self.b.component(
                        self.id(SourceKind::HdlStatement, s.anchor),
                        ComponentKind::IfMux,
                        unparse::statement(s),
                    );
                    for target in s.targets() {
                        let key = target.key();
                        let pick =
                            |vars: &HashMap<String, ConnId>, pending: &HashMap<String, ConnId>| {
                                vars.get(&key).or_else(|| pending.get(&key)).copied()
                            };
                        let before = self.current(target);
                        let then_c = pick(&vars_t, &pending_t).unwrap_or(before);
                        let else_c = pick(&vars_e, &pending_e).unwrap_or(before);
                        let out = self.output_for(target, block, i, top)?;
                        let rel = Expr::Mux(
                            Box::new(Expr::Input(0)),
                            Box::new(Expr::Input(1)),
                            Box::new(Expr::Input(2)),
                        );
                        self.b.constrain(
                            Some(mux),
                            Constraint::expr(rel, vec![cond_out, then_c, else_c], out)?,
                        );
                        self.set(target, out);
                    }
                }
            }
        }
        Ok(())
    }

    fn assignment(
        &mut self,
        s: &Statement,
        expr: &hdl::Expr,
        out: ConnId,
    ) -> Result<(), ModelError> {
        let label = unparse::statement(s);
        let leaf = matches!(expr, hdl::Expr::Name(..) | hdl::Expr::Literal(..));
        if self.granularity == Granularity::Statement || leaf {
            let comp = self.b.component(
                self.id(SourceKind::HdlStatement, s.anchor),
                ComponentKind::Assignment,
                label,
            );
            let c = self.relation(expr, out)?;
            self.b.constrain(Some(comp), c);
            Ok(())
        } else {
            self.expression(expr, out, s.anchor)
        }
    }

    /// The whole expression as one relation driving `out`.
    fn relation(&self, expr: &hdl::Expr, out: ConnId) -> Result<Constraint, ModelError> {
        if let hdl::Expr::Literal(v, _) = expr {
            return Ok(Constraint::constant(*v, out));
        }
        let mut inputs = Vec::new();
        let e = self.lower(expr, &mut inputs);
        Constraint::expr(e, inputs, out)
    }

    fn lower(&self, expr: &hdl::Expr, inputs: &mut Vec<ConnId>) -> Expr {
        match expr {
            hdl::Expr::Name(n, _) => {
                let c = self.read(n);
                let k = inputs.iter().position(|&x| x == c).unwrap_or_else(|| {
                    inputs.push(c);
                    inputs.len() - 1
                });
                Expr::Input(k)
            }
            hdl::Expr::Literal(v, _) => Expr::Const(v.as_bool()),
            hdl::Expr::Not(e, _) => Expr::Not(Box::new(self.lower(e, inputs))),
            hdl::Expr::Binary(op, args, _) => Expr::Gate(
                op.gate(),
                args.iter().map(|a| self.lower(a, inputs)).collect(),
            ),
        }
    }

    /// One component per operator, the outermost driving `out`. A leaf
    /// expression becomes a buffer (or constant) anchored at `leaf_anchor`.
    fn expression(
        &mut self,
        expr: &hdl::Expr,
        out: ConnId,
        leaf_anchor: Anchor,
    ) -> Result<(), ModelError> {
        match expr {
            hdl::Expr::Name(..) | hdl::Expr::Literal(..) => {
                let comp = self.b.component(
                    self.id(SourceKind::HdlExpression, leaf_anchor),
                    ComponentKind::Gate(GateKind::Buff),
                    unparse::expr(expr),
                );
                let c = self.relation(expr, out)?;
                self.b.constrain(Some(comp), c);
            }
            hdl::Expr::Not(inner, at) => {
                let a = self.operand(inner)?;
                let comp = self.b.component(
                    self.id(SourceKind::HdlExpression, *at),
                    ComponentKind::Gate(GateKind::Not),
                    unparse::expr(expr),
                );
                let c = match a {
                    Operand::Conn(a) => Constraint::gate(GateKind::Not, vec![a], out),
                    Operand::Const(v) => Constraint::constant((!v).into(), out),
                };
                self.b.constrain(Some(comp), c);
            }
            hdl::Expr::Binary(op, args, at) => {
                let mut ops = Vec::new();
                for a in args {
                    ops.push(self.operand(a)?);
                }
                let kind = op.gate();
                let comp = self.b.component(
                    self.id(SourceKind::HdlExpression, *at),
                    ComponentKind::Gate(kind),
                    unparse::expr(expr),
                );
                let c = if ops.iter().all(|o| matches!(o, Operand::Conn(_))) {
                    let ins = ops
                        .iter()
                        .map(|o| match o {
                            Operand::Conn(c) => *c,
                            Operand::Const(_) => unreachable!(),
                        })
                        .collect();
                    Constraint::gate(kind, ins, out)
                } else {
                    let mut ins = Vec::new();
                    let terms = ops
                        .iter()
                        .map(|o| match o {
                            Operand::Conn(c) => {
                                ins.push(*c);
                                Expr::Input(ins.len() - 1)
                            }
                            Operand::Const(v) => Expr::Const(*v),
                        })
                        .collect();
                    Constraint::expr(Expr::Gate(kind, terms), ins, out)?
                };
                self.b.constrain(Some(comp), c);
            }
        }
        Ok(())
    }

    fn operand(&mut self, e: &hdl::Expr) -> Result<Operand, ModelError> {
        Ok(match e {
            hdl::Expr::Name(n, _) => Operand::Conn(self.read(n)),
            hdl::Expr::Literal(v, _) => Operand::Const(v.as_bool()),
            _ => {
                let c = self.fresh_conn(&format!("e@{}#", e.anchor()))?;
                self.expression(e, c, e.anchor())?;
                Operand::Conn(c)
            }
        })
    }
}

enum Operand {
    Conn(ConnId),
    Const(bool),
}
