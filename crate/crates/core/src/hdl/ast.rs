use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::logic::{GateKind, Value};

/// Source position of a token, 1-based.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Anchor {
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for Anchor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// An identifier. Comparison and hashing ignore ASCII case, the original
/// spelling is kept for output.
#[derive(Debug, Clone, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Ident(pub String);

impl Ident {
    pub fn new(s: impl Into<String>) -> Self {
        Ident(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn key(&self) -> String {
        self.0.to_ascii_lowercase()
    }
}

impl PartialEq for Ident {
    fn eq(&self, other: &Self) -> bool {
        self.0.eq_ignore_ascii_case(&other.0)
    }
}

impl Hash for Ident {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for b in self.0.bytes() {
            state.write_u8(b.to_ascii_lowercase());
        }
    }
}

impl PartialEq<str> for Ident {
    fn eq(&self, other: &str) -> bool {
        self.0.eq_ignore_ascii_case(other)
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    In,
    Out,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port {
    pub name: Ident,
    pub direction: Direction,
    pub anchor: Anchor,
}

/// A signal or variable declaration. All objects have type `bit`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectDecl {
    pub name: Ident,
    pub init: Option<Value>,
    pub anchor: Anchor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignUnit {
    pub entity: Ident,
    pub ports: Vec<Port>,
    pub architecture: Ident,
    pub signals: Vec<ObjectDecl>,
    pub processes: Vec<Process>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Process {
    pub label: Ident,
    /// `None` when the process has no sensitivity list (rejected by the
    /// static checker).
    pub sensitivity: Option<Vec<Ident>>,
    pub variables: Vec<ObjectDecl>,
    pub body: Vec<Statement>,
    pub anchor: Anchor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub kind: StmtKind,
    pub anchor: Anchor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StmtKind {
    SignalAssign {
        target: Ident,
        expr: Expr,
    },
    VariableAssign {
        target: Ident,
        expr: Expr,
    },
    If {
        cond: Expr,
        then_branch: Vec<Statement>,
        else_branch: Option<Vec<Statement>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    And,
    Or,
    Nand,
    Nor,
    Xor,
    Xnor,
    /// `=` on bits, i.e. xnor.
    Eq,
    /// `/=` on bits, i.e. xor.
    Neq,
}

impl BinOp {
    pub fn gate(self) -> GateKind {
        match self {
            BinOp::And => GateKind::And,
            BinOp::Or => GateKind::Or,
            BinOp::Nand => GateKind::Nand,
            BinOp::Nor => GateKind::Nor,
            BinOp::Xor | BinOp::Neq => GateKind::Xor,
            BinOp::Xnor | BinOp::Eq => GateKind::Xnor,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Nand => "nand",
            BinOp::Nor => "nor",
            BinOp::Xor => "xor",
            BinOp::Xnor => "xnor",
            BinOp::Eq => "=",
            BinOp::Neq => "/=",
        }
    }

    /// Whether `a op b op c` is legal without parentheses.
    pub fn chainable(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or | BinOp::Xor | BinOp::Xnor)
    }

    pub fn is_relational(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Neq)
    }

    pub fn from_word(w: &str) -> Option<BinOp> {
        Some(match w.to_ascii_lowercase().as_str() {
            "and" => BinOp::And,
            "or" => BinOp::Or,
            "nand" => BinOp::Nand,
            "nor" => BinOp::Nor,
            "xor" => BinOp::Xor,
            "xnor" => BinOp::Xnor,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expr {
    Name(Ident, Anchor),
    Literal(Value, Anchor),
    Not(Box<Expr>, Anchor),
    /// An operator applied to two or more operands; chains of one operator
    /// form a single node anchored at the first operator token.
    Binary(BinOp, Vec<Expr>, Anchor),
}

impl Expr {
    pub fn anchor(&self) -> Anchor {
        match self {
            Expr::Name(_, a) | Expr::Literal(_, a) | Expr::Not(_, a) | Expr::Binary(_, _, a) => *a,
        }
    }

    /// Position of the leftmost token.
    pub fn start(&self) -> Anchor {
        match self {
            Expr::Binary(_, args, _) => args[0].start(),
            other => other.anchor(),
        }
    }

    /// Names read, in left-to-right order, with repeats.
    pub fn names(&self) -> Vec<&Ident> {
        let mut out = Vec::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names<'a>(&'a self, out: &mut Vec<&'a Ident>) {
        match self {
            Expr::Name(n, _) => out.push(n),
            Expr::Literal(..) => {}
            Expr::Not(e, _) => e.collect_names(out),
            Expr::Binary(_, args, _) => args.iter().for_each(|a| a.collect_names(out)),
        }
    }

    pub fn eval(&self, read: &impl Fn(&Ident) -> bool) -> bool {
        match self {
            Expr::Name(n, _) => read(n),
            Expr::Literal(v, _) => v.as_bool(),
            Expr::Not(e, _) => !e.eval(read),
            Expr::Binary(op, args, _) => {
                let vals: Vec<bool> = args.iter().map(|a| a.eval(read)).collect();
                op.gate().eval(&vals)
            }
        }
    }
}

impl Statement {
    /// Names assigned anywhere within this statement.
    pub fn targets(&self) -> Vec<&Ident> {
        let mut out = Vec::new();
        self.collect_targets(&mut out);
        out
    }

    fn collect_targets<'a>(&'a self, out: &mut Vec<&'a Ident>) {
        match &self.kind {
            StmtKind::SignalAssign { target, .. } | StmtKind::VariableAssign { target, .. } => {
                if !out.contains(&target) {
                    out.push(target)
                }
            }
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                for s in then_branch.iter().chain(else_branch.iter().flatten()) {
                    s.collect_targets(out);
                }
            }
        }
    }
}

impl Process {
    /// Signals assigned by this process, in first-assignment order.
    pub fn driven_signals(&self) -> Vec<&Ident> {
        let mut out: Vec<&Ident> = Vec::new();
        visit_statements(&self.body, &mut |s| {
            if let StmtKind::SignalAssign { target, .. } = &s.kind {
                if !out.contains(&target) {
                    out.push(target);
                }
            }
        });
        out
    }

    pub fn variable(&self, name: &Ident) -> Option<&ObjectDecl> {
        self.variables.iter().find(|v| &v.name == name)
    }
}

/// Pre-order walk over nested statements.
pub fn visit_statements<'a>(body: &'a [Statement], f: &mut impl FnMut(&'a Statement)) {
    for s in body {
        f(s);
        if let StmtKind::If {
            then_branch,
            else_branch,
            ..
        } = &s.kind
        {
            visit_statements(then_branch, f);
            if let Some(e) = else_branch {
                visit_statements(e, f);
            }
        }
    }
}

impl DesignUnit {
    pub fn port(&self, name: &Ident) -> Option<&Port> {
        self.ports.iter().find(|p| &p.name == name)
    }

    pub fn signal(&self, name: &Ident) -> Option<&ObjectDecl> {
        self.signals.iter().find(|s| &s.name == name)
    }

    /// Ports followed by internal signals, in declaration order.
    pub fn all_signals(&self) -> Vec<&Ident> {
        self.ports
            .iter()
            .map(|p| &p.name)
            .chain(self.signals.iter().map(|s| &s.name))
            .collect()
    }

    pub fn is_signal(&self, name: &Ident) -> bool {
        self.port(name).is_some() || self.signal(name).is_some()
    }

    pub fn process(&self, label: &str) -> Option<&Process> {
        self.processes.iter().find(|p| p.label == *label)
    }

    /// Declared initial value of a signal; `'0'` when absent.
    pub fn initial_value(&self, name: &Ident) -> Value {
        self.signal(name)
            .and_then(|s| s.init)
            .unwrap_or(Value::Zero)
    }

    /// A copy with every anchor zeroed, for structural comparison.
    pub fn without_anchors(&self) -> DesignUnit {
        let mut u = self.clone();
        for p in &mut u.ports {
            p.anchor = Anchor::default();
        }
        for s in &mut u.signals {
            s.anchor = Anchor::default();
        }
        for p in &mut u.processes {
            p.anchor = Anchor::default();
            for v in &mut p.variables {
                v.anchor = Anchor::default();
            }
            strip_body(&mut p.body);
        }
        u
    }
}

fn strip_body(body: &mut [Statement]) {
    for s in body {
        s.anchor = Anchor::default();
        match &mut s.kind {
            StmtKind::SignalAssign { expr, .. } | StmtKind::VariableAssign { expr, .. } => {
                strip_expr(expr)
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                strip_expr(cond);
                strip_body(then_branch);
                if let Some(e) = else_branch {
                    strip_body(e);
                }
            }
        }
    }
}

fn strip_expr(e: &mut Expr) {
    match e {
        Expr::Name(_, a) | Expr::Literal(_, a) => *a = Anchor::default(),
        Expr::Not(inner, a) => {
            *a = Anchor::default();
            strip_expr(inner);
        }
        Expr::Binary(_, args, a) => {
            *a = Anchor::default();
            args.iter_mut().for_each(strip_expr);
        }
    }
}
