//! Two-valued logic: the `bit` domain, gate kinds and boolean expressions.

use std::fmt;
use std::ops::Not;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A value of the VHDL `bit` type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Value {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
}

impl Value {
    pub fn as_bool(self) -> bool {
        self == Value::One
    }

    pub fn as_char(self) -> char {
        match self {
            Value::Zero => '0',
            Value::One => '1',
        }
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        if b {
            Value::One
        } else {
            Value::Zero
        }
    }
}

impl Not for Value {
    type Output = Value;
    fn not(self) -> Value {
        Value::from(!self.as_bool())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Value {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().trim_matches('\'') {
            "0" => Ok(Value::Zero),
            "1" => Ok(Value::One),
            other => Err(format!("not a bit value: `{other}`")),
        }
    }
}

/// Primitive gate functions. Every kind except `Not`/`Buff` is n-ary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GateKind {
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Not,
    Buff,
}

impl GateKind {
    pub const ALL: [GateKind; 8] = [
        GateKind::And,
        GateKind::Nand,
        GateKind::Or,
        GateKind::Nor,
        GateKind::Xor,
        GateKind::Xnor,
        GateKind::Not,
        GateKind::Buff,
    ];

    pub fn eval(self, inputs: &[bool]) -> bool {
        match self {
            GateKind::And => inputs.iter().all(|&b| b),
            GateKind::Nand => !inputs.iter().all(|&b| b),
            GateKind::Or => inputs.iter().any(|&b| b),
            GateKind::Nor => !inputs.iter().any(|&b| b),
            GateKind::Xor => inputs.iter().fold(false, |acc, &b| acc ^ b),
            GateKind::Xnor => !inputs.iter().fold(false, |acc, &b| acc ^ b),
            GateKind::Not => !inputs[0],
            GateKind::Buff => inputs[0],
        }
    }

    pub fn is_unary(self) -> bool {
        matches!(self, GateKind::Not | GateKind::Buff)
    }

    /// `true` when the output is the complement of the base function.
    pub fn is_inverting(self) -> bool {
        matches!(
            self,
            GateKind::Nand | GateKind::Nor | GateKind::Xnor | GateKind::Not
        )
    }

    /// The input value that alone determines the output, for AND/OR families.
    pub fn controlling_value(self) -> Option<bool> {
        match self {
            GateKind::And | GateKind::Nand => Some(false),
            GateKind::Or | GateKind::Nor => Some(true),
            _ => None,
        }
    }

    /// The gate with the output inverted (AND <-> NAND, NOT <-> BUFF, ...).
    pub fn complement(self) -> GateKind {
        match self {
            GateKind::And => GateKind::Nand,
            GateKind::Nand => GateKind::And,
            GateKind::Or => GateKind::Nor,
            GateKind::Nor => GateKind::Or,
            GateKind::Xor => GateKind::Xnor,
            GateKind::Xnor => GateKind::Xor,
            GateKind::Not => GateKind::Buff,
            GateKind::Buff => GateKind::Not,
        }
    }

    pub fn bench_name(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Nand => "NAND",
            GateKind::Or => "OR",
            GateKind::Nor => "NOR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
            GateKind::Not => "NOT",
            GateKind::Buff => "BUFF",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.bench_name())
    }
}

impl FromStr for GateKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "AND" => Ok(GateKind::And),
            "NAND" => Ok(GateKind::Nand),
            "OR" => Ok(GateKind::Or),
            "NOR" => Ok(GateKind::Nor),
            "XOR" => Ok(GateKind::Xor),
            "XNOR" => Ok(GateKind::Xnor),
            "NOT" | "INV" => Ok(GateKind::Not),
            "BUFF" | "BUF" => Ok(GateKind::Buff),
            other => Err(format!("unknown gate kind `{other}`")),
        }
    }
}

/// A boolean function over numbered inputs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Input(usize),
    Const(bool),
    Not(Box<Expr>),
    Gate(GateKind, Vec<Expr>),
    /// `sel ? then : else`
    Mux(Box<Expr>, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, inputs: &[bool]) -> bool {
        match self {
            Expr::Input(i) => inputs[*i],
            Expr::Const(b) => *b,
            Expr::Not(e) => !e.eval(inputs),
            Expr::Gate(kind, args) => {
                let vals: Vec<bool> = args.iter().map(|a| a.eval(inputs)).collect();
                kind.eval(&vals)
            }
            Expr::Mux(sel, a, b) => {
                if sel.eval(inputs) {
                    a.eval(inputs)
                } else {
                    b.eval(inputs)
                }
            }
        }
    }

    /// Largest input index referenced, plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Input(i) => i + 1,
            Expr::Const(_) => 0,
            Expr::Not(e) => e.arity(),
            Expr::Gate(_, args) => args.iter().map(Expr::arity).max().unwrap_or(0),
            Expr::Mux(s, a, b) => s.arity().max(a.arity()).max(b.arity()),
        }
    }
}

/// Widest relation a [`Table`] may hold (2^16 rows).
pub const MAX_TABLE_VARS: usize = 16;

/// The set of satisfying assignments of a relation over `vars` boolean
/// variables, stored as a bitmap indexed by assignment (bit `i` of the row
/// index is variable `i`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    vars: usize,
    rows: Vec<u64>,
}

impl Table {
    /// Builds the relation `output = f(inputs)` where `pins[k]` names the
    /// variable carrying input `k` of `f` and `out` the output variable.
    /// Pins may repeat; repeated pins share one variable.
    pub fn functional(expr: &Expr, input_vars: &[usize], out_var: usize, vars: usize) -> Table {
        assert!(vars <= MAX_TABLE_VARS, "relation too wide");
        let n_rows = 1usize << vars;
        let mut rows = vec![0u64; n_rows.div_ceil(64)];
        let mut inputs = vec![false; input_vars.len()];
        for row in 0..n_rows {
            for (k, &v) in input_vars.iter().enumerate() {
                inputs[k] = row >> v & 1 == 1;
            }
            if expr.eval(&inputs) == (row >> out_var & 1 == 1) {
                rows[row / 64] |= 1 << (row % 64);
            }
        }
        Table { vars, rows }
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn allows(&self, row: usize) -> bool {
        self.rows[row / 64] >> (row % 64) & 1 == 1
    }

    /// Values each variable can still take, given the assignment `known_mask`
    /// / `known_bits`. Returns `None` when no row is consistent, otherwise
    /// per variable a two-bit mask (bit 0: value 0 possible, bit 1: value 1).
    pub fn supports(&self, known_mask: u32, known_bits: u32) -> Option<Vec<u8>> {
        let free: Vec<usize> = (0..self.vars)
            .filter(|v| known_mask >> v & 1 == 0)
            .collect();
        let base = (known_bits & known_mask) as usize;
        let mut seen = vec![0u8; self.vars];
        let mut any = false;
        for combo in 0..(1usize << free.len()) {
            let mut row = base;
            for (k, &v) in free.iter().enumerate() {
                if combo >> k & 1 == 1 {
                    row |= 1 << v;
                }
            }
            if self.allows(row) {
                any = true;
                for (v, s) in seen.iter_mut().enumerate() {
                    *s |= 1 << (row >> v & 1);
                }
            }
        }
        any.then_some(seen)
    }
}
