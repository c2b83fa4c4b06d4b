//! Frontend for the supported VHDL-RTL subset: one entity with `bit` ports,
//! one architecture of labelled processes with explicit sensitivity lists,
//! and signal assignments, variable assignments and `if` statements.

pub mod ast;
mod check;
mod lexer;
mod parser;
pub mod unparse;

use thiserror::Error;

pub use ast::{
    Anchor, BinOp, DesignUnit, Direction, Expr, Ident, ObjectDecl, Port, Process, Statement,
    StmtKind,
};
pub use check::{check_static, ActivationGraph};
pub use parser::parse;
pub use unparse::unparse;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HdlError {
    #[error("{at}: syntax error: {message}")]
    Syntax { at: Anchor, message: String },
    #[error("{at}: unsupported feature: {feature}")]
    Unsupported { at: Anchor, feature: String },
    #[error("{at}: process `{process}` has no sensitivity list")]
    MissingSensitivityList { process: String, at: Anchor },
    #[error("{at}: undeclared name `{name}`")]
    UndeclaredName { name: String, at: Anchor },
    #[error("{at}: `{name}` is declared twice")]
    DuplicateName { name: String, at: Anchor },
    #[error("{at}: variable `{name}` shadows a signal")]
    ShadowedName { name: String, at: Anchor },
    #[error("{at}: cannot assign input port `{name}`")]
    AssignToInput { name: String, at: Anchor },
    #[error("{at}: `{name}`: {message}")]
    WrongAssignment {
        name: String,
        at: Anchor,
        message: String,
    },
    #[error("signal `{signal}` is driven by processes {}", .processes.join(" and "))]
    MultipleDrivers {
        signal: String,
        processes: Vec<String>,
    },
    #[error("process activation graph is cyclic: {}", .cycle.join(" -> "))]
    CyclicActivationGraph { cycle: Vec<String> },
}
