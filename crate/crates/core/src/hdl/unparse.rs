use std::fmt::Write as _;

use super::ast::*;

/// Renders a design unit as source text in the supported subset.
pub fn unparse(unit: &DesignUnit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "entity {} is", unit.entity);
    if !unit.ports.is_empty() {
        let ports: Vec<String> = unit
            .ports
            .iter()
            .map(|p| {
                let dir = match p.direction {
                    Direction::In => "in",
                    Direction::Out => "out",
                };
                format!("{} : {dir} bit", p.name)
            })
            .collect();
        let _ = writeln!(out, "  port({});", ports.join("; "));
    }
    let _ = writeln!(out, "end {};", unit.entity);
    let _ = writeln!(
        out,
        "architecture {} of {} is",
        unit.architecture, unit.entity
    );
    for s in &unit.signals {
        let _ = writeln!(out, "  signal {};", decl(s));
    }
    let _ = writeln!(out, "begin");
    for p in &unit.processes {
        let sens = p
            .sensitivity
            .as_ref()
            .map(|s| {
                format!(
                    " ({})",
                    s.iter().map(|i| i.as_str()).collect::<Vec<_>>().join(", ")
                )
            })
            .unwrap_or_default();
        let _ = writeln!(out, "  {} : process{sens}", p.label);
        for v in &p.variables {
            let _ = writeln!(out, "    variable {};", decl(v));
        }
        let _ = writeln!(out, "  begin");
        body(&mut out, &p.body, 2);
        let _ = writeln!(out, "  end process {};", p.label);
    }
    let _ = writeln!(out, "end {};", unit.architecture);
    out
}

fn decl(d: &ObjectDecl) -> String {
    match d.init {
        Some(v) => format!("{} : bit := '{v}'", d.name),
        None => format!("{} : bit", d.name),
    }
}

fn body(out: &mut String, stmts: &[Statement], depth: usize) {
    let pad = "  ".repeat(depth);
    for s in stmts {
        match &s.kind {
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let _ = writeln!(out, "{pad}if {} then", expr(cond));
                body(out, then_branch, depth + 1);
                if let Some(e) = else_branch {
                    let _ = writeln!(out, "{pad}else");
                    body(out, e, depth + 1);
                }
                let _ = writeln!(out, "{pad}end if;");
            }
            _ => {
                let _ = writeln!(out, "{pad}{};", statement(s));
            }
        }
    }
}

/// One-line rendering of a statement header, used for component labels.
pub fn statement(s: &Statement) -> String {
    match &s.kind {
        StmtKind::SignalAssign { target, expr: e } => format!("{target} <= {}", expr(e)),
        StmtKind::VariableAssign { target, expr: e } => format!("{target} := {}", expr(e)),
        StmtKind::If { cond, .. } => format!("if {}", expr(cond)),
    }
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Name(n, _) => n.to_string(),
        Expr::Literal(v, _) => format!("'{v}'"),
        Expr::Not(inner, _) => format!("not({})", expr(inner)),
        Expr::Binary(op, args, _) => args
            .iter()
            .map(|a| match a {
                Expr::Binary(..) => format!("({})", expr(a)),
                _ => expr(a),
            })
            .collect::<Vec<_>>()
            .join(&format!(" {} ", op.symbol())),
    }
}
