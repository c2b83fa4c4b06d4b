use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::HdlError;

/// Edge `p -> q` iff process `p` assigns a signal on `q`'s sensitivity list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationGraph {
    pub processes: Vec<String>,
    pub edges: Vec<(usize, usize)>,
}

impl ActivationGraph {
    /// Edges as label pairs, sorted.
    pub fn edge_labels(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = self
            .edges
            .iter()
            .map(|&(a, b)| (self.processes[a].clone(), self.processes[b].clone()))
            .collect();
        out.sort();
        out
    }

    fn find_cycle(&self) -> Option<Vec<usize>> {
        let n = self.processes.len();
        let mut succ = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            succ[a].push(b);
        }
        fn dfs(
            v: usize,
            succ: &[Vec<usize>],
            color: &mut [u8],
            stack: &mut Vec<usize>,
        ) -> Option<Vec<usize>> {
            color[v] = 1;
            stack.push(v);
            for &w in &succ[v] {
                if color[w] == 1 {
                    let start = stack.iter().position(|&x| x == w).expect("on stack");
                    let mut cycle = stack[start..].to_vec();
                    cycle.push(w);
                    return Some(cycle);
                }
                if color[w] == 0 {
                    if let Some(c) = dfs(w, succ, color, stack) {
                        return Some(c);
                    }
                }
            }
            stack.pop();
            color[v] = 2;
            None
        }
        let mut color = vec![0u8; n];
        (0..n).find_map(|v| {
            if color[v] == 0 {
                dfs(v, &succ, &mut color, &mut Vec::new())
            } else {
                None
            }
        })
    }
}

/// Validates name usage and the process structure, returning the process
/// activation graph.
pub fn check_static(unit: &DesignUnit) -> Result<ActivationGraph, HdlError> {
    let mut seen: HashMap<Ident, Anchor> = HashMap::new();
    let decls = unit
        .ports
        .iter()
        .map(|p| (&p.name, p.anchor))
        .chain(unit.signals.iter().map(|s| (&s.name, s.anchor)));
    for (name, at) in decls {
        if seen.insert(name.clone(), at).is_some() {
            return Err(HdlError::DuplicateName {
                name: name.to_string(),
                at,
            });
        }
    }
    let mut labels: HashMap<Ident, usize> = HashMap::new();
    for (i, p) in unit.processes.iter().enumerate() {
        if labels.insert(p.label.clone(), i).is_some() {
            return Err(HdlError::DuplicateName {
                name: p.label.to_string(),
                at: p.anchor,
            });
        }
    }

    let mut drivers: HashMap<Ident, usize> = HashMap::new();
    for (pi, p) in unit.processes.iter().enumerate() {
        let Some(sens) = &p.sensitivity else {
            return Err(HdlError::MissingSensitivityList {
                process: p.label.to_string(),
                at: p.anchor,
            });
        };
        if sens.is_empty() {
            return Err(HdlError::MissingSensitivityList {
                process: p.label.to_string(),
                at: p.anchor,
            });
        }
        for s in sens {
            if !unit.is_signal(s) {
                return Err(HdlError::UndeclaredName {
                    name: s.to_string(),
                    at: p.anchor,
                });
            }
        }
        let mut vars: HashMap<Ident, Anchor> = HashMap::new();
        for v in &p.variables {
            if unit.is_signal(&v.name) {
                return Err(HdlError::ShadowedName {
                    name: v.name.to_string(),
                    at: v.anchor,
                });
            }
            if vars.insert(v.name.clone(), v.anchor).is_some() {
                return Err(HdlError::DuplicateName {
                    name: v.name.to_string(),
                    at: v.anchor,
                });
            }
        }
        let mut result = Ok(());
        visit_statements(&p.body, &mut |s| {
            if result.is_err() {
                return;
            }
            result = check_statement(unit, p, s);
        });
        result?;
        for sig in p.driven_signals() {
            if let Some(&other) = drivers.get(sig) {
                if other != pi {
                    return Err(HdlError::MultipleDrivers {
                        signal: sig.to_string(),
                        processes: vec![
                            unit.processes[other].label.to_string(),
                            p.label.to_string(),
                        ],
                    });
                }
            }
            drivers.insert(sig.clone(), pi);
        }
    }

    let mut edges = Vec::new();
    for (pi, p) in unit.processes.iter().enumerate() {
        let driven = p.driven_signals();
        for (qi, q) in unit.processes.iter().enumerate() {
            let sens = q.sensitivity.as_deref().unwrap_or(&[]);
            if driven.iter().any(|d| sens.contains(d)) {
                edges.push((pi, qi));
            }
        }
    }
    let graph = ActivationGraph {
        processes: unit.processes.iter().map(|p| p.label.to_string()).collect(),
        edges,
    };
    if let Some(cycle) = graph.find_cycle() {
        return Err(HdlError::CyclicActivationGraph {
            cycle: cycle
                .into_iter()
                .map(|i| graph.processes[i].clone())
                .collect(),
        });
    }
    Ok(graph)
}

fn check_statement(unit: &DesignUnit, p: &Process, s: &Statement) -> Result<(), HdlError> {
    let check_reads = |e: &Expr| -> Result<(), HdlError> {
        let mut stack = vec![e];
        while let Some(e) = stack.pop() {
            match e {
                Expr::Name(n, at) => {
                    if !unit.is_signal(n) && p.variable(n).is_none() {
                        return Err(HdlError::UndeclaredName {
                            name: n.to_string(),
                            at: *at,
                        });
                    }
                }
                Expr::Literal(..) => {}
                Expr::Not(inner, _) => stack.push(inner),
                Expr::Binary(_, args, _) => stack.extend(args.iter()),
            }
        }
        Ok(())
    };
    match &s.kind {
        StmtKind::SignalAssign { target, expr } => {
            if p.variable(target).is_some() {
                return Err(HdlError::WrongAssignment {
                    name: target.to_string(),
                    at: s.anchor,
                    message: "variables are assigned with `:=`".into(),
                });
            }
            match unit.port(target) {
                Some(port) if port.direction == Direction::In => {
                    return Err(HdlError::AssignToInput {
                        name: target.to_string(),
                        at: s.anchor,
                    })
                }
                None if unit.signal(target).is_none() => {
                    return Err(HdlError::UndeclaredName {
                        name: target.to_string(),
                        at: s.anchor,
                    })
                }
                _ => {}
            }
            check_reads(expr)
        }
        StmtKind::VariableAssign { target, expr } => {
            if p.variable(target).is_none() {
                if unit.is_signal(target) {
                    return Err(HdlError::WrongAssignment {
                        name: target.to_string(),
                        at: s.anchor,
                        message: "signals are assigned with `<=`".into(),
                    });
                }
                return Err(HdlError::UndeclaredName {
                    name: target.to_string(),
                    at: s.anchor,
                });
            }
            check_reads(expr)
        }
        StmtKind::If { cond, .. } => check_reads(cond),
    }
}
