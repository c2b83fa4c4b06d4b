//! ISCAS'85 `.bench` netlists.

use std::collections::HashMap;

use thiserror::Error;

use crate::logic::{GateKind, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetlistError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown gate kind `{kind}`")]
    UnknownGateKind { line: usize, kind: String },
    #[error("net `{0}` is driven more than once")]
    DuplicateDriver(String),
    #[error("net `{0}` is used but never driven")]
    UndrivenNet(String),
    #[error("combinational cycle through: {}", .0.join(" -> "))]
    CombinationalCycle(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub output: usize,
    pub kind: GateKind,
    pub inputs: Vec<usize>,
    /// 1-based line in the source file.
    pub line: usize,
}

/// A combinational netlist with nets numbered in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Netlist {
    pub name: String,
    nets: Vec<String>,
    index: HashMap<String, usize>,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub gates: Vec<Gate>,
    /// Gate indices in topological order.
    order: Vec<usize>,
    /// Stuck-at overrides honored by simulation.
    stuck: Vec<(usize, Value)>,
}

impl Netlist {
    pub fn net_count(&self) -> usize {
        self.nets.len()
    }

    pub fn net_name(&self, n: usize) -> &str {
        &self.nets[n]
    }

    pub fn net(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn gate_driving(&self, net: usize) -> Option<usize> {
        self.gates.iter().position(|g| g.output == net)
    }

    pub fn gate_named(&self, name: &str) -> Option<usize> {
        self.net(name).and_then(|n| self.gate_driving(n))
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    pub fn stuck_at(&self) -> &[(usize, Value)] {
        &self.stuck
    }

    pub fn set_stuck_at(&mut self, net: usize, value: Value) {
        self.stuck.retain(|(n, _)| *n != net);
        self.stuck.push((net, value));
    }

    /// `.bench` text of one gate, e.g. `N22 = NAND(N10, N16)`.
    pub fn gate_text(&self, g: &Gate) -> String {
        let ins: Vec<&str> = g.inputs.iter().map(|&i| self.nets[i].as_str()).collect();
        format!("{} = {}({})", self.nets[g.output], g.kind, ins.join(", "))
    }

    /// Evaluates every net for the given primary input values.
    pub fn evaluate(&self, inputs: &[bool]) -> Vec<bool> {
        assert_eq!(inputs.len(), self.inputs.len(), "input vector width");
        let mut val = vec![false; self.nets.len()];
        for (&n, &v) in self.inputs.iter().zip(inputs) {
            val[n] = v;
        }
        let apply_stuck = |val: &mut Vec<bool>, net: usize| {
            if let Some(&(_, v)) = self.stuck.iter().find(|(n, _)| *n == net) {
                val[net] = v.as_bool();
            }
        };
        for &n in &self.inputs {
            apply_stuck(&mut val, n);
        }
        let mut scratch = Vec::new();
        for &gi in &self.order {
            let g = &self.gates[gi];
            scratch.clear();
            scratch.extend(g.inputs.iter().map(|&i| val[i]));
            val[g.output] = g.kind.eval(&scratch);
            apply_stuck(&mut val, g.output);
        }
        val
    }

    /// Primary output values for the given inputs.
    pub fn simulate(&self, inputs: &[bool]) -> Vec<bool> {
        let val = self.evaluate(inputs);
        self.outputs.iter().map(|&o| val[o]).collect()
    }

    pub fn to_bench(&self) -> String {
        let mut out = format!("# {}\n", self.name);
        for &i in &self.inputs {
            out.push_str(&format!("INPUT({})\n", self.nets[i]));
        }
        for &o in &self.outputs {
            out.push_str(&format!("OUTPUT({})\n", self.nets[o]));
        }
        for g in &self.gates {
            out.push_str(&self.gate_text(g));
            out.push('\n');
        }
        out
    }
}

/// Parses `.bench` text: `INPUT(n)`, `OUTPUT(n)`, `n = KIND(a, b, ...)` and
/// `#` comments.
pub fn parse_bench(name: &str, text: &str) -> Result<Netlist, NetlistError> {
    let mut nl = Netlist {
        name: name.to_string(),
        nets: Vec::new(),
        index: HashMap::new(),
        inputs: Vec::new(),
        outputs: Vec::new(),
        gates: Vec::new(),
        order: Vec::new(),
        stuck: Vec::new(),
    };
    let intern = |nl: &mut Netlist, s: &str| -> usize {
        if let Some(&i) = nl.index.get(s) {
            return i;
        }
        nl.nets.push(s.to_string());
        nl.index.insert(s.to_string(), nl.nets.len() - 1);
        nl.nets.len() - 1
    };
    let mut driver: HashMap<usize, usize> = HashMap::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let syntax = |message: &str| NetlistError::Syntax {
            line,
            message: message.to_string(),
        };
        let (head, args) = split_call(body).ok_or_else(|| syntax("expected `NAME(...)`"))?;
        if let Some((lhs, _)) = head.split_once('=') {
            let out_name = lhs.trim();
            let kind_name = head[head.find('=').expect("has =") + 1..].trim();
            if out_name.is_empty() || !valid_net(out_name) {
                return Err(syntax("missing or malformed gate output name"));
            }
            let kind: GateKind = match kind_name.parse() {
                Ok(k) => k,
                Err(_) => {
                    return Err(NetlistError::UnknownGateKind {
                        line,
                        kind: kind_name.to_string(),
                    })
                }
            };
            if args.is_empty() || args.iter().any(|a| !valid_net(a)) {
                return Err(syntax("malformed gate argument list"));
            }
            if kind.is_unary() && args.len() != 1 {
                return Err(syntax(&format!("{kind} takes exactly one input")));
            }
            let output = intern(&mut nl, out_name);
            let inputs = args.iter().map(|a| intern(&mut nl, a)).collect();
            if driver.insert(output, nl.gates.len()).is_some() {
                return Err(NetlistError::DuplicateDriver(out_name.to_string()));
            }
            nl.gates.push(Gate {
                output,
                kind,
                inputs,
                line,
            });
        } else {
            if args.len() != 1 || !valid_net(&args[0]) {
                return Err(syntax("expected a single net name"));
            }
            let n = intern(&mut nl, &args[0]);
            match head.trim().to_ascii_uppercase().as_str() {
                "INPUT" => {
                    if nl.inputs.contains(&n) {
                        return Err(NetlistError::DuplicateDriver(args[0].clone()));
                    }
                    nl.inputs.push(n);
                }
                "OUTPUT" => nl.outputs.push(n),
                other => {
                    return Err(syntax(&format!("unknown declaration `{other}`")));
                }
            }
        }
    }
    for &i in &nl.inputs {
        if driver.contains_key(&i) {
            return Err(NetlistError::DuplicateDriver(nl.nets[i].clone()));
        }
    }
    for n in 0..nl.nets.len() {
        if !driver.contains_key(&n) && !nl.inputs.contains(&n) {
            return Err(NetlistError::UndrivenNet(nl.nets[n].clone()));
        }
    }
    nl.order = topo_order(&nl, &driver)?;
    Ok(nl)
}

fn valid_net(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '[' | ']' | '$' | '\\'))
}

fn split_call(s: &str) -> Option<(&str, Vec<String>)> {
    let open = s.find('(')?;
    let close = s.rfind(')')?;
    if close < open || !s[close + 1..].trim().is_empty() {
        return None;
    }
    let args = s[open + 1..close]
        .split(',')
        .map(|a| a.trim().to_string())
        .filter(|a| !a.is_empty())
        .collect();
    Some((&s[..open], args))
}

fn topo_order(nl: &Netlist, driver: &HashMap<usize, usize>) -> Result<Vec<usize>, NetlistError> {
    let mut state = vec![0u8; nl.gates.len()];
    let mut order = Vec::with_capacity(nl.gates.len());
    for root in 0..nl.gates.len() {
        if state[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        state[root] = 1;
        while let Some(&mut (g, ref mut k)) = stack.last_mut() {
            let gate = &nl.gates[g];
            if let Some(&inp) = gate.inputs.get(*k) {
                *k += 1;
                let Some(&d) = driver.get(&inp) else { continue };
                match state[d] {
                    0 => {
                        state[d] = 1;
                        stack.push((d, 0));
                    }
                    1 => {
                        let start = stack.iter().position(|&(x, _)| x == d).expect("on stack");
                        let mut cycle: Vec<String> = stack[start..]
                            .iter()
                            .map(|&(x, _)| nl.nets[nl.gates[x].output].clone())
                            .collect();
                        cycle.push(nl.nets[nl.gates[d].output].clone());
                        return Err(NetlistError::CombinationalCycle(cycle));
                    }
                    _ => {}
                }
            } else {
                state[g] = 2;
                order.push(g);
                stack.pop();
            }
        }
    }
    Ok(order)
}
