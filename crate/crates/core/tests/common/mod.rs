//! Test-side oracles and generators shared by the integration tests.
//!
//! The oracles decide consistency by exhaustive enumeration and never call
//! into the propagation engine.

#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use rtldiag::builder::{build_model, Granularity};
use rtldiag::hdl;
use rtldiag::logic::{Expr, GateKind, Value};
use rtldiag::model::{ComponentModel, ConnId, Constraint, ObsRole, ObservationSet, Relation};
use rtldiag::netlist::{parse_bench, Netlist};

/// Gate semantics written out independently of the library.
pub fn gate(kind: GateKind, ins: &[bool]) -> bool {
    let ones = ins.iter().filter(|&&b| b).count();
    match kind {
        GateKind::And => ones == ins.len(),
        GateKind::Nand => ones != ins.len(),
        GateKind::Or => ones > 0,
        GateKind::Nor => ones == 0,
        GateKind::Xor => ones % 2 == 1,
        GateKind::Xnor => ones % 2 == 0,
        GateKind::Not => !ins[0],
        GateKind::Buff => ins[0],
    }
}

fn eval_expr(e: &Expr, ins: &[bool]) -> bool {
    match e {
        Expr::Input(i) => ins[*i],
        Expr::Const(b) => *b,
        Expr::Not(x) => !eval_expr(x, ins),
        Expr::Gate(k, args) => {
            let vals: Vec<bool> = args.iter().map(|a| eval_expr(a, ins)).collect();
            gate(*k, &vals)
        }
        Expr::Mux(s, a, b) => {
            if eval_expr(s, ins) {
                eval_expr(a, ins)
            } else {
                eval_expr(b, ins)
            }
        }
    }
}

/// Output value a constraint forces for the given input values.
pub fn output_of(c: &Constraint, ins: &[bool]) -> bool {
    match &c.relation {
        Relation::Const(v) => *v == Value::One,
        Relation::Gate(k) => gate(*k, ins),
        Relation::Table { expr, .. } => eval_expr(expr, ins),
    }
}

/// The constraints in force when `abnormal` components are switched off, in
/// an order where every input is computed before it is read.
fn schedule(model: &ComponentModel, abnormal: &[usize]) -> (Vec<usize>, Vec<bool>) {
    let cs = model.constraints();
    let n = model.connection_count();
    let mut driver: Vec<Option<usize>> = vec![None; n];
    for (i, c) in cs.iter().enumerate() {
        if c.owner.is_some_and(|o| abnormal.contains(&o)) {
            continue;
        }
        assert!(
            driver[c.output.index()].is_none(),
            "oracle needs single drivers"
        );
        driver[c.output.index()] = Some(i);
    }
    // 0 unvisited, 1 on stack, 2 done
    let mut state = vec![0u8; n];
    let mut order = Vec::new();
    fn visit(
        conn: usize,
        cs: &[Constraint],
        driver: &[Option<usize>],
        state: &mut [u8],
        order: &mut Vec<usize>,
    ) {
        match state[conn] {
            2 => return,
            1 => panic!("oracle needs an acyclic model"),
            _ => {}
        }
        state[conn] = 1;
        if let Some(ci) = driver[conn] {
            for i in &cs[ci].inputs {
                visit(i.index(), cs, driver, state, order);
            }
            order.push(ci);
        }
        state[conn] = 2;
    }
    for conn in 0..n {
        visit(conn, cs, &driver, &mut state, &mut order);
    }
    let free = driver.iter().map(|d| d.is_none()).collect();
    (order, free)
}

/// Brute-force consistency: some assignment of the undriven connections,
/// pushed forward through the working components, reproduces every
/// observation.
pub fn consistent(model: &ComponentModel, obs: &ObservationSet, abnormal: &[usize]) -> bool {
    let (order, free) = schedule(model, abnormal);
    let n = model.connection_count();
    let observed: Vec<Option<bool>> = (0..n)
        .map(|i| obs.get(ConnId(i as u32)).map(|v| v == Value::One))
        .collect();
    let open: Vec<usize> = (0..n)
        .filter(|&i| free[i] && observed[i].is_none())
        .collect();
    assert!(
        open.len() <= 24,
        "too many free connections for enumeration: {}",
        open.len()
    );
    let cs = model.constraints();
    let mut val = vec![false; n];
    for (i, o) in observed.iter().enumerate() {
        if free[i] {
            val[i] = o.unwrap_or(false);
        }
    }
    let mut ins = Vec::new();
    'assign: for bits in 0u64..(1 << open.len()) {
        for (k, &i) in open.iter().enumerate() {
            val[i] = bits >> k & 1 == 1;
        }
        for &ci in &order {
            let c = &cs[ci];
            ins.clear();
            ins.extend(c.inputs.iter().map(|i| val[i.index()]));
            let out = output_of(c, &ins);
            if observed[c.output.index()].is_some_and(|o| o != out) {
                continue 'assign;
            }
            val[c.output.index()] = out;
        }
        return true;
    }
    false
}

/// All subsets of `0..n` with at most `k` elements, by size then
/// lexicographically.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..k.min(n) {
        let mut next = Vec::new();
        for s in &frontier {
            let start = s.last().map_or(0, |&x: &usize| x + 1);
            for x in start..n {
                let mut t: Vec<usize> = s.clone();
                t.push(x);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Minimal diagnoses of cardinality at most `k`, by enumeration.
pub fn diagnoses(model: &ComponentModel, obs: &ObservationSet, k: usize) -> Vec<Vec<usize>> {
    let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut out = Vec::new();
    for s in subsets(model.components().len(), k) {
        if found.iter().any(|d| d.iter().all(|x| s.contains(x))) {
            continue;
        }
        if consistent(model, obs, &s) {
            found.insert(s.clone());
            out.push(s);
        }
    }
    out
}

/// `.bench` text for a random small netlist with reconvergent fanout.
#[derive(Debug, Clone)]
pub struct SmallNetlist {
    pub text: String,
    pub netlist: Netlist,
}

const KINDS: [GateKind; 8] = GateKind::ALL;

pub fn small_netlist(max_gates: usize) -> impl Strategy<Value = SmallNetlist> {
    (2usize..=4, 1..=max_gates)
        .prop_flat_map(|(n_in, n_gates)| {
            let gates = proptest::collection::vec(
                (
                    0usize..KINDS.len(),
                    proptest::collection::vec(any::<prop::sample::Index>(), 3),
                    2usize..=3,
                ),
                n_gates,
            );
            (
                Just(n_in),
                gates,
                proptest::collection::vec(any::<bool>(), n_gates),
            )
        })
        .prop_map(|(n_in, gates, extra_out)| {
            let mut text = String::new();
            for i in 0..n_in {
                text.push_str(&format!("INPUT(i{i})\n"));
            }
            let last = gates.len() - 1;
            for (g, &out) in extra_out.iter().enumerate() {
                if out || g == last {
                    text.push_str(&format!("OUTPUT(g{g})\n"));
                }
            }
            for (g, (kind, picks, arity)) in gates.iter().enumerate() {
                let kind = KINDS[*kind];
                let arity = if kind.is_unary() { 1 } else { *arity };
                // later gates prefer recent nets, so fanout reconverges
                let pool = n_in + g;
                let names: Vec<String> = picks[..arity]
                    .iter()
                    .map(|p| {
                        let k = p.index(pool);
                        if k < n_in {
                            format!("i{k}")
                        } else {
                            format!("g{}", k - n_in)
                        }
                    })
                    .collect();
                text.push_str(&format!(
                    "g{g} = {}({})\n",
                    kind.bench_name(),
                    names.join(", ")
                ));
            }
            let netlist = parse_bench("rand", &text).expect("generated netlist parses");
            SmallNetlist { text, netlist }
        })
}

/// Observations of a netlist: each input with probability 3/4, every output
/// as computed by `reference` (usually a faulty copy).
pub fn netlist_observations(
    n: &Netlist,
    model: &ComponentModel,
    inputs: &[bool],
    observe_input: &[bool],
    outputs: &[bool],
) -> ObservationSet {
    let mut obs = ObservationSet::new();
    for (k, &net) in n.inputs.iter().enumerate() {
        if observe_input[k] {
            let c = model.resolve(n.net_name(net)).unwrap();
            obs.insert(c, inputs[k].into(), ObsRole::Input).unwrap();
        }
    }
    for (k, &net) in n.outputs.iter().enumerate() {
        let c = model.resolve(n.net_name(net)).unwrap();
        // an output that is also an observed input keeps its first value
        let _ = obs.insert(c, outputs[k].into(), ObsRole::Expected);
    }
    obs
}

pub const COUNTER_PROCESSES: [&str; 5] = ["comb_in", "comb_out", "p1", "p2", "dff"];

/// Instant model of a subset of the counter's processes with the state
/// signals cut. Returns `None` when the fragment has no components.
pub fn counter_fragment(
    source: &str,
    keep: &[bool],
    granularity: Granularity,
) -> Option<ComponentModel> {
    let mut unit = hdl::parse(source).unwrap();
    let mut k = keep.iter();
    unit.processes.retain(|_| *k.next().unwrap());
    let model = build_model(&unit, granularity).unwrap();
    if model.components().is_empty() {
        return None;
    }
    let state: Vec<&str> = ["Q1", "Q2"]
        .into_iter()
        .filter(|s| model.lookup(s).is_some())
        .collect();
    Some(model.cut_state(&state).unwrap())
}

/// Random observations on a model's external connections.
pub fn random_observations(model: &ComponentModel, picks: &[(bool, bool)]) -> ObservationSet {
    let mut obs = ObservationSet::new();
    for (c, &(observe, v)) in model.externals().zip(picks.iter().cycle()) {
        if observe {
            obs.insert(c, v.into(), ObsRole::Input).unwrap();
        }
    }
    obs
}

/// Proptest settings for integration tests, which have no source file for
/// the default failure persistence to anchor to.
pub fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

/// Next counter value for the mode inputs: 00 counts up, 10 down, 01 resets
/// and 11 loads 3.
pub fn next_count(value: u8, e1: bool, e2: bool) -> u8 {
    match (e1, e2) {
        (false, false) => (value + 1) % 4,
        (true, false) => (value + 3) % 4,
        (false, true) => 0,
        (true, true) => 3,
    }
}

/// 1-from-4 code `A1A2A3A4`: value 0 is `1000`, value 3 is `0001`.
pub fn one_hot(value: u8) -> [bool; 4] {
    let mut a = [false; 4];
    a[value as usize] = true;
    a
}
