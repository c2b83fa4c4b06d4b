//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test -p rtldiag --test acceptance`. Criteria listed in
//! `KNOWN_RED` are expected to fail for documented reasons; the run fails if
//! any criterion disagrees with its expectation in either direction.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rtldiag::bench::{median, run_bench, BenchConfig};
use rtldiag::builder::{build_model_from_netlist, Granularity};
use rtldiag::diag::{compute_diagnoses, DiagnosisConfig};
use rtldiag::fixtures::{
    self, COUNTER_BUG13, COUNTER_BUG30, COUNTER_CORRECT, INSTANT_BUG30_OBS, TEMPORAL_BUG13_STIMULUS,
};
use rtldiag::hdl;
use rtldiag::model::{ConnId, ObsRole, ObservationSet};
use rtldiag::netlist::{parse_bench, Netlist};
use rtldiag::report::{diagnose_instant, diagnose_temporal};
use rtldiag::sim::simulate;
use rtldiag::stimulus::{Bit, Stimulus, TimePoint};

/// Criteria that cannot pass with the shipped fixtures.
const KNOWN_RED: &[u32] = &[6, 8];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn label_set<'a>(xs: impl IntoIterator<Item = &'a str>) -> BTreeSet<String> {
    xs.into_iter().map(str::to_string).collect()
}

fn instant_reproduction() -> Verdict {
    let stim = Stimulus::parse(INSTANT_BUG30_OBS).unwrap();
    let cfg = DiagnosisConfig {
        max_cardinality: Some(2),
        ..Default::default()
    };
    let start = Instant::now();
    let r = diagnose_instant(
        "counter",
        &hdl::parse(COUNTER_BUG30).unwrap(),
        &stim,
        &["Q1", "Q2"],
        Granularity::Statement,
        &cfg,
    )
    .unwrap();
    let elapsed = start.elapsed();
    let conflicts: BTreeSet<BTreeSet<String>> = r
        .conflicts
        .iter()
        .map(|c| label_set(c.iter().map(|x| x.label.as_str())))
        .collect();
    let diagnoses: BTreeSet<BTreeSet<String>> = r
        .diagnoses
        .iter()
        .map(|d| label_set(d.components.iter().map(|x| x.label.as_str())))
        .collect();
    let want_conflicts = BTreeSet::from([
        label_set(["NQ1 <= Q1", "NQ2 <= not(Q2)", "A1 <= NQ2 and NQ1"]),
        label_set(["NQ1 <= Q1", "A3 <= NQ2 and Q1", "A1 <= NQ2 and NQ1"]),
    ]);
    let want_diagnoses = BTreeSet::from([
        label_set(["A1 <= NQ2 and NQ1"]),
        label_set(["NQ1 <= Q1"]),
        label_set(["NQ2 <= not(Q2)", "A3 <= NQ2 and Q1"]),
    ]);
    let pass = conflicts == want_conflicts
        && diagnoses == want_diagnoses
        && elapsed < Duration::from_secs(1);
    verdict(
        pass,
        format!(
            "{} conflicts, {} diagnoses (2 single, 1 dual expected), {:.2} ms",
            conflicts.len(),
            diagnoses.len(),
            elapsed.as_secs_f64() * 1e3
        ),
    )
}

const LISTED_STATEMENTS: [u32; 8] = [10, 13, 14, 15, 19, 38, 40, 41];

fn temporal_scenario() -> Verdict {
    let stim = Stimulus::parse(TEMPORAL_BUG13_STIMULUS).unwrap();
    let cfg = DiagnosisConfig {
        max_cardinality: Some(2),
        ..Default::default()
    };
    let start = Instant::now();
    let r = diagnose_temporal(
        "counter",
        &hdl::parse(COUNTER_BUG13).unwrap(),
        &stim,
        Granularity::Statement,
        &cfg,
    )
    .unwrap();
    let elapsed = start.elapsed();
    let lines = |ids: &[rtldiag::report::ComponentRef]| -> BTreeSet<u32> {
        ids.iter().filter_map(|c| c.id.line()).collect()
    };
    let singles: Vec<&rtldiag::report::DiagnosisEntry> =
        r.diagnoses.iter().filter(|d| d.cardinality == 1).collect();
    let duals = r.diagnoses.iter().filter(|d| d.cardinality == 2).count();
    let single_lines: BTreeSet<u32> = singles.iter().flat_map(|d| lines(&d.components)).collect();
    let listed: BTreeSet<u32> = LISTED_STATEMENTS.into();
    let spread: Vec<BTreeSet<u32>> = r
        .source_diagnoses
        .as_ref()
        .unwrap()
        .iter()
        .map(|d| lines(d))
        .filter(|l| l.len() > 1)
        .collect();
    let pass = r.truncated.is_none()
        && single_lines.contains(&13)
        && single_lines.is_subset(&listed)
        && elapsed < Duration::from_secs(30);
    verdict(
        pass,
        format!(
            "single-fault statements {single_lines:?} (listed {listed:?}); {} single / {duals} dual instance diagnoses \
             (published 25 / 66); dual images spanning two statements: {spread:?}; {:.2} s",
            singles.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn automata() -> Verdict {
    let start = Instant::now();
    let step = |u: &hdl::DesignUnit, value: u8, e1: bool, e2: bool| {
        let (q1, q2) = (value & 2 != 0, value & 1 != 0);
        let bits = |xs: &[(&str, bool)]| {
            xs.iter()
                .map(|&(n, v)| (n.to_string(), Bit(v.into())))
                .collect()
        };
        let stim = Stimulus {
            time: vec![
                TimePoint {
                    inputs: bits(&[("CLK", false), ("E1", e1), ("E2", e2)]),
                    state: bits(&[("Q1", q1), ("Q2", q2)]),
                    expect: Default::default(),
                },
                TimePoint {
                    inputs: bits(&[("CLK", true)]),
                    ..Default::default()
                },
            ],
        };
        let t = simulate(u, &stim).unwrap();
        let a = ["A1", "A2", "A3", "A4"].map(|n| t.settled(0, n).unwrap().as_bool());
        let q = |n| t.settled(1, n).unwrap().as_bool() as u8;
        (a, 2 * q("Q1") + q("Q2"))
    };
    let correct = hdl::parse(COUNTER_CORRECT).unwrap();
    let faulty = hdl::parse(COUNTER_BUG30).unwrap();
    let (mut good, mut bad) = (0, 0);
    for value in 0..4u8 {
        let (q1, q2) = (value & 2 != 0, value & 1 != 0);
        let faulty_out = [!q2 && q1, q2 && q1, !q2 && q1, q1 && q2];
        for (e1, e2) in [(false, false), (true, false), (false, true), (true, true)] {
            let next = common::next_count(value, e1, e2);
            if step(&correct, value, e1, e2) == (common::one_hot(value), next) {
                good += 1;
            }
            if step(&faulty, value, e1, e2) == (faulty_out, next) {
                bad += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        good == 16 && bad == 16 && elapsed < Duration::from_secs(1),
        format!(
            "correct {good}/16, line-30 variant {bad}/16 transitions, {:.1} ms",
            elapsed.as_secs_f64() * 1e3
        ),
    )
}

fn oracle_equivalence() -> Verdict {
    let mut runner = TestRunner::deterministic();
    let cfg = DiagnosisConfig {
        max_cardinality: Some(2),
        ..Default::default()
    };
    let (mut models, mut mismatches, mut nontrivial) = (0, 0, 0);
    let mut check = |model: &rtldiag::model::ComponentModel, obs: &ObservationSet| {
        models += 1;
        let want = common::diagnoses(model, obs, 2);
        if want != vec![Vec::<usize>::new()] {
            nontrivial += 1;
        }
        if compute_diagnoses(model, obs, &cfg).diagnoses != want {
            mismatches += 1;
        }
    };
    let nets = common::small_netlist(15);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..60 {
        let net = nets.new_tree(&mut runner).unwrap().current();
        let n = &net.netlist;
        let model = build_model_from_netlist(n).unwrap();
        let inputs: Vec<bool> = (0..n.inputs.len()).map(|_| rng.gen()).collect();
        let outputs: Vec<bool> = (0..n.outputs.len()).map(|_| rng.gen()).collect();
        let seen: Vec<bool> = (0..n.inputs.len()).map(|_| rng.gen_bool(0.8)).collect();
        check(
            &model,
            &common::netlist_observations(n, &model, &inputs, &seen, &outputs),
        );
    }
    let sources = [COUNTER_CORRECT, COUNTER_BUG30, COUNTER_BUG13];
    let mut fragments = 0;
    while fragments < 30 {
        let keep: Vec<bool> = (0..5).map(|_| rng.gen()).collect();
        let granularity = if rng.gen() {
            Granularity::Expression
        } else {
            Granularity::Statement
        };
        let Some(model) =
            common::counter_fragment(sources[rng.gen_range(0..3)], &keep, granularity)
        else {
            continue;
        };
        if model.components().len() > 15 {
            continue;
        }
        let picks: Vec<(bool, bool)> = (0..model.connection_count())
            .map(|_| (rng.gen_bool(0.9), rng.gen()))
            .collect();
        check(&model, &common::random_observations(&model, &picks));
        fragments += 1;
    }
    verdict(
        models >= 50 && mismatches == 0,
        format!("{models} models (60 netlists, 30 counter fragments), {nontrivial} with faults observed, {mismatches} mismatches"),
    )
}

fn netlist(name: &str) -> Netlist {
    parse_bench(name, fixtures::iscas85(name).unwrap()).unwrap()
}

fn containment() -> Verdict {
    let mut found = 0;
    let mut total = 0;
    let mut parts = Vec::new();
    for (name, vectors) in [("c432", 34), ("c499", 33), ("c880", 33)] {
        let cfg = BenchConfig {
            vectors,
            repeats: 1,
            seed: 11,
            ..Default::default()
        };
        let r = run_bench(&netlist(name), &cfg);
        let hits = r.runs.iter().filter(|x| x.contains_fault).count();
        found += hits;
        total += r.runs.len();
        parts.push(format!("{name} {hits}/{}", r.runs.len()));
    }
    verdict(
        found == 100 && total == 100,
        format!("{found}/{total} ({})", parts.join(", ")),
    )
}

/// Published (gates, inputs, outputs) per circuit.
const PUBLISHED_SIZES: [(&str, usize, usize, usize); 10] = [
    ("c432", 160, 32, 7),
    ("c499", 202, 41, 32),
    ("c880", 383, 60, 26),
    ("c1355", 546, 41, 32),
    ("c1908", 880, 33, 25),
    ("c2670", 1193, 233, 140),
    ("c3540", 1669, 50, 22),
    ("c5315", 2307, 178, 123),
    ("c6288", 2406, 32, 32),
    ("c7552", 3512, 207, 108),
];

fn structural_counts() -> Verdict {
    let mut diffs = Vec::new();
    for (name, g, i, o) in PUBLISHED_SIZES {
        let n = netlist(name);
        let got = (n.gates.len(), n.inputs.len(), n.outputs.len());
        if got != (g, i, o) {
            diffs.push(format!("{name} {got:?} vs {:?}", (g, i, o)));
        }
    }
    verdict(
        diffs.is_empty(),
        format!("{}/10 match; {}", 10 - diffs.len(), diffs.join(", ")),
    )
}

fn performance() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, limit_ms) in [
        ("c432", 50.0),
        ("c499", 100.0),
        ("c880", 100.0),
        ("c1908", 2000.0),
    ] {
        let cfg = BenchConfig {
            vectors: 30,
            repeats: 3,
            seed: 5,
            ..Default::default()
        };
        let r = run_bench(&netlist(name), &cfg);
        ok &= r.error.is_none() && r.median_ms <= limit_ms;
        parts.push(format!("{name} {:.2} ms (<= {limit_ms})", r.median_ms));
    }
    let cfg = BenchConfig {
        vectors: 5,
        repeats: 1,
        seed: 5,
        time_budget: Some(Duration::from_secs(5)),
        ..Default::default()
    };
    let r = run_bench(&netlist("c6288"), &cfg);
    ok &= r.error.is_none();
    parts.push(format!(
        "c6288 {:.0} ms median, {}/{} runs budget-limited at 5 s",
        r.median_ms,
        r.budget_limited,
        r.runs.len()
    ));
    verdict(ok, parts.join(", "))
}

/// Published (median, average) single-fault diagnosis counts.
const PUBLISHED_COUNTS: [(&str, f64, f64); 3] = [
    ("c432", 1.0, 1.40),
    ("c499", 2.0, 2.43),
    ("c880", 4.0, 4.06),
];

/// Counts under an alternative sampling: flip one or two outputs of the
/// correct circuit and keep cases with at least one single-fault diagnosis.
fn flipped_output_counts(n: &Netlist, cases: usize, seed: u64) -> (f64, f64) {
    let model = build_model_from_netlist(n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = DiagnosisConfig {
        max_cardinality: Some(1),
        ..Default::default()
    };
    let mut counts = Vec::new();
    while counts.len() < cases {
        let inputs: Vec<bool> = (0..n.inputs.len()).map(|_| rng.gen()).collect();
        let mut outputs = n.simulate(&inputs);
        let first = rng.gen_range(0..outputs.len());
        outputs[first] = !outputs[first];
        if rng.gen() {
            let second = rng.gen_range(0..outputs.len());
            if second != first {
                outputs[second] = !outputs[second];
            }
        }
        let mut obs = ObservationSet::new();
        for (&net, &v) in n.inputs.iter().zip(&inputs) {
            obs.insert(ConnId(net as u32), v.into(), ObsRole::Input)
                .unwrap();
        }
        for (&net, &v) in n.outputs.iter().zip(&outputs) {
            let _ = obs.insert(ConnId(net as u32), v.into(), ObsRole::Expected);
        }
        let r = compute_diagnoses(&model, &obs, &cfg);
        if r.diagnoses.is_empty() || r.diagnoses[0].is_empty() {
            continue;
        }
        counts.push(r.diagnoses.len() as f64);
    }
    (
        median(&counts),
        counts.iter().sum::<f64>() / counts.len() as f64,
    )
}

fn diagnosis_counts() -> Verdict {
    let within = |ours: f64, theirs: f64| ours / theirs <= 10.0 && theirs / ours <= 10.0;
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, pub_median, pub_avg) in PUBLISHED_COUNTS {
        let n = netlist(name);
        let cfg = BenchConfig {
            vectors: 100,
            repeats: 1,
            seed: 0,
            ..Default::default()
        };
        let r = run_bench(&n, &cfg);
        ok &= within(r.median_diagnoses, pub_median) && within(r.avg_diagnoses, pub_avg);
        let (flip_median, flip_avg) = flipped_output_counts(&n, 100, 0);
        parts.push(format!(
            "{name} median {} avg {:.2} (published {pub_median} / {pub_avg:.2}; flipped outputs {flip_median} / {flip_avg:.2})",
            r.median_diagnoses, r.avg_diagnoses
        ));
    }
    verdict(ok, parts.join("; "))
}

type Criterion = (u32, &'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (1, "instant counter reproduction", instant_reproduction),
        (2, "temporal counter scenario", temporal_scenario),
        (3, "counter automata", automata),
        (4, "oracle equivalence", oracle_equivalence),
        (5, "fault containment", containment),
        (6, "benchmark circuit sizes", structural_counts),
        (7, "single-fault runtime", performance),
        (8, "single-fault diagnosis counts", diagnosis_counts),
    ];
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        let v = run();
        let known_red = KNOWN_RED.contains(&id);
        let tag = if v.pass { "PASS" } else { "FAIL" };
        let note = if known_red { " [known red]" } else { "" };
        println!("{tag} {id} {name}{note}: {}", v.detail);
        if v.pass == known_red {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("criteria not matching their expectation: {unexpected:?}");
        ExitCode::FAILURE
    }
}
