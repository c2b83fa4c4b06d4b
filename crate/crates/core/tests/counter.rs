//! The 2-bit counter: its specified automaton, the inverted-output and
//! wrong-operator variants, and temporal diagnosis of both.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{cases, next_count, one_hot};
use proptest::prelude::*;
use rtldiag::builder::{build_model, Granularity};
use rtldiag::diag::{project_to_source, verify_diagnosis, DiagnosisConfig};
use rtldiag::fixtures::{
    COUNTER_BUG13, COUNTER_BUG30, COUNTER_CORRECT, COUNT_UP_STIMULUS, INSTANT_BUG30_OBS,
    TEMPORAL_BUG13_STIMULUS,
};
use rtldiag::hdl::{self, DesignUnit};
use rtldiag::logic::Value;
use rtldiag::model::ObservationSet;
use rtldiag::prop::{propagate, Outcome, PropConfig};
use rtldiag::report::{diagnose_instant, diagnose_temporal, DiagnosisReport};
use rtldiag::sim::simulate;
use rtldiag::stimulus::{Bit, Stimulus, TimePoint};
use rtldiag::temporal::unfold;

fn unit(src: &str) -> DesignUnit {
    hdl::parse(src).unwrap()
}

fn point(inputs: &[(&str, bool)], state: &[(&str, bool)], expect: &[(&str, bool)]) -> TimePoint {
    let map = |xs: &[(&str, bool)]| -> BTreeMap<String, Bit> {
        xs.iter()
            .map(|&(n, v)| (n.to_string(), Bit(v.into())))
            .collect()
    };
    TimePoint {
        inputs: map(inputs),
        state: map(state),
        expect: map(expect),
    }
}

fn bits(value: u8) -> (bool, bool) {
    (value & 2 != 0, value & 1 != 0)
}

fn outputs(trace: &rtldiag::sim::Trace, t: usize) -> [bool; 4] {
    ["A1", "A2", "A3", "A4"].map(|n| trace.settled(t, n).unwrap().as_bool())
}

fn count(trace: &rtldiag::sim::Trace, t: usize) -> u8 {
    let q = |n| trace.settled(t, n).unwrap().as_bool() as u8;
    2 * q("Q1") + q("Q2")
}

/// Settles `value` with the clock low, then raises the clock. Returns the
/// outputs before the edge and the count after it.
fn step(u: &DesignUnit, value: u8, e1: bool, e2: bool) -> ([bool; 4], u8) {
    let (q1, q2) = bits(value);
    let stim = Stimulus {
        time: vec![
            point(
                &[("CLK", false), ("E1", e1), ("E2", e2)],
                &[("Q1", q1), ("Q2", q2)],
                &[],
            ),
            point(&[("CLK", true)], &[], &[]),
        ],
    };
    let trace = simulate(u, &stim).unwrap();
    (outputs(&trace, 0), count(&trace, 1))
}

#[test]
fn correct_design_follows_its_automaton() {
    let u = unit(COUNTER_CORRECT);
    for value in 0..4 {
        for (e1, e2) in [(false, false), (true, false), (false, true), (true, true)] {
            let (a, next) = step(&u, value, e1, e2);
            assert_eq!(a, one_hot(value), "outputs in state {value}");
            assert_eq!(
                next,
                next_count(value, e1, e2),
                "from {value} with E1E2={}{}",
                e1 as u8,
                e2 as u8
            );
        }
    }
}

#[test]
fn inverted_line_30_only_changes_the_outputs() {
    let u = unit(COUNTER_BUG30);
    let mut one_hot_violations = 0;
    for value in 0..4 {
        let (q1, q2) = bits(value);
        // NQ1 copies Q1, NQ2 stays the complement of Q2
        let expected = [!q2 && q1, q2 && q1, !q2 && q1, q1 && q2];
        for (e1, e2) in [(false, false), (true, false), (false, true), (true, true)] {
            let (a, next) = step(&u, value, e1, e2);
            assert_eq!(a, expected, "outputs in state {value}");
            assert_eq!(next, next_count(value, e1, e2));
        }
        if expected.iter().filter(|&&b| b).count() != 1 {
            one_hot_violations += 1;
        }
    }
    assert_eq!(one_hot_violations, 4);
    let (a, _) = step(&u, 2, true, false);
    assert_eq!(a, [true, false, true, false]);
}

#[test]
fn wrong_operator_on_line_13_breaks_counting_up() {
    let run = |src: &str| {
        let trace = simulate(&unit(src), &Stimulus::parse(COUNT_UP_STIMULUS).unwrap()).unwrap();
        (0..trace.times.len())
            .map(|t| count(&trace, t))
            .collect::<Vec<_>>()
    };
    let good = run(COUNTER_CORRECT);
    let bad = run(COUNTER_BUG13);
    // each count holds for a low and a high clock phase after the edge
    let expected_good: Vec<u8> = (0..good.len()).map(|t| (t.div_ceil(2) % 4) as u8).collect();
    assert_eq!(good, expected_good);
    assert_eq!(&bad[..6], &[0, 3, 3, 2, 2, 3]);
    let trace = simulate(
        &unit(COUNTER_CORRECT),
        &Stimulus::parse(COUNT_UP_STIMULUS).unwrap(),
    )
    .unwrap();
    let codes: Vec<[bool; 4]> = [0, 2, 4, 6].map(|t| outputs(&trace, t)).to_vec();
    assert_eq!(codes, vec![one_hot(0), one_hot(1), one_hot(2), one_hot(3)]);
}

fn label_sets(sets: &[Vec<rtldiag::report::ComponentRef>]) -> BTreeSet<BTreeSet<String>> {
    sets.iter()
        .map(|s| s.iter().map(|c| c.label.clone()).collect())
        .collect()
}

fn labels(xs: &[&[&str]]) -> BTreeSet<BTreeSet<String>> {
    xs.iter()
        .map(|s| s.iter().map(|x| x.to_string()).collect())
        .collect()
}

#[test]
fn instant_diagnosis_of_line_30() {
    let stim = Stimulus::parse(INSTANT_BUG30_OBS).unwrap();
    let r = diagnose_instant(
        "counter",
        &unit(COUNTER_BUG30),
        &stim,
        &["Q1", "Q2"],
        Granularity::Statement,
        &DiagnosisConfig::default(),
    )
    .unwrap();
    assert_eq!(r.components, 14);
    assert_eq!(
        label_sets(&r.conflicts),
        labels(&[
            &["NQ1 <= Q1", "NQ2 <= not(Q2)", "A1 <= NQ2 and NQ1"],
            &["NQ1 <= Q1", "A3 <= NQ2 and Q1", "A1 <= NQ2 and NQ1"],
        ])
    );
    let diags: Vec<BTreeSet<String>> = r
        .diagnoses
        .iter()
        .map(|d| d.components.iter().map(|c| c.label.clone()).collect())
        .collect();
    assert_eq!(diags.len(), 3);
    assert_eq!(diags.iter().filter(|d| d.len() == 1).count(), 2);
    assert_eq!(
        diags.into_iter().collect::<BTreeSet<_>>(),
        labels(&[
            &["A1 <= NQ2 and NQ1"],
            &["NQ1 <= Q1"],
            &["NQ2 <= not(Q2)", "A3 <= NQ2 and Q1"]
        ])
    );
    assert!(r.truncated.is_none());
    assert_eq!(DiagnosisReport::from_json(&r.to_json()).unwrap(), r);
}

#[test]
fn empty_and_full_candidates() {
    let u = unit(COUNTER_BUG30);
    let model = build_model(&u, Granularity::Statement)
        .unwrap()
        .cut_state(&["Q1", "Q2"])
        .unwrap();
    let obs = Stimulus::parse(INSTANT_BUG30_OBS)
        .unwrap()
        .instant_observations(&model)
        .unwrap();
    let cfg = PropConfig::default();
    assert!(!verify_diagnosis(&model, &obs, &[], &cfg).unwrap());
    let all: Vec<usize> = (0..model.components().len()).collect();
    assert!(verify_diagnosis(&model, &obs, &all, &cfg).unwrap());
}

/// A single settled instant in state 2 while counting down, with the
/// outputs the specification requires.
fn state_two_expectation() -> Stimulus {
    Stimulus {
        time: vec![point(
            &[("CLK", false), ("E1", true), ("E2", false)],
            &[("Q1", true), ("Q2", false)],
            &[("A1", false), ("A2", false), ("A3", true), ("A4", false)],
        )],
    }
}

fn source_lines(r: &DiagnosisReport) -> Vec<BTreeSet<u32>> {
    r.source_diagnoses
        .as_ref()
        .unwrap()
        .iter()
        .map(|d| d.iter().filter_map(|c| c.id.line()).collect())
        .collect()
}

#[test]
fn temporal_diagnosis_contains_line_30() {
    let cfg = DiagnosisConfig {
        max_cardinality: Some(1),
        ..Default::default()
    };
    let r = diagnose_temporal(
        "counter",
        &unit(COUNTER_BUG30),
        &state_two_expectation(),
        Granularity::Statement,
        &cfg,
    )
    .unwrap();
    assert!(
        source_lines(&r).contains(&BTreeSet::from([30])),
        "{:?}",
        source_lines(&r)
    );
    let ok = diagnose_temporal(
        "counter",
        &unit(COUNTER_CORRECT),
        &state_two_expectation(),
        Granularity::Statement,
        &cfg,
    )
    .unwrap();
    assert_eq!(ok.diagnoses.len(), 1);
    assert!(ok.diagnoses[0].components.is_empty());
}

#[test]
fn temporal_diagnosis_contains_line_13() {
    let stim = Stimulus::parse(TEMPORAL_BUG13_STIMULUS).unwrap();
    let cfg = DiagnosisConfig {
        max_cardinality: Some(1),
        ..Default::default()
    };
    let r = diagnose_temporal(
        "counter",
        &unit(COUNTER_BUG13),
        &stim,
        Granularity::Statement,
        &cfg,
    )
    .unwrap();
    assert!(r.truncated.is_none());
    assert!(source_lines(&r).contains(&BTreeSet::from([13])));
    let ok = diagnose_temporal(
        "counter",
        &unit(COUNTER_CORRECT),
        &stim,
        Granularity::Statement,
        &cfg,
    )
    .unwrap();
    assert!(ok.diagnoses[0].components.is_empty());
}

#[test]
fn expression_level_diagnosis_reaches_the_operator() {
    let stim = Stimulus::parse(TEMPORAL_BUG13_STIMULUS).unwrap();
    let cfg = DiagnosisConfig {
        max_cardinality: Some(1),
        ..Default::default()
    };
    let r = diagnose_temporal(
        "counter",
        &unit(COUNTER_BUG13),
        &stim,
        Granularity::Expression,
        &cfg,
    )
    .unwrap();
    let src = r.source_diagnoses.unwrap();
    // the replaced operator is the `and` joining the two parenthesized terms
    let text = COUNTER_BUG13.lines().nth(12).unwrap();
    let column = text.find(") and (").unwrap() as u32 + 3;
    assert!(
        src.iter().any(|d| d.len() == 1
            && d[0].id.line() == Some(13)
            && d[0].id.to_string() == format!("expr@13:{column}")),
        "{:?}",
        src.iter()
            .map(|d| d.iter().map(|c| c.id.to_string()).collect::<Vec<_>>())
            .collect::<Vec<_>>()
    );
}

#[test]
fn unfolded_projection_merges_instances() {
    let stim = Stimulus::parse(TEMPORAL_BUG13_STIMULUS).unwrap();
    let u = unit(COUNTER_BUG13);
    let tm = unfold(&u, 3, Granularity::Statement).unwrap();
    let obs = tm.apply_stimulus(&stim).unwrap();
    let r = rtldiag::diag::compute_diagnoses(
        &tm.model,
        &obs,
        &DiagnosisConfig {
            max_cardinality: Some(1),
            ..Default::default()
        },
    );
    let images = project_to_source(&tm.model, &r.diagnoses);
    assert!(images.len() < r.diagnoses.len());
    assert!(images
        .iter()
        .all(|d| d.iter().all(|c| c.instance.is_none())));
}

/// Environment and event lines entailed by the unfolded model, compared to
/// the simulator on the same stimulus.
fn agree_with_simulation(src: &str, stim: &Stimulus) -> Result<(), TestCaseError> {
    let u = unit(src);
    let trace = simulate(&u, stim).unwrap();
    let tm = unfold(&u, stim.time.len(), Granularity::Statement).unwrap();
    let obs: ObservationSet = tm.apply_stimulus(stim).unwrap();
    let Outcome::Consistent(fix) = propagate(&tm.model, &obs, &[], &PropConfig::default()).unwrap()
    else {
        return Err(TestCaseError::fail("correct run contradicts itself"));
    };
    let n = tm.cycles();
    prop_assert_eq!(trace.names.as_slice(), tm.names());
    for (j, tt) in trace.times.iter().enumerate() {
        prop_assert_eq!(tt.envs.len(), n + 1);
        for i in 0..=n {
            for (k, name) in trace.names.iter().enumerate() {
                let line = tm.env(j, i, name).unwrap();
                prop_assert_eq!(
                    fix.value(line),
                    Some(Value::from(tt.envs[i][k])),
                    "{} t{} c{}",
                    name,
                    j,
                    i
                );
            }
        }
        for i in 0..n {
            if j == 0 && i == 0 {
                continue;
            }
            for (k, name) in trace.names[..trace.signal_count].iter().enumerate() {
                let changed = if i == 0 {
                    tt.envs[0][k] != trace.times[j - 1].envs[n][k]
                } else {
                    tt.events[i - 1][k]
                };
                let line = tm.event(j, i, name).unwrap();
                prop_assert_eq!(
                    fix.value(line),
                    Some(Value::from(changed)),
                    "event {} t{} c{}",
                    name,
                    j,
                    i
                );
            }
        }
        for (p, label) in trace.processes.iter().enumerate() {
            // the first cycle of the first time point runs every process
            for i in (j == 0) as usize..n {
                let act = tm.model.resolve(&format!("{label}@t{j}.c{i}/act")).unwrap();
                prop_assert_eq!(
                    fix.value(act),
                    Some(Value::from(tt.active[i][p])),
                    "{} active t{} c{}",
                    label,
                    j,
                    i
                );
            }
        }
    }
    Ok(())
}

fn random_stimulus() -> impl Strategy<Value = Stimulus> {
    let later = (
        any::<bool>(),
        proptest::option::of(any::<bool>()),
        proptest::option::of(any::<bool>()),
    );
    (any::<[bool; 5]>(), proptest::collection::vec(later, 0..3)).prop_map(|(first, rest)| {
        let [clk, e1, e2, q1, q2] = first;
        let mut time = vec![point(
            &[("CLK", clk), ("E1", e1), ("E2", e2)],
            &[("Q1", q1), ("Q2", q2)],
            &[],
        )];
        for (clk, e1, e2) in rest {
            let mut ins = vec![("CLK", clk)];
            ins.extend(e1.map(|v| ("E1", v)));
            ins.extend(e2.map(|v| ("E2", v)));
            time.push(point(&ins, &[], &[]));
        }
        Stimulus { time }
    })
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn unfolded_model_matches_simulation(variant in 0usize..3, stim in random_stimulus()) {
        agree_with_simulation([COUNTER_CORRECT, COUNTER_BUG30, COUNTER_BUG13][variant], &stim)?;
    }
}

#[test]
fn count_up_run_matches_simulation() {
    agree_with_simulation(
        COUNTER_CORRECT,
        &Stimulus::parse(COUNT_UP_STIMULUS).unwrap(),
    )
    .unwrap();
}
