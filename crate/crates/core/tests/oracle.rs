//! The diagnosis engine agrees with exhaustive enumeration on small models.

mod common;

use common::*;
use proptest::prelude::*;
use rtldiag::builder::{build_model_from_netlist, Granularity};
use rtldiag::diag::{check_consistency, compute_diagnoses, Consistency, DiagnosisConfig};
use rtldiag::fixtures::{COUNTER_BUG13, COUNTER_BUG30, COUNTER_CORRECT};
use rtldiag::logic::GateKind;
use rtldiag::model::ComponentModel;
use rtldiag::model::ObservationSet;
use rtldiag::prop::PropConfig;
use rtldiag::sim::{inject_netlist, FaultSpec};

fn agree(model: &ComponentModel, obs: &ObservationSet, k: usize) -> Result<(), TestCaseError> {
    let cfg = DiagnosisConfig {
        max_cardinality: Some(k),
        ..Default::default()
    };
    let got = compute_diagnoses(model, obs, &cfg);
    prop_assert!(got.truncated.is_none());
    prop_assert_eq!(&got.diagnoses, &diagnoses(model, obs, k));
    let all: Vec<usize> = (0..model.components().len()).collect();
    for conflict in &got.conflicts {
        let rest: Vec<usize> = all
            .iter()
            .copied()
            .filter(|c| !conflict.contains(c))
            .collect();
        prop_assert!(
            !consistent(model, obs, &rest),
            "not a conflict: {:?}",
            conflict
        );
    }
    Ok(())
}

/// Outputs of a gate-substituted copy on the first input vector, starting at
/// `start`, where they differ from the correct outputs.
fn exposing_vector(
    n: &rtldiag::netlist::Netlist,
    gate: usize,
    kind: usize,
    start: usize,
) -> Option<(Vec<bool>, Vec<bool>)> {
    let g = &n.gates[gate];
    let kind = GateKind::ALL[kind];
    let kind = match (g.kind.is_unary(), kind.is_unary()) {
        (true, _) => {
            if g.kind == GateKind::Not {
                GateKind::Buff
            } else {
                GateKind::Not
            }
        }
        (false, true) => GateKind::Xor,
        _ => kind,
    };
    let fault = FaultSpec::GateSubstitution {
        gate: n.net_name(g.output).to_string(),
        kind,
    };
    let faulty = inject_netlist(n, &fault).ok()?;
    let width = n.inputs.len();
    (0..1usize << width)
        .map(|v| (v + start) % (1 << width))
        .find_map(|v| {
            let inputs: Vec<bool> = (0..width).map(|b| v >> b & 1 == 1).collect();
            let outs = faulty.simulate(&inputs);
            (outs != n.simulate(&inputs)).then_some((inputs, outs))
        })
}

proptest! {
    #![proptest_config(cases(96))]

    #[test]
    fn netlist_diagnoses_match_enumeration(
        net in small_netlist(12),
        start in 0usize..16,
        seen in proptest::collection::vec(prop::bool::weighted(0.75), 4),
        gate in any::<prop::sample::Index>(),
        kind in 0usize..8,
        k in 1usize..=3,
    ) {
        let n = &net.netlist;
        let exposed = exposing_vector(n, gate.index(n.gates.len()), kind, start);
        prop_assume!(exposed.is_some());
        let (inputs, outs) = exposed.unwrap();
        let model = build_model_from_netlist(n).unwrap();
        let obs = netlist_observations(n, &model, &inputs, &seen, &outs);
        agree(&model, &obs, k)?;
    }

    #[test]
    fn netlist_consistency_matches_enumeration(
        net in small_netlist(12),
        inputs in proptest::collection::vec(any::<bool>(), 4),
        outs in proptest::collection::vec(any::<bool>(), 12),
        abnormal in proptest::collection::vec(any::<prop::sample::Index>(), 0..4),
    ) {
        let n = &net.netlist;
        let inputs = &inputs[..n.inputs.len()];
        let model = build_model_from_netlist(n).unwrap();
        let obs = netlist_observations(n, &model, inputs, &[true; 4], &outs[..n.outputs.len()]);
        let mut ab: Vec<usize> = abnormal.iter().map(|i| i.index(n.gates.len())).collect();
        ab.sort_unstable();
        ab.dedup();
        let verdict = check_consistency(&model, &obs, &ab, &PropConfig::default()).unwrap();
        prop_assert_eq!(verdict == Consistency::Consistent, consistent(&model, &obs, &ab));
    }

    #[test]
    fn counter_fragment_diagnoses_match_enumeration(
        variant in 0usize..3,
        keep in proptest::collection::vec(any::<bool>(), 5),
        expression in any::<bool>(),
        picks in proptest::collection::vec((prop::bool::weighted(0.9), any::<bool>()), 1..24),
        k in 1usize..=2,
    ) {
        let source = [COUNTER_CORRECT, COUNTER_BUG30, COUNTER_BUG13][variant];
        let granularity = if expression { Granularity::Expression } else { Granularity::Statement };
        let Some(model) = counter_fragment(source, &keep, granularity) else {
            return Ok(());
        };
        prop_assume!(model.components().len() <= 18);
        let obs = random_observations(&model, &picks);
        prop_assume!(!consistent(&model, &obs, &[]));
        agree(&model, &obs, k)?;
    }
}
