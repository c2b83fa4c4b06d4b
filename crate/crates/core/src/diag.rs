//! Consistency checking and minimal diagnoses via a breadth-first hitting-set
//! DAG.
//!
//! Conflicts are produced on demand by [`check_consistency`]; a node whose
//! path set `H` is consistent is a diagnosis. Nodes are shared between paths
//! with the same `H`, supersets of known diagnoses are closed, and a cached
//! conflict disjoint from `H` is reused instead of calling the prover again.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::model::{ComponentId, ComponentModel, ModelError, ObservationSet};
use crate::prop::{decide, Outcome, PropConfig, PropError};

#[derive(Debug, Clone, Default)]
pub struct DiagnosisConfig {
    /// Largest diagnosis cardinality explored; `None` is unbounded.
    pub max_cardinality: Option<usize>,
    pub propagation: PropConfig,
    /// Stop expanding once this many nodes exist.
    pub max_nodes: Option<usize>,
    pub deadline: Option<Instant>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Consistency {
    Consistent,
    Conflict(Vec<usize>),
}

/// Decides whether `obs` is consistent with the model when the components in
/// `abnormal` are assumed faulty, returning a conflict otherwise.
pub fn check_consistency(
    model: &ComponentModel,
    obs: &ObservationSet,
    abnormal: &[usize],
    config: &PropConfig,
) -> Result<Consistency, PropError> {
    Ok(match decide(model, obs, abnormal, config)? {
        Outcome::Consistent(_) => Consistency::Consistent,
        Outcome::Conflict(c) => Consistency::Conflict(c),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeStatus {
    Diagnosis,
    /// A known diagnosis is a subset of the path set.
    Closed,
    Labeled,
    /// Labeled with a conflict at the cardinality limit, not expanded.
    Pruned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Truncation {
    NodeLimit,
    Deadline,
    RuleBudget,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes: usize,
    pub consistency_checks: usize,
    pub reused_conflicts: usize,
    pub diagnoses: usize,
    pub closed: usize,
    pub pruned: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagnosisResult {
    /// Minimal diagnoses as sorted component indices, by size then
    /// lexicographically.
    pub diagnoses: Vec<Vec<usize>>,
    /// Distinct conflicts returned by the prover, in discovery order.
    pub conflicts: Vec<Vec<usize>>,
    pub stats: SearchStats,
    /// Set when the search stopped before exhausting the DAG.
    pub truncated: Option<Truncation>,
}

/// Computes all minimal diagnoses up to the configured cardinality.
pub fn compute_diagnoses(
    model: &ComponentModel,
    obs: &ObservationSet,
    config: &DiagnosisConfig,
) -> DiagnosisResult {
    let mut result = DiagnosisResult {
        diagnoses: Vec::new(),
        conflicts: Vec::new(),
        stats: SearchStats::default(),
        truncated: None,
    };
    let mut level: BTreeSet<Vec<usize>> = BTreeSet::from([Vec::new()]);
    let mut depth = 0usize;
    while !level.is_empty() {
        let mut next: BTreeSet<Vec<usize>> = BTreeSet::new();
        let at_limit = config.max_cardinality.is_some_and(|m| depth >= m);
        for h in level {
            result.stats.nodes += 1;
            if config.deadline.is_some_and(|d| Instant::now() >= d) {
                result.truncated = Some(Truncation::Deadline);
                break;
            }
            let status = match label(model, obs, &h, config, &mut result) {
                Ok(s) => s,
                Err(PropError::BudgetExceeded(_)) => {
                    result.truncated = Some(Truncation::RuleBudget);
                    break;
                }
            };
            match status {
                Label::Closed => result.stats.closed += 1,
                Label::Diagnosis => {
                    result.stats.diagnoses += 1;
                    result.diagnoses.push(h);
                }
                Label::Conflict(_) if at_limit => result.stats.pruned += 1,
                Label::Conflict(conflict) => {
                    for c in conflict {
                        let mut child = h.clone();
                        let pos = child
                            .binary_search(&c)
                            .expect_err("conflict disjoint from path");
                        child.insert(pos, c);
                        next.insert(child);
                    }
                }
            }
        }
        if result.truncated.is_some() {
            break;
        }
        if config
            .max_nodes
            .is_some_and(|m| result.stats.nodes + next.len() > m)
        {
            if !next.is_empty() {
                result.truncated = Some(Truncation::NodeLimit);
            }
            break;
        }
        level = next;
        depth += 1;
    }
    result
        .diagnoses
        .sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    result
}

enum Label {
    Closed,
    Diagnosis,
    Conflict(Vec<usize>),
}

fn label(
    model: &ComponentModel,
    obs: &ObservationSet,
    h: &[usize],
    config: &DiagnosisConfig,
    result: &mut DiagnosisResult,
) -> Result<Label, PropError> {
    if result.diagnoses.iter().any(|d| is_subset(d, h)) {
        return Ok(Label::Closed);
    }
    let reusable = result
        .conflicts
        .iter()
        .filter(|c| c.iter().all(|x| h.binary_search(x).is_err()))
        .min_by_key(|c| c.len());
    if let Some(c) = reusable {
        result.stats.reused_conflicts += 1;
        return Ok(Label::Conflict(c.clone()));
    }
    result.stats.consistency_checks += 1;
    match check_consistency(model, obs, h, &config.propagation)? {
        Consistency::Consistent => Ok(Label::Diagnosis),
        Consistency::Conflict(c) => {
            if !result.conflicts.contains(&c) {
                result.conflicts.push(c.clone());
            }
            Ok(Label::Conflict(c))
        }
    }
}

fn is_subset(small: &[usize], big: &[usize]) -> bool {
    small.iter().all(|x| big.binary_search(x).is_ok())
}

/// True iff assuming exactly `candidate` abnormal is consistent with `obs`.
pub fn verify_diagnosis(
    model: &ComponentModel,
    obs: &ObservationSet,
    candidate: &[usize],
    config: &PropConfig,
) -> Result<bool, PropError> {
    Ok(check_consistency(model, obs, candidate, config)? == Consistency::Consistent)
}

/// True iff `candidate` is a diagnosis none of whose one-smaller subsets is.
/// Consistency is monotone in the abnormal set, so this decides minimality.
pub fn is_minimal_diagnosis(
    model: &ComponentModel,
    obs: &ObservationSet,
    candidate: &[usize],
    config: &PropConfig,
) -> Result<bool, PropError> {
    if !verify_diagnosis(model, obs, candidate, config)? {
        return Ok(false);
    }
    for i in 0..candidate.len() {
        let mut smaller = candidate.to_vec();
        smaller.remove(i);
        if verify_diagnosis(model, obs, &smaller, config)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Component indices for ids, sorted and deduplicated.
pub fn resolve_components(
    model: &ComponentModel,
    ids: &[ComponentId],
) -> Result<Vec<usize>, ModelError> {
    let mut out = ids
        .iter()
        .map(|id| {
            model
                .component_index(id)
                .ok_or_else(|| ModelError::UnknownComponent(id.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Maps diagnoses over unfolded component instances back to their source
/// components: instance coordinates are stripped, duplicates removed and
/// non-minimal images dropped.
pub fn project_to_source(
    model: &ComponentModel,
    diagnoses: &[Vec<usize>],
) -> Vec<Vec<ComponentId>> {
    let mut images: BTreeMap<Vec<ComponentId>, ()> = BTreeMap::new();
    for d in diagnoses {
        let set: BTreeSet<_> = d.iter().map(|&i| model.component(i).id.base()).collect();
        images.insert(set.into_iter().collect(), ());
    }
    let images: Vec<_> = images.into_keys().collect();
    let mut kept: Vec<Vec<_>> = images
        .iter()
        .filter(|a| {
            !images
                .iter()
                .any(|b| b.len() < a.len() && b.iter().all(|x| a.contains(x)))
        })
        .cloned()
        .collect();
    kept.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    kept
}
