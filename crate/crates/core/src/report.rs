//! End-to-end diagnosis runs and their serializable reports.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builder::{build_model, Granularity};
use crate::diag::{compute_diagnoses, project_to_source, DiagnosisConfig, SearchStats, Truncation};
use crate::hdl::{check_static, DesignUnit, HdlError};
use crate::logic::Value;
use crate::model::{ComponentId, ComponentModel, ModelError, ObsRole, ObservationSet};
use crate::stimulus::{Stimulus, StimulusError};
use crate::temporal::unfold;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Hdl(#[from] HdlError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stimulus(#[from] StimulusError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Instant,
    Temporal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentRef {
    pub id: ComponentId,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationEntry {
    pub connection: String,
    pub value: Value,
    pub role: ObsRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosisEntry {
    pub cardinality: usize,
    pub components: Vec<ComponentRef>,
}

/// Wall-clock phases in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub model_build_ms: f64,
    pub diagnosis_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisReport {
    pub design: String,
    pub mode: Mode,
    pub granularity: Granularity,
    pub max_cardinality: Option<usize>,
    pub components: usize,
    pub connections: usize,
    pub observations: Vec<ObservationEntry>,
    pub conflicts: Vec<Vec<ComponentRef>>,
    pub diagnoses: Vec<DiagnosisEntry>,
    /// Temporal mode only: diagnoses mapped back to source components.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_diagnoses: Option<Vec<Vec<ComponentRef>>>,
    pub stats: SearchStats,
    pub truncated: Option<Truncation>,
    pub timing: Timing,
}

impl DiagnosisReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Short human-readable summary.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} ({:?}, {} components, {} connections)\n",
            self.design, self.mode, self.components, self.connections
        );
        for c in &self.conflicts {
            out.push_str(&format!("conflict  {}\n", labels(c)));
        }
        for d in &self.diagnoses {
            out.push_str(&format!("diagnosis {}\n", labels(&d.components)));
        }
        if let Some(src) = &self.source_diagnoses {
            for d in src {
                out.push_str(&format!("source    {}\n", labels(d)));
            }
        }
        if let Some(t) = self.truncated {
            out.push_str(&format!("search truncated: {t:?}\n"));
        }
        out.push_str(&format!(
            "{} diagnoses, {} conflicts, {} nodes, {:.3} ms\n",
            self.diagnoses.len(),
            self.conflicts.len(),
            self.stats.nodes,
            self.timing.diagnosis_ms
        ));
        out
    }
}

fn labels(cs: &[ComponentRef]) -> String {
    let parts: Vec<String> = cs
        .iter()
        .map(|c| format!("[{}] {}", c.id, c.label))
        .collect();
    format!("{{{}}}", parts.join(", "))
}

fn refs(model: &ComponentModel, set: &[usize]) -> Vec<ComponentRef> {
    set.iter()
        .map(|&i| {
            let c = model.component(i);
            ComponentRef {
                id: c.id.clone(),
                label: c.label.clone(),
            }
        })
        .collect()
}

fn elapsed_ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Builds the report for a model and observations that are already set up.
pub fn diagnose_model(
    design: &str,
    mode: Mode,
    granularity: Granularity,
    model: &ComponentModel,
    obs: &ObservationSet,
    config: &DiagnosisConfig,
    model_build_ms: f64,
) -> DiagnosisReport {
    let start = Instant::now();
    let result = compute_diagnoses(model, obs, config);
    let diagnosis_ms = elapsed_ms(start);
    let source_diagnoses = (mode == Mode::Temporal).then(|| {
        project_to_source(model, &result.diagnoses)
            .into_iter()
            .map(|ids| {
                ids.into_iter()
                    .map(|id| {
                        let label = model
                            .components()
                            .iter()
                            .find(|c| c.id.base() == id)
                            .map(|c| c.label.clone())
                            .unwrap_or_default();
                        ComponentRef { id, label }
                    })
                    .collect()
            })
            .collect()
    });
    DiagnosisReport {
        design: design.to_string(),
        mode,
        granularity,
        max_cardinality: config.max_cardinality,
        components: model.components().len(),
        connections: model.connection_count(),
        observations: obs
            .named(model)
            .into_iter()
            .map(|(connection, value, role)| ObservationEntry {
                connection,
                value,
                role,
            })
            .collect(),
        conflicts: result.conflicts.iter().map(|c| refs(model, c)).collect(),
        diagnoses: result
            .diagnoses
            .iter()
            .map(|d| DiagnosisEntry {
                cardinality: d.len(),
                components: refs(model, d),
            })
            .collect(),
        source_diagnoses,
        stats: result.stats,
        truncated: result.truncated,
        timing: Timing {
            model_build_ms,
            diagnosis_ms,
            total_ms: model_build_ms + diagnosis_ms,
        },
    }
}

/// Single-instant diagnosis: the design is compiled once, the named state
/// signals are cut, and the stimulus must hold exactly one time point.
pub fn diagnose_instant<S: AsRef<str>>(
    design: &str,
    unit: &DesignUnit,
    stimulus: &Stimulus,
    state: &[S],
    granularity: Granularity,
    config: &DiagnosisConfig,
) -> Result<DiagnosisReport, RunError> {
    let start = Instant::now();
    check_static(unit)?;
    let model = build_model(unit, granularity)?.cut_state(state)?;
    let obs = stimulus.instant_observations(&model)?;
    let build = elapsed_ms(start);
    Ok(diagnose_model(
        design,
        Mode::Instant,
        granularity,
        &model,
        &obs,
        config,
        build,
    ))
}

/// Temporal diagnosis over as many time points as the stimulus has.
pub fn diagnose_temporal(
    design: &str,
    unit: &DesignUnit,
    stimulus: &Stimulus,
    granularity: Granularity,
    config: &DiagnosisConfig,
) -> Result<DiagnosisReport, RunError> {
    let start = Instant::now();
    check_static(unit)?;
    let tm = unfold(unit, stimulus.time.len(), granularity)?;
    let obs = tm.apply_stimulus(stimulus)?;
    let build = elapsed_ms(start);
    Ok(diagnose_model(
        design,
        Mode::Temporal,
        granularity,
        &tm.model,
        &obs,
        config,
        build,
    ))
}
