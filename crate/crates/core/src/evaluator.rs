//! Characteristic evaluation and the quality gate.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::characteristic::{Characteristic, CharacteristicReport, Verdict};
use crate::gateway::{
    parse_table, request_with_recovery, Backend, GatewayError, ParseError, RecoveryError,
    FORMAT_RETRIES,
};
use crate::metric::{compute_quality, unfulfilled};
use crate::prompting::PromptSpec;
use crate::requirement::{Requirement, RequirementId};

pub const INSTRUCTION: &str = "Verify that the requirement meets these characteristics.";

pub const OUTPUT_FORMAT: &str =
    "Your answer should be only a table with the columns [Feature Name, Feature Detail, Fulfilled (yes/no)]";

pub const TABLE_HEADER: [&str; 3] = ["Feature Name", "Feature Detail", "Fulfilled (yes/no)"];

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("requirement text is empty")]
    EmptyRequirement,
    #[error(transparent)]
    Backend(#[from] GatewayError),
    #[error("evaluation failed after {attempts} completion(s): {reason}")]
    Failed {
        attempts: usize,
        reason: String,
        raw: String,
    },
}

/// The characteristic definitions sent as prompt context.
pub fn definitions_context() -> String {
    let mut out = String::from("Characteristics:");
    for c in Characteristic::ALL {
        out.push_str(&format!("\n- {}: {}", c.name(), c.definition()));
    }
    out
}

pub fn evaluation_prompt(requirement_text: &str) -> PromptSpec {
    PromptSpec::new(INSTRUCTION)
        .expect("non-empty instruction")
        .with_context(definitions_context())
        .with_input(requirement_text)
        .with_output_format(OUTPUT_FORMAT)
}

fn parse_fulfilled(cell: &str) -> Option<bool> {
    let cell = cell
        .trim()
        .trim_matches(|c: char| c == '*' || c == '_' || c == '.' || c == '`')
        .to_lowercase();
    match cell.as_str() {
        "yes" | "y" | "true" | "sí" | "si" => Some(true),
        "no" | "n" | "false" | "partially" | "partial" => Some(false),
        _ => None,
    }
}

/// Reads an evaluation table into a report. Every characteristic must
/// appear exactly once.
pub fn parse_evaluation(
    text: &str,
    requirement_id: &RequirementId,
    standard_configured: bool,
    backend_id: &str,
) -> Result<CharacteristicReport, ParseError> {
    let table = parse_table(text, &TABLE_HEADER)?;
    let mut verdicts = BTreeMap::new();
    for (i, row) in table.rows().iter().enumerate() {
        let name = row[0].trim().trim_matches('*').trim();
        let characteristic: Characteristic = name
            .parse()
            .map_err(|_| ParseError::Schema(format!("row {}: unknown characteristic `{name}`", i + 1)))?;
        let fulfilled = parse_fulfilled(&row[2]).ok_or_else(|| {
            ParseError::Schema(format!("row {}: `{}` is not yes or no", i + 1, row[2]))
        })?;
        let verdict = Verdict::new(fulfilled, row[1].trim());
        if verdicts.insert(characteristic, verdict).is_some() {
            return Err(ParseError::Schema(format!(
                "characteristic {characteristic} appears twice"
            )));
        }
    }
    let missing: Vec<&str> = Characteristic::ALL
        .iter()
        .filter(|c| !verdicts.contains_key(c))
        .map(|c| c.name())
        .collect();
    if !missing.is_empty() {
        return Err(ParseError::Schema(format!(
            "missing characteristic(s): {}",
            missing.join(", ")
        )));
    }
    CharacteristicReport::new(
        requirement_id.clone(),
        verdicts,
        Characteristic::assessed_set(standard_configured),
        backend_id,
    )
    .map_err(|e| ParseError::Schema(e.to_string()))
}

/// Judges `requirement` with `backend`.
pub fn evaluate(
    requirement: &Requirement,
    backend: &dyn Backend,
    standard_configured: bool,
) -> Result<CharacteristicReport, EvaluationError> {
    if requirement.text().trim().is_empty() {
        return Err(EvaluationError::EmptyRequirement);
    }
    let spec = evaluation_prompt(requirement.text());
    let id = requirement.id();
    let result = request_with_recovery(backend, &spec, FORMAT_RETRIES, |text| {
        parse_evaluation(text, id, standard_configured, backend.id())
    });
    match result {
        Ok((report, _)) => Ok(report),
        Err(RecoveryError::Backend(e)) => Err(e.into()),
        Err(RecoveryError::Unparseable {
            attempts,
            raw,
            error,
        }) => Err(EvaluationError::Failed {
            attempts,
            reason: error.to_string(),
            raw,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    #[default]
    AllAssessed,
    Threshold,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid gate policy: {0}")]
pub struct PolicyError(String);

/// When a requirement is good enough to stop refining.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(try_from = "PolicyRepr", into = "PolicyRepr")]
pub struct GatePolicy {
    kind: GateKind,
    threshold: Option<f64>,
    mandatory: BTreeSet<Characteristic>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyRepr {
    #[serde(default)]
    kind: GateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    mandatory: BTreeSet<Characteristic>,
}

impl TryFrom<PolicyRepr> for GatePolicy {
    type Error = PolicyError;

    fn try_from(r: PolicyRepr) -> Result<Self, PolicyError> {
        match (r.kind, r.threshold) {
            (GateKind::AllAssessed, None) => Ok(Self::all_assessed().with_mandatory(r.mandatory)),
            (GateKind::AllAssessed, Some(_)) => {
                Err(PolicyError("threshold is only meaningful for kind = threshold".into()))
            }
            (GateKind::Threshold, Some(t)) => Ok(Self::threshold(t)?.with_mandatory(r.mandatory)),
            (GateKind::Threshold, None) => Err(PolicyError("kind = threshold needs a threshold".into())),
        }
    }
}

impl From<GatePolicy> for PolicyRepr {
    fn from(p: GatePolicy) -> Self {
        PolicyRepr {
            kind: p.kind,
            threshold: p.threshold,
            mandatory: p.mandatory,
        }
    }
}

impl GatePolicy {
    pub fn all_assessed() -> Self {
        Self::default()
    }

    /// Passes at or above `percent`, which must lie in (0, 100].
    pub fn threshold(percent: f64) -> Result<Self, PolicyError> {
        if !(percent > 0.0 && percent <= 100.0) {
            return Err(PolicyError(format!("threshold {percent} outside (0, 100]")));
        }
        Ok(Self {
            kind: GateKind::Threshold,
            threshold: Some(percent),
            mandatory: BTreeSet::new(),
        })
    }

    pub fn with_mandatory(mut self, mandatory: impl IntoIterator<Item = Characteristic>) -> Self {
        self.mandatory = mandatory.into_iter().collect();
        self
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn threshold_value(&self) -> Option<f64> {
        self.threshold
    }

    pub fn mandatory(&self) -> &BTreeSet<Characteristic> {
        &self.mandatory
    }
}

/// Whether `report` is good enough under `policy`.
pub fn gate(report: &CharacteristicReport, policy: &GatePolicy) -> bool {
    let mandatory_ok = policy.mandatory.iter().all(|c| report.is_fulfilled(*c));
    match policy.kind {
        GateKind::AllAssessed => mandatory_ok && unfulfilled(report).is_empty(),
        GateKind::Threshold => {
            let threshold_tenths = (policy.threshold.unwrap_or(100.0) * 10.0).round() as u32;
            mandatory_ok && compute_quality(report).tenths() >= threshold_tenths
        }
    }
}
