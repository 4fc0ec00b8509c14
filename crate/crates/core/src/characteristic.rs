//! The nine characteristics of a well-formed requirement and the
//! per-requirement report that judges them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::requirement::RequirementId;
use crate::Error;

/// One of the nine well-formed requirement characteristics.
///
/// The declaration order is the canonical order used everywhere a
/// deterministic iteration over characteristics is needed.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Characteristic {
    Necessary,
    Appropriate,
    Unambiguous,
    Complete,
    Singular,
    Feasible,
    Verifiable,
    Correct,
    Conforming,
}

impl Characteristic {
    pub const ALL: [Characteristic; 9] = [
        Characteristic::Necessary,
        Characteristic::Appropriate,
        Characteristic::Unambiguous,
        Characteristic::Complete,
        Characteristic::Singular,
        Characteristic::Feasible,
        Characteristic::Verifiable,
        Characteristic::Correct,
        Characteristic::Conforming,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Characteristic::Necessary => "Necessary",
            Characteristic::Appropriate => "Appropriate",
            Characteristic::Unambiguous => "Unambiguous",
            Characteristic::Complete => "Complete",
            Characteristic::Singular => "Singular",
            Characteristic::Feasible => "Feasible",
            Characteristic::Verifiable => "Verifiable",
            Characteristic::Correct => "Correct",
            Characteristic::Conforming => "Conforming",
        }
    }

    /// Short definition injected into evaluation prompts.
    pub fn definition(self) -> &'static str {
        match self {
            Characteristic::Necessary => {
                "removing it would leave a stakeholder need or constraint unmet"
            }
            Characteristic::Appropriate => {
                "its detail and abstraction suit the level of the entity it applies to"
            }
            Characteristic::Unambiguous => "it can be read in exactly one way",
            Characteristic::Complete => {
                "it states everything needed to understand the capability without other text"
            }
            Characteristic::Singular => "it expresses one capability, condition or constraint",
            Characteristic::Feasible => {
                "it can be realised within the known technical, cost and schedule limits"
            }
            Characteristic::Verifiable => {
                "its fulfilment can be shown by inspection, analysis, demonstration or test"
            }
            Characteristic::Correct => "it faithfully represents the need it came from",
            Characteristic::Conforming => {
                "it follows the organisation's approved structure and writing standard"
            }
        }
    }

    /// The characteristics counted by the quality metric.
    ///
    /// Conforming only counts when the project supplies a writing standard
    /// to conform to.
    pub fn assessed_set(standard_configured: bool) -> BTreeSet<Characteristic> {
        Self::ALL
            .into_iter()
            .filter(|c| standard_configured || *c != Characteristic::Conforming)
            .collect()
    }
}

impl fmt::Display for Characteristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Characteristic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim();
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(wanted))
            .ok_or_else(|| Error::UnknownCharacteristic(wanted.to_string()))
    }
}

/// A single characteristic judgement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub fulfilled: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(fulfilled: bool, detail: impl Into<String>) -> Self {
        Self {
            fulfilled,
            detail: detail.into(),
        }
    }
}

/// The nine verdicts for one requirement, plus which of them count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacteristicReport {
    requirement_id: RequirementId,
    verdicts: BTreeMap<Characteristic, Verdict>,
    assessed: BTreeSet<Characteristic>,
    backend_id: String,
}

impl CharacteristicReport {
    pub fn new(
        requirement_id: RequirementId,
        verdicts: BTreeMap<Characteristic, Verdict>,
        assessed: BTreeSet<Characteristic>,
        backend_id: impl Into<String>,
    ) -> Result<Self, Error> {
        let report = Self {
            requirement_id,
            verdicts,
            assessed,
            backend_id: backend_id.into(),
        };
        report.validate()?;
        Ok(report)
    }

    /// Builds a report from a fulfilled/unfulfilled vector in canonical
    /// order, with empty details. Handy for fixtures.
    pub fn from_flags(
        requirement_id: RequirementId,
        flags: [bool; 9],
        standard_configured: bool,
        backend_id: impl Into<String>,
    ) -> Self {
        let verdicts = Characteristic::ALL
            .into_iter()
            .zip(flags)
            .map(|(c, f)| (c, Verdict::new(f, "")))
            .collect();
        Self {
            requirement_id,
            verdicts,
            assessed: Characteristic::assessed_set(standard_configured),
            backend_id: backend_id.into(),
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if let Some(missing) = Characteristic::ALL
            .into_iter()
            .find(|c| !self.verdicts.contains_key(c))
        {
            return Err(Error::InvalidReport(format!("no verdict for {missing}")));
        }
        if self.assessed.is_empty() {
            return Err(Error::InvalidReport("assessed set is empty".into()));
        }
        Ok(())
    }

    pub fn requirement_id(&self) -> &RequirementId {
        &self.requirement_id
    }

    pub fn verdicts(&self) -> &BTreeMap<Characteristic, Verdict> {
        &self.verdicts
    }

    pub fn verdict(&self, characteristic: Characteristic) -> &Verdict {
        &self.verdicts[&characteristic]
    }

    pub fn is_fulfilled(&self, characteristic: Characteristic) -> bool {
        self.verdicts[&characteristic].fulfilled
    }

    pub fn assessed(&self) -> &BTreeSet<Characteristic> {
        &self.assessed
    }

    pub fn backend_id(&self) -> &str {
        &self.backend_id
    }
}
