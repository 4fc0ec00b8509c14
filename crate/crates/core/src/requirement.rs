//! Requirement expressions and their lineage.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::Error;

/// Opaque, engine-assigned requirement identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RequirementId(String);

impl RequirementId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RequirementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Where a requirement expression came from.
///
/// Mirrors the original / generic-prompt / framework columns of a
/// comparison run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Authored,
    GenericRewrite,
    FrameworkRewrite,
}

impl Origin {
    /// Short column label used by the corpus harness.
    pub fn label(self) -> &'static str {
        match self {
            Origin::Authored => "RO",
            Origin::GenericRewrite => "RG",
            Origin::FrameworkRewrite => "RM",
        }
    }
}

/// A natural-language requirement expression.
///
/// Construct through [`Requirement::authored`] or [`Requirement::derived`];
/// both enforce the lineage invariants (`parent_id` is present exactly when
/// the requirement is not authored).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    id: RequirementId,
    text: String,
    origin: Origin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parent_id: Option<RequirementId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split_index: Option<u32>,
}

impl Requirement {
    pub fn authored(id: RequirementId, text: impl Into<String>) -> Result<Self, Error> {
        let text = checked_text(text.into())?;
        Ok(Self {
            id,
            text,
            origin: Origin::Authored,
            parent_id: None,
            split_index: None,
        })
    }

    pub fn derived(
        id: RequirementId,
        text: impl Into<String>,
        origin: Origin,
        parent_id: RequirementId,
        split_index: Option<u32>,
    ) -> Result<Self, Error> {
        if origin == Origin::Authored {
            return Err(Error::InvalidRequirement(
                "an authored requirement cannot have a parent".into(),
            ));
        }
        let text = checked_text(text.into())?;
        Ok(Self {
            id,
            text,
            origin,
            parent_id: Some(parent_id),
            split_index,
        })
    }

    pub fn id(&self) -> &RequirementId {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn parent_id(&self) -> Option<&RequirementId> {
        self.parent_id.as_ref()
    }

    pub fn split_index(&self) -> Option<u32> {
        self.split_index
    }

    /// Re-checks the invariants; used after deserializing untrusted input.
    pub fn validate(&self) -> Result<(), Error> {
        if self.text.trim().is_empty() {
            return Err(Error::InvalidRequirement("text is empty".into()));
        }
        if (self.origin == Origin::Authored) != self.parent_id.is_none() {
            return Err(Error::InvalidRequirement(
                "parent_id must be absent exactly for authored requirements".into(),
            ));
        }
        Ok(())
    }
}

fn checked_text(text: String) -> Result<String, Error> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(Error::InvalidRequirement("text is empty".into()));
    }
    Ok(trimmed.to_string())
}

/// Checks that split siblings share a parent and carry distinct indices.
pub fn validate_siblings(siblings: &[Requirement]) -> Result<(), Error> {
    if siblings.len() < 2 {
        return Ok(());
    }
    let parent = siblings[0].parent_id();
    let mut seen = std::collections::BTreeSet::new();
    for sibling in siblings {
        if sibling.parent_id() != parent || parent.is_none() {
            return Err(Error::InvalidRequirement(
                "split siblings must share one parent".into(),
            ));
        }
        match sibling.split_index() {
            Some(index) if seen.insert(index) => {}
            _ => {
                return Err(Error::InvalidRequirement(
                    "split siblings need distinct split indices".into(),
                ))
            }
        }
    }
    Ok(())
}
