use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::events::{EventBody, RagSuggestion, SessionEvent, SessionHeader, SessionStatus};
use super::SessionError;
use crate::characteristic::CharacteristicReport;
use crate::clarifier::{ClarificationExchange, ClarifyingQuestion};
use crate::metric::{compute_quality, QualityScore};
use crate::requirement::{Requirement, RequirementId};

/// True iff the new report scores at least as well as the old one.
pub fn accept_if_improved(
    old: &CharacteristicReport,
    new: &CharacteristicReport,
) -> Result<bool, SessionError> {
    if old.assessed() != new.assessed() {
        return Err(SessionError::AssessedMismatch);
    }
    Ok(compute_quality(new) >= compute_quality(old))
}

/// One ask-answer-rewrite pass over the leaves failing when it opened.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    pub iteration: u32,
    pub todo: Vec<RequirementId>,
    pub selected: BTreeMap<RequirementId, Vec<String>>,
    pub rewritten: BTreeSet<RequirementId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteRecord {
    pub iteration: u32,
    pub parent: RequirementId,
    pub children: Vec<RequirementId>,
    pub pattern_ids: Vec<String>,
    /// Undecided until every child has been gated.
    pub accepted: Option<bool>,
}

/// Session state, derived only by folding events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub header: SessionHeader,
    pub status: SessionStatus,
    pub requirements: BTreeMap<RequirementId, Requirement>,
    pub leaves: Vec<RequirementId>,
    pub reports: BTreeMap<RequirementId, CharacteristicReport>,
    pub scores: BTreeMap<RequirementId, QualityScore>,
    pub gates: BTreeMap<RequirementId, bool>,
    pub questions: Vec<ClarifyingQuestion>,
    pub exchanges: BTreeMap<String, ClarificationExchange>,
    pub suggestions: BTreeMap<String, RagSuggestion>,
    pub round: Option<Round>,
    pub rewrites: Vec<RewriteRecord>,
    pub iterations_completed: u32,
    pub failure: Option<String>,
    pub last_seq: u64,
}

impl SessionState {
    pub fn new(header: SessionHeader) -> Self {
        let root = header.root.clone();
        let mut state = Self {
            header,
            status: SessionStatus::Running,
            requirements: BTreeMap::from([(root.id().clone(), root.clone())]),
            leaves: vec![root.id().clone()],
            reports: BTreeMap::new(),
            scores: BTreeMap::new(),
            gates: BTreeMap::new(),
            questions: Vec::new(),
            exchanges: BTreeMap::new(),
            suggestions: BTreeMap::new(),
            round: None,
            rewrites: Vec::new(),
            iterations_completed: 0,
            failure: None,
            last_seq: 0,
        };
        state.status = state.derive_status();
        state
    }

    pub fn requirement(&self, id: &RequirementId) -> Option<&Requirement> {
        self.requirements.get(id)
    }

    pub fn leaf_requirements(&self) -> Vec<&Requirement> {
        self.leaves
            .iter()
            .filter_map(|id| self.requirements.get(id))
            .collect()
    }

    /// Leaves whose latest gate decision failed.
    pub fn failing_leaves(&self) -> Vec<RequirementId> {
        self.leaves
            .iter()
            .filter(|id| self.gates.get(*id) == Some(&false))
            .cloned()
            .collect()
    }

    /// Selected questions of the open round that still lack an answer.
    pub fn pending_questions(&self) -> Vec<&ClarifyingQuestion> {
        let Some(round) = &self.round else {
            return Vec::new();
        };
        round
            .todo
            .iter()
            .flat_map(|id| round.selected.get(id).into_iter().flatten())
            .filter_map(|qid| self.exchanges.get(qid))
            .filter(|e| !e.is_answered())
            .map(|e| e.question())
            .collect()
    }

    /// Selected exchanges for `requirement_id` in the open round.
    pub fn round_exchanges(&self, requirement_id: &RequirementId) -> Vec<&ClarificationExchange> {
        self.round
            .as_ref()
            .and_then(|r| r.selected.get(requirement_id))
            .into_iter()
            .flatten()
            .filter_map(|qid| self.exchanges.get(qid))
            .collect()
    }

    pub fn next_question_number(&self) -> usize {
        self.questions.len() + 1
    }

    pub fn next_requirement_number(&self) -> usize {
        self.requirements.len() + 1
    }

    /// Leaves and undecided rewrite children without a gate decision.
    pub fn unevaluated(&self) -> Vec<RequirementId> {
        let pending_children = self
            .rewrites
            .iter()
            .filter(|r| r.accepted.is_none())
            .flat_map(|r| r.children.iter());
        self.leaves
            .iter()
            .chain(pending_children)
            .filter(|id| !self.gates.contains_key(*id))
            .cloned()
            .collect()
    }

    /// Folds one event. `seq` must follow the previous event's.
    pub fn apply(&mut self, event: &SessionEvent) -> Result<(), SessionError> {
        if event.seq != self.last_seq + 1 {
            return Err(SessionError::Corrupt(format!(
                "event seq {} follows {}",
                event.seq, self.last_seq
            )));
        }
        match &event.body {
            EventBody::Evaluated { report, score } => {
                let id = report.requirement_id().clone();
                self.known(&id)?;
                if compute_quality(report) != *score {
                    return Err(SessionError::Corrupt(format!("score of {id} disagrees with its report")));
                }
                self.reports.insert(id.clone(), report.clone());
                self.scores.insert(id.clone(), *score);
                self.gates.remove(&id);
            }
            EventBody::Gated {
                requirement_id,
                passed,
            } => {
                self.known(requirement_id)?;
                if !self.reports.contains_key(requirement_id) {
                    return Err(SessionError::Corrupt(format!("{requirement_id} gated before evaluation")));
                }
                self.gates.insert(requirement_id.clone(), *passed);
                self.decide_rewrites()?;
            }
            EventBody::QuestionsGenerated {
                requirement_id,
                questions,
                selected,
                suggestions,
                ..
            } => {
                self.known(requirement_id)?;
                if self.round.is_none() {
                    self.round = Some(Round {
                        iteration: event.iteration,
                        todo: self.failing_leaves(),
                        selected: BTreeMap::new(),
                        rewritten: BTreeSet::new(),
                    });
                }
                let round = self.round.as_mut().expect("opened above");
                if !round.todo.contains(requirement_id) {
                    return Err(SessionError::Corrupt(format!(
                        "questions for {requirement_id}, which is not a failing leaf"
                    )));
                }
                for qid in selected {
                    let q = questions
                        .iter()
                        .find(|q| &q.id == qid)
                        .ok_or_else(|| SessionError::Corrupt(format!("selected {qid} was not generated")))?;
                    self.exchanges
                        .insert(qid.clone(), ClarificationExchange::open(q.clone()));
                }
                round.selected.insert(requirement_id.clone(), selected.clone());
                self.questions.extend(questions.iter().cloned());
                for s in suggestions {
                    self.suggestions.insert(s.question_id.clone(), s.clone());
                }
            }
            EventBody::AnswerAttached { exchange } => {
                let qid = &exchange.question().id;
                match self.exchanges.get(qid) {
                    None => return Err(SessionError::UnknownQuestion(qid.clone())),
                    Some(e) if e.is_answered() => {
                        return Err(SessionError::AlreadyAnswered(qid.clone()))
                    }
                    Some(_) if !exchange.is_answered() => {
                        return Err(SessionError::Corrupt(format!("answer event for {qid} has no answer")))
                    }
                    Some(_) => {}
                }
                self.exchanges.insert(qid.clone(), exchange.clone());
            }
            EventBody::Rewritten { parent_id, result } | EventBody::Split { parent_id, result } => {
                self.known(parent_id)?;
                let round = self
                    .round
                    .as_mut()
                    .ok_or_else(|| SessionError::Corrupt("rewrite outside a round".into()))?;
                if !round.todo.contains(parent_id) || !round.rewritten.insert(parent_id.clone()) {
                    return Err(SessionError::Corrupt(format!("unexpected rewrite of {parent_id}")));
                }
                for r in &result.requirements {
                    if r.parent_id() != Some(parent_id) || self.requirements.contains_key(r.id()) {
                        return Err(SessionError::Corrupt(format!("bad lineage for {}", r.id())));
                    }
                    self.requirements.insert(r.id().clone(), r.clone());
                }
                self.rewrites.push(RewriteRecord {
                    iteration: event.iteration,
                    parent: parent_id.clone(),
                    children: result.requirements.iter().map(|r| r.id().clone()).collect(),
                    pattern_ids: result.pattern_id_per_requirement.clone(),
                    accepted: None,
                });
            }
            EventBody::Error { message, fatal, .. } => {
                if *fatal {
                    self.failure = Some(message.clone());
                }
            }
        }
        self.last_seq = event.seq;
        self.close_round();
        self.status = self.derive_status();
        Ok(())
    }

    fn known(&self, id: &RequirementId) -> Result<(), SessionError> {
        if self.requirements.contains_key(id) {
            Ok(())
        } else {
            Err(SessionError::Corrupt(format!("unknown requirement {id}")))
        }
    }

    /// Accepts or rejects each rewrite whose children are all gated.
    fn decide_rewrites(&mut self) -> Result<(), SessionError> {
        for i in 0..self.rewrites.len() {
            let record = &self.rewrites[i];
            if record.accepted.is_some() || !record.children.iter().all(|c| self.gates.contains_key(c)) {
                continue;
            }
            let old = &self.reports[&record.parent];
            let mut accepted = true;
            for child in &record.children {
                accepted &= accept_if_improved(old, &self.reports[child])?;
            }
            let record = &mut self.rewrites[i];
            record.accepted = Some(accepted);
            if accepted {
                let at = self
                    .leaves
                    .iter()
                    .position(|l| *l == record.parent)
                    .ok_or_else(|| SessionError::Corrupt(format!("{} is not a leaf", record.parent)))?;
                self.leaves.splice(at..=at, record.children.iter().cloned());
            }
        }
        Ok(())
    }

    fn close_round(&mut self) {
        let Some(round) = &self.round else { return };
        let done = round.todo.iter().all(|id| {
            round.rewritten.contains(id)
                && self
                    .rewrites
                    .iter()
                    .rev()
                    .find(|r| &r.parent == id)
                    .is_some_and(|r| r.accepted.is_some())
        });
        if done {
            self.iterations_completed = round.iteration;
            self.round = None;
        }
    }

    fn derive_status(&self) -> SessionStatus {
        if self.failure.is_some() {
            return SessionStatus::Failed;
        }
        if self.round.is_some() {
            return if self.pending_questions().is_empty() {
                SessionStatus::Running
            } else {
                SessionStatus::AwaitingAnswers
            };
        }
        let all_gated = self.leaves.iter().all(|id| self.gates.contains_key(id));
        if !all_gated {
            return SessionStatus::Running;
        }
        if self.leaves.iter().all(|id| self.gates[id]) {
            SessionStatus::Converged
        } else if self.iterations_completed >= self.header.max_iterations {
            SessionStatus::Exhausted
        } else {
            SessionStatus::Running
        }
    }
}

/// Rebuilds the state of a session from its header and events.
pub fn replay(header: SessionHeader, events: &[SessionEvent]) -> Result<SessionState, SessionError> {
    let mut state = SessionState::new(header);
    for event in events {
        state.apply(event)?;
    }
    Ok(state)
}
