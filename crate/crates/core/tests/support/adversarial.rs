//! Seeded stub backends that answer honestly only some of the time.

use std::sync::{Arc, Mutex};
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reqrefine::clarifier::ClarifyingQuestion;
use reqrefine::evaluator::GatePolicy;
use reqrefine::gateway::{Backend, Completion, GatewayError, HeuristicBackend};
use reqrefine::orchestrator::{
    replay, EventBody, Pipeline, ProvidedAnswer, RefinementSession, SessionEvent, SessionOptions,
    SessionState, SessionStatus,
};
use reqrefine::prompting::PromptSections;
use reqrefine::rewriter::pattern::default_patterns;
use reqrefine::{Characteristic, Requirement, RequirementId};

pub struct AdversarialBackend {
    id: String,
    rng: Mutex<ChaCha8Rng>,
    honest: HeuristicBackend,
}

impl AdversarialBackend {
    pub fn new(seed: u64) -> Self {
        Self {
            id: format!("stub-{seed}"),
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
            honest: HeuristicBackend::default(),
        }
    }
}

const WORDS: &[&str] = &[
    "the", "system", "shall", "report", "within", "5", "seconds", "and", "it", "user-friendly",
    "export", "PDF", "when", "users", "log", "in", "must", "fast", "|", "yes", "no",
];

fn noise(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(0..12);
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

fn random_evaluation(rng: &mut ChaCha8Rng) -> String {
    let mut rows: Vec<String> = Characteristic::ALL
        .iter()
        .map(|c| {
            let mark = if rng.gen_bool(0.6) { "Yes" } else { "No" };
            format!("| {} | {} | {} |", c.name(), noise(rng).replace('|', ""), mark)
        })
        .collect();
    match rng.gen_range(0..10) {
        0 => {
            rows.remove(rng.gen_range(0..rows.len()));
        }
        1 => {
            let dup = rows[0].clone();
            rows.push(dup);
        }
        2 => rows.shuffle(rng),
        _ => {}
    }
    format!(
        "| Feature Name | Feature Detail | Fulfilled (yes/no) |\n|---|---|---|\n{}\n",
        rows.join("\n")
    )
}

fn random_rewrite(rng: &mut ChaCha8Rng, honest: &str) -> String {
    match rng.gen_range(0..5) {
        0 => format!("F1: The system shall {}.", noise(rng)),
        1 => format!("F2: When {}, the system shall export the file.", noise(rng)),
        2 => format!("F9: {}", noise(rng)),
        3 => format!(
            "F1: The system shall export the report within {} seconds.\nF1: The system shall log {} events.",
            rng.gen_range(1..9),
            rng.gen_range(1..99)
        ),
        _ => honest.lines().rev().collect::<Vec<_>>().join("\n"),
    }
}

impl Backend for AdversarialBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, prompt: &str) -> Result<Completion, GatewayError> {
        let mut rng = self.rng.lock().unwrap();
        let roll: f64 = rng.gen();
        if roll < 0.04 {
            return Err(GatewayError::Unreachable {
                backend: self.id.clone(),
                attempts: 1,
                message: "stub outage".into(),
            });
        }
        let instruction = PromptSections::parse(prompt).instruction.unwrap_or_default();
        let honest = self.honest.complete(prompt).map(|c| c.text);
        let text = if roll < 0.10 {
            noise(&mut rng)
        } else if roll < 0.55 {
            honest?
        } else if instruction.starts_with(reqrefine::evaluator::INSTRUCTION) {
            random_evaluation(&mut rng)
        } else if instruction.starts_with(reqrefine::rewriter::INSTRUCTION) {
            random_rewrite(&mut rng, &honest.unwrap_or_default())
        } else {
            let honest = honest?;
            // drop one question row now and then
            let lines: Vec<&str> = honest.lines().collect();
            if lines.len() > 3 && rng.gen_bool(0.3) {
                let skip = rng.gen_range(2..lines.len());
                lines
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, l)| *l)
                    .collect::<Vec<_>>()
                    .join("\n")
            } else {
                honest
            }
        };
        Ok(Completion {
            text,
            backend_id: self.id.clone(),
            latency: Duration::ZERO,
            attempt: 1,
        })
    }
}

const SUBJECTS: &[&str] = &["The system", "A customer", "The operator", "The inventory manager"];
const MODALS: &[&str] = &["must", "shall", "will", "can", "should"];
const PREDICATES: &[&str] = &[
    "export the report in CSV format within 5 seconds",
    "have a user-friendly interface and support all common browsers",
    "cancel an order if he has not yet received it",
    "generate a list of missing products",
    "log every failed login and notify the administrator",
    "respond quickly",
    "display at most 20 items per page",
];

const ANSWERS: &[&str] = &[
    "Yes, split it into one requirement per capability.",
    "No.",
    "When the user signs in.",
    "The report shall be produced within 3 seconds.",
    "It should be easy to use.",
    "The file shall use PDF or CSV format.",
    "Orders can be cancelled within 24 hours.",
];

pub fn random_requirement(rng: &mut ChaCha8Rng) -> Requirement {
    let text = format!(
        "{} {} {}.",
        SUBJECTS.choose(rng).unwrap(),
        MODALS.choose(rng).unwrap(),
        PREDICATES.choose(rng).unwrap()
    );
    Requirement::authored(RequirementId::new("r1"), text).unwrap()
}

/// Outcome of one randomized session.
pub struct Trial {
    pub status: SessionStatus,
    pub state: SessionState,
    pub events: Vec<SessionEvent>,
    pub max_iterations: u32,
}

pub fn run_trial(seed: u64) -> Trial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let backend: Arc<dyn Backend> = Arc::new(AdversarialBackend::new(seed ^ 0x5eed));
    let mut pipeline = Pipeline::uniform(backend, default_patterns());
    pipeline.stage_retries = rng.gen_range(0..3);
    let policy = if rng.gen_bool(0.5) {
        GatePolicy::all_assessed()
    } else {
        GatePolicy::threshold(*[75.0, 87.5, 100.0].choose(&mut rng).unwrap()).unwrap()
    };
    let max_iterations = rng.gen_range(1..=4);
    let options = SessionOptions {
        policy,
        max_iterations,
        ..SessionOptions::default()
    };
    let mut session = RefinementSession::new(random_requirement(&mut rng), options).unwrap();
    let answer_rng = Mutex::new(ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31)));
    let provider = |_: &Requirement, _: &ClarifyingQuestion| {
        let mut r = answer_rng.lock().unwrap();
        Some(ProvidedAnswer {
            text: ANSWERS.choose(&mut *r).unwrap().to_string(),
            source: reqrefine::clarifier::AnswerSource::Synthetic,
        })
    };
    let status = session.advance(&pipeline, &provider).unwrap();
    Trial {
        status,
        state: session.state().clone(),
        events: session.events().to_vec(),
        max_iterations,
    }
}

/// Every invariant a finished randomized session must satisfy.
pub fn check_trial(t: &Trial) -> Result<(), String> {
    if !t.status.is_terminal() {
        return Err(format!("ended in {:?}", t.status));
    }
    if t.state.iterations_completed > t.max_iterations {
        return Err(format!(
            "{} iterations with a limit of {}",
            t.state.iterations_completed, t.max_iterations
        ));
    }
    for record in t.state.rewrites.iter().filter(|r| r.accepted == Some(true)) {
        let parent = t.state.scores[&record.parent];
        for child in &record.children {
            if t.state.scores[child] < parent {
                return Err(format!("accepted {child} scores below {}", record.parent));
            }
        }
    }
    for leaf in &t.state.leaves {
        let mut chain = vec![t.state.scores.get(leaf).copied()];
        let mut at = t.state.requirements[leaf].parent_id().cloned();
        while let Some(id) = at {
            chain.push(t.state.scores.get(&id).copied());
            at = t.state.requirements[&id].parent_id().cloned();
        }
        let chain: Vec<_> = chain.into_iter().flatten().rev().collect();
        if chain.windows(2).any(|w| w[1] < w[0]) {
            return Err(format!("lineage of {leaf} decreases: {chain:?}"));
        }
    }
    for (i, e) in t.events.iter().enumerate() {
        if e.seq != i as u64 + 1 {
            return Err(format!("event {i} has seq {}", e.seq));
        }
    }
    let replayed = replay(t.state.header.clone(), &t.events).map_err(|e| e.to_string())?;
    if replayed != t.state {
        return Err("replay differs from live state".into());
    }
    let json: Vec<String> = t.events.iter().map(|e| serde_json::to_string(e).unwrap()).collect();
    let decoded: Vec<SessionEvent> = json.iter().map(|l| serde_json::from_str(l).unwrap()).collect();
    let reread = replay(t.state.header.clone(), &decoded).map_err(|e| e.to_string())?;
    if reread != t.state {
        return Err("replay of serialized log differs".into());
    }
    if t.status == SessionStatus::Failed
        && !t.events.iter().any(|e| matches!(e.body, EventBody::Error { fatal: true, .. }))
    {
        return Err("failed without a fatal error event".into());
    }
    Ok(())
}
