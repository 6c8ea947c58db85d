//! Opacity verdicts: reachability of a fully secret low-level estimate in
//! the observer, shortest witnesses, and an enumeration cross-check.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{augment, AugModel, AugmentError};
use crate::model::{EventId, Model};
use crate::observer::{self, AugSet, ObserverAutomaton, ObserverError, DEFAULT_STATE_CAP};
use crate::semantics::{self, Plant};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Observer(#[from] ObserverError),
}

impl VerifyError {
    /// The observer grew past its state limit.
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, VerifyError::Observer(ObserverError::StateCap { .. }))
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub max_observer_states: usize,
    /// Build the whole observer even after a violation is found.
    pub complete_build: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            max_observer_states: DEFAULT_STATE_CAP,
            complete_build: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Opaque,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub augmented_states: usize,
    pub observer_states: usize,
    pub observer_transitions: usize,
    /// Whether the whole reachable observer was built.
    pub complete: bool,
}

/// Outcome of [`verify_opacity`]. The witness fields are present exactly
/// when the status is `Violated`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    /// Shortest string whose estimate is entirely secret.
    pub witness: Option<Vec<String>>,
    /// Release-aware projection of the witness.
    pub observation: Option<String>,
    /// History of the witness, in temporal order.
    pub history: Option<Vec<String>>,
    /// The fully secret estimate, as augmented states.
    pub estimate: Option<Vec<String>>,
    pub stats: Stats,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl Verdict {
    pub fn is_opaque(&self) -> bool {
        self.status == Status::Opaque
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict serializes")
    }
}

fn fully_secret(am: &AugModel, estimate: &AugSet) -> bool {
    estimate.iter().all(|&x| am.is_secret(x))
}

/// Shortest string (ties broken lexicographically by event name) reaching an
/// observer state whose low-level estimate lies inside `secret`.
pub fn find_witness(obs: &ObserverAutomaton, secret: &AugSet) -> Option<Vec<EventId>> {
    obs.states()
        .find(|(_, s)| s.low.is_subset(secret))
        .map(|(id, _)| obs.path_to(id))
}

/// Decides current-state opacity of `model` under its release states.
pub fn verify_opacity(model: &Model) -> Result<Verdict, VerifyError> {
    verify_opacity_with(model, &VerifyOptions::default())
}

pub fn verify_opacity_with(model: &Model, options: &VerifyOptions) -> Result<Verdict, VerifyError> {
    let start = Instant::now();
    let am = augment(model)?;
    let cap = options.max_observer_states;
    let (obs, hit) = if options.complete_build {
        let obs = observer::build_observer_with_cap(&am, cap)?;
        let hit = obs
            .states()
            .find(|(_, s)| fully_secret(&am, &s.low))
            .map(|(id, _)| id);
        (obs, hit)
    } else {
        let exp = observer::explore(&am, cap, |s| fully_secret(&am, &s.low))?;
        (exp.automaton, exp.hit)
    };
    let stats = Stats {
        augmented_states: am.num_states(),
        observer_states: obs.num_states(),
        observer_transitions: obs.num_transitions(),
        complete: obs.is_complete(),
    };
    let verdict = match hit {
        None => Verdict {
            status: Status::Opaque,
            witness: None,
            observation: None,
            history: None,
            estimate: None,
            stats,
            elapsed: start.elapsed(),
        },
        Some(id) => {
            let word = obs.path_to(id);
            let alphabet = model.alphabet();
            let projection = semantics::dirm_projection(model, &word)
                .expect("observer paths are generated strings");
            let history =
                semantics::history(model, &word).expect("observer paths are generated strings");
            Verdict {
                status: Status::Violated,
                witness: Some(alphabet.word_names(&word)),
                observation: Some(projection.display(alphabet)),
                history: Some(history.strings(alphabet)),
                estimate: Some(obs.state(id).low.iter().map(|&x| am.name(x)).collect()),
                stats,
                elapsed: start.elapsed(),
            }
        }
    };
    Ok(verdict)
}

/// Length of the longest generated string, `None` if a cycle is reachable.
pub fn longest_word<P: Plant>(plant: &P) -> Option<usize> {
    fn depth<P: Plant>(
        plant: &P,
        x: P::State,
        memo: &mut std::collections::HashMap<P::State, Option<usize>>,
        on_stack: &mut BTreeSet<P::State>,
    ) -> Option<usize> {
        if let Some(&d) = memo.get(&x) {
            return d;
        }
        if !on_stack.insert(x) {
            return None;
        }
        let mut best = Some(0);
        for e in plant.alphabet().ids() {
            if let Some(y) = plant.next(x, e) {
                best = match (best, depth(plant, y, memo, on_stack)) {
                    (Some(b), Some(d)) => Some(b.max(d + 1)),
                    _ => None,
                };
                if best.is_none() {
                    break;
                }
            }
        }
        on_stack.remove(&x);
        memo.insert(x, best);
        best
    }
    depth(
        plant,
        plant.initial_state(),
        &mut Default::default(),
        &mut BTreeSet::new(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MismatchKind {
    /// Observer estimate differs from the enumerated one.
    Estimate,
    /// The two disagree on whether the estimate is entirely secret.
    Secrecy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub kind: MismatchKind,
    pub word: Vec<String>,
    pub history: Vec<String>,
    pub oracle: Vec<String>,
    pub observer: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrosscheckReport {
    pub bound: usize,
    /// Every generated string fits in the bound, so estimates must agree
    /// exactly; otherwise only oracle ⊆ observer is required.
    pub exact: bool,
    pub strings_checked: usize,
    pub mismatches: Vec<Mismatch>,
}

impl CrosscheckReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Compares, for every generated string up to `bound`, the observer's
/// estimate (projected onto plant states) with the estimate obtained by
/// enumerating all strings with the same history.
pub fn crosscheck_bruteforce(model: &Model, bound: usize) -> Result<CrosscheckReport, VerifyError> {
    crosscheck_with_cap(model, bound, DEFAULT_STATE_CAP)
}

pub fn crosscheck_with_cap(
    model: &Model,
    bound: usize,
    cap: usize,
) -> Result<CrosscheckReport, VerifyError> {
    let am = augment(model)?;
    let obs = observer::build_observer_with_cap(&am, cap)?;
    let exact = longest_word(model).is_some_and(|n| n <= bound);
    let table = semantics::estimates_by_history(model, bound);
    let alphabet = model.alphabet();
    let names = |set: &BTreeSet<usize>| -> Vec<String> {
        set.iter()
            .map(|&x| model.state_name(x).to_string())
            .collect()
    };
    let mut checked = 0;
    let mut mismatches = Vec::new();
    semantics::for_each_word(model, bound, |word, _, hist| {
        checked += 1;
        let oracle = &table[hist];
        let low = obs
            .estimate(word)
            .expect("enumerated strings are generated");
        let observed: BTreeSet<usize> = low.iter().map(|&x| am.state(x).base).collect();
        let agrees = if exact {
            *oracle == observed
        } else {
            oracle.is_subset(&observed)
        };
        let mut report = |kind| {
            mismatches.push(Mismatch {
                kind,
                word: alphabet.word_names(word),
                history: hist.strings(alphabet),
                oracle: names(oracle),
                observer: names(&observed),
            })
        };
        if !agrees {
            report(MismatchKind::Estimate);
        }
        let oracle_secret = oracle.iter().all(|&x| model.is_secret(x));
        if exact && oracle_secret != fully_secret(&am, low) {
            report(MismatchKind::Secrecy);
        }
    });
    Ok(CrosscheckReport {
        bound,
        exact,
        strings_checked: checked,
        mismatches,
    })
}
