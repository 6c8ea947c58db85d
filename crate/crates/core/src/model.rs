//! Deterministic finite automata with a three-way event partition, release
//! states and secret states, plus the JSON model document they are exchanged in.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

/// Index of a state inside a [`Model`]. Indices follow the lexicographic
/// order of state names.
pub type StateId = usize;

/// Index of an event inside an [`Alphabet`]. Indices follow the lexicographic
/// order of event names.
pub type EventId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventClass {
    /// Seen by the intruder the moment it occurs.
    Observable,
    /// Never seen.
    Unobservable,
    /// Withheld until a release state is visited, then disclosed with its position.
    Releasable,
}

impl EventClass {
    /// Short code used in model documents.
    pub fn code(self) -> &'static str {
        match self {
            EventClass::Observable => "o",
            EventClass::Unobservable => "uo",
            EventClass::Releasable => "r",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "o" => Some(EventClass::Observable),
            "uo" => Some(EventClass::Unobservable),
            "r" => Some(EventClass::Releasable),
            _ => None,
        }
    }
}

impl fmt::Display for EventClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// A set of event classes, used as the target alphabet of a natural projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassSet {
    observable: bool,
    unobservable: bool,
    releasable: bool,
}

impl ClassSet {
    /// `Σo`
    pub const OBSERVABLE: ClassSet = ClassSet {
        observable: true,
        unobservable: false,
        releasable: false,
    };
    /// `Σo ∪ Σr`
    pub const VISIBLE: ClassSet = ClassSet {
        observable: true,
        unobservable: false,
        releasable: true,
    };
    /// `Σ`
    pub const ALL: ClassSet = ClassSet {
        observable: true,
        unobservable: true,
        releasable: true,
    };

    pub fn contains(self, class: EventClass) -> bool {
        match class {
            EventClass::Observable => self.observable,
            EventClass::Unobservable => self.unobservable,
            EventClass::Releasable => self.releasable,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("state `{0}` is declared more than once")]
    DuplicateState(String),
    #[error("event `{0}` is declared more than once")]
    DuplicateEvent(String),
    #[error("partition violation: event `{name}` is declared both as `{first}` and as `{second}`")]
    PartitionViolation {
        name: String,
        first: EventClass,
        second: EventClass,
    },
    #[error("event `{event}` has unknown class `{class}` (expected \"o\", \"uo\" or \"r\")")]
    UnknownClass { event: String, class: String },
    #[error("empty identifier in {0}")]
    EmptyIdentifier(&'static str),
    #[error("{context} refers to undeclared state `{name}`")]
    UndeclaredState { name: String, context: &'static str },
    #[error("{context} refers to undeclared event `{name}`")]
    UndeclaredEvent { name: String, context: &'static str },
    #[error("model has no initial state")]
    MissingInitial,
    #[error("transition ({state}, {event}) is listed more than once")]
    DuplicateTransition { state: String, event: String },
    #[error(
        "nondeterministic transitions from `{state}` on `{event}`: to `{first}` and to `{second}`"
    )]
    Nondeterministic {
        state: String,
        event: String,
        first: String,
        second: String,
    },
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("state index {0} is out of range")]
    StateOutOfRange(usize),
    #[error("event index {0} is out of range")]
    EventOutOfRange(usize),
}

/// Event names together with their classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
    classes: Vec<EventClass>,
    index: HashMap<String, EventId>,
}

impl Alphabet {
    fn new(mut events: Vec<(String, EventClass)>) -> Self {
        events.sort();
        let index = events
            .iter()
            .enumerate()
            .map(|(i, (name, _))| (name.clone(), i))
            .collect();
        let (names, classes) = events.into_iter().unzip();
        Alphabet {
            names,
            classes,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn ids(&self) -> std::ops::Range<EventId> {
        0..self.names.len()
    }

    pub fn name(&self, event: EventId) -> &str {
        &self.names[event]
    }

    pub fn class(&self, event: EventId) -> EventClass {
        self.classes[event]
    }

    pub fn id(&self, name: &str) -> Result<EventId, ModelError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| ModelError::UnknownEvent(name.to_string()))
    }

    pub fn with_class(&self, class: EventClass) -> impl Iterator<Item = EventId> + '_ {
        self.ids().filter(move |&e| self.classes[e] == class)
    }

    /// Natural projection of `word` onto the events whose class is in `keep`.
    pub fn project(&self, word: &[EventId], keep: ClassSet) -> Vec<EventId> {
        word.iter()
            .copied()
            .filter(|&e| keep.contains(self.classes[e]))
            .collect()
    }

    /// Parses a comma-separated list of event names. The empty string is `ε`.
    pub fn parse_word(&self, text: &str) -> Result<Vec<EventId>, ModelError> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(Vec::new());
        }
        text.split(',').map(|name| self.id(name.trim())).collect()
    }

    /// Event names joined by `sep`; `eps` for the empty word.
    pub fn format_word(&self, word: &[EventId], sep: &str) -> String {
        if word.is_empty() {
            return "eps".to_string();
        }
        word.iter()
            .map(|&e| self.names[e].as_str())
            .collect::<Vec<_>>()
            .join(sep)
    }

    pub fn word_names(&self, word: &[EventId]) -> Vec<String> {
        word.iter().map(|&e| self.names[e].clone()).collect()
    }
}

/// Natural projection `P_keep(word)`.
pub fn natural_projection(alphabet: &Alphabet, word: &[EventId], keep: ClassSet) -> Vec<EventId> {
    alphabet.project(word, keep)
}

/// A deterministic automaton `G = (X, Σ, δ, x0)` with release states `X_r`
/// and secret states `X_S`.
///
/// States are kept in lexicographic order of their names; `StateId`s index
/// into that order. A missing entry in the transition table means the
/// transition is undefined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    states: Vec<String>,
    state_index: HashMap<String, StateId>,
    alphabet: Alphabet,
    delta: Vec<Vec<Option<StateId>>>,
    initial: StateId,
    release: Vec<bool>,
    secret: Vec<bool>,
    allow_immediate_release: bool,
    augmented: bool,
}

impl Model {
    pub fn builder() -> ModelBuilder {
        ModelBuilder::default()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_ids(&self) -> std::ops::Range<StateId> {
        0..self.states.len()
    }

    pub fn state_name(&self, state: StateId) -> &str {
        &self.states[state]
    }

    pub fn state_id(&self, name: &str) -> Result<StateId, ModelError> {
        self.state_index
            .get(name)
            .copied()
            .ok_or_else(|| ModelError::UnknownState(name.to_string()))
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_release(&self, state: StateId) -> bool {
        self.release[state]
    }

    pub fn is_secret(&self, state: StateId) -> bool {
        self.secret[state]
    }

    pub fn release_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.state_ids().filter(|&x| self.release[x])
    }

    pub fn secret_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.state_ids().filter(|&x| self.secret[x])
    }

    /// Whether the document opted out of the no-immediate-release check.
    ///
    /// With such transitions the observer can drop states from its
    /// estimates (it never adds spurious ones), so estimates and verdicts
    /// are no longer guaranteed exact.
    pub fn allows_immediate_release(&self) -> bool {
        self.allow_immediate_release
    }

    pub fn set_allow_immediate_release(&mut self, allow: bool) {
        self.allow_immediate_release = allow;
    }

    /// Whether this model was produced by [`crate::augment`].
    pub fn is_augmented(&self) -> bool {
        self.augmented
    }

    pub(crate) fn mark_augmented(&mut self) {
        self.augmented = true;
    }

    /// `δ(x, σ)` without bounds checking of its arguments.
    pub fn successor(&self, state: StateId, event: EventId) -> Option<StateId> {
        self.delta[state][event]
    }

    /// `δ(x, σ)`; errors on out-of-range identifiers.
    pub fn step(&self, state: StateId, event: EventId) -> Result<Option<StateId>, ModelError> {
        if state >= self.states.len() {
            return Err(ModelError::StateOutOfRange(state));
        }
        if event >= self.alphabet.len() {
            return Err(ModelError::EventOutOfRange(event));
        }
        Ok(self.delta[state][event])
    }

    /// `δ(x, σ)` by name.
    pub fn step_by_name(&self, state: &str, event: &str) -> Result<Option<&str>, ModelError> {
        let x = self.state_id(state)?;
        let e = self.alphabet.id(event)?;
        Ok(self.delta[x][e].map(|y| self.state_name(y)))
    }

    /// `δ(x, s)`, `None` as soon as a step is undefined.
    pub fn run_from(&self, state: StateId, word: &[EventId]) -> Option<StateId> {
        word.iter()
            .try_fold(state, |x, &e| self.delta.get(x)?.get(e).copied().flatten())
    }

    /// `δ(x0, s)`.
    pub fn run(&self, word: &[EventId]) -> Option<StateId> {
        self.run_from(self.initial, word)
    }

    /// All defined transitions `(x, σ, x')` in index order.
    pub fn transitions(&self) -> impl Iterator<Item = (StateId, EventId, StateId)> + '_ {
        self.delta.iter().enumerate().flat_map(|(x, row)| {
            row.iter()
                .enumerate()
                .filter_map(move |(e, y)| y.map(|y| (x, e, y)))
        })
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions().count()
    }

    /// Copy of this model with a different secret set.
    pub fn with_secret_states<S: AsRef<str>>(&self, names: &[S]) -> Result<Model, ModelError> {
        let mut model = self.clone();
        model.secret = self.flags_for(names, "secret_states")?;
        Ok(model)
    }

    /// Copy of this model with a different release set.
    pub fn with_release_states<S: AsRef<str>>(&self, names: &[S]) -> Result<Model, ModelError> {
        let mut model = self.clone();
        model.release = self.flags_for(names, "release_states")?;
        Ok(model)
    }

    /// Copy of this model with `event` moved to `class`.
    pub fn with_event_class(&self, event: &str, class: EventClass) -> Result<Model, ModelError> {
        let e = self.alphabet.id(event)?;
        let mut model = self.clone();
        model.alphabet.classes[e] = class;
        Ok(model)
    }

    fn flags_for<S: AsRef<str>>(
        &self,
        names: &[S],
        context: &'static str,
    ) -> Result<Vec<bool>, ModelError> {
        let mut flags = vec![false; self.states.len()];
        for name in names {
            let name = name.as_ref();
            let x = self
                .state_index
                .get(name)
                .ok_or_else(|| ModelError::UndeclaredState {
                    name: name.to_string(),
                    context,
                })?;
            flags[*x] = true;
        }
        Ok(flags)
    }

    /// Checks the model's well-formedness conditions. Violations are
    /// reported, never raised.
    pub fn validate(&self) -> ValidationReport {
        let mut issues = Vec::new();
        if !self.states.is_empty() && self.secret.iter().all(|&s| s) {
            issues.push(Issue {
                severity: Severity::Error,
                finding: Finding::SecretCoversAllStates,
            });
        }
        let immediate = if self.allow_immediate_release {
            Severity::Warning
        } else {
            Severity::Error
        };
        for (x, e, y) in self.transitions() {
            if self.alphabet.class(e) == EventClass::Releasable && self.release[y] {
                issues.push(Issue {
                    severity: immediate,
                    finding: Finding::ImmediateRelease {
                        source: self.states[x].clone(),
                        event: self.alphabet.name(e).to_string(),
                        target: self.states[y].clone(),
                    },
                });
            }
        }
        if self.release[self.initial] {
            issues.push(Issue {
                severity: Severity::Info,
                finding: Finding::InitialIsRelease {
                    state: self.states[self.initial].clone(),
                },
            });
        }
        ValidationReport { issues }
    }

    /// Serializes to the model document format. Keys appear in schema order;
    /// state, transition and set lists are sorted.
    pub fn to_document(&self) -> String {
        let doc = DocumentOut {
            states: self.states.iter().map(String::as_str).collect(),
            events: self
                .alphabet
                .ids()
                .map(|e| (self.alphabet.name(e), self.alphabet.class(e).code()))
                .collect(),
            initial: &self.states[self.initial],
            transitions: {
                let mut ts: Vec<[&str; 3]> = self
                    .transitions()
                    .map(|(x, e, y)| {
                        [
                            self.states[x].as_str(),
                            self.alphabet.name(e),
                            self.states[y].as_str(),
                        ]
                    })
                    .collect();
                ts.sort();
                ts
            },
            release_states: self.release_states().map(|x| self.state_name(x)).collect(),
            secret_states: self.secret_states().map(|x| self.state_name(x)).collect(),
            allow_immediate_release: self.allow_immediate_release.then_some(true),
            augmented: self.augmented.then_some(true),
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("model document serializes");
        text.push('\n');
        text
    }
}

impl FromStr for Model {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_model(s)
    }
}

/// Parses a model document.
pub fn parse_model(text: &str) -> Result<Model, ModelError> {
    let doc: DocumentIn = serde_json::from_str(text).map_err(|e| ModelError::Syntax {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;
    let mut builder = Model::builder();
    for state in doc.states {
        builder = builder.state(state);
    }
    for (name, code) in doc.events.0 {
        let class = EventClass::from_code(&code).ok_or_else(|| ModelError::UnknownClass {
            event: name.clone(),
            class: code.clone(),
        })?;
        builder = builder.event(name, class);
    }
    builder = builder.initial(doc.initial);
    for (src, event, dst) in doc.transitions {
        builder = builder.transition(src, event, dst);
    }
    builder
        .release_states(doc.release_states)
        .secret_states(doc.secret_states)
        .allow_immediate_release(doc.allow_immediate_release)
        .augmented(doc.augmented)
        .build()
}

fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    }
}

/// Incremental constructor; `build` checks references and determinism.
#[derive(Debug, Default, Clone)]
pub struct ModelBuilder {
    states: Vec<String>,
    events: Vec<(String, EventClass)>,
    initial: Option<String>,
    transitions: Vec<(String, String, String)>,
    release: Vec<String>,
    secret: Vec<String>,
    allow_immediate_release: bool,
    augmented: bool,
}

impl ModelBuilder {
    pub fn state(mut self, name: impl Into<String>) -> Self {
        self.states.push(name.into());
        self
    }

    pub fn states<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.states.extend(names.into_iter().map(Into::into));
        self
    }

    pub fn event(mut self, name: impl Into<String>, class: EventClass) -> Self {
        self.events.push((name.into(), class));
        self
    }

    pub fn initial(mut self, name: impl Into<String>) -> Self {
        self.initial = Some(name.into());
        self
    }

    pub fn transition(
        mut self,
        src: impl Into<String>,
        event: impl Into<String>,
        dst: impl Into<String>,
    ) -> Self {
        self.transitions
            .push((src.into(), event.into(), dst.into()));
        self
    }

    pub fn release_states<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.release.extend(names.into_iter().map(Into::into));
        self
    }

    pub fn secret_states<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.secret.extend(names.into_iter().map(Into::into));
        self
    }

    pub fn allow_immediate_release(mut self, allow: bool) -> Self {
        self.allow_immediate_release = allow;
        self
    }

    fn augmented(mut self, augmented: bool) -> Self {
        self.augmented = augmented;
        self
    }

    pub fn build(self) -> Result<Model, ModelError> {
        let mut seen = BTreeSet::new();
        for state in &self.states {
            if state.is_empty() {
                return Err(ModelError::EmptyIdentifier("states"));
            }
            if !seen.insert(state.as_str()) {
                return Err(ModelError::DuplicateState(state.clone()));
            }
        }
        let mut declared: BTreeMap<&str, EventClass> = BTreeMap::new();
        for (name, class) in &self.events {
            if name.is_empty() {
                return Err(ModelError::EmptyIdentifier("events"));
            }
            if let Some(&first) = declared.get(name.as_str()) {
                return Err(if first == *class {
                    ModelError::DuplicateEvent(name.clone())
                } else {
                    ModelError::PartitionViolation {
                        name: name.clone(),
                        first,
                        second: *class,
                    }
                });
            }
            declared.insert(name, *class);
        }

        let mut states = self.states.clone();
        states.sort();
        let state_index: HashMap<String, StateId> = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        let alphabet = Alphabet::new(self.events.clone());
        let lookup = |name: &str, context: &'static str| {
            state_index
                .get(name)
                .copied()
                .ok_or_else(|| ModelError::UndeclaredState {
                    name: name.to_string(),
                    context,
                })
        };

        let initial = match &self.initial {
            Some(name) => lookup(name, "initial")?,
            None => return Err(ModelError::MissingInitial),
        };
        let mut delta = vec![vec![None; alphabet.len()]; states.len()];
        for (src, event, dst) in &self.transitions {
            let x = lookup(src, "transitions")?;
            let y = lookup(dst, "transitions")?;
            let e = alphabet.index.get(event.as_str()).copied().ok_or_else(|| {
                ModelError::UndeclaredEvent {
                    name: event.clone(),
                    context: "transitions",
                }
            })?;
            match delta[x][e] {
                None => delta[x][e] = Some(y),
                Some(prev) if prev == y => {
                    return Err(ModelError::DuplicateTransition {
                        state: src.clone(),
                        event: event.clone(),
                    })
                }
                Some(prev) => {
                    return Err(ModelError::Nondeterministic {
                        state: src.clone(),
                        event: event.clone(),
                        first: states[prev].clone(),
                        second: dst.clone(),
                    })
                }
            }
        }
        let mut release = vec![false; states.len()];
        for name in &self.release {
            release[lookup(name, "release_states")?] = true;
        }
        let mut secret = vec![false; states.len()];
        for name in &self.secret {
            secret[lookup(name, "secret_states")?] = true;
        }
        Ok(Model {
            states,
            state_index,
            alphabet,
            delta,
            initial,
            release,
            secret,
            allow_immediate_release: self.allow_immediate_release,
            augmented: self.augmented,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Info,
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Finding {
    /// `X_S` must be a strict subset of `X`.
    SecretCoversAllStates,
    /// A releasable event leads straight into a release state. The observer
    /// may then under-approximate estimates.
    ImmediateRelease {
        source: String,
        event: String,
        target: String,
    },
    /// `x0 ∈ X_r`; permitted, reported for information.
    InitialIsRelease { state: String },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::SecretCoversAllStates => {
                f.write_str("secret states must be a strict subset of the states")
            }
            Finding::ImmediateRelease {
                source,
                event,
                target,
            } => write!(
                f,
                "no-immediate-release violated: releasable event `{event}` leads from `{source}` into release state `{target}`"
            ),
            Finding::InitialIsRelease { state } => {
                write!(f, "initial state `{state}` is a release state")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub severity: Severity,
    pub finding: Finding,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.severity, self.finding)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    /// No error-level findings.
    pub fn is_valid(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentIn {
    states: Vec<String>,
    events: EventDecls,
    initial: String,
    transitions: Vec<(String, String, String)>,
    release_states: Vec<String>,
    secret_states: Vec<String>,
    #[serde(default)]
    allow_immediate_release: bool,
    #[serde(default)]
    augmented: bool,
}

#[derive(Serialize)]
struct DocumentOut<'a> {
    states: Vec<&'a str>,
    events: BTreeMap<&'a str, &'static str>,
    initial: &'a str,
    transitions: Vec<[&'a str; 3]>,
    release_states: Vec<&'a str>,
    secret_states: Vec<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    allow_immediate_release: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    augmented: Option<bool>,
}

/// Event declarations in document order, duplicates kept so that they can be
/// reported instead of silently overwritten.
struct EventDecls(Vec<(String, String)>);

impl<'de> Deserialize<'de> for EventDecls {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct DeclVisitor;

        impl<'de> Visitor<'de> for DeclVisitor {
            type Value = EventDecls;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping event names to \"o\", \"uo\" or \"r\"")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<EventDecls, A::Error> {
                let mut decls = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, String>()? {
                    decls.push((k, v));
                }
                Ok(EventDecls(decls))
            }
        }

        deserializer.deserialize_map(DeclVisitor)
    }
}
