//! The augmented plant: each state carries a flag recording whether some
//! releasable event has occurred since the last visit to a release state.
//!
//! Only release states reached with the flag set actually disclose anything,
//! so the augmented release set is `X_r × {Y}`.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::model::{Alphabet, EventClass, EventId, Issue, Model, ModelError, StateId};
use crate::semantics::Plant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flag {
    /// Nothing is waiting to be released.
    N,
    /// Some releasable event is waiting to be released.
    Y,
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flag::N => "N",
            Flag::Y => "Y",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AugState {
    pub base: StateId,
    pub flag: Flag,
}

/// Index of an [`AugState`] inside an [`AugModel`], ordered by `(base, flag)`.
pub type AugId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AugmentError {
    #[error("model is not valid: {}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Issue>),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The reachable part of the augmented plant.
#[derive(Debug, Clone)]
pub struct AugModel {
    source: Model,
    states: Vec<AugState>,
    index: HashMap<AugState, AugId>,
    delta: Vec<Vec<Option<AugId>>>,
    initial: AugId,
}

/// The flag after taking `event` from `(x, flag)`.
fn next_flag(model: &Model, x: StateId, flag: Flag, event: EventId) -> Flag {
    if model.alphabet().class(event) == EventClass::Releasable
        || (!model.is_release(x) && flag == Flag::Y)
    {
        Flag::Y
    } else {
        Flag::N
    }
}

/// Builds the augmented plant of `model`, reachable part only.
///
/// Fails if the model has error-level validation findings.
pub fn augment(model: &Model) -> Result<AugModel, AugmentError> {
    let report = model.validate();
    if !report.is_valid() {
        return Err(AugmentError::Invalid(report.errors().cloned().collect()));
    }
    Ok(augment_unchecked(model))
}

pub(crate) fn augment_unchecked(model: &Model) -> AugModel {
    let events = model.alphabet().len();
    let start = AugState {
        base: model.initial(),
        flag: Flag::N,
    };
    let mut seen: HashMap<AugState, usize> = HashMap::from([(start, 0)]);
    let mut order = vec![start];
    let mut edges: Vec<Vec<Option<usize>>> = Vec::new();
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        let mut row = vec![None; events];
        for (e, cell) in row.iter_mut().enumerate() {
            let Some(y) = model.successor(s.base, e) else {
                continue;
            };
            let t = AugState {
                base: y,
                flag: next_flag(model, s.base, s.flag, e),
            };
            let id = *seen.entry(t).or_insert_with(|| {
                order.push(t);
                queue.push_back(t);
                order.len() - 1
            });
            *cell = Some(id);
        }
        edges.push(row);
    }

    // Renumber in (base, flag) order.
    let mut states = order.clone();
    states.sort();
    let index: HashMap<AugState, AugId> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut delta = vec![Vec::new(); states.len()];
    for (old, row) in edges.into_iter().enumerate() {
        delta[index[&order[old]]] = row
            .into_iter()
            .map(|cell| cell.map(|t| index[&order[t]]))
            .collect();
    }
    AugModel {
        source: model.clone(),
        initial: index[&start],
        states,
        index,
        delta,
    }
}

impl AugModel {
    pub fn source(&self) -> &Model {
        &self.source
    }

    pub fn alphabet(&self) -> &Alphabet {
        self.source.alphabet()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn ids(&self) -> std::ops::Range<AugId> {
        0..self.states.len()
    }

    pub fn state(&self, id: AugId) -> AugState {
        self.states[id]
    }

    pub fn id(&self, state: AugState) -> Option<AugId> {
        self.index.get(&state).copied()
    }

    /// Looks up a state printed as `<base><flag>`, e.g. `"7Y"`.
    pub fn id_by_name(&self, name: &str) -> Result<AugId, ModelError> {
        let unknown = || ModelError::UnknownState(name.to_string());
        let (base, flag) = match name.strip_suffix('Y') {
            Some(base) => (base, Flag::Y),
            None => (name.strip_suffix('N').ok_or_else(unknown)?, Flag::N),
        };
        let base = self.source.state_id(base).map_err(|_| unknown())?;
        self.id(AugState { base, flag }).ok_or_else(unknown)
    }

    pub fn initial(&self) -> AugId {
        self.initial
    }

    /// `<base><flag>`.
    pub fn name(&self, id: AugId) -> String {
        let s = self.states[id];
        format!("{}{}", self.source.state_name(s.base), s.flag)
    }

    /// Membership in `X̃_r = X_r × {Y}`.
    pub fn is_release(&self, id: AugId) -> bool {
        let s = self.states[id];
        s.flag == Flag::Y && self.source.is_release(s.base)
    }

    /// Membership in `X̃_S = X_S × {N, Y}`.
    pub fn is_secret(&self, id: AugId) -> bool {
        self.source.is_secret(self.states[id].base)
    }

    pub fn successor(&self, id: AugId, event: EventId) -> Option<AugId> {
        self.delta[id][event]
    }

    /// `δ̃(x̃, σ)`; errors on identifiers outside the model.
    pub fn augmented_step(&self, id: AugId, event: EventId) -> Result<Option<AugId>, ModelError> {
        if id >= self.states.len() {
            return Err(ModelError::StateOutOfRange(id));
        }
        if event >= self.alphabet().len() {
            return Err(ModelError::EventOutOfRange(event));
        }
        Ok(self.delta[id][event])
    }

    pub fn transitions(&self) -> impl Iterator<Item = (AugId, EventId, AugId)> + '_ {
        self.delta.iter().enumerate().flat_map(|(x, row)| {
            row.iter()
                .enumerate()
                .filter_map(move |(e, y)| y.map(|y| (x, e, y)))
        })
    }

    /// The augmented plant as an ordinary model, states named `<base><flag>`,
    /// release and secret sets lifted, marked as augmented.
    pub fn to_model(&self) -> Model {
        let alphabet = self.alphabet();
        let mut builder = Model::builder()
            .states(self.ids().map(|i| self.name(i)))
            .initial(self.name(self.initial))
            .release_states(
                self.ids()
                    .filter(|&i| self.is_release(i))
                    .map(|i| self.name(i)),
            )
            .secret_states(
                self.ids()
                    .filter(|&i| self.is_secret(i))
                    .map(|i| self.name(i)),
            )
            .allow_immediate_release(self.source.allows_immediate_release());
        for e in alphabet.ids() {
            builder = builder.event(alphabet.name(e), alphabet.class(e));
        }
        for (x, e, y) in self.transitions() {
            builder = builder.transition(self.name(x), alphabet.name(e), self.name(y));
        }
        let mut model = builder
            .build()
            .expect("augmented names are unique and references resolve");
        model.mark_augmented();
        model
    }

    /// Model document of [`AugModel::to_model`], with `"augmented": true`.
    pub fn to_document(&self) -> String {
        self.to_model().to_document()
    }
}

impl Plant for AugModel {
    type State = AugId;

    fn alphabet(&self) -> &Alphabet {
        self.source.alphabet()
    }

    fn initial_state(&self) -> AugId {
        self.initial
    }

    fn next(&self, state: AugId, event: EventId) -> Option<AugId> {
        self.delta[state][event]
    }

    fn releases_at(&self, state: AugId) -> bool {
        self.is_release(state)
    }

    fn secret_at(&self, state: AugId) -> bool {
        self.is_secret(state)
    }

    fn label(&self, state: AugId) -> String {
        self.name(state)
    }
}
