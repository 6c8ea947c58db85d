//! Reference semantics of state-dependent information release: release
//! instants, the release-aware projection, observation histories and a
//! brute-force current-state estimator.
//!
//! Everything here works on strings directly and is written for clarity,
//! not speed. The observer in [`crate::observer`] is the fast path; these
//! functions are what it is checked against.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;
use std::hash::Hash;

use thiserror::Error;

use crate::model::{Alphabet, ClassSet, EventClass, EventId, Model, StateId};

/// A deterministic plant with release and secret states.
///
/// Implemented by [`Model`] and by [`crate::augment::AugModel`] so that the
/// same semantics can be evaluated on both.
pub trait Plant {
    type State: Copy + Eq + Ord + Hash + fmt::Debug;

    fn alphabet(&self) -> &Alphabet;
    fn initial_state(&self) -> Self::State;
    fn next(&self, state: Self::State, event: EventId) -> Option<Self::State>;
    fn releases_at(&self, state: Self::State) -> bool;
    fn secret_at(&self, state: Self::State) -> bool;
    fn label(&self, state: Self::State) -> String;

    /// `δ(s)`, or `None` if `s` is not generated.
    fn run_word(&self, word: &[EventId]) -> Option<Self::State> {
        word.iter()
            .try_fold(self.initial_state(), |x, &e| self.next(x, e))
    }
}

impl Plant for Model {
    type State = StateId;

    fn alphabet(&self) -> &Alphabet {
        Model::alphabet(self)
    }

    fn initial_state(&self) -> StateId {
        self.initial()
    }

    fn next(&self, state: StateId, event: EventId) -> Option<StateId> {
        self.successor(state, event)
    }

    fn releases_at(&self, state: StateId) -> bool {
        self.is_release(state)
    }

    fn secret_at(&self, state: StateId) -> bool {
        self.is_secret(state)
    }

    fn label(&self, state: StateId) -> String {
        self.state_name(state).to_string()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("string is not generated by the model: step {step} is undefined")]
    NotInLanguage { step: usize },
}

/// What the intruder sees after a string: a sequence over `Σo ∪ Σr`.
///
/// Ordered by length first, then lexicographically by event, which is the
/// temporal order of the elements of a history.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Observation(pub Vec<EventId>);

impl Observation {
    pub fn events(&self) -> &[EventId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Event names joined by `.`; `eps` when empty.
    pub fn display(&self, alphabet: &Alphabet) -> String {
        alphabet.format_word(&self.0, ".")
    }
}

impl Ord for Observation {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Observation {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// The set of observations produced along all prefixes of a string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct History(pub BTreeSet<Observation>);

impl History {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, obs: &Observation) -> bool {
        self.0.contains(obs)
    }

    /// Elements in temporal order.
    pub fn iter(&self) -> impl Iterator<Item = &Observation> {
        self.0.iter()
    }

    /// The most recent observation.
    pub fn latest(&self) -> Option<&Observation> {
        self.0.iter().next_back()
    }

    pub fn strings(&self, alphabet: &Alphabet) -> Vec<String> {
        self.0.iter().map(|o| o.display(alphabet)).collect()
    }

    /// `{eps, h, h.a}` style rendering.
    pub fn display(&self, alphabet: &Alphabet) -> String {
        format!("{{{}}}", self.strings(alphabet).join(", "))
    }
}

impl FromIterator<Observation> for History {
    fn from_iter<I: IntoIterator<Item = Observation>>(iter: I) -> Self {
        History(iter.into_iter().collect())
    }
}

/// States visited by `word`, starting with the initial state.
fn trajectory<P: Plant>(plant: &P, word: &[EventId]) -> Result<Vec<P::State>, SemanticsError> {
    let mut states = Vec::with_capacity(word.len() + 1);
    let mut x = plant.initial_state();
    states.push(x);
    for (i, &e) in word.iter().enumerate() {
        x = plant
            .next(x, e)
            .ok_or(SemanticsError::NotInLanguage { step: i + 1 })?;
        states.push(x);
    }
    Ok(states)
}

/// The largest `i` such that the prefix of length `i` ends in a release
/// state; `0` when there is none.
pub fn release_instant<P: Plant>(plant: &P, word: &[EventId]) -> Result<usize, SemanticsError> {
    let states = trajectory(plant, word)?;
    Ok(states
        .iter()
        .rposition(|&x| plant.releases_at(x))
        .unwrap_or(0))
}

/// The intruder's observation of `word`: releasable events are visible up to
/// the release instant, only observable events after it.
pub fn dirm_projection<P: Plant>(
    plant: &P,
    word: &[EventId],
) -> Result<Observation, SemanticsError> {
    let cut = release_instant(plant, word)?;
    let alphabet = plant.alphabet();
    let mut obs = alphabet.project(&word[..cut], ClassSet::VISIBLE);
    obs.extend(alphabet.project(&word[cut..], ClassSet::OBSERVABLE));
    Ok(Observation(obs))
}

/// `{ P_R(s') : s' a prefix of s }`.
pub fn history<P: Plant>(plant: &P, word: &[EventId]) -> Result<History, SemanticsError> {
    trajectory(plant, word)?;
    (0..=word.len())
        .map(|n| dirm_projection(plant, &word[..n]))
        .collect()
}

/// Running release-aware projection, advanced one event at a time.
///
/// `visible` is `P_{Σo∪Σr}` of the string so far; `current` is its release
/// projection. A release state overwrites `current` with `visible`.
#[derive(Debug, Clone, Default)]
struct ProjectionCursor {
    visible: Vec<EventId>,
    current: Vec<EventId>,
}

impl ProjectionCursor {
    /// Returns true when the observation changed.
    fn advance(&mut self, class: EventClass, event: EventId, reached_release: bool) -> bool {
        if class != EventClass::Unobservable {
            self.visible.push(event);
        }
        if reached_release {
            if self.current != self.visible {
                self.current.clone_from(&self.visible);
                return true;
            }
            false
        } else if class == EventClass::Observable {
            self.current.push(event);
            true
        } else {
            false
        }
    }
}

/// Calls `visit(word, state, history)` for every generated string of length
/// at most `bound`, in depth-first order.
pub fn for_each_word<P, F>(plant: &P, bound: usize, mut visit: F)
where
    P: Plant,
    F: FnMut(&[EventId], P::State, &History),
{
    struct Frame<S> {
        state: S,
        cursor: ProjectionCursor,
        next_event: EventId,
        added: bool,
    }

    let alphabet = plant.alphabet();
    let x0 = plant.initial_state();
    let mut word = Vec::new();
    let mut hist = History::default();
    hist.0.insert(Observation::default());
    visit(&word, x0, &hist);
    let mut stack = vec![Frame {
        state: x0,
        cursor: ProjectionCursor::default(),
        next_event: 0,
        added: false,
    }];
    while let Some(top) = stack.last_mut() {
        if word.len() >= bound || top.next_event >= alphabet.len() {
            let frame = stack.pop().expect("non-empty stack");
            if frame.added {
                hist.0.remove(&Observation(frame.cursor.current));
            }
            word.pop();
            continue;
        }
        let e = top.next_event;
        top.next_event += 1;
        let Some(y) = plant.next(top.state, e) else {
            continue;
        };
        let mut cursor = top.cursor.clone();
        let changed = cursor.advance(alphabet.class(e), e, plant.releases_at(y));
        let added = changed && hist.0.insert(Observation(cursor.current.clone()));
        word.push(e);
        visit(&word, y, &hist);
        stack.push(Frame {
            state: y,
            cursor,
            next_event: 0,
            added,
        });
    }
}

/// `{ δ(t) : t ∈ L(G), |t| ≤ bound, H_R(t) = target }` by exhaustive search.
///
/// Equals the true current-state estimate whenever `bound` is at least the
/// length of every history-equivalent string, e.g. on acyclic plants with
/// `bound ≥ |X|`.
pub fn cse_bruteforce<P: Plant>(plant: &P, target: &History, bound: usize) -> BTreeSet<P::State> {
    let mut found = BTreeSet::new();
    let empty = Observation::default();
    if !target.contains(&empty) {
        return found;
    }
    let alphabet = plant.alphabet();
    // (state, cursor, depth, number of distinct observations so far)
    let mut stack = vec![(
        plant.initial_state(),
        ProjectionCursor::default(),
        0usize,
        1usize,
    )];
    while let Some((x, cursor, depth, distinct)) = stack.pop() {
        if distinct == target.len() {
            found.insert(x);
        }
        if depth == bound {
            continue;
        }
        for e in alphabet.ids() {
            let Some(y) = plant.next(x, e) else { continue };
            let mut next = cursor.clone();
            let changed = next.advance(alphabet.class(e), e, plant.releases_at(y));
            if changed && !target.contains(&Observation(next.current.clone())) {
                continue;
            }
            stack.push((y, next, depth + 1, distinct + usize::from(changed)));
        }
    }
    found
}

/// Every history produced by strings of length at most `bound`, with the
/// states those strings reach. One enumeration answers all
/// [`cse_bruteforce`] queries at this bound.
pub fn estimates_by_history<P: Plant>(
    plant: &P,
    bound: usize,
) -> BTreeMap<History, BTreeSet<P::State>> {
    let mut table: BTreeMap<History, BTreeSet<P::State>> = BTreeMap::new();
    for_each_word(plant, bound, |_, x, h| {
        table.entry(h.clone()).or_default().insert(x);
    });
    table
}

/// Current-state opacity under the plain natural projection onto `Σo`
/// (releasable events are treated as unobservable, release states ignored).
pub fn classical_opacity<P: Plant>(plant: &P) -> bool {
    classical_observer(plant)
        .iter()
        .all(|estimate| !estimate.iter().all(|&x| plant.secret_at(x)))
}

/// Reachable state estimates of the standard observer over `Σo`.
pub fn classical_observer<P: Plant>(plant: &P) -> BTreeSet<BTreeSet<P::State>> {
    let alphabet = plant.alphabet();
    let closure = |seed: BTreeSet<P::State>| {
        let mut out = seed.clone();
        let mut work: Vec<_> = seed.into_iter().collect();
        while let Some(x) = work.pop() {
            for e in alphabet.ids() {
                if alphabet.class(e) == EventClass::Observable {
                    continue;
                }
                if let Some(y) = plant.next(x, e) {
                    if out.insert(y) {
                        work.push(y);
                    }
                }
            }
        }
        out
    };
    let start = closure(BTreeSet::from([plant.initial_state()]));
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(q) = queue.pop_front() {
        for e in alphabet.with_class(EventClass::Observable) {
            let moved: BTreeSet<_> = q.iter().filter_map(|&x| plant.next(x, e)).collect();
            if moved.is_empty() {
                continue;
            }
            let next = closure(moved);
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    seen.into_iter().collect()
}
