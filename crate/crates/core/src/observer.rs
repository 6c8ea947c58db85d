//! The three-component observer over the augmented plant.
//!
//! A state `(x̃, q̂, q)` pairs the actual augmented state with two estimates:
//! `q̂` assumes releasable events are seen as they happen (high-level view),
//! `q` is what the intruder can actually infer (low-level view). When a
//! release occurs the low estimate is rebuilt from the high one, since the
//! released events are then known together with their positions.

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::augment::{AugId, AugModel};
use crate::model::{EventClass, EventId, ModelError};

/// Set of augmented states, canonically ordered.
pub type AugSet = BTreeSet<AugId>;

/// States cap applied by [`build_observer`].
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    /// `Σo ∪ Σr` observable, plus transitions into release states.
    High,
    /// Only `Σo` observable, plus transitions into release states.
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reach {
    /// `σ` observed, nothing released.
    OnEvent(EventId),
    /// An unobservable event triggered a release.
    ReleaseOnly,
    /// `σ` observed and a release triggered together.
    EventAndRelease(EventId),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ObserverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("event `{event}` into `{target}` is not observed in the high-level view")]
    NotObserved { event: String, target: String },
    #[error("observer exceeded the limit of {cap} states")]
    StateCap { cap: usize },
    #[error("string is not generated by the model: step {step} is undefined")]
    NotInLanguage { step: usize },
}

/// `(X_1, X_2, X_3)`: actual state, high-level estimate, low-level estimate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObserverState {
    pub actual: AugId,
    pub high: AugSet,
    pub low: AugSet,
}

impl ObserverState {
    /// `X_1 | {X_2} | {X_3}` with augmented state names.
    pub fn label(&self, am: &AugModel) -> String {
        format!(
            "{} | {} | {}",
            am.name(self.actual),
            set_label(am, &self.high),
            set_label(am, &self.low)
        )
    }
}

pub fn set_label(am: &AugModel, set: &AugSet) -> String {
    let names: Vec<_> = set.iter().map(|&x| am.name(x)).collect();
    format!("{{{}}}", names.join(","))
}

fn check_state(am: &AugModel, x: AugId) -> Result<(), ObserverError> {
    if x < am.num_states() {
        Ok(())
    } else {
        Err(ModelError::StateOutOfRange(x).into())
    }
}

fn check_event(am: &AugModel, e: EventId) -> Result<(), ObserverError> {
    if e < am.alphabet().len() {
        Ok(())
    } else {
        Err(ModelError::EventOutOfRange(e).into())
    }
}

/// Whether `event` at `x` produces an observation in `view`.
fn observed(am: &AugModel, x: AugId, event: EventId, view: View) -> bool {
    let Some(y) = am.successor(x, event) else {
        return false;
    };
    let class = am.alphabet().class(event);
    am.is_release(y)
        || match view {
            View::High => class != EventClass::Unobservable,
            View::Low => class == EventClass::Observable,
        }
}

fn observed_events(
    am: &AugModel,
    x: AugId,
    view: View,
) -> Result<BTreeSet<EventId>, ObserverError> {
    check_state(am, x)?;
    Ok(am
        .alphabet()
        .ids()
        .filter(|&e| observed(am, x, e, view))
        .collect())
}

/// `O(x̃)`: events defined at `x̃` that are in `Σo ∪ Σr` or lead into `X̃_r`.
pub fn high_obs_events(am: &AugModel, x: AugId) -> Result<BTreeSet<EventId>, ObserverError> {
    observed_events(am, x, View::High)
}

/// `O_L(x̃)`: events defined at `x̃` that are in `Σo` or lead into `X̃_r`.
pub fn low_obs_events(am: &AugModel, x: AugId) -> Result<BTreeSet<EventId>, ObserverError> {
    observed_events(am, x, View::Low)
}

/// Closure of `q` under transitions that are silent in `view`.
pub fn unobservable_reach(am: &AugModel, q: &AugSet, view: View) -> AugSet {
    let mut out = q.clone();
    let mut work: Vec<AugId> = q.iter().copied().collect();
    while let Some(x) = work.pop() {
        for e in am.alphabet().ids() {
            let Some(y) = am.successor(x, e) else {
                continue;
            };
            if !observed(am, x, e, view) && out.insert(y) {
                work.push(y);
            }
        }
    }
    out
}

/// States reached from `q` in one observed step of the given kind.
pub fn observable_reach(am: &AugModel, q: &AugSet, reach: Reach) -> Result<AugSet, ObserverError> {
    let alphabet = am.alphabet();
    let mut out = AugSet::new();
    match reach {
        Reach::OnEvent(e) | Reach::EventAndRelease(e) => {
            check_event(am, e)?;
            let want_release = matches!(reach, Reach::EventAndRelease(_));
            out.extend(
                q.iter()
                    .filter_map(|&x| am.successor(x, e))
                    .filter(|&y| am.is_release(y) == want_release),
            );
        }
        Reach::ReleaseOnly => {
            for &x in q {
                for e in alphabet.with_class(EventClass::Unobservable) {
                    if let Some(y) = am.successor(x, e) {
                        if am.is_release(y) {
                            out.insert(y);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Intermediate high-level estimate after `event` lands in `target`.
///
/// Only defined when the step is observed in the high-level view, i.e. not
/// for an unobservable event that misses `X̃_r`.
pub fn q_mid(
    am: &AugModel,
    q_hat: &AugSet,
    event: EventId,
    target: AugId,
) -> Result<AugSet, ObserverError> {
    check_event(am, event)?;
    check_state(am, target)?;
    let silent = am.alphabet().class(event) == EventClass::Unobservable;
    let reach = match (silent, am.is_release(target)) {
        (false, false) => Reach::OnEvent(event),
        (true, true) => Reach::ReleaseOnly,
        (false, true) => Reach::EventAndRelease(event),
        (true, false) => {
            return Err(ObserverError::NotObserved {
                event: am.alphabet().name(event).to_string(),
                target: am.name(target),
            })
        }
    };
    observable_reach(am, q_hat, reach)
}

/// `(x̃0, UR({x̃0}), UR_L({x̃0}))`.
pub fn initial_state(am: &AugModel) -> ObserverState {
    let seed = AugSet::from([am.initial()]);
    ObserverState {
        actual: am.initial(),
        high: unobservable_reach(am, &seed, View::High),
        low: unobservable_reach(am, &seed, View::Low),
    }
}

/// The observer transition function `f`; `None` where `δ̃` is undefined.
pub fn observer_step(
    am: &AugModel,
    state: &ObserverState,
    event: EventId,
) -> Result<Option<ObserverState>, ObserverError> {
    check_event(am, event)?;
    check_state(am, state.actual)?;
    Ok(step_unchecked(am, state, event))
}

fn step_unchecked(am: &AugModel, state: &ObserverState, event: EventId) -> Option<ObserverState> {
    let x = state.actual;
    let y = am.successor(x, event)?;
    let in_high = observed(am, x, event, View::High);
    let in_low = observed(am, x, event, View::Low);
    let released = am.is_release(y);

    let mid = in_high.then(|| {
        q_mid(am, &state.high, event, y).unwrap_or_else(|err| {
            unreachable!("high-level observation outside the three update cases: {err}")
        })
    });
    let high = match &mid {
        Some(mid) => unobservable_reach(am, mid, View::High),
        None => state.high.clone(),
    };
    let low = if !in_low {
        state.low.clone()
    } else if !released {
        let moved = observable_reach(am, &state.low, Reach::OnEvent(event))
            .expect("event checked by caller");
        unobservable_reach(am, &moved, View::Low)
    } else {
        let mid = mid
            .as_ref()
            .expect("a release is always a high-level observation");
        unobservable_reach(am, mid, View::Low)
    };
    Some(ObserverState {
        actual: y,
        high,
        low,
    })
}

/// Reachable part of the observer, numbered in breadth-first discovery
/// order with events tried in lexicographic order.
#[derive(Debug, Clone)]
pub struct ObserverAutomaton {
    states: Vec<ObserverState>,
    index: HashMap<ObserverState, usize>,
    delta: Vec<Vec<Option<usize>>>,
    parent: Vec<Option<(usize, EventId)>>,
    complete: bool,
}

impl ObserverAutomaton {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.delta.iter().flatten().filter(|c| c.is_some()).count()
    }

    /// False when construction stopped early at a target state.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn state(&self, id: usize) -> &ObserverState {
        &self.states[id]
    }

    pub fn states(&self) -> impl Iterator<Item = (usize, &ObserverState)> {
        self.states.iter().enumerate()
    }

    pub fn id_of(&self, state: &ObserverState) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn successor(&self, id: usize, event: EventId) -> Option<usize> {
        self.delta[id].get(event).copied().flatten()
    }

    pub fn transitions(&self) -> impl Iterator<Item = (usize, EventId, usize)> + '_ {
        self.delta.iter().enumerate().flat_map(|(x, row)| {
            row.iter()
                .enumerate()
                .filter_map(move |(e, y)| y.map(|y| (x, e, y)))
        })
    }

    /// Observer state reached by `word`.
    pub fn run(&self, word: &[EventId]) -> Result<usize, ObserverError> {
        let mut id = self.initial();
        for (i, &e) in word.iter().enumerate() {
            id = self
                .successor(id, e)
                .ok_or(ObserverError::NotInLanguage { step: i + 1 })?;
        }
        Ok(id)
    }

    /// `X_3(f(s))`, the intruder's current-state estimate after `word`.
    pub fn estimate(&self, word: &[EventId]) -> Result<&AugSet, ObserverError> {
        Ok(&self.states[self.run(word)?].low)
    }

    /// Shortest, then lexicographically least, string reaching `id`.
    pub fn path_to(&self, mut id: usize) -> Vec<EventId> {
        let mut path = Vec::new();
        while let Some((prev, e)) = self.parent[id] {
            path.push(e);
            id = prev;
        }
        path.reverse();
        path
    }
}

pub(crate) struct Exploration {
    pub automaton: ObserverAutomaton,
    pub hit: Option<usize>,
}

/// Breadth-first construction, stopping at the first state for which `stop`
/// holds (checked in discovery order).
pub(crate) fn explore(
    am: &AugModel,
    cap: usize,
    mut stop: impl FnMut(&ObserverState) -> bool,
) -> Result<Exploration, ObserverError> {
    let events = am.alphabet().len();
    let start = initial_state(am);
    let mut obs = ObserverAutomaton {
        states: vec![start.clone()],
        index: HashMap::from([(start.clone(), 0)]),
        delta: vec![vec![None; events]],
        parent: vec![None],
        complete: false,
    };
    if cap == 0 {
        return Err(ObserverError::StateCap { cap });
    }
    if stop(&start) {
        return Ok(Exploration {
            automaton: obs,
            hit: Some(0),
        });
    }
    let mut queue = VecDeque::from([0usize]);
    while let Some(id) = queue.pop_front() {
        for e in 0..events {
            let Some(next) = step_unchecked(am, &obs.states[id], e) else {
                continue;
            };
            let target = match obs.index.get(&next) {
                Some(&t) => t,
                None => {
                    if obs.states.len() >= cap {
                        return Err(ObserverError::StateCap { cap });
                    }
                    let t = obs.states.len();
                    let hit = stop(&next);
                    obs.index.insert(next.clone(), t);
                    obs.states.push(next);
                    obs.delta.push(vec![None; events]);
                    obs.parent.push(Some((id, e)));
                    obs.delta[id][e] = Some(t);
                    if hit {
                        return Ok(Exploration {
                            automaton: obs,
                            hit: Some(t),
                        });
                    }
                    queue.push_back(t);
                    continue;
                }
            };
            obs.delta[id][e] = Some(target);
        }
    }
    obs.complete = true;
    Ok(Exploration {
        automaton: obs,
        hit: None,
    })
}

/// The reachable observer, failing beyond [`DEFAULT_STATE_CAP`] states.
pub fn build_observer(am: &AugModel) -> Result<ObserverAutomaton, ObserverError> {
    build_observer_with_cap(am, DEFAULT_STATE_CAP)
}

pub fn build_observer_with_cap(
    am: &AugModel,
    cap: usize,
) -> Result<ObserverAutomaton, ObserverError> {
    Ok(explore(am, cap, |_| false)?.automaton)
}

/// Estimate after `word` computed by stepping the observer on the fly,
/// without building it.
pub fn estimate_on_the_fly(
    am: &AugModel,
    word: &[EventId],
) -> Result<ObserverState, ObserverError> {
    let mut state = initial_state(am);
    for (i, &e) in word.iter().enumerate() {
        state =
            observer_step(am, &state, e)?.ok_or(ObserverError::NotInLanguage { step: i + 1 })?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::augment;
    use crate::fixtures;
    use crate::model::Model;

    fn fig2() -> AugModel {
        augment(&fixtures::figure2()).unwrap()
    }

    fn set(am: &AugModel, names: &[&str]) -> AugSet {
        names.iter().map(|n| am.id_by_name(n).unwrap()).collect()
    }

    fn ev(am: &AugModel, name: &str) -> EventId {
        am.alphabet().id(name).unwrap()
    }

    fn triple(am: &AugModel, x: &str, high: &[&str], low: &[&str]) -> ObserverState {
        ObserverState {
            actual: am.id_by_name(x).unwrap(),
            high: set(am, high),
            low: set(am, low),
        }
    }

    const LOW0: [&str; 6] = ["0N", "1N", "2Y", "3Y", "4Y", "5Y"];

    #[test]
    fn observation_views() {
        let am = fig2();
        let x0 = am.id_by_name("0N").unwrap();
        assert_eq!(
            high_obs_events(&am, x0).unwrap(),
            BTreeSet::from([ev(&am, "h")])
        );
        assert!(low_obs_events(&am, x0).unwrap().is_empty());
        assert!(low_obs_events(&am, am.id_by_name("2Y").unwrap())
            .unwrap()
            .is_empty());
        assert!(high_obs_events(&am, am.id_by_name("7Y").unwrap())
            .unwrap()
            .contains(&ev(&am, "u")));
        assert!(high_obs_events(&am, am.id_by_name("9Y").unwrap())
            .unwrap()
            .is_empty());
        assert!(high_obs_events(&am, 99).is_err());
        for x in am.ids() {
            let low = low_obs_events(&am, x).unwrap();
            assert!(low.is_subset(&high_obs_events(&am, x).unwrap()));
        }
    }

    #[test]
    fn reaches() {
        let am = fig2();
        let q0 = set(&am, &["0N"]);
        assert_eq!(
            unobservable_reach(&am, &q0, View::High),
            set(&am, &["0N", "1N"])
        );
        assert_eq!(unobservable_reach(&am, &q0, View::Low), set(&am, &LOW0));
        assert!(unobservable_reach(&am, &AugSet::new(), View::Low).is_empty());

        let low0 = set(&am, &LOW0);
        let a = ev(&am, "a");
        assert_eq!(
            observable_reach(&am, &low0, Reach::OnEvent(a)).unwrap(),
            set(&am, &["7Y"])
        );
        assert_eq!(
            observable_reach(&am, &low0, Reach::EventAndRelease(a)).unwrap(),
            set(&am, &["6Y", "9Y"])
        );
        assert_eq!(
            observable_reach(&am, &set(&am, &["7Y"]), Reach::ReleaseOnly).unwrap(),
            set(&am, &["9Y"])
        );
        assert!(observable_reach(&am, &low0, Reach::OnEvent(42)).is_err());
    }

    #[test]
    fn intermediate_estimates() {
        let am = fig2();
        let a = ev(&am, "a");
        let u = ev(&am, "u");
        let y6 = am.id_by_name("6Y").unwrap();
        let y9 = am.id_by_name("9Y").unwrap();
        assert_eq!(
            q_mid(&am, &set(&am, &["4Y", "5Y"]), a, y6).unwrap(),
            set(&am, &["6Y"])
        );
        assert_eq!(
            q_mid(&am, &set(&am, &["7Y"]), u, y9).unwrap(),
            set(&am, &["9Y"])
        );
        assert!(q_mid(&am, &AugSet::new(), a, y6).unwrap().is_empty());
        let n8 = am.id_by_name("8N").unwrap();
        assert!(matches!(
            q_mid(&am, &set(&am, &["6Y"]), u, n8),
            Err(ObserverError::NotObserved { .. })
        ));
    }

    #[test]
    fn figure2_observer_steps() {
        let am = fig2();
        let x0 = initial_state(&am);
        assert_eq!(x0, triple(&am, "0N", &["0N", "1N"], &LOW0));
        let h = ev(&am, "h");
        let a = ev(&am, "a");
        let u = ev(&am, "u");
        let f_h = observer_step(&am, &x0, h).unwrap().unwrap();
        assert_eq!(f_h, triple(&am, "2Y", &["2Y", "3Y"], &LOW0));
        let f_hh = observer_step(&am, &f_h, h).unwrap().unwrap();
        assert_eq!(f_hh, triple(&am, "4Y", &["4Y", "5Y"], &LOW0));
        let f_hha = observer_step(&am, &f_hh, a).unwrap().unwrap();
        assert_eq!(
            f_hha,
            triple(&am, "6Y", &["6Y", "8N", "9N"], &["6Y", "8N", "9N"])
        );
        let from5 = triple(&am, "5Y", &["4Y", "5Y"], &LOW0);
        let to7 = observer_step(&am, &from5, a).unwrap().unwrap();
        assert_eq!(to7, triple(&am, "7Y", &["7Y"], &["7Y"]));
        let to9 = observer_step(&am, &to7, u).unwrap().unwrap();
        assert_eq!(to9, triple(&am, "9Y", &["9Y"], &["9Y"]));
        assert_eq!(observer_step(&am, &x0, a).unwrap(), None);
        assert!(observer_step(&am, &x0, 42).is_err());
    }

    #[test]
    fn figure2_observer() {
        let am = fig2();
        let obs = build_observer(&am).unwrap();
        assert!(obs.is_complete());
        assert_eq!(obs.state(obs.initial()), &initial_state(&am));
        assert!(obs.id_of(&triple(&am, "7Y", &["7Y"], &["7Y"])).is_some());
        let w = am.alphabet().parse_word("u,h,h,a").unwrap();
        assert_eq!(obs.estimate(&w).unwrap(), &set(&am, &["7Y"]));
        let w = am.alphabet().parse_word("h,h,a").unwrap();
        assert_eq!(obs.estimate(&w).unwrap(), &set(&am, &["6Y", "8N", "9N"]));
        assert_eq!(obs.estimate(&[]).unwrap(), &set(&am, &LOW0));
        assert!(obs.estimate(&[ev(&am, "a")]).is_err());
        for (id, _) in obs.states() {
            assert_eq!(obs.run(&obs.path_to(id)).unwrap(), id);
        }
    }

    #[test]
    fn single_state_observer() {
        let m = Model::builder()
            .state("q")
            .event("a", EventClass::Observable)
            .initial("q")
            .build()
            .unwrap();
        let am = augment(&m).unwrap();
        let obs = build_observer(&am).unwrap();
        assert_eq!(obs.num_states(), 1);
        assert_eq!(obs.num_transitions(), 0);
    }

    #[test]
    fn state_cap() {
        let am = fig2();
        assert_eq!(
            build_observer_with_cap(&am, 3).unwrap_err(),
            ObserverError::StateCap { cap: 3 }
        );
        let full = build_observer(&am).unwrap();
        assert!(build_observer_with_cap(&am, full.num_states()).is_ok());
    }

    #[test]
    fn on_the_fly_matches_automaton() {
        let am = augment(&fixtures::medical_cloud()).unwrap();
        let obs = build_observer(&am).unwrap();
        let w = am
            .alphabet()
            .parse_word(
                "image,upload_X,filt,filt,anoy,back,pack2,upload_Y,return_user,blood,upload_X",
            )
            .unwrap();
        let fly = estimate_on_the_fly(&am, &w).unwrap();
        assert_eq!(obs.state(obs.run(&w).unwrap()), &fly);
    }
}
