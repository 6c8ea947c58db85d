//! Current-state opacity of finite discrete-event systems whose releasable
//! events are disclosed, with their positions, when the system visits a
//! release state.
//!
//! The pipeline is: [`model::Model`] → [`augment::augment`] →
//! [`observer::build_observer`] → [`verify::verify_opacity`]. The
//! [`semantics`] module holds the string-level reference semantics used to
//! check the observer.

pub mod augment;
pub mod cli;
pub mod dot;
pub mod fixtures;
pub mod model;
pub mod observer;
pub mod semantics;
pub mod verify;

pub use augment::{augment, AugModel, AugState, Flag};
pub use model::{parse_model, ClassSet, EventClass, EventId, Model, ModelError, StateId};
pub use observer::{build_observer, ObserverAutomaton, ObserverState};
pub use semantics::{History, Observation, Plant};
pub use verify::{verify_opacity, Verdict, VerifyOptions};
