//! Seeded random models shared by the integration suites.
#![allow(dead_code)]

use dirm_opacity::{EventClass, Model};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_states: usize,
    pub max_events: usize,
    /// Only edges from lower to higher state index.
    pub acyclic: bool,
    /// No releasable events and no release states.
    pub classical: bool,
    /// Let releasable events lead straight into release states.
    pub immediate_release: bool,
    pub edge_probability: f64,
}

impl Shape {
    pub fn new(max_states: usize, max_events: usize) -> Self {
        Shape {
            max_states,
            max_events,
            acyclic: false,
            classical: false,
            immediate_release: false,
            edge_probability: 0.45,
        }
    }

    /// Acyclic models are denser, since forward-only edges are already sparse.
    pub fn acyclic(self) -> Self {
        Shape {
            acyclic: true,
            edge_probability: 0.8,
            ..self
        }
    }

    pub fn with_immediate_release(self) -> Self {
        Shape {
            immediate_release: true,
            ..self
        }
    }

    pub fn classical(self) -> Self {
        Shape {
            classical: true,
            ..self
        }
    }
}

fn state_name(i: usize) -> String {
    format!("s{i:02}")
}

/// A random deterministic model with a strict secret subset. Unless the
/// shape allows it, no releasable event leads straight into a release state.
pub fn random_model(rng: &mut StdRng, shape: Shape) -> Model {
    let n = rng.gen_range(1..=shape.max_states);
    let k = rng.gen_range(1..=shape.max_events);
    let release: Vec<bool> = (0..n)
        .map(|_| !shape.classical && rng.gen_bool(0.3))
        .collect();
    let mut b = Model::builder()
        .states((0..n).map(state_name))
        .initial(state_name(0))
        .allow_immediate_release(shape.immediate_release)
        .release_states((0..n).filter(|&x| release[x]).map(state_name));
    let mut classes = Vec::new();
    for e in 0..k {
        let class = match rng.gen_range(0..if shape.classical { 2 } else { 3 }) {
            0 => EventClass::Observable,
            1 => EventClass::Unobservable,
            _ => EventClass::Releasable,
        };
        classes.push(class);
        b = b.event(format!("e{e}"), class);
    }
    for x in 0..n {
        for (e, &class) in classes.iter().enumerate() {
            let lo = if shape.acyclic { x + 1 } else { 0 };
            if lo >= n || !rng.gen_bool(shape.edge_probability) {
                continue;
            }
            let y = rng.gen_range(lo..n);
            if class == EventClass::Releasable && release[y] && !shape.immediate_release {
                continue;
            }
            b = b.transition(state_name(x), format!("e{e}"), state_name(y));
        }
    }
    let mut secret: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.35)).collect();
    if secret.len() == n {
        secret.remove(rng.gen_range(0..n));
    }
    let g = b
        .secret_states(secret.iter().map(|&i| state_name(i)))
        .build()
        .expect("generated models are well formed");
    // Keep the secret strict on the reachable part too, so the augmented
    // plant (which holds reachable states only) is itself a valid model.
    let reachable = reachable_states(&g);
    if reachable.iter().all(|&x| g.is_secret(x)) {
        let spared = reachable[rng.gen_range(0..reachable.len())];
        let kept: Vec<&str> = g
            .secret_states()
            .filter(|&x| x != spared)
            .map(|x| g.state_name(x))
            .collect();
        return g.with_secret_states(&kept).unwrap();
    }
    g
}

pub fn reachable_states(g: &Model) -> Vec<usize> {
    let mut seen = vec![false; g.num_states()];
    let mut stack = vec![g.initial()];
    seen[g.initial()] = true;
    while let Some(x) = stack.pop() {
        for e in g.alphabet().ids() {
            if let Some(y) = g.successor(x, e) {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    (0..g.num_states()).filter(|&x| seen[x]).collect()
}

pub fn models(seed: u64, count: usize, shape: Shape) -> Vec<Model> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count).map(|_| random_model(&mut rng, shape)).collect()
}
