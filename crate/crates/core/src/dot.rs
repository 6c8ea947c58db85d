//! Graphviz rendering. Output is deterministic: nodes in id order, edges in
//! `(source, target)` order with labels joined by commas.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::augment::AugModel;
use crate::model::{Alphabet, EventId, Model};
use crate::observer::ObserverAutomaton;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

struct Node {
    label: String,
    double: bool,
    bold: bool,
}

fn render(
    name: &str,
    alphabet: &Alphabet,
    nodes: &[Node],
    initial: usize,
    edges: impl Iterator<Item = (usize, EventId, usize)>,
) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(name)).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  __start [shape=point];").unwrap();
    for (i, node) in nodes.iter().enumerate() {
        let shape = if node.double {
            "doublecircle"
        } else {
            "circle"
        };
        let style = if node.bold { ", style=bold" } else { "" };
        writeln!(
            out,
            "  n{i} [label={}, shape={shape}{style}];",
            quote(&node.label)
        )
        .unwrap();
    }
    writeln!(out, "  __start -> n{initial};").unwrap();
    let mut grouped: BTreeMap<(usize, usize), Vec<&str>> = BTreeMap::new();
    for (x, e, y) in edges {
        grouped.entry((x, y)).or_default().push(alphabet.name(e));
    }
    for ((x, y), labels) in grouped {
        writeln!(out, "  n{x} -> n{y} [label={}];", quote(&labels.join(","))).unwrap();
    }
    out.push_str("}\n");
    out
}

/// Secret states are double circles, release states bold.
pub fn model_to_dot(model: &Model) -> String {
    let nodes: Vec<Node> = model
        .state_ids()
        .map(|x| Node {
            label: model.state_name(x).to_string(),
            double: model.is_secret(x),
            bold: model.is_release(x),
        })
        .collect();
    render(
        "model",
        model.alphabet(),
        &nodes,
        model.initial(),
        model.transitions(),
    )
}

pub fn augmented_to_dot(am: &AugModel) -> String {
    let nodes: Vec<Node> = am
        .ids()
        .map(|x| Node {
            label: am.name(x),
            double: am.is_secret(x),
            bold: am.is_release(x),
        })
        .collect();
    render(
        "augmented",
        am.alphabet(),
        &nodes,
        am.initial(),
        am.transitions(),
    )
}

/// Nodes are labelled `X1 | {X2} | {X3}`; states whose low-level estimate is
/// entirely secret are double circles.
pub fn observer_to_dot(obs: &ObserverAutomaton, am: &AugModel) -> String {
    let nodes: Vec<Node> = obs
        .states()
        .map(|(_, s)| Node {
            label: s.label(am),
            double: s.low.iter().all(|&x| am.is_secret(x)),
            bold: false,
        })
        .collect();
    render(
        "observer",
        am.alphabet(),
        &nodes,
        obs.initial(),
        obs.transitions(),
    )
}
