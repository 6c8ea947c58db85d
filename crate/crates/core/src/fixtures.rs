//! Bundled example models. See `fixtures/README.md` for how each topology
//! was reconstructed.

use crate::model::{parse_model, Model};

pub const FIG1: &str = include_str!("../fixtures/fig1.json");
pub const FIG2: &str = include_str!("../fixtures/fig2.json");
pub const MEDICAL_CLOUD: &str = include_str!("../fixtures/medical_cloud.json");

/// `(name, document)` for every bundled fixture.
pub const ALL: [(&str, &str); 3] = [
    ("fig1", FIG1),
    ("fig2", FIG2),
    ("medical_cloud", MEDICAL_CLOUD),
];

/// Nine-state example with `X_r = {1, 4, 8}` and `X_S = {4}`.
pub fn figure1() -> Model {
    parse_model(FIG1).expect("bundled fixture parses")
}

/// Ten-state example with `X_r = {6, 9}` and `X_S = {7}`.
pub fn figure2() -> Model {
    parse_model(FIG2).expect("bundled fixture parses")
}

/// Cloud-based medical data processing with `X_S = {SP1}`.
pub fn medical_cloud() -> Model {
    parse_model(MEDICAL_CLOUD).expect("bundled fixture parses")
}
