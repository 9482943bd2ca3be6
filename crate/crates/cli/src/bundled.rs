//! Data shipped inside the binary.

use serde::Deserialize;

const FIELDS: [(&str, &str); 3] = [
    ("all_alpha_nn", include_str!("../data/all_alpha_nn.txt")),
    ("checker_nn", include_str!("../data/checker_nn.txt")),
    ("laminate_diag", include_str!("../data/laminate_diag.txt")),
];

pub const VERIFY_SUITE: &str = include_str!("../data/verify_3x3.toml");

pub fn field_text(name: &str) -> Option<&'static str> {
    FIELDS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    pub window: Vec<i64>,
    pub offsets: Vec<Vec<i64>>,
    pub angles_deg: Vec<f64>,
    pub fields: Vec<String>,
}

pub fn verify_suite() -> Suite {
    toml::from_str(VERIFY_SUITE).expect("bundled suite parses")
}
