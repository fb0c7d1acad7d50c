//! Shipped scenario presets, embedded at build time.

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};

const PRESETS: &[(&str, &str)] = &[
    ("default", include_str!("../presets/default.toml")),
    ("fig2_near_vs_far", include_str!("../presets/fig2_near_vs_far.toml")),
    ("fig3_coupling", include_str!("../presets/fig3_coupling.toml")),
    ("fig4_alpha", include_str!("../presets/fig4_alpha.toml")),
    ("identity_sanity", include_str!("../presets/identity_sanity.toml")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// TOML source of a preset.
pub fn source(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown preset '{name}' (available: {})",
                names().collect::<Vec<_>>().join(", ")
            ))
        })
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    ScenarioConfig::from_toml(source(name)?).map_err(|e| e.context(format!("preset {name}")))
}
