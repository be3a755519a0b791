//! Scenarios compiled into the binary.

use crate::config::{ConfigError, Scenario};

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../scenarios/", $name, ".toml")))),*]
    };
}

/// `(name, TOML)` in catalog order.
pub const BUNDLED: &[(&str, &str)] = bundled!(
    "radial-ball-n3",
    "radial-ball-n4",
    "radial-shell-n4",
    "thm2.3-half-plane-n5",
    "thm2.3-zonal-cap-n3",
    "thm2.3-disk-levels",
    "thm3.1-disk",
    "lemma3.2-wedge-bounds",
    "lemma3.3-disk-derivatives",
    "lemma3.4-quarter-plane",
    "thm5.3-stability",
    "eq-scaling-homogeneity",
    "thm1.1-wedge",
    "wedge-corner-rate",
    "thm6.3-line-arc",
    "thm7.2-interior-rays",
    "lemma7.1-sandwich",
    "lemma6.1-chord",
    "lemma6.2-spheres",
    "conformal-pullback",
    "example4.2-four-components",
);

pub fn source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn scenario(name: &str) -> Option<Result<Scenario, ConfigError>> {
    source(name).map(|text| Scenario::parse(text, &format!("<bundled {name}>"), None))
}

pub fn names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}
