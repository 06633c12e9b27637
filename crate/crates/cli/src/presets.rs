//! Named scenarios compiled into the binary.

use crate::config::ScenarioConfig;
use crate::error::CliError;

pub const PRESETS: [(&str, &str); 4] = [
    ("dam-break", include_str!("../presets/dam-break.toml")),
    ("mhd", include_str!("../presets/mhd.toml")),
    ("vdw", include_str!("../presets/vdw.toml")),
    ("polytropic", include_str!("../presets/polytropic.toml")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// Raw TOML text of a preset.
pub fn text(name: &str) -> Result<&'static str, CliError> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| CliError::Config(format!("unknown preset '{name}' (available: {})", names().collect::<Vec<_>>().join(", "))))
}

pub fn load(name: &str) -> Result<ScenarioConfig, CliError> {
    ScenarioConfig::from_toml(text(name)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses_and_validates() {
        for name in names() {
            let cfg = load(name).unwrap();
            assert_eq!(cfg.name, name);
            cfg.validate().unwrap();
        }
    }

    #[test]
    fn unknown_preset_is_a_config_error() {
        assert_eq!(load("nope").unwrap_err().exit_code(), crate::error::EXIT_CONFIG);
    }
}
