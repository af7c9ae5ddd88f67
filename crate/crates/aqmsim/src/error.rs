//! Error types for configuration and output.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    UnknownKey(String),
    UnknownDiscipline(String),
    UnknownPreset(String),
    InvalidValue { key: String, reason: String },
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::UnknownKey(k) => write!(f, "unknown config key `{k}`"),
            ConfigError::UnknownDiscipline(d) => write!(f, "unknown discipline `{d}`"),
            ConfigError::UnknownPreset(p) => write!(f, "unknown preset `{p}`"),
            ConfigError::InvalidValue { key, reason } => {
                write!(f, "invalid value for `{key}`: {reason}")
            }
            ConfigError::Invalid(msg) => write!(f, "invalid config: {msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    pub fn invalid_value(key: &str, reason: impl Into<String>) -> Self {
        ConfigError::InvalidValue {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}
