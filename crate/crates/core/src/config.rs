//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys may appear at
//! most once; consumers take the keys they know and reject the rest.

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { key: String, line: usize },
    #[error("unknown key `{0}`")]
    Unknown(String),
    #[error("invalid value for `{key}`: {message}")]
    Value { key: String, message: String },
}

impl ConfigError {
    pub fn value(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Value {
            key: key.to_owned(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            let key = k.trim().replace('-', "_");
            if key.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1 });
            }
            if entries.insert(key.clone(), v.trim().to_owned()).is_some() {
                return Err(ConfigError::Duplicate { key, line: i + 1 });
            }
        }
        Ok(Self { entries })
    }

    /// Removes and returns the raw value of `key`.
    pub fn take_str(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    pub fn take<T>(&mut self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.take_str(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| ConfigError::value(key, e.to_string()))
            })
            .transpose()
    }

    pub fn take_or<T>(&mut self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(self.take(key)?.unwrap_or(default))
    }

    /// Comma-separated list; an empty value is an empty list.
    pub fn take_list<T>(&mut self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.take_str(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<T>()
                            .map_err(|e| ConfigError::value(key, e.to_string()))
                    })
                    .collect()
            })
            .transpose()
    }

    /// Fails on the first key nobody consumed.
    pub fn finish(self) -> Result<(), ConfigError> {
        match self.entries.into_keys().next() {
            Some(k) => Err(ConfigError::Unknown(k)),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_take() {
        let mut kv =
            KeyValues::parse("# c\n beta = 0.8\ntop-pct=5\n\nkeywords = a, b ,\n").unwrap();
        assert_eq!(kv.take::<f64>("beta").unwrap(), Some(0.8));
        assert_eq!(kv.take_or::<f64>("top_pct", 2.0).unwrap(), 5.0);
        assert_eq!(kv.take_or::<u64>("seed", 7).unwrap(), 7);
        assert_eq!(
            kv.take_list::<String>("keywords").unwrap(),
            Some(vec!["a".to_string(), "b".to_string()])
        );
        kv.finish().unwrap();
    }

    #[test]
    fn errors() {
        assert_eq!(
            KeyValues::parse("x\n").unwrap_err(),
            ConfigError::Syntax { line: 1 }
        );
        assert!(matches!(
            KeyValues::parse("a=1\na=2").unwrap_err(),
            ConfigError::Duplicate { line: 2, .. }
        ));
        let mut kv = KeyValues::parse("a = x\nb = 1").unwrap();
        assert!(kv.take::<f64>("a").is_err());
        assert_eq!(kv.finish().unwrap_err(), ConfigError::Unknown("b".into()));
    }
}
