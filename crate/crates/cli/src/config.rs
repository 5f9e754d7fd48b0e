//! `key = value` configuration files.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored.
//! Keys use the long flag names with `-` or `_` (`lambda`, `no_l1`,
//! `lambda-dct`, ...). Command-line flags override file values.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Input(format!(
                    "config line {}: expected `key = value`",
                    lineno + 1
                ))
            })?;
            let key = normalize(k);
            if key.is_empty() {
                return Err(CliError::Input(format!(
                    "config line {}: empty key",
                    lineno + 1
                )));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get_raw(&self, key: &str) -> Option<&str> {
        self.values.get(&normalize(key)).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get_raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Input(format!("config key {key}: {e}")))
            })
            .transpose()
    }

    /// Flag value if given, else the file value, else `default`.
    pub fn resolve<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    /// Boolean switch: a present flag wins, otherwise the file value.
    pub fn resolve_switch(&self, flag: bool, key: &str) -> Result<bool, CliError> {
        if flag {
            return Ok(true);
        }
        Ok(self.get::<bool>(key)?.unwrap_or(false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_overrides() {
        let c = ConfigFile::parse("# header\nscales = 2\nlambda=0.5 # inline\n\nno-l1 = true\n")
            .unwrap();
        assert_eq!(c.get::<usize>("scales").unwrap(), Some(2));
        assert_eq!(c.resolve(None, "lambda", 1.0).unwrap(), 0.5);
        assert_eq!(c.resolve(Some(3.0), "lambda", 1.0).unwrap(), 3.0);
        assert!(c.resolve_switch(false, "no_l1").unwrap());
        assert!(!c.resolve_switch(false, "crop").unwrap());
        assert_eq!(c.resolve(None, "epochs", 7usize).unwrap(), 7);
    }

    #[test]
    fn rejects_malformed() {
        assert!(ConfigFile::parse("scales 3").is_err());
        assert!(ConfigFile::parse(" = 3").is_err());
        let c = ConfigFile::parse("scales = three").unwrap();
        assert!(c.get::<usize>("scales").is_err());
    }
}
