//! Flat `key = value` documents.
//!
//! One entry per line. Blank lines and anything after `#` are ignored, keys
//! and values are trimmed, keys are case-sensitive and may appear once.

use crate::error::{LabError, Result};

#[derive(Clone, Debug, Default)]
pub struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(LabError::Syntax {
                    line: idx + 1,
                    text: raw.to_owned(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(LabError::Syntax {
                    line: idx + 1,
                    text: raw.to_owned(),
                });
            }
            if entries.iter().any(|(k, _)| k == key) {
                return Err(LabError::DuplicateKey(key.to_owned()));
            }
            entries.push((key.to_owned(), value.to_owned()));
        }
        Ok(Self { entries })
    }

    /// Removes and returns `key`.
    pub fn take(&mut self, key: &str) -> Option<String> {
        let pos = self.entries.iter().position(|(k, _)| k == key)?;
        Some(self.entries.remove(pos).1)
    }

    pub fn take_with<T>(
        &mut self,
        key: &str,
        parse: impl Fn(&str, &str) -> Result<T>,
    ) -> Result<Option<T>> {
        self.take(key).map(|v| parse(key, &v)).transpose()
    }

    /// Fails on the first key nobody took.
    pub fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            Some((key, _)) => Err(LabError::UnknownKey(key)),
            None => Ok(()),
        }
    }
}

pub fn parse_f64(key: &str, value: &str) -> Result<f64> {
    let x: f64 = value
        .parse()
        .map_err(|_| LabError::invalid(key, format!("`{value}` is not a number")))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(LabError::invalid(key, format!("`{value}` is not finite")))
    }
}

pub fn parse_u64(key: &str, value: &str) -> Result<u64> {
    let digits = value.replace('_', "");
    if let Ok(n) = digits.parse() {
        return Ok(n);
    }
    // Accept `1e5` style integers.
    let x = parse_f64(key, value)?;
    if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 {
        Ok(x as u64)
    } else {
        Err(LabError::invalid(
            key,
            format!("`{value}` is not a nonnegative integer"),
        ))
    }
}

pub fn parse_usize(key: &str, value: &str) -> Result<usize> {
    let n = parse_u64(key, value)?;
    usize::try_from(n).map_err(|_| LabError::invalid(key, format!("`{value}` is too large")))
}

pub fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|item| parse_f64(key, item.trim()))
        .collect()
}
