//! The `key = value` plain-text dialect shared by the georeference sidecar,
//! the pipeline config and scene specs. Whitespace-tolerant, order
//! independent, `#` starts a comment.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KvError {
    #[error("line {line}: expected 'key = value', got '{text}'")]
    Malformed { line: usize, text: String },
    #[error("line {line}: duplicate key '{key}'")]
    DuplicateKey { line: usize, key: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("missing key '{0}'")]
    MissingKey(String),
    #[error("key '{key}': {message}")]
    BadValue { key: String, message: String },
}

/// Parses the dialect into a key -> value map.
pub fn parse(text: &str) -> Result<BTreeMap<String, String>, KvError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(KvError::Malformed {
                line,
                text: content.to_string(),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(KvError::Malformed {
                line,
                text: content.to_string(),
            });
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(KvError::DuplicateKey { line, key });
        }
    }
    Ok(map)
}

/// Typed accessors over a parsed map that track which keys were consumed.
pub struct KvReader {
    map: BTreeMap<String, String>,
}

impl KvReader {
    pub fn from_text(text: &str) -> Result<Self, KvError> {
        Ok(Self { map: parse(text)? })
    }

    pub fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    pub fn require(&mut self, key: &str) -> Result<String, KvError> {
        self.take(key)
            .ok_or_else(|| KvError::MissingKey(key.to_string()))
    }

    pub fn require_f64(&mut self, key: &str) -> Result<f64, KvError> {
        let raw = self.require(key)?;
        raw.parse().map_err(|_| KvError::BadValue {
            key: key.to_string(),
            message: format!("'{raw}' is not a number"),
        })
    }

    pub fn take_f64(&mut self, key: &str) -> Result<Option<f64>, KvError> {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| KvError::BadValue {
                key: key.to_string(),
                message: format!("'{raw}' is not a number"),
            }),
        }
    }

    pub fn take_u64(&mut self, key: &str) -> Result<Option<u64>, KvError> {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| KvError::BadValue {
                key: key.to_string(),
                message: format!("'{raw}' is not a non-negative integer"),
            }),
        }
    }

    /// Fails if any key was never consumed; catches typos in config files.
    pub fn finish(self) -> Result<(), KvError> {
        match self.map.into_keys().next() {
            Some(key) => Err(KvError::UnknownKey(key)),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_whitespace_and_comments() {
        let map = parse("  a =  1\n# comment\n\nb=two # trailing\n").unwrap();
        assert_eq!(map.get("a").unwrap(), "1");
        assert_eq!(map.get("b").unwrap(), "two");
    }

    #[test]
    fn rejects_malformed_and_duplicate() {
        assert!(matches!(
            parse("novalue\n"),
            Err(KvError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            parse("a=1\na=2\n"),
            Err(KvError::DuplicateKey { line: 2, .. })
        ));
    }

    #[test]
    fn reader_flags_unknown_keys() {
        let mut r = KvReader::from_text("a=1\nzz=3\n").unwrap();
        assert_eq!(r.require_f64("a").unwrap(), 1.0);
        assert_eq!(r.finish(), Err(KvError::UnknownKey("zz".into())));
    }
}
