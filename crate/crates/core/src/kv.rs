//! Minimal sectioned `key=value` text format used by manifests and run configs.
//!
//! ```text
//! # comment
//! top_level_key = value
//!
//! [section]
//! key = value
//! ```
//!
//! Keys and values are trimmed. Blank lines and lines starting with `#` are
//! skipped. Keys before the first header belong to the unnamed root section.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    /// 1-based source line.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Section {
    /// `None` for the root section.
    pub name: Option<String>,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn new(name: Option<&str>) -> Self {
        Section {
            name: name.map(str::to_string),
            entries: Vec::new(),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.key == key)
            .map(|e| e.value.as_str())
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push(Entry {
            key: key.into(),
            value: value.to_string(),
            line: 0,
        });
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Document {
    pub sections: Vec<Section>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections = vec![Section::new(None)];
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| {
                    Error::Config(format!("line {line_no}: unterminated section header"))
                })?;
                let name = name.trim();
                if name.is_empty() {
                    return Err(Error::Config(format!("line {line_no}: empty section name")));
                }
                if sections.iter().any(|s| s.name.as_deref() == Some(name)) {
                    return Err(Error::Config(format!(
                        "line {line_no}: duplicate section [{name}]"
                    )));
                }
                sections.push(Section::new(Some(name)));
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line_no}: expected key=value")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {line_no}: empty key")));
            }
            let current = sections.last_mut().expect("root section always present");
            if current.entries.iter().any(|e| e.key == key) {
                return Err(Error::Config(format!(
                    "line {line_no}: duplicate key '{key}'"
                )));
            }
            current.entries.push(Entry {
                key: key.to_string(),
                value: value.trim().to_string(),
                line: line_no,
            });
        }
        Ok(Document { sections })
    }

    pub fn root(&self) -> &Section {
        &self.sections[0]
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name.as_deref() == Some(name))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for section in &self.sections {
            if section.name.is_none() && section.entries.is_empty() {
                continue;
            }
            if let Some(name) = &section.name {
                if !out.is_empty() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{name}]");
            }
            for e in &section.entries {
                let _ = writeln!(out, "{}={}", e.key, e.value);
            }
        }
        out
    }
}

pub(crate) fn parse_value<T: std::str::FromStr>(section: &str, entry: &Entry) -> Result<T> {
    entry.value.parse().map_err(|_| {
        Error::Config(format!(
            "line {}: [{section}] {} = '{}' is not a valid value",
            entry.line, entry.key, entry.value
        ))
    })
}
