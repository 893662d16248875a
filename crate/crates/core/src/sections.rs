//! Line-oriented sectioned key-value configuration format.
//!
//! Shared by the rule and scenario file loaders. A document is a sequence of
//! `key = value` lines, optionally grouped under repeatable `[section]`
//! headers. Lines starting with `#` and blank lines are ignored. Keys that
//! appear before the first header belong to the top-level scope.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SectionError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    MalformedLine { line: usize, text: String },
    #[error("line {line}: unterminated section header `{text}`")]
    MalformedHeader { line: usize, text: String },
}

/// One `key = value` entry with its source line for diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// A `[name]` block and the entries under it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    /// Last value for `key`, if present.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|e| e.key == key)
            .map(|e| e.value.as_str())
    }

    pub fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().rev().find(|e| e.key == key)
    }
}

/// A parsed document: top-level entries plus sections in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Document {
    pub top_level: Vec<Entry>,
    pub sections: Vec<Section>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Document, SectionError> {
        let mut doc = Document::default();
        let mut current: Option<Section> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or(SectionError::MalformedHeader {
                        line,
                        text: trimmed.to_string(),
                    })?;
                if let Some(done) = current.take() {
                    doc.sections.push(done);
                }
                current = Some(Section {
                    name: name.trim().to_string(),
                    line,
                    entries: Vec::new(),
                });
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or(SectionError::MalformedLine {
                line,
                text: trimmed.to_string(),
            })?;
            let entry = Entry {
                key: key.trim().to_string(),
                value: strip_comment(value).to_string(),
                line,
            };
            match current.as_mut() {
                Some(section) => section.entries.push(entry),
                None => doc.top_level.push(entry),
            }
        }
        if let Some(done) = current.take() {
            doc.sections.push(done);
        }
        Ok(doc)
    }

    pub fn top_level_get(&self, key: &str) -> Option<&str> {
        self.top_level
            .iter()
            .rev()
            .find(|e| e.key == key)
            .map(|e| e.value.as_str())
    }

    pub fn sections_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Section> {
        self.sections.iter().filter(move |s| s.name == name)
    }
}

fn strip_comment(value: &str) -> &str {
    match value.find('#') {
        Some(pos) => value[..pos].trim(),
        None => value.trim(),
    }
}
