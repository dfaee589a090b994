use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};
use crate::io::read_lines;
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LexiconKind {
    Freq,
    WpCrowd,
    WpCorp,
}

impl LexiconKind {
    pub fn name(self) -> &'static str {
        match self {
            LexiconKind::Freq => "freq",
            LexiconKind::WpCrowd => "wp_crowd",
            LexiconKind::WpCorp => "wp_corp",
        }
    }
}

impl fmt::Display for LexiconKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LexiconKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [LexiconKind::Freq, LexiconKind::WpCrowd, LexiconKind::WpCorp]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown lexicon {s:?}")))
    }
}

/// Anything that maps a word to a real score, with `None` for unknown words.
pub trait WordScores: Send + Sync {
    fn lookup(&self, word: &str) -> Option<f64>;
}

/// Word → value table loaded from `word<TAB>value` lines.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    name: String,
    table: HashMap<String, f64>,
}

impl Lexicon {
    pub fn from_entries<I, S>(name: impl Into<String>, entries: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let table = entries
            .into_iter()
            .map(|(w, v)| (text::normalize(w.as_ref()), v))
            .collect();
        Lexicon {
            name: name.into(),
            table,
        }
    }

    /// Load a lexicon TSV. Later duplicates of a word replace earlier ones.
    pub fn load(name: impl Into<String>, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let name = name.into();
        let mut table = HashMap::new();
        for (lineno, line) in read_lines(path)? {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(word), Some(value), None) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(Error::parse(path, lineno, "expected word<TAB>value"));
            };
            let word = word.trim();
            if word.is_empty() {
                return Err(Error::parse(path, lineno, "empty word"));
            }
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("not a number: {value:?}")))?;
            if !value.is_finite() {
                return Err(Error::parse(path, lineno, "value must be finite"));
            }
            if table.insert(text::normalize(word), value).is_some() {
                warn!(
                    "{}:{lineno}: duplicate entry for {word:?} in lexicon {name}, keeping the last",
                    path.display()
                );
            }
        }
        Ok(Lexicon { name, table })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl WordScores for Lexicon {
    fn lookup(&self, word: &str) -> Option<f64> {
        self.table.get(&text::normalize(word)).copied()
    }
}
