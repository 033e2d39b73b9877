use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::textscan::ScriptConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lang {
    En,
    Zh,
}

impl Lang {
    pub fn as_str(self) -> &'static str {
        match self {
            Lang::En => "en",
            Lang::Zh => "zh",
        }
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Lang {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "en" => Ok(Lang::En),
            "zh" => Ok(Lang::Zh),
            other => Err(LexiconError::UnknownLang(other.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexiconError {
    #[error("unknown language tag {0:?} (expected en or zh)")]
    UnknownLang(String),
    #[error("replacement {replacement:?} for {word:?} has no non-target letter")]
    TargetOnlyReplacement { word: String, replacement: String },
    #[error("empty word or replacement")]
    EmptyEntry,
}

/// Word-level translation table standing in for a live translation service.
#[derive(Debug, Clone, Default)]
pub struct SubstitutionLexicon {
    target: ScriptConfig,
    entries: BTreeMap<String, Vec<(Lang, String)>>,
}

impl SubstitutionLexicon {
    pub fn new(target: ScriptConfig) -> Self {
        Self {
            target,
            entries: BTreeMap::new(),
        }
    }

    /// Adds an entry; the replacement must contain a letter outside the
    /// target script.
    pub fn insert(
        &mut self,
        word: impl Into<String>,
        lang: Lang,
        replacement: impl Into<String>,
    ) -> Result<(), LexiconError> {
        let word = word.into();
        let replacement = replacement.into();
        if word.is_empty() || replacement.trim().is_empty() {
            return Err(LexiconError::EmptyEntry);
        }
        let foreign = replacement
            .chars()
            .any(|c| c.is_alphabetic() && !self.target.is_target_letter(c));
        if !foreign || replacement == word {
            return Err(LexiconError::TargetOnlyReplacement { word, replacement });
        }
        self.entries.entry(word).or_default().push((lang, replacement));
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn target(&self) -> &ScriptConfig {
        &self.target
    }

    /// First replacement recorded for `word` in `lang`.
    pub fn lookup(&self, word: &str, lang: Lang) -> Option<&str> {
        self.entries
            .get(word)?
            .iter()
            .find(|(l, _)| *l == lang)
            .map(|(_, r)| r.as_str())
    }

    pub fn has_any(&self, word: &str, langs: &[Lang]) -> bool {
        langs.iter().any(|&l| self.lookup(word, l).is_some())
    }
}
