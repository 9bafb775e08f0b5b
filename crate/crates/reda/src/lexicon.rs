//! Synonym dictionaries backing the replacement and insertion operations.
//!
//! File format: UTF-8 TSV, one entry per line, `headword<TAB>syn1<TAB>syn2...`.
//! Lines starting with `#` are comments; blank lines are ignored. Entries
//! containing whitespace are rejected. Duplicate headword lines merge, with
//! synonyms kept in order of first appearance; self-references and duplicate
//! synonyms are dropped.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::text::{LanguageMode, TokenSeq, Tokenizer};

#[derive(Debug, Clone, PartialEq)]
pub struct SynonymLexicon {
    entries: HashMap<String, Vec<String>>,
    language: LanguageMode,
}

impl SynonymLexicon {
    pub fn empty(language: LanguageMode) -> Self {
        SynonymLexicon {
            entries: HashMap::new(),
            language,
        }
    }

    /// Build a lexicon from in-memory entries, applying the same cleanup as
    /// the file loader (self-references and duplicates dropped, empty lists
    /// removed).
    pub fn from_entries<I, S, T>(language: LanguageMode, entries: I) -> Self
    where
        I: IntoIterator<Item = (S, Vec<T>)>,
        S: Into<String>,
        T: Into<String>,
    {
        let mut lex = SynonymLexicon::empty(language);
        for (head, syns) in entries {
            let head = head.into();
            let list = lex.entries.entry(head.clone()).or_default();
            for syn in syns {
                let syn = syn.into();
                if syn != head && !syn.is_empty() && !list.contains(&syn) {
                    list.push(syn);
                }
            }
        }
        lex.entries.retain(|_, v| !v.is_empty());
        lex
    }

    pub fn load<P: AsRef<Path>>(path: P, language: LanguageMode) -> Result<Self> {
        let path = path.as_ref();
        let content = fs::read_to_string(path)?;
        let display = path.display().to_string();
        let mut entries: HashMap<String, Vec<String>> = HashMap::new();
        for (idx, raw) in content.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 2 {
                return Err(Error::Parse {
                    path: display,
                    line: line_no,
                    msg: "expected headword and at least one synonym".into(),
                });
            }
            for field in &fields {
                if field.chars().any(char::is_whitespace) {
                    return Err(Error::Parse {
                        path: display,
                        line: line_no,
                        msg: format!("entry {field:?} contains whitespace"),
                    });
                }
            }
            let head = fields[0];
            if head.is_empty() {
                return Err(Error::Parse {
                    path: display,
                    line: line_no,
                    msg: "empty headword".into(),
                });
            }
            let list = entries.entry(head.to_string()).or_default();
            for syn in &fields[1..] {
                if !syn.is_empty() && *syn != head && !list.iter().any(|s| s == syn) {
                    list.push(syn.to_string());
                }
            }
        }
        entries.retain(|_, v| !v.is_empty());
        Ok(SynonymLexicon { entries, language })
    }

    pub fn language(&self) -> LanguageMode {
        self.language
    }

    /// Number of headwords with at least one synonym.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn headwords(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Synonyms of `word` in load order, empty if the word has none. Lookup
    /// is exact-match and case-sensitive.
    pub fn synonyms_of(&self, word: &str) -> &[String] {
        self.entries.get(word).map_or(&[], Vec::as_slice)
    }

    /// Indices of word tokens that have at least one synonym, ascending.
    pub fn eligible_positions(&self, seq: &TokenSeq) -> Vec<usize> {
        (0..seq.len())
            .filter(|&i| seq.is_word(i) && !self.synonyms_of(seq.token(i)).is_empty())
            .collect()
    }

    /// Tokenizer matching this lexicon's language. For Chinese, the headwords
    /// double as the segmentation dictionary.
    pub fn tokenizer(&self) -> Tokenizer {
        match self.language {
            LanguageMode::English => Tokenizer::new(LanguageMode::English),
            LanguageMode::Chinese => {
                Tokenizer::with_headwords(LanguageMode::Chinese, self.entries.keys().cloned())
            }
        }
    }
}
