//! Tokenization and detokenization for English and Chinese.
//!
//! No preprocessing happens here: punctuation and stop words stay in the
//! token stream, casing is untouched. English text splits into maximal runs
//! of word characters plus one-character punctuation tokens; Chinese text is
//! segmented by forward maximum matching over a registered headword set with
//! a single-character fallback.

use std::collections::HashSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LanguageMode {
    English,
    Chinese,
}

impl std::fmt::Display for LanguageMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LanguageMode::English => write!(f, "en"),
            LanguageMode::Chinese => write!(f, "zh"),
        }
    }
}

/// A word character can be part of a dictionary-matchable token. Everything
/// else (except whitespace) becomes a one-character punctuation token in
/// English mode and is never eligible for lexicon lookup.
pub fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '-'
}

/// A tokenized text plus its language mode. `word_flags[i]` is true when
/// token `i` is a word token (eligible for lexicon lookup), false for
/// punctuation/symbol tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSeq {
    tokens: Vec<String>,
    word_flags: Vec<bool>,
    mode: LanguageMode,
}

impl TokenSeq {
    /// Build a sequence directly from parts. Panics if the invariants do not
    /// hold (same lengths, non-empty whitespace-free tokens); intended for
    /// engine internals and tests.
    pub fn from_parts(tokens: Vec<String>, word_flags: Vec<bool>, mode: LanguageMode) -> Self {
        assert_eq!(tokens.len(), word_flags.len());
        assert!(tokens
            .iter()
            .all(|t| !t.is_empty() && !t.chars().any(char::is_whitespace)));
        TokenSeq {
            tokens,
            word_flags,
            mode,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn mode(&self) -> LanguageMode {
        self.mode
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn word_flags(&self) -> &[bool] {
        &self.word_flags
    }

    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i]
    }

    pub fn is_word(&self, i: usize) -> bool {
        self.word_flags[i]
    }

    pub(crate) fn set_token(&mut self, i: usize, token: String) {
        debug_assert!(!token.is_empty() && !token.chars().any(char::is_whitespace));
        self.tokens[i] = token;
    }

    pub(crate) fn insert(&mut self, i: usize, token: String, word: bool) {
        debug_assert!(!token.is_empty() && !token.chars().any(char::is_whitespace));
        self.tokens.insert(i, token);
        self.word_flags.insert(i, word);
    }

    pub(crate) fn remove(&mut self, i: usize) {
        self.tokens.remove(i);
        self.word_flags.remove(i);
    }

    pub(crate) fn swap(&mut self, i: usize, j: usize) {
        self.tokens.swap(i, j);
        self.word_flags.swap(i, j);
    }

    /// Render the sequence back to a string: space-joined for English,
    /// concatenated for Chinese. Spacing around punctuation may differ from
    /// the source text, but re-tokenizing the result is stable.
    pub fn detokenize(&self) -> String {
        match self.mode {
            LanguageMode::English => self.tokens.join(" "),
            LanguageMode::Chinese => self.tokens.concat(),
        }
    }
}

/// Tokenizer for one language. For Chinese it carries the registered
/// segmentation headwords; registration must happen before tokenizing.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    mode: LanguageMode,
    headwords: HashSet<String>,
    max_headword_chars: usize,
}

impl Tokenizer {
    /// Tokenizer with no registered headwords. Chinese mode falls back to
    /// single-character segmentation everywhere.
    pub fn new(mode: LanguageMode) -> Self {
        Tokenizer {
            mode,
            headwords: HashSet::new(),
            max_headword_chars: 0,
        }
    }

    /// Tokenizer with a registered headword set for forward maximum matching.
    pub fn with_headwords<I, S>(mode: LanguageMode, headwords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let headwords: HashSet<String> = headwords.into_iter().map(Into::into).collect();
        let max_headword_chars = headwords.iter().map(|h| h.chars().count()).max().unwrap_or(0);
        Tokenizer {
            mode,
            headwords,
            max_headword_chars,
        }
    }

    pub fn mode(&self) -> LanguageMode {
        self.mode
    }

    pub fn tokenize(&self, text: &str) -> Result<TokenSeq> {
        let (tokens, word_flags) = match self.mode {
            LanguageMode::English => tokenize_english(text),
            LanguageMode::Chinese => self.tokenize_chinese(text),
        };
        if tokens.is_empty() {
            return Err(Error::EmptyText);
        }
        Ok(TokenSeq {
            tokens,
            word_flags,
            mode: self.mode,
        })
    }

    fn tokenize_chinese(&self, text: &str) -> (Vec<String>, Vec<bool>) {
        let chars: Vec<char> = text.chars().collect();
        let mut tokens = Vec::new();
        let mut flags = Vec::new();
        let mut pos = 0;
        while pos < chars.len() {
            if chars[pos].is_whitespace() {
                pos += 1;
                continue;
            }
            let mut matched = 0;
            let window = self.max_headword_chars.min(chars.len() - pos);
            for len in (2..=window).rev() {
                let candidate: String = chars[pos..pos + len].iter().collect();
                if self.headwords.contains(&candidate) {
                    tokens.push(candidate);
                    flags.push(true);
                    matched = len;
                    break;
                }
            }
            if matched == 0 {
                let c = chars[pos];
                tokens.push(c.to_string());
                flags.push(is_word_char(c));
                matched = 1;
            }
            pos += matched;
        }
        (tokens, flags)
    }
}

fn tokenize_english(text: &str) -> (Vec<String>, Vec<bool>) {
    let mut tokens = Vec::new();
    let mut flags = Vec::new();
    let mut run = String::new();
    let flush = |run: &mut String, tokens: &mut Vec<String>, flags: &mut Vec<bool>| {
        if !run.is_empty() {
            tokens.push(std::mem::take(run));
            flags.push(true);
        }
    };
    for c in text.chars() {
        if c.is_whitespace() {
            flush(&mut run, &mut tokens, &mut flags);
        } else if is_word_char(c) {
            run.push(c);
        } else {
            flush(&mut run, &mut tokens, &mut flags);
            tokens.push(c.to_string());
            flags.push(false);
        }
    }
    flush(&mut run, &mut tokens, &mut flags);
    (tokens, flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn en() -> Tokenizer {
        Tokenizer::new(LanguageMode::English)
    }

    #[test]
    fn english_keeps_punctuation_as_tokens() {
        let seq = en().tokenize("A sad, superior human comedy").unwrap();
        assert_eq!(
            seq.tokens(),
            ["A", "sad", ",", "superior", "human", "comedy"]
        );
        assert_eq!(seq.word_flags(), [true, true, false, true, true, true]);
    }

    #[test]
    fn single_word_round_trips() {
        let seq = en().tokenize("word").unwrap();
        assert_eq!(seq.tokens(), ["word"]);
        assert_eq!(seq.detokenize(), "word");
    }

    #[test]
    fn empty_and_whitespace_only_are_errors() {
        assert!(matches!(en().tokenize(""), Err(Error::EmptyText)));
        assert!(matches!(en().tokenize("  \t\n"), Err(Error::EmptyText)));
    }

    #[test]
    fn apostrophes_and_hyphens_stay_in_words() {
        let seq = en().tokenize("it's a well-known fact!").unwrap();
        assert_eq!(seq.tokens(), ["it's", "a", "well-known", "fact", "!"]);
        assert_eq!(seq.word_flags(), [true, true, true, true, false]);
    }

    #[test]
    fn chinese_forward_maximum_matching() {
        let tok = Tokenizer::with_headwords(LanguageMode::Chinese, ["你好"]);
        let seq = tok.tokenize("你好吗").unwrap();
        assert_eq!(seq.tokens(), ["你好", "吗"]);
        assert_eq!(seq.word_flags(), [true, true]);
    }

    #[test]
    fn chinese_prefers_longest_match() {
        let tok = Tokenizer::with_headwords(LanguageMode::Chinese, ["中国", "中国人"]);
        let seq = tok.tokenize("中国人好").unwrap();
        assert_eq!(seq.tokens(), ["中国人", "好"]);
    }

    #[test]
    fn chinese_punctuation_is_not_a_word() {
        let tok = Tokenizer::new(LanguageMode::Chinese);
        let seq = tok.tokenize("你好，吗").unwrap();
        assert_eq!(seq.tokens(), ["你", "好", "，", "吗"]);
        assert_eq!(seq.word_flags(), [true, true, false, true]);
    }

    #[test]
    fn detokenize_english_joins_with_spaces() {
        let seq = TokenSeq::from_parts(
            vec!["A".into(), "sad".into(), ",".into()],
            vec![true, true, false],
            LanguageMode::English,
        );
        assert_eq!(seq.detokenize(), "A sad ,");
    }

    #[test]
    fn detokenize_chinese_concatenates() {
        let seq = TokenSeq::from_parts(
            vec!["你好".into(), "吗".into()],
            vec![true, true],
            LanguageMode::Chinese,
        );
        assert_eq!(seq.detokenize(), "你好吗");
    }

    #[test]
    fn round_trip_is_stable() {
        let tok = en();
        for text in [
            "A sad, superior human comedy played out on the back roads of life.",
            "don't stop -- ever!",
            "x",
            "a-b c'd (e) [f] 1,000",
        ] {
            let once = tok.tokenize(text).unwrap();
            let again = tok.tokenize(&once.detokenize()).unwrap();
            assert_eq!(once, again, "round trip unstable for {text:?}");
        }
    }

    #[test]
    fn no_nonwhitespace_character_is_dropped() {
        let tok = en();
        let text = "He said: \"ok, fine\" -- then left...";
        let seq = tok.tokenize(text).unwrap();
        let mut from_text: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut from_tokens: Vec<char> = seq.tokens().iter().flat_map(|t| t.chars()).collect();
        from_text.sort_unstable();
        from_tokens.sort_unstable();
        assert_eq!(from_text, from_tokens);
    }
}
