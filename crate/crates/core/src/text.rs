//! Tokenization, content-word identification and rule-based lemmatization.
//!
//! Everything here is a pure function over immutable tables, so the same
//! [`PosLexicon`] and [`Lemmatizer`] can be shared across threads.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tsv;

/// Punctuation marks that are always split off as their own token.
pub const DETACHED_PUNCTUATION: [char; 6] = ['.', ',', '!', '?', ';', ':'];

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pos {
    Noun,
    Verb,
    Adj,
    Other,
}

impl Pos {
    pub fn is_content(self) -> bool {
        matches!(self, Pos::Noun | Pos::Verb | Pos::Adj)
    }
}

impl FromStr for Pos {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NOUN" => Ok(Pos::Noun),
            "VERB" => Ok(Pos::Verb),
            "ADJ" => Ok(Pos::Adj),
            "OTHER" => Ok(Pos::Other),
            other => Err(Error::InvalidInput(format!("unknown POS tag `{other}`"))),
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pos::Noun => "NOUN",
            Pos::Verb => "VERB",
            Pos::Adj => "ADJ",
            Pos::Other => "OTHER",
        })
    }
}

/// Lowercases `text`, splits on Unicode whitespace and detaches
/// [`DETACHED_PUNCTUATION`] marks as single-character tokens.
pub fn tokenize(text: &str) -> Vec<Token> {
    let lowered = text.to_lowercase();
    let mut out = Vec::new();
    for chunk in lowered.split_whitespace() {
        let mut current = String::new();
        for ch in chunk.chars() {
            if DETACHED_PUNCTUATION.contains(&ch) {
                if !current.is_empty() {
                    push_token(&mut out, std::mem::take(&mut current));
                }
                push_token(&mut out, ch.to_string());
            } else {
                current.push(ch);
            }
        }
        if !current.is_empty() {
            push_token(&mut out, current);
        }
    }
    out
}

fn push_token(out: &mut Vec<Token>, surface: String) {
    let index = out.len();
    out.push(Token { surface, index });
}

/// Token surfaces of `tokenize(text)`.
pub fn tokenize_words(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.surface).collect()
}

/// Joins token surfaces with single spaces.
pub fn join_tokens<S: AsRef<str>>(tokens: &[S]) -> String {
    tokens
        .iter()
        .map(AsRef::as_ref)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Alphabetic word, allowing internal hyphens and apostrophes.
fn is_alphabetic_word(word: &str) -> bool {
    let mut has_letter = false;
    for ch in word.chars() {
        if ch.is_alphabetic() {
            has_letter = true;
        } else if ch != '-' && ch != '\'' {
            return false;
        }
    }
    has_letter
}

/// Word-form to POS table plus the stopword list used by the default rule.
#[derive(Debug, Clone, Default)]
pub struct PosLexicon {
    tags: HashMap<String, Pos>,
    stopwords: HashSet<String>,
}

impl PosLexicon {
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, Pos)>,
        S: AsRef<str>,
    {
        Self {
            tags: entries
                .into_iter()
                .map(|(w, p)| (w.as_ref().to_lowercase(), p))
                .collect(),
            stopwords: HashSet::new(),
        }
    }

    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.stopwords
            .extend(words.into_iter().map(|w| w.as_ref().to_lowercase()));
        self
    }

    /// Loads a `word<TAB>POS` file.
    pub fn load(path: &Path) -> Result<Self> {
        let mut tags = HashMap::new();
        for (line_no, line) in tsv::content_lines(path)? {
            let f = tsv::fields(path, line_no, &line, 2)?;
            let pos = f[1]
                .parse::<Pos>()
                .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
            tags.insert(f[0].to_lowercase(), pos);
        }
        Ok(Self {
            tags,
            stopwords: HashSet::new(),
        })
    }

    pub fn load_stopwords(self, path: &Path) -> Result<Self> {
        let words = tsv::word_list(path)?;
        Ok(self.with_stopwords(words))
    }

    pub fn get(&self, word: &str) -> Option<Pos> {
        self.tags.get(word).copied()
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(word)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.tags.keys().map(String::as_str)
    }

    /// Total POS resolution: exact hit, then a hit on a lemmatized form,
    /// then NOUN for alphabetic non-stopwords, else OTHER.
    pub fn resolve(&self, word: &str, lemmatizer: &Lemmatizer) -> Pos {
        if let Some(pos) = self.get(word) {
            return pos;
        }
        for guess in [Pos::Noun, Pos::Verb, Pos::Adj] {
            let lemma = lemmatizer.lemmatize(word, guess);
            if lemma != word {
                if let Some(pos) = self.get(&lemma) {
                    return pos;
                }
            }
        }
        if !self.is_stopword(word) && is_alphabetic_word(word) {
            Pos::Noun
        } else {
            Pos::Other
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentWord {
    pub index: usize,
    pub surface: String,
    pub pos: Pos,
}

/// Tokens whose resolved POS is NOUN, VERB or ADJ, in token order.
pub fn content_words(tokens: &[Token], lex: &PosLexicon, lemmatizer: &Lemmatizer) -> Vec<ContentWord> {
    tokens
        .iter()
        .enumerate()
        .filter_map(|(i, tok)| {
            let pos = lex.resolve(&tok.surface, lemmatizer);
            pos.is_content().then(|| ContentWord {
                index: i,
                surface: tok.surface.clone(),
                pos,
            })
        })
        .collect()
}

const NOUN_SUFFIXES: [&str; 2] = ["es", "s"];
const VERB_SUFFIXES: [&str; 4] = ["ing", "ed", "d", "s"];

/// Suffix-stripping lemmatizer validated against a set of known lemmas.
///
/// A word that is already a known lemma is returned unchanged, which keeps
/// `lemmatize` idempotent for any validation set.
#[derive(Debug, Clone, Default)]
pub struct Lemmatizer {
    validation: HashSet<String>,
    exceptions: HashMap<String, String>,
}

impl Lemmatizer {
    pub fn new<I, S>(validation: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            validation: validation
                .into_iter()
                .map(|w| w.as_ref().to_lowercase())
                .collect(),
            exceptions: HashMap::new(),
        }
    }

    /// Adds irregular forms (`went -> go`). Targets join the validation set;
    /// entries whose target is itself an exception key are rejected.
    pub fn with_exceptions<I, S, T>(mut self, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let pairs: Vec<(String, String)> = pairs
            .into_iter()
            .map(|(a, b)| (a.as_ref().to_lowercase(), b.as_ref().to_lowercase()))
            .collect();
        for (form, lemma) in &pairs {
            if form != lemma {
                self.exceptions.insert(form.clone(), lemma.clone());
            }
        }
        for lemma in self.exceptions.values() {
            if self.exceptions.contains_key(lemma) {
                return Err(Error::InvalidInput(format!(
                    "lemma exception target `{lemma}` is itself an exception key"
                )));
            }
        }
        let targets: Vec<String> = self.exceptions.values().cloned().collect();
        self.validation.extend(targets);
        Ok(self)
    }

    /// Loads a one-lemma-per-line validation file and an optional
    /// `form<TAB>lemma` exception table.
    pub fn load(validation: &Path, exceptions: Option<&Path>) -> Result<Self> {
        let lemm = Self::new(tsv::word_list(validation)?);
        match exceptions {
            None => Ok(lemm),
            Some(path) => {
                let mut pairs = Vec::new();
                for (line_no, line) in tsv::content_lines(path)? {
                    let f = tsv::fields(path, line_no, &line, 2)?;
                    pairs.push((f[0].to_string(), f[1].to_string()));
                }
                lemm.with_exceptions(pairs)
            }
        }
    }

    pub fn extend_validation<I, S>(&mut self, words: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.validation
            .extend(words.into_iter().map(|w| w.as_ref().to_lowercase()));
    }

    pub fn is_known(&self, word: &str) -> bool {
        self.validation.contains(word)
    }

    pub fn lemmatize(&self, word: &str, pos: Pos) -> String {
        if let Some(lemma) = self.exceptions.get(word) {
            return lemma.clone();
        }
        if self.validation.contains(word) {
            return word.to_string();
        }
        let suffixes: &[&str] = match pos {
            Pos::Noun => &NOUN_SUFFIXES,
            Pos::Verb => &VERB_SUFFIXES,
            Pos::Adj | Pos::Other => &[],
        };
        for suffix in suffixes {
            let Some(stem) = word.strip_suffix(suffix) else {
                continue;
            };
            if stem.is_empty() {
                continue;
            }
            if pos == Pos::Verb {
                let restored = format!("{stem}e");
                if self.validation.contains(&restored) {
                    return restored;
                }
            }
            if self.validation.contains(stem) {
                return stem.to_string();
            }
        }
        word.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn words(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    #[test]
    fn tokenize_detaches_punctuation() {
        assert_eq!(words(&tokenize("Dogs chase cats.")), ["dogs", "chase", "cats", "."]);
        assert!(tokenize("").is_empty());
        assert_eq!(words(&tokenize("Où est-il ?")), ["où", "est-il", "?"]);
        assert_eq!(words(&tokenize("it's a,b;c")), ["it's", "a", ",", "b", ";", "c"]);
    }

    #[test]
    fn token_indices_are_positions() {
        let toks = tokenize("a b. c");
        assert!(toks.iter().enumerate().all(|(i, t)| t.index == i));
    }

    fn small_lex() -> (PosLexicon, Lemmatizer) {
        let lex = PosLexicon::new([("dog", Pos::Noun), ("chase", Pos::Verb), ("the", Pos::Other)])
            .with_stopwords(["the", "of", "a"]);
        let lemm = Lemmatizer::new(["dog", "chase"]);
        (lex, lemm)
    }

    #[test]
    fn content_words_uses_lexicon_then_lemma_then_default() {
        let (lex, lemm) = small_lex();
        let toks = tokenize("the dogs chase");
        let cw = content_words(&toks, &lex, &lemm);
        assert_eq!(
            cw,
            vec![
                ContentWord { index: 1, surface: "dogs".into(), pos: Pos::Noun },
                ContentWord { index: 2, surface: "chase".into(), pos: Pos::Verb },
            ]
        );
        assert!(content_words(&tokenize("the of a"), &lex, &lemm).is_empty());
        assert_eq!(
            content_words(&tokenize("blarg"), &lex, &lemm),
            vec![ContentWord { index: 0, surface: "blarg".into(), pos: Pos::Noun }]
        );
        // punctuation and numbers fall to OTHER
        assert!(content_words(&tokenize(". 42"), &lex, &lemm).is_empty());
    }

    #[test]
    fn lemmatize_rules() {
        let lemm = Lemmatizer::new(["dog", "chase", "run", "box", "hope"]);
        assert_eq!(lemm.lemmatize("dogs", Pos::Noun), "dog");
        assert_eq!(lemm.lemmatize("boxes", Pos::Noun), "box");
        assert_eq!(lemm.lemmatize("chased", Pos::Verb), "chase");
        assert_eq!(lemm.lemmatize("chasing", Pos::Verb), "chase");
        assert_eq!(lemm.lemmatize("hoping", Pos::Verb), "hope");
        assert_eq!(lemm.lemmatize("run", Pos::Verb), "run");
        assert_eq!(lemm.lemmatize("zzz", Pos::Noun), "zzz");
        // no rules for adjectives
        assert_eq!(lemm.lemmatize("dogs", Pos::Adj), "dogs");
    }

    #[test]
    fn lemmatize_exceptions() {
        let lemm = Lemmatizer::new(["dog"]).with_exceptions([("mice", "mouse"), ("went", "go")]).unwrap();
        assert_eq!(lemm.lemmatize("mice", Pos::Noun), "mouse");
        assert_eq!(lemm.lemmatize("mouse", Pos::Noun), "mouse");
        assert!(Lemmatizer::new(["x"]).with_exceptions([("a", "b"), ("b", "c")]).is_err());
    }

    #[test]
    fn lexicon_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lex.tsv");
        std::fs::write(&p, "Dog\tNOUN\nchase\tverb\n").unwrap();
        let lex = PosLexicon::load(&p).unwrap();
        assert_eq!(lex.get("dog"), Some(Pos::Noun));
        assert_eq!(lex.get("chase"), Some(Pos::Verb));
        std::fs::write(&p, "dog\tNOUNISH\n").unwrap();
        let err = PosLexicon::load(&p).unwrap_err();
        assert!(err.to_string().contains(":1:"), "{err}");
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent_on_joined_output(s in "\\PC{0,40}") {
            let once = tokenize(&s);
            let joined = join_tokens(&words(&once));
            prop_assert_eq!(tokenize(&joined), once);
        }

        #[test]
        fn tokens_cover_input_without_whitespace(s in "[a-zA-Z .,!?;:'\\-\\t\\n]{0,40}") {
            let toks = tokenize(&s);
            for t in &toks {
                prop_assert!(!t.surface.is_empty());
                prop_assert!(!t.surface.chars().any(char::is_whitespace));
            }
            let recovered: String = toks.iter().map(|t| t.surface.as_str()).collect();
            let expected: String = s.to_lowercase().chars().filter(|c| !c.is_whitespace()).collect();
            prop_assert_eq!(recovered, expected);
        }

        #[test]
        fn content_word_indices_strictly_increase(s in "[a-z .]{0,40}") {
            let (lex, lemm) = small_lex();
            let toks = tokenize(&s);
            let cw = content_words(&toks, &lex, &lemm);
            prop_assert!(cw.windows(2).all(|w| w[0].index < w[1].index));
            prop_assert!(cw.iter().all(|c| c.index < toks.len()));
        }

        #[test]
        fn lemmatize_is_idempotent(
            vocab in proptest::collection::vec("[a-z]{1,6}", 0..20),
            word in "[a-z]{1,9}",
            pos in prop_oneof![Just(Pos::Noun), Just(Pos::Verb), Just(Pos::Adj), Just(Pos::Other)],
        ) {
            let lemm = Lemmatizer::new(&vocab);
            let once = lemm.lemmatize(&word, pos);
            prop_assert_eq!(lemm.lemmatize(&once, pos), once);
        }
    }
}
