use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::text::{join_tokens, tokenize_words};
use crate::translation::{LangTag, Translation, Translator};
use crate::tsv;

/// Word-for-word translation through bilingual tables.
///
/// Output is the tokenized input with each token replaced by its table entry
/// (unknown tokens pass through), joined by single spaces. Because the
/// mapping is one token to one token, output token `i` comes from input
/// token `i`.
#[derive(Debug, Clone, Default)]
pub struct MockTranslator {
    tables: HashMap<(LangTag, LangTag), HashMap<String, String>>,
}

impl MockTranslator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds entries for `src -> tgt`. Both sides must be single tokens.
    /// Earlier entries for a source word win.
    pub fn insert_table<I, S, T>(&mut self, src: LangTag, tgt: LangTag, pairs: I) -> Result<()>
    where
        I: IntoIterator<Item = (S, T)>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let table = self.tables.entry((src, tgt)).or_default();
        for (a, b) in pairs {
            let (a, b) = (single_token(a.as_ref())?, single_token(b.as_ref())?);
            table.entry(a).or_insert(b);
        }
        Ok(())
    }

    /// Loads every `<src>-<tgt>.tsv` file in `dir`. A direction without its
    /// own file is derived by inverting the opposite table (first entry per
    /// target word wins).
    pub fn load(dir: &Path) -> Result<Self> {
        let mut mock = Self::new();
        let mut files: Vec<_> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "tsv"))
            .collect();
        files.sort();
        for path in files {
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            let Some((src, tgt)) = stem.split_once('-') else {
                continue;
            };
            let (src, tgt): (LangTag, LangTag) = (src.parse()?, tgt.parse()?);
            let mut pairs = Vec::new();
            for (line_no, line) in tsv::content_lines(&path)? {
                let f = tsv::fields(&path, line_no, &line, 2)?;
                let (a, b) = (f[0].to_lowercase(), f[1].to_lowercase());
                if a.split_whitespace().count() != 1 || b.split_whitespace().count() != 1 {
                    return Err(Error::parse(&path, line_no, "table entries must be single words"));
                }
                pairs.push((a, b));
            }
            mock.insert_table(src, tgt, pairs)?;
        }
        mock.derive_reverse_tables();
        Ok(mock)
    }

    /// Fills in every missing direction whose opposite table exists.
    pub fn derive_reverse_tables(&mut self) {
        let missing: Vec<_> = self
            .tables
            .keys()
            .filter(|(s, t)| !self.tables.contains_key(&(*t, *s)))
            .copied()
            .collect();
        for (src, tgt) in missing {
            let sorted: BTreeMap<_, _> = self.tables[&(src, tgt)].iter().collect();
            let mut reverse = HashMap::new();
            for (a, b) in sorted {
                reverse.entry(b.clone()).or_insert_with(|| a.clone());
            }
            self.tables.insert((tgt, src), reverse);
        }
    }

    pub fn has_table(&self, src: LangTag, tgt: LangTag) -> bool {
        self.tables.contains_key(&(src, tgt))
    }

    /// Source words of the `src -> tgt` table, sorted.
    pub fn vocabulary(&self, src: LangTag, tgt: LangTag) -> Vec<&str> {
        let mut words: Vec<&str> = self
            .tables
            .get(&(src, tgt))
            .map(|t| t.keys().map(String::as_str).collect())
            .unwrap_or_default();
        words.sort_unstable();
        words
    }

    fn table(&self, src: LangTag, tgt: LangTag) -> Result<&HashMap<String, String>> {
        self.tables
            .get(&(src, tgt))
            .ok_or_else(|| Error::InvalidInput(format!("no mock translation table for {src}-{tgt}")))
    }
}

fn single_token(word: &str) -> Result<String> {
    let toks = tokenize_words(word);
    match toks.as_slice() {
        [t] => Ok(t.clone()),
        _ => Err(Error::InvalidInput(format!(
            "mock table entry `{word}` is not a single token"
        ))),
    }
}

impl Translator for MockTranslator {
    fn translate_aligned(&self, text: &str, src: LangTag, tgt: LangTag) -> Result<Translation> {
        if src == tgt {
            return Ok(Translation::unaligned(text));
        }
        let table = self.table(src, tgt)?;
        let words = tokenize_words(text);
        let out: Vec<&str> = words
            .iter()
            .map(|w| table.get(w).map_or(w.as_str(), String::as_str))
            .collect();
        Ok(Translation {
            text: join_tokens(&out),
            alignment: Some((0..out.len()).collect()),
        })
    }
}
