use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// One of the sixteen supported languages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum LangTag {
    En,
    De,
    It,
    Es,
    Fr,
    Nl,
    Ru,
    Vi,
    Zh,
    Hi,
    Pl,
    Ar,
    Ja,
    Pt,
    Sw,
    Ur,
}

impl LangTag {
    pub const ALL: [LangTag; 16] = [
        LangTag::En,
        LangTag::De,
        LangTag::It,
        LangTag::Es,
        LangTag::Fr,
        LangTag::Nl,
        LangTag::Ru,
        LangTag::Vi,
        LangTag::Zh,
        LangTag::Hi,
        LangTag::Pl,
        LangTag::Ar,
        LangTag::Ja,
        LangTag::Pt,
        LangTag::Sw,
        LangTag::Ur,
    ];

    pub fn code(self) -> &'static str {
        match self {
            LangTag::En => "en",
            LangTag::De => "de",
            LangTag::It => "it",
            LangTag::Es => "es",
            LangTag::Fr => "fr",
            LangTag::Nl => "nl",
            LangTag::Ru => "ru",
            LangTag::Vi => "vi",
            LangTag::Zh => "zh",
            LangTag::Hi => "hi",
            LangTag::Pl => "pl",
            LangTag::Ar => "ar",
            LangTag::Ja => "ja",
            LangTag::Pt => "pt",
            LangTag::Sw => "sw",
            LangTag::Ur => "ur",
        }
    }

    /// Every language except English.
    pub fn non_english() -> impl Iterator<Item = LangTag> {
        Self::ALL.into_iter().filter(|l| *l != LangTag::En)
    }
}

impl FromStr for LangTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        LangTag::ALL
            .into_iter()
            .find(|l| l.code() == s)
            .ok_or_else(|| Error::UnknownLanguage(s.to_string()))
    }
}

impl TryFrom<String> for LangTag {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<LangTag> for String {
    fn from(l: LangTag) -> String {
        l.code().to_string()
    }
}

impl fmt::Display for LangTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}
