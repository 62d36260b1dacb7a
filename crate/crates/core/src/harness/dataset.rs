use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::translation::LangTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Csqa,
    Codah,
}

impl Task {
    pub fn num_candidates(self) -> usize {
        match self {
            Task::Csqa => 5,
            Task::Codah => 4,
        }
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csqa" | "x-csqa" => Ok(Task::Csqa),
            "codah" | "x-codah" => Ok(Task::Codah),
            other => Err(Error::InvalidInput(format!("unknown task `{other}` (expected csqa or codah)"))),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Csqa => "csqa",
            Task::Codah => "codah",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub id: String,
    pub lang: LangTag,
    pub question: String,
    pub candidates: Vec<String>,
    pub label: Option<usize>,
    pub task: Task,
    pub question_concept: Option<String>,
}

impl Example {
    pub fn validate(&self) -> Result<()> {
        let n = self.task.num_candidates();
        if self.candidates.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} example `{}` has {} candidates; expected {n}",
                self.task,
                self.id,
                self.candidates.len()
            )));
        }
        if let Some(l) = self.label {
            if l >= n {
                return Err(Error::InvalidInput(format!(
                    "example `{}` has label {l} but only {n} candidates",
                    self.id
                )));
            }
        }
        Ok(())
    }
}

/// Accepted spellings of each record field, checked in order. Dotted names
/// reach into nested objects, as in the XCSR release files.
pub const FIELD_ALIASES: &[(&str, &[&str])] = &[
    ("id", &["id", "qid"]),
    ("lang", &["lang", "language"]),
    ("question", &["question", "question.stem", "stem"]),
    ("candidates", &["candidates", "choices", "question.choices", "endings"]),
    ("label", &["label", "answerKey", "answer_key", "answer"]),
    ("question_concept", &["question_concept", "question.question_concept", "concept"]),
];

fn aliases(field: &str) -> &'static [&'static str] {
    FIELD_ALIASES
        .iter()
        .find(|(f, _)| *f == field)
        .map(|(_, a)| *a)
        .unwrap_or(&[])
}

fn lookup<'a>(record: &'a Map<String, Value>, field: &str) -> Option<&'a Value> {
    aliases(field).iter().find_map(|name| {
        let mut parts = name.split('.');
        let mut v = record.get(parts.next()?)?;
        for p in parts {
            v = v.as_object()?.get(p)?;
        }
        // `question` may be an object holding the stem; only strings count.
        if field == "question" && !v.is_string() {
            return None;
        }
        Some(v)
    })
}

fn as_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Object(o) => o.get("text").and_then(Value::as_str).map(str::to_string),
        _ => None,
    }
}

fn parse_label(v: &Value) -> std::result::Result<Option<usize>, String> {
    match v {
        Value::Null => Ok(None),
        Value::Number(n) => n
            .as_u64()
            .map(|n| Some(n as usize))
            .ok_or_else(|| format!("label `{n}` is not a non-negative integer")),
        Value::String(s) if s.is_empty() => Ok(None),
        Value::String(s) => {
            if let Ok(n) = s.parse::<usize>() {
                return Ok(Some(n));
            }
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c @ 'A'..='Z'), None) => Ok(Some(c as usize - 'A' as usize)),
                _ => Err(format!("label `{s}` is neither an index nor a letter")),
            }
        }
        other => Err(format!("unsupported label value {other}")),
    }
}

fn parse_record(record: &Map<String, Value>, task: Task) -> std::result::Result<Example, String> {
    let text_field = |name: &str| -> std::result::Result<String, String> {
        lookup(record, name)
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| format!("missing or non-string field `{name}`"))
    };
    let id = match lookup(record, "id") {
        Some(Value::Number(n)) => n.to_string(),
        Some(Value::String(s)) => s.clone(),
        _ => return Err("missing field `id`".into()),
    };
    let lang: LangTag = text_field("lang")?.parse().map_err(|e: Error| e.to_string())?;
    let question = text_field("question")?;
    let candidates = lookup(record, "candidates")
        .and_then(Value::as_array)
        .ok_or("missing field `candidates`")?
        .iter()
        .map(|c| as_text(c).ok_or_else(|| format!("candidate {c} has no text")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let label = match lookup(record, "label") {
        Some(v) => parse_label(v)?,
        None => None,
    };
    let question_concept = lookup(record, "question_concept").and_then(Value::as_str).map(str::to_string);
    let ex = Example {
        id,
        lang,
        question,
        candidates,
        label,
        task,
        question_concept,
    };
    ex.validate().map_err(|e| e.to_string())?;
    Ok(ex)
}

/// Reads one JSON object per line (blank lines skipped). Field names are
/// resolved through [`FIELD_ALIASES`]; letter labels map `A` to 0.
pub fn load_dataset(path: &Path, task: Task) -> Result<Vec<Example>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        let record = value
            .as_object()
            .ok_or_else(|| Error::parse(path, i + 1, "record is not a JSON object"))?;
        out.push(parse_record(record, task).map_err(|m| Error::parse(path, i + 1, m))?);
    }
    Ok(out)
}

#[derive(Serialize)]
struct Record<'a> {
    id: &'a str,
    lang: LangTag,
    question: &'a str,
    candidates: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    question_concept: Option<&'a str>,
}

/// Writes examples in the canonical field names read by [`load_dataset`].
pub fn write_dataset(path: &Path, examples: &[Example]) -> Result<()> {
    let mut out = Vec::new();
    for ex in examples {
        let rec = Record {
            id: &ex.id,
            lang: ex.lang,
            question: &ex.question,
            candidates: &ex.candidates,
            label: ex.label,
            question_concept: ex.question_concept.as_deref(),
        };
        serde_json::to_writer(&mut out, &rec).expect("serializing to memory");
        out.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}
