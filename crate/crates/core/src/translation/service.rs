use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::http::{api_key_from_env, JsonPoster};
use crate::translation::{LangTag, Translation, Translator};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub endpoint: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: Option<String>,
    pub timeout_ms: u64,
    /// Root of the response cache; `None` disables caching.
    pub cache_dir: Option<PathBuf>,
}

/// HTTP translation client. Posts `{text, from, to}` and reads
/// `translation` from the reply. Responses are cached under
/// `<cache_dir>/<src>-<tgt>/<sha256(text)>.txt`.
#[derive(Debug, Clone)]
pub struct ServiceTranslator {
    poster: JsonPoster,
    cache_dir: Option<PathBuf>,
}

impl ServiceTranslator {
    pub fn new(config: &ServiceConfig) -> Result<Self> {
        let key = api_key_from_env(config.api_key_env.as_deref())?;
        Ok(Self {
            poster: JsonPoster::new(&config.endpoint, key, config.timeout_ms),
            cache_dir: config.cache_dir.clone(),
        })
    }

    pub fn cache_path(&self, text: &str, src: LangTag, tgt: LangTag) -> Option<PathBuf> {
        let digest = Sha256::digest(text.as_bytes());
        self.cache_dir
            .as_ref()
            .map(|root| root.join(format!("{src}-{tgt}")).join(format!("{digest:x}.txt")))
    }

    fn request(&self, text: &str, src: LangTag, tgt: LangTag) -> Result<String> {
        let resp = self.poster.post(&json!({
            "text": text,
            "from": src.code(),
            "to": tgt.code(),
        }))?;
        resp.get("translation")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| Error::Service {
                status: None,
                message: format!("translation response without `translation` field: {resp}"),
            })
    }
}

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never observe a partial entry.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

impl Translator for ServiceTranslator {
    fn translate_aligned(&self, text: &str, src: LangTag, tgt: LangTag) -> Result<Translation> {
        if src == tgt {
            return Ok(Translation::unaligned(text));
        }
        let cache = self.cache_path(text, src, tgt);
        if let Some(path) = &cache {
            match fs::read_to_string(path) {
                Ok(hit) => return Ok(Translation::unaligned(hit)),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => return Err(Error::io(path, e)),
            }
        }
        let out = self.request(text, src, tgt)?;
        if let Some(path) = &cache {
            write_atomic(path, &out)?;
        }
        Ok(Translation::unaligned(out))
    }
}
