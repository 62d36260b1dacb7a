//! Few-shot generative knowledge: an HTTP text-completion client and a
//! deterministic offline stand-in.

use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::http::{api_key_from_env, JsonPoster};
use crate::knowledge::{lookup_definition, DictionaryStore, KnowledgeSnippet, KnowledgeSource};
use crate::text::{content_words, tokenize, Lemmatizer, PosLexicon};
use crate::tsv;

/// Text returned when the offline client has nothing to say.
pub const NO_KNOWLEDGE: &str = "no knowledge";

pub trait GenerativeClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String>;
}

/// `Q: <query>\nK: <knowledge>\n` per example, then `Q: <query>\nK:`.
pub fn build_prompt<S: AsRef<str>, T: AsRef<str>>(examples: &[(S, T)], query: &str) -> String {
    let mut prompt = String::new();
    for (q, k) in examples {
        prompt.push_str(&format!("Q: {}\nK: {}\n", q.as_ref(), k.as_ref()));
    }
    prompt.push_str(&format!("Q: {query}\nK:"));
    prompt
}

pub fn generate_knowledge<S: AsRef<str>, T: AsRef<str>>(
    client: &dyn GenerativeClient,
    prompt_examples: &[(S, T)],
    query: &str,
) -> Result<KnowledgeSnippet> {
    if prompt_examples.is_empty() {
        return Err(Error::InvalidInput(
            "generative prompt needs at least one example".into(),
        ));
    }
    let output = client.complete(&build_prompt(prompt_examples, query))?;
    let line = output
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or(NO_KNOWLEDGE);
    Ok(KnowledgeSnippet::new(KnowledgeSource::Generative, line))
}

/// Reads few-shot prompt examples from a TSV file of `query<TAB>knowledge`.
pub fn load_prompt_examples(path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (line_no, line) in tsv::content_lines(path)? {
        let f = tsv::fields(path, line_no, &line, 2)?;
        out.push((f[0].to_string(), f[1].to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct HttpCompletionConfig {
    pub endpoint: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: Option<String>,
    pub timeout_ms: u64,
    pub max_tokens: u32,
}

/// Posts `{prompt, max_tokens, temperature: 0}`; accepts either a top-level
/// `text` field or an OpenAI-style `choices[0].text` in the response.
#[derive(Debug, Clone)]
pub struct HttpCompletionClient {
    poster: JsonPoster,
    max_tokens: u32,
}

impl HttpCompletionClient {
    pub fn new(config: &HttpCompletionConfig) -> Result<Self> {
        let key = api_key_from_env(config.api_key_env.as_deref())?;
        Ok(Self {
            poster: JsonPoster::new(&config.endpoint, key, config.timeout_ms),
            max_tokens: config.max_tokens,
        })
    }
}

impl GenerativeClient for HttpCompletionClient {
    fn complete(&self, prompt: &str) -> Result<String> {
        let resp = self.poster.post(&json!({
            "prompt": prompt,
            "max_tokens": self.max_tokens,
            "temperature": 0.0,
        }))?;
        let text = resp
            .get("text")
            .and_then(Value::as_str)
            .or_else(|| resp.pointer("/choices/0/text").and_then(Value::as_str));
        text.map(str::to_string).ok_or_else(|| Error::Service {
            status: None,
            message: format!("completion response without text: {resp}"),
        })
    }
}

/// Answers with the dictionary definition of the first content word of the
/// final query in the prompt, or [`NO_KNOWLEDGE`].
#[derive(Debug, Clone)]
pub struct StubGenerativeClient {
    dictionary: Arc<DictionaryStore>,
    lexicon: Arc<PosLexicon>,
    lemmatizer: Arc<Lemmatizer>,
}

impl StubGenerativeClient {
    pub fn new(
        dictionary: Arc<DictionaryStore>,
        lexicon: Arc<PosLexicon>,
        lemmatizer: Arc<Lemmatizer>,
    ) -> Self {
        Self {
            dictionary,
            lexicon,
            lemmatizer,
        }
    }
}

impl GenerativeClient for StubGenerativeClient {
    fn complete(&self, prompt: &str) -> Result<String> {
        let query = prompt
            .lines()
            .rev()
            .find_map(|l| l.strip_prefix("Q: "))
            .unwrap_or(prompt);
        let tokens = tokenize(query);
        let answer = content_words(&tokens, &self.lexicon, &self.lemmatizer)
            .into_iter()
            .find_map(|cw| lookup_definition(&self.dictionary, &cw.surface, cw.pos, &self.lemmatizer))
            .map(|s| s.text)
            .unwrap_or_else(|| NO_KNOWLEDGE.to_string());
        Ok(answer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::test_server::serve;
    use crate::text::Pos;
    use std::sync::atomic::Ordering;

    fn stub() -> StubGenerativeClient {
        let dict = DictionaryStore::from_pairs([("dog", "a domesticated canine")]);
        let lex = PosLexicon::new([("the", Pos::Other), ("of", Pos::Other), ("and", Pos::Other), ("barks", Pos::Verb)])
            .with_stopwords(["the", "of", "and"]);
        StubGenerativeClient::new(Arc::new(dict), Arc::new(lex), Arc::new(Lemmatizer::new(["dog"])))
    }

    const SHOTS: [(&str, &str); 1] = [("a cat sleeps", "cat : a small feline")];

    #[test]
    fn prompt_layout() {
        assert_eq!(
            build_prompt(&SHOTS, "the dog barks"),
            "Q: a cat sleeps\nK: cat : a small feline\nQ: the dog barks\nK:"
        );
    }

    #[test]
    fn stub_answers_from_dictionary() {
        let c = stub();
        let s = generate_knowledge(&c, &SHOTS, "the dog barks").unwrap();
        assert_eq!(s.text, "dog : a domesticated canine");
        assert_eq!(s.source, KnowledgeSource::Generative);
        assert_eq!(generate_knowledge(&c, &SHOTS, "of the and").unwrap().text, NO_KNOWLEDGE);
        let again = generate_knowledge(&c, &SHOTS, "the dog barks").unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn needs_an_example() {
        let empty: [(&str, &str); 0] = [];
        assert!(generate_knowledge(&stub(), &empty, "x").is_err());
    }

    #[test]
    fn http_client_wire_format() {
        let srv = serve(200, |_| r#"{"choices":[{"text":"\n dog : a pet\nmore"}]}"#.to_string());
        let client = HttpCompletionClient::new(&HttpCompletionConfig {
            endpoint: srv.url.clone(),
            api_key_env: None,
            timeout_ms: 5_000,
            max_tokens: 32,
        })
        .unwrap();
        let s = generate_knowledge(&client, &SHOTS, "the dog barks").unwrap();
        assert_eq!(s.text, "dog : a pet");
        let body: Value = serde_json::from_str(&srv.bodies.lock().unwrap()[0]).unwrap();
        assert_eq!(body["prompt"], build_prompt(&SHOTS, "the dog barks"));
        assert_eq!(srv.hits.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn http_client_reports_status() {
        let srv = serve(503, |_| "{}".to_string());
        let client = HttpCompletionClient::new(&HttpCompletionConfig {
            endpoint: srv.url.clone(),
            api_key_env: None,
            timeout_ms: 5_000,
            max_tokens: 32,
        })
        .unwrap();
        match generate_knowledge(&client, &SHOTS, "q") {
            Err(Error::Service { status: Some(503), .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn http_client_times_out() {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/", listener.local_addr().unwrap());
        let _hold = std::thread::spawn(move || {
            let conn = listener.accept();
            std::thread::sleep(std::time::Duration::from_millis(1500));
            drop(conn);
        });
        let client = HttpCompletionClient::new(&HttpCompletionConfig {
            endpoint: url,
            api_key_env: None,
            timeout_ms: 200,
            max_tokens: 8,
        })
        .unwrap();
        match client.complete("x") {
            Err(Error::Timeout { timeout_ms: 200 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
