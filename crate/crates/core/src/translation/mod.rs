//! Machine translation backends and the translate-retrieve-translate driver.

mod lang;
mod mock;
mod service;
mod trt;

use crate::error::Result;

pub use lang::LangTag;
pub use mock::MockTranslator;
pub use service::{ServiceConfig, ServiceTranslator};
pub use trt::{
    retrieve, trt_retrieve, trt_retrieve_with_concepts, GenerativeRetriever, RetrievalConfig, Retrievers,
};

/// Translated text plus, when the backend knows it, the source token index
/// of every output token (tokens as produced by [`crate::text::tokenize`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Translation {
    pub text: String,
    pub alignment: Option<Vec<usize>>,
}

impl Translation {
    pub fn unaligned(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            alignment: None,
        }
    }
}

/// A translation backend. Translating into the source language returns the
/// input unchanged.
pub trait Translator: Send + Sync {
    fn translate_aligned(&self, text: &str, src: LangTag, tgt: LangTag) -> Result<Translation>;

    fn translate(&self, text: &str, src: LangTag, tgt: LangTag) -> Result<String> {
        Ok(self.translate_aligned(text, src, tgt)?.text)
    }
}
