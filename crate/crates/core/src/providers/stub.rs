//! Hash-based stand-ins for every provider.
//!
//! All values derive from 64-bit FNV-1a over UTF-8 bytes, so any language can
//! reproduce them bit-exactly:
//!
//! | provider | value |
//! |---|---|
//! | masked LM | `score(word) = fnv(word) % 1000 / 1000`, context ignored |
//! | NLI | `fnv(premise + "→" + hypothesis) % 1000 / 1000`, `1.0` on identical inputs |
//! | embedding | `d = 8`, component `i` = `fnv(lower(word) + "#" + i) % 2001 / 1000 - 1` |
//! | lexicon | `fnv(kind + ":" + lower(word)) % 1000 / 1000`, never absent |

use crate::error::Result;
use crate::text;

use super::{
    fnv1a64, select_topk, stub_score, Embedder, LexiconKind, LmCapabilities, MaskedLm, Nli,
    PairEncoding, WordScores,
};

const DEFAULT_VOCAB: &str = include_str!("../../data/stub_vocab.txt");

pub const STUB_MAX_SEQUENCE_LENGTH: usize = 512;

#[derive(Debug, Clone)]
pub struct StubMaskedLm {
    vocab: Vec<String>,
}

impl StubMaskedLm {
    pub fn with_vocab<I, S>(vocab: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        StubMaskedLm {
            vocab: vocab.into_iter().map(Into::into).collect(),
        }
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }
}

impl Default for StubMaskedLm {
    fn default() -> Self {
        Self::with_vocab(DEFAULT_VOCAB.lines().filter(|l| !l.is_empty()))
    }
}

impl MaskedLm for StubMaskedLm {
    fn capabilities(&self) -> LmCapabilities {
        LmCapabilities {
            vocab: format!("stub-fnv1a64/{}", self.vocab.len()),
            max_sequence_length: STUB_MAX_SEQUENCE_LENGTH,
        }
    }

    fn masked_topk(&self, _encoding: &PairEncoding, k: usize) -> Result<Vec<(String, f64)>> {
        Ok(select_topk(
            self.vocab.iter().map(|w| (w.as_str(), stub_score(w))),
            k,
        ))
    }

    fn target_probs(&self, _encoding: &PairEncoding, words: &[String]) -> Result<Vec<f64>> {
        Ok(words.iter().map(|w| stub_score(w)).collect())
    }
}

#[derive(Debug, Clone)]
pub struct StubNli {
    /// Return exactly 1.0 when premise and hypothesis are identical.
    pub identical_is_certain: bool,
}

impl Default for StubNli {
    fn default() -> Self {
        StubNli {
            identical_is_certain: true,
        }
    }
}

impl Nli for StubNli {
    fn name(&self) -> &str {
        "stub-fnv1a64"
    }

    fn entail_prob(&self, premise: &str, hypothesis: &str) -> Result<f64> {
        if self.identical_is_certain && premise == hypothesis {
            return Ok(1.0);
        }
        Ok(stub_score(&format!("{premise}→{hypothesis}")))
    }
}

#[derive(Debug, Clone)]
pub struct StubEmbedder {
    dim: usize,
}

impl StubEmbedder {
    pub fn new(dim: usize) -> Self {
        StubEmbedder { dim }
    }
}

impl Default for StubEmbedder {
    fn default() -> Self {
        StubEmbedder::new(8)
    }
}

impl Embedder for StubEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, word: &str) -> Result<Vec<f64>> {
        let word = text::normalize(word);
        Ok((0..self.dim)
            .map(|i| (fnv1a64(&format!("{word}#{i}")) % 2001) as f64 / 1000.0 - 1.0)
            .collect())
    }
}

#[derive(Debug, Clone)]
pub struct StubLexicon {
    kind: LexiconKind,
}

impl StubLexicon {
    pub fn new(kind: LexiconKind) -> Self {
        StubLexicon { kind }
    }
}

impl WordScores for StubLexicon {
    fn lookup(&self, word: &str) -> Option<f64> {
        Some(stub_score(&format!(
            "{}:{}",
            self.kind.name(),
            text::normalize(word)
        )))
    }
}
