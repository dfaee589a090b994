//! Interfaces to the external model and data resources the pipeline consumes.
//!
//! Every provider is an opaque, deterministic function of its inputs. The
//! [`stub`] module holds hash-based implementations used for offline tests;
//! [`remote`] reaches real backends over a line-delimited JSON protocol;
//! [`vectors`] loads word embeddings from a text `.vec` file.

pub mod lexicon;
pub mod remote;
pub mod stub;
pub mod vectors;

use std::sync::{Arc, OnceLock};

use regex::Regex;

use crate::error::Result;

pub use lexicon::{Lexicon, LexiconKind, WordScores};

pub const MASK_TOKEN: &str = "<mask>";
pub const BOS_TOKEN: &str = "<s>";
pub const EOS_TOKEN: &str = "</s>";

/// Input to a masked language model: one or two text segments, exactly one of
/// which contains [`MASK_TOKEN`].
///
/// `tokens` is the word-level rendering with RoBERTa-style delimiters,
/// `<s> A </s> </s> B </s>` for pairs and `<s> A </s>` for single segments;
/// `mask_position` indexes the mask inside `tokens`. Backends that run their
/// own subword tokenizer should consume `segments` instead.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairEncoding {
    pub segments: Vec<String>,
    pub tokens: Vec<String>,
    pub mask_position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LmCapabilities {
    pub vocab: String,
    pub max_sequence_length: usize,
}

pub trait MaskedLm: Send + Sync {
    fn capabilities(&self) -> LmCapabilities;

    /// Top-`k` single-word fillers for the mask, sorted by (probability desc,
    /// word asc), no duplicates.
    fn masked_topk(&self, encoding: &PairEncoding, k: usize) -> Result<Vec<(String, f64)>>;

    /// Probability of each word in `words` at the mask; unknown words get 0.
    fn target_probs(&self, encoding: &PairEncoding, words: &[String]) -> Result<Vec<f64>>;

    /// `false` if calls must not overlap; the pipeline then runs single-threaded.
    fn concurrent(&self) -> bool {
        true
    }
}

pub trait Nli: Send + Sync {
    fn name(&self) -> &str;

    /// Probability that `premise` entails `hypothesis`.
    fn entail_prob(&self, premise: &str, hypothesis: &str) -> Result<f64>;

    fn concurrent(&self) -> bool {
        true
    }
}

pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;

    /// Always a `dim()`-vector; out-of-vocabulary words map to zeros.
    fn embed(&self, word: &str) -> Result<Vec<f64>>;

    fn concurrent(&self) -> bool {
        true
    }
}

/// The full set of resources a pipeline run can draw on.
#[derive(Clone)]
pub struct Providers {
    pub lm: Arc<dyn MaskedLm>,
    pub nli: Arc<dyn Nli>,
    pub embedder: Arc<dyn Embedder>,
    pub freq: Option<Arc<dyn WordScores>>,
    pub wp_crowd: Option<Arc<dyn WordScores>>,
    pub wp_corp: Option<Arc<dyn WordScores>>,
}

impl Providers {
    /// Hash-based stubs for every resource.
    pub fn stub() -> Self {
        Providers {
            lm: Arc::new(stub::StubMaskedLm::default()),
            nli: Arc::new(stub::StubNli::default()),
            embedder: Arc::new(stub::StubEmbedder::default()),
            freq: Some(Arc::new(stub::StubLexicon::new(LexiconKind::Freq))),
            wp_crowd: Some(Arc::new(stub::StubLexicon::new(LexiconKind::WpCrowd))),
            wp_corp: Some(Arc::new(stub::StubLexicon::new(LexiconKind::WpCorp))),
        }
    }

    pub fn concurrent(&self) -> bool {
        self.lm.concurrent() && self.nli.concurrent() && self.embedder.concurrent()
    }

    pub fn lexicon(&self, kind: LexiconKind) -> Option<&Arc<dyn WordScores>> {
        match kind {
            LexiconKind::Freq => self.freq.as_ref(),
            LexiconKind::WpCrowd => self.wp_crowd.as_ref(),
            LexiconKind::WpCorp => self.wp_corp.as_ref(),
        }
    }
}

/// 64-bit FNV-1a over the UTF-8 bytes of `s`.
pub fn fnv1a64(s: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    s.bytes()
        .fold(OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// `fnv1a64(s) mod 1000 / 1000`, the stub probability of `s`.
pub fn stub_score(s: &str) -> f64 {
    (fnv1a64(s) % 1000) as f64 / 1000.0
}

fn word_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\p{L}+(?:['’-]\p{L}+)*$").unwrap())
}

/// Letters only, with optional internal hyphens or apostrophes.
pub fn is_word(s: &str) -> bool {
    word_pattern().is_match(s)
}

/// Strip a leading subword-space marker (`Ġ` for byte-level BPE, `▁` for
/// SentencePiece). Continuation pieces (`##ing`) are returned as `None`.
pub fn detokenize_piece(piece: &str) -> Option<&str> {
    if piece.starts_with("##") {
        return None;
    }
    let word = piece
        .strip_prefix('Ġ')
        .or_else(|| piece.strip_prefix('▁'))
        .unwrap_or(piece);
    Some(word.trim())
}

/// Turn raw vocabulary scores into a clean top-`k` list: detokenize, keep
/// single alphabetic words, drop duplicates (keeping the higher probability),
/// sort by (probability desc, word asc) and truncate.
pub fn select_topk<I, S>(raw: I, k: usize) -> Vec<(String, f64)>
where
    I: IntoIterator<Item = (S, f64)>,
    S: AsRef<str>,
{
    let mut best: std::collections::HashMap<String, f64> = Default::default();
    for (piece, p) in raw {
        let Some(word) = detokenize_piece(piece.as_ref()) else {
            continue;
        };
        if !is_word(word) || !p.is_finite() {
            continue;
        }
        let p = p.clamp(0.0, 1.0);
        best.entry(word.to_string())
            .and_modify(|q| *q = q.max(p))
            .or_insert(p);
    }
    let mut out: Vec<(String, f64)> = best.into_iter().collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out.truncate(k);
    out
}
