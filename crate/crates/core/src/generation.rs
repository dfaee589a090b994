//! Substitute generation: mask the target, encode the original and masked
//! sentence as a pair, and take the masked LM's best fillers.

use std::collections::HashSet;
use std::sync::OnceLock;

use rust_stemmers::{Algorithm, Stemmer};

use crate::error::{Error, Result};
use crate::providers::{self, MaskedLm, PairEncoding, BOS_TOKEN, EOS_TOKEN, MASK_TOKEN};
use crate::text::{self, Span};
use crate::types::{locate_target, Candidate, Instance};

/// Raw fillers requested per surviving candidate.
pub const OVERQUERY_FACTOR: usize = 4;

const INFLECTIONAL_SUFFIXES: [&str; 7] = ["s", "es", "ed", "d", "ing", "er", "est"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedPair {
    pub original: String,
    pub masked: String,
    pub target: Span,
    pub encoding: PairEncoding,
}

fn push_words(tokens: &mut Vec<String>, s: &str) {
    tokens.extend(text::tokenize(s).into_iter().map(|t| t.text.to_string()));
}

/// Single-segment encoding of `sentence` with `span` masked.
pub fn encode_single(sentence: &str, span: Span) -> PairEncoding {
    let masked = text::replace_span(sentence, span, MASK_TOKEN);
    let range = span.byte_range(sentence);
    let mut tokens = vec![BOS_TOKEN.to_string()];
    push_words(&mut tokens, &sentence[..range.start]);
    let mask_position = tokens.len();
    tokens.push(MASK_TOKEN.to_string());
    push_words(&mut tokens, &sentence[range.end..]);
    tokens.push(EOS_TOKEN.to_string());
    PairEncoding {
        segments: vec![masked],
        tokens,
        mask_position,
    }
}

pub fn build_masked_pair(instance: &Instance) -> Result<MaskedPair> {
    let sentence = instance.sentence();
    let target = locate_target(instance)?;
    let masked = text::replace_span(sentence, target, MASK_TOKEN);
    let range = target.byte_range(sentence);

    let mut tokens = vec![BOS_TOKEN.to_string()];
    push_words(&mut tokens, sentence);
    tokens.push(EOS_TOKEN.to_string());
    tokens.push(EOS_TOKEN.to_string());
    push_words(&mut tokens, &sentence[..range.start]);
    let mask_position = tokens.len();
    tokens.push(MASK_TOKEN.to_string());
    push_words(&mut tokens, &sentence[range.end..]);
    tokens.push(EOS_TOKEN.to_string());

    Ok(MaskedPair {
        original: sentence.to_string(),
        masked: masked.clone(),
        target,
        encoding: PairEncoding {
            segments: vec![sentence.to_string(), masked],
            tokens,
            mask_position,
        },
    })
}

fn stemmer() -> &'static Stemmer {
    static STEMMER: OnceLock<Stemmer> = OnceLock::new();
    STEMMER.get_or_init(|| Stemmer::create(Algorithm::English))
}

/// Porter2 (Snowball English) stem of the lowercased word.
pub fn stem(word: &str) -> String {
    stemmer().stem(&text::normalize(word)).into_owned()
}

/// True when `a` and `b` share a stem, or one is the other plus an
/// inflectional suffix.
pub fn is_morphological_variant(a: &str, b: &str) -> bool {
    let a = text::normalize(a);
    let b = text::normalize(b);
    if a == b || stem(&a) == stem(&b) {
        return true;
    }
    let (short, long) = if a.len() <= b.len() {
        (&a, &b)
    } else {
        (&b, &a)
    };
    long.strip_prefix(short.as_str())
        .is_some_and(|rest| INFLECTIONAL_SUFFIXES.contains(&rest))
}

/// Up to `k_generate` candidates in descending generation probability.
///
/// Drops the target itself, its morphological variants, non-words and
/// case-insensitive duplicates. The provider is asked for
/// `k_generate * OVERQUERY_FACTOR` fillers so filtering rarely starves the list.
pub fn generate_candidates(
    pair: &MaskedPair,
    instance: &Instance,
    lm: &dyn MaskedLm,
    k_generate: usize,
) -> Result<Vec<Candidate>> {
    if k_generate == 0 {
        return Err(Error::config("k_generate", "must be a positive integer"));
    }
    let max = lm.capabilities().max_sequence_length;
    if pair.encoding.tokens.len() > max {
        return Err(Error::SequenceTooLong {
            len: pair.encoding.tokens.len(),
            max,
        });
    }
    let raw = lm.masked_topk(&pair.encoding, k_generate * OVERQUERY_FACTOR)?;

    let target = text::normalize(instance.complex_word());
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(k_generate);
    for (word, prob) in raw {
        let word = text::normalize(&word);
        if !providers::is_word(&word) || is_morphological_variant(&word, &target) {
            continue;
        }
        if !seen.insert(word.clone()) {
            continue;
        }
        out.push(Candidate::new(word, prob));
        if out.len() == k_generate {
            break;
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyCandidateSet { word: target });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::stub::StubMaskedLm;
    use crate::providers::LmCapabilities;

    /// Returns a fixed list regardless of input.
    struct FixedLm(Vec<(&'static str, f64)>);

    impl MaskedLm for FixedLm {
        fn capabilities(&self) -> LmCapabilities {
            LmCapabilities {
                vocab: "fixed".into(),
                max_sequence_length: 64,
            }
        }

        fn masked_topk(&self, _: &PairEncoding, k: usize) -> Result<Vec<(String, f64)>> {
            Ok(self
                .0
                .iter()
                .take(k)
                .map(|&(w, p)| (w.to_string(), p))
                .collect())
        }

        fn target_probs(&self, _: &PairEncoding, words: &[String]) -> Result<Vec<f64>> {
            Ok(vec![0.0; words.len()])
        }
    }

    fn surfaces(c: &[Candidate]) -> Vec<&str> {
        c.iter().map(|c| c.surface.as_str()).collect()
    }

    #[test]
    fn masked_pair_substitutes_target() {
        let inst = Instance::new("it is compulsory for banks", "compulsory").unwrap();
        let pair = build_masked_pair(&inst).unwrap();
        assert_eq!(pair.masked, "it is <mask> for banks");
        assert_eq!(
            pair.encoding.segments,
            [pair.original.clone(), pair.masked.clone()]
        );
        let t = &pair.encoding.tokens;
        assert_eq!(t[pair.encoding.mask_position], MASK_TOKEN);
        assert_eq!(t.iter().filter(|x| *x == MASK_TOKEN).count(), 1);
        assert_eq!(
            t.join(" "),
            "<s> it is compulsory for banks </s> </s> it is <mask> for banks </s>"
        );
    }

    #[test]
    fn masked_pair_boundaries() {
        let inst = Instance::new("Compulsory, it is.", "compulsory").unwrap();
        let pair = build_masked_pair(&inst).unwrap();
        assert!(pair.masked.starts_with(MASK_TOKEN));
        assert_eq!(pair.masked, "<mask>, it is.");

        let inst = Instance::new("a big dog and a big cat", "big").unwrap();
        let pair = build_masked_pair(&inst).unwrap();
        assert_eq!(pair.masked, "a <mask> dog and a big cat");

        let inst = Instance::new("nothing here", "big").unwrap();
        assert!(matches!(
            build_masked_pair(&inst),
            Err(Error::TargetNotFound { .. })
        ));
    }

    #[test]
    fn stem_filter_drops_derivations() {
        let inst = Instance::new("they run home", "run").unwrap();
        let pair = build_masked_pair(&inst).unwrap();
        let lm = FixedLm(vec![
            ("running", 0.4),
            ("runs", 0.3),
            ("sprint", 0.2),
            ("jog", 0.1),
        ]);
        let c = generate_candidates(&pair, &inst, &lm, 30).unwrap();
        assert_eq!(surfaces(&c), ["sprint", "jog"]);
    }

    #[test]
    fn dedup_is_case_insensitive_and_target_excluded() {
        let inst = Instance::new("a large dog", "large").unwrap();
        let pair = build_masked_pair(&inst).unwrap();
        let lm = FixedLm(vec![
            ("Big", 0.5),
            ("big", 0.4),
            ("LARGE", 0.3),
            ("2019", 0.2),
        ]);
        let c = generate_candidates(&pair, &inst, &lm, 10).unwrap();
        assert_eq!(surfaces(&c), ["big"]);
        assert_eq!(c[0].gen_prob, 0.5);
    }

    #[test]
    fn empty_and_too_long() {
        let inst = Instance::new("a large dog", "large").unwrap();
        let pair = build_masked_pair(&inst).unwrap();
        let lm = FixedLm(vec![("LARGE", 0.5), ("2019", 0.4), ("##s", 0.3)]);
        assert!(matches!(
            generate_candidates(&pair, &inst, &lm, 10),
            Err(Error::EmptyCandidateSet { .. })
        ));

        let long = vec!["word"; 100].join(" ") + " large";
        let inst = Instance::new(long, "large").unwrap();
        let pair = build_masked_pair(&inst).unwrap();
        assert!(matches!(
            generate_candidates(&pair, &inst, &lm, 10),
            Err(Error::SequenceTooLong { max: 64, .. })
        ));
    }

    #[test]
    fn morphological_variants() {
        for (a, b) in [
            ("run", "runs"),
            ("run", "running"),
            ("compulsory", "compulsory"),
            ("box", "boxes"),
            ("bake", "baked"),
            ("fast", "faster"),
            ("fast", "fastest"),
            ("Big", "big"),
        ] {
            assert!(is_morphological_variant(a, b), "{a} {b}");
        }
        for (a, b) in [
            ("run", "sprint"),
            ("compulsory", "mandatory"),
            ("car", "cart"),
        ] {
            assert!(!is_morphological_variant(a, b), "{a} {b}");
        }
    }

    #[test]
    fn stub_vocabulary_of_fifty() {
        // order frozen from tests/oracles/stub_oracle.py
        let expected = [
            "zqwbo", "zqwaf", "zqwat", "zqwbh", "zqwaa", "zqwbv", "zqwbe", "zqwal", "zqwbs",
            "zqwaz", "zqwbl", "zqwae", "zqwas", "zqwbi", "zqwbw", "zqwbb", "zqwak", "zqwbp",
            "zqway", "zqwaw", "zqwbm", "zqwad", "zqwar", "zqwbf", "zqwao", "zqwbt", "zqwbc",
            "zqwaj", "zqwbq", "zqwax",
        ];
        let vocab: Vec<String> = (0..50)
            .map(|i| format!("zqw{}{}", (b'a' + i / 26) as char, (b'a' + i % 26) as char))
            .collect();
        let lm = StubMaskedLm::with_vocab(vocab);
        let inst = Instance::new("the target is here", "target").unwrap();
        let pair = build_masked_pair(&inst).unwrap();
        let c = generate_candidates(&pair, &inst, &lm, 30).unwrap();
        assert_eq!(surfaces(&c), expected);
        assert!(c.windows(2).all(|w| w[0].gen_prob >= w[1].gen_prob));
    }

    #[test]
    fn prefix_property_with_stub() {
        let lm = StubMaskedLm::default();
        let inst = Instance::new("it will be compulsory for those", "compulsory").unwrap();
        let pair = build_masked_pair(&inst).unwrap();
        let mut prev: Vec<Candidate> = Vec::new();
        for k in 1..=60 {
            let c = generate_candidates(&pair, &inst, &lm, k).unwrap();
            assert!(c.len() <= k);
            assert_eq!(&c[..prev.len()], &prev[..]);
            assert!(c
                .iter()
                .all(|c| !is_morphological_variant(&c.surface, "compulsory")));
            prev = c;
        }
    }
}
