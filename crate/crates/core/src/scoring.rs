//! Per-candidate feature scores.

use crate::error::{Error, Result};
use crate::generation::encode_single;
use crate::providers::{Embedder, LexiconKind, MaskedLm, Nli, Providers, WordScores};
use crate::text::{self, Span};
use crate::types::{locate_target, Candidate, Feature, FeatureScores, Instance, RunConfig};

/// Probabilities below this are clamped before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    pub candidate: Candidate,
    pub scores: FeatureScores,
}

pub fn score_b(candidate: &Candidate) -> f64 {
    candidate.gen_prob
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextLoss {
    pub loss: f64,
    /// Number of context words evaluated; 0 means the loss defaulted to 0.
    pub positions: usize,
}

impl ContextLoss {
    pub fn is_degenerate(&self) -> bool {
        self.positions == 0
    }
}

/// Sentence with the target replaced by `surface`, plus the span `surface` occupies.
pub fn substitute(instance: &Instance, surface: &str) -> Result<(String, Span)> {
    let span = locate_target(instance)?;
    let out = text::replace_span(instance.sentence(), span, surface);
    Ok((
        out,
        Span::new(span.start, span.start + surface.chars().count()),
    ))
}

/// Mean masked-LM loss of the words within `m` positions of the substituted
/// candidate.
///
/// Each context word is masked in turn (with the candidate in place) and
/// contributes `-ln p(word)`. Positions are counted over word tokens;
/// punctuation is skipped. With no context words the loss is 0.
pub fn score_l(
    instance: &Instance,
    candidate: &Candidate,
    lm: &dyn MaskedLm,
    m: usize,
) -> Result<ContextLoss> {
    let (sentence, cand_span) = substitute(instance, &candidate.surface)?;
    let words: Vec<_> = text::tokenize(&sentence)
        .into_iter()
        .filter(|t| t.is_word)
        .collect();
    let center = words
        .iter()
        .position(|t| t.span.start <= cand_span.start && cand_span.start < t.span.end)
        .ok_or_else(|| Error::TargetNotFound {
            word: candidate.surface.clone(),
        })?;

    let lo = center.saturating_sub(m);
    let hi = (center + m).min(words.len() - 1);
    let mut total = 0.0;
    let mut positions = 0;
    for (i, tok) in words.iter().enumerate().take(hi + 1).skip(lo) {
        if i == center {
            continue;
        }
        let encoding = encode_single(&sentence, tok.span);
        let p = lm.target_probs(&encoding, &[tok.text.to_string()])?[0];
        total += -p.max(PROB_FLOOR).ln();
        positions += 1;
    }
    let loss = if positions == 0 {
        0.0
    } else {
        total / positions as f64
    };
    Ok(ContextLoss { loss, positions })
}

/// Cosine similarity; 0 when either vector is all zeros.
pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (dot / (nu * nv)).clamp(-1.0, 1.0)
}

pub fn score_sim(target_word: &str, candidate: &Candidate, emb: &dyn Embedder) -> Result<f64> {
    let u = emb.embed(target_word)?;
    let v = emb.embed(&candidate.surface)?;
    Ok(cosine(&u, &v))
}

pub fn score_lexicon(candidate: &Candidate, lexicon: &dyn WordScores) -> Option<f64> {
    lexicon.lookup(&candidate.surface)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equivalence {
    /// En(S, S')
    pub forward: f64,
    /// En(S', S)
    pub backward: f64,
}

impl Equivalence {
    pub fn value(&self) -> f64 {
        self.forward * self.backward
    }
}

/// Mutual entailment between the original sentence and the sentence with the
/// candidate substituted.
pub fn equivalence_score(
    instance: &Instance,
    candidate: &Candidate,
    nli: &dyn Nli,
) -> Result<Equivalence> {
    let (substituted, _) = substitute(instance, &candidate.surface)?;
    let forward = nli.entail_prob(instance.sentence(), &substituted)?;
    let backward = nli.entail_prob(&substituted, instance.sentence())?;
    for p in [forward, backward] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProviderFailure(format!(
                "entailment probability {p} outside [0, 1]"
            )));
        }
    }
    Ok(Equivalence { forward, backward })
}

fn lexicon_for(
    providers: &Providers,
    feature: Feature,
    kind: LexiconKind,
) -> Result<&dyn WordScores> {
    providers
        .lexicon(kind)
        .map(|l| l.as_ref())
        .ok_or_else(|| Error::MissingFeature(feature.name().to_string()))
}

/// Compute every feature `config` needs for each candidate.
pub fn score_candidates(
    instance: &Instance,
    candidates: &[Candidate],
    providers: &Providers,
    config: &RunConfig,
) -> Result<Vec<ScoredCandidate>> {
    let features = config.required_features();
    candidates
        .iter()
        .map(|c| {
            let mut s = FeatureScores::default();
            for &f in &features {
                match f {
                    Feature::B => s.b_prob = Some(score_b(c)),
                    Feature::L => {
                        let cl =
                            score_l(instance, c, providers.lm.as_ref(), config.context_window_m)?;
                        s.l_loss = Some(cl.loss);
                        s.l_degenerate = cl.is_degenerate();
                    }
                    Feature::Sim => {
                        s.sim = Some(score_sim(
                            instance.complex_word(),
                            c,
                            providers.embedder.as_ref(),
                        )?)
                    }
                    Feature::Freq => {
                        s.freq = score_lexicon(c, lexicon_for(providers, f, LexiconKind::Freq)?)
                    }
                    Feature::WpCrowd => {
                        s.wp_crowd =
                            score_lexicon(c, lexicon_for(providers, f, LexiconKind::WpCrowd)?)
                    }
                    Feature::WpCorp => {
                        s.wp_corp =
                            score_lexicon(c, lexicon_for(providers, f, LexiconKind::WpCorp)?)
                    }
                    Feature::Eq => {
                        s.eq = Some(equivalence_score(instance, c, providers.nli.as_ref())?.value())
                    }
                }
            }
            Ok(ScoredCandidate {
                candidate: c.clone(),
                scores: s,
            })
        })
        .collect()
}
