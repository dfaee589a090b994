//! Domain types shared across the pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::text::{self, Span};

/// One sentence with the complex word to simplify.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    sentence: String,
    complex_word: String,
    word_char_offset: Option<usize>,
}

impl Instance {
    pub fn new(sentence: impl Into<String>, complex_word: impl Into<String>) -> Result<Self> {
        Self::build(sentence.into(), complex_word.into(), None)
    }

    pub fn with_offset(
        sentence: impl Into<String>,
        complex_word: impl Into<String>,
        offset: usize,
    ) -> Result<Self> {
        Self::build(sentence.into(), complex_word.into(), Some(offset))
    }

    fn build(sentence: String, complex_word: String, offset: Option<usize>) -> Result<Self> {
        if sentence.is_empty() {
            return Err(Error::InvalidInstance("empty sentence".into()));
        }
        if sentence.contains(['\t', '\n', '\r']) {
            return Err(Error::InvalidInstance(
                "sentence contains a tab or line break".into(),
            ));
        }
        if complex_word.is_empty() || complex_word.chars().any(char::is_whitespace) {
            return Err(Error::InvalidInstance(format!(
                "complex word {complex_word:?} is empty or contains whitespace"
            )));
        }
        if let Some(start) = offset {
            let span = Span::new(start, start + complex_word.chars().count());
            if span.end > sentence.chars().count()
                || !text::eq_ignore_case(span.slice(&sentence), &complex_word)
            {
                return Err(Error::InvalidInstance(format!(
                    "offset {start} does not point at {complex_word:?}"
                )));
            }
        }
        Ok(Instance {
            sentence,
            complex_word,
            word_char_offset: offset,
        })
    }

    pub fn sentence(&self) -> &str {
        &self.sentence
    }

    pub fn complex_word(&self) -> &str {
        &self.complex_word
    }

    pub fn word_char_offset(&self) -> Option<usize> {
        self.word_char_offset
    }
}

/// Span of the target occurrence: the explicit offset when present, else the
/// first whole-token case-insensitive match.
pub fn locate_target(instance: &Instance) -> Result<Span> {
    match instance.word_char_offset {
        Some(start) => Ok(Span::new(
            start,
            start + instance.complex_word.chars().count(),
        )),
        None => text::find_token(&instance.sentence, &instance.complex_word).ok_or_else(|| {
            Error::TargetNotFound {
                word: instance.complex_word.clone(),
            }
        }),
    }
}

/// Gold substitutes for one instance. Duplicates are significant: the most
/// frequently suggested tokens form the `top1` set.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GoldAnnotations {
    suggestions: Vec<String>,
    freq: BTreeMap<String, usize>,
    top1: BTreeSet<String>,
}

impl GoldAnnotations {
    pub fn suggestions(&self) -> &[String] {
        &self.suggestions
    }

    /// Lowercased token → number of annotators suggesting it.
    pub fn freq_table(&self) -> &BTreeMap<String, usize> {
        &self.freq
    }

    pub fn gold_set(&self) -> impl Iterator<Item = &str> {
        self.freq.keys().map(String::as_str)
    }

    pub fn gold_len(&self) -> usize {
        self.freq.len()
    }

    pub fn top1_set(&self) -> &BTreeSet<String> {
        &self.top1
    }

    pub fn count(&self, word: &str) -> usize {
        self.freq.get(&text::normalize(word)).copied().unwrap_or(0)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.freq.contains_key(&text::normalize(word))
    }

    pub fn is_top1(&self, word: &str) -> bool {
        self.top1.contains(&text::normalize(word))
    }
}

pub fn derive_gold<I, S>(suggestions: I) -> GoldAnnotations
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let suggestions: Vec<String> = suggestions.into_iter().map(Into::into).collect();
    let mut freq = BTreeMap::new();
    for s in &suggestions {
        *freq.entry(text::normalize(s)).or_insert(0) += 1;
    }
    let max = freq.values().copied().max().unwrap_or(0);
    let top1 = freq
        .iter()
        .filter(|&(_, &c)| c == max)
        .map(|(w, _)| w.clone())
        .collect();
    GoldAnnotations {
        suggestions,
        freq,
        top1,
    }
}

/// A substitution candidate as emitted by generation (lowercased).
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub surface: String,
    pub gen_prob: f64,
}

impl Candidate {
    pub fn new(surface: impl Into<String>, gen_prob: f64) -> Self {
        Candidate {
            surface: surface.into(),
            gen_prob,
        }
    }
}

/// Ranking features. `L` is the only lower-is-better feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Feature {
    B,
    L,
    Sim,
    Freq,
    WpCrowd,
    WpCorp,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

impl Feature {
    pub const ALL: [Feature; 7] = [
        Feature::B,
        Feature::L,
        Feature::Sim,
        Feature::Freq,
        Feature::WpCrowd,
        Feature::WpCorp,
        Feature::Eq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::B => "b",
            Feature::L => "l",
            Feature::Sim => "sim",
            Feature::Freq => "freq",
            Feature::WpCrowd => "wp_crowd",
            Feature::WpCorp => "wp_corp",
            Feature::Eq => "eq",
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            Feature::L => Direction::LowerBetter,
            _ => Direction::HigherBetter,
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown feature {s:?}")))
    }
}

/// Raw per-candidate feature values. A feature not computed for the active
/// run, or unknown to a lexicon, is `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureScores {
    pub b_prob: Option<f64>,
    pub l_loss: Option<f64>,
    /// Set when the context window was empty and `l_loss` defaulted to 0.
    pub l_degenerate: bool,
    pub sim: Option<f64>,
    pub freq: Option<f64>,
    pub wp_crowd: Option<f64>,
    pub wp_corp: Option<f64>,
    pub eq: Option<f64>,
}

impl FeatureScores {
    pub fn get(&self, feature: Feature) -> Option<f64> {
        match feature {
            Feature::B => self.b_prob,
            Feature::L => self.l_loss,
            Feature::Sim => self.sim,
            Feature::Freq => self.freq,
            Feature::WpCrowd => self.wp_crowd,
            Feature::WpCorp => self.wp_corp,
            Feature::Eq => self.eq,
        }
    }

    pub fn set(&mut self, feature: Feature, value: Option<f64>) {
        let slot = match feature {
            Feature::B => &mut self.b_prob,
            Feature::L => &mut self.l_loss,
            Feature::Sim => &mut self.sim,
            Feature::Freq => &mut self.freq,
            Feature::WpCrowd => &mut self.wp_crowd,
            Feature::WpCorp => &mut self.wp_corp,
            Feature::Eq => &mut self.eq,
        };
        *slot = value;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunId {
    Lsbert,
    Mantis1,
    Mantis2,
    Mantis3,
}

impl RunId {
    pub const ALL: [RunId; 4] = [
        RunId::Lsbert,
        RunId::Mantis1,
        RunId::Mantis2,
        RunId::Mantis3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RunId::Lsbert => "lsbert",
            RunId::Mantis1 => "mantis1",
            RunId::Mantis2 => "mantis2",
            RunId::Mantis3 => "mantis3",
        }
    }
}

impl fmt::Display for RunId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RunId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RunId::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown run {s:?}")))
    }
}

pub const DEFAULT_K_GENERATE: usize = 30;
pub const DEFAULT_K_OUTPUT: usize = 10;
pub const DEFAULT_CONTEXT_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub run_id: RunId,
    /// Integer weight per ranked feature; features absent here are not ranked.
    pub feature_weights: BTreeMap<Feature, u32>,
    pub prune_by_equivalence: bool,
    pub k_generate: usize,
    pub k_output: usize,
    pub context_window_m: usize,
}

impl RunConfig {
    pub fn preset(run_id: RunId) -> Self {
        use Feature::*;
        let (weights, prune): (&[(Feature, u32)], bool) = match run_id {
            RunId::Lsbert => (&[(B, 1), (L, 1), (Sim, 1), (Freq, 1)], false),
            RunId::Mantis1 => (&[(B, 1), (Sim, 3), (Freq, 1)], true),
            RunId::Mantis2 => (&[(WpCrowd, 1), (Eq, 1)], false),
            RunId::Mantis3 => (&[(WpCorp, 1), (Eq, 1)], false),
        };
        RunConfig {
            run_id,
            feature_weights: weights.iter().copied().collect(),
            prune_by_equivalence: prune,
            k_generate: DEFAULT_K_GENERATE,
            k_output: DEFAULT_K_OUTPUT,
            context_window_m: DEFAULT_CONTEXT_WINDOW,
        }
    }

    /// Features with a nonzero weight.
    pub fn ranked_features(&self) -> impl Iterator<Item = (Feature, u32)> + '_ {
        self.feature_weights
            .iter()
            .filter(|&(_, &w)| w > 0)
            .map(|(&f, &w)| (f, w))
    }

    /// Every feature the pipeline must compute: ranked ones plus `eq` when pruning.
    pub fn required_features(&self) -> BTreeSet<Feature> {
        let mut out: BTreeSet<Feature> = self.ranked_features().map(|(f, _)| f).collect();
        if self.prune_by_equivalence {
            out.insert(Feature::Eq);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("k_generate", self.k_generate),
            ("k_output", self.k_output),
            ("context_window_m", self.context_window_m),
        ] {
            if v == 0 {
                return Err(Error::config(key, "must be a positive integer"));
            }
        }
        if self.ranked_features().next().is_none() {
            return Err(Error::config(
                "weights",
                "at least one feature needs a nonzero weight",
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn compulsory_gold() -> Vec<&'static str> {
        let mut v = vec!["mandatory"; 11];
        v.extend(["required"; 7]);
        v.extend([
            "essential",
            "forced",
            "important",
            "manadatory",
            "necessary",
            "obligatory",
            "unavoidable",
        ]);
        v
    }

    #[test]
    fn derive_gold_trial_instance() {
        let gold = derive_gold(compulsory_gold());
        assert_eq!(gold.suggestions().len(), 25);
        assert_eq!(gold.gold_len(), 9);
        assert_eq!(gold.top1_set().iter().collect::<Vec<_>>(), ["mandatory"]);
        assert_eq!(gold.count("mandatory"), 11);
        assert_eq!(gold.count("required"), 7);
        // typo kept verbatim
        assert!(gold.contains("manadatory"));
    }

    #[test]
    fn derive_gold_empty_and_tie() {
        let empty = derive_gold(Vec::<String>::new());
        assert_eq!(empty.gold_len(), 0);
        assert!(empty.top1_set().is_empty());

        let tie = derive_gold(["a", "a", "b", "b", "c"]);
        assert_eq!(tie.top1_set().iter().collect::<Vec<_>>(), ["a", "b"]);
    }

    #[test]
    fn derive_gold_is_case_insensitive() {
        let gold = derive_gold(["Mandatory", "mandatory", "REQUIRED"]);
        assert_eq!(gold.count("MANDATORY"), 2);
        assert!(gold.is_top1("mandatory"));
        assert_eq!(gold.suggestions()[0], "Mandatory");
    }

    #[test]
    fn locate_target_examples() {
        let s = "it will be compulsory for those";
        let inst = Instance::new(s, "compulsory").unwrap();
        let span = locate_target(&inst).unwrap();
        assert_eq!(span.slice(s), "compulsory");
        assert_eq!(span, Span::new(11, 21));

        let inst = Instance::with_offset("A a a", "a", 2).unwrap();
        assert_eq!(locate_target(&inst).unwrap(), Span::new(2, 3));

        let inst = Instance::new("no match here", "absent").unwrap();
        assert!(matches!(
            locate_target(&inst),
            Err(Error::TargetNotFound { .. })
        ));
    }

    #[test]
    fn instance_invariants() {
        assert!(Instance::new("", "a").is_err());
        assert!(Instance::new("a\tb", "a").is_err());
        assert!(Instance::new("a b", "a b").is_err());
        assert!(Instance::new("a b", "").is_err());
        assert!(Instance::with_offset("A a a", "a", 1).is_err());
        assert!(Instance::with_offset("A a a", "a", 9).is_err());
        assert!(Instance::with_offset("A a a", "A", 2).is_ok());
    }

    #[test]
    fn presets_match_published_weights() {
        let m1 = RunConfig::preset(RunId::Mantis1);
        assert_eq!(
            m1.feature_weights,
            BTreeMap::from([(Feature::B, 1), (Feature::Sim, 3), (Feature::Freq, 1)])
        );
        assert!(m1.prune_by_equivalence);
        assert_eq!(m1.required_features().len(), 4);
        let lsb = RunConfig::preset(RunId::Lsbert);
        assert_eq!(lsb.feature_weights.len(), 4);
        assert!(lsb.feature_weights.values().all(|&w| w == 1));
        assert!(!lsb.prune_by_equivalence);
        for r in [RunId::Mantis2, RunId::Mantis3] {
            let c = RunConfig::preset(r);
            assert!(c.feature_weights.contains_key(&Feature::Eq));
            assert!(!c.prune_by_equivalence);
            assert_eq!((c.k_generate, c.k_output, c.context_window_m), (30, 10, 5));
        }
    }

    proptest! {
        #[test]
        fn derive_gold_permutation_invariant(
            words in prop::collection::vec(prop::sample::select(vec!["a", "B", "b", "c", "dd"]), 0..20),
            seed in any::<u64>(),
        ) {
            let mut shuffled = words.clone();
            // deterministic Fisher-Yates driven by the seed
            let mut s = seed;
            for i in (1..shuffled.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (s >> 33) as usize % (i + 1));
            }
            let a = derive_gold(words.iter().copied());
            let b = derive_gold(shuffled.iter().copied());
            prop_assert_eq!(a.freq_table(), b.freq_table());
            prop_assert_eq!(a.top1_set(), b.top1_set());
            prop_assert_eq!(a.freq_table().values().sum::<usize>(), words.len());
            let max = a.freq_table().values().max().copied().unwrap_or(0);
            for t in a.top1_set() {
                prop_assert_eq!(a.freq_table()[t], max);
            }
            prop_assert_eq!(a.top1_set().is_empty(), words.is_empty());
        }
    }
}
