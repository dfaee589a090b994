//! Substitution ranking: competition ranks per feature, weighted rank sums,
//! equivalence pruning and tie-free final ordering. Also hosts the
//! correlation-based feature selection used to pick word-prevalence features.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use log::warn;
use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::providers::WordScores;
use crate::scoring::ScoredCandidate;
use crate::stats;
use crate::types::{Direction, Feature, GoldAnnotations, Instance, RunConfig};

/// Competition rank of every entry: one plus the number of entries with a
/// strictly better score. Absent (or NaN) scores all share rank
/// `present + 1`.
pub fn rank_feature(scores: &[Option<f64>], direction: Direction) -> Vec<u32> {
    let goodness = |x: f64| match direction {
        Direction::HigherBetter => x,
        Direction::LowerBetter => -x,
    };
    let mut present: Vec<f64> = scores
        .iter()
        .flatten()
        .filter(|x| !x.is_nan())
        .map(|&x| goodness(x))
        .collect();
    present.sort_by(f64::total_cmp);
    let n = present.len();
    scores
        .iter()
        .map(|s| match s.filter(|x| !x.is_nan()) {
            Some(x) => {
                let g = goodness(x);
                let not_better = present.partition_point(|&y| y <= g);
                (n - not_better + 1) as u32
            }
            None => (n + 1) as u32,
        })
        .collect()
}

/// Per-feature competition ranks, indexed like the candidate list.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RankVector {
    pub ranks: BTreeMap<Feature, Vec<u32>>,
}

impl RankVector {
    pub fn build(scored: &[ScoredCandidate], features: impl IntoIterator<Item = Feature>) -> Self {
        let ranks = features
            .into_iter()
            .map(|f| {
                let raw: Vec<Option<f64>> = scored.iter().map(|s| s.scores.get(f)).collect();
                (f, rank_feature(&raw, f.direction()))
            })
            .collect();
        RankVector { ranks }
    }
}

/// Weighted rank sum per candidate; lower is better.
pub fn aggregate(rank_vector: &RankVector, config: &RunConfig) -> Result<Vec<u64>> {
    let mut totals: Option<Vec<u64>> = None;
    for (feature, weight) in config.ranked_features() {
        let ranks = rank_vector
            .ranks
            .get(&feature)
            .ok_or_else(|| Error::MissingFeature(feature.name().to_string()))?;
        let totals = totals.get_or_insert_with(|| vec![0; ranks.len()]);
        if totals.len() != ranks.len() {
            return Err(Error::InvalidInput(format!(
                "rank vector for {feature} has {} entries, expected {}",
                ranks.len(),
                totals.len()
            )));
        }
        for (t, &r) in totals.iter_mut().zip(ranks) {
            *t += u64::from(weight) * u64::from(r);
        }
    }
    totals.ok_or_else(|| Error::config("weights", "no feature has a nonzero weight"))
}

/// The shortest decimal that round-trips to `x`, as an exact rational. Scores
/// such as 0.9, 0.5 and 0.1 then average to exactly 0.5.
fn exact(x: f64) -> BigRational {
    assert!(x.is_finite(), "equivalence score must be finite");
    let s = x.to_string();
    let (int, frac) = s.split_once('.').unwrap_or((&s, ""));
    let digits: BigInt = format!("{int}{frac}").parse().expect("decimal digits");
    BigRational::new(digits, BigInt::from(10u8).pow(frac.len() as u32))
}

/// Keep-mask that drops every score strictly below the mean.
///
/// Scores are compared as exact decimals so that equal scores are never
/// pruned because of rounding. If nothing would survive, the maximum is kept.
pub fn prune_by_mean_eq(eq: &[f64]) -> Vec<bool> {
    if eq.is_empty() {
        return Vec::new();
    }
    let sum: BigRational = eq.iter().map(|&x| exact(x)).sum();
    let n = BigRational::from_integer(BigInt::from(eq.len()));
    let mean = sum / n;
    let mut keep: Vec<bool> = eq.iter().map(|&x| exact(x) >= mean).collect();
    if !keep.iter().any(|&k| k) {
        let best = (0..eq.len())
            .max_by(|&a, &b| eq[a].total_cmp(&eq[b]))
            .unwrap();
        keep[best] = true;
    }
    keep
}

/// Which key separated two adjacent entries of the final list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    TotalRank,
    GenProb,
    Lexicographic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub surface: String,
    pub total_rank: u64,
    pub gen_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedOutput {
    pub entries: Vec<RankedEntry>,
    /// `tie_breaks[i]` resolved the order of `entries[i]` and `entries[i + 1]`.
    pub tie_breaks: Vec<TieBreak>,
}

impl RankedOutput {
    pub fn surfaces(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.surface.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn compare(a: &RankedEntry, b: &RankedEntry) -> (Ordering, TieBreak) {
    match a.total_rank.cmp(&b.total_rank) {
        Ordering::Equal => {}
        o => return (o, TieBreak::TotalRank),
    }
    match b.gen_prob.total_cmp(&a.gen_prob) {
        Ordering::Equal => {}
        o => return (o, TieBreak::GenProb),
    }
    (a.surface.cmp(&b.surface), TieBreak::Lexicographic)
}

/// Sort ascending by (total rank, generation probability desc, surface),
/// drop entries whose `keep` flag is false, then truncate to `k_output`.
pub fn finalize(
    scored: &[ScoredCandidate],
    totals: &[u64],
    keep: Option<&[bool]>,
    k_output: usize,
) -> RankedOutput {
    assert_eq!(scored.len(), totals.len());
    let mut idx: Vec<usize> = (0..scored.len()).collect();
    let entry = |i: usize| RankedEntry {
        surface: scored[i].candidate.surface.clone(),
        total_rank: totals[i],
        gen_prob: scored[i].candidate.gen_prob,
    };
    let mut entries: Vec<RankedEntry> = idx.iter().map(|&i| entry(i)).collect();
    idx.sort_by(|&a, &b| compare(&entries[a], &entries[b]).0);

    let mut seen = std::collections::HashSet::new();
    entries = idx
        .into_iter()
        .filter(|&i| keep.is_none_or(|k| k[i]))
        .map(|i| entries[i].clone())
        .filter(|e| seen.insert(e.surface.clone()))
        .take(k_output)
        .collect();
    let tie_breaks = entries
        .windows(2)
        .map(|w| compare(&w[0], &w[1]).1)
        .collect();
    RankedOutput {
        entries,
        tie_breaks,
    }
}

/// Rank scored candidates end to end under `config`.
pub fn rank_candidates(scored: &[ScoredCandidate], config: &RunConfig) -> Result<RankedOutput> {
    let rv = RankVector::build(scored, config.ranked_features().map(|(f, _)| f));
    let totals = aggregate(&rv, config)?;
    let keep = if config.prune_by_equivalence {
        let eq: Vec<f64> = scored
            .iter()
            .map(|s| {
                s.scores
                    .eq
                    .ok_or_else(|| Error::MissingFeature("eq".into()))
            })
            .collect::<Result<_>>()?;
        Some(prune_by_mean_eq(&eq))
    } else {
        None
    };
    Ok(finalize(scored, &totals, keep.as_deref(), config.k_output))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCorrelation {
    pub feature: String,
    pub mean_rho: f64,
    pub instances: usize,
}

/// Rank candidate features by how well they reproduce the gold frequency
/// ordering of substitutes, and return the best `top_n`.
///
/// For each instance the gold substitutes are ranked by annotation count and
/// by the feature (higher is better, unknown words last); the two rankings are
/// compared with Spearman's rho and averaged over instances. Instances whose
/// gold counts are all equal carry no ordering and are skipped. A feature
/// that cannot separate an instance's substitutes scores 0 there.
pub fn select_features(
    trial: &[(Instance, GoldAnnotations)],
    features: &[(&str, &dyn WordScores)],
    top_n: usize,
) -> Result<Vec<FeatureCorrelation>> {
    if trial.is_empty() {
        return Err(Error::InvalidInput("trial set is empty".into()));
    }
    if top_n == 0 {
        return Err(Error::InvalidInput("top_n must be at least 1".into()));
    }
    let usable: Vec<(&Instance, Vec<(&str, f64)>)> = trial
        .iter()
        .filter_map(|(inst, gold)| {
            let items: Vec<(&str, f64)> = gold
                .freq_table()
                .iter()
                .map(|(w, &c)| (w.as_str(), c as f64))
                .collect();
            let first = items.first().map(|x| x.1);
            if items.len() < 2 || items.iter().all(|x| Some(x.1) == first) {
                warn!(
                    "skipping {:?}: gold frequencies do not define a ranking",
                    inst.complex_word()
                );
                None
            } else {
                Some((inst, items))
            }
        })
        .collect();
    if usable.is_empty() {
        return Err(Error::DegenerateRanking(
            "every trial instance has all-equal gold frequencies".into(),
        ));
    }

    let mut out: Vec<FeatureCorrelation> = features
        .iter()
        .map(|&(name, scores)| {
            let rhos: Vec<f64> = usable
                .iter()
                .map(|(_, items)| {
                    let gold: Vec<Option<f64>> = items.iter().map(|x| Some(x.1)).collect();
                    let feat: Vec<Option<f64>> = items.iter().map(|x| scores.lookup(x.0)).collect();
                    stats::spearman(&gold, &feat, Direction::HigherBetter).unwrap_or(0.0)
                })
                .collect();
            FeatureCorrelation {
                feature: name.to_string(),
                mean_rho: stats::mean(&rhos),
                instances: rhos.len(),
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.mean_rho
            .total_cmp(&a.mean_rho)
            .then_with(|| a.feature.cmp(&b.feature))
    });
    out.truncate(top_n);
    Ok(out)
}
