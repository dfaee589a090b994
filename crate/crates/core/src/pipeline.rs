//! Generation, scoring and ranking glued together per instance and per dataset.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use log::{info, warn};

use crate::error::{Error, Result};
use crate::generation::{build_masked_pair, generate_candidates};
use crate::par;
use crate::providers::remote::{Endpoint, RemoteClient};
use crate::providers::stub::StubLexicon;
use crate::providers::vectors::VectorTable;
use crate::providers::{Embedder, Lexicon, LexiconKind, Providers, WordScores};
use crate::ranking::{rank_candidates, RankedOutput};
use crate::scoring::score_candidates;
use crate::types::{Instance, RunConfig};

/// Environment variable consulted for the remote endpoint when no flag or
/// config key names one.
pub const ENDPOINT_ENV: &str = "LEXSIMP_ENDPOINT";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ProviderKind {
    #[default]
    Stub,
    Remote,
}

impl FromStr for ProviderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stub" => Ok(ProviderKind::Stub),
            "remote" => Ok(ProviderKind::Remote),
            _ => Err(Error::InvalidInput(format!(
                "unknown provider kind {s:?} (expected stub or remote)"
            ))),
        }
    }
}

impl fmt::Display for ProviderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProviderKind::Stub => "stub",
            ProviderKind::Remote => "remote",
        })
    }
}

/// Where each resource comes from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProviderSettings {
    pub kind: Option<ProviderKind>,
    pub endpoint: Option<String>,
    pub lexicons: BTreeMap<LexiconKind, PathBuf>,
    /// `.vec` file replacing the provider's embedder.
    pub embeddings: Option<PathBuf>,
    pub max_sequence_length: Option<usize>,
}

impl ProviderSettings {
    /// Build the providers. With stubs, lexicons without a file fall back to
    /// hash lexicons; with a remote backend they stay absent.
    pub fn build(&self) -> Result<Providers> {
        let kind = self.kind.unwrap_or_default();
        let mut providers = match kind {
            ProviderKind::Stub => Providers::stub(),
            ProviderKind::Remote => {
                let endpoint = match &self.endpoint {
                    Some(e) => e.clone(),
                    None => std::env::var(ENDPOINT_ENV).map_err(|_| {
                        Error::config(
                            "endpoint",
                            format!("remote providers need --endpoint or {ENDPOINT_ENV}"),
                        )
                    })?,
                };
                let endpoint = Endpoint::parse(&endpoint)?;
                let mut client = RemoteClient::connect(&endpoint)?;
                if let Some(n) = self.max_sequence_length {
                    client = client.with_max_sequence_length(n);
                }
                let client = Arc::new(client);
                Providers {
                    lm: client.clone(),
                    nli: client.clone(),
                    embedder: client,
                    freq: None,
                    wp_crowd: None,
                    wp_corp: None,
                }
            }
        };
        if let Some(path) = &self.embeddings {
            let table: Arc<dyn Embedder> = Arc::new(VectorTable::load(path)?);
            providers.embedder = table;
        }
        for kind in [LexiconKind::Freq, LexiconKind::WpCrowd, LexiconKind::WpCorp] {
            let lex: Option<Arc<dyn WordScores>> = match self.lexicons.get(&kind) {
                Some(path) => Some(Arc::new(Lexicon::load(kind.name(), path)?)),
                None if kind_is_stub(self) => Some(Arc::new(StubLexicon::new(kind))),
                None => None,
            };
            match kind {
                LexiconKind::Freq => providers.freq = lex,
                LexiconKind::WpCrowd => providers.wp_crowd = lex,
                LexiconKind::WpCorp => providers.wp_corp = lex,
            }
        }
        Ok(providers)
    }
}

fn kind_is_stub(s: &ProviderSettings) -> bool {
    s.kind.unwrap_or_default() == ProviderKind::Stub
}

/// Ranked substitutes for one instance.
pub fn simplify_instance(
    instance: &Instance,
    providers: &Providers,
    config: &RunConfig,
) -> Result<RankedOutput> {
    let pair = build_masked_pair(instance)?;
    let candidates =
        generate_candidates(&pair, instance, providers.lm.as_ref(), config.k_generate)?;
    let scored = score_candidates(instance, &candidates, providers, config)?;
    rank_candidates(&scored, config)
}

/// Run [`simplify_instance`] over every instance, on up to `jobs` threads
/// (`0` = all cores). Providers that cannot take concurrent calls force a
/// single job. Output order matches input order; on failure the error of the
/// earliest failing instance is returned. An instance whose candidates are all
/// filtered out yields an empty output and a warning.
pub fn simplify_dataset(
    instances: &[Instance],
    providers: &Providers,
    config: &RunConfig,
    jobs: usize,
) -> Result<Vec<RankedOutput>> {
    config.validate()?;
    let jobs = if providers.concurrent() { jobs } else { 1 };
    let n = instances.len();
    let done = AtomicUsize::new(0);
    par::map_ordered(instances, jobs, |inst| {
        let out = match simplify_instance(inst, providers, config) {
            Err(Error::EmptyCandidateSet { word }) => {
                warn!("no candidates survived filtering for {word:?}");
                Ok(RankedOutput::default())
            }
            other => other,
        };
        let i = done.fetch_add(1, Ordering::Relaxed) + 1;
        info!("[{i}/{n}] {}", inst.complex_word());
        out
    })
    .into_iter()
    .collect()
}
