//! Lexical simplification with a masked language model.
//!
//! A complex word in context is masked, a masked LM proposes fillers, the
//! fillers are scored on several features, and a weighted sum of per-feature
//! ranks orders them. An optional entailment check drops candidates that
//! change the sentence's meaning. The [`eval`] module scores predictions
//! against crowd-sourced gold substitutes.
//!
//! ```
//! use lexsimp::{pipeline, Instance, Providers, RunConfig, RunId};
//!
//! let inst = Instance::new("The rule is compulsory for everyone.", "compulsory").unwrap();
//! let out = pipeline::simplify_instance(&inst, &Providers::stub(), &RunConfig::preset(RunId::Mantis1)).unwrap();
//! assert!(out.len() <= 10);
//! ```

pub mod cli;
pub mod error;
pub mod eval;
pub mod generation;
pub mod io;
pub mod par;
pub mod pipeline;
pub mod providers;
pub mod ranking;
pub mod scoring;
pub mod stats;
pub mod text;
pub mod types;

pub use error::{Error, Result};
pub use eval::{evaluate, MetricReport};
pub use providers::Providers;
pub use ranking::{RankedOutput, TieBreak};
pub use types::{Candidate, Feature, GoldAnnotations, Instance, RunConfig, RunId};
