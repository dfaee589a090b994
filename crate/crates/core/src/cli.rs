//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 provider error.
//! Results go to standard output (or the `--out` file); diagnostics and
//! progress go to standard error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::eval::{evaluate, metric_correlation_report};
use crate::io::{
    format_predictions, parse_results_table, read_config, read_dataset, read_predictions,
    read_results_table, ConfigFile,
};
use crate::pipeline::{simplify_dataset, ProviderKind};
use crate::providers::remote::serve_tcp;
use crate::providers::{Lexicon, Providers, WordScores};
use crate::ranking::select_features;
use crate::types::{Instance, RunId};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_PROVIDER: i32 = 3;

/// Official TSAR-2022 English results, 33 systems by 7 metrics.
pub const BUNDLED_RESULTS_TABLE: &str = include_str!("../data/tsar2022_en_results.tsv");

const DEFAULT_KS: &str = "1,3,5,10";
const DEFAULT_TOP1_KS: &str = "1,2,3";

#[derive(Debug, Parser)]
#[command(
    name = "lexsimp",
    version,
    about = "Lexical simplification and TSAR-style evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate ranked substitutes for every instance of a dataset.
    Simplify(SimplifyArgs),
    /// Score a prediction file against gold annotations.
    Evaluate(EvaluateArgs),
    /// Rank lexicons by how well they reproduce gold substitute frequencies.
    SelectFeatures(SelectFeaturesArgs),
    /// Pearson correlations between the metric columns of a results table.
    CorrelateMetrics(CorrelateArgs),
    /// Serve the stub providers over the remote protocol.
    ServeStub(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SimplifyArgs {
    /// Dataset of `sentence<TAB>word` lines (extra columns are ignored).
    #[arg(long)]
    pub test: PathBuf,
    /// lsbert, mantis1, mantis2 or mantis3.
    #[arg(long)]
    pub run: RunId,
    /// Prediction file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// `key=value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model backend; overrides the config file. Defaults to stub.
    #[arg(long)]
    pub providers: Option<ProviderKind>,
    /// Remote endpoint (`tcp://host:port` or `exec:command args`).
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Gold file: `sentence<TAB>word<TAB>substitute...`.
    #[arg(long)]
    pub gold: PathBuf,
    /// Prediction file aligned line by line with the gold file.
    #[arg(long)]
    pub pred: PathBuf,
    /// Cut-offs for ACC@1, MAP@K and Potential@K [default: 1,3,5,10].
    #[arg(long)]
    pub k: Option<String>,
    /// Cut-offs for ACC@K@top1. Defaults to 1,2,3 unless --k is given, in
    /// which case top1 accuracy is only reported when asked for.
    #[arg(long)]
    pub top1_k: Option<String>,
    /// Print an aligned table instead of TSV.
    #[arg(long)]
    pub table: bool,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct SelectFeaturesArgs {
    /// Gold-annotated trial dataset.
    #[arg(long)]
    pub trial: PathBuf,
    /// Directory of `<feature>.tsv` word score files.
    #[arg(long)]
    pub scores: PathBuf,
    /// Number of features to keep.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub top: u64,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Results table with a header line; defaults to the bundled TSAR-2022 table.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:7878")]
    pub listen: String,
}

/// Map an error to its exit code.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_provider_error() {
        EXIT_PROVIDER
    } else {
        EXIT_DATA
    }
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                if !text.contains("Usage:") {
                    let _ = writeln!(err, "\n{}", Cli::command().render_usage());
                }
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}\n\n{}", Cli::command().render_usage());
            EXIT_USAGE
        }
        Err(CliError::Run(e)) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(e.into())
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> std::result::Result<(), CliError> {
    match cmd {
        Command::Simplify(a) => cmd_simplify(&a)?,
        Command::Evaluate(a) => {
            let ks = parse_k_list("--k", a.k.as_deref().unwrap_or(DEFAULT_KS))?;
            let top1 = match (&a.top1_k, &a.k) {
                (Some(t), _) => parse_k_list("--top1-k", t)?,
                (None, None) => parse_k_list("--top1-k", DEFAULT_TOP1_KS)?,
                (None, Some(_)) => Vec::new(),
            };
            if ks.is_empty() && top1.is_empty() {
                return Err(CliError::Usage("no cut-offs requested".into()));
            }
            let report = cmd_evaluate(&a.gold, &a.pred, &ks, &top1, a.jobs)?;
            let text = if a.table {
                report.to_table()
            } else {
                report.to_tsv()
            };
            out.write_all(text.as_bytes())?;
        }
        Command::SelectFeatures(a) => {
            let text = cmd_select_features(&a.trial, &a.scores, a.top as usize)?;
            out.write_all(text.as_bytes())?;
        }
        Command::CorrelateMetrics(a) => {
            let text = cmd_correlate_metrics(a.table.as_deref())?;
            out.write_all(text.as_bytes())?;
        }
        Command::ServeStub(a) => {
            let listener = TcpListener::bind(&a.listen)?;
            writeln!(out, "listening on {}", listener.local_addr()?)?;
            out.flush()?;
            serve_tcp(listener, Providers::stub())?;
        }
    }
    Ok(())
}

fn parse_k_list(flag: &str, s: &str) -> std::result::Result<Vec<usize>, CliError> {
    let mut ks = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.parse::<usize>() {
            Ok(k) if k > 0 && !ks.contains(&k) => ks.push(k),
            Ok(k) if k > 0 => {}
            _ => {
                return Err(CliError::Usage(format!(
                    "{flag}: expected comma-separated positive integers, got {part:?}"
                )))
            }
        }
    }
    Ok(ks)
}

/// Run the pipeline over `args.test` and write predictions to `args.out`.
/// The output file only appears once every instance has succeeded.
pub fn cmd_simplify(args: &SimplifyArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => read_config(p)?,
        None => ConfigFile::default(),
    };
    if let Some(kind) = args.providers {
        cfg.providers.kind = Some(kind);
    }
    if let Some(e) = &args.endpoint {
        cfg.providers.endpoint = Some(e.clone());
    }
    let run = cfg.run_config(Some(args.run))?;
    let dataset = read_dataset(&args.test, false)?;
    let providers = cfg.providers.build()?;
    let instances: Vec<Instance> = dataset.instances().cloned().collect();
    log::info!(
        "{}: {} instances, run {}",
        dataset.path.display(),
        instances.len(),
        run.run_id
    );
    let outputs = simplify_dataset(&instances, &providers, &run, args.jobs)?;
    let refs: Vec<&Instance> = instances.iter().collect();
    write_atomically(&args.out, format_predictions(&refs, &outputs)?.as_bytes())
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".partial");
    let tmp = path.with_file_name(tmp_name);
    let result = fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(bytes).and_then(|_| f.sync_all()))
        .and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// Score a prediction file against a gold file. Both must list the same
/// (sentence, word) pairs in the same order.
pub fn cmd_evaluate(
    gold: &Path,
    pred: &Path,
    ks: &[usize],
    top1_ks: &[usize],
    jobs: usize,
) -> Result<crate::eval::MetricReport> {
    let gold = read_dataset(gold, true)?;
    let preds = read_predictions(pred)?;
    for (i, (g, p)) in gold.entries.iter().zip(&preds).enumerate() {
        if g.instance.sentence() != p.sentence || g.instance.complex_word() != p.word {
            return Err(Error::Misaligned {
                line: p.line,
                msg: format!(
                    "prediction {} is for {:?} but gold line {} is for {:?}",
                    i + 1,
                    p.word,
                    g.line,
                    g.instance.complex_word()
                ),
            });
        }
    }
    if gold.len() != preds.len() {
        let line = preds
            .get(gold.len())
            .map_or(preds.last().map_or(1, |p| p.line + 1), |p| p.line);
        return Err(Error::Misaligned {
            line,
            msg: format!(
                "{} gold instances but {} predictions",
                gold.len(),
                preds.len()
            ),
        });
    }
    let golds: Vec<_> = gold.entries.into_iter().filter_map(|e| e.gold).collect();
    let lists: Vec<Vec<String>> = preds.into_iter().map(|p| p.candidates).collect();
    evaluate(&golds, &lists, ks, top1_ks, jobs)
}

/// Rank every `<feature>.tsv` file in `scores_dir` against the trial gold.
pub fn cmd_select_features(trial: &Path, scores_dir: &Path, top: usize) -> Result<String> {
    let data = read_dataset(trial, true)?;
    let trial: Vec<_> = data
        .entries
        .into_iter()
        .map(|e| (e.instance, e.gold.expect("gold requested")))
        .collect();
    let mut files: Vec<PathBuf> = fs::read_dir(scores_dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.extension().is_some_and(|x| x == "tsv"));
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no .tsv score files in {}",
            scores_dir.display()
        )));
    }
    let lexicons: Vec<Lexicon> = files
        .iter()
        .map(|p| {
            let name = p
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned();
            Lexicon::load(name, p)
        })
        .collect::<Result<_>>()?;
    let features: Vec<(&str, &dyn WordScores)> = lexicons
        .iter()
        .map(|l| (l.name(), l as &dyn WordScores))
        .collect();
    let ranked = select_features(&trial, &features, top)?;
    let mut out = String::new();
    for f in ranked {
        out.push_str(&format!(
            "{}\t{:.4}\t{}\n",
            f.feature, f.mean_rho, f.instances
        ));
    }
    Ok(out)
}

pub fn cmd_correlate_metrics(table: Option<&Path>) -> Result<String> {
    let table = match table {
        Some(p) => read_results_table(p)?,
        None => parse_results_table(
            BUNDLED_RESULTS_TABLE,
            Path::new("<bundled tsar2022_en_results.tsv>"),
        )?,
    };
    Ok(metric_correlation_report(&table)?.render())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("lexsimp").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn usage_errors() {
        let (code, _, err) =
            run_args(&["simplify", "--test", "x", "--run", "mantis9", "--out", "y"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("Usage"), "{err}");
        assert_eq!(run_args(&[]).0, EXIT_USAGE);
        assert_eq!(
            run_args(&[
                "select-features",
                "--trial",
                "a",
                "--scores",
                "b",
                "--top",
                "0"
            ])
            .0,
            EXIT_USAGE
        );
        assert_eq!(
            run_args(&["evaluate", "--gold", "a", "--pred", "b", "--k", "0"]).0,
            EXIT_USAGE
        );
        assert_eq!(run_args(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn k_lists() {
        assert_eq!(parse_k_list("--k", "1, 3,10").ok(), Some(vec![1, 3, 10]));
        assert_eq!(parse_k_list("--k", "").ok(), Some(vec![]));
        assert_eq!(parse_k_list("--k", "3,3").ok(), Some(vec![3]));
        assert!(parse_k_list("--k", "a").is_err());
    }

    #[test]
    fn bundled_table_correlation() {
        let text = cmd_correlate_metrics(None).unwrap();
        assert!(text.contains("mean_r\t0.92"), "{text}");
    }

    #[test]
    fn missing_input_is_a_data_error() {
        let (code, _, err) = run_args(&[
            "evaluate",
            "--gold",
            "/nonexistent/g",
            "--pred",
            "/nonexistent/p",
        ]);
        assert_eq!(code, EXIT_DATA);
        assert!(err.starts_with("error:"));
    }
}
