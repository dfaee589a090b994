//! Dataset, prediction, configuration and results-table files.
//!
//! Every format is UTF-8, tab-separated where tabular, without quoting or a
//! header (the results table is the exception: its first line names the
//! columns). CRLF input is accepted; output always uses LF.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::warn;

use crate::error::{Error, Result};
use crate::eval::ResultsTable;
use crate::pipeline::{ProviderKind, ProviderSettings};
use crate::providers::LexiconKind;
use crate::ranking::RankedOutput;
use crate::types::{derive_gold, Feature, GoldAnnotations, Instance, RunConfig, RunId};

/// Lines of a UTF-8 file with 1-based line numbers. A leading BOM and
/// trailing `\r` are stripped.
pub fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let bytes = fs::read(path)?;
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(&bytes);
    let mut out = Vec::new();
    let mut chunks: Vec<&[u8]> = bytes.split(|&b| b == b'\n').collect();
    if chunks.last().is_some_and(|c| c.is_empty()) {
        chunks.pop();
    }
    for (i, raw) in chunks.into_iter().enumerate() {
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        let line = std::str::from_utf8(raw).map_err(|_| Error::Encoding {
            path: path.to_path_buf(),
            line: i + 1,
        })?;
        out.push((i + 1, line.to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub instance: Instance,
    pub gold: Option<GoldAnnotations>,
    /// Source line, 1-based.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub path: PathBuf,
    pub entries: Vec<DatasetEntry>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn instances(&self) -> impl Iterator<Item = &Instance> {
        self.entries.iter().map(|e| &e.instance)
    }
}

/// Read `sentence<TAB>word[<TAB>gold...]` lines.
///
/// With `expect_gold`, every line needs at least one gold column; without it,
/// extra columns are ignored so a gold file can serve as test input.
pub fn read_dataset(path: impl AsRef<Path>, expect_gold: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let mut entries = Vec::new();
    for (lineno, line) in read_lines(path)? {
        if line.trim().is_empty() {
            warn!("{}:{lineno}: skipping blank line", path.display());
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let min = if expect_gold { 3 } else { 2 };
        if fields.len() < min {
            return Err(Error::parse(
                path,
                lineno,
                format!(
                    "expected at least {min} tab-separated columns, found {}",
                    fields.len()
                ),
            ));
        }
        let instance = Instance::new(fields[0], fields[1].trim())
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        let gold = expect_gold.then(|| {
            derive_gold(
                fields[2..]
                    .iter()
                    .map(|s| s.trim())
                    .filter(|s| !s.is_empty()),
            )
        });
        if gold.as_ref().is_some_and(|g| g.gold_len() == 0) {
            return Err(Error::parse(path, lineno, "gold columns are empty"));
        }
        entries.push(DatasetEntry {
            instance,
            gold,
            line: lineno,
        });
    }
    Ok(Dataset {
        path: path.to_path_buf(),
        entries,
    })
}

/// Render predictions as `sentence<TAB>word<TAB>cand1...` lines.
pub fn format_predictions(instances: &[&Instance], outputs: &[RankedOutput]) -> Result<String> {
    if instances.len() != outputs.len() {
        return Err(Error::InvalidInput(format!(
            "{} instances but {} outputs",
            instances.len(),
            outputs.len()
        )));
    }
    let mut out = String::new();
    for (inst, o) in instances.iter().zip(outputs) {
        if o.is_empty() {
            warn!("no candidates for {:?}", inst.complex_word());
        }
        out.push_str(inst.sentence());
        out.push('\t');
        out.push_str(inst.complex_word());
        for s in o.surfaces() {
            out.push('\t');
            out.push_str(s);
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_predictions(
    dataset: &Dataset,
    outputs: &[RankedOutput],
    path: impl AsRef<Path>,
) -> Result<()> {
    let instances: Vec<&Instance> = dataset.instances().collect();
    let body = format_predictions(&instances, outputs)?;
    let mut f = fs::File::create(path)?;
    f.write_all(body.as_bytes())?;
    f.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionLine {
    pub sentence: String,
    pub word: String,
    pub candidates: Vec<String>,
    pub line: usize,
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionLine>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for (lineno, line) in read_lines(path)? {
        if line.trim().is_empty() {
            warn!("{}:{lineno}: skipping blank line", path.display());
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 {
            return Err(Error::parse(
                path,
                lineno,
                "expected sentence<TAB>word[<TAB>candidates]",
            ));
        }
        let candidates: Vec<String> = fields[2..]
            .iter()
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        crate::eval::check_predictions(&candidates)
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        out.push(PredictionLine {
            sentence: fields[0].to_string(),
            word: fields[1].trim().to_string(),
            candidates,
            line: lineno,
        });
    }
    Ok(out)
}

/// Parsed `key=value` configuration. Unset keys fall back to the run preset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub run: Option<RunId>,
    pub weights: BTreeMap<Feature, u32>,
    pub prune_by_equivalence: Option<bool>,
    pub k_generate: Option<usize>,
    pub k_output: Option<usize>,
    pub context_window_m: Option<usize>,
    pub providers: ProviderSettings,
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::config(key, format!("expected a boolean, got {v:?}"))),
    }
}

fn parse_positive(key: &str, v: &str) -> Result<usize> {
    match v.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(Error::config(
            key,
            format!("expected a positive integer, got {v:?}"),
        )),
    }
}

impl ConfigFile {
    /// Parse config text; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = ConfigFile::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(line, "expected key=value"));
            };
            let (key, value) = (key.trim(), value.trim());
            let path = || base_dir.join(value);
            match key {
                "run" => {
                    cfg.run = Some(
                        value
                            .parse()
                            .map_err(|e: Error| Error::config(key, e.to_string()))?,
                    )
                }
                "prune_by_equivalence" => cfg.prune_by_equivalence = Some(parse_bool(key, value)?),
                "k_generate" => cfg.k_generate = Some(parse_positive(key, value)?),
                "k_output" => cfg.k_output = Some(parse_positive(key, value)?),
                "context_window_m" => cfg.context_window_m = Some(parse_positive(key, value)?),
                "providers" => {
                    cfg.providers.kind = Some(
                        value
                            .parse::<ProviderKind>()
                            .map_err(|e| Error::config(key, e.to_string()))?,
                    )
                }
                "endpoint" => cfg.providers.endpoint = Some(value.to_string()),
                "embeddings" => cfg.providers.embeddings = Some(path()),
                "max_sequence_length" => {
                    cfg.providers.max_sequence_length = Some(parse_positive(key, value)?)
                }
                _ => {
                    if let Some(f) = key.strip_prefix("weights.") {
                        let feature: Feature = f
                            .parse()
                            .map_err(|e: Error| Error::config(key, e.to_string()))?;
                        let w = value.parse::<u32>().map_err(|_| {
                            Error::config(
                                key,
                                format!("expected a non-negative integer, got {value:?}"),
                            )
                        })?;
                        cfg.weights.insert(feature, w);
                    } else if let Some(l) = key.strip_prefix("lexicon.") {
                        let kind: LexiconKind = l
                            .parse()
                            .map_err(|e: Error| Error::config(key, e.to_string()))?;
                        cfg.providers.lexicons.insert(kind, path());
                    } else {
                        return Err(Error::config(key, "unknown key"));
                    }
                }
            }
        }
        Ok(cfg)
    }

    /// Resolve the run configuration. `run_override` (e.g. from the command
    /// line) beats the file's `run` key. mantis1 always prunes.
    pub fn run_config(&self, run_override: Option<RunId>) -> Result<RunConfig> {
        let run = run_override
            .or(self.run)
            .ok_or_else(|| Error::config("run", "no run selected"))?;
        let mut rc = RunConfig::preset(run);
        for (&f, &w) in &self.weights {
            if w == 0 {
                rc.feature_weights.remove(&f);
            } else {
                rc.feature_weights.insert(f, w);
            }
        }
        if let Some(p) = self.prune_by_equivalence {
            if run == RunId::Mantis1 && !p {
                warn!("mantis1 always prunes by equivalence; ignoring prune_by_equivalence=false");
            } else {
                rc.prune_by_equivalence = p;
            }
        }
        rc.k_generate = self.k_generate.unwrap_or(rc.k_generate);
        rc.k_output = self.k_output.unwrap_or(rc.k_output);
        rc.context_window_m = self.context_window_m.unwrap_or(rc.context_window_m);
        rc.validate()?;
        Ok(rc)
    }
}

pub fn read_config(path: impl AsRef<Path>) -> Result<ConfigFile> {
    let path = path.as_ref();
    let text = read_lines(path)?
        .into_iter()
        .map(|(_, l)| l + "\n")
        .collect::<String>();
    ConfigFile::parse(&text, path.parent().unwrap_or(Path::new(".")))
}

const LABEL_COLUMNS: [&str; 4] = ["rank", "team", "run", "system"];

/// Read a results table: a header line naming the columns, then one line per
/// system. Columns named `rank`, `team`, `run` or `system` are labels; every
/// other column must be numeric.
pub fn read_results_table(path: impl AsRef<Path>) -> Result<ResultsTable> {
    let path = path.as_ref();
    results_table_from_lines(path, read_lines(path)?)
}

/// [`read_results_table`] over in-memory text; `origin` labels errors.
pub fn parse_results_table(text: &str, origin: &Path) -> Result<ResultsTable> {
    let lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r').to_string()))
        .collect();
    results_table_from_lines(origin, lines)
}

fn results_table_from_lines(path: &Path, lines: Vec<(usize, String)>) -> Result<ResultsTable> {
    let mut lines = lines.into_iter().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing header line"))?;
    let header: Vec<&str> = header.split('\t').map(str::trim).collect();
    let is_label: Vec<bool> = header
        .iter()
        .map(|h| LABEL_COLUMNS.contains(&h.to_ascii_lowercase().as_str()))
        .collect();
    let metrics: Vec<String> = header
        .iter()
        .zip(&is_label)
        .filter(|(_, &l)| !l)
        .map(|(h, _)| h.to_string())
        .collect();
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != header.len() {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {} columns, found {}", header.len(), fields.len()),
            ));
        }
        let mut label = Vec::new();
        let mut row = Vec::new();
        for ((f, &l), h) in fields.iter().zip(&is_label).zip(&header) {
            if l {
                label.push(*f);
            } else {
                let v: f64 = f.parse().map_err(|_| {
                    Error::parse(path, lineno, format!("column {h}: not a number: {f:?}"))
                })?;
                row.push(v);
            }
        }
        labels.push(label.join(" "));
        rows.push(row);
    }
    Ok(ResultsTable {
        labels,
        metrics,
        rows,
    })
}
