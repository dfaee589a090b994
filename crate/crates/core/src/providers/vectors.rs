//! Word vectors in the fastText text format (`.vec`): an optional `count dim`
//! header line, then `word v1 v2 ... vd` per line.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::read_lines;
use crate::text;

use super::Embedder;

#[derive(Debug, Clone)]
pub struct VectorTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl VectorTable {
    pub fn from_entries<I, S>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: AsRef<str>,
    {
        let mut vectors = HashMap::new();
        for (word, v) in entries {
            if v.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "vector for {:?} has {} components, expected {dim}",
                    word.as_ref(),
                    v.len()
                )));
            }
            vectors.entry(text::normalize(word.as_ref())).or_insert(v);
        }
        Ok(VectorTable { dim, vectors })
    }

    /// Load a `.vec` file. Keys are lowercased; the first vector seen for a
    /// lowercased key wins (fastText files list frequent forms first).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut dim = None;
        let mut vectors = HashMap::new();
        for (lineno, line) in read_lines(path)? {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if lineno == 1 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok())
            {
                dim = fields[1].parse().ok();
                continue;
            }
            let values = fields[1..]
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
            let d = *dim.get_or_insert(values.len());
            if values.len() != d {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("expected {d} components, found {}", values.len()),
                ));
            }
            vectors.entry(text::normalize(fields[0])).or_insert(values);
        }
        let dim = dim.ok_or_else(|| Error::parse(path, 1, "no vectors found"))?;
        Ok(VectorTable { dim, vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl Embedder for VectorTable {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, word: &str) -> Result<Vec<f64>> {
        Ok(self
            .vectors
            .get(&text::normalize(word))
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.dim]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn load_vec_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "3 2\nBig 1 0\nbig 5 5\nlarge 0.5 0.5\n").unwrap();
        let t = VectorTable::load(f.path()).unwrap();
        assert_eq!(t.dim(), 2);
        assert_eq!(t.len(), 2);
        assert_eq!(t.embed("big").unwrap(), vec![1.0, 0.0]);
        assert_eq!(t.embed("unknownword").unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn headerless_and_ragged() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "a 1 2 3\nb 1 2\n").unwrap();
        let err = VectorTable::load(f.path()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
