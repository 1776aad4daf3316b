use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};

use super::LoadError;

/// Ordered merge rules. A pair's index is its rank; lower ranks apply first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeTable {
    pairs: Vec<(String, String)>,
    ranks: HashMap<(String, String), usize>,
}

impl MergeTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<Self, LoadError>
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        let mut table = Self::new();
        for (i, (left, right)) in pairs.into_iter().enumerate() {
            table.push(left.into(), right.into(), i + 1)?;
        }
        Ok(table)
    }

    fn push(&mut self, left: String, right: String, line: usize) -> Result<(), LoadError> {
        let key = (left, right);
        if self.ranks.contains_key(&key) {
            return Err(LoadError::DuplicateMerge {
                line,
                left: key.0,
                right: key.1,
            });
        }
        self.ranks.insert(key.clone(), self.pairs.len());
        self.pairs.push(key);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn rank(&self, left: &str, right: &str) -> Option<usize> {
        self.ranks.get(&(left.to_owned(), right.to_owned())).copied()
    }

    pub fn get(&self, rank: usize) -> Option<(&str, &str)> {
        self.pairs.get(rank).map(|(l, r)| (l.as_str(), r.as_str()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(l, r)| (l.as_str(), r.as_str()))
    }

    /// Write in `merges.txt` layout with a `#version: 0.2` header.
    pub fn write_txt<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "#version: 0.2")?;
        for (left, right) in &self.pairs {
            writeln!(out, "{left} {right}")?;
        }
        Ok(())
    }
}

/// Parse a `merges.txt` stream. An optional first line starting with
/// `#version:` is skipped, as are blank lines.
pub fn load_merges<R: Read>(source: R) -> Result<MergeTable, LoadError> {
    let mut table = MergeTable::new();
    for (i, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let lineno = i + 1;
        if (i == 0 && line.starts_with("#version:")) || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(' ').collect();
        if fields.len() != 2 || fields.iter().any(|f| f.is_empty()) {
            return Err(LoadError::MergeLine {
                line: lineno,
                fields: fields.iter().filter(|f| !f.is_empty()).count(),
            });
        }
        table.push(fields[0].to_owned(), fields[1].to_owned(), lineno)?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_follow_line_order() {
        let table = load_merges("a y\npl ay\n".as_bytes()).unwrap();
        assert_eq!(table.rank("a", "y"), Some(0));
        assert_eq!(table.rank("pl", "ay"), Some(1));
        assert_eq!(table.get(1), Some(("pl", "ay")));
    }

    #[test]
    fn version_header_is_skipped() {
        let table = load_merges("#version: 0.2\na b\n".as_bytes()).unwrap();
        assert_eq!(table.len(), 1);
        assert_eq!(table.rank("a", "b"), Some(0));
    }

    #[test]
    fn wrong_field_count_is_parse_error() {
        let err = load_merges("a b\nabc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, LoadError::MergeLine { line: 2, fields: 1 }));
        let err = load_merges("a b c\n".as_bytes()).unwrap_err();
        assert!(matches!(err, LoadError::MergeLine { line: 1, fields: 3 }));
    }

    #[test]
    fn duplicate_pair_is_integrity_error() {
        let err = load_merges("#version: 0.2\na b\na b\n".as_bytes()).unwrap_err();
        assert!(matches!(err, LoadError::DuplicateMerge { line: 3, .. }));
    }

    #[test]
    fn writer_roundtrips() {
        let table = MergeTable::from_pairs([("Ġ", "t"), ("h", "e")]).unwrap();
        let mut buf = Vec::new();
        table.write_txt(&mut buf).unwrap();
        assert_eq!(load_merges(buf.as_slice()).unwrap(), table);
    }
}
