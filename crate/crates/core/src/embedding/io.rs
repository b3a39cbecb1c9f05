//! Text vector format: a `vocabCount dim` header line followed by one
//! `token c1 .. c_dim` row per entry. Components are written in shortest
//! round-trip decimal form. Subword vectors, when present, live in a
//! companion file with the same layout at `<path>.subwords`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{EmbeddingTable, Vector};
use crate::error::{Error, Result};

impl EmbeddingTable {
    /// Loads a table and, if present, its subword companion file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let (dim, entries) = read_vectors_file(path)?;
        let table = EmbeddingTable::new(dim, entries).map_err(|e| match e {
            Error::Empty(_) => Error::parse(1, "vocabulary is empty"),
            other => other,
        })?;
        let companion = subword_path(path);
        if companion.exists() {
            let (sub_dim, subwords) = read_vectors_file(&companion)?;
            if sub_dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: sub_dim,
                });
            }
            return table.with_subwords(subwords);
        }
        Ok(table)
    }

    /// Writes the table (and its subword companion when subwords exist).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        write_vectors_file(path, self.dim(), self.len(), self.entries())?;
        if self.subword_count() > 0 {
            write_vectors_file(
                &subword_path(path),
                self.dim(),
                self.subword_count(),
                self.subword_entries(),
            )?;
        }
        Ok(())
    }
}

pub fn subword_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".subwords");
    PathBuf::from(s)
}

pub(crate) fn write_vectors<'a, W: Write, K: AsRef<str>>(
    mut w: W,
    dim: usize,
    count: usize,
    rows: impl Iterator<Item = (K, &'a Vector)>,
) -> std::io::Result<()> {
    writeln!(w, "{count} {dim}")?;
    for (key, v) in rows {
        write_row(&mut w, key.as_ref(), v)?;
    }
    w.flush()
}

pub(crate) fn write_row<W: Write>(w: &mut W, key: &str, v: &Vector) -> std::io::Result<()> {
    w.write_all(key.as_bytes())?;
    for x in v.iter() {
        write!(w, " {x}")?;
    }
    w.write_all(b"\n")
}

fn write_vectors_file<'a>(
    path: &Path,
    dim: usize,
    count: usize,
    rows: impl Iterator<Item = (&'a str, &'a Vector)>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_vectors(BufWriter::new(file), dim, count, rows).map_err(|e| Error::io(path, e))
}

fn read_vectors_file(path: &Path) -> Result<(usize, Vec<(String, Vector)>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_vectors(BufReader::new(file))
}

/// Parses the text vector format. Line numbers in errors are 1-based.
pub fn read_vectors(reader: impl BufRead) -> Result<(usize, Vec<(String, Vector)>)> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::parse(1, e.to_string()))?,
        None => return Err(Error::parse(1, "missing header")),
    };
    let (count, dim) = parse_header(&header).ok_or_else(|| {
        Error::parse(1, format!("expected \"vocabCount dim\", found {header:?}"))
    })?;
    let mut entries = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        entries.push(parse_row(&line, dim, lineno)?);
    }
    if entries.len() != count {
        return Err(Error::parse(
            entries.len() + 2,
            format!("header declares {count} rows, found {}", entries.len()),
        ));
    }
    Ok((dim, entries))
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut parts = line.split(' ');
    let count = parts.next()?.parse().ok()?;
    let dim: usize = parts.next()?.parse().ok()?;
    if parts.next().is_some() || dim == 0 {
        return None;
    }
    Some((count, dim))
}

pub(crate) fn parse_row(line: &str, dim: usize, lineno: usize) -> Result<(String, Vector)> {
    let mut parts = line.split(' ');
    let key = parts
        .next()
        .filter(|k| !k.is_empty())
        .ok_or_else(|| Error::parse(lineno, "missing token"))?;
    let mut components = Vec::with_capacity(dim);
    for p in parts {
        let x: f32 = p
            .parse()
            .map_err(|_| Error::parse(lineno, format!("non-numeric component {p:?}")))?;
        if !x.is_finite() {
            return Err(Error::parse(lineno, format!("non-finite component {p:?}")));
        }
        components.push(x);
    }
    if components.len() != dim {
        return Err(Error::parse(
            lineno,
            format!("expected {dim} components, found {}", components.len()),
        ));
    }
    Ok((key.to_string(), Vector::new(components)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_valid_file() {
        let (dim, entries) = read_vectors("2 3\nhai 1 2 3\nthe -0.5 0 1e-3\n".as_bytes()).unwrap();
        assert_eq!(dim, 3);
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[1].1.as_slice(), &[-0.5, 0.0, 0.001]);
    }

    #[test]
    fn short_row_reports_its_line() {
        let err = read_vectors("2 3\nhai 1 2 3\nthe 1 2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn non_numeric_component() {
        let err = read_vectors("1 2\nhai 1 x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn empty_file_has_no_header() {
        let err = read_vectors("".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn header_row_count_mismatch() {
        assert!(read_vectors("3 1\na 1\nb 2\n".as_bytes()).is_err());
    }

    #[test]
    fn writes_bit_exact_rows() {
        let v = Vector::new(vec![0.1, -2.0, 1.5e-7]);
        let mut out = Vec::new();
        write_vectors(&mut out, 3, 1, std::iter::once(("aman", &v))).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "1 3\naman 0.1 -2 0.00000015\n");
    }

    #[test]
    fn save_load_roundtrip_with_subwords() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vec.txt");
        let table = EmbeddingTable::new(
            2,
            vec![
                ("aman".into(), Vector::new(vec![0.25, 1.0 / 3.0])),
                ("war".into(), Vector::new(vec![-1.0, 7.125])),
            ],
        )
        .unwrap()
        .with_subwords(vec![("<am".into(), Vector::new(vec![0.1, 0.2]))])
        .unwrap();
        table.save(&path).unwrap();
        assert!(subword_path(&path).exists());
        let loaded = EmbeddingTable::load(&path).unwrap();
        assert_eq!(loaded, table);
    }
}
