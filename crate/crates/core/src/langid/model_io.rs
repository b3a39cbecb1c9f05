//! Cluster model text file:
//!
//! ```text
//! k 2
//! dim 100
//! epsilon 0.1
//! 2 100
//! c0 0.12 ...
//! c1 -0.3 ...
//! label 0 en
//! label 1 h_e
//! ```
//!
//! The centroid block reuses the embedding text format; `label` lines are
//! absent for a model that has not been anchored.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{ClusterModel, LabelMap, LanguageLabel};
use crate::error::{Error, Result};

impl ClusterModel {
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k {}", self.k())?;
        writeln!(w, "dim {}", self.dim())?;
        writeln!(w, "epsilon {}", self.epsilon)?;
        crate::embedding::write_vectors(
            &mut w,
            self.dim(),
            self.k(),
            self.centroids
                .iter()
                .enumerate()
                .map(|(i, c)| (format!("c{i}"), c)),
        )?;
        if let Some(map) = self.label_map {
            writeln!(w, "label {} en", map.en)?;
            writeln!(w, "label {} h_e", map.hindi)?;
        }
        w.flush()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file))
    }

    pub fn read_from(reader: impl BufRead) -> Result<Self> {
        let lines: Vec<String> = reader
            .lines()
            .collect::<std::io::Result<_>>()
            .map_err(|e| Error::parse(0, e.to_string()))?;
        let field = |i: usize, name: &str| -> Result<&str> {
            let line = lines
                .get(i)
                .ok_or_else(|| Error::parse(i + 1, format!("missing {name} line")))?;
            line.strip_prefix(name)
                .and_then(|r| r.strip_prefix(' '))
                .ok_or_else(|| Error::parse(i + 1, format!("expected \"{name} <value>\"")))
        };
        let num = |i: usize, s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::parse(i + 1, format!("bad integer {s:?}")))
        };
        let k = num(0, field(0, "k")?)?;
        let dim = num(1, field(1, "dim")?)?;
        let epsilon: f64 = field(2, "epsilon")?
            .parse()
            .map_err(|_| Error::parse(3, "bad epsilon"))?;
        let header = format!("{k} {dim}");
        if lines.get(3).map(String::as_str) != Some(header.as_str()) {
            return Err(Error::parse(4, format!("expected centroid header {header:?}")));
        }
        let mut centroids = Vec::with_capacity(k);
        for i in 0..k {
            let lineno = 5 + i;
            let line = lines
                .get(4 + i)
                .ok_or_else(|| Error::parse(lineno, "missing centroid row"))?;
            let (_, v) = crate::embedding::parse_row(line, dim, lineno)?;
            centroids.push(v);
        }
        let mut en = None;
        let mut hindi = None;
        for (i, line) in lines.iter().enumerate().skip(4 + k) {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(' ').collect();
            if parts.len() != 3 || parts[0] != "label" {
                return Err(Error::parse(i + 1, format!("unexpected line {line:?}")));
            }
            let idx = num(i, parts[1])?;
            match parts[2].parse::<LanguageLabel>() {
                Ok(LanguageLabel::En) => en = Some(idx),
                Ok(LanguageLabel::HindiEn) => hindi = Some(idx),
                _ => return Err(Error::parse(i + 1, format!("bad label {:?}", parts[2]))),
            }
        }
        let model = ClusterModel::new(centroids, epsilon)?;
        match (en, hindi) {
            (Some(en), Some(hindi)) => model.with_label_map(LabelMap { en, hindi }),
            (None, None) => Ok(model),
            _ => Err(Error::parse(lines.len(), "label map must name both en and h_e")),
        }
    }
}
