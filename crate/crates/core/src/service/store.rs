//! Append-only label log and the consensus derived from it.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Judgement {
    Hope,
    NotHope,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    #[serde(rename = "poolId")]
    pub pool_id: String,
    pub label: Judgement,
    pub annotator: String,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Consensus {
    Hope,
    NotHope,
    Unresolved,
}

/// Label log with an in-memory view of the latest label per annotator.
///
/// Records are appended to the file before they become visible.
#[derive(Debug)]
pub struct LabelStore {
    path: Option<PathBuf>,
    file: Option<File>,
    records: Vec<AnnotationRecord>,
    /// poolId -> annotator -> latest judgement
    latest: BTreeMap<String, BTreeMap<String, Judgement>>,
}

impl LabelStore {
    pub fn in_memory() -> Self {
        LabelStore {
            path: None,
            file: None,
            records: Vec::new(),
            latest: BTreeMap::new(),
        }
    }

    /// Opens (or creates) the log at `path` and replays it.
    ///
    /// A torn final line, as left by a crash mid-write, is ignored.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut store = LabelStore::in_memory();
        if path.exists() {
            let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
            let lines: Vec<String> = BufReader::new(file)
                .lines()
                .collect::<std::io::Result<_>>()
                .map_err(|e| Error::io(&path, e))?;
            let last = lines.len();
            for (i, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<AnnotationRecord>(line) {
                    Ok(r) => store.apply(r),
                    Err(e) if i + 1 == last => {
                        log::warn!("ignoring torn final record in {}: {e}", path.display());
                    }
                    Err(e) => return Err(Error::parse(i + 1, e.to_string())),
                }
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        store.file = Some(file);
        store.path = Some(path);
        Ok(store)
    }

    fn apply(&mut self, r: AnnotationRecord) {
        self.latest
            .entry(r.pool_id.clone())
            .or_default()
            .insert(r.annotator.clone(), r.label);
        self.records.push(r);
    }

    pub fn append(&mut self, records: Vec<AnnotationRecord>) -> Result<usize> {
        if let Some(file) = self.file.as_mut() {
            let path = self.path.as_deref().unwrap_or(Path::new(""));
            let mut buf = Vec::new();
            for r in &records {
                serde_json::to_writer(&mut buf, r)?;
                buf.push(b'\n');
            }
            file.write_all(&buf).map_err(|e| Error::io(path, e))?;
            file.sync_data().map_err(|e| Error::io(path, e))?;
        }
        let n = records.len();
        for r in records {
            self.apply(r);
        }
        Ok(n)
    }

    pub fn records(&self) -> &[AnnotationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_labeled_by(&self, pool_id: &str, annotator: &str) -> bool {
        self.latest
            .get(pool_id)
            .is_some_and(|m| m.contains_key(annotator))
    }

    pub fn latest_for(&self, pool_id: &str) -> Option<&BTreeMap<String, Judgement>> {
        self.latest.get(pool_id)
    }

    /// Majority of the latest hope / not_hope judgements; skips abstain.
    pub fn consensus(&self, pool_id: &str) -> Consensus {
        self.latest
            .get(pool_id)
            .map_or(Consensus::Unresolved, |m| majority(m.values().copied()))
    }

    pub fn consensus_map(&self) -> HashMap<String, Consensus> {
        self.latest
            .iter()
            .map(|(id, m)| (id.clone(), majority(m.values().copied())))
            .collect()
    }

    /// Items rated hope / not_hope by the largest number of annotators
    /// (at least two), as a Fleiss rating table.
    pub fn rating_table(&self) -> Vec<Vec<u32>> {
        let counts: Vec<[u32; 2]> = self
            .latest
            .values()
            .map(|m| {
                let mut c = [0u32; 2];
                for j in m.values() {
                    match j {
                        Judgement::Hope => c[0] += 1,
                        Judgement::NotHope => c[1] += 1,
                        Judgement::Skip => {}
                    }
                }
                c
            })
            .collect();
        let raters = counts.iter().map(|c| c[0] + c[1]).max().unwrap_or(0);
        if raters < 2 {
            return Vec::new();
        }
        counts
            .into_iter()
            .filter(|c| c[0] + c[1] == raters)
            .map(|c| c.to_vec())
            .collect()
    }
}

pub fn majority(judgements: impl IntoIterator<Item = Judgement>) -> Consensus {
    let (mut hope, mut not) = (0usize, 0usize);
    for j in judgements {
        match j {
            Judgement::Hope => hope += 1,
            Judgement::NotHope => not += 1,
            Judgement::Skip => {}
        }
    }
    match hope.cmp(&not) {
        std::cmp::Ordering::Greater => Consensus::Hope,
        std::cmp::Ordering::Less => Consensus::NotHope,
        std::cmp::Ordering::Equal => Consensus::Unresolved,
    }
}
