//! Comment corpora: normalization, tokenization and line-delimited record I/O.
//!
//! A record file holds one JSON object per line with the fields `id`, `text`
//! and an optional `subset` tag (`en`, `h_e` or `unknown`). A tab-separated
//! variant (`id<TAB>text[<TAB>subset]`) is also accepted by [`ingest`].

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:https?://|www\.)\S*").expect("valid url pattern"));

/// Source sub-corpus tag of a comment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subset {
    #[serde(rename = "en")]
    En,
    #[serde(rename = "h_e")]
    HindiEn,
    #[serde(rename = "unknown")]
    #[default]
    Unknown,
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subset::En => "en",
            Subset::HindiEn => "h_e",
            Subset::Unknown => "unknown",
        })
    }
}

impl FromStr for Subset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "en" => Ok(Subset::En),
            "h_e" | "he" => Ok(Subset::HindiEn),
            "unknown" | "" => Ok(Subset::Unknown),
            other => Err(Error::InvalidParameter(format!("unknown subset {other:?}"))),
        }
    }
}

/// A lowercase surface token without whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Token(String);

impl Token {
    /// Builds a token from an already-normalized word. Returns `None` for
    /// empty strings or strings containing whitespace.
    pub fn new(surface: impl Into<String>) -> Option<Self> {
        let surface = surface.into();
        if surface.is_empty() || surface.chars().any(char::is_whitespace) {
            None
        } else {
            Some(Token(surface))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Lowercases, drops URLs, emoji and punctuation, and collapses whitespace.
pub fn normalize(text: &str) -> String {
    let without_urls = URL.replace_all(text, " ");
    let mut out = String::with_capacity(without_urls.len());
    let mut pending_space = false;
    for ch in without_urls.chars() {
        if ch.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.extend(ch.to_lowercase().filter(|c| c.is_alphanumeric()));
        } else if matches!(ch, '\'' | '\u{2019}' | '\u{02bc}') {
            // in-word apostrophes are dropped without splitting the word
        } else {
            pending_space = true;
        }
    }
    out
}

/// Splits normalized text on spaces.
pub fn tokenize(text: &str) -> Vec<Token> {
    text.split_whitespace()
        .filter_map(|w| Token::new(w.to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comment {
    pub id: String,
    pub text: String,
    pub tokens: Vec<Token>,
    pub subset: Subset,
}

impl Comment {
    pub fn new(id: impl Into<String>, text: impl Into<String>, subset: Subset) -> Self {
        let text = text.into();
        let tokens = tokenize(&normalize(&text));
        Comment {
            id: id.into(),
            text,
            tokens,
            subset,
        }
    }

    /// Builds a comment from pre-tokenized words, keeping `text` as the joined
    /// token string.
    pub fn from_tokens(id: impl Into<String>, tokens: Vec<Token>, subset: Subset) -> Self {
        let text = tokens
            .iter()
            .map(Token::as_str)
            .collect::<Vec<_>>()
            .join(" ");
        Comment {
            id: id.into(),
            text,
            tokens,
            subset,
        }
    }

    /// Token count `n`.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Comments whose text normalizes to nothing are retained but flagged.
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// An immutable collection of comments with unique ids.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    name: String,
    comments: Vec<Comment>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, comments: Vec<Comment>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(comments.len());
        for (i, c) in comments.iter().enumerate() {
            if by_id.insert(c.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(c.id.clone()));
            }
        }
        Ok(Corpus {
            name: name.into(),
            comments,
            by_id,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn comments(&self) -> &[Comment] {
        &self.comments
    }

    pub fn len(&self) -> usize {
        self.comments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comments.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Comment> {
        self.by_id.get(id).map(|&i| &self.comments[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Comment> {
        self.comments.iter()
    }

    /// A new corpus holding the comments accepted by `keep`, in order.
    pub fn filter(&self, name: impl Into<String>, mut keep: impl FnMut(&Comment) -> bool) -> Self {
        let comments: Vec<Comment> = self.comments.iter().filter(|c| keep(c)).cloned().collect();
        Corpus::new(name, comments).expect("subset of a corpus has unique ids")
    }

    /// Comments tagged with `subset`.
    pub fn subset(&self, subset: Subset) -> Self {
        let name = match subset {
            Subset::En => "D_en",
            Subset::HindiEn => "D_he",
            Subset::Unknown => "D_unknown",
        };
        self.filter(name, |c| c.subset == subset)
    }

    /// Writes the corpus in the line-delimited JSON record format.
    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for c in &self.comments {
            let rec = Record {
                id: c.id.clone(),
                text: c.text.clone(),
                subset: Some(c.subset),
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Writes `{id, tokens, empty}` records, one per comment.
    pub fn write_tokens(&self, path: impl AsRef<Path>) -> Result<()> {
        #[derive(Serialize)]
        struct TokenRecord<'a> {
            id: &'a str,
            tokens: &'a [Token],
            empty: bool,
        }
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for c in &self.comments {
            let rec = TokenRecord {
                id: &c.id,
                tokens: &c.tokens,
                empty: c.is_empty(),
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Comment;
    type IntoIter = std::slice::Iter<'a, Comment>;

    fn into_iter(self) -> Self::IntoIter {
        self.comments.iter()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Record {
    id: String,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    subset: Option<Subset>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecordFormat {
    #[default]
    Jsonl,
    Tsv,
}

impl FromStr for RecordFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" | "json" => Ok(RecordFormat::Jsonl),
            "tsv" => Ok(RecordFormat::Tsv),
            other => Err(Error::InvalidParameter(format!("unknown record format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

/// Result of [`ingest`]: the corpus plus per-record diagnostics.
#[derive(Debug)]
pub struct Ingested {
    pub corpus: Corpus,
    pub malformed: Vec<RecordError>,
    /// Ids of comments with no tokens after normalization.
    pub empty: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    pub format: RecordFormat,
    /// Tag applied to records that carry no subset of their own.
    pub default_subset: Option<Subset>,
}

/// Reads a line-delimited record file. Malformed lines are reported and
/// skipped; a duplicate id aborts ingestion.
pub fn ingest(path: impl AsRef<Path>, options: IngestOptions) -> Result<Ingested> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_records(BufReader::new(file), name, options)
}

pub fn read_records(reader: impl BufRead, name: String, options: IngestOptions) -> Result<Ingested> {
    let mut comments = Vec::new();
    let mut malformed = Vec::new();
    let mut seen = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(&name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = match parse_record(&line, options.format) {
            Ok(r) => r,
            Err(message) => {
                malformed.push(RecordError {
                    line: lineno,
                    message,
                });
                continue;
            }
        };
        if seen.insert(record.id.clone(), lineno).is_some() {
            return Err(Error::DuplicateId(record.id));
        }
        let subset = record
            .subset
            .or(options.default_subset)
            .unwrap_or_default();
        comments.push(Comment::new(record.id, record.text, subset));
    }
    let empty = comments
        .iter()
        .filter(|c| c.is_empty())
        .map(|c| c.id.clone())
        .collect();
    Ok(Ingested {
        corpus: Corpus::new(name, comments)?,
        malformed,
        empty,
    })
}

fn parse_record(line: &str, format: RecordFormat) -> std::result::Result<Record, String> {
    let record = match format {
        RecordFormat::Jsonl => serde_json::from_str::<Record>(line).map_err(|e| e.to_string())?,
        RecordFormat::Tsv => {
            let mut fields = line.split('\t');
            let id = fields.next().unwrap_or_default().to_string();
            let text = fields
                .next()
                .ok_or_else(|| "missing text field".to_string())?
                .to_string();
            let subset = match fields.next() {
                Some(s) => Some(s.parse::<Subset>().map_err(|e| e.to_string())?),
                None => None,
            };
            Record { id, text, subset }
        }
    };
    if record.id.is_empty() {
        return Err("empty id".into());
    }
    Ok(record)
}
