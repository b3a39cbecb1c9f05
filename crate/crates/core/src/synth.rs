//! Seeded generator for bilingual code-mixed corpora with known ground truth.
//!
//! Two disjoint base vocabularies (English-like and Romanized-Hindi-like
//! pseudo-words built from different syllable inventories, plus real
//! function words) are mixed with a shared set of neutral tokens. A rare
//! positive topic is planted through per-language topic words. Every
//! comment carries gold token labels, its kind and its topic flag.

use std::collections::{HashMap, HashSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cmi::cmi_of_labels;
use crate::corpus::{Comment, Corpus, Subset, Token};
use crate::langid::LanguageLabel;

pub const EN_FUNCTION_WORDS: [&str; 16] = [
    "the", "and", "is", "of", "to", "in", "that", "it", "for", "you", "we", "are", "this", "was",
    "with", "not",
];
pub const HINDI_FUNCTION_WORDS: [&str; 16] = [
    "hai", "nahi", "ka", "ki", "ke", "mein", "ko", "se", "aur", "bhi", "hum", "tum", "kya", "yeh",
    "woh", "tha",
];
pub const NEUTRAL_WORDS: [&str; 20] = [
    "pakistan", "army", "media", "modi", "pak", "pakistani", "kashmir", "pilot", "attack", "video",
    "news", "khan", "jai", "2", "hind", "imran", "muslim", "sir", "1", "india",
];
pub const EN_TOPIC_WORDS: [&str; 15] = [
    "peace", "humanity", "love", "brotherhood", "friendship", "harmony", "unity", "ceasefire",
    "dialogue", "together", "respect", "kindness", "hope", "forgive", "neighbors",
];
pub const HINDI_TOPIC_WORDS: [&str; 15] = [
    "aman", "amun", "amaan", "shanti", "mohabbat", "pyaar", "bhaichara", "dosti", "sukoon", "ekta",
    "insaniyat", "dua", "milkar", "bhai", "khuda",
];

const EN_ONSETS: [&str; 22] = [
    "b", "c", "d", "f", "g", "h", "l", "m", "n", "p", "r", "s", "t", "w", "st", "tr", "br", "gr",
    "pl", "th", "sh", "wh",
];
const EN_VOWELS: [&str; 9] = ["a", "e", "i", "o", "u", "ea", "ou", "ee", "oo"];
const EN_CODAS: [&str; 12] = ["", "n", "t", "r", "s", "ng", "nd", "st", "ck", "ll", "rt", "ght"];
const HI_ONSETS: [&str; 24] = [
    "k", "kh", "g", "gh", "ch", "j", "jh", "t", "th", "d", "dh", "n", "p", "ph", "b", "bh", "m",
    "y", "r", "l", "v", "sh", "s", "h",
];
const HI_VOWELS: [&str; 10] = ["a", "aa", "i", "ee", "u", "oo", "e", "ai", "o", "au"];
const HI_CODAS: [&str; 5] = ["", "n", "m", "r", "h"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    /// Share of comments written in two languages.
    pub mixed_fraction: f64,
    /// Topic rate of monolingual comments.
    pub positive_rate: f64,
    /// Topic rate of mixed comments.
    pub mixed_positive_rate: f64,
    /// Content words per language.
    pub vocab_size: usize,
    /// Per-position probability of inserting a neutral token.
    pub neutral_rate: f64,
    /// Share of language tokens drawn from the topic words in a positive comment.
    pub topic_rate: f64,
    /// Share of language tokens drawn from function words.
    pub function_rate: f64,
    /// Inclusive range of non-neutral token counts.
    pub length: (usize, usize),
    /// Range of true CMI for mixed comments.
    pub mixed_cmi: (f64, f64),
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            mixed_fraction: 0.2,
            positive_rate: 0.02,
            mixed_positive_rate: 0.02,
            vocab_size: 300,
            neutral_rate: 0.08,
            topic_rate: 0.35,
            function_rate: 0.3,
            length: (8, 20),
            mixed_cmi: (0.3, 0.5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DocKind {
    MonoEn,
    MonoHindi,
    Mixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gold {
    pub labels: Vec<LanguageLabel>,
    pub positive: bool,
    pub kind: DocKind,
}

impl Gold {
    pub fn cmi(&self) -> f64 {
        cmi_of_labels(&self.labels)
    }
}

/// A generated corpus with gold annotations aligned to its comments.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: Corpus,
    gold: HashMap<String, Gold>,
}

impl SynthCorpus {
    pub fn new(name: &str, items: Vec<(Comment, Gold)>) -> Self {
        let mut gold = HashMap::with_capacity(items.len());
        let mut comments = Vec::with_capacity(items.len());
        for (c, g) in items {
            gold.insert(c.id.clone(), g);
            comments.push(c);
        }
        SynthCorpus {
            corpus: Corpus::new(name, comments).expect("generated ids are unique"),
            gold,
        }
    }

    pub fn gold(&self, id: &str) -> Option<&Gold> {
        self.gold.get(id)
    }

    /// Topic flags keyed by comment id.
    pub fn positives(&self) -> HashMap<String, bool> {
        self.gold
            .iter()
            .map(|(id, g)| (id.clone(), g.positive))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.corpus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corpus.is_empty()
    }

    /// Concatenates corpora; ids must be disjoint.
    pub fn merge(name: &str, parts: Vec<SynthCorpus>) -> Self {
        let mut items = Vec::new();
        for mut p in parts {
            for c in p.corpus.comments() {
                let g = p.gold.remove(&c.id).expect("gold for every comment");
                items.push((c.clone(), g));
            }
        }
        SynthCorpus::new(name, items)
    }
}

struct Lexicon {
    function: Vec<String>,
    content: Vec<String>,
    topic: Vec<String>,
    zipf: WeightedIndex<f64>,
}

impl Lexicon {
    fn draw(&self, rng: &mut ChaCha8Rng, topic_rate: f64, function_rate: f64) -> String {
        let r: f64 = rng.random();
        if r < topic_rate {
            self.topic[rng.random_range(0..self.topic.len())].clone()
        } else if r < topic_rate + (1.0 - topic_rate) * function_rate {
            self.function[rng.random_range(0..self.function.len())].clone()
        } else {
            self.content[self.zipf.sample(rng)].clone()
        }
    }
}

fn pseudo_words(
    rng: &mut ChaCha8Rng,
    n: usize,
    onsets: &[&str],
    vowels: &[&str],
    codas: &[&str],
    taken: &mut HashSet<String>,
) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.random_range(2..=3);
        let mut w = String::new();
        for s in 0..syllables {
            w.push_str(onsets[rng.random_range(0..onsets.len())]);
            w.push_str(vowels[rng.random_range(0..vowels.len())]);
            if s + 1 == syllables || rng.random_bool(0.3) {
                w.push_str(codas[rng.random_range(0..codas.len())]);
            }
        }
        if taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn zipf(n: usize) -> WeightedIndex<f64> {
    WeightedIndex::new((1..=n).map(|r| 1.0 / r as f64)).expect("nonempty vocabulary")
}

/// Deterministic corpus generator.
pub struct Generator {
    config: SynthConfig,
    rng: ChaCha8Rng,
    en: Lexicon,
    hindi: Lexicon,
    neutral: Vec<String>,
    neutral_zipf: WeightedIndex<f64>,
    next_id: usize,
}

impl Generator {
    pub fn new(config: SynthConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let to_vec = |ws: &[&str]| ws.iter().map(|w| w.to_string()).collect::<Vec<_>>();
        let mut taken: HashSet<String> = EN_FUNCTION_WORDS
            .iter()
            .chain(&HINDI_FUNCTION_WORDS)
            .chain(&NEUTRAL_WORDS)
            .chain(&EN_TOPIC_WORDS)
            .chain(&HINDI_TOPIC_WORDS)
            .map(|w| w.to_string())
            .collect();
        let en_content = pseudo_words(
            &mut rng,
            config.vocab_size,
            &EN_ONSETS,
            &EN_VOWELS,
            &EN_CODAS,
            &mut taken,
        );
        let hi_content = pseudo_words(
            &mut rng,
            config.vocab_size,
            &HI_ONSETS,
            &HI_VOWELS,
            &HI_CODAS,
            &mut taken,
        );
        Generator {
            en: Lexicon {
                function: to_vec(&EN_FUNCTION_WORDS),
                zipf: zipf(en_content.len()),
                content: en_content,
                topic: to_vec(&EN_TOPIC_WORDS),
            },
            hindi: Lexicon {
                function: to_vec(&HINDI_FUNCTION_WORDS),
                zipf: zipf(hi_content.len()),
                content: hi_content,
                topic: to_vec(&HINDI_TOPIC_WORDS),
            },
            neutral: to_vec(&NEUTRAL_WORDS),
            neutral_zipf: zipf(NEUTRAL_WORDS.len()),
            config,
            rng,
            next_id: 0,
        }
    }

    pub fn config(&self) -> &SynthConfig {
        &self.config
    }

    /// Content vocabulary of one language (for building test fixtures).
    pub fn content_words(&self, label: LanguageLabel) -> &[String] {
        match label {
            LanguageLabel::En => &self.en.content,
            LanguageLabel::HindiEn => &self.hindi.content,
            LanguageLabel::Neutral => &self.neutral,
        }
    }

    fn fresh_id(&mut self, prefix: &str) -> String {
        self.next_id += 1;
        format!("{prefix}{:06}", self.next_id)
    }

    fn lexicon(&self, label: LanguageLabel) -> &Lexicon {
        match label {
            LanguageLabel::En => &self.en,
            LanguageLabel::HindiEn => &self.hindi,
            LanguageLabel::Neutral => unreachable!("neutral has no lexicon"),
        }
    }

    fn language_tokens(&mut self, label: LanguageLabel, n: usize, positive: bool) -> Vec<String> {
        let topic = if positive { self.config.topic_rate } else { 0.0 };
        let function = self.config.function_rate;
        let mut rng = self.rng.clone();
        let lex = self.lexicon(label);
        let out = (0..n).map(|_| lex.draw(&mut rng, topic, function)).collect();
        self.rng = rng;
        out
    }

    /// Interleaves neutral tokens into a labeled run.
    fn with_neutrals(&mut self, run: Vec<(String, LanguageLabel)>) -> Vec<(String, LanguageLabel)> {
        let mut out = Vec::with_capacity(run.len() + 4);
        for item in run {
            if self.rng.random_bool(self.config.neutral_rate) {
                let w = self.neutral[self.neutral_zipf.sample(&mut self.rng)].clone();
                out.push((w, LanguageLabel::Neutral));
            }
            out.push(item);
        }
        out
    }

    fn build(&mut self, id: String, tokens: Vec<(String, LanguageLabel)>, subset: Subset, positive: bool, kind: DocKind) -> (Comment, Gold) {
        let (words, labels): (Vec<String>, Vec<LanguageLabel>) = tokens.into_iter().unzip();
        let tokens = words
            .into_iter()
            .map(|w| Token::new(w).expect("generated words have no whitespace"))
            .collect();
        (
            Comment::from_tokens(id, tokens, subset),
            Gold {
                labels,
                positive,
                kind,
            },
        )
    }

    fn draw_length(&mut self) -> usize {
        let (lo, hi) = self.config.length;
        self.rng.random_range(lo..=hi.max(lo))
    }

    /// A monolingual comment.
    pub fn monolingual(&mut self, label: LanguageLabel, positive: bool) -> (Comment, Gold) {
        let n = self.draw_length();
        let words = self.language_tokens(label, n, positive);
        let run = words.into_iter().map(|w| (w, label)).collect();
        let tokens = self.with_neutrals(run);
        let (subset, kind, prefix) = match label {
            LanguageLabel::En => (Subset::En, DocKind::MonoEn, "en"),
            _ => (Subset::HindiEn, DocKind::MonoHindi, "he"),
        };
        let id = self.fresh_id(prefix);
        self.build(id, tokens, subset, positive, kind)
    }

    /// A mixed comment with exact per-language token counts, laid out as
    /// contiguous language runs, with `neutral` neutral tokens inserted at
    /// random positions.
    pub fn mixed_with_counts(&mut self, en: usize, hindi: usize, neutral: usize, positive: bool) -> (Comment, Gold) {
        let en_words = self.language_tokens(LanguageLabel::En, en, positive);
        let hi_words = self.language_tokens(LanguageLabel::HindiEn, hindi, positive);
        let en_run: Vec<_> = en_words.into_iter().map(|w| (w, LanguageLabel::En)).collect();
        let hi_run: Vec<_> = hi_words
            .into_iter()
            .map(|w| (w, LanguageLabel::HindiEn))
            .collect();
        let (major, minor) = if en >= hindi { (en_run, hi_run) } else { (hi_run, en_run) };
        let mut tokens = Vec::with_capacity(en + hindi + neutral);
        if !minor.is_empty() && major.len() >= 2 && self.rng.random_bool(0.5) {
            // major, minor, major
            let split = self.rng.random_range(1..major.len());
            tokens.extend_from_slice(&major[..split]);
            tokens.extend(minor);
            tokens.extend_from_slice(&major[split..]);
        } else if self.rng.random_bool(0.5) {
            tokens.extend(major);
            tokens.extend(minor);
        } else {
            tokens.extend(minor);
            tokens.extend(major);
        }
        for _ in 0..neutral {
            let at = self.rng.random_range(0..=tokens.len());
            let w = self.neutral[self.neutral_zipf.sample(&mut self.rng)].clone();
            tokens.insert(at, (w, LanguageLabel::Neutral));
        }
        let subset = if en > hindi || (en == hindi && self.rng.random_bool(0.5)) {
            Subset::En
        } else {
            Subset::HindiEn
        };
        let id = self.fresh_id("mx");
        let kind = if en > 0 && hindi > 0 {
            DocKind::Mixed
        } else if en > 0 {
            DocKind::MonoEn
        } else {
            DocKind::MonoHindi
        };
        self.build(id, tokens, subset, positive, kind)
    }

    /// A mixed comment whose true CMI lies in the configured range.
    pub fn mixed(&mut self, positive: bool) -> (Comment, Gold) {
        let n = self.draw_length().max(2);
        let (lo, hi) = self.config.mixed_cmi;
        let target = self.rng.random_range(lo..=hi);
        let minor = ((target * n as f64).round() as usize).clamp(1, n / 2);
        let (en, hindi) = if self.rng.random_bool(0.5) {
            (n - minor, minor)
        } else {
            (minor, n - minor)
        };
        let neutral = (0..n)
            .filter(|_| self.rng.random_bool(self.config.neutral_rate))
            .count();
        self.mixed_with_counts(en, hindi, neutral, positive)
    }

    /// A corpus of `n` comments following the configured mixture.
    pub fn corpus(&mut self, name: &str, n: usize) -> SynthCorpus {
        let mut items = Vec::with_capacity(n);
        for _ in 0..n {
            let item = if self.rng.random_bool(self.config.mixed_fraction) {
                let positive = self.rng.random_bool(self.config.mixed_positive_rate);
                self.mixed(positive)
            } else {
                let positive = self.rng.random_bool(self.config.positive_rate);
                let label = if self.rng.random_bool(0.5) {
                    LanguageLabel::En
                } else {
                    LanguageLabel::HindiEn
                };
                self.monolingual(label, positive)
            };
            items.push(item);
        }
        SynthCorpus::new(name, items)
    }

    /// English-only labeled training comments for the topic classifier.
    pub fn english_training_set(&mut self, n: usize, positive_rate: f64) -> SynthCorpus {
        let items = (0..n)
            .map(|_| {
                let positive = self.rng.random_bool(positive_rate);
                self.monolingual(LanguageLabel::En, positive)
            })
            .collect();
        SynthCorpus::new("D_hope_train", items)
    }
}
