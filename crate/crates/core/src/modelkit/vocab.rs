use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tokenize::words;
use crate::error::{Error, Result};
use crate::lexicon::IndicatorClass;
use crate::miner::TrainingExample;

pub const UNK: u32 = 0;
pub const EOS: u32 = 1;
pub const MASK: u32 = 2;
pub const RESERVED: [&str; 3] = ["<unk>", "</s>", "[MASK]"];

const VOCAB_SCHEMA: &str = "logigan/vocab";

/// Dense token <-> id map with reserved UNK/EOS/MASK ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
    min_frequency: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    schema: String,
    unk: u32,
    eos: u32,
    mask: u32,
    min_frequency: u32,
    size: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    token: String,
    id: u32,
}

impl Vocabulary {
    /// Builds from token streams. Tokens seen fewer than `min_frequency`
    /// times map to UNK; ids are assigned by descending count, then token.
    pub fn build<I, S>(streams: I, min_frequency: u32) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut counts: HashMap<String, u32> = HashMap::new();
        for text in streams {
            for w in words(text.as_ref()) {
                *counts.entry(w).or_default() += 1;
            }
        }
        let mut kept: Vec<(String, u32)> = counts
            .into_iter()
            .filter(|(t, n)| *n >= min_frequency.max(1) && !RESERVED.contains(&t.as_str()))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let tokens = RESERVED
            .iter()
            .map(|s| s.to_string())
            .chain(kept.into_iter().map(|(t, _)| t))
            .collect();
        Self::from_tokens(tokens, min_frequency)
    }

    /// Vocabulary covering every token of the given examples.
    pub fn from_examples<'a>(
        examples: impl IntoIterator<Item = &'a TrainingExample>,
        min_frequency: u32,
    ) -> Self {
        Self::build(examples.into_iter().map(|e| e.render_passage()), min_frequency)
    }

    fn from_tokens(tokens: Vec<String>, min_frequency: u32) -> Self {
        let ids = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self {
            tokens,
            ids,
            min_frequency,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_frequency(&self) -> u32 {
        self.min_frequency
    }

    pub fn id(&self, token: &str) -> u32 {
        self.ids.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: u32) -> &str {
        self.tokens.get(id as usize).map_or(RESERVED[0], String::as_str)
    }

    /// Lowercases, splits and maps to ids; no EOS is appended.
    pub fn tokenize(&self, text: &str) -> Vec<u32> {
        words(text).iter().map(|w| self.id(w)).collect()
    }

    /// Statement ids terminated by EOS.
    pub fn statement(&self, text: &str) -> Vec<u32> {
        let mut ids = self.tokenize(text);
        ids.push(EOS);
        ids
    }

    /// Words of an id sequence, dropping EOS.
    pub fn decode(&self, ids: &[u32]) -> Vec<String> {
        ids.iter()
            .filter(|&&i| i != EOS)
            .map(|&i| self.token(i).to_string())
            .collect()
    }

    /// Context ids with `[MASK]` standing in for the statement.
    pub fn context(&self, e: &TrainingExample) -> Context {
        let mut ids = Vec::new();
        for s in &e.context_pre {
            ids.extend(self.tokenize(s));
        }
        ids.extend(self.tokenize(&e.masked_prefix));
        ids.push(MASK);
        ids.extend(self.tokenize(&e.masked_suffix));
        for s in &e.context_post {
            ids.extend(self.tokenize(s));
        }
        Context {
            ids,
            class: e.indicator_class,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path)
            .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        let mut w = BufWriter::new(f);
        let header = Header {
            schema: VOCAB_SCHEMA.into(),
            unk: UNK,
            eos: EOS,
            mask: MASK,
            min_frequency: self.min_frequency,
            size: self.tokens.len(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for (id, token) in self.tokens.iter().enumerate() {
            let entry = Entry {
                token: token.clone(),
                id: id as u32,
            };
            serde_json::to_writer(&mut w, &entry)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path)
            .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = BufReader::new(f).lines();
        let first = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing header".into()))??;
        let header: Header =
            serde_json::from_str(&first).map_err(|e| parse_err(1, e.to_string()))?;
        if header.schema != VOCAB_SCHEMA
            || (header.unk, header.eos, header.mask) != (UNK, EOS, MASK)
        {
            return Err(parse_err(1, "unsupported vocabulary header".into()));
        }
        let mut tokens = Vec::with_capacity(header.size);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: Entry =
                serde_json::from_str(&line).map_err(|e| parse_err(i + 2, e.to_string()))?;
            if entry.id as usize != tokens.len() {
                return Err(parse_err(i + 2, format!("expected id {}", tokens.len())));
            }
            tokens.push(entry.token);
        }
        if tokens.len() != header.size || tokens[..3] != RESERVED.map(String::from) {
            return Err(parse_err(1, "vocabulary size or reserved tokens mismatch".into()));
        }
        Ok(Self::from_tokens(tokens, header.min_frequency))
    }
}

/// Token ids of a context plus the indicator class it was mined with.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Context {
    pub ids: Vec<u32>,
    pub class: Option<IndicatorClass>,
}

impl Context {
    pub fn new(ids: Vec<u32>) -> Self {
        Self { ids, class: None }
    }

    /// Distinct ids, ascending.
    pub fn bag(&self) -> Vec<u32> {
        let mut b = self.ids.clone();
        b.sort_unstable();
        b.dedup();
        b
    }
}
