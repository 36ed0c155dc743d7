//! Okapi BM25 inverted index over statements.
//!
//! `score(q, d) = sum_{t in q} idf(t) * tf (k1 + 1) / (tf + k1 (1 - b + b |d| / avgdl))`
//! with `idf(t) = ln((N - df + 0.5) / (df + 0.5) + 1)`; query terms are
//! counted once.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::error::{Error, Result};
use crate::modelkit::tokenize::{is_punct, render, words};

const MAGIC: &[u8; 6] = b"LGBM25";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Bm25Index {
    k1: f64,
    b: f64,
    /// Lowercased, space-joined statement text.
    statements: Vec<String>,
    lengths: Vec<u32>,
    avg_len: f64,
    postings: BTreeMap<String, Vec<(u32, u32)>>,
}

/// Index terms of a text: lowercase words without punctuation.
pub fn terms(text: &str) -> Vec<String> {
    words(text).into_iter().filter(|w| !is_punct(w)).collect()
}

fn normalize(text: &str) -> String {
    render(&words(text))
}

impl Bm25Index {
    pub fn build<S: AsRef<str>>(statements: &[S], k1: f64, b: f64) -> Result<Self> {
        if statements.is_empty() {
            return Err(Error::Invalid("cannot index an empty statement set".into()));
        }
        let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
        let mut lengths = Vec::with_capacity(statements.len());
        let mut texts = Vec::with_capacity(statements.len());
        for (id, s) in statements.iter().enumerate() {
            let t = terms(s.as_ref());
            lengths.push(t.len() as u32);
            texts.push(normalize(s.as_ref()));
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for term in t {
                *tf.entry(term).or_default() += 1;
            }
            for (term, n) in tf {
                postings.entry(term).or_default().push((id as u32, n));
            }
        }
        let avg_len = lengths.iter().map(|&l| l as f64).sum::<f64>() / lengths.len() as f64;
        Ok(Self {
            k1,
            b,
            statements: texts,
            lengths,
            avg_len,
            postings,
        })
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn avg_len(&self) -> f64 {
        self.avg_len
    }

    pub fn statement(&self, id: usize) -> &str {
        &self.statements[id]
    }

    pub fn statements(&self) -> &[String] {
        &self.statements
    }

    pub fn idf(&self, df: usize) -> f64 {
        let n = self.statements.len() as f64;
        let df = df as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    fn length_norm(&self, id: usize) -> f64 {
        if self.avg_len == 0.0 {
            1.0
        } else {
            1.0 - self.b + self.b * self.lengths[id] as f64 / self.avg_len
        }
    }

    /// Scores of every statement sharing a term with the query.
    pub fn scores(&self, query: &str) -> HashMap<usize, f64> {
        let mut q: Vec<String> = terms(query);
        q.sort();
        q.dedup();
        let mut acc: HashMap<usize, f64> = HashMap::new();
        for term in &q {
            let Some(list) = self.postings.get(term) else { continue };
            let idf = self.idf(list.len());
            for &(id, tf) in list {
                let tf = tf as f64;
                let s = idf * tf * (self.k1 + 1.0) / (tf + self.k1 * self.length_norm(id as usize));
                *acc.entry(id as usize).or_default() += s;
            }
        }
        acc
    }

    /// Top-`k` statement ids by score (ties by ascending id), excluding
    /// statements identical to the query and statements scoring zero.
    pub fn retrieve_ids(&self, query: &str, k: usize) -> Vec<(usize, f64)> {
        if k == 0 {
            return Vec::new();
        }
        let own = normalize(query);
        let mut ranked: Vec<(usize, f64)> = self
            .scores(query)
            .into_iter()
            .filter(|&(id, s)| s > 0.0 && self.statements[id] != own)
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(k);
        ranked
    }

    pub fn retrieve(&self, query: &str, k: usize) -> Vec<String> {
        self.retrieve_ids(query, k)
            .into_iter()
            .map(|(id, _)| self.statements[id].clone())
            .collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.k1.to_le_bytes());
        out.extend_from_slice(&self.b.to_le_bytes());
        out.extend_from_slice(&(self.statements.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.avg_len.to_le_bytes());
        for (s, len) in self.statements.iter().zip(&self.lengths) {
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(&(s.len() as u32).to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        }
        out.extend_from_slice(&(self.postings.len() as u64).to_le_bytes());
        for (term, list) in &self.postings {
            out.extend_from_slice(&(term.len() as u32).to_le_bytes());
            out.extend_from_slice(term.as_bytes());
            out.extend_from_slice(&(list.len() as u32).to_le_bytes());
            for &(id, tf) in list {
                out.extend_from_slice(&id.to_le_bytes());
                out.extend_from_slice(&tf.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Cursor { buf, pos: 0 };
        if buf.len() < 6 || &buf[..6] != MAGIC {
            return Err(Error::Format("not a BM25 index (bad magic bytes)".into()));
        }
        r.pos = 6;
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported index version {version}")));
        }
        let k1 = r.f64()?;
        let b = r.f64()?;
        let n = r.u64()? as usize;
        let avg_len = r.f64()?;
        let mut statements = Vec::with_capacity(n.min(buf.len()));
        let mut lengths = Vec::with_capacity(n.min(buf.len()));
        for _ in 0..n {
            lengths.push(r.u32()?);
            statements.push(r.string()?);
        }
        let terms = r.u64()? as usize;
        let mut postings = BTreeMap::new();
        for _ in 0..terms {
            let term = r.string()?;
            let count = r.u32()? as usize;
            let mut list = Vec::with_capacity(count.min(buf.len()));
            for _ in 0..count {
                let id = r.u32()?;
                if id as usize >= n {
                    return Err(Error::Format(format!("posting id {id} out of range")));
                }
                list.push((id, r.u32()?));
            }
            if list.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(Error::Format(format!("postings for '{term}' not sorted")));
            }
            postings.insert(term, list);
        }
        if r.pos != buf.len() {
            return Err(Error::Format("trailing bytes after index".into()));
        }
        Ok(Self {
            k1,
            b,
            statements,
            lengths,
            avg_len,
            postings,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let buf = std::fs::read(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_bytes(&buf)
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format("index file truncated".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec())
            .map_err(|_| Error::Format("index string is not UTF-8".into()))
    }
}
