//! Corpus input and example JSON-lines I/O.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Document, TrainingExample};
use crate::error::{Error, Result};

pub const EXAMPLES_SCHEMA: &str = "logigan/examples";
const EXAMPLES_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    schema: String,
    version: u32,
}

fn is_jsonl(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("jsonl") | Some("ndjson")
    )
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))
}

fn jsonl_documents(path: PathBuf) -> Result<impl Iterator<Item = Result<Document>>> {
    let reader = open(&path)?;
    Ok(reader
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| match line {
            Err(e) => Some(Err(Error::io(format!("reading {}", path.display()), e))),
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(serde_json::from_str::<Document>(&l).map_err(|e| Error::Parse {
                path: path.clone(),
                line: i + 1,
                message: e.to_string(),
            })),
        }))
}

fn text_document(path: &Path) -> Result<Document> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let doc_id = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Document { doc_id, text })
}

/// Streams documents from a plain-text file, a JSON-lines file
/// (`{"doc_id", "text"}` per line) or a directory of either, visited in
/// file-name order.
pub fn read_corpus(path: &Path) -> Result<Box<dyn Iterator<Item = Result<Document>>>> {
    let meta = std::fs::metadata(path)
        .map_err(|e| Error::io(format!("reading corpus {}", path.display()), e))?;
    if !meta.is_dir() {
        return file_documents(path.to_path_buf());
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| Error::io(format!("listing {}", path.display()), e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    let iter = files.into_iter().flat_map(|f| match file_documents(f) {
        Ok(it) => it,
        Err(e) => Box::new(std::iter::once(Err(e))),
    });
    Ok(Box::new(iter))
}

fn file_documents(path: PathBuf) -> Result<Box<dyn Iterator<Item = Result<Document>>>> {
    if is_jsonl(&path) {
        Ok(Box::new(jsonl_documents(path)?))
    } else {
        Ok(Box::new(std::iter::once(text_document(&path))))
    }
}

/// JSON-lines example sink; the first line is a schema header.
pub struct ExampleWriter<W: Write> {
    out: W,
    written: u64,
}

impl<W: Write> ExampleWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        let header = Header {
            schema: EXAMPLES_SCHEMA.into(),
            version: EXAMPLES_VERSION,
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        Ok(Self { out, written: 0 })
    }

    pub fn write(&mut self, e: &TrainingExample) -> Result<()> {
        serde_json::to_writer(&mut self.out, e)?;
        self.out.write_all(b"\n")?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> u64 {
        self.written
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn write_examples(path: &Path, examples: &[TrainingExample]) -> Result<()> {
    let file = File::create(path)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    let mut w = ExampleWriter::new(BufWriter::new(file))?;
    for e in examples {
        w.write(e)?;
    }
    w.finish()?;
    Ok(())
}

/// Streams examples; a malformed line yields an error naming its number.
pub fn read_examples(path: &Path) -> Result<impl Iterator<Item = Result<TrainingExample>>> {
    let reader = open(path)?;
    let path = path.to_path_buf();
    Ok(reader
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| {
            let line = match line {
                Ok(l) => l,
                Err(e) => return Some(Err(Error::io(format!("reading {}", path.display()), e))),
            };
            if line.trim().is_empty() {
                return None;
            }
            if i == 0 {
                if let Ok(h) = serde_json::from_str::<Header>(&line) {
                    if h.schema != EXAMPLES_SCHEMA || h.version != EXAMPLES_VERSION {
                        return Some(Err(Error::Parse {
                            path: path.clone(),
                            line: 1,
                            message: format!("unsupported schema {} v{}", h.schema, h.version),
                        }));
                    }
                    return None;
                }
            }
            Some(
                serde_json::from_str::<TrainingExample>(&line).map_err(|e| Error::Parse {
                    path: path.clone(),
                    line: i + 1,
                    message: e.to_string(),
                }),
            )
        }))
}
