//! C ABI over the `logigan` core.
//!
//! Every function returns an [`LgStatus`]. On failure the message is
//! available from [`lg_last_error_message`] on the same thread. Strings
//! returned through `out_json` parameters are owned by the caller and must
//! be released with [`lg_string_free`]; handles with their `_free`
//! function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use logigan::candidates::{entail_score, Bm25Index, LexicalOracle};
use logigan::lexicon::{load_lexicon, match_indicators, IndicatorClass, Lexicon};
use logigan::losses::kl_divergence;
use logigan::miner::{extract_examples, Document, MinerConfig};
use logigan::modelkit::tokenize::{split_tokens, words};
use logigan::Error;

/// Result codes shared by every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Invalid = 3,
    Config = 4,
    Io = 5,
    Numeric = 6,
    Format = 7,
    Parse = 8,
    Panic = 9,
}

/// Indicator lexicon handle.
pub struct LgLexicon(Lexicon);

/// BM25 index handle.
pub struct LgIndex(Bm25Index);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

struct Failure(LgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse { .. } => LgStatus::Parse,
            Error::Invalid(_) => LgStatus::Invalid,
            Error::Config(_) => LgStatus::Config,
            Error::Numeric(_) => LgStatus::Numeric,
            Error::Format(_) | Error::Json(_) => LgStatus::Format,
            Error::Io { .. } => LgStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(LgStatus::Format, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            LgStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            LgStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(LgStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or a valid NUL-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(LgStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn out_ptr<T>(p: *mut T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(null(what))
    } else {
        Ok(())
    }
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(LgStatus::Invalid, "output contains NUL".into()))
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn lg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn lg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn lg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a lexicon file, or the built-in lexicon when `path` is null.
///
/// # Safety
/// `path` must be null or a valid string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lg_lexicon_load(path: *const c_char, out: *mut *mut LgLexicon) -> LgStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let path = if path.is_null() {
            None
        } else {
            Some(Path::new(str_arg(path, "path")?))
        };
        let lex = load_lexicon(path)?;
        *out = Box::into_raw(Box::new(LgLexicon(lex)));
        Ok(())
    })
}

/// # Safety
/// `lex` must be null or a handle from [`lg_lexicon_load`].
#[no_mangle]
pub unsafe extern "C" fn lg_lexicon_free(lex: *mut LgLexicon) {
    if !lex.is_null() {
        drop(Box::from_raw(lex));
    }
}

/// Number of surfaces of a class: 0 conclusion, 1 premise.
///
/// # Safety
/// `lex` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lg_lexicon_count(
    lex: *const LgLexicon,
    indicator_class: u32,
    out: *mut usize,
) -> LgStatus {
    guard(|| {
        let lex = lex.as_ref().ok_or_else(|| null("lexicon"))?;
        out_ptr(out, "out")?;
        let class = match indicator_class {
            0 => IndicatorClass::Conclusion,
            1 => IndicatorClass::Premise,
            c => return Err(Failure(LgStatus::Invalid, format!("unknown class {c}"))),
        };
        *out = lex.0.count(class);
        Ok(())
    })
}

/// Indicator matches in one sentence as a JSON array of
/// `{"surface", "class", "start", "end"}` (token offsets).
///
/// # Safety
/// `lex` must be a live handle, `sentence` a valid string, `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn lg_match_indicators(
    lex: *const LgLexicon,
    sentence: *const c_char,
    out_json: *mut *mut c_char,
) -> LgStatus {
    guard(|| {
        let lex = lex.as_ref().ok_or_else(|| null("lexicon"))?;
        let sentence = str_arg(sentence, "sentence")?;
        out_ptr(out_json, "out_json")?;
        let tokens: Vec<String> = split_tokens(sentence).into_iter().map(|t| t.text).collect();
        let rows: Vec<serde_json::Value> = match_indicators(&tokens, &lex.0)
            .iter()
            .map(|m| {
                serde_json::json!({
                    "surface": m.surface_text(),
                    "class": m.class,
                    "start": m.start,
                    "end": m.end,
                })
            })
            .collect();
        *out_json = into_c_string(serde_json::to_string(&rows)?)?;
        Ok(())
    })
}

/// Mines one document with default settings and the given sampler seed;
/// returns a JSON array of training examples.
///
/// # Safety
/// `lex` must be a live handle; strings valid; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn lg_mine_document(
    lex: *const LgLexicon,
    doc_id: *const c_char,
    text: *const c_char,
    seed: u64,
    out_json: *mut *mut c_char,
) -> LgStatus {
    guard(|| {
        let lex = lex.as_ref().ok_or_else(|| null("lexicon"))?;
        let doc = Document {
            doc_id: str_arg(doc_id, "doc_id")?.to_string(),
            text: str_arg(text, "text")?.to_string(),
        };
        out_ptr(out_json, "out_json")?;
        let mut cfg = MinerConfig::default();
        cfg.sampler.seed = seed;
        let examples = extract_examples(&doc, Some(&lex.0), &cfg)?;
        *out_json = into_c_string(serde_json::to_string(&examples)?)?;
        Ok(())
    })
}

/// Builds a BM25 index over `n` statements.
///
/// # Safety
/// `statements` must point to `n` valid strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lg_index_build(
    statements: *const *const c_char,
    n: usize,
    k1: f64,
    b: f64,
    out: *mut *mut LgIndex,
) -> LgStatus {
    guard(|| {
        out_ptr(out, "out")?;
        if statements.is_null() && n > 0 {
            return Err(null("statements"));
        }
        let mut owned = Vec::with_capacity(n);
        for i in 0..n {
            owned.push(str_arg(*statements.add(i), "statement")?);
        }
        let index = Bm25Index::build(&owned, k1, b)?;
        *out = Box::into_raw(Box::new(LgIndex(index)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a valid string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lg_index_load(path: *const c_char, out: *mut *mut LgIndex) -> LgStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        out_ptr(out, "out")?;
        let index = Bm25Index::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(LgIndex(index)));
        Ok(())
    })
}

/// # Safety
/// `index` must be a live handle; `path` a valid string.
#[no_mangle]
pub unsafe extern "C" fn lg_index_save(index: *const LgIndex, path: *const c_char) -> LgStatus {
    guard(|| {
        let index = index.as_ref().ok_or_else(|| null("index"))?;
        index.0.save(Path::new(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `index` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lg_index_len(index: *const LgIndex, out: *mut usize) -> LgStatus {
    guard(|| {
        let index = index.as_ref().ok_or_else(|| null("index"))?;
        out_ptr(out, "out")?;
        *out = index.0.len();
        Ok(())
    })
}

/// Top-`k` statements for `query` as a JSON array of
/// `{"id", "score", "statement"}`.
///
/// # Safety
/// `index` must be a live handle; `query` valid; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn lg_index_retrieve(
    index: *const LgIndex,
    query: *const c_char,
    k: usize,
    out_json: *mut *mut c_char,
) -> LgStatus {
    guard(|| {
        let index = index.as_ref().ok_or_else(|| null("index"))?;
        let query = str_arg(query, "query")?;
        out_ptr(out_json, "out_json")?;
        let rows: Vec<serde_json::Value> = index
            .0
            .retrieve_ids(query, k)
            .into_iter()
            .map(|(id, score)| {
                serde_json::json!({ "id": id, "score": score, "statement": index.0.statement(id) })
            })
            .collect();
        *out_json = into_c_string(serde_json::to_string(&rows)?)?;
        Ok(())
    })
}

/// # Safety
/// `index` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn lg_index_free(index: *mut LgIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// `sum_k p_k ln(p_k / q_k)` over `n` entries.
///
/// # Safety
/// `p` and `q` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lg_kl_divergence(p: *const f64, q: *const f64, n: usize, out: *mut f64) -> LgStatus {
    guard(|| {
        if n > 0 && (p.is_null() || q.is_null()) {
            return Err(null("distribution"));
        }
        out_ptr(out, "out")?;
        let (p, q) = if n == 0 {
            (&[][..], &[][..])
        } else {
            (std::slice::from_raw_parts(p, n), std::slice::from_raw_parts(q, n))
        };
        *out = kl_divergence(p, q)?;
        Ok(())
    })
}

/// Symmetric lexical entailment score of two statements in `[0, 1]`.
///
/// # Safety
/// Strings must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lg_entail_score(gold: *const c_char, pseudo: *const c_char, out: *mut f64) -> LgStatus {
    guard(|| {
        let gold = words(str_arg(gold, "gold")?);
        let pseudo = words(str_arg(pseudo, "pseudo")?);
        out_ptr(out, "out")?;
        *out = entail_score(&LexicalOracle::default(), &gold, &pseudo)?;
        Ok(())
    })
}
