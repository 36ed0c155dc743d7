use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use logigan_ffi::*;

fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { lg_string_free(s) };
    out
}

fn last_error() -> String {
    let p = lg_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn builtin() -> *mut LgLexicon {
    let mut lex = ptr::null_mut();
    assert_eq!(unsafe { lg_lexicon_load(ptr::null(), &mut lex) }, LgStatus::Ok);
    lex
}

#[test]
fn lexicon_counts_and_matches() {
    let lex = builtin();
    let mut n = 0usize;
    unsafe {
        assert_eq!(lg_lexicon_count(lex, 0, &mut n), LgStatus::Ok);
        assert_eq!(n, 41);
        assert_eq!(lg_lexicon_count(lex, 1, &mut n), LgStatus::Ok);
        assert_eq!(n, 17);
        assert_eq!(lg_lexicon_count(lex, 7, &mut n), LgStatus::Invalid);
    }
    assert!(last_error().contains("unknown class"));

    let sentence = CString::new("It rained , so the game was cancelled .").unwrap();
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { lg_match_indicators(lex, sentence.as_ptr(), &mut json) }, LgStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
    assert_eq!(v[0]["surface"], "so");
    assert_eq!(v[0]["class"], "conclusion");
    assert_eq!(v[0]["start"], 3);
    unsafe { lg_lexicon_free(lex) };
}

#[test]
fn mining_returns_examples() {
    let lex = builtin();
    let id = CString::new("bob").unwrap();
    let text = CString::new(
        "Bob ate too much last night. Therefore, he decides to go on a diet tomorrow.",
    )
    .unwrap();
    let mut json = ptr::null_mut();
    assert_eq!(
        unsafe { lg_mine_document(lex, id.as_ptr(), text.as_ptr(), 0, &mut json) },
        LgStatus::Ok
    );
    let v: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 1);
    assert_eq!(v[0]["statement"], "he decides to go on a diet tomorrow");
    unsafe { lg_lexicon_free(lex) };
}

#[test]
fn index_round_trip_and_retrieval() {
    let owned: Vec<CString> = ["socrates is mortal", "plato is mortal", "the sky is blue"]
        .iter()
        .map(|s| CString::new(*s).unwrap())
        .collect();
    let ptrs: Vec<*const c_char> = owned.iter().map(|s| s.as_ptr()).collect();
    let mut index = ptr::null_mut();
    assert_eq!(
        unsafe { lg_index_build(ptrs.as_ptr(), ptrs.len(), 1.2, 0.75, &mut index) },
        LgStatus::Ok
    );
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("ix.bin").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { lg_index_save(index, path.as_ptr()) }, LgStatus::Ok);
    let mut loaded = ptr::null_mut();
    assert_eq!(unsafe { lg_index_load(path.as_ptr(), &mut loaded) }, LgStatus::Ok);
    let mut n = 0;
    assert_eq!(unsafe { lg_index_len(loaded, &mut n) }, LgStatus::Ok);
    assert_eq!(n, 3);

    let q = CString::new("socrates is mortal").unwrap();
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(lg_index_retrieve(index, q.as_ptr(), 5, &mut a), LgStatus::Ok);
        assert_eq!(lg_index_retrieve(loaded, q.as_ptr(), 5, &mut b), LgStatus::Ok);
    }
    let (a, b) = (take(a), take(b));
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    // the query itself is excluded; the shared-term neighbour ranks first
    assert_eq!(v[0]["statement"], "plato is mortal");

    let mut empty = ptr::null_mut();
    assert_eq!(
        unsafe { lg_index_build(ptr::null(), 0, 1.2, 0.75, &mut empty) },
        LgStatus::Invalid
    );
    let missing = CString::new(dir.path().join("none.bin").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { lg_index_load(missing.as_ptr(), &mut empty) }, LgStatus::Io);
    unsafe {
        lg_index_free(index);
        lg_index_free(loaded);
    }
}

#[test]
fn numeric_helpers() {
    let p = [0.5, 0.5];
    let q = [0.25, 0.75];
    let mut kl = 0.0;
    assert_eq!(unsafe { lg_kl_divergence(p.as_ptr(), q.as_ptr(), 2, &mut kl) }, LgStatus::Ok);
    assert!((kl - 0.143841).abs() < 1e-6);
    let q0 = [0.0, 1.0];
    assert_eq!(
        unsafe { lg_kl_divergence(p.as_ptr(), q0.as_ptr(), 2, &mut kl) },
        LgStatus::Numeric
    );

    let gold = CString::new("socrates is mortal").unwrap();
    let pseudo = CString::new("socrates will eventually die").unwrap();
    let mut e = 0.0;
    assert_eq!(unsafe { lg_entail_score(gold.as_ptr(), pseudo.as_ptr(), &mut e) }, LgStatus::Ok);
    assert!((0.0..=1.0).contains(&e));
    assert_eq!(unsafe { lg_entail_score(gold.as_ptr(), gold.as_ptr(), &mut e) }, LgStatus::Ok);
    assert_eq!(e, 1.0);
}

#[test]
fn null_and_utf8_errors() {
    let mut out = 0.0;
    assert_eq!(
        unsafe { lg_entail_score(ptr::null(), ptr::null(), &mut out) },
        LgStatus::NullPointer
    );
    assert!(last_error().contains("null"));
    let bad = [0xffu8, 0xfe, 0];
    assert_eq!(
        unsafe { lg_entail_score(bad.as_ptr().cast(), bad.as_ptr().cast(), &mut out) },
        LgStatus::InvalidUtf8
    );
    let v = unsafe { CStr::from_ptr(lg_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_exports() {
    let header = std::fs::read_to_string(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/logigan.h"),
    )
    .unwrap();
    for f in [
        "lg_lexicon_load",
        "lg_match_indicators",
        "lg_mine_document",
        "lg_index_retrieve",
        "lg_kl_divergence",
        "lg_entail_score",
        "lg_last_error_message",
        "LG_STATUS_OK",
    ] {
        assert!(header.contains(f), "{f} missing from header");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "logigan.h"
int main(void) {
    LgLexicon *lex = NULL;
    if (lg_lexicon_load(NULL, &lex) != LG_STATUS_OK) return 1;
    size_t n = 0;
    if (lg_lexicon_count(lex, 0, &n) != LG_STATUS_OK || n != 41) return 2;
    char *json = NULL;
    if (lg_match_indicators(lex, "he left because it rained .", &json) != LG_STATUS_OK) return 3;
    printf("%s\n", json);
    lg_string_free(json);
    lg_lexicon_free(lex);
    if (lg_lexicon_count(NULL, 0, &n) != LG_STATUS_NULL_POINTER) return 4;
    return 0;
}
"#;

/// Compiles and runs a C client against the header and static library when
/// a C compiler is available.
#[test]
fn c_client_links_and_runs() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("liblogigan_ffi.a");
    if !lib.exists() {
        eprintln!("static library not built at {}; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let bin = dir.path().join("client");
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C client failed to compile");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C client exited with {:?}", out.status);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("\"because\""), "{stdout}");
}
