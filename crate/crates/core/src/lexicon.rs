//! Logic-indicator lexicon and indicator detection.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modelkit::tokenize::{render, split_tokens};

const CONCLUSION: &str = "therefore, thereby, wherefore, accordingly, we may conclude, \
entails that, hence, thus, consequently, we may infer, it must be that, whence, so that, so, \
it follows that, implies that, as a result, it can be inferred that, suggests that, \
can conclude, proves that, it can be shown, as a conclusion, conclusively, which implies that, \
for that reason, as a consequence, on that account, that being said, in conclusion, \
to that end, for this reason, on account of, because of this, that being so, \
because of that, ergo, in this way, in this manner, in such a manner, by such means";

// Listed as published, duplicates included; `Lexicon::builtin` deduplicates.
const PREMISE: &str = "since, on account of, considering, because of, because, due to, \
now that, in order, as indicated by, because, may be inferred from, given that, owing to, \
by virtue of, owing to, on account of, in view of, for the sake of, thanks to, reason that";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndicatorClass {
    Conclusion,
    Premise,
}

impl IndicatorClass {
    pub fn as_str(self) -> &'static str {
        match self {
            IndicatorClass::Conclusion => "conclusion",
            IndicatorClass::Premise => "premise",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "conclusion" => Some(IndicatorClass::Conclusion),
            "premise" => Some(IndicatorClass::Premise),
            _ => None,
        }
    }
}

impl fmt::Display for IndicatorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    /// Lowercase token sequence.
    pub surface: Vec<String>,
    pub class: IndicatorClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorMatch {
    pub surface: Vec<String>,
    pub class: IndicatorClass,
    pub start: usize,
    pub end: usize,
}

impl IndicatorMatch {
    pub fn surface_text(&self) -> String {
        render(&self.surface)
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Immutable indicator table.
///
/// A surface may be listed under both classes. A match on such a surface is
/// reported with the preferred class: the one starred in the lexicon file,
/// otherwise [`IndicatorClass::Premise`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    preferred: BTreeMap<Vec<String>, IndicatorClass>,
    // first token -> surfaces starting with it, longest first
    index: HashMap<String, Vec<(Vec<String>, IndicatorClass)>>,
}

fn surface_tokens(raw: &str) -> Vec<String> {
    split_tokens(raw).iter().map(|t| t.lower()).collect()
}

impl Lexicon {
    pub fn builtin() -> Self {
        let mut entries = Vec::new();
        for (list, class) in [
            (CONCLUSION, IndicatorClass::Conclusion),
            (PREMISE, IndicatorClass::Premise),
        ] {
            for raw in list.split(',') {
                entries.push(LexiconEntry {
                    surface: surface_tokens(raw),
                    class,
                });
            }
        }
        Self::from_entries(entries, BTreeMap::new()).expect("built-in lexicon is well-formed")
    }

    /// Builds a lexicon, dropping within-class duplicates (first occurrence
    /// wins).
    pub fn from_entries(
        raw: Vec<LexiconEntry>,
        preferred: BTreeMap<Vec<String>, IndicatorClass>,
    ) -> Result<Self> {
        let mut entries: Vec<LexiconEntry> = Vec::with_capacity(raw.len());
        for e in raw {
            if e.surface.is_empty() {
                return Err(Error::Invalid("empty indicator surface".into()));
            }
            if e.surface.iter().any(|t| t.contains(['.', '!', '?'])) {
                return Err(Error::Invalid(format!(
                    "indicator surface '{}' contains a sentence terminator",
                    render(&e.surface)
                )));
            }
            if !entries.contains(&e) {
                entries.push(e);
            }
        }
        let mut lex = Lexicon {
            entries,
            preferred,
            index: HashMap::new(),
        };
        lex.rebuild_index();
        Ok(lex)
    }

    fn rebuild_index(&mut self) {
        let mut index: HashMap<String, Vec<(Vec<String>, IndicatorClass)>> = HashMap::new();
        for e in &self.entries {
            let bucket = index.entry(e.surface[0].clone()).or_default();
            if bucket.iter().any(|(s, _)| *s == e.surface) {
                continue;
            }
            bucket.push((e.surface.clone(), self.class_of(&e.surface)));
        }
        for bucket in index.values_mut() {
            bucket.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        }
        self.index = index;
    }

    /// Class reported for a surface when it is matched.
    fn class_of(&self, surface: &[String]) -> IndicatorClass {
        let classes: Vec<IndicatorClass> = self
            .entries
            .iter()
            .filter(|e| e.surface == surface)
            .map(|e| e.class)
            .collect();
        if classes.len() == 1 {
            return classes[0];
        }
        self.preferred
            .get(surface)
            .copied()
            .unwrap_or(IndicatorClass::Premise)
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn count(&self, class: IndicatorClass) -> usize {
        self.entries.iter().filter(|e| e.class == class).count()
    }

    pub fn contains(&self, surface: &str, class: IndicatorClass) -> bool {
        let s = surface_tokens(surface);
        self.entries.iter().any(|e| e.surface == s && e.class == class)
    }

    /// Parses the override format: `<class>\t<surface>` per line, `#`
    /// comments, blank lines ignored. A trailing `*` on the class marks the
    /// preferred class for a surface listed under both classes.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        let mut preferred = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let trimmed = line.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: lineno,
                message,
            };
            let (class_raw, surface_raw) = trimmed
                .split_once('\t')
                .ok_or_else(|| err("expected '<class>\\t<surface>'".into()))?;
            let (class_name, starred) = match class_raw.strip_suffix('*') {
                Some(c) => (c, true),
                None => (class_raw, false),
            };
            let class = IndicatorClass::parse(class_name)
                .ok_or_else(|| err(format!("unknown indicator class '{class_raw}'")))?;
            if surface_raw.contains(['.', '!', '?']) {
                return Err(err(format!(
                    "surface '{surface_raw}' contains a sentence terminator"
                )));
            }
            let surface = surface_tokens(surface_raw);
            if surface.is_empty() {
                return Err(err("empty surface".into()));
            }
            if starred {
                if let Some(prev) = preferred.insert(surface.clone(), class) {
                    if prev != class {
                        return Err(err(format!(
                            "conflicting preferred classes for '{surface_raw}'"
                        )));
                    }
                }
            }
            entries.push(LexiconEntry { surface, class });
        }
        Self::from_entries(entries, preferred).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })
    }

    /// Serializes to the override format; `parse` of the result yields an
    /// identical lexicon.
    pub fn to_file_string(&self) -> String {
        let mut out = String::from("# logic indicator lexicon: <class>\\t<surface>\n");
        for e in &self.entries {
            let star = if self.preferred.get(&e.surface) == Some(&e.class) {
                "*"
            } else {
                ""
            };
            out.push_str(&format!("{}{}\t{}\n", e.class, star, render(&e.surface)));
        }
        out
    }
}

/// Loads the override file when given, otherwise the built-in lexicon.
pub fn load_lexicon(override_path: Option<&Path>) -> Result<Lexicon> {
    match override_path {
        None => Ok(Lexicon::builtin()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::io(format!("reading lexicon {}", path.display()), e))?;
            Lexicon::parse(&text, path)
        }
    }
}

/// Finds indicator occurrences in a tokenized sentence. Matching is
/// case-insensitive on whole tokens; at each position the longest surface
/// wins and the scan resumes after it.
pub fn match_indicators<S: AsRef<str>>(sentence: &[S], lexicon: &Lexicon) -> Vec<IndicatorMatch> {
    let lower: Vec<String> = sentence.iter().map(|t| t.as_ref().to_lowercase()).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < lower.len() {
        let hit = lexicon.index.get(&lower[i]).and_then(|cands| {
            cands.iter().find(|(surface, _)| {
                i + surface.len() <= lower.len() && lower[i..i + surface.len()] == surface[..]
            })
        });
        match hit {
            Some((surface, class)) => {
                out.push(IndicatorMatch {
                    surface: surface.clone(),
                    class: *class,
                    start: i,
                    end: i + surface.len(),
                });
                i += surface.len();
            }
            None => i += 1,
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelkit::tokenize::words;

    // Every lexicon surface matched at every position, then the
    // longest-at-start rule applied left to right.
    fn brute_force(sentence: &[String], lex: &Lexicon) -> Vec<(usize, usize, String)> {
        let mut all = Vec::new();
        for start in 0..sentence.len() {
            for end in start + 1..=sentence.len() {
                for e in lex.entries() {
                    if e.surface[..] == sentence[start..end] {
                        all.push((start, end));
                    }
                }
            }
        }
        let mut out = Vec::new();
        let mut pos = 0;
        while pos < sentence.len() {
            let best = all.iter().filter(|(s, _)| *s == pos).map(|(_, e)| *e).max();
            match best {
                Some(end) => {
                    out.push((pos, end, render(&sentence[pos..end])));
                    pos = end;
                }
                None => pos += 1,
            }
        }
        out
    }

    #[test]
    fn builtin_counts() {
        let lex = Lexicon::builtin();
        assert_eq!(lex.count(IndicatorClass::Conclusion), 41);
        assert_eq!(lex.count(IndicatorClass::Premise), 17);
        assert!(lex.contains("therefore", IndicatorClass::Conclusion));
        assert!(lex.contains("we may infer", IndicatorClass::Conclusion));
        let because = lex
            .entries()
            .iter()
            .filter(|e| e.class == IndicatorClass::Premise && e.surface == ["because"])
            .count();
        assert_eq!(because, 1);
    }

    #[test]
    fn on_account_of_prefers_premise() {
        let lex = Lexicon::builtin();
        let m = match_indicators(&words("on account of the storm , we stayed ."), &lex);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].class, IndicatorClass::Premise);
    }

    #[test]
    fn suggests_that() {
        let lex = Lexicon::builtin();
        let m = match_indicators(&words("The evidence suggests that he lied ."), &lex);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].surface_text(), "suggests that");
        assert_eq!(m[0].class, IndicatorClass::Conclusion);
        assert_eq!((m[0].start, m[0].end), (2, 4));
    }

    #[test]
    fn longest_wins() {
        let lex = Lexicon::builtin();
        let s = words("because of this , he left .");
        let m = match_indicators(&s, &lex);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].surface_text(), "because of this");
        assert_eq!(m[0].class, IndicatorClass::Conclusion);
        let oracle = brute_force(&s, &lex);
        assert_eq!(oracle, vec![(0, 3, "because of this".to_string())]);
    }

    #[test]
    fn no_match() {
        assert!(match_indicators(&words("the cat sat ."), &Lexicon::builtin()).is_empty());
        assert!(match_indicators::<String>(&[], &Lexicon::builtin()).is_empty());
    }

    #[test]
    fn case_insensitive() {
        let m = match_indicators(&["THEREFORE", ",", "x"], &Lexicon::builtin());
        assert_eq!(m[0].surface, ["therefore"]);
    }

    #[test]
    fn round_trip() {
        let lex = Lexicon::builtin();
        let text = lex.to_file_string();
        let back = Lexicon::parse(&text, Path::new("mem")).unwrap();
        assert_eq!(back, lex);
    }

    #[test]
    fn starred_preference() {
        let text = "conclusion*\ton account of\npremise\ton account of\n";
        let lex = Lexicon::parse(text, Path::new("mem")).unwrap();
        let m = match_indicators(&words("on account of it"), &lex);
        assert_eq!(m[0].class, IndicatorClass::Conclusion);
        let back = Lexicon::parse(&lex.to_file_string(), Path::new("mem")).unwrap();
        assert_eq!(back, lex);
    }

    #[test]
    fn malformed_names_line() {
        let text = "# header\nconclusion\ttherefore\nbogus line\n";
        let err = Lexicon::parse(text, Path::new("lex.tsv")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let err = Lexicon::parse("opinion\twell\n", Path::new("lex.tsv")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = Lexicon::parse("premise\tso. then\n", Path::new("lex.tsv")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matches_agree_with_brute_force(idx in proptest::collection::vec(0usize..24, 0..14)) {
            let pool = ["so", "that", "because", "of", "this", "it", "can", "be", "shown",
                "on", "account", "the", "due", "to", "we", "may", "infer", "in", "order",
                "thus", ",", "a", "given", "being"];
            let sentence: Vec<String> = idx.iter().map(|&i| pool[i].to_string()).collect();
            let lex = Lexicon::builtin();
            let got: Vec<(usize, usize, String)> = match_indicators(&sentence, &lex)
                .into_iter()
                .map(|m| (m.start, m.end, m.surface_text()))
                .collect();
            prop_assert_eq!(got, brute_force(&sentence, &lex));
        }
    }
}
