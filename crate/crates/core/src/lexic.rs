//! Tokenizer and rule-based part-of-speech tagger.
//!
//! Tagging is deterministic by design: an exact lexicon entry wins over a
//! suffix rule, which wins over the defaults (digits, punctuation, noun).
//! No statistical model is involved, so the same text always yields the
//! same tags and the downstream label generation is reproducible.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Part-of-speech tag inventory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PosTag {
    Jj,
    Jjr,
    Jjs,
    Rb,
    Wdt,
    Prp,
    Dt,
    Nn,
    Vb,
    Md,
    In,
    Cc,
    Cd,
    Punct,
    Other,
}

impl PosTag {
    pub fn name(self) -> &'static str {
        match self {
            PosTag::Jj => "JJ",
            PosTag::Jjr => "JJR",
            PosTag::Jjs => "JJS",
            PosTag::Rb => "RB",
            PosTag::Wdt => "WDT",
            PosTag::Prp => "PRP",
            PosTag::Dt => "DT",
            PosTag::Nn => "NN",
            PosTag::Vb => "VB",
            PosTag::Md => "MD",
            PosTag::In => "IN",
            PosTag::Cc => "CC",
            PosTag::Cd => "CD",
            PosTag::Punct => "PUNCT",
            PosTag::Other => "OTHER",
        }
    }

    fn from_name(name: &str) -> Option<PosTag> {
        Some(match name {
            "JJ" => PosTag::Jj,
            "JJR" => PosTag::Jjr,
            "JJS" => PosTag::Jjs,
            "RB" => PosTag::Rb,
            "WDT" => PosTag::Wdt,
            "PRP" => PosTag::Prp,
            "DT" => PosTag::Dt,
            "NN" => PosTag::Nn,
            "VB" => PosTag::Vb,
            "MD" => PosTag::Md,
            "IN" => PosTag::In,
            "CC" => PosTag::Cc,
            "CD" => PosTag::Cd,
            "PUNCT" => PosTag::Punct,
            "OTHER" => PosTag::Other,
            _ => return None,
        })
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Half-open character span `[start, end)` into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

/// Token as produced by [`tokenize`], before tagging.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawToken {
    pub surface: String,
    pub lower: String,
    pub span: Span,
    /// True for letter/digit runs, false for single punctuation marks.
    pub is_word: bool,
}

/// Tagged token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lower: String,
    pub span: Span,
    pub tag: PosTag,
}

/// Split text into word tokens (maximal letter/digit runs, hyphens kept
/// when they sit between two alphanumerics) and single punctuation marks.
/// Whitespace separates tokens and never appears inside one. Spans are
/// character offsets.
pub fn tokenize(text: &str) -> Vec<RawToken> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_alphanumeric() {
            let start = i;
            i += 1;
            loop {
                if i < chars.len() && chars[i].is_alphanumeric() {
                    i += 1;
                } else if i + 1 < chars.len() && chars[i] == '-' && chars[i + 1].is_alphanumeric()
                {
                    i += 2;
                } else {
                    break;
                }
            }
            let surface: String = chars[start..i].iter().collect();
            tokens.push(RawToken {
                lower: surface.to_lowercase(),
                surface,
                span: Span { start, end: i },
                is_word: true,
            });
        } else {
            let surface: String = c.to_string();
            tokens.push(RawToken {
                lower: surface.to_lowercase(),
                surface,
                span: Span { start: i, end: i + 1 },
                is_word: false,
            });
            i += 1;
        }
    }
    tokens
}

/// Word → tag entries plus the exception list consulted by suffix rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagLexicon {
    entries: BTreeMap<String, PosTag>,
    exceptions: BTreeSet<String>,
}

const BUNDLED_LEXICON: &str = include_str!("../assets/pos.lex");

impl TagLexicon {
    /// Parse the lexicon file format: one `word<TAB>TAG` per line, `#`
    /// comments, and an optional `[exceptions]` section listing one word
    /// per line that suffix rules must skip.
    pub fn parse(src: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut exceptions = BTreeSet::new();
        let mut in_exceptions = false;
        for (idx, raw_line) in src.lines().enumerate() {
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line == "[exceptions]" {
                in_exceptions = true;
                continue;
            }
            if in_exceptions {
                exceptions.insert(line.to_lowercase());
                continue;
            }
            let (word, tag_name) = line.split_once('\t').ok_or_else(|| {
                Error::malformed(idx + 1, "expected \"word<TAB>TAG\"".to_string())
            })?;
            let tag = PosTag::from_name(tag_name.trim()).ok_or_else(|| {
                Error::malformed(idx + 1, format!("unknown tag \"{}\"", tag_name.trim()))
            })?;
            entries.insert(word.trim().to_lowercase(), tag);
        }
        Ok(TagLexicon { entries, exceptions })
    }

    /// The lexicon compiled into the crate. Covers the closed-class words
    /// (determiners, pronouns, modals, prepositions), the irregular
    /// comparative/superlative forms, and the adjectives the default smell
    /// lexicons rely on.
    pub fn bundled() -> TagLexicon {
        TagLexicon::parse(BUNDLED_LEXICON).expect("bundled lexicon parses")
    }

    pub fn lookup(&self, lower: &str) -> Option<PosTag> {
        self.entries.get(lower).copied()
    }

    pub fn is_exception(&self, lower: &str) -> bool {
        self.exceptions.contains(lower)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Assign exactly one tag to every token.
///
/// Precedence: exact lexicon entry, then suffix rules (`-est` → JJS,
/// `-er` → JJR, `-ly` → RB, each only for words longer than three
/// characters and not in the exception list), then the defaults:
/// digits → CD, punctuation → PUNCT, anything else → NN.
pub fn tag(tokens: Vec<RawToken>, lexicon: &TagLexicon) -> Vec<Token> {
    tokens
        .into_iter()
        .map(|t| {
            let tag = assign_tag(&t, lexicon);
            Token {
                surface: t.surface,
                lower: t.lower,
                span: t.span,
                tag,
            }
        })
        .collect()
}

fn assign_tag(token: &RawToken, lexicon: &TagLexicon) -> PosTag {
    if let Some(tag) = lexicon.lookup(&token.lower) {
        return tag;
    }
    if !token.is_word {
        return PosTag::Punct;
    }
    let lower = &token.lower;
    if lower.chars().count() > 3 && !lexicon.is_exception(lower) {
        if lower.ends_with("est") {
            return PosTag::Jjs;
        }
        if lower.ends_with("er") {
            return PosTag::Jjr;
        }
        if lower.ends_with("ly") {
            return PosTag::Rb;
        }
    }
    if lower.chars().all(|c| c.is_ascii_digit()) {
        return PosTag::Cd;
    }
    PosTag::Nn
}

/// Tokenize and tag in one step.
pub fn analyze(text: &str, lexicon: &TagLexicon) -> Vec<Token> {
    tag(tokenize(text), lexicon)
}
