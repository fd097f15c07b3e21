//! Smell taxonomy, rule-based detection, and self-supervised labeling.
//!
//! Two detection modes are provided. `pos_proxy` reproduces the crude
//! tag-to-smell mapping (every adjective counts as subjective language,
//! every adverb as ambiguous, and so on) over the five core classes.
//! `lexicon` matches term and phrase lists for all nine classes and is
//! what the lint command uses by default.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, CorpusItem, LabeledRequirement, Requirement};
use crate::error::{Error, Result};
use crate::lexic::{self, PosTag, TagLexicon};

/// The nine language-criteria smell classes. The first five form the
/// core set reachable from `pos_proxy` mode.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SmellClass {
    SubjectiveLanguage,
    AmbiguousAdvAdj,
    Superlatives,
    Comparatives,
    VaguePronouns,
    OpenEndedTerms,
    Loopholes,
    IncompleteReferences,
    NegativeStatements,
}

impl SmellClass {
    pub const ALL: [SmellClass; 9] = [
        SmellClass::SubjectiveLanguage,
        SmellClass::AmbiguousAdvAdj,
        SmellClass::Superlatives,
        SmellClass::Comparatives,
        SmellClass::VaguePronouns,
        SmellClass::OpenEndedTerms,
        SmellClass::Loopholes,
        SmellClass::IncompleteReferences,
        SmellClass::NegativeStatements,
    ];

    /// Classes reachable from `pos_proxy` mode.
    pub const CORE: [SmellClass; 5] = [
        SmellClass::SubjectiveLanguage,
        SmellClass::AmbiguousAdvAdj,
        SmellClass::Superlatives,
        SmellClass::Comparatives,
        SmellClass::VaguePronouns,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SmellClass::SubjectiveLanguage => "SUBJECTIVE_LANGUAGE",
            SmellClass::AmbiguousAdvAdj => "AMBIGUOUS_ADV_ADJ",
            SmellClass::Superlatives => "SUPERLATIVES",
            SmellClass::Comparatives => "COMPARATIVES",
            SmellClass::VaguePronouns => "VAGUE_PRONOUNS",
            SmellClass::OpenEndedTerms => "OPEN_ENDED_TERMS",
            SmellClass::Loopholes => "LOOPHOLES",
            SmellClass::IncompleteReferences => "INCOMPLETE_REFERENCES",
            SmellClass::NegativeStatements => "NEGATIVE_STATEMENTS",
        }
    }

    /// Lowercased name, used for lexicon file names and rule ids.
    pub fn file_stem(self) -> String {
        self.name().to_lowercase()
    }

    pub fn from_name(name: &str) -> Option<SmellClass> {
        SmellClass::ALL.iter().copied().find(|c| c.name() == name)
    }
}

impl fmt::Display for SmellClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Multi-hot label assignment. Iteration follows the class declaration
/// order, which is also the column order of label matrices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelSet(BTreeSet<SmellClass>);

impl LabelSet {
    pub fn new() -> Self {
        LabelSet(BTreeSet::new())
    }

    pub fn insert(&mut self, class: SmellClass) {
        self.0.insert(class);
    }

    pub fn contains(&self, class: SmellClass) -> bool {
        self.0.contains(&class)
    }

    pub fn iter(&self) -> impl Iterator<Item = SmellClass> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<SmellClass> for LabelSet {
    fn from_iter<I: IntoIterator<Item = SmellClass>>(iter: I) -> Self {
        LabelSet(iter.into_iter().collect())
    }
}

/// One detected smell, anchored to an inclusive token index range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmellFinding {
    pub smell: SmellClass,
    /// (first, last) token indices, inclusive, into the requirement's
    /// token sequence.
    pub token_range: (usize, usize),
    /// Matched term for lexicon findings, tag name for pos findings.
    pub evidence: String,
    pub rule_id: String,
}

/// Flat record for the findings export, one per finding per requirement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FindingRecord {
    pub id: String,
    pub smell: SmellClass,
    pub start_token: usize,
    pub end_token: usize,
    pub evidence: String,
    pub rule_id: String,
}

impl FindingRecord {
    pub fn from_finding(id: &str, finding: &SmellFinding) -> Self {
        FindingRecord {
            id: id.to_string(),
            smell: finding.smell,
            start_token: finding.token_range.0,
            end_token: finding.token_range.1,
            evidence: finding.evidence.clone(),
            rule_id: finding.rule_id.clone(),
        }
    }
}

/// Detection mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectMode {
    PosProxy,
    Lexicon,
}

impl DetectMode {
    /// Smell classes reachable in this mode; label matrices built for a
    /// mode use exactly these columns.
    pub fn active_classes(self) -> &'static [SmellClass] {
        match self {
            DetectMode::PosProxy => &SmellClass::CORE,
            DetectMode::Lexicon => &SmellClass::ALL,
        }
    }
}

/// Per-class term and phrase lists. Phrases are stored as space-joined
/// lowercase token sequences, so matching is token-based and punctuation
/// inside the original text cannot break a phrase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmellLexicons {
    terms: BTreeMap<SmellClass, BTreeSet<String>>,
}

const BUNDLED: [(&str, SmellClass); 9] = [
    (
        include_str!("../assets/lexicons/subjective_language.txt"),
        SmellClass::SubjectiveLanguage,
    ),
    (
        include_str!("../assets/lexicons/ambiguous_adv_adj.txt"),
        SmellClass::AmbiguousAdvAdj,
    ),
    (
        include_str!("../assets/lexicons/superlatives.txt"),
        SmellClass::Superlatives,
    ),
    (
        include_str!("../assets/lexicons/comparatives.txt"),
        SmellClass::Comparatives,
    ),
    (
        include_str!("../assets/lexicons/vague_pronouns.txt"),
        SmellClass::VaguePronouns,
    ),
    (
        include_str!("../assets/lexicons/open_ended_terms.txt"),
        SmellClass::OpenEndedTerms,
    ),
    (
        include_str!("../assets/lexicons/loopholes.txt"),
        SmellClass::Loopholes,
    ),
    (
        include_str!("../assets/lexicons/incomplete_references.txt"),
        SmellClass::IncompleteReferences,
    ),
    (
        include_str!("../assets/lexicons/negative_statements.txt"),
        SmellClass::NegativeStatements,
    ),
];

impl SmellLexicons {
    /// The lexicons compiled into the crate.
    pub fn bundled() -> SmellLexicons {
        let mut terms = BTreeMap::new();
        for (src, class) in BUNDLED {
            terms.insert(class, parse_terms(src));
        }
        SmellLexicons { terms }
    }

    /// Load per-class term files (`<class name lowercased>.txt`) from a
    /// directory. Classes without a file keep their bundled defaults.
    pub fn from_dir(dir: &Path) -> Result<SmellLexicons> {
        let mut lexicons = SmellLexicons::bundled();
        for class in SmellClass::ALL {
            let path = dir.join(format!("{}.txt", class.file_stem()));
            if path.exists() {
                let src = std::fs::read_to_string(&path).map_err(|source| Error::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                lexicons.terms.insert(class, parse_terms(&src));
            }
        }
        Ok(lexicons)
    }

    pub fn terms(&self, class: SmellClass) -> &BTreeSet<String> {
        &self.terms[&class]
    }

    /// Add one term or phrase to a class list (normalized like file input).
    pub fn insert_term(&mut self, class: SmellClass, term: &str) {
        if let Some(normalized) = normalize_term(term) {
            self.terms.entry(class).or_default().insert(normalized);
        }
    }
}

impl Default for SmellLexicons {
    fn default() -> Self {
        SmellLexicons::bundled()
    }
}

fn normalize_term(line: &str) -> Option<String> {
    let words: Vec<String> = lexic::tokenize(line)
        .into_iter()
        .filter(|t| t.is_word)
        .map(|t| t.lower)
        .collect();
    if words.is_empty() {
        None
    } else {
        Some(words.join(" "))
    }
}

fn parse_terms(src: &str) -> BTreeSet<String> {
    src.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(normalize_term)
        .collect()
}

/// Everything detection needs besides the requirement itself.
#[derive(Debug, Clone)]
pub struct DetectContext {
    pub tag_lexicon: TagLexicon,
    pub smell_lexicons: SmellLexicons,
}

impl Default for DetectContext {
    fn default() -> Self {
        DetectContext {
            tag_lexicon: TagLexicon::bundled(),
            smell_lexicons: SmellLexicons::bundled(),
        }
    }
}

fn proxy_class(tag: PosTag) -> Option<SmellClass> {
    match tag {
        PosTag::Jj => Some(SmellClass::SubjectiveLanguage),
        PosTag::Rb => Some(SmellClass::AmbiguousAdvAdj),
        PosTag::Jjs => Some(SmellClass::Superlatives),
        PosTag::Jjr => Some(SmellClass::Comparatives),
        PosTag::Wdt => Some(SmellClass::VaguePronouns),
        _ => None,
    }
}

/// Detect smells in one requirement. Findings come back ordered by their
/// starting token index.
pub fn detect(
    requirement: &Requirement,
    mode: DetectMode,
    ctx: &DetectContext,
) -> Vec<SmellFinding> {
    let tokens = lexic::analyze(&requirement.text, &ctx.tag_lexicon);
    match mode {
        DetectMode::PosProxy => tokens
            .iter()
            .enumerate()
            .filter_map(|(i, t)| {
                proxy_class(t.tag).map(|smell| SmellFinding {
                    smell,
                    token_range: (i, i),
                    evidence: t.tag.name().to_string(),
                    rule_id: format!("pos:{}", t.tag.name()),
                })
            })
            .collect(),
        DetectMode::Lexicon => {
            // Word tokens only; punctuation cannot interrupt a phrase.
            let words: Vec<(usize, &str)> = tokens
                .iter()
                .enumerate()
                .filter(|(_, t)| t.tag != PosTag::Punct)
                .map(|(i, t)| (i, t.lower.as_str()))
                .collect();
            scan_lexicons(&words, &ctx.smell_lexicons)
        }
    }
}

/// Leftmost-longest scan over the word token sequence. At each position
/// the longest matching term across all classes wins and the scan resumes
/// past it, so findings never overlap; equal-length candidates at the
/// same position resolve to the lexicographically smaller class name.
fn scan_lexicons(words: &[(usize, &str)], lexicons: &SmellLexicons) -> Vec<SmellFinding> {
    // first word -> candidate (tokens, class), longest first, then by name.
    let mut index: BTreeMap<&str, Vec<(Vec<&str>, SmellClass)>> = BTreeMap::new();
    for class in SmellClass::ALL {
        for term in lexicons.terms(class) {
            let parts: Vec<&str> = term.split(' ').collect();
            index.entry(parts[0]).or_default().push((parts, class));
        }
    }
    for candidates in index.values_mut() {
        candidates.sort_by(|a, b| {
            b.0.len()
                .cmp(&a.0.len())
                .then_with(|| a.1.name().cmp(b.1.name()))
        });
    }

    let mut findings = Vec::new();
    let mut i = 0;
    while i < words.len() {
        let mut matched_len = 0;
        if let Some(candidates) = index.get(words[i].1) {
            for (parts, class) in candidates {
                if i + parts.len() <= words.len()
                    && parts
                        .iter()
                        .zip(&words[i..i + parts.len()])
                        .all(|(p, (_, w))| p == w)
                {
                    findings.push(SmellFinding {
                        smell: *class,
                        token_range: (words[i].0, words[i + parts.len() - 1].0),
                        evidence: parts.join(" "),
                        rule_id: format!("lex:{}", class.file_stem()),
                    });
                    matched_len = parts.len();
                    break;
                }
            }
        }
        i += matched_len.max(1);
    }
    findings
}

/// Dense boolean label matrix over a fixed class column order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMatrix {
    classes: Vec<SmellClass>,
    rows: Vec<Vec<bool>>,
}

impl LabelMatrix {
    /// One row per corpus item, one column per class in the given order.
    pub fn from_corpus(corpus: &Corpus, classes: &[SmellClass]) -> Result<LabelMatrix> {
        let mut rows = Vec::with_capacity(corpus.len());
        for item in corpus.items() {
            let labels = item
                .labels()
                .ok_or_else(|| Error::Unlabeled(item.id().to_string()))?;
            rows.push(classes.iter().map(|&c| labels.contains(c)).collect());
        }
        Ok(LabelMatrix {
            classes: classes.to_vec(),
            rows,
        })
    }

    pub fn from_rows(classes: Vec<SmellClass>, rows: Vec<Vec<bool>>) -> Result<LabelMatrix> {
        let width = classes.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != width) {
            return Err(Error::ShapeMismatch(format!(
                "label row {bad} has {} entries, expected {width}",
                rows[bad].len()
            )));
        }
        Ok(LabelMatrix { classes, rows })
    }

    pub fn classes(&self) -> &[SmellClass] {
        &self.classes
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_labels(&self) -> usize {
        self.classes.len()
    }

    pub fn get(&self, row: usize, label: usize) -> bool {
        self.rows[row][label]
    }

    pub fn row(&self, row: usize) -> &[bool] {
        &self.rows[row]
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    pub fn count_positive(&self, label: usize) -> usize {
        self.rows.iter().filter(|r| r[label]).count()
    }

    pub fn push_row(&mut self, row: Vec<bool>) {
        debug_assert_eq!(row.len(), self.classes.len());
        self.rows.push(row);
    }
}

/// Classes with at least one positive item, in declaration order.
pub fn present_classes(corpus: &Corpus) -> Vec<SmellClass> {
    SmellClass::ALL
        .into_iter()
        .filter(|&c| {
            corpus
                .items()
                .iter()
                .any(|item| item.labels().is_some_and(|l| l.contains(c)))
        })
        .collect()
}

/// Label every corpus item from its own findings. Items that already
/// carry labels are re-labeled; smell-free items keep an empty label set
/// rather than being dropped.
pub fn autolabel(corpus: &Corpus, mode: DetectMode, ctx: &DetectContext) -> Corpus {
    let items = corpus
        .items()
        .iter()
        .map(|item| {
            let requirement = item.requirement().clone();
            let findings = detect(&requirement, mode, ctx);
            CorpusItem::Labeled(LabeledRequirement::from_findings(requirement, findings))
        })
        .collect();
    Corpus::from_validated_items(items)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(text: &str) -> Requirement {
        Requirement::new("R1", "", text, crate::corpus::Provenance::Other).unwrap()
    }

    fn classes(findings: &[SmellFinding]) -> Vec<SmellClass> {
        findings.iter().map(|f| f.smell).collect()
    }

    #[test]
    fn pos_proxy_example_sentence() {
        let ctx = DetectContext::default();
        let findings = detect(
            &req("The system shall provide a better and more intuitive interface which is easy to use."),
            DetectMode::PosProxy,
            &ctx,
        );
        let got: Vec<(SmellClass, usize)> =
            findings.iter().map(|f| (f.smell, f.token_range.0)).collect();
        assert_eq!(
            got,
            vec![
                (SmellClass::Comparatives, 5),     // better
                (SmellClass::Comparatives, 7),     // more
                (SmellClass::SubjectiveLanguage, 8), // intuitive
                (SmellClass::VaguePronouns, 10),   // which
                (SmellClass::SubjectiveLanguage, 12), // easy
            ]
        );
    }

    #[test]
    fn lexicon_open_ended_phrase_is_single_finding() {
        let ctx = DetectContext::default();
        let findings = detect(
            &req("The response shall be as fast as possible."),
            DetectMode::Lexicon,
            &ctx,
        );
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].smell, SmellClass::OpenEndedTerms);
        assert_eq!(findings[0].evidence, "as fast as possible");
        assert_eq!(findings[0].token_range, (4, 7));
    }

    #[test]
    fn clean_sentence_has_no_findings_in_any_mode() {
        let ctx = DetectContext::default();
        let r = req("The vehicle shall stop within 10 m.");
        assert!(detect(&r, DetectMode::PosProxy, &ctx).is_empty());
        assert!(detect(&r, DetectMode::Lexicon, &ctx).is_empty());
    }

    #[test]
    fn phrase_match_survives_internal_punctuation() {
        let ctx = DetectContext::default();
        let findings = detect(
            &req("Formats shall include, but not limited to, PDF."),
            DetectMode::Lexicon,
            &ctx,
        );
        // "including but not limited to" does not match here, but "not"
        // does, and the comma between words is not part of any finding.
        assert_eq!(classes(&findings), vec![SmellClass::NegativeStatements]);

        let findings = detect(
            &req("Formats shall be including, but not limited to, PDF."),
            DetectMode::Lexicon,
            &ctx,
        );
        assert_eq!(classes(&findings), vec![SmellClass::OpenEndedTerms]);
        assert_eq!(findings[0].evidence, "including but not limited to");
    }

    #[test]
    fn longer_phrase_shadows_contained_term() {
        let ctx = DetectContext::default();
        // "not" is a negative-statement term but sits inside the
        // open-ended phrase, which wins by length.
        let findings = detect(
            &req("The importer shall accept files including but not limited to PDF."),
            DetectMode::Lexicon,
            &ctx,
        );
        assert_eq!(classes(&findings), vec![SmellClass::OpenEndedTerms]);
        assert_eq!(findings[0].token_range, (5, 9));
    }

    #[test]
    fn pos_proxy_never_emits_extended_classes() {
        let ctx = DetectContext::default();
        let texts = [
            "Details are TBD and to be defined, see above.",
            "Scale as applicable, if possible, where feasible.",
            "Do not stop, never fail, no exceptions, etc.",
        ];
        for text in texts {
            for finding in detect(&req(text), DetectMode::PosProxy, &ctx) {
                assert!(
                    SmellClass::CORE.contains(&finding.smell),
                    "{:?} leaked from pos_proxy on {text:?}",
                    finding.smell
                );
            }
        }
    }

    #[test]
    fn equal_length_tie_breaks_on_class_name() {
        let ctx = {
            let mut ctx = DetectContext::default();
            // Force a tie: the same word in two classes.
            ctx.smell_lexicons.insert_term(SmellClass::Superlatives, "extreme");
            ctx.smell_lexicons.insert_term(SmellClass::Comparatives, "extreme");
            ctx
        };
        let findings = detect(&req("An extreme case."), DetectMode::Lexicon, &ctx);
        assert_eq!(findings.len(), 1);
        // COMPARATIVES < SUPERLATIVES lexicographically.
        assert_eq!(findings[0].smell, SmellClass::Comparatives);
    }

    #[test]
    fn detect_is_deterministic() {
        let ctx = DetectContext::default();
        let r = req("This is the best and most user-friendly system, etc.");
        for mode in [DetectMode::PosProxy, DetectMode::Lexicon] {
            assert_eq!(detect(&r, mode, &ctx), detect(&r, mode, &ctx));
        }
    }

    #[test]
    fn autolabel_assigns_union_of_finding_classes() {
        let ctx = DetectContext::default();
        let corpus = Corpus::new(vec![
            CorpusItem::Unlabeled(req_with_id("R1",
                "The system shall provide a better and more intuitive interface which is easy to use.")),
            CorpusItem::Unlabeled(req_with_id("R2", "The response shall be as fast as possible.")),
        ])
        .unwrap();
        let labeled = autolabel(&corpus, DetectMode::PosProxy, &ctx);
        let expected_first: LabelSet = [
            SmellClass::Comparatives,
            SmellClass::SubjectiveLanguage,
            SmellClass::VaguePronouns,
        ]
        .into_iter()
        .collect();
        let expected_second: LabelSet =
            [SmellClass::SubjectiveLanguage].into_iter().collect();
        assert_eq!(labeled.items()[0].labels(), Some(&expected_first));
        assert_eq!(labeled.items()[1].labels(), Some(&expected_second));
    }

    #[test]
    fn autolabel_keeps_smell_free_items() {
        let ctx = DetectContext::default();
        let corpus = Corpus::new(vec![CorpusItem::Unlabeled(req_with_id(
            "R1",
            "The vehicle shall stop within 10 m.",
        ))])
        .unwrap();
        let labeled = autolabel(&corpus, DetectMode::Lexicon, &ctx);
        assert_eq!(labeled.len(), 1);
        assert!(labeled.items()[0].labels().unwrap().is_empty());
    }

    #[test]
    fn autolabel_empty_corpus() {
        let ctx = DetectContext::default();
        let corpus = Corpus::new(vec![]).unwrap();
        assert_eq!(autolabel(&corpus, DetectMode::PosProxy, &ctx).len(), 0);
    }

    #[test]
    fn class_names_round_trip() {
        for class in SmellClass::ALL {
            assert_eq!(SmellClass::from_name(class.name()), Some(class));
            let json = serde_json::to_string(&class).unwrap();
            assert_eq!(json, format!("\"{}\"", class.name()));
        }
    }

    fn req_with_id(id: &str, text: &str) -> Requirement {
        Requirement::new(id, "", text, crate::corpus::Provenance::Other).unwrap()
    }
}
