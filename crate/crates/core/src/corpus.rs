//! Requirements corpus: data model, JSONL/CSV ingestion, fold splitting,
//! and descriptive statistics.
//!
//! Corpus values are immutable once constructed. Item order is the file
//! order and is preserved through every load/save round trip.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{component, sub_rng};
use crate::smells::{LabelSet, SmellClass, SmellFinding};

pub const SCHEMA_VERSION: u32 = 1;

/// Where a requirement came from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedSource,
    Pure,
    Synthetic,
    #[default]
    Other,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::ClosedSource => "closed_source",
            Provenance::Pure => "pure",
            Provenance::Synthetic => "synthetic",
            Provenance::Other => "other",
        }
    }

    pub fn from_name(name: &str) -> Option<Provenance> {
        match name {
            "closed_source" => Some(Provenance::ClosedSource),
            "pure" => Some(Provenance::Pure),
            "synthetic" => Some(Provenance::Synthetic),
            "other" | "" => Some(Provenance::Other),
            _ => None,
        }
    }
}

/// One natural-language requirement statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    pub id: String,
    pub project: String,
    pub text: String,
    pub provenance: Provenance,
}

impl Requirement {
    pub fn new(
        id: impl Into<String>,
        project: impl Into<String>,
        text: impl Into<String>,
        provenance: Provenance,
    ) -> Result<Requirement> {
        let id = id.into();
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::InvalidArgument(format!(
                "requirement \"{id}\": text is empty"
            )));
        }
        Ok(Requirement {
            id,
            project: project.into(),
            text,
            provenance,
        })
    }
}

/// A requirement plus its label assignment. When findings are present the
/// labels are exactly the classes appearing in them; imported labels come
/// with an empty finding list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledRequirement {
    requirement: Requirement,
    labels: LabelSet,
    findings: Vec<SmellFinding>,
}

impl LabeledRequirement {
    /// Build from detection output; labels are derived from the findings.
    pub fn from_findings(requirement: Requirement, findings: Vec<SmellFinding>) -> Self {
        let labels = findings.iter().map(|f| f.smell).collect();
        LabeledRequirement {
            requirement,
            labels,
            findings,
        }
    }

    /// Build from imported labels (no findings recorded).
    pub fn with_labels(requirement: Requirement, labels: LabelSet) -> Self {
        LabeledRequirement {
            requirement,
            labels,
            findings: Vec::new(),
        }
    }

    pub fn requirement(&self) -> &Requirement {
        &self.requirement
    }

    pub fn labels(&self) -> &LabelSet {
        &self.labels
    }

    pub fn findings(&self) -> &[SmellFinding] {
        &self.findings
    }
}

/// A corpus item is either bare or labeled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusItem {
    Unlabeled(Requirement),
    Labeled(LabeledRequirement),
}

impl CorpusItem {
    pub fn requirement(&self) -> &Requirement {
        match self {
            CorpusItem::Unlabeled(r) => r,
            CorpusItem::Labeled(l) => l.requirement(),
        }
    }

    pub fn id(&self) -> &str {
        &self.requirement().id
    }

    pub fn labels(&self) -> Option<&LabelSet> {
        match self {
            CorpusItem::Unlabeled(_) => None,
            CorpusItem::Labeled(l) => Some(l.labels()),
        }
    }

    pub fn findings(&self) -> &[SmellFinding] {
        match self {
            CorpusItem::Unlabeled(_) => &[],
            CorpusItem::Labeled(l) => l.findings(),
        }
    }
}

/// Ordered, id-unique collection of requirements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    items: Vec<CorpusItem>,
    pub schema_version: u32,
}

impl Corpus {
    pub fn new(items: Vec<CorpusItem>) -> Result<Corpus> {
        let mut seen = BTreeSet::new();
        for item in &items {
            if !seen.insert(item.id().to_string()) {
                return Err(Error::DuplicateId(item.id().to_string()));
            }
        }
        Ok(Corpus {
            items,
            schema_version: SCHEMA_VERSION,
        })
    }

    /// Construct from items whose ids are already known unique (e.g. a
    /// relabeled copy of an existing corpus).
    pub(crate) fn from_validated_items(items: Vec<CorpusItem>) -> Corpus {
        Corpus {
            items,
            schema_version: SCHEMA_VERSION,
        }
    }

    pub fn items(&self) -> &[CorpusItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Ids in item order.
    pub fn ids(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.id()).collect()
    }
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

#[derive(Serialize, Deserialize)]
struct JsonRecord {
    id: String,
    #[serde(default)]
    project: String,
    text: String,
    #[serde(default)]
    provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<SmellClass>>,
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    let content = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        CorpusFormat::Jsonl => Corpus::from_jsonl_str(&content),
        CorpusFormat::Csv => Corpus::from_csv_str(&content),
    }
}

pub fn save_corpus(corpus: &Corpus, path: &Path, format: CorpusFormat) -> Result<()> {
    let content = match format {
        CorpusFormat::Jsonl => corpus.to_jsonl_string(),
        CorpusFormat::Csv => corpus.to_csv_string(),
    };
    std::fs::write(path, content).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

impl Corpus {
    pub fn from_jsonl_str(content: &str) -> Result<Corpus> {
        let mut items = Vec::new();
        for (idx, line) in content.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let record: JsonRecord = serde_json::from_str(line)
                .map_err(|e| Error::malformed(line_no, e.to_string()))?;
            items.push(record_to_item(record, line_no)?);
        }
        check_order_and_build(items)
    }

    pub fn from_csv_str(content: &str) -> Result<Corpus> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(content.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::malformed(1, e.to_string()))?
            .clone();
        let mut column = BTreeMap::new();
        for (i, name) in headers.iter().enumerate() {
            column.insert(name.to_string(), i);
        }
        for required in ["id", "project", "text", "provenance", "labels"] {
            if !column.contains_key(required) {
                return Err(Error::malformed(
                    1,
                    format!("missing column \"{required}\""),
                ));
            }
        }
        let mut items = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e
                    .position()
                    .map(|p| p.line() as usize)
                    .unwrap_or_default();
                Error::malformed(line, e.to_string())
            })?;
            let line_no = record
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or_default();
            let field = |name: &str| record.get(column[name]).unwrap_or("").to_string();
            let labels_cell = field("labels");
            let labels = if labels_cell.is_empty() {
                None
            } else {
                let mut parsed = Vec::new();
                for name in labels_cell.split(';').filter(|s| !s.is_empty()) {
                    parsed.push(SmellClass::from_name(name.trim()).ok_or_else(|| {
                        Error::malformed(
                            line_no,
                            format!("field \"labels\": unknown class \"{name}\""),
                        )
                    })?);
                }
                Some(parsed)
            };
            let record = JsonRecord {
                id: field("id"),
                project: field("project"),
                text: field("text"),
                provenance: Provenance::from_name(&field("provenance")).ok_or_else(|| {
                    Error::malformed(
                        line_no,
                        format!(
                            "field \"provenance\": unknown value \"{}\"",
                            field("provenance")
                        ),
                    )
                })?,
                labels,
            };
            items.push(record_to_item(record, line_no)?);
        }
        check_order_and_build(items)
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            let r = item.requirement();
            let record = JsonRecord {
                id: r.id.clone(),
                project: r.project.clone(),
                text: r.text.clone(),
                provenance: r.provenance,
                labels: item.labels().map(|l| l.iter().collect()),
            };
            out.push_str(&serde_json::to_string(&record).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    /// CSV export. An empty labels cell means "unlabeled", so a labeled
    /// item with zero labels degrades to unlabeled through this format;
    /// JSONL keeps the distinction.
    pub fn to_csv_string(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(["id", "project", "text", "provenance", "labels"])
            .expect("header writes");
        for item in &self.items {
            let r = item.requirement();
            let labels = item
                .labels()
                .map(|l| {
                    l.iter()
                        .map(|c| c.name().to_string())
                        .collect::<Vec<_>>()
                        .join(";")
                })
                .unwrap_or_default();
            writer
                .write_record([
                    r.id.as_str(),
                    r.project.as_str(),
                    r.text.as_str(),
                    r.provenance.name(),
                    labels.as_str(),
                ])
                .expect("record writes");
        }
        String::from_utf8(writer.into_inner().expect("writer flushes")).expect("utf-8 output")
    }
}

fn record_to_item(record: JsonRecord, line_no: usize) -> Result<CorpusItem> {
    if record.text.trim().is_empty() {
        return Err(Error::malformed(line_no, "field \"text\" is empty"));
    }
    let requirement = Requirement {
        id: record.id,
        project: record.project,
        text: record.text,
        provenance: record.provenance,
    };
    Ok(match record.labels {
        None => CorpusItem::Unlabeled(requirement),
        Some(labels) => CorpusItem::Labeled(LabeledRequirement::with_labels(
            requirement,
            labels.into_iter().collect(),
        )),
    })
}

fn check_order_and_build(items: Vec<CorpusItem>) -> Result<Corpus> {
    Corpus::new(items)
}

// ---------------------------------------------------------------------------
// Fold splitting
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldMode {
    Random,
    IterativeStratified,
}

/// Assignment of every corpus item to exactly one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.assignments.get(id).copied()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &fold in self.assignments.values() {
            sizes[fold] += 1;
        }
        sizes
    }
}

/// Split a corpus into `k` folds. `random` deals shuffled items into
/// folds whose sizes differ by at most one; `iterative_stratified`
/// distributes each label proportionally, processing the rarest label
/// first. Identical `(corpus, k, mode, seed)` always yields the same plan.
pub fn split_folds(corpus: &Corpus, k: usize, mode: FoldMode, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be >= 2, got {k}")));
    }
    if k > corpus.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds corpus size {}",
            corpus.len()
        )));
    }
    let mut rng = sub_rng(seed, component::FOLDS, 0);
    let assignments = match mode {
        FoldMode::Random => {
            let mut order: Vec<usize> = (0..corpus.len()).collect();
            order.shuffle(&mut rng);
            let n = corpus.len();
            let mut assignments = BTreeMap::new();
            let mut cursor = 0;
            for fold in 0..k {
                let size = n / k + usize::from(fold < n % k);
                for &idx in &order[cursor..cursor + size] {
                    assignments.insert(corpus.items[idx].id().to_string(), fold);
                }
                cursor += size;
            }
            assignments
        }
        FoldMode::IterativeStratified => stratified_assignments(corpus, k, &mut rng),
    };
    Ok(FoldPlan { k, assignments })
}

/// Greedy iterative stratification. Integer scores keep the fold choice
/// exact: a fold's desire for label `l` is `count_l - k * assigned_l`,
/// its spare capacity `n - k * size`.
fn stratified_assignments(
    corpus: &Corpus,
    k: usize,
    rng: &mut impl Rng,
) -> BTreeMap<String, usize> {
    let items = corpus.items();
    let n = items.len();
    let item_labels: Vec<Vec<SmellClass>> = items
        .iter()
        .map(|item| item.labels().map(|l| l.iter().collect()).unwrap_or_default())
        .collect();

    let mut label_total: BTreeMap<SmellClass, usize> = BTreeMap::new();
    for labels in &item_labels {
        for &class in labels {
            *label_total.entry(class).or_insert(0) += 1;
        }
    }

    let mut assigned_per_label: BTreeMap<SmellClass, Vec<usize>> = label_total
        .keys()
        .map(|&c| (c, vec![0usize; k]))
        .collect();
    let mut fold_sizes = vec![0usize; k];
    let mut unassigned = vec![true; n];
    let mut assignments = BTreeMap::new();

    let mut assign = |idx: usize,
                      fold: usize,
                      unassigned: &mut Vec<bool>,
                      fold_sizes: &mut Vec<usize>,
                      assigned_per_label: &mut BTreeMap<SmellClass, Vec<usize>>,
                      assignments: &mut BTreeMap<String, usize>| {
        unassigned[idx] = false;
        fold_sizes[fold] += 1;
        for &class in &item_labels[idx] {
            assigned_per_label.get_mut(&class).unwrap()[fold] += 1;
        }
        assignments.insert(items[idx].id().to_string(), fold);
    };

    loop {
        // Rarest label with unassigned items; class order breaks ties.
        let mut picked: Option<(SmellClass, usize)> = None;
        for &class in SmellClass::ALL.iter() {
            if !label_total.contains_key(&class) {
                continue;
            }
            let remaining = (0..n)
                .filter(|&i| unassigned[i] && item_labels[i].contains(&class))
                .count();
            if remaining == 0 {
                continue;
            }
            if picked.map_or(true, |(_, best)| remaining < best) {
                picked = Some((class, remaining));
            }
        }
        let Some((class, _)) = picked else { break };

        let mut candidates: Vec<usize> = (0..n)
            .filter(|&i| unassigned[i] && item_labels[i].contains(&class))
            .collect();
        candidates.shuffle(rng);
        for idx in candidates {
            if !unassigned[idx] {
                continue;
            }
            let desire = |fold: usize| {
                label_total[&class] as i64 - (k * assigned_per_label[&class][fold]) as i64
            };
            let spare = |fold: usize| n as i64 - (k * fold_sizes[fold]) as i64;
            let fold = pick_fold(k, desire, spare, rng);
            assign(
                idx,
                fold,
                &mut unassigned,
                &mut fold_sizes,
                &mut assigned_per_label,
                &mut assignments,
            );
        }
    }

    // Items with no labels at all: balance by spare capacity.
    let mut leftovers: Vec<usize> = (0..n).filter(|&i| unassigned[i]).collect();
    leftovers.shuffle(rng);
    for idx in leftovers {
        let spare = |fold: usize| n as i64 - (k * fold_sizes[fold]) as i64;
        let fold = pick_fold(k, spare, spare, rng);
        assign(
            idx,
            fold,
            &mut unassigned,
            &mut fold_sizes,
            &mut assigned_per_label,
            &mut assignments,
        );
    }
    assignments
}

fn pick_fold(
    k: usize,
    primary: impl Fn(usize) -> i64,
    secondary: impl Fn(usize) -> i64,
    rng: &mut impl Rng,
) -> usize {
    let best_primary = (0..k).map(&primary).max().unwrap();
    let tied: Vec<usize> = (0..k).filter(|&f| primary(f) == best_primary).collect();
    if tied.len() == 1 {
        return tied[0];
    }
    let best_secondary = tied.iter().map(|&f| secondary(f)).max().unwrap();
    let tied: Vec<usize> = tied
        .into_iter()
        .filter(|&f| secondary(f) == best_secondary)
        .collect();
    tied[rng.gen_range(0..tied.len())]
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

/// Class counts and labels-per-requirement histogram over a labeled
/// corpus. Classes that never occur are omitted from `class_counts`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsReport {
    pub class_counts: BTreeMap<SmellClass, usize>,
    pub label_count_histogram: BTreeMap<usize, usize>,
    pub total: usize,
}

pub fn corpus_stats(corpus: &Corpus) -> Result<StatsReport> {
    let mut class_counts = BTreeMap::new();
    let mut histogram = BTreeMap::new();
    for item in corpus.items() {
        let labels = item
            .labels()
            .ok_or_else(|| Error::Unlabeled(item.id().to_string()))?;
        *histogram.entry(labels.len()).or_insert(0) += 1;
        for class in labels.iter() {
            *class_counts.entry(class).or_insert(0) += 1;
        }
    }
    Ok(StatsReport {
        class_counts,
        label_count_histogram: histogram,
        total: corpus.len(),
    })
}
