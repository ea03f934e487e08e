//! Element-aligned diff, annotation-aware merge, and dependency-closure split.
//!
//! Diff and merge share the matching from [`crate::semantics::match_elements`]
//! and the same attribute-level comparison. The model header (id, name,
//! level, version) is not diffed: merge keeps the first model's header, so
//! header differences can never conflict.
//!
//! Reports serialize to a five-column TSV (`path, kind, attribute, left,
//! right`, `#`-prefixed header line) and, via serde, to an equivalent JSON
//! document; both layouts are frozen in the repository docs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::UriEquivalence;
use crate::expr::format_number;
use crate::model::{
    require_valid, ElementPath, InvalidModel, ModelDocument, Reaction, SpeciesRef,
};
use crate::semantics::{match_elements, MatchScore, Matching, DEFAULT_MATCH_THRESHOLD};

/// Rendering of a missing value (absent kinetic law, absent local parameter).
pub const ABSENT: &str = "(absent)";
const NO_LAW: &str = "(none)";

// ---------------------------------------------------------------------------
// Diff
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffKind {
    Added,
    Removed,
    Changed,
}

impl DiffKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DiffKind::Added => "added",
            DiffKind::Removed => "removed",
            DiffKind::Changed => "changed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDelta {
    pub attribute: String,
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffEntry {
    pub path: ElementPath,
    pub kind: DiffKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deltas: Vec<AttributeDelta>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DiffSummary {
    pub added: usize,
    pub removed: usize,
    pub changed: usize,
    /// True when the whole-model delta is empty.
    pub identical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub summary: DiffSummary,
    /// Changed entries first (matching order), then removed, then added.
    pub entries: Vec<DiffEntry>,
    /// The element matching the comparison was based on.
    pub matching: Vec<MatchScore>,
}

impl DiffReport {
    pub fn is_identical(&self) -> bool {
        self.entries.is_empty()
    }

    /// The frozen five-column TSV layout. Added/removed entries leave the
    /// attribute and value columns empty; changed entries emit one line per
    /// attribute delta.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("#path\tkind\tattribute\tleft\tright\n");
        for entry in &self.entries {
            match entry.kind {
                DiffKind::Added | DiffKind::Removed => {
                    out.push_str(&format!("{}\t{}\t\t\t\n", entry.path, entry.kind.as_str()));
                }
                DiffKind::Changed => {
                    for d in &entry.deltas {
                        out.push_str(&format!(
                            "{}\t{}\t{}\t{}\t{}\n",
                            entry.path,
                            entry.kind.as_str(),
                            tsv_escape(&d.attribute),
                            tsv_escape(&d.left),
                            tsv_escape(&d.right)
                        ));
                    }
                }
            }
        }
        out
    }
}

fn tsv_escape(s: &str) -> String {
    if !s.contains(['\t', '\n', '\r', '\\']) {
        return s.to_string();
    }
    s.replace('\\', "\\\\")
        .replace('\t', "\\t")
        .replace('\n', "\\n")
        .replace('\r', "\\r")
}

/// Left→right id translations implied by a matching, used to compare
/// id-valued attributes across documents.
#[derive(Debug, Default)]
struct Translation {
    species: BTreeMap<String, String>,
    compartments: BTreeMap<String, String>,
}

impl Translation {
    fn from_matching(matching: &Matching) -> Translation {
        let mut t = Translation::default();
        for m in &matching.matches {
            match (&m.left, &m.right) {
                (ElementPath::Species(l), ElementPath::Species(r)) => {
                    t.species.insert(l.clone(), r.clone());
                }
                (ElementPath::Compartment(l), ElementPath::Compartment(r)) => {
                    t.compartments.insert(l.clone(), r.clone());
                }
                _ => {}
            }
        }
        t
    }

    fn species<'a>(&'a self, id: &'a str) -> &'a str {
        self.species.get(id).map(String::as_str).unwrap_or(id)
    }

    fn compartment<'a>(&'a self, id: &'a str) -> &'a str {
        self.compartments.get(id).map(String::as_str).unwrap_or(id)
    }
}

fn delta(attribute: impl Into<String>, left: impl Into<String>, right: impl Into<String>) -> AttributeDelta {
    AttributeDelta {
        attribute: attribute.into(),
        left: left.into(),
        right: right.into(),
    }
}

fn sbo_text(sbo: &Option<String>) -> String {
    sbo.clone().unwrap_or_default()
}

fn bool_text(v: bool) -> &'static str {
    if v {
        "true"
    } else {
        "false"
    }
}

/// Attribute deltas between a matched element pair. Id-valued attributes
/// (species compartments, reaction participants) are compared after
/// translating the left id through the matching; the rendered values keep
/// each document's own ids.
fn compare_elements(
    a: &ModelDocument,
    b: &ModelDocument,
    left: &ElementPath,
    right: &ElementPath,
    tr: &Translation,
) -> Vec<AttributeDelta> {
    let mut out = Vec::new();
    match (left, right) {
        (ElementPath::Compartment(l), ElementPath::Compartment(r)) => {
            let (l, r) = (a.find_compartment(l).unwrap(), b.find_compartment(r).unwrap());
            if l.name != r.name {
                out.push(delta("name", &l.name, &r.name));
            }
            if l.size != r.size {
                out.push(delta("size", format_number(l.size), format_number(r.size)));
            }
            if l.sbo != r.sbo {
                out.push(delta("sbo", sbo_text(&l.sbo), sbo_text(&r.sbo)));
            }
            if l.annotations != r.annotations {
                out.push(delta(
                    "annotations",
                    l.annotations.canonical_text(),
                    r.annotations.canonical_text(),
                ));
            }
        }
        (ElementPath::Species(l), ElementPath::Species(r)) => {
            let (l, r) = (a.find_species(l).unwrap(), b.find_species(r).unwrap());
            if l.name != r.name {
                out.push(delta("name", &l.name, &r.name));
            }
            if tr.compartment(&l.compartment) != r.compartment {
                out.push(delta("compartment", &l.compartment, &r.compartment));
            }
            if l.initial_amount != r.initial_amount {
                out.push(delta(
                    "initial_amount",
                    format_number(l.initial_amount),
                    format_number(r.initial_amount),
                ));
            }
            if l.boundary != r.boundary {
                out.push(delta("boundary", bool_text(l.boundary), bool_text(r.boundary)));
            }
            if l.constant != r.constant {
                out.push(delta("constant", bool_text(l.constant), bool_text(r.constant)));
            }
            if l.sbo != r.sbo {
                out.push(delta("sbo", sbo_text(&l.sbo), sbo_text(&r.sbo)));
            }
            if l.annotations != r.annotations {
                out.push(delta(
                    "annotations",
                    l.annotations.canonical_text(),
                    r.annotations.canonical_text(),
                ));
            }
        }
        (ElementPath::Parameter(l), ElementPath::Parameter(r)) => {
            let (l, r) = (a.find_parameter(l).unwrap(), b.find_parameter(r).unwrap());
            if l.value != r.value {
                out.push(delta("value", format_number(l.value), format_number(r.value)));
            }
            if l.sbo != r.sbo {
                out.push(delta("sbo", sbo_text(&l.sbo), sbo_text(&r.sbo)));
            }
            if l.annotations != r.annotations {
                out.push(delta(
                    "annotations",
                    l.annotations.canonical_text(),
                    r.annotations.canonical_text(),
                ));
            }
        }
        (ElementPath::Reaction(l), ElementPath::Reaction(r)) => {
            let (l, r) = (a.find_reaction(l).unwrap(), b.find_reaction(r).unwrap());
            compare_reactions(l, r, tr, &mut out);
        }
        _ => unreachable!("matching pairs same-kind elements"),
    }
    out
}

fn compare_reactions(l: &Reaction, r: &Reaction, tr: &Translation, out: &mut Vec<AttributeDelta>) {
    if l.name != r.name {
        out.push(delta("name", &l.name, &r.name));
    }
    if l.reversible != r.reversible {
        out.push(delta(
            "reversible",
            bool_text(l.reversible),
            bool_text(r.reversible),
        ));
    }
    // The matching gate guarantees the translated species sets agree per
    // side, so every left reference has exactly one right counterpart.
    let stoich = |prefix: &str, lrefs: &[SpeciesRef], rrefs: &[SpeciesRef], out: &mut Vec<AttributeDelta>| {
        for lref in lrefs {
            let translated = tr.species(&lref.species);
            let rref = rrefs
                .iter()
                .find(|x| x.species == translated)
                .expect("matched reactions have aligned participant sets");
            if lref.stoichiometry != rref.stoichiometry {
                out.push(delta(
                    format!("{prefix}-stoichiometry:{}", lref.species),
                    format_number(lref.stoichiometry),
                    format_number(rref.stoichiometry),
                ));
            }
        }
    };
    stoich("reactant", &l.reactants, &r.reactants, out);
    stoich("product", &l.products, &r.products, out);
    let lmods: BTreeSet<&str> = l.modifiers.iter().map(|m| tr.species(m)).collect();
    let rmods: BTreeSet<&str> = r.modifiers.iter().map(String::as_str).collect();
    if lmods != rmods {
        let mut lv: Vec<&str> = l.modifiers.iter().map(String::as_str).collect();
        let mut rv: Vec<&str> = r.modifiers.iter().map(String::as_str).collect();
        lv.sort_unstable();
        rv.sort_unstable();
        out.push(delta("modifiers", lv.join(", "), rv.join(", ")));
    }
    let llaw = l.kinetic_law.as_ref().map(|e| e.to_infix());
    let rlaw = r.kinetic_law.as_ref().map(|e| e.to_infix());
    if llaw != rlaw {
        out.push(delta(
            "kinetic-law",
            llaw.unwrap_or_else(|| NO_LAW.to_string()),
            rlaw.unwrap_or_else(|| NO_LAW.to_string()),
        ));
    }
    if l.sbo != r.sbo {
        out.push(delta("sbo", sbo_text(&l.sbo), sbo_text(&r.sbo)));
    }
    if l.annotations != r.annotations {
        out.push(delta(
            "annotations",
            l.annotations.canonical_text(),
            r.annotations.canonical_text(),
        ));
    }
    // Local parameters align by id only.
    let mut pids: BTreeSet<&str> = l.local_parameters.iter().map(|p| p.id.as_str()).collect();
    pids.extend(r.local_parameters.iter().map(|p| p.id.as_str()));
    for pid in pids {
        let lp = l.local_parameters.iter().find(|p| p.id == pid);
        let rp = r.local_parameters.iter().find(|p| p.id == pid);
        match (lp, rp) {
            (Some(lp), Some(rp)) => {
                if lp.value != rp.value {
                    out.push(delta(
                        format!("local:{pid}:value"),
                        format_number(lp.value),
                        format_number(rp.value),
                    ));
                }
                if lp.sbo != rp.sbo {
                    out.push(delta(
                        format!("local:{pid}:sbo"),
                        sbo_text(&lp.sbo),
                        sbo_text(&rp.sbo),
                    ));
                }
                if lp.annotations != rp.annotations {
                    out.push(delta(
                        format!("local:{pid}:annotations"),
                        lp.annotations.canonical_text(),
                        rp.annotations.canonical_text(),
                    ));
                }
            }
            (Some(lp), None) => out.push(delta(
                format!("local:{pid}"),
                format_number(lp.value),
                ABSENT,
            )),
            (None, Some(rp)) => out.push(delta(
                format!("local:{pid}"),
                ABSENT,
                format_number(rp.value),
            )),
            (None, None) => unreachable!(),
        }
    }
}

/// Element-aligned diff of two validated documents.
pub fn diff_models(
    a: &ModelDocument,
    b: &ModelDocument,
    equiv: Option<&dyn UriEquivalence>,
) -> Result<DiffReport, InvalidModel> {
    let matching = match_elements(a, b, equiv, DEFAULT_MATCH_THRESHOLD)?;
    let tr = Translation::from_matching(&matching);
    let mut entries = Vec::new();
    for m in &matching.matches {
        let deltas = compare_elements(a, b, &m.left, &m.right, &tr);
        if !deltas.is_empty() {
            entries.push(DiffEntry {
                path: m.left.clone(),
                kind: DiffKind::Changed,
                deltas,
            });
        }
    }
    for p in &matching.unmatched_left {
        entries.push(DiffEntry {
            path: p.clone(),
            kind: DiffKind::Removed,
            deltas: Vec::new(),
        });
    }
    for p in &matching.unmatched_right {
        entries.push(DiffEntry {
            path: p.clone(),
            kind: DiffKind::Added,
            deltas: Vec::new(),
        });
    }
    let summary = DiffSummary {
        added: entries.iter().filter(|e| e.kind == DiffKind::Added).count(),
        removed: entries.iter().filter(|e| e.kind == DiffKind::Removed).count(),
        changed: entries.iter().filter(|e| e.kind == DiffKind::Changed).count(),
        identical: entries.is_empty(),
    };
    Ok(DiffReport {
        summary,
        entries,
        matching: matching.matches,
    })
}

// ---------------------------------------------------------------------------
// Merge
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyChoice {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefaultPolicy {
    Fail,
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyOverride {
    /// Element path in display form (`species:glc`); `*` matches any path.
    pub path: String,
    /// Attribute name; `*` matches any attribute of the path.
    pub attribute: String,
    pub choice: PolicyChoice,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergePolicy {
    pub default: DefaultPolicy,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<PolicyOverride>,
}

impl MergePolicy {
    pub fn fail() -> Self {
        MergePolicy {
            default: DefaultPolicy::Fail,
            overrides: Vec::new(),
        }
    }

    pub fn left() -> Self {
        MergePolicy {
            default: DefaultPolicy::Left,
            overrides: Vec::new(),
        }
    }

    pub fn right() -> Self {
        MergePolicy {
            default: DefaultPolicy::Right,
            overrides: Vec::new(),
        }
    }

    /// The explicit override for (path, attribute), if any. Exact matches
    /// win over `*` wildcards; the first applicable override in file order
    /// wins among equals.
    pub fn override_for(&self, path: &ElementPath, attribute: &str) -> Option<PolicyChoice> {
        let path_text = path.to_string();
        let rank = |o: &PolicyOverride| {
            let path_ok = o.path == path_text || o.path == "*";
            let attr_ok = o.attribute == attribute || o.attribute == "*";
            if !(path_ok && attr_ok) {
                return None;
            }
            // Lower is more specific.
            Some((o.path == "*") as u8 + (o.attribute == "*") as u8)
        };
        self.overrides
            .iter()
            .filter_map(|o| rank(o).map(|r| (r, o.choice)))
            .min_by_key(|&(r, _)| r)
            .map(|(_, choice)| choice)
    }

    /// Parse override lines: `path <TAB> attribute <TAB> left|right`, with
    /// `#` comments and blank lines ignored.
    pub fn parse_overrides_tsv(text: &str) -> Result<Vec<PolicyOverride>, String> {
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(format!("line {}: expected 3 columns", i + 1));
            }
            let choice = match cols[2].trim() {
                "left" => PolicyChoice::Left,
                "right" => PolicyChoice::Right,
                other => return Err(format!("line {}: unknown choice `{other}`", i + 1)),
            };
            out.push(PolicyOverride {
                path: cols[0].trim().to_string(),
                attribute: cols[1].trim().to_string(),
                choice,
            });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    pub path: ElementPath,
    pub attribute: String,
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConflictReport {
    pub conflicts: Vec<Conflict>,
}

impl ConflictReport {
    pub fn is_empty(&self) -> bool {
        self.conflicts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.conflicts.len()
    }

    /// Same five-column TSV layout as diff reports, kind column `conflict`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("#path\tkind\tattribute\tleft\tright\n");
        for c in &self.conflicts {
            out.push_str(&format!(
                "{}\tconflict\t{}\t{}\t{}\n",
                c.path,
                tsv_escape(&c.attribute),
                tsv_escape(&c.left),
                tsv_escape(&c.right)
            ));
        }
        out
    }
}

impl fmt::Display for ConflictReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.conflicts {
            writeln!(f, "{} {}: {} != {}", c.path, c.attribute, c.left, c.right)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenameEntry {
    /// 1-based index of the source model in the merge argument list.
    pub source: usize,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeOutcome {
    pub document: ModelDocument,
    /// Conflicts resolved by the default policy (empty under `fail`, which
    /// aborts instead). Explicit overrides do not count as conflicts.
    pub conflicts: ConflictReport,
    pub renames: Vec<RenameEntry>,
}

#[derive(Debug, Error)]
pub enum MergeError {
    #[error("merge requires at least one model")]
    NoModels,
    #[error("merge aborted with {} conflict(s)", .0.len())]
    Conflict(ConflictReport),
    #[error(transparent)]
    Invalid(#[from] InvalidModel),
}

/// Merge an ordered list of models by a left fold of pairwise merges.
/// Matched elements are unified (annotations unioned, differing attributes
/// resolved by policy); unmatched elements are copied, renamed with
/// `__m<k>` (k = 1-based source index) on id collision, with every rename
/// recorded and all references rewritten.
pub fn merge_models(
    models: &[ModelDocument],
    policy: &MergePolicy,
    equiv: Option<&dyn UriEquivalence>,
) -> Result<MergeOutcome, MergeError> {
    let (first, rest) = models.split_first().ok_or(MergeError::NoModels)?;
    require_valid(first)?;
    let mut acc = first.clone();
    let mut conflicts = ConflictReport::default();
    let mut renames = Vec::new();
    for (i, next) in rest.iter().enumerate() {
        merge_pair(&mut acc, next, i + 2, policy, equiv, &mut conflicts, &mut renames)?;
    }
    if policy.default == DefaultPolicy::Fail && !conflicts.is_empty() {
        return Err(MergeError::Conflict(conflicts));
    }
    require_valid(&acc)?;
    Ok(MergeOutcome {
        document: acc,
        conflicts,
        renames,
    })
}

/// Right-document id → merged-document id, per element kind.
#[derive(Debug, Default)]
struct RightMaps {
    compartments: BTreeMap<String, String>,
    species: BTreeMap<String, String>,
    parameters: BTreeMap<String, String>,
    reactions: BTreeMap<String, String>,
}

impl RightMaps {
    fn get<'a>(map: &'a BTreeMap<String, String>, id: &'a str) -> &'a str {
        map.get(id).map(String::as_str).unwrap_or(id)
    }

    /// Combined symbol map for kinetic-law rewriting, minus locally shadowed
    /// names.
    fn law_map(&self, shadowed: &[String]) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        for m in [&self.compartments, &self.species, &self.parameters] {
            for (from, to) in m {
                if from != to && !shadowed.iter().any(|s| s == from) {
                    map.insert(from.clone(), to.clone());
                }
            }
        }
        map
    }
}

fn merge_pair(
    acc: &mut ModelDocument,
    next: &ModelDocument,
    k: usize,
    policy: &MergePolicy,
    equiv: Option<&dyn UriEquivalence>,
    conflicts: &mut ConflictReport,
    renames: &mut Vec<RenameEntry>,
) -> Result<(), MergeError> {
    let matching = match_elements(acc, next, equiv, DEFAULT_MATCH_THRESHOLD)?;
    let tr = Translation::from_matching(&matching);

    // Assign merged ids for every right element: matched → left id,
    // unmatched → own id, suffixed with `__m<k>` until collision-free.
    let mut maps = RightMaps::default();
    for m in &matching.matches {
        match (&m.left, &m.right) {
            (ElementPath::Compartment(l), ElementPath::Compartment(r)) => {
                maps.compartments.insert(r.clone(), l.clone());
            }
            (ElementPath::Species(l), ElementPath::Species(r)) => {
                maps.species.insert(r.clone(), l.clone());
            }
            (ElementPath::Parameter(l), ElementPath::Parameter(r)) => {
                maps.parameters.insert(r.clone(), l.clone());
            }
            (ElementPath::Reaction(l), ElementPath::Reaction(r)) => {
                maps.reactions.insert(r.clone(), l.clone());
            }
            _ => {}
        }
    }
    let mut taken: BTreeSet<String> = acc.element_ids().into_iter().map(str::to_string).collect();
    for path in &matching.unmatched_right {
        let (kind_map, id) = match path {
            ElementPath::Compartment(id) => (&mut maps.compartments, id),
            ElementPath::Species(id) => (&mut maps.species, id),
            ElementPath::Parameter(id) => (&mut maps.parameters, id),
            ElementPath::Reaction(id) => (&mut maps.reactions, id),
            _ => continue,
        };
        let mut merged = id.clone();
        while taken.contains(&merged) {
            merged.push_str(&format!("__m{k}"));
        }
        if merged != *id {
            renames.push(RenameEntry {
                source: k,
                from: id.clone(),
                to: merged.clone(),
            });
        }
        taken.insert(merged.clone());
        kind_map.insert(id.clone(), merged);
    }

    // Unify matched pairs.
    for m in &matching.matches {
        let deltas = compare_elements(acc, next, &m.left, &m.right, &tr);
        union_annotations(acc, next, &m.left, &m.right);
        for d in deltas {
            if d.attribute == "annotations" || d.attribute.ends_with(":annotations") {
                continue; // unioned, never a conflict
            }
            let choice = policy.override_for(&m.left, &d.attribute);
            match choice {
                Some(PolicyChoice::Left) => {}
                Some(PolicyChoice::Right) => {
                    adopt_right(acc, next, &m.left, &m.right, &d.attribute, &maps);
                }
                None => {
                    match policy.default {
                        DefaultPolicy::Fail | DefaultPolicy::Left => {}
                        DefaultPolicy::Right => {
                            adopt_right(acc, next, &m.left, &m.right, &d.attribute, &maps);
                        }
                    }
                    conflicts.conflicts.push(Conflict {
                        path: m.left.clone(),
                        attribute: d.attribute,
                        left: d.left,
                        right: d.right,
                    });
                }
            }
        }
    }
    if policy.default == DefaultPolicy::Fail && !conflicts.is_empty() {
        return Err(MergeError::Conflict(std::mem::take(conflicts)));
    }

    // Copy unmatched right elements in document order, rewriting references.
    for c in &next.compartments {
        if matching.unmatched_right.contains(&ElementPath::Compartment(c.id.clone())) {
            let mut c = c.clone();
            c.id = RightMaps::get(&maps.compartments, &c.id).to_string();
            acc.compartments.push(c);
        }
    }
    for s in &next.species {
        if matching.unmatched_right.contains(&ElementPath::Species(s.id.clone())) {
            let mut s = s.clone();
            s.id = RightMaps::get(&maps.species, &s.id).to_string();
            s.compartment = RightMaps::get(&maps.compartments, &s.compartment).to_string();
            acc.species.push(s);
        }
    }
    for p in &next.parameters {
        if matching.unmatched_right.contains(&ElementPath::Parameter(p.id.clone())) {
            let mut p = p.clone();
            p.id = RightMaps::get(&maps.parameters, &p.id).to_string();
            acc.parameters.push(p);
        }
    }
    for r in &next.reactions {
        if matching.unmatched_right.contains(&ElementPath::Reaction(r.id.clone())) {
            let mut r = r.clone();
            r.id = RightMaps::get(&maps.reactions, &r.id).to_string();
            for sref in r.reactants.iter_mut().chain(r.products.iter_mut()) {
                sref.species = RightMaps::get(&maps.species, &sref.species).to_string();
            }
            for m in &mut r.modifiers {
                *m = RightMaps::get(&maps.species, m).to_string();
            }
            if let Some(law) = &r.kinetic_law {
                let shadowed: Vec<String> =
                    r.local_parameters.iter().map(|p| p.id.clone()).collect();
                r.kinetic_law = Some(law.rename_symbols(&maps.law_map(&shadowed)));
            }
            acc.reactions.push(r);
        }
    }
    Ok(())
}

fn union_annotations(
    acc: &mut ModelDocument,
    next: &ModelDocument,
    left: &ElementPath,
    right: &ElementPath,
) {
    match (left, right) {
        (ElementPath::Compartment(l), ElementPath::Compartment(r)) => {
            let r = next.find_compartment(r).unwrap().annotations.clone();
            let c = acc.compartments.iter_mut().find(|c| &c.id == l).unwrap();
            c.annotations = c.annotations.union(&r);
        }
        (ElementPath::Species(l), ElementPath::Species(r)) => {
            let r = next.find_species(r).unwrap().annotations.clone();
            let s = acc.species.iter_mut().find(|s| &s.id == l).unwrap();
            s.annotations = s.annotations.union(&r);
        }
        (ElementPath::Parameter(l), ElementPath::Parameter(r)) => {
            let r = next.find_parameter(r).unwrap().annotations.clone();
            let p = acc.parameters.iter_mut().find(|p| &p.id == l).unwrap();
            p.annotations = p.annotations.union(&r);
        }
        (ElementPath::Reaction(l), ElementPath::Reaction(r)) => {
            let rx = next.find_reaction(r).unwrap().clone();
            let lx = acc.reactions.iter_mut().find(|x| &x.id == l).unwrap();
            lx.annotations = lx.annotations.union(&rx.annotations);
            for lp in &mut lx.local_parameters {
                if let Some(rp) = rx.local_parameters.iter().find(|p| p.id == lp.id) {
                    lp.annotations = lp.annotations.union(&rp.annotations);
                }
            }
        }
        _ => {}
    }
}

/// Overwrite one attribute of the left element with the right value,
/// translating id-valued attributes into the merged vocabulary.
fn adopt_right(
    acc: &mut ModelDocument,
    next: &ModelDocument,
    left: &ElementPath,
    right: &ElementPath,
    attribute: &str,
    maps: &RightMaps,
) {
    match (left, right) {
        (ElementPath::Compartment(l), ElementPath::Compartment(r)) => {
            let r = next.find_compartment(r).unwrap().clone();
            let c = acc.compartments.iter_mut().find(|c| &c.id == l).unwrap();
            match attribute {
                "name" => c.name = r.name,
                "size" => c.size = r.size,
                "sbo" => c.sbo = r.sbo,
                _ => {}
            }
        }
        (ElementPath::Species(l), ElementPath::Species(r)) => {
            let r = next.find_species(r).unwrap().clone();
            let s = acc.species.iter_mut().find(|s| &s.id == l).unwrap();
            match attribute {
                "name" => s.name = r.name,
                "compartment" => {
                    s.compartment = RightMaps::get(&maps.compartments, &r.compartment).to_string();
                }
                "initial_amount" => s.initial_amount = r.initial_amount,
                "boundary" => s.boundary = r.boundary,
                "constant" => s.constant = r.constant,
                "sbo" => s.sbo = r.sbo,
                _ => {}
            }
        }
        (ElementPath::Parameter(l), ElementPath::Parameter(r)) => {
            let r = next.find_parameter(r).unwrap().clone();
            let p = acc.parameters.iter_mut().find(|p| &p.id == l).unwrap();
            match attribute {
                "value" => p.value = r.value,
                "sbo" => p.sbo = r.sbo,
                _ => {}
            }
        }
        (ElementPath::Reaction(l), ElementPath::Reaction(r)) => {
            let rx = next.find_reaction(r).unwrap().clone();
            let lx = acc.reactions.iter_mut().find(|x| &x.id == l).unwrap();
            adopt_right_reaction(lx, &rx, attribute, maps);
        }
        _ => {}
    }
}

fn adopt_right_reaction(lx: &mut Reaction, rx: &Reaction, attribute: &str, maps: &RightMaps) {
    match attribute {
        "name" => lx.name = rx.name.clone(),
        "reversible" => lx.reversible = rx.reversible,
        "sbo" => lx.sbo = rx.sbo.clone(),
        "modifiers" => {
            lx.modifiers = rx
                .modifiers
                .iter()
                .map(|m| RightMaps::get(&maps.species, m).to_string())
                .collect();
        }
        "kinetic-law" => {
            let shadowed: Vec<String> = rx.local_parameters.iter().map(|p| p.id.clone()).collect();
            lx.kinetic_law = rx
                .kinetic_law
                .as_ref()
                .map(|law| law.rename_symbols(&maps.law_map(&shadowed)));
        }
        _ => {
            if let Some(sid) = attribute.strip_prefix("reactant-stoichiometry:") {
                adopt_stoichiometry(&mut lx.reactants, sid, &rx.reactants, maps);
            } else if let Some(sid) = attribute.strip_prefix("product-stoichiometry:") {
                adopt_stoichiometry(&mut lx.products, sid, &rx.products, maps);
            } else if let Some(rest) = attribute.strip_prefix("local:") {
                let (pid, field) = match rest.split_once(':') {
                    Some((pid, field)) => (pid, field),
                    None => (rest, ""),
                };
                let rp = rx.local_parameters.iter().find(|p| p.id == pid);
                match field {
                    "value" => {
                        if let (Some(lp), Some(rp)) =
                            (lx.local_parameters.iter_mut().find(|p| p.id == pid), rp)
                        {
                            lp.value = rp.value;
                        }
                    }
                    "sbo" => {
                        if let (Some(lp), Some(rp)) =
                            (lx.local_parameters.iter_mut().find(|p| p.id == pid), rp)
                        {
                            lp.sbo = rp.sbo.clone();
                        }
                    }
                    // Presence difference: adopt the right side's roster.
                    "" => match rp {
                        Some(rp) => lx.local_parameters.push(rp.clone()),
                        None => lx.local_parameters.retain(|p| p.id != pid),
                    },
                    _ => {}
                }
            }
        }
    }
}

fn adopt_stoichiometry(
    lrefs: &mut [SpeciesRef],
    left_sid: &str,
    rrefs: &[SpeciesRef],
    maps: &RightMaps,
) {
    // The right counterpart is the reference whose merged id equals left_sid.
    if let Some(rref) = rrefs
        .iter()
        .find(|x| RightMaps::get(&maps.species, &x.species) == left_sid)
    {
        if let Some(lref) = lrefs.iter_mut().find(|x| x.species == left_sid) {
            lref.stoichiometry = rref.stoichiometry;
        }
    }
}

// ---------------------------------------------------------------------------
// Split
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("no such element `{0}`")]
    NoSuchElement(String),
    #[error(transparent)]
    Invalid(#[from] InvalidModel),
}

/// Extract the dependency closure of the seed elements as a submodel.
///
/// Included reactions pull their participant species, local parameters, and
/// every species, global parameter, or compartment referenced by their
/// kinetic law; included species pull their compartment. With
/// `expand_reactions`, included species also pull every reaction touching
/// them, repeated to fixpoint.
pub fn split_model(
    doc: &ModelDocument,
    seeds: &[&str],
    expand_reactions: bool,
) -> Result<ModelDocument, SplitError> {
    require_valid(doc)?;
    let mut inc_c: BTreeSet<String> = BTreeSet::new();
    let mut inc_s: BTreeSet<String> = BTreeSet::new();
    let mut inc_p: BTreeSet<String> = BTreeSet::new();
    let mut inc_r: BTreeSet<String> = BTreeSet::new();
    for seed in seeds {
        if doc.find_compartment(seed).is_some() {
            inc_c.insert(seed.to_string());
        } else if doc.find_species(seed).is_some() {
            inc_s.insert(seed.to_string());
        } else if doc.find_parameter(seed).is_some() {
            inc_p.insert(seed.to_string());
        } else if doc.find_reaction(seed).is_some() {
            inc_r.insert(seed.to_string());
        } else {
            return Err(SplitError::NoSuchElement(seed.to_string()));
        }
    }
    loop {
        let before = (inc_c.len(), inc_s.len(), inc_p.len(), inc_r.len());
        for r in doc.reactions.iter().filter(|r| inc_r.contains(&r.id)) {
            for sref in r.reactants.iter().chain(r.products.iter()) {
                inc_s.insert(sref.species.clone());
            }
            for m in &r.modifiers {
                inc_s.insert(m.clone());
            }
            if let Some(law) = &r.kinetic_law {
                for sym in law.symbols() {
                    if r.local_parameters.iter().any(|p| p.id == sym) {
                        continue;
                    }
                    if doc.find_species(sym).is_some() {
                        inc_s.insert(sym.to_string());
                    } else if doc.find_parameter(sym).is_some() {
                        inc_p.insert(sym.to_string());
                    } else if doc.find_compartment(sym).is_some() {
                        inc_c.insert(sym.to_string());
                    }
                }
            }
        }
        for s in doc.species.iter().filter(|s| inc_s.contains(&s.id)) {
            inc_c.insert(s.compartment.clone());
        }
        if expand_reactions {
            for r in &doc.reactions {
                let touches = r
                    .reactants
                    .iter()
                    .chain(r.products.iter())
                    .any(|x| inc_s.contains(&x.species))
                    || r.modifiers.iter().any(|m| inc_s.contains(m));
                if touches {
                    inc_r.insert(r.id.clone());
                }
            }
        }
        if (inc_c.len(), inc_s.len(), inc_p.len(), inc_r.len()) == before {
            break;
        }
    }
    let mut out = ModelDocument::new(&doc.id);
    out.name = doc.name.clone();
    out.level = doc.level;
    out.version = doc.version;
    out.compartments = doc
        .compartments
        .iter()
        .filter(|c| inc_c.contains(&c.id))
        .cloned()
        .collect();
    out.species = doc
        .species
        .iter()
        .filter(|s| inc_s.contains(&s.id))
        .cloned()
        .collect();
    out.parameters = doc
        .parameters
        .iter()
        .filter(|p| inc_p.contains(&p.id))
        .cloned()
        .collect();
    out.reactions = doc
        .reactions
        .iter()
        .filter(|r| inc_r.contains(&r.id))
        .cloned()
        .collect();
    require_valid(&out)?;
    Ok(out)
}
