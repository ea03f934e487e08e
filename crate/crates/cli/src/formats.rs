//! Response payload builders shared by the CLI and the HTTP service.
//!
//! Both frontends render results through these functions, which is what
//! makes CLI output and HTTP bodies byte-identical for the same operation
//! and format.  JSON payloads are pretty-printed and newline-terminated;
//! TSV payloads use the frozen tab-separated layouts of the core crate.

use serde::Serialize;

use sbmlkit::annodb::EntityRecord;
use sbmlkit::balance::{balance_report_tsv, BalancedSet, BalancingProblem};
use sbmlkit::cluster::{cluster_report_tsv, Fingerprint, SimilarityGraph};
use sbmlkit::diffmerge::{ConflictReport, DiffReport, MergeOutcome, RenameEntry};
use sbmlkit::model::{InvalidModel, ValidationReport};
use sbmlkit::sbo::{assignment_log_tsv, AssignmentLogEntry};
use sbmlkit::ModelDocument;

use crate::store::canonical_bytes_and_hash;

/// Structured-output format; every operation offers JSON, tabular ones
/// also offer TSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Tsv,
}

/// Canonical JSON rendering: pretty-printed, newline-terminated.
pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("payload types serialize");
    out.push(b'\n');
    out
}

/// A model result: canonical SBML text plus its content handle.
#[derive(Debug, Clone, Serialize)]
pub struct ModelBody {
    pub model: String,
    pub hash: String,
}

pub fn model_body(doc: &ModelDocument) -> Result<ModelBody, InvalidModel> {
    let (bytes, hash) = canonical_bytes_and_hash(doc)?;
    Ok(ModelBody {
        model: String::from_utf8(bytes).expect("canonical SBML is UTF-8"),
        hash,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StoredBody {
    pub hash: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct MergeBody {
    pub model: String,
    pub hash: String,
    /// Conflicts resolved by the default policy (always empty under `fail`).
    pub conflicts: ConflictReport,
    pub renames: Vec<RenameEntry>,
}

pub fn merge_body(outcome: &MergeOutcome) -> Result<MergeBody, InvalidModel> {
    let ModelBody { model, hash } = model_body(&outcome.document)?;
    Ok(MergeBody {
        model,
        hash,
        conflicts: outcome.conflicts.clone(),
        renames: outcome.renames.clone(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BalanceBody {
    pub model: String,
    pub hash: String,
    /// The balancing report in its TSV layout.
    pub report: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SboBody {
    pub model: String,
    pub hash: String,
    pub log: Vec<AssignmentLogEntry>,
}

/// Payload for a diff result.
pub fn diff_payload(report: &DiffReport, format: Format) -> Vec<u8> {
    match format {
        Format::Json => json_bytes(report),
        Format::Tsv => report.to_tsv().into_bytes(),
    }
}

/// Payload for a conflict report (merge failure body, exit-code-3 output).
pub fn conflict_payload(report: &ConflictReport, format: Format) -> Vec<u8> {
    match format {
        Format::Json => json_bytes(report),
        Format::Tsv => report.to_tsv().into_bytes(),
    }
}

/// Payload for a successful merge.
pub fn merge_payload(body: &MergeBody, format: Format) -> Vec<u8> {
    match format {
        Format::Json => json_bytes(body),
        Format::Tsv => conflict_payload(&body.conflicts, Format::Tsv),
    }
}

/// Payload for a balance result.
pub fn balance_payload(body: &BalanceBody, format: Format) -> Vec<u8> {
    match format {
        Format::Json => json_bytes(body),
        Format::Tsv => body.report.clone().into_bytes(),
    }
}

pub fn balance_report(problem: &BalancingProblem, balanced: &BalancedSet) -> String {
    balance_report_tsv(problem, balanced)
}

/// Payload for an SBO assignment result.
pub fn sbo_payload(body: &SboBody, format: Format) -> Vec<u8> {
    match format {
        Format::Json => json_bytes(body),
        Format::Tsv => assignment_log_tsv(&body.log).into_bytes(),
    }
}

/// Payload for a clustering result.
pub fn cluster_payload(
    fingerprints: &[Fingerprint],
    graph: &SimilarityGraph,
    format: Format,
) -> Vec<u8> {
    match format {
        Format::Json => json_bytes(graph),
        Format::Tsv => cluster_report_tsv(fingerprints, graph).into_bytes(),
    }
}

/// Payload for a validation report.
pub fn validation_payload(report: &ValidationReport, format: Format) -> Vec<u8> {
    match format {
        Format::Json => json_bytes(report),
        Format::Tsv => {
            let mut out = String::from("#path\tseverity\tcode\tmessage\n");
            for f in &report.findings {
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\n",
                    f.path, f.severity, f.code, f.message
                ));
            }
            out.into_bytes()
        }
    }
}

/// Payload for annotation-store search results.
pub fn records_payload(records: &[&EntityRecord], format: Format) -> Vec<u8> {
    match format {
        Format::Json => json_bytes(&records),
        Format::Tsv => {
            let mut out = String::from("#primary_uri\tnames\tcrossrefs\trelations\n");
            for r in records {
                let crossrefs: Vec<&str> = r.crossrefs.iter().map(|u| u.as_str()).collect();
                let relations: Vec<String> = r
                    .relations
                    .iter()
                    .map(|(rel, uri)| format!("{rel}={uri}"))
                    .collect();
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\n",
                    r.primary_uri,
                    r.names.join("|"),
                    crossrefs.join("|"),
                    relations.join("|")
                ));
            }
            out.into_bytes()
        }
    }
}

/// Cluster labels from document ids: first occurrence keeps the bare id,
/// later duplicates get `#2`, `#3`, … suffixes, in input order.
pub fn dedup_labels(ids: &[String]) -> Vec<String> {
    let mut seen: std::collections::BTreeMap<&str, usize> = std::collections::BTreeMap::new();
    ids.iter()
        .map(|id| {
            let n = seen.entry(id.as_str()).or_insert(0);
            *n += 1;
            if *n == 1 {
                id.clone()
            } else {
                format!("{id}#{n}")
            }
        })
        .collect()
}
