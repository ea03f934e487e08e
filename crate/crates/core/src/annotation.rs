//! MIRIAM-style annotations: biology qualifiers plus normalized resource URIs.
//!
//! Every accepted URI form is reduced to the single normal form
//! `identifiers.org/<namespace>/<id>`. Accepted inputs are the MIRIAM URN
//! form (`urn:miriam:<ns>:<id>`, %-escapes decoded), identifiers.org URLs
//! (`http://` or `https://`, optional `www.`), and the normal form itself.
//! Normalization is idempotent.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("unrecognized URI scheme or form: `{0}`")]
pub struct UnrecognizedUriScheme(pub String);

/// Resource URI in the normal form `identifiers.org/<namespace>/<id>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NormalizedUri(String);

impl NormalizedUri {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The `<namespace>` component.
    pub fn namespace(&self) -> &str {
        self.0
            .trim_start_matches("identifiers.org/")
            .split('/')
            .next()
            .unwrap_or("")
    }

    /// The `<id>` component (everything after the namespace).
    pub fn entity_id(&self) -> &str {
        let rest = self.0.trim_start_matches("identifiers.org/");
        rest.split_once('/').map(|(_, id)| id).unwrap_or("")
    }

    /// Build directly from components (both must be nonempty).
    pub fn from_parts(namespace: &str, id: &str) -> Result<Self, UnrecognizedUriScheme> {
        if namespace.is_empty() || id.is_empty() {
            return Err(UnrecognizedUriScheme(format!("{namespace}/{id}")));
        }
        Ok(NormalizedUri(format!("identifiers.org/{namespace}/{id}")))
    }
}

impl fmt::Display for NormalizedUri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Normalize any accepted URI form; idempotent on its own output.
pub fn normalize_uri(raw: &str) -> Result<NormalizedUri, UnrecognizedUriScheme> {
    let raw = raw.trim();
    let lower = raw.to_ascii_lowercase();
    if let Some(rest) = strip_prefix_ci(raw, "urn:miriam:") {
        let (ns, id) = rest
            .split_once(':')
            .ok_or_else(|| UnrecognizedUriScheme(raw.to_string()))?;
        return NormalizedUri::from_parts(&percent_decode(ns), &percent_decode(id));
    }
    for prefix in [
        "http://identifiers.org/",
        "https://identifiers.org/",
        "http://www.identifiers.org/",
        "https://www.identifiers.org/",
        "identifiers.org/",
    ] {
        if lower.starts_with(prefix) {
            let rest = &raw[prefix.len()..];
            let (ns, id) = rest
                .split_once('/')
                .ok_or_else(|| UnrecognizedUriScheme(raw.to_string()))?;
            return NormalizedUri::from_parts(&percent_decode(ns), &percent_decode(id));
        }
    }
    Err(UnrecognizedUriScheme(raw.to_string()))
}

fn strip_prefix_ci<'a>(s: &'a str, prefix: &str) -> Option<&'a str> {
    if s.len() >= prefix.len() && s[..prefix.len()].eq_ignore_ascii_case(prefix) {
        Some(&s[prefix.len()..])
    } else {
        None
    }
}

/// Decode %XX escapes; malformed escapes are left verbatim, which keeps the
/// function idempotent on already-decoded text.
fn percent_decode(s: &str) -> String {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            if let Some(hex) = bytes.get(i + 1..i + 3).and_then(|h| std::str::from_utf8(h).ok()) {
                if let Ok(v) = u8::from_str_radix(hex, 16) {
                    out.push(v);
                    i += 3;
                    continue;
                }
            }
        }
        out.push(bytes[i]);
        i += 1;
    }
    String::from_utf8(out).unwrap_or_else(|_| s.to_string())
}

/// Biology/model qualifier of an annotation entry.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Qualifier {
    Is,
    IsVersionOf,
    HasPart,
    IsDescribedBy,
    Other(String),
}

impl Qualifier {
    pub fn parse(s: &str) -> Qualifier {
        match s {
            "is" => Qualifier::Is,
            "isVersionOf" => Qualifier::IsVersionOf,
            "hasPart" => Qualifier::HasPart,
            "isDescribedBy" => Qualifier::IsDescribedBy,
            other => Qualifier::Other(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Qualifier::Is => "is",
            Qualifier::IsVersionOf => "isVersionOf",
            Qualifier::HasPart => "hasPart",
            Qualifier::IsDescribedBy => "isDescribedBy",
            Qualifier::Other(s) => s,
        }
    }
}

impl fmt::Display for Qualifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Qualifier {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Qualifier {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(Qualifier::parse(&s))
    }
}

/// Deduplicated set of (qualifier, normalized URI) claims on one element.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnnotationSet {
    entries: BTreeSet<(Qualifier, NormalizedUri)>,
}

impl AnnotationSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, qualifier: Qualifier, uri: NormalizedUri) -> bool {
        self.entries.insert((qualifier, uri))
    }

    /// Remove an entry; returns false (no-op) when it was not present.
    pub fn remove(&mut self, qualifier: &Qualifier, uri: &NormalizedUri) -> bool {
        self.entries.remove(&(qualifier.clone(), uri.clone()))
    }

    pub fn contains(&self, qualifier: &Qualifier, uri: &NormalizedUri) -> bool {
        self.entries.contains(&(qualifier.clone(), uri.clone()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Qualifier, NormalizedUri)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// URIs carried by `is`-qualified entries.
    pub fn is_uris(&self) -> BTreeSet<&NormalizedUri> {
        self.entries
            .iter()
            .filter(|(q, _)| *q == Qualifier::Is)
            .map(|(_, u)| u)
            .collect()
    }

    /// All URIs regardless of qualifier.
    pub fn all_uris(&self) -> BTreeSet<&NormalizedUri> {
        self.entries.iter().map(|(_, u)| u).collect()
    }

    /// Set union (used by merge).
    pub fn union(&self, other: &AnnotationSet) -> AnnotationSet {
        AnnotationSet {
            entries: self.entries.union(&other.entries).cloned().collect(),
        }
    }

    /// Stable one-line rendering used for attribute comparison and reports.
    pub fn canonical_text(&self) -> String {
        self.entries
            .iter()
            .map(|(q, u)| format!("{q} {u}"))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl FromIterator<(Qualifier, NormalizedUri)> for AnnotationSet {
    fn from_iter<I: IntoIterator<Item = (Qualifier, NormalizedUri)>>(iter: I) -> Self {
        AnnotationSet {
            entries: iter.into_iter().collect(),
        }
    }
}

/// Read-only oracle answering URI equivalence queries (cross-reference
/// closure). Implemented by the annotation store; any implementation must be
/// safe for concurrent reads.
pub trait UriEquivalence: Sync {
    /// The full equivalence class of `uri`, always containing `uri` itself.
    fn equivalence_class(&self, uri: &NormalizedUri) -> BTreeSet<NormalizedUri>;
}
