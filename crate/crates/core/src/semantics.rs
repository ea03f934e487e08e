//! Annotation-aware element matching across models, and annotation editing.
//!
//! Matching operates per element kind (compartments, species, parameters,
//! reactions) with a fixed score ladder:
//!
//! 1. score 1.0 when the `is`-qualified URI sets intersect, after expanding
//!    each URI through the optional cross-reference equivalence oracle;
//! 2. else score 0.8 when the element ids are equal;
//! 3. else the Jaccard index of the full (all-qualifier) URI sets, without
//!    equivalence expansion.
//!
//! Pairs scoring below the threshold (default 0.5) are discarded. The final
//! matching is greedy by descending score with ties broken by document order
//! (left first, then right), which makes `match_elements(m, m)` the identity
//! matching. Reactions additionally only match when their reactant and
//! product species sets agree after translating left species ids through the
//! species matching — the structural precondition reused by merge.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{
    normalize_uri, AnnotationSet, NormalizedUri, Qualifier, UnrecognizedUriScheme, UriEquivalence,
};
use crate::model::{require_valid, ElementPath, InvalidModel, ModelDocument, Reaction};

pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchBasis {
    #[serde(rename = "annotation-identity")]
    AnnotationIdentity,
    #[serde(rename = "id-identity")]
    IdIdentity,
    #[serde(rename = "annotation-overlap")]
    AnnotationOverlap,
}

impl MatchBasis {
    pub fn as_str(&self) -> &'static str {
        match self {
            MatchBasis::AnnotationIdentity => "annotation-identity",
            MatchBasis::IdIdentity => "id-identity",
            MatchBasis::AnnotationOverlap => "annotation-overlap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchScore {
    pub left: ElementPath,
    pub right: ElementPath,
    pub score: f64,
    pub basis: MatchBasis,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Matching {
    pub matches: Vec<MatchScore>,
    pub unmatched_left: Vec<ElementPath>,
    pub unmatched_right: Vec<ElementPath>,
}

impl Matching {
    /// Map from left element path to the matched right element path.
    pub fn left_to_right(&self) -> BTreeMap<&ElementPath, &ElementPath> {
        self.matches.iter().map(|m| (&m.left, &m.right)).collect()
    }
}

/// One element prepared for scoring.
struct Item {
    path: ElementPath,
    id: String,
    /// `is`-qualified URIs, equivalence-expanded.
    is_expanded: BTreeSet<NormalizedUri>,
    /// All URIs regardless of qualifier, unexpanded.
    all: BTreeSet<NormalizedUri>,
}

fn expand(
    uris: BTreeSet<&NormalizedUri>,
    equiv: Option<&dyn UriEquivalence>,
) -> BTreeSet<NormalizedUri> {
    match equiv {
        None => uris.into_iter().cloned().collect(),
        Some(oracle) => {
            let mut out = BTreeSet::new();
            for u in uris {
                out.extend(oracle.equivalence_class(u));
            }
            out
        }
    }
}

fn item(
    path: ElementPath,
    id: &str,
    ann: &AnnotationSet,
    equiv: Option<&dyn UriEquivalence>,
) -> Item {
    Item {
        path,
        id: id.to_string(),
        is_expanded: expand(ann.is_uris(), equiv),
        all: ann.all_uris().into_iter().cloned().collect(),
    }
}

fn score_pair(a: &Item, b: &Item) -> Option<(f64, MatchBasis)> {
    if a.is_expanded.intersection(&b.is_expanded).next().is_some() {
        return Some((1.0, MatchBasis::AnnotationIdentity));
    }
    if a.id == b.id {
        return Some((0.8, MatchBasis::IdIdentity));
    }
    let inter = a.all.intersection(&b.all).count();
    if inter == 0 {
        return None;
    }
    let union = a.all.union(&b.all).count();
    Some((inter as f64 / union as f64, MatchBasis::AnnotationOverlap))
}

/// Greedy one-to-one matching of one element kind. `gate` may veto pairs.
fn match_kind(
    left: &[Item],
    right: &[Item],
    threshold: f64,
    gate: impl Fn(usize, usize) -> bool,
    out: &mut Matching,
) {
    let mut candidates: Vec<(usize, usize, f64, MatchBasis)> = Vec::new();
    for (ai, a) in left.iter().enumerate() {
        for (bi, b) in right.iter().enumerate() {
            if let Some((score, basis)) = score_pair(a, b) {
                if score >= threshold && gate(ai, bi) {
                    candidates.push((ai, bi, score, basis));
                }
            }
        }
    }
    // Descending score; ties by left then right document order.
    candidates.sort_by(|x, y| {
        y.2.partial_cmp(&x.2)
            .unwrap()
            .then(x.0.cmp(&y.0))
            .then(x.1.cmp(&y.1))
    });
    let mut used_left = vec![false; left.len()];
    let mut used_right = vec![false; right.len()];
    for (ai, bi, score, basis) in candidates {
        if used_left[ai] || used_right[bi] {
            continue;
        }
        used_left[ai] = true;
        used_right[bi] = true;
        out.matches.push(MatchScore {
            left: left[ai].path.clone(),
            right: right[bi].path.clone(),
            score,
            basis,
        });
    }
    for (ai, a) in left.iter().enumerate() {
        if !used_left[ai] {
            out.unmatched_left.push(a.path.clone());
        }
    }
    for (bi, b) in right.iter().enumerate() {
        if !used_right[bi] {
            out.unmatched_right.push(b.path.clone());
        }
    }
}

/// Species-id sets of both reaction sides, with left ids translated through
/// the species matching, must agree for a reaction pair to be admissible.
fn reaction_sides_agree(
    left: &Reaction,
    right: &Reaction,
    translate: &BTreeMap<String, String>,
) -> bool {
    let tr = |refs: &[crate::model::SpeciesRef]| -> BTreeSet<String> {
        refs.iter()
            .map(|r| {
                translate
                    .get(&r.species)
                    .cloned()
                    .unwrap_or_else(|| r.species.clone())
            })
            .collect()
    };
    let plain = |refs: &[crate::model::SpeciesRef]| -> BTreeSet<String> {
        refs.iter().map(|r| r.species.clone()).collect()
    };
    tr(&left.reactants) == plain(&right.reactants) && tr(&left.products) == plain(&right.products)
}

/// Match the elements of two validated documents.
pub fn match_elements(
    a: &ModelDocument,
    b: &ModelDocument,
    equiv: Option<&dyn UriEquivalence>,
    threshold: f64,
) -> Result<Matching, InvalidModel> {
    require_valid(a)?;
    require_valid(b)?;
    let mut out = Matching::default();

    let comp_a: Vec<Item> = a
        .compartments
        .iter()
        .map(|c| item(ElementPath::Compartment(c.id.clone()), &c.id, &c.annotations, equiv))
        .collect();
    let comp_b: Vec<Item> = b
        .compartments
        .iter()
        .map(|c| item(ElementPath::Compartment(c.id.clone()), &c.id, &c.annotations, equiv))
        .collect();
    match_kind(&comp_a, &comp_b, threshold, |_, _| true, &mut out);

    let spec_a: Vec<Item> = a
        .species
        .iter()
        .map(|s| item(ElementPath::Species(s.id.clone()), &s.id, &s.annotations, equiv))
        .collect();
    let spec_b: Vec<Item> = b
        .species
        .iter()
        .map(|s| item(ElementPath::Species(s.id.clone()), &s.id, &s.annotations, equiv))
        .collect();
    let species_start = out.matches.len();
    match_kind(&spec_a, &spec_b, threshold, |_, _| true, &mut out);

    // Left species id → matched right species id, for the reaction gate.
    let mut species_map: BTreeMap<String, String> = BTreeMap::new();
    for m in &out.matches[species_start..] {
        if let (ElementPath::Species(l), ElementPath::Species(r)) = (&m.left, &m.right) {
            species_map.insert(l.clone(), r.clone());
        }
    }

    let par_a: Vec<Item> = a
        .parameters
        .iter()
        .map(|p| item(ElementPath::Parameter(p.id.clone()), &p.id, &p.annotations, equiv))
        .collect();
    let par_b: Vec<Item> = b
        .parameters
        .iter()
        .map(|p| item(ElementPath::Parameter(p.id.clone()), &p.id, &p.annotations, equiv))
        .collect();
    match_kind(&par_a, &par_b, threshold, |_, _| true, &mut out);

    let rxn_a: Vec<Item> = a
        .reactions
        .iter()
        .map(|r| item(ElementPath::Reaction(r.id.clone()), &r.id, &r.annotations, equiv))
        .collect();
    let rxn_b: Vec<Item> = b
        .reactions
        .iter()
        .map(|r| item(ElementPath::Reaction(r.id.clone()), &r.id, &r.annotations, equiv))
        .collect();
    match_kind(
        &rxn_a,
        &rxn_b,
        threshold,
        |ai, bi| reaction_sides_agree(&a.reactions[ai], &b.reactions[bi], &species_map),
        &mut out,
    );

    Ok(out)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemanticsError {
    #[error("no such element `{0}`")]
    NoSuchElement(String),
    #[error(transparent)]
    Uri(#[from] UnrecognizedUriScheme),
}

/// Return a new document with `(qualifier, uri)` added to the element's
/// annotation set. `element_id` is a top-level element id or
/// `<reaction>.<local parameter>`.
pub fn set_annotation(
    doc: &ModelDocument,
    element_id: &str,
    qualifier: Qualifier,
    uri: &str,
) -> Result<ModelDocument, SemanticsError> {
    let uri = normalize_uri(uri)?;
    let mut out = doc.clone();
    match out.annotations_mut(element_id) {
        Some(set) => {
            set.insert(qualifier, uri);
            Ok(out)
        }
        None => Err(SemanticsError::NoSuchElement(element_id.to_string())),
    }
}

/// Return a new document with the entry removed. The boolean is false when
/// the entry was not present (no-op; callers surface it as a warning).
pub fn remove_annotation(
    doc: &ModelDocument,
    element_id: &str,
    qualifier: &Qualifier,
    uri: &str,
) -> Result<(ModelDocument, bool), SemanticsError> {
    let uri = normalize_uri(uri)?;
    let mut out = doc.clone();
    match out.annotations_mut(element_id) {
        Some(set) => {
            let removed = set.remove(qualifier, &uri);
            Ok((out, removed))
        }
        None => Err(SemanticsError::NoSuchElement(element_id.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Compartment, Species};

    fn my_model() -> ModelDocument {
        crate::model::my_model_fixture()
    }

    #[test]
    fn self_match_is_identity() {
        let m = my_model();
        let matching = match_elements(&m, &m, None, DEFAULT_MATCH_THRESHOLD).unwrap();
        assert!(matching.unmatched_left.is_empty());
        assert!(matching.unmatched_right.is_empty());
        assert_eq!(matching.matches.len(), 6); // 1 comp + 2 species + 2 params + 1 rxn
        for m in &matching.matches {
            assert_eq!(m.left, m.right);
            assert_eq!(m.score, 0.8); // unannotated elements match by id
            assert_eq!(m.basis, MatchBasis::IdIdentity);
        }
    }

    #[test]
    fn shared_is_uri_scores_one() {
        let mut a = ModelDocument::new("a");
        a.compartments.push(Compartment::new("c", 1.0));
        a.species.push(Species::new("glc", "c", 1.0));
        let mut b = ModelDocument::new("b");
        b.compartments.push(Compartment::new("c", 1.0));
        b.species.push(Species::new("glucose", "c", 2.0));
        let uri = "identifiers.org/obo.chebi/CHEBI:17234";
        let a = set_annotation(&a, "glc", Qualifier::Is, uri).unwrap();
        let b = set_annotation(&b, "glucose", Qualifier::Is, uri).unwrap();

        let matching = match_elements(&a, &b, None, DEFAULT_MATCH_THRESHOLD).unwrap();
        let m = matching
            .matches
            .iter()
            .find(|m| m.left == ElementPath::Species("glc".into()))
            .unwrap();
        assert_eq!(m.right, ElementPath::Species("glucose".into()));
        assert_eq!(m.score, 1.0);
        assert_eq!(m.basis, MatchBasis::AnnotationIdentity);
    }

    #[test]
    fn low_jaccard_stays_unmatched() {
        // Two species sharing 1 of 3 total distinct URIs, different ids.
        let mut a = ModelDocument::new("a");
        a.compartments.push(Compartment::new("c", 1.0));
        a.species.push(Species::new("x", "c", 1.0));
        let mut b = ModelDocument::new("b");
        b.compartments.push(Compartment::new("c", 1.0));
        b.species.push(Species::new("y", "c", 1.0));
        let a = set_annotation(&a, "x", Qualifier::HasPart, "identifiers.org/u/1").unwrap();
        let a = set_annotation(&a, "x", Qualifier::HasPart, "identifiers.org/u/2").unwrap();
        let b = set_annotation(&b, "y", Qualifier::HasPart, "identifiers.org/u/1").unwrap();
        let b = set_annotation(&b, "y", Qualifier::HasPart, "identifiers.org/u/3").unwrap();

        let matching = match_elements(&a, &b, None, DEFAULT_MATCH_THRESHOLD).unwrap();
        assert!(matching
            .unmatched_left
            .contains(&ElementPath::Species("x".into())));
        assert!(matching
            .unmatched_right
            .contains(&ElementPath::Species("y".into())));

        // The same pair clears a threshold at or below 1/3.
        let loose = match_elements(&a, &b, None, 1.0 / 3.0).unwrap();
        let m = &loose.matches.iter()
            .find(|m| m.left == ElementPath::Species("x".into()))
            .unwrap();
        assert!((m.score - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.basis, MatchBasis::AnnotationOverlap);
    }

    #[test]
    fn reaction_gate_requires_matching_sides() {
        let mut a = my_model();
        let mut b = my_model();
        // Same reaction id but a different product set on the right.
        b.species.push(Species::new("C", "default", 1.0));
        b.reactions[0].products[0].species = "C".into();
        b.reactions[0].kinetic_law = None;
        a.reactions[0].kinetic_law = None;
        let matching = match_elements(&a, &b, None, DEFAULT_MATCH_THRESHOLD).unwrap();
        assert!(matching
            .unmatched_left
            .contains(&ElementPath::Reaction("reaction1".into())));
        assert!(matching
            .unmatched_right
            .contains(&ElementPath::Reaction("reaction1".into())));
    }

    #[test]
    fn matching_is_one_to_one() {
        let m = my_model();
        let matching = match_elements(&m, &m, None, DEFAULT_MATCH_THRESHOLD).unwrap();
        let mut lefts: Vec<_> = matching.matches.iter().map(|m| &m.left).collect();
        let mut rights: Vec<_> = matching.matches.iter().map(|m| &m.right).collect();
        lefts.sort();
        lefts.dedup();
        rights.sort();
        rights.dedup();
        assert_eq!(lefts.len(), matching.matches.len());
        assert_eq!(rights.len(), matching.matches.len());
    }

    #[test]
    fn mirror_symmetry_on_swapped_arguments() {
        let mut a = my_model();
        a.species.push(Species::new("C", "default", 0.5));
        let b = my_model();
        let ab = match_elements(&a, &b, None, DEFAULT_MATCH_THRESHOLD).unwrap();
        let ba = match_elements(&b, &a, None, DEFAULT_MATCH_THRESHOLD).unwrap();
        let mut swapped: Vec<(ElementPath, ElementPath)> = ba
            .matches
            .iter()
            .map(|m| (m.right.clone(), m.left.clone()))
            .collect();
        let mut forward: Vec<(ElementPath, ElementPath)> = ab
            .matches
            .iter()
            .map(|m| (m.left.clone(), m.right.clone()))
            .collect();
        swapped.sort();
        forward.sort();
        assert_eq!(forward, swapped);
        assert_eq!(ab.unmatched_left, ba.unmatched_right);
    }

    #[test]
    fn set_then_remove_restores_document() {
        let doc = my_model();
        let uri = "urn:miriam:obo.chebi:CHEBI%3A17234";
        let with = set_annotation(&doc, "A", Qualifier::Is, uri).unwrap();
        assert_ne!(with, doc);
        let twice = set_annotation(&with, "A", Qualifier::Is, uri).unwrap();
        assert_eq!(twice, with); // set semantics
        let (restored, removed) = remove_annotation(&with, "A", &Qualifier::Is, uri).unwrap();
        assert!(removed);
        assert_eq!(restored, doc);
        let (same, removed) = remove_annotation(&doc, "A", &Qualifier::Is, uri).unwrap();
        assert!(!removed);
        assert_eq!(same, doc);
    }

    #[test]
    fn missing_element_and_bad_uri_rejected() {
        let doc = my_model();
        assert_eq!(
            set_annotation(&doc, "zz", Qualifier::Is, "identifiers.org/a/1").unwrap_err(),
            SemanticsError::NoSuchElement("zz".into())
        );
        assert!(matches!(
            set_annotation(&doc, "A", Qualifier::Is, "ftp://x").unwrap_err(),
            SemanticsError::Uri(_)
        ));
    }

    #[test]
    fn local_parameter_annotations_via_dotted_id() {
        let mut doc = my_model();
        doc.reactions[0]
            .local_parameters
            .push(crate::model::Parameter::new("kcat", 1.0));
        let with = set_annotation(
            &doc,
            "reaction1.kcat",
            Qualifier::Is,
            "identifiers.org/ec-code/1.1.1.1",
        )
        .unwrap();
        assert_eq!(with.reactions[0].local_parameters[0].annotations.len(), 1);
    }
}
