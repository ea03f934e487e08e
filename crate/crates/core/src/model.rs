//! Language-neutral document model for the supported SBML subset.
//!
//! A [`ModelDocument`] is an immutable value: every operation in this crate
//! takes documents by reference and returns new ones. Validation produces a
//! [`ValidationReport`] of coded findings instead of failing, so callers can
//! distinguish hard errors from advisories.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::AnnotationSet;
use crate::expr::Expression;

/// True when `s` matches `[A-Za-z_][A-Za-z0-9_]*` (SBML SId subset).
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// True when `s` looks like an SBO identifier (`SBO:` plus seven digits).
pub fn is_sbo_id(s: &str) -> bool {
    s.len() == 11
        && s.starts_with("SBO:")
        && s.as_bytes()[4..].iter().all(|b| b.is_ascii_digit())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Compartment {
    pub id: String,
    /// Display name; empty when absent.
    #[serde(default)]
    pub name: String,
    pub size: f64,
    #[serde(default)]
    pub annotations: AnnotationSet,
    #[serde(default)]
    pub sbo: Option<String>,
}

impl Compartment {
    pub fn new(id: &str, size: f64) -> Self {
        Compartment {
            id: id.to_string(),
            name: String::new(),
            size,
            annotations: AnnotationSet::new(),
            sbo: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub id: String,
    #[serde(default)]
    pub name: String,
    /// Id of the containing compartment.
    pub compartment: String,
    pub initial_amount: f64,
    /// Boundary condition: the species is a fixed pool unaffected by reactions.
    #[serde(default)]
    pub boundary: bool,
    #[serde(default)]
    pub constant: bool,
    #[serde(default)]
    pub annotations: AnnotationSet,
    #[serde(default)]
    pub sbo: Option<String>,
}

impl Species {
    pub fn new(id: &str, compartment: &str, initial_amount: f64) -> Self {
        Species {
            id: id.to_string(),
            name: String::new(),
            compartment: compartment.to_string(),
            initial_amount,
            boundary: false,
            constant: false,
            annotations: AnnotationSet::new(),
            sbo: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub id: String,
    pub value: f64,
    #[serde(default)]
    pub annotations: AnnotationSet,
    #[serde(default)]
    pub sbo: Option<String>,
}

impl Parameter {
    pub fn new(id: &str, value: f64) -> Self {
        Parameter {
            id: id.to_string(),
            value,
            annotations: AnnotationSet::new(),
            sbo: None,
        }
    }
}

/// One (species, stoichiometry) slot of a reaction side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesRef {
    pub species: String,
    pub stoichiometry: f64,
}

impl SpeciesRef {
    pub fn new(species: &str, stoichiometry: f64) -> Self {
        SpeciesRef {
            species: species.to_string(),
            stoichiometry,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reaction {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub reversible: bool,
    #[serde(default)]
    pub reactants: Vec<SpeciesRef>,
    #[serde(default)]
    pub products: Vec<SpeciesRef>,
    /// Species ids acting as modifiers (catalysts, inhibitors, activators).
    #[serde(default)]
    pub modifiers: Vec<String>,
    #[serde(default)]
    pub kinetic_law: Option<Expression>,
    /// Parameters scoped to this reaction's kinetic law. Ids must be unique
    /// within the reaction and may shadow global symbols.
    #[serde(default)]
    pub local_parameters: Vec<Parameter>,
    #[serde(default)]
    pub annotations: AnnotationSet,
    #[serde(default)]
    pub sbo: Option<String>,
}

impl Reaction {
    pub fn new(id: &str, reversible: bool) -> Self {
        Reaction {
            id: id.to_string(),
            name: String::new(),
            reversible,
            reactants: Vec::new(),
            products: Vec::new(),
            modifiers: Vec::new(),
            kinetic_law: None,
            local_parameters: Vec::new(),
            annotations: AnnotationSet::new(),
            sbo: None,
        }
    }

    /// Net stoichiometry of `species` in this reaction
    /// (products positive, reactants negative); 0 when absent.
    pub fn net_stoichiometry(&self, species: &str) -> f64 {
        let minus: f64 = self
            .reactants
            .iter()
            .filter(|r| r.species == species)
            .map(|r| r.stoichiometry)
            .sum();
        let plus: f64 = self
            .products
            .iter()
            .filter(|p| p.species == species)
            .map(|p| p.stoichiometry)
            .sum();
        plus - minus
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub level: u32,
    pub version: u32,
    #[serde(default)]
    pub compartments: Vec<Compartment>,
    #[serde(default)]
    pub species: Vec<Species>,
    #[serde(default)]
    pub parameters: Vec<Parameter>,
    #[serde(default)]
    pub reactions: Vec<Reaction>,
}

impl ModelDocument {
    /// A fresh Level 2 Version 4 document with the given model id.
    pub fn new(id: &str) -> Self {
        ModelDocument {
            id: id.to_string(),
            name: String::new(),
            level: 2,
            version: 4,
            compartments: Vec::new(),
            species: Vec::new(),
            parameters: Vec::new(),
            reactions: Vec::new(),
        }
    }

    pub fn find_compartment(&self, id: &str) -> Option<&Compartment> {
        self.compartments.iter().find(|c| c.id == id)
    }

    pub fn find_species(&self, id: &str) -> Option<&Species> {
        self.species.iter().find(|s| s.id == id)
    }

    pub fn find_parameter(&self, id: &str) -> Option<&Parameter> {
        self.parameters.iter().find(|p| p.id == id)
    }

    pub fn find_reaction(&self, id: &str) -> Option<&Reaction> {
        self.reactions.iter().find(|r| r.id == id)
    }

    /// All top-level element ids in document order
    /// (compartments, species, parameters, reactions).
    pub fn element_ids(&self) -> Vec<&str> {
        let mut ids = Vec::new();
        ids.extend(self.compartments.iter().map(|c| c.id.as_str()));
        ids.extend(self.species.iter().map(|s| s.id.as_str()));
        ids.extend(self.parameters.iter().map(|p| p.id.as_str()));
        ids.extend(self.reactions.iter().map(|r| r.id.as_str()));
        ids
    }

    pub fn contains_element(&self, id: &str) -> bool {
        self.find_compartment(id).is_some()
            || self.find_species(id).is_some()
            || self.find_parameter(id).is_some()
            || self.find_reaction(id).is_some()
    }

    /// Mutable access to the annotation set of a top-level element, or a
    /// local parameter addressed as `<reaction_id>.<parameter_id>`.
    pub fn annotations_mut(&mut self, element_id: &str) -> Option<&mut AnnotationSet> {
        if let Some((rid, pid)) = element_id.split_once('.') {
            let rxn = self.reactions.iter_mut().find(|r| r.id == rid)?;
            let p = rxn.local_parameters.iter_mut().find(|p| p.id == pid)?;
            return Some(&mut p.annotations);
        }
        if let Some(c) = self.compartments.iter_mut().find(|c| c.id == element_id) {
            return Some(&mut c.annotations);
        }
        if let Some(s) = self.species.iter_mut().find(|s| s.id == element_id) {
            return Some(&mut s.annotations);
        }
        if let Some(p) = self.parameters.iter_mut().find(|p| p.id == element_id) {
            return Some(&mut p.annotations);
        }
        if let Some(r) = self.reactions.iter_mut().find(|r| r.id == element_id) {
            return Some(&mut r.annotations);
        }
        None
    }
}

/// Address of an element inside a document, printable as a stable path.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElementPath {
    Model,
    Compartment(String),
    Species(String),
    Parameter(String),
    Reaction(String),
    /// (reaction id, local parameter id)
    LocalParameter(String, String),
}

impl fmt::Display for ElementPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementPath::Model => write!(f, "model"),
            ElementPath::Compartment(id) => write!(f, "compartment:{id}"),
            ElementPath::Species(id) => write!(f, "species:{id}"),
            ElementPath::Parameter(id) => write!(f, "parameter:{id}"),
            ElementPath::Reaction(id) => write!(f, "reaction:{id}"),
            ElementPath::LocalParameter(rid, pid) => {
                write!(f, "reaction:{rid}/parameter:{pid}")
            }
        }
    }
}

impl FromStr for ElementPath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "model" {
            return Ok(ElementPath::Model);
        }
        if let Some((rid, rest)) = s
            .strip_prefix("reaction:")
            .and_then(|r| r.split_once("/parameter:"))
        {
            return Ok(ElementPath::LocalParameter(rid.to_string(), rest.to_string()));
        }
        if let Some(id) = s.strip_prefix("compartment:") {
            return Ok(ElementPath::Compartment(id.to_string()));
        }
        if let Some(id) = s.strip_prefix("species:") {
            return Ok(ElementPath::Species(id.to_string()));
        }
        if let Some(id) = s.strip_prefix("parameter:") {
            return Ok(ElementPath::Parameter(id.to_string()));
        }
        if let Some(id) = s.strip_prefix("reaction:") {
            return Ok(ElementPath::Reaction(id.to_string()));
        }
        Err(format!("not an element path: `{s}`"))
    }
}

impl Serialize for ElementPath {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ElementPath {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => write!(f, "error"),
            Severity::Warning => write!(f, "warning"),
        }
    }
}

/// One coded validation finding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub path: ElementPath,
    /// Stable machine-readable code, e.g. `duplicate-id`.
    pub code: String,
    pub message: String,
}

impl Finding {
    fn error(path: ElementPath, code: &str, message: String) -> Self {
        Finding {
            severity: Severity::Error,
            path,
            code: code.to_string(),
            message,
        }
    }

    fn warning(path: ElementPath, code: &str, message: String) -> Self {
        Finding {
            severity: Severity::Warning,
            path,
            code: code.to_string(),
            message,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
    }

    pub fn error_count(&self) -> usize {
        self.errors().count()
    }

    pub fn warning_count(&self) -> usize {
        self.findings.len() - self.error_count()
    }

    /// True when the report carries no errors (warnings permitted).
    pub fn is_clean(&self) -> bool {
        self.error_count() == 0
    }
}

/// Error wrapper used by operations whose precondition is a clean validation.
#[derive(Debug, Clone, Error)]
#[error("model `{model_id}` has {} validation error(s); first: {}", report.error_count(), first_error_message(report))]
pub struct InvalidModel {
    pub model_id: String,
    pub report: ValidationReport,
}

fn first_error_message(report: &ValidationReport) -> String {
    report
        .errors()
        .next()
        .map(|f| format!("{}: {}", f.path, f.message))
        .unwrap_or_else(|| "(none)".to_string())
}

/// Validate `doc`, returning a clean report or the wrapped error report.
pub fn require_valid(doc: &ModelDocument) -> Result<(), InvalidModel> {
    let report = validate_model(doc);
    if report.is_clean() {
        Ok(())
    } else {
        Err(InvalidModel {
            model_id: doc.id.clone(),
            report,
        })
    }
}

/// Structural validation. Deterministic and side-effect free; findings are
/// ordered by document position.
pub fn validate_model(doc: &ModelDocument) -> ValidationReport {
    let mut out: Vec<Finding> = Vec::new();

    if !is_identifier(&doc.id) {
        out.push(Finding::error(
            ElementPath::Model,
            "bad-identifier",
            format!("model id `{}` is not a valid identifier", doc.id),
        ));
    }

    // Identifier shape + global uniqueness over top-level elements.
    {
        let mut push_id = |path: ElementPath, id: &str, seen: &mut BTreeSet<String>| {
            if !is_identifier(id) {
                out.push(Finding::error(
                    path.clone(),
                    "bad-identifier",
                    format!("id `{id}` is not a valid identifier"),
                ));
            } else if !seen.insert(id.to_string()) {
                out.push(Finding::error(
                    path,
                    "duplicate-id",
                    format!("id `{id}` is declared more than once"),
                ));
            }
        };
        let mut ids: BTreeSet<String> = BTreeSet::new();
        for c in &doc.compartments {
            push_id(ElementPath::Compartment(c.id.clone()), &c.id, &mut ids);
        }
        for s in &doc.species {
            push_id(ElementPath::Species(s.id.clone()), &s.id, &mut ids);
        }
        for p in &doc.parameters {
            push_id(ElementPath::Parameter(p.id.clone()), &p.id, &mut ids);
        }
        for r in &doc.reactions {
            push_id(ElementPath::Reaction(r.id.clone()), &r.id, &mut ids);
        }
    }

    for c in &doc.compartments {
        let path = ElementPath::Compartment(c.id.clone());
        if !c.size.is_finite() || c.size <= 0.0 {
            out.push(Finding::error(
                path.clone(),
                "bad-size",
                format!("compartment size must be finite and > 0, got {}", c.size),
            ));
        }
        check_sbo(&mut out, &path, &c.sbo);
    }

    for s in &doc.species {
        let path = ElementPath::Species(s.id.clone());
        if doc.find_compartment(&s.compartment).is_none() {
            out.push(Finding::error(
                path.clone(),
                "unknown-compartment",
                format!("species references unknown compartment `{}`", s.compartment),
            ));
        }
        if !s.initial_amount.is_finite() || s.initial_amount < 0.0 {
            out.push(Finding::error(
                path.clone(),
                "bad-amount",
                format!(
                    "initial amount must be finite and >= 0, got {}",
                    s.initial_amount
                ),
            ));
        }
        check_sbo(&mut out, &path, &s.sbo);
    }

    for p in &doc.parameters {
        let path = ElementPath::Parameter(p.id.clone());
        if !p.value.is_finite() {
            out.push(Finding::error(
                path.clone(),
                "bad-value",
                format!("parameter value must be finite, got {}", p.value),
            ));
        }
        check_sbo(&mut out, &path, &p.sbo);
    }

    for r in &doc.reactions {
        let path = ElementPath::Reaction(r.id.clone());
        for (role, refs) in [("reactant", &r.reactants), ("product", &r.products)] {
            let mut role_seen: BTreeSet<&str> = BTreeSet::new();
            for sref in refs {
                if doc.find_species(&sref.species).is_none() {
                    out.push(Finding::error(
                        path.clone(),
                        "unknown-species",
                        format!("{role} references unknown species `{}`", sref.species),
                    ));
                }
                if !sref.stoichiometry.is_finite() || sref.stoichiometry <= 0.0 {
                    out.push(Finding::error(
                        path.clone(),
                        "bad-stoichiometry",
                        format!(
                            "{role} stoichiometry must be finite and > 0, got {}",
                            sref.stoichiometry
                        ),
                    ));
                }
                if !role_seen.insert(&sref.species) {
                    out.push(Finding::error(
                        path.clone(),
                        "duplicate-role-species",
                        format!("species `{}` listed twice as {role}", sref.species),
                    ));
                }
            }
        }
        let mut mod_seen: BTreeSet<&str> = BTreeSet::new();
        for m in &r.modifiers {
            if doc.find_species(m).is_none() {
                out.push(Finding::error(
                    path.clone(),
                    "unknown-species",
                    format!("modifier references unknown species `{m}`"),
                ));
            }
            if !mod_seen.insert(m) {
                out.push(Finding::error(
                    path.clone(),
                    "duplicate-role-species",
                    format!("species `{m}` listed twice as modifier"),
                ));
            }
        }

        let mut local_ids: BTreeSet<&str> = BTreeSet::new();
        for lp in &r.local_parameters {
            let lpath = ElementPath::LocalParameter(r.id.clone(), lp.id.clone());
            if !is_identifier(&lp.id) {
                out.push(Finding::error(
                    lpath.clone(),
                    "bad-identifier",
                    format!("id `{}` is not a valid identifier", lp.id),
                ));
            } else if !local_ids.insert(&lp.id) {
                out.push(Finding::error(
                    lpath.clone(),
                    "duplicate-id",
                    format!("local parameter `{}` declared twice in reaction", lp.id),
                ));
            }
            if !lp.value.is_finite() {
                out.push(Finding::error(
                    lpath.clone(),
                    "bad-value",
                    format!("parameter value must be finite, got {}", lp.value),
                ));
            }
            check_sbo(&mut out, &lpath, &lp.sbo);
        }

        if let Some(law) = &r.kinetic_law {
            for sym in law.symbols() {
                let resolved = r.local_parameters.iter().any(|p| p.id == sym)
                    || doc.find_species(&sym).is_some()
                    || doc.find_parameter(&sym).is_some()
                    || doc.find_compartment(&sym).is_some();
                if !resolved {
                    out.push(Finding::error(
                        path.clone(),
                        "unresolved-symbol",
                        format!("unresolved symbol {sym}"),
                    ));
                }
            }
        }
        check_sbo(&mut out, &path, &r.sbo);
    }

    if doc.compartments.is_empty()
        && doc.species.is_empty()
        && doc.parameters.is_empty()
        && doc.reactions.is_empty()
    {
        out.push(Finding::warning(
            ElementPath::Model,
            "empty-model",
            "empty model".to_string(),
        ));
    }

    ValidationReport { findings: out }
}

fn check_sbo(out: &mut Vec<Finding>, path: &ElementPath, sbo: &Option<String>) {
    if let Some(s) = sbo {
        if !is_sbo_id(s) {
            out.push(Finding::error(
                path.clone(),
                "bad-sbo",
                format!("`{s}` is not an SBO id of the form SBO:0000000"),
            ));
        }
    }
}

/// Species x reactions matrix of net stoichiometric coefficients
/// (products positive, reactants negative).
#[derive(Debug, Clone, PartialEq)]
pub struct StoichiometricMatrix {
    pub species_ids: Vec<String>,
    pub reaction_ids: Vec<String>,
    /// Row-major: `entries[i * reaction_ids.len() + r]` = n_ri.
    pub entries: Vec<f64>,
}

impl StoichiometricMatrix {
    pub fn rows(&self) -> usize {
        self.species_ids.len()
    }

    pub fn cols(&self) -> usize {
        self.reaction_ids.len()
    }

    pub fn n(&self, species_index: usize, reaction_index: usize) -> f64 {
        self.entries[species_index * self.cols() + reaction_index]
    }

    pub fn species_index(&self, id: &str) -> Option<usize> {
        self.species_ids.iter().position(|s| s == id)
    }

    pub fn reaction_index(&self, id: &str) -> Option<usize> {
        self.reaction_ids.iter().position(|r| r == id)
    }

    /// One column (reaction) as a species-indexed vector.
    pub fn column(&self, reaction_index: usize) -> Vec<f64> {
        (0..self.rows()).map(|i| self.n(i, reaction_index)).collect()
    }
}

/// Extract the stoichiometric matrix; requires a clean validation.
pub fn stoichiometric_matrix(doc: &ModelDocument) -> Result<StoichiometricMatrix, InvalidModel> {
    require_valid(doc)?;
    let species_ids: Vec<String> = doc.species.iter().map(|s| s.id.clone()).collect();
    let reaction_ids: Vec<String> = doc.reactions.iter().map(|r| r.id.clone()).collect();
    let cols = reaction_ids.len();
    let mut entries = vec![0.0; species_ids.len() * cols];
    for (r, rxn) in doc.reactions.iter().enumerate() {
        for (i, sid) in species_ids.iter().enumerate() {
            entries[i * cols + r] = rxn.net_stoichiometry(sid);
        }
    }
    Ok(StoichiometricMatrix {
        species_ids,
        reaction_ids,
        entries,
    })
}

/// Unit-test fixture: the two-species chain `A -> B` with law `kf*A-kr*B`.
#[cfg(test)]
pub(crate) fn my_model_fixture() -> ModelDocument {
    let mut doc = ModelDocument::new("MyModel");
    doc.compartments.push(Compartment::new("default", 1.0));
    doc.species.push(Species::new("A", "default", 1.0));
    doc.species.push(Species::new("B", "default", 1.0));
    doc.parameters.push(Parameter::new("kf", 1.0));
    doc.parameters.push(Parameter::new("kr", 1.0));
    let mut rxn = Reaction::new("reaction1", false);
    rxn.reactants.push(SpeciesRef::new("A", 1.0));
    rxn.products.push(SpeciesRef::new("B", 1.0));
    rxn.kinetic_law = Some(Expression::parse_infix("kf*A-kr*B").unwrap());
    doc.reactions.push(rxn);
    doc
}
