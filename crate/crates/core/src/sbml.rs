//! Reader and writer for the supported SBML XML subset.
//!
//! The reader accepts Level 2 (any version) and Level 3 documents, maps the
//! MathML subset (`apply` with `plus`/`minus`/`times`/`divide`/`power`,
//! `ci`, `cn`) onto [`Expression`], and maps RDF annotation blocks carrying
//! `bqbiol`/`bqmodel` qualifiers onto [`AnnotationSet`]s. Elements outside
//! the subset are recorded as warnings and dropped.
//!
//! The writer is deterministic: elements in document order, attributes in a
//! fixed order, annotations as an RDF Bag of `http://identifiers.org/…`
//! URLs, two-space indentation. `read_sbml(write_sbml(doc))` returns a
//! structurally equal document for every valid document when the
//! serialization options match the document's level and version.

use std::fmt::Write as _;

use roxmltree::{Document, Node};
use thiserror::Error;

use crate::annotation::{normalize_uri, AnnotationSet, Qualifier};
use crate::expr::{format_number, Expression};
use crate::model::{
    require_valid, Compartment, InvalidModel, ModelDocument, Parameter, Reaction, Species,
    SpeciesRef,
};

const RDF_NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
const MATHML_NS: &str = "http://www.w3.org/1998/Math/MathML";
const BQBIOL_NS: &str = "http://biomodels.net/biology-qualifiers/";
const BQMODEL_NS: &str = "http://biomodels.net/model-qualifiers/";

#[derive(Debug, Error)]
pub enum SbmlError {
    #[error("XML syntax: {0}")]
    XmlSyntax(String),
    #[error("unsupported SBML level/version: {0}")]
    UnsupportedSbmlLevel(String),
    #[error("broken reference: {0}")]
    BrokenReference(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SbmlSerializationOptions {
    pub level: u32,
    pub version: u32,
    /// Spaces per indentation step.
    pub indent: usize,
}

impl Default for SbmlSerializationOptions {
    fn default() -> Self {
        SbmlSerializationOptions {
            level: 2,
            version: 4,
            indent: 2,
        }
    }
}

impl SbmlSerializationOptions {
    /// Options matching the document's own level and version — the choice
    /// under which `read_sbml(write_sbml(doc, opts))` reproduces `doc`.
    pub fn for_document(doc: &ModelDocument) -> Self {
        SbmlSerializationOptions {
            level: doc.level,
            version: doc.version,
            indent: 2,
        }
    }
}

fn namespace_for(level: u32, version: u32) -> String {
    match (level, version) {
        (2, 1) => "http://www.sbml.org/sbml/level2".to_string(),
        (2, v) => format!("http://www.sbml.org/sbml/level2/version{v}"),
        (l, v) => format!("http://www.sbml.org/sbml/level{l}/version{v}/core"),
    }
}

// ---------------------------------------------------------------------------
// Reading
// ---------------------------------------------------------------------------

/// Parse SBML bytes into a document, discarding subset warnings.
pub fn read_sbml(bytes: &[u8]) -> Result<ModelDocument, SbmlError> {
    read_sbml_with_warnings(bytes).map(|(doc, _)| doc)
}

/// Parse SBML bytes into a document plus warnings about dropped content.
pub fn read_sbml_with_warnings(
    bytes: &[u8],
) -> Result<(ModelDocument, Vec<String>), SbmlError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| SbmlError::XmlSyntax(format!("invalid UTF-8: {e}")))?;
    let text = text.trim_start_matches('\u{feff}');
    let xml =
        Document::parse(text).map_err(|e| SbmlError::XmlSyntax(e.to_string()))?;
    let root = xml.root_element();
    if root.tag_name().name() != "sbml" {
        return Err(SbmlError::XmlSyntax(format!(
            "root element is <{}>, expected <sbml>",
            root.tag_name().name()
        )));
    }

    let (level, version) = read_level_version(&root)?;
    if level != 2 && level != 3 {
        return Err(SbmlError::UnsupportedSbmlLevel(format!(
            "level {level} version {version}"
        )));
    }

    let mut warnings: Vec<String> = Vec::new();
    let model_node = child_elements(&root, "model").next().ok_or_else(|| {
        SbmlError::XmlSyntax("no <model> element under <sbml>".to_string())
    })?;

    let mut doc = ModelDocument::new(model_node.attribute("id").unwrap_or("model"));
    doc.name = model_node.attribute("name").unwrap_or("").to_string();
    doc.level = level;
    doc.version = version;

    for child in model_node.children().filter(|n| n.is_element()) {
        match child.tag_name().name() {
            "listOfCompartments" => {
                for n in child_elements(&child, "compartment") {
                    doc.compartments.push(read_compartment(&n, &mut warnings));
                }
            }
            "listOfSpecies" => {
                for n in child_elements(&child, "species") {
                    doc.species.push(read_species(&n, &mut warnings));
                }
            }
            "listOfParameters" => {
                for n in child_elements(&child, "parameter") {
                    doc.parameters.push(read_parameter(&n, &mut warnings));
                }
            }
            "listOfReactions" => {
                for n in child_elements(&child, "reaction") {
                    doc.reactions.push(read_reaction(&n, &mut warnings));
                }
            }
            "annotation" | "notes" => {} // model-level metadata: not in the subset
            other => warnings.push(format!("dropped unsupported element <{other}>")),
        }
    }

    check_references(&doc)?;
    Ok((doc, warnings))
}

fn read_level_version(root: &Node) -> Result<(u32, u32), SbmlError> {
    let attr_level = root.attribute("level").and_then(|v| v.parse::<u32>().ok());
    let attr_version = root
        .attribute("version")
        .and_then(|v| v.parse::<u32>().ok());
    if let Some(ns) = root.tag_name().namespace() {
        if let Some(rest) = ns.strip_prefix("http://www.sbml.org/sbml/level") {
            // Forms: `2`, `2/version4`, `3/version1/core`.
            let mut parts = rest.split('/');
            let level: u32 = parts
                .next()
                .unwrap_or("")
                .parse()
                .map_err(|_| SbmlError::UnsupportedSbmlLevel(ns.to_string()))?;
            let version = parts
                .next()
                .and_then(|p| p.strip_prefix("version"))
                .and_then(|v| v.parse::<u32>().ok())
                .or(attr_version)
                .unwrap_or(1);
            return Ok((level, version));
        }
        return Err(SbmlError::UnsupportedSbmlLevel(format!(
            "unknown namespace {ns}"
        )));
    }
    match (attr_level, attr_version) {
        (Some(l), Some(v)) => Ok((l, v)),
        (Some(l), None) => Ok((l, 1)),
        _ => Err(SbmlError::UnsupportedSbmlLevel(
            "no namespace and no level attribute".to_string(),
        )),
    }
}

fn child_elements<'a>(
    node: &'a Node<'a, 'a>,
    local_name: &'a str,
) -> impl Iterator<Item = Node<'a, 'a>> + 'a {
    node.children()
        .filter(move |n| n.is_element() && n.tag_name().name() == local_name)
}

fn read_f64_attr(node: &Node, name: &str, default: f64) -> f64 {
    node.attribute(name)
        .and_then(|v| v.trim().parse::<f64>().ok())
        .unwrap_or(default)
}

fn read_bool_attr(node: &Node, name: &str, default: bool) -> bool {
    match node.attribute(name) {
        Some("true") | Some("1") => true,
        Some("false") | Some("0") => false,
        _ => default,
    }
}

fn read_annotations(node: &Node, warnings: &mut Vec<String>) -> AnnotationSet {
    let mut set = AnnotationSet::new();
    for ann in child_elements(node, "annotation") {
        for rdf in child_elements(&ann, "RDF") {
            for desc in child_elements(&rdf, "Description") {
                for qual in desc.children().filter(|n| n.is_element()) {
                    let ns = qual.tag_name().namespace().unwrap_or("");
                    if ns != BQBIOL_NS && ns != BQMODEL_NS {
                        warnings.push(format!(
                            "dropped non-qualifier annotation <{}>",
                            qual.tag_name().name()
                        ));
                        continue;
                    }
                    let qualifier = Qualifier::parse(qual.tag_name().name());
                    for bag in child_elements(&qual, "Bag") {
                        for li in child_elements(&bag, "li") {
                            let resource = li
                                .attribute((RDF_NS, "resource"))
                                .or_else(|| li.attribute("resource"))
                                .unwrap_or("");
                            match normalize_uri(resource) {
                                Ok(uri) => {
                                    set.insert(qualifier.clone(), uri);
                                }
                                Err(e) => warnings.push(format!(
                                    "dropped annotation resource: {e}"
                                )),
                            }
                        }
                    }
                }
            }
        }
    }
    set
}

fn read_sbo_attr(node: &Node) -> Option<String> {
    node.attribute("sboTerm").map(|s| s.to_string())
}

fn read_compartment(node: &Node, warnings: &mut Vec<String>) -> Compartment {
    let mut c = Compartment::new(
        node.attribute("id").unwrap_or(""),
        read_f64_attr(node, "size", 1.0),
    );
    c.name = node.attribute("name").unwrap_or("").to_string();
    c.sbo = read_sbo_attr(node);
    c.annotations = read_annotations(node, warnings);
    c
}

fn read_species(node: &Node, warnings: &mut Vec<String>) -> Species {
    let amount = node
        .attribute("initialAmount")
        .or_else(|| node.attribute("initialConcentration"))
        .and_then(|v| v.trim().parse::<f64>().ok())
        .unwrap_or(0.0);
    let mut s = Species::new(
        node.attribute("id").unwrap_or(""),
        node.attribute("compartment").unwrap_or(""),
        amount,
    );
    s.name = node.attribute("name").unwrap_or("").to_string();
    s.boundary = read_bool_attr(node, "boundaryCondition", false);
    s.constant = read_bool_attr(node, "constant", false);
    s.sbo = read_sbo_attr(node);
    s.annotations = read_annotations(node, warnings);
    s
}

fn read_parameter(node: &Node, warnings: &mut Vec<String>) -> Parameter {
    let mut p = Parameter::new(
        node.attribute("id").unwrap_or(""),
        read_f64_attr(node, "value", 0.0),
    );
    p.sbo = read_sbo_attr(node);
    p.annotations = read_annotations(node, warnings);
    p
}

fn read_species_ref(node: &Node) -> SpeciesRef {
    SpeciesRef::new(
        node.attribute("species").unwrap_or(""),
        read_f64_attr(node, "stoichiometry", 1.0),
    )
}

fn read_reaction(node: &Node, warnings: &mut Vec<String>) -> Reaction {
    let mut r = Reaction::new(
        node.attribute("id").unwrap_or(""),
        read_bool_attr(node, "reversible", true), // SBML default
    );
    r.name = node.attribute("name").unwrap_or("").to_string();
    r.sbo = read_sbo_attr(node);
    r.annotations = read_annotations(node, warnings);
    for child in node.children().filter(|n| n.is_element()) {
        match child.tag_name().name() {
            "listOfReactants" => {
                for n in child_elements(&child, "speciesReference") {
                    r.reactants.push(read_species_ref(&n));
                }
            }
            "listOfProducts" => {
                for n in child_elements(&child, "speciesReference") {
                    r.products.push(read_species_ref(&n));
                }
            }
            "listOfModifiers" => {
                for n in child_elements(&child, "modifierSpeciesReference") {
                    r.modifiers
                        .push(n.attribute("species").unwrap_or("").to_string());
                }
            }
            "kineticLaw" => {
                if r.sbo.is_none() {
                    r.sbo = read_sbo_attr(&child);
                }
                for math in child_elements(&child, "math") {
                    match read_math_root(&math) {
                        Ok(expr) => r.kinetic_law = Some(expr),
                        Err(reason) => warnings.push(format!(
                            "dropped kinetic law of `{}`: {reason}",
                            r.id
                        )),
                    }
                }
                // L2 nests local parameters as listOfParameters/parameter;
                // L3 as listOfLocalParameters/localParameter. Accept both.
                for list in child.children().filter(|n| {
                    n.is_element()
                        && matches!(
                            n.tag_name().name(),
                            "listOfParameters" | "listOfLocalParameters"
                        )
                }) {
                    for n in list.children().filter(|n| {
                        n.is_element()
                            && matches!(
                                n.tag_name().name(),
                                "parameter" | "localParameter"
                            )
                    }) {
                        r.local_parameters.push(read_parameter(&n, warnings));
                    }
                }
            }
            "annotation" | "notes" => {}
            other => warnings.push(format!(
                "dropped unsupported element <{other}> in reaction `{}`",
                r.id
            )),
        }
    }
    r
}

fn read_math_root(math: &Node) -> Result<Expression, String> {
    let mut elems = math.children().filter(|n| n.is_element());
    let first = elems.next().ok_or("empty <math> element")?;
    if elems.next().is_some() {
        return Err("more than one expression under <math>".to_string());
    }
    read_math_node(&first)
}

fn read_math_node(node: &Node) -> Result<Expression, String> {
    match node.tag_name().name() {
        "ci" => {
            let sym = node.text().unwrap_or("").trim().to_string();
            if sym.is_empty() {
                return Err("empty <ci>".to_string());
            }
            Ok(Expression::symbol(sym))
        }
        "cn" => read_cn(node),
        "apply" => {
            let mut parts = node.children().filter(|n| n.is_element());
            let op = parts.next().ok_or("empty <apply>")?;
            let args: Vec<Node> = parts.collect();
            let operands: Vec<Expression> = args
                .iter()
                .map(read_math_node)
                .collect::<Result<_, _>>()?;
            match (op.tag_name().name(), operands.len()) {
                ("plus", 0) => Ok(Expression::number(0.0)),
                ("plus", _) => Ok(fold_nary(operands, Expression::add)),
                ("times", 0) => Ok(Expression::number(1.0)),
                ("times", _) => Ok(fold_nary(operands, Expression::mul)),
                ("minus", 1) => {
                    let only = operands.into_iter().next().unwrap();
                    // Match the infix parser: a negated literal is a literal.
                    Ok(match only {
                        Expression::Number(v) => Expression::number(-v),
                        e => Expression::neg(e),
                    })
                }
                ("minus", 2) => Ok(binary(operands, Expression::sub)),
                ("divide", 2) => Ok(binary(operands, Expression::div)),
                ("power", 2) => Ok(binary(operands, Expression::pow)),
                (other, n) => Err(format!(
                    "unsupported MathML operator <{other}> with {n} operand(s)"
                )),
            }
        }
        other => Err(format!("unsupported MathML element <{other}>")),
    }
}

fn fold_nary(
    operands: Vec<Expression>,
    op: fn(Expression, Expression) -> Expression,
) -> Expression {
    let mut it = operands.into_iter();
    let first = it.next().unwrap();
    it.fold(first, op)
}

fn binary(
    operands: Vec<Expression>,
    op: fn(Expression, Expression) -> Expression,
) -> Expression {
    let mut it = operands.into_iter();
    let a = it.next().unwrap();
    let b = it.next().unwrap();
    op(a, b)
}

fn read_cn(node: &Node) -> Result<Expression, String> {
    let kind = node.attribute("type").unwrap_or("real");
    let texts: Vec<String> = node
        .children()
        .filter(|n| n.is_text())
        .map(|n| n.text().unwrap_or("").trim().to_string())
        .filter(|t| !t.is_empty())
        .collect();
    let parse = |t: &str| -> Result<f64, String> {
        t.parse::<f64>()
            .map_err(|_| format!("malformed <cn> value `{t}`"))
    };
    match kind {
        "real" | "integer" => {
            let t = texts.first().ok_or("empty <cn>")?;
            Ok(Expression::number(parse(t)?))
        }
        "e-notation" => {
            let m = parse(texts.first().ok_or("e-notation <cn> without mantissa")?)?;
            let e = parse(texts.get(1).ok_or("e-notation <cn> without exponent")?)?;
            Ok(Expression::number(m * 10f64.powf(e)))
        }
        "rational" => {
            let num = parse(texts.first().ok_or("rational <cn> without numerator")?)?;
            let den = parse(texts.get(1).ok_or("rational <cn> without denominator")?)?;
            Ok(Expression::number(num / den))
        }
        other => Err(format!("unsupported <cn> type `{other}`")),
    }
}

fn check_references(doc: &ModelDocument) -> Result<(), SbmlError> {
    for s in &doc.species {
        if doc.find_compartment(&s.compartment).is_none() {
            return Err(SbmlError::BrokenReference(format!(
                "species `{}` references unknown compartment `{}`",
                s.id, s.compartment
            )));
        }
    }
    for r in &doc.reactions {
        for sref in r.reactants.iter().chain(r.products.iter()) {
            if doc.find_species(&sref.species).is_none() {
                return Err(SbmlError::BrokenReference(format!(
                    "reaction `{}` references unknown species `{}`",
                    r.id, sref.species
                )));
            }
        }
        for m in &r.modifiers {
            if doc.find_species(m).is_none() {
                return Err(SbmlError::BrokenReference(format!(
                    "reaction `{}` references unknown modifier species `{m}`",
                    r.id
                )));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Writing
// ---------------------------------------------------------------------------

fn esc(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

struct Emitter {
    out: String,
    step: usize,
    depth: usize,
    meta_counter: usize,
}

impl Emitter {
    fn line(&mut self, text: &str) {
        for _ in 0..self.depth * self.step {
            self.out.push(' ');
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn open(&mut self, text: &str) {
        self.line(text);
        self.depth += 1;
    }

    fn close(&mut self, text: &str) {
        self.depth -= 1;
        self.line(text);
    }

    fn next_metaid(&mut self) -> String {
        self.meta_counter += 1;
        format!("meta{:04}", self.meta_counter)
    }
}

/// Serialize with options matching the document's own level/version.
pub fn write_sbml_canonical(doc: &ModelDocument) -> Result<Vec<u8>, InvalidModel> {
    write_sbml(doc, &SbmlSerializationOptions::for_document(doc))
}

/// Serialize a validated document to deterministic SBML bytes.
pub fn write_sbml(
    doc: &ModelDocument,
    opts: &SbmlSerializationOptions,
) -> Result<Vec<u8>, InvalidModel> {
    require_valid(doc)?;
    let mut em = Emitter {
        out: String::new(),
        step: opts.indent.max(1),
        depth: 0,
        meta_counter: 0,
    };
    em.line("<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    em.open(&format!(
        "<sbml xmlns=\"{}\" level=\"{}\" version=\"{}\">",
        namespace_for(opts.level, opts.version),
        opts.level,
        opts.version
    ));

    let name_attr = if doc.name.is_empty() {
        String::new()
    } else {
        format!(" name=\"{}\"", esc(&doc.name))
    };
    em.open(&format!("<model id=\"{}\"{}>", esc(&doc.id), name_attr));

    if !doc.compartments.is_empty() {
        em.open("<listOfCompartments>");
        for c in &doc.compartments {
            let mut attrs = format!("id=\"{}\"", esc(&c.id));
            if !c.name.is_empty() {
                let _ = write!(attrs, " name=\"{}\"", esc(&c.name));
            }
            let _ = write!(attrs, " size=\"{}\"", format_number(c.size));
            write_element(&mut em, "compartment", attrs, &c.sbo, &c.annotations, None);
        }
        em.close("</listOfCompartments>");
    }

    if !doc.species.is_empty() {
        em.open("<listOfSpecies>");
        for s in &doc.species {
            let mut attrs = format!("id=\"{}\"", esc(&s.id));
            if !s.name.is_empty() {
                let _ = write!(attrs, " name=\"{}\"", esc(&s.name));
            }
            let _ = write!(
                attrs,
                " compartment=\"{}\" initialAmount=\"{}\"",
                esc(&s.compartment),
                format_number(s.initial_amount)
            );
            if s.boundary {
                attrs.push_str(" boundaryCondition=\"true\"");
            }
            if s.constant {
                attrs.push_str(" constant=\"true\"");
            }
            write_element(&mut em, "species", attrs, &s.sbo, &s.annotations, None);
        }
        em.close("</listOfSpecies>");
    }

    if !doc.parameters.is_empty() {
        em.open("<listOfParameters>");
        for p in &doc.parameters {
            write_parameter(&mut em, "parameter", p);
        }
        em.close("</listOfParameters>");
    }

    if !doc.reactions.is_empty() {
        em.open("<listOfReactions>");
        for r in &doc.reactions {
            write_reaction(&mut em, r, opts);
        }
        em.close("</listOfReactions>");
    }

    em.close("</model>");
    em.close("</sbml>");
    Ok(em.out.into_bytes())
}

fn write_parameter(em: &mut Emitter, tag: &str, p: &Parameter) {
    let attrs = format!("id=\"{}\" value=\"{}\"", esc(&p.id), format_number(p.value));
    write_element(em, tag, attrs, &p.sbo, &p.annotations, None);
}

/// Emit one element with optional sboTerm, RDF annotation block, and extra
/// child content (used for reaction bodies).
fn write_element(
    em: &mut Emitter,
    tag: &str,
    mut attrs: String,
    sbo: &Option<String>,
    annotations: &AnnotationSet,
    body: Option<&dyn Fn(&mut Emitter)>,
) {
    let metaid = if annotations.is_empty() {
        None
    } else {
        Some(em.next_metaid())
    };
    let mut head = String::from("<");
    head.push_str(tag);
    if let Some(m) = &metaid {
        let _ = write!(head, " metaid=\"{m}\"");
    }
    head.push(' ');
    head.push_str(&attrs);
    if let Some(s) = sbo {
        let _ = write!(head, " sboTerm=\"{}\"", esc(s));
    }
    attrs.clear();

    if metaid.is_none() && body.is_none() {
        head.push_str("/>");
        em.line(&head);
        return;
    }
    head.push('>');
    em.open(&head);
    if let Some(m) = &metaid {
        write_annotation_block(em, m, annotations);
    }
    if let Some(f) = body {
        f(em);
    }
    em.close(&format!("</{tag}>"));
}

fn write_annotation_block(em: &mut Emitter, metaid: &str, annotations: &AnnotationSet) {
    em.open("<annotation>");
    em.open(&format!(
        "<rdf:RDF xmlns:rdf=\"{RDF_NS}\" xmlns:bqbiol=\"{BQBIOL_NS}\" xmlns:bqmodel=\"{BQMODEL_NS}\">"
    ));
    em.open(&format!("<rdf:Description rdf:about=\"#{metaid}\">"));
    // Group entries by qualifier, preserving set order.
    let mut current: Option<&Qualifier> = None;
    for (q, uri) in annotations.iter() {
        if current != Some(q) {
            if current.is_some() {
                em.close("</rdf:Bag>");
                em.close(&format!("</{}>", qualifier_tag(current.unwrap())));
            }
            em.open(&format!("<{}>", qualifier_tag(q)));
            em.open("<rdf:Bag>");
            current = Some(q);
        }
        em.line(&format!(
            "<rdf:li rdf:resource=\"http://{}\"/>",
            esc(uri.as_str())
        ));
    }
    if let Some(q) = current {
        em.close("</rdf:Bag>");
        em.close(&format!("</{}>", qualifier_tag(q)));
    }
    em.close("</rdf:Description>");
    em.close("</rdf:RDF>");
    em.close("</annotation>");
}

fn qualifier_tag(q: &Qualifier) -> String {
    match q {
        // `isDescribedBy` is conventionally a model qualifier; the reader
        // accepts either namespace and keys on the local name.
        Qualifier::IsDescribedBy => "bqmodel:isDescribedBy".to_string(),
        other => format!("bqbiol:{}", other.as_str()),
    }
}

fn write_reaction(em: &mut Emitter, r: &Reaction, opts: &SbmlSerializationOptions) {
    let mut attrs = format!("id=\"{}\"", esc(&r.id));
    if !r.name.is_empty() {
        let _ = write!(attrs, " name=\"{}\"", esc(&r.name));
    }
    let _ = write!(attrs, " reversible=\"{}\"", r.reversible);
    let has_body = !r.reactants.is_empty()
        || !r.products.is_empty()
        || !r.modifiers.is_empty()
        || r.kinetic_law.is_some()
        || !r.local_parameters.is_empty();
    let body = |em: &mut Emitter| {
        if !r.reactants.is_empty() {
            em.open("<listOfReactants>");
            for sref in &r.reactants {
                em.line(&format!(
                    "<speciesReference species=\"{}\" stoichiometry=\"{}\"/>",
                    esc(&sref.species),
                    format_number(sref.stoichiometry)
                ));
            }
            em.close("</listOfReactants>");
        }
        if !r.products.is_empty() {
            em.open("<listOfProducts>");
            for sref in &r.products {
                em.line(&format!(
                    "<speciesReference species=\"{}\" stoichiometry=\"{}\"/>",
                    esc(&sref.species),
                    format_number(sref.stoichiometry)
                ));
            }
            em.close("</listOfProducts>");
        }
        if !r.modifiers.is_empty() {
            em.open("<listOfModifiers>");
            for m in &r.modifiers {
                em.line(&format!(
                    "<modifierSpeciesReference species=\"{}\"/>",
                    esc(m)
                ));
            }
            em.close("</listOfModifiers>");
        }
        if r.kinetic_law.is_some() || !r.local_parameters.is_empty() {
            em.open("<kineticLaw>");
            if let Some(law) = &r.kinetic_law {
                em.open(&format!("<math xmlns=\"{MATHML_NS}\">"));
                write_math(em, law);
                em.close("</math>");
            }
            if !r.local_parameters.is_empty() {
                let (list_tag, item_tag) = if opts.level >= 3 {
                    ("listOfLocalParameters", "localParameter")
                } else {
                    ("listOfParameters", "parameter")
                };
                em.open(&format!("<{list_tag}>"));
                for p in &r.local_parameters {
                    write_parameter(em, item_tag, p);
                }
                em.close(&format!("</{list_tag}>"));
            }
            em.close("</kineticLaw>");
        }
    };
    write_element(
        em,
        "reaction",
        attrs,
        &r.sbo,
        &r.annotations,
        if has_body { Some(&body) } else { None },
    );
}

fn write_math(em: &mut Emitter, e: &Expression) {
    match e {
        Expression::Number(v) => em.line(&format!("<cn> {} </cn>", format_number(*v))),
        Expression::Symbol(s) => em.line(&format!("<ci> {} </ci>", esc(s))),
        Expression::Add(a, b) => write_apply(em, "plus", &[a, b]),
        Expression::Sub(a, b) => write_apply(em, "minus", &[a, b]),
        Expression::Mul(a, b) => write_apply(em, "times", &[a, b]),
        Expression::Div(a, b) => write_apply(em, "divide", &[a, b]),
        Expression::Pow(a, b) => write_apply(em, "power", &[a, b]),
        Expression::Neg(a) => write_apply(em, "minus", &[a]),
    }
}

fn write_apply(em: &mut Emitter, op: &str, args: &[&Expression]) {
    em.open("<apply>");
    em.line(&format!("<{op}/>"));
    for a in args {
        write_math(em, a);
    }
    em.close("</apply>");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_model;

    fn my_model() -> ModelDocument {
        crate::model::my_model_fixture()
    }

    fn round_trip(doc: &ModelDocument) -> ModelDocument {
        let bytes = write_sbml_canonical(doc).unwrap();
        read_sbml(&bytes).unwrap()
    }

    #[test]
    fn my_model_round_trips() {
        let doc = my_model();
        assert_eq!(round_trip(&doc), doc);
    }

    #[test]
    fn writer_output_contains_expected_fragments() {
        let xml = String::from_utf8(write_sbml_canonical(&my_model()).unwrap()).unwrap();
        assert!(xml.contains("<reaction id=\"reaction1\" reversible=\"false\">"));
        assert!(xml.contains("<ci> kf </ci>"));
        assert!(xml.contains("xmlns=\"http://www.sbml.org/sbml/level2/version4\""));
        assert!(xml.contains("<minus/>"));
    }

    #[test]
    fn write_is_deterministic() {
        let a = write_sbml_canonical(&my_model()).unwrap();
        let b = write_sbml_canonical(&my_model()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn write_read_write_is_byte_stable() {
        let doc = my_model();
        let first = write_sbml_canonical(&doc).unwrap();
        let second = write_sbml_canonical(&read_sbml(&first).unwrap()).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn minimal_empty_sbml_reads_as_empty_document() {
        let xml = "<sbml xmlns=\"http://www.sbml.org/sbml/level2/version4\" level=\"2\" version=\"4\"><model/></sbml>";
        let doc = read_sbml(xml.as_bytes()).unwrap();
        assert_eq!(doc.id, "model");
        assert!(doc.compartments.is_empty());
        assert!(doc.species.is_empty());
        assert!(doc.reactions.is_empty());
        let report = validate_model(&doc);
        assert!(report.is_clean());
    }

    #[test]
    fn level3_round_trips_with_local_parameters() {
        let mut doc = my_model();
        doc.level = 3;
        doc.version = 1;
        doc.reactions[0]
            .local_parameters
            .push(Parameter::new("kcat", 10.0));
        let bytes = write_sbml_canonical(&doc).unwrap();
        let xml = String::from_utf8(bytes.clone()).unwrap();
        assert!(xml.contains("level3/version1/core"));
        assert!(xml.contains("<localParameter id=\"kcat\" value=\"10\"/>"));
        assert_eq!(read_sbml(&bytes).unwrap(), doc);
    }

    #[test]
    fn annotations_round_trip_as_rdf() {
        let mut doc = my_model();
        let uri = normalize_uri("urn:miriam:obo.chebi:CHEBI%3A17234").unwrap();
        doc.species[0]
            .annotations
            .insert(Qualifier::Is, uri.clone());
        doc.species[0].annotations.insert(
            Qualifier::IsDescribedBy,
            normalize_uri("identifiers.org/pubmed/12345").unwrap(),
        );
        doc.reactions[0].local_parameters.push({
            let mut p = Parameter::new("kx", 1.0);
            p.annotations.insert(
                Qualifier::IsVersionOf,
                normalize_uri("identifiers.org/ec-code/2.7.1.1").unwrap(),
            );
            p
        });
        let bytes = write_sbml_canonical(&doc).unwrap();
        let xml = String::from_utf8(bytes.clone()).unwrap();
        assert!(xml.contains(
            "<rdf:li rdf:resource=\"http://identifiers.org/obo.chebi/CHEBI:17234\"/>"
        ));
        assert!(xml.contains("<bqmodel:isDescribedBy>"));
        let back = read_sbml(&bytes).unwrap();
        assert_eq!(back, doc);
        // Exactly one rdf:li per annotation entry.
        assert_eq!(xml.matches("<rdf:li ").count(), 3);
    }

    #[test]
    fn sbo_terms_round_trip() {
        let mut doc = my_model();
        doc.reactions[0].sbo = Some("SBO:0000042".to_string());
        doc.parameters[0].sbo = Some("SBO:0000153".to_string());
        let bytes = write_sbml_canonical(&doc).unwrap();
        assert_eq!(read_sbml(&bytes).unwrap(), doc);
    }

    #[test]
    fn urn_annotations_normalize_on_read() {
        let xml = r##"<?xml version="1.0" encoding="UTF-8"?>
<sbml xmlns="http://www.sbml.org/sbml/level2/version4" level="2" version="4">
  <model id="m">
    <listOfCompartments><compartment id="c" size="1"/></listOfCompartments>
    <listOfSpecies>
      <species metaid="x" id="A" compartment="c" initialAmount="1">
        <annotation>
          <rdf:RDF xmlns:rdf="http://www.w3.org/1999/02/22-rdf-syntax-ns#" xmlns:bqbiol="http://biomodels.net/biology-qualifiers/">
            <rdf:Description rdf:about="#x">
              <bqbiol:is>
                <rdf:Bag>
                  <rdf:li rdf:resource="urn:miriam:obo.chebi:CHEBI%3A17234"/>
                </rdf:Bag>
              </bqbiol:is>
            </rdf:Description>
          </rdf:RDF>
        </annotation>
      </species>
    </listOfSpecies>
  </model>
</sbml>"##;
        let doc = read_sbml(xml.as_bytes()).unwrap();
        let uri = normalize_uri("identifiers.org/obo.chebi/CHEBI:17234").unwrap();
        assert!(doc.species[0].annotations.contains(&Qualifier::Is, &uri));
    }

    #[test]
    fn mathml_nary_and_cn_variants() {
        let xml = r#"<sbml xmlns="http://www.sbml.org/sbml/level2/version4" level="2" version="4">
  <model id="m">
    <listOfCompartments><compartment id="c" size="1"/></listOfCompartments>
    <listOfSpecies><species id="A" compartment="c" initialAmount="1"/></listOfSpecies>
    <listOfReactions>
      <reaction id="r" reversible="false">
        <listOfReactants><speciesReference species="A"/></listOfReactants>
        <kineticLaw>
          <math xmlns="http://www.w3.org/1998/Math/MathML">
            <apply>
              <plus/>
              <ci>A</ci>
              <cn type="integer">2</cn>
              <cn type="e-notation">1<sep/>-2</cn>
              <cn type="rational">1<sep/>4</cn>
            </apply>
          </math>
        </kineticLaw>
      </reaction>
    </listOfReactions>
  </model>
</sbml>"#;
        let doc = read_sbml(xml.as_bytes()).unwrap();
        let law = doc.reactions[0].kinetic_law.as_ref().unwrap();
        // ((A + 2) + 0.01) + 0.25 — left-assoc fold of the n-ary plus.
        let v = law.eval(&|s| (s == "A").then_some(1.0)).unwrap();
        assert!((v - 3.26).abs() < 1e-12);
        // Default stoichiometry read as 1.
        assert_eq!(doc.reactions[0].reactants[0].stoichiometry, 1.0);
        // SBML default: reversible defaults to true when absent.
        assert!(!doc.reactions[0].reversible);
    }

    #[test]
    fn unsupported_constructs_warn_and_drop() {
        let xml = r#"<sbml xmlns="http://www.sbml.org/sbml/level2/version4" level="2" version="4">
  <model id="m">
    <listOfRules><assignmentRule/></listOfRules>
    <listOfCompartments><compartment id="c" size="1"/></listOfCompartments>
    <listOfSpecies><species id="A" compartment="c" initialAmount="1"/></listOfSpecies>
    <listOfReactions>
      <reaction id="r" reversible="false">
        <listOfReactants><speciesReference species="A"/></listOfReactants>
        <kineticLaw>
          <math xmlns="http://www.w3.org/1998/Math/MathML">
            <piecewise/>
          </math>
        </kineticLaw>
      </reaction>
    </listOfReactions>
  </model>
</sbml>"#;
        let (doc, warnings) = read_sbml_with_warnings(xml.as_bytes()).unwrap();
        assert!(doc.reactions[0].kinetic_law.is_none());
        assert_eq!(warnings.len(), 2);
        assert!(warnings.iter().any(|w| w.contains("listOfRules")));
        assert!(warnings.iter().any(|w| w.contains("piecewise")));
    }

    #[test]
    fn error_variants() {
        assert!(matches!(
            read_sbml(b"not xml at all <"),
            Err(SbmlError::XmlSyntax(_))
        ));
        let l1 = b"<sbml xmlns=\"http://www.sbml.org/sbml/level1\" level=\"1\" version=\"2\"><model id=\"m\"/></sbml>";
        assert!(matches!(
            read_sbml(l1),
            Err(SbmlError::UnsupportedSbmlLevel(_))
        ));
        let broken = b"<sbml xmlns=\"http://www.sbml.org/sbml/level2/version4\" level=\"2\" version=\"4\"><model id=\"m\"><listOfSpecies><species id=\"A\" compartment=\"missing\" initialAmount=\"1\"/></listOfSpecies></model></sbml>";
        assert!(matches!(
            read_sbml(broken),
            Err(SbmlError::BrokenReference(_))
        ));
    }

    #[test]
    fn shorthand_and_sbml_agree() {
        let doc = crate::shorthand::parse_shorthand(
            "@model:2.4.1=MyModel\n@compartments\n  default=1\n@species\n  default:A=1\n  default:B=1\n@parameters\n  kf=1\n  kr=1\n@reactions\n@rxn=reaction1\nA -> B\nkf*A-kr*B\n",
        )
        .unwrap();
        assert_eq!(round_trip(&doc), doc);
    }
}
