//! The shorthand model DSL: a line-oriented text form compiled to
//! [`ModelDocument`] and back.
//!
//! Core grammar (blank lines and `#` comments ignored, indentation free):
//!
//! ```text
//! @model:<level>.<version>.<revision>=<ModelId>
//! @compartments
//!   <id>=<size>
//! @species
//!   <compartment>:<id>=<amount> [b] [c]
//! @parameters
//!   <id>=<value>
//! @reactions
//! @rxn=<id>
//! [coef] S (+ [coef] S)* (->|<->) [coef] P (+ [coef] P)* [: M (, M)*]
//! <infix kinetic law>
//! ```
//!
//! So that printing is a faithful inverse of parsing for every valid
//! document, the dialect adds a few orthogonal extensions, all optional:
//! quoted display names after an id (`default:A "Glucose"=1`), an
//! `!SBO:0000000` tag at the end of an element line, `@local:<id>=<value>`
//! lines after a reaction's kinetic law, an `@annotations` section of
//! `<target> <qualifier> <uri>` lines (target is an element id or
//! `<reaction>.<local>`), empty reaction sides, and an omitted kinetic-law
//! line. [`print_shorthand`] emits a canonical layout: fixed section order,
//! two-space indent for element lines, one reaction per block.

use thiserror::Error;

use crate::annotation::{normalize_uri, Qualifier};
use crate::expr::{format_number, Expression};
use crate::model::{
    require_valid, Compartment, InvalidModel, ModelDocument, Parameter, Reaction, Species,
    SpeciesRef,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShorthandError {
    #[error("line {line}, column {col}: expected {expected}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
    },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: unknown section `@{section}`")]
    UnknownSection { line: usize, section: String },
    #[error("line {line}: reaction block `{id}` has no equation line")]
    DanglingReactionBlock { line: usize, id: String },
}

/// Character cursor over one line, tracking 1-based columns.
struct Cursor {
    line: usize,
    chars: Vec<char>,
    pos: usize,
}

impl Cursor {
    fn new(line: usize, text: &str) -> Self {
        Cursor {
            line,
            chars: text.chars().collect(),
            pos: 0,
        }
    }

    fn col(&self) -> usize {
        self.pos + 1
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn err(&self, expected: impl Into<String>) -> ShorthandError {
        ShorthandError::Syntax {
            line: self.line,
            col: self.col(),
            expected: expected.into(),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ShorthandError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("`{c}`")))
        }
    }

    fn eat_str(&mut self, s: &str) -> bool {
        let end = self.pos + s.chars().count();
        if end <= self.chars.len() && self.chars[self.pos..end].iter().collect::<String>() == s {
            self.pos = end;
            true
        } else {
            false
        }
    }

    fn take_identifier(&mut self) -> Result<String, ShorthandError> {
        let start = self.pos;
        if matches!(self.peek(), Some(c) if c.is_ascii_alphabetic() || c == '_') {
            self.pos += 1;
            while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                self.pos += 1;
            }
            Ok(self.chars[start..self.pos].iter().collect())
        } else {
            Err(self.err("identifier"))
        }
    }

    fn take_number(&mut self) -> Result<f64, ShorthandError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some('.') {
            self.pos += 1;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some('+' | '-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = mark; // `e` belonged to something else
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        if text.is_empty() || text == "." {
            self.pos = start;
            return Err(self.err("number"));
        }
        text.parse::<f64>().map_err(|_| ShorthandError::Syntax {
            line: self.line,
            col: start + 1,
            expected: "number".to_string(),
        })
    }

    /// A `"…"`-quoted display name with `\"`, `\\`, `\n`, `\t` escapes.
    fn take_quoted(&mut self) -> Result<String, ShorthandError> {
        self.expect('"')?;
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.err("closing `\"`")),
                Some('"') => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    _ => return Err(self.err("escape `\\\"`, `\\\\`, `\\n`, or `\\t`")),
                },
                Some(c) => out.push(c),
            }
        }
    }

    /// Optional quoted name directly after an id; empty string when absent.
    fn take_optional_name(&mut self) -> Result<String, ShorthandError> {
        self.skip_ws();
        if self.peek() == Some('"') {
            self.take_quoted()
        } else {
            Ok(String::new())
        }
    }

    /// An `!SBO:0000000` tag.
    fn take_sbo_tag(&mut self) -> Result<String, ShorthandError> {
        self.expect('!')?;
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == ':') {
            self.pos += 1;
        }
        let tag: String = self.chars[start..self.pos].iter().collect();
        if tag.is_empty() {
            return Err(self.err("SBO id after `!`"));
        }
        Ok(tag)
    }

    /// Optional trailing `!SBO…` tag; the line must end afterwards.
    fn finish_with_optional_sbo(&mut self) -> Result<Option<String>, ShorthandError> {
        self.skip_ws();
        let sbo = if self.peek() == Some('!') {
            Some(self.take_sbo_tag()?)
        } else {
            None
        };
        self.skip_ws();
        if self.at_end() {
            Ok(sbo)
        } else {
            Err(self.err("end of line"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    None,
    Compartments,
    Species,
    Parameters,
    Reactions,
    Annotations,
}

/// State of the reaction block under construction inside `@reactions`.
enum BlockState {
    NoBlock,
    /// `@rxn` seen on the recorded line; equation still missing.
    AwaitEquation(Reaction, usize),
    /// Equation parsed; `bool` = kinetic-law line already consumed.
    InBlock(Reaction, bool),
}

/// Compile shorthand text to a document. Accepts LF or CRLF input.
pub fn parse_shorthand(src: &str) -> Result<ModelDocument, ShorthandError> {
    let mut doc: Option<ModelDocument> = None;
    let mut section = Section::None;
    let mut block = BlockState::NoBlock;
    // (line, target, qualifier, uri) applied after all elements exist.
    let mut pending_annotations: Vec<(usize, String, Qualifier, String)> = Vec::new();
    let mut seen_ids: Vec<String> = Vec::new();

    for (idx, raw_line) in src.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = raw_line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let indent = raw_line.len() - raw_line.trim_start().len();
        let mut cur = Cursor::new(line_no, raw_line.trim_end());
        cur.pos = raw_line[..indent].chars().count();

        let doc_ref = match doc.as_mut() {
            None => {
                // Very first significant line must be the header.
                let parsed = parse_header(&mut cur)?;
                doc = Some(parsed);
                continue;
            }
            Some(d) => d,
        };

        if trimmed.starts_with('@') {
            // Section headers, reaction headers, and local-parameter lines.
            if cur.eat_str("@rxn=") {
                if section != Section::Reactions {
                    return Err(cur.err("`@rxn` only inside the @reactions section"));
                }
                finish_block(
                    std::mem::replace(&mut block, BlockState::NoBlock),
                    doc_ref,
                )?;
                let id = cur.take_identifier()?;
                check_new_id(&mut seen_ids, &id, line_no)?;
                let name = cur.take_optional_name()?;
                let sbo = cur.finish_with_optional_sbo()?;
                let mut rxn = Reaction::new(&id, false);
                rxn.name = name;
                rxn.sbo = sbo;
                block = BlockState::AwaitEquation(rxn, line_no);
                continue;
            }
            if cur.eat_str("@local:") {
                let rxn = match block {
                    BlockState::InBlock(ref mut r, _) => r,
                    BlockState::AwaitEquation(ref r, _) => {
                        return Err(ShorthandError::DanglingReactionBlock {
                            line: line_no,
                            id: r.id.clone(),
                        })
                    }
                    BlockState::NoBlock => {
                        return Err(cur.err("`@local:` only inside a reaction block"))
                    }
                };
                let id = cur.take_identifier()?;
                if rxn.local_parameters.iter().any(|p| p.id == id) {
                    return Err(ShorthandError::DuplicateId { line: line_no, id });
                }
                cur.skip_ws();
                cur.expect('=')?;
                cur.skip_ws();
                let value = cur.take_number()?;
                let sbo = cur.finish_with_optional_sbo()?;
                let mut p = Parameter::new(&id, value);
                p.sbo = sbo;
                rxn.local_parameters.push(p);
                continue;
            }
            // Plain section header.
            cur.expect('@')?;
            let word = cur.take_identifier().map_err(|_| cur.err("section name"))?;
            cur.skip_ws();
            if !cur.at_end() {
                return Err(cur.err("end of line after section header"));
            }
            let next = match word.as_str() {
                "compartments" => Section::Compartments,
                "species" => Section::Species,
                "parameters" => Section::Parameters,
                "reactions" => Section::Reactions,
                "annotations" => Section::Annotations,
                _ => {
                    return Err(ShorthandError::UnknownSection {
                        line: line_no,
                        section: word,
                    })
                }
            };
            finish_block(
                std::mem::replace(&mut block, BlockState::NoBlock),
                doc_ref,
            )?;
            section = next;
            continue;
        }

        match section {
            Section::None => {
                return Err(cur.err("a section header such as `@species`"));
            }
            Section::Compartments => {
                let id = cur.take_identifier()?;
                check_new_id(&mut seen_ids, &id, line_no)?;
                let name = cur.take_optional_name()?;
                cur.skip_ws();
                cur.expect('=')?;
                cur.skip_ws();
                let size = cur.take_number()?;
                let sbo = cur.finish_with_optional_sbo()?;
                let mut c = Compartment::new(&id, size);
                c.name = name;
                c.sbo = sbo;
                doc_ref.compartments.push(c);
            }
            Section::Species => {
                let compartment = cur.take_identifier()?;
                cur.expect(':')?;
                let id = cur.take_identifier()?;
                check_new_id(&mut seen_ids, &id, line_no)?;
                let name = cur.take_optional_name()?;
                cur.skip_ws();
                cur.expect('=')?;
                cur.skip_ws();
                let amount = cur.take_number()?;
                let mut sp = Species::new(&id, &compartment, amount);
                sp.name = name;
                // Flags and optional SBO tag, in any order, each at most once.
                loop {
                    cur.skip_ws();
                    match cur.peek() {
                        None => break,
                        Some('!') => {
                            if sp.sbo.is_some() {
                                return Err(cur.err("at most one `!SBO` tag"));
                            }
                            sp.sbo = Some(cur.take_sbo_tag()?);
                        }
                        Some(_) => {
                            let flag = cur.take_identifier().map_err(|_| {
                                cur.err("flag `b`, flag `c`, or `!SBO` tag")
                            })?;
                            match flag.as_str() {
                                "b" if !sp.boundary => sp.boundary = true,
                                "c" if !sp.constant => sp.constant = true,
                                _ => {
                                    return Err(cur.err(
                                        "flag `b`, flag `c`, or `!SBO` tag (each at most once)",
                                    ))
                                }
                            }
                        }
                    }
                }
                doc_ref.species.push(sp);
            }
            Section::Parameters => {
                let id = cur.take_identifier()?;
                check_new_id(&mut seen_ids, &id, line_no)?;
                cur.skip_ws();
                cur.expect('=')?;
                cur.skip_ws();
                let value = cur.take_number()?;
                let sbo = cur.finish_with_optional_sbo()?;
                let mut p = Parameter::new(&id, value);
                p.sbo = sbo;
                doc_ref.parameters.push(p);
            }
            Section::Reactions => match std::mem::replace(&mut block, BlockState::NoBlock) {
                BlockState::NoBlock => {
                    return Err(cur.err("`@rxn=` reaction header"));
                }
                BlockState::AwaitEquation(mut rxn, _) => {
                    parse_equation(&mut cur, &mut rxn)?;
                    block = BlockState::InBlock(rxn, false);
                }
                BlockState::InBlock(mut rxn, law_taken) => {
                    if law_taken {
                        return Err(cur.err("`@local:` line, `@rxn=` header, or section header"));
                    }
                    let offset = cur.pos;
                    let text: String = cur.chars[offset..].iter().collect();
                    let law = Expression::parse_infix(&text).map_err(|e| {
                        ShorthandError::Syntax {
                            line: line_no,
                            col: offset + e.column,
                            expected: e.expected,
                        }
                    })?;
                    rxn.kinetic_law = Some(law);
                    block = BlockState::InBlock(rxn, true);
                }
            },
            Section::Annotations => {
                let target = take_annotation_target(&mut cur)?;
                cur.skip_ws();
                let qualifier_word = cur
                    .take_identifier()
                    .map_err(|_| cur.err("annotation qualifier"))?;
                cur.skip_ws();
                let uri_start = cur.pos;
                while matches!(cur.peek(), Some(c) if !c.is_whitespace()) {
                    cur.pos += 1;
                }
                let uri: String = cur.chars[uri_start..cur.pos].iter().collect();
                if uri.is_empty() {
                    return Err(cur.err("resource URI"));
                }
                cur.skip_ws();
                if !cur.at_end() {
                    return Err(cur.err("end of line"));
                }
                pending_annotations.push((line_no, target, Qualifier::parse(&qualifier_word), uri));
            }
        }
    }

    let mut doc = match doc {
        Some(d) => d,
        None => {
            return Err(ShorthandError::Syntax {
                line: 1,
                col: 1,
                expected: "`@model:<L>.<V>.<R>=<Id>` header".to_string(),
            })
        }
    };
    finish_block(block, &mut doc)?;

    for (line, target, qualifier, uri) in pending_annotations {
        let uri = normalize_uri(&uri).map_err(|e| ShorthandError::Syntax {
            line,
            col: 1,
            expected: format!("recognized URI form ({e})"),
        })?;
        match doc.annotations_mut(&target) {
            Some(set) => {
                set.insert(qualifier, uri);
            }
            None => {
                return Err(ShorthandError::Syntax {
                    line,
                    col: 1,
                    expected: format!("annotation target among declared elements, got `{target}`"),
                })
            }
        }
    }

    Ok(doc)
}

fn check_new_id(
    seen: &mut Vec<String>,
    id: &str,
    line: usize,
) -> Result<(), ShorthandError> {
    if seen.iter().any(|s| s == id) {
        Err(ShorthandError::DuplicateId {
            line,
            id: id.to_string(),
        })
    } else {
        seen.push(id.to_string());
        Ok(())
    }
}

fn finish_block(block: BlockState, doc: &mut ModelDocument) -> Result<(), ShorthandError> {
    match block {
        BlockState::NoBlock => Ok(()),
        BlockState::AwaitEquation(rxn, line) => Err(ShorthandError::DanglingReactionBlock {
            line,
            id: rxn.id,
        }),
        BlockState::InBlock(rxn, _) => {
            doc.reactions.push(rxn);
            Ok(())
        }
    }
}

fn parse_header(cur: &mut Cursor) -> Result<ModelDocument, ShorthandError> {
    cur.skip_ws();
    if !cur.eat_str("@model:") {
        return Err(cur.err("`@model:<L>.<V>.<R>=<Id>` header"));
    }
    let level = take_small_int(cur)?;
    cur.expect('.')?;
    let version = take_small_int(cur)?;
    cur.expect('.')?;
    let _revision = take_small_int(cur)?; // opaque, accepted and ignored
    cur.expect('=')?;
    let id = cur.take_identifier()?;
    let name = cur.take_optional_name()?;
    cur.skip_ws();
    if !cur.at_end() {
        return Err(cur.err("end of line after model header"));
    }
    let mut doc = ModelDocument::new(&id);
    doc.name = name;
    doc.level = level;
    doc.version = version;
    Ok(doc)
}

fn take_small_int(cur: &mut Cursor) -> Result<u32, ShorthandError> {
    let start = cur.pos;
    while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
        cur.pos += 1;
    }
    let text: String = cur.chars[start..cur.pos].iter().collect();
    text.parse::<u32>().map_err(|_| ShorthandError::Syntax {
        line: cur.line,
        col: start + 1,
        expected: "integer".to_string(),
    })
}

/// `<target>` of an annotation line: element id or `<reaction>.<local>`.
fn take_annotation_target(cur: &mut Cursor) -> Result<String, ShorthandError> {
    let first = cur.take_identifier()?;
    if cur.peek() == Some('.') {
        cur.pos += 1;
        let second = cur.take_identifier()?;
        Ok(format!("{first}.{second}"))
    } else {
        Ok(first)
    }
}

fn parse_equation(cur: &mut Cursor, rxn: &mut Reaction) -> Result<(), ShorthandError> {
    rxn.reactants = parse_side(cur)?;
    cur.skip_ws();
    if cur.eat_str("<->") {
        rxn.reversible = true;
    } else if cur.eat_str("->") {
        rxn.reversible = false;
    } else {
        return Err(cur.err("`->` or `<->`"));
    }
    rxn.products = parse_side(cur)?;
    cur.skip_ws();
    if cur.peek() == Some(':') {
        cur.pos += 1;
        loop {
            cur.skip_ws();
            let m = cur.take_identifier().map_err(|_| cur.err("modifier id"))?;
            rxn.modifiers.push(m);
            cur.skip_ws();
            if cur.peek() == Some(',') {
                cur.pos += 1;
            } else {
                break;
            }
        }
    }
    cur.skip_ws();
    if cur.at_end() {
        Ok(())
    } else {
        Err(cur.err("end of equation line"))
    }
}

/// One side of an equation: zero or more `[coef] id` items joined by `+`.
fn parse_side(cur: &mut Cursor) -> Result<Vec<SpeciesRef>, ShorthandError> {
    let mut out = Vec::new();
    cur.skip_ws();
    // Empty side: the arrow, the modifier delimiter, or the end comes first.
    if matches!(cur.peek(), None | Some('-') | Some('<') | Some(':')) {
        return Ok(out);
    }
    loop {
        cur.skip_ws();
        let coef = if matches!(cur.peek(), Some(c) if c.is_ascii_digit() || c == '.') {
            let v = cur.take_number()?;
            cur.skip_ws();
            v
        } else {
            1.0
        };
        let id = cur.take_identifier()?;
        out.push(SpeciesRef::new(&id, coef));
        cur.skip_ws();
        if cur.peek() == Some('+') {
            cur.pos += 1;
        } else {
            break;
        }
    }
    Ok(out)
}

fn escape_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len() + 2);
    out.push('"');
    for c in name.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn name_suffix(name: &str) -> String {
    if name.is_empty() {
        String::new()
    } else {
        format!(" {}", escape_name(name))
    }
}

fn sbo_suffix(sbo: &Option<String>) -> String {
    match sbo {
        Some(s) => format!(" !{s}"),
        None => String::new(),
    }
}

fn side_text(refs: &[SpeciesRef]) -> String {
    refs.iter()
        .map(|r| {
            if r.stoichiometry == 1.0 {
                r.species.clone()
            } else {
                format!("{} {}", format_number(r.stoichiometry), r.species)
            }
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

/// Decompile a document to canonical shorthand text (LF line endings).
/// `parse_shorthand(print_shorthand(doc)) == doc` for every valid document.
pub fn print_shorthand(doc: &ModelDocument) -> Result<String, InvalidModel> {
    require_valid(doc)?;
    let mut out = String::new();
    out.push_str(&format!(
        "@model:{}.{}.1={}{}\n",
        doc.level,
        doc.version,
        doc.id,
        name_suffix(&doc.name)
    ));

    if !doc.compartments.is_empty() {
        out.push_str("@compartments\n");
        for c in &doc.compartments {
            out.push_str(&format!(
                "  {}{}={}{}\n",
                c.id,
                name_suffix(&c.name),
                format_number(c.size),
                sbo_suffix(&c.sbo)
            ));
        }
    }
    if !doc.species.is_empty() {
        out.push_str("@species\n");
        for s in &doc.species {
            let mut flags = String::new();
            if s.boundary {
                flags.push_str(" b");
            }
            if s.constant {
                flags.push_str(" c");
            }
            out.push_str(&format!(
                "  {}:{}{}={}{}{}\n",
                s.compartment,
                s.id,
                name_suffix(&s.name),
                format_number(s.initial_amount),
                flags,
                sbo_suffix(&s.sbo)
            ));
        }
    }
    if !doc.parameters.is_empty() {
        out.push_str("@parameters\n");
        for p in &doc.parameters {
            out.push_str(&format!(
                "  {}={}{}\n",
                p.id,
                format_number(p.value),
                sbo_suffix(&p.sbo)
            ));
        }
    }
    if !doc.reactions.is_empty() {
        out.push_str("@reactions\n");
        for r in &doc.reactions {
            out.push_str(&format!(
                "@rxn={}{}{}\n",
                r.id,
                name_suffix(&r.name),
                sbo_suffix(&r.sbo)
            ));
            let arrow = if r.reversible { "<->" } else { "->" };
            let left = side_text(&r.reactants);
            let right = side_text(&r.products);
            let mut eq = String::new();
            if !left.is_empty() {
                eq.push_str(&left);
                eq.push(' ');
            }
            eq.push_str(arrow);
            if !right.is_empty() {
                eq.push(' ');
                eq.push_str(&right);
            }
            if !r.modifiers.is_empty() {
                eq.push_str(" : ");
                eq.push_str(&r.modifiers.join(", "));
            }
            out.push_str(&eq);
            out.push('\n');
            if let Some(law) = &r.kinetic_law {
                out.push_str(&law.to_infix());
                out.push('\n');
            }
            for lp in &r.local_parameters {
                out.push_str(&format!(
                    "@local:{}={}{}\n",
                    lp.id,
                    format_number(lp.value),
                    sbo_suffix(&lp.sbo)
                ));
            }
        }
    }

    // Annotation lines, in document order then set order.
    let mut ann_lines: Vec<String> = Vec::new();
    let mut push_set = |target: String, set: &crate::annotation::AnnotationSet| {
        for (q, u) in set.iter() {
            ann_lines.push(format!("  {target} {q} {u}\n"));
        }
    };
    for c in &doc.compartments {
        push_set(c.id.clone(), &c.annotations);
    }
    for s in &doc.species {
        push_set(s.id.clone(), &s.annotations);
    }
    for p in &doc.parameters {
        push_set(p.id.clone(), &p.annotations);
    }
    for r in &doc.reactions {
        push_set(r.id.clone(), &r.annotations);
        for lp in &r.local_parameters {
            push_set(format!("{}.{}", r.id, lp.id), &lp.annotations);
        }
    }
    if !ann_lines.is_empty() {
        out.push_str("@annotations\n");
        for l in ann_lines {
            out.push_str(&l);
        }
    }

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_model;

    const LISTING: &str = "@model:2.4.1=MyModel\n\
@compartments\n\
  default=1\n\
@species\n\
  default:A=1\n\
  default:B=1\n\
@parameters\n\
  kf=1\n\
  kr=1\n\
@reactions\n\
@rxn=reaction1\n\
A -> B\n\
kf*A-kr*B\n";

    #[test]
    fn listing_compiles_to_my_model() {
        let doc = parse_shorthand(LISTING).unwrap();
        assert_eq!(doc, crate::model::my_model_fixture());
        assert!(validate_model(&doc).is_clean());
    }

    #[test]
    fn listing_counts() {
        let doc = parse_shorthand(LISTING).unwrap();
        assert_eq!(doc.compartments.len(), 1);
        assert_eq!(doc.species.len(), 2);
        assert_eq!(doc.parameters.len(), 2);
        assert_eq!(doc.reactions.len(), 1);
        let law = doc.reactions[0].kinetic_law.as_ref().unwrap();
        let v = law.eval(&|_| Some(1.0)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn header_only_model() {
        let doc = parse_shorthand("@model:2.4.1=Empty\n").unwrap();
        assert_eq!(doc.id, "Empty");
        assert_eq!(doc.level, 2);
        assert_eq!(doc.version, 4);
        assert!(doc.compartments.is_empty());
        assert!(doc.reactions.is_empty());
        assert_eq!(print_shorthand(&doc).unwrap(), "@model:2.4.1=Empty\n");
    }

    #[test]
    fn coefficients_and_modifiers() {
        let src = "@model:2.4.1=M\n@compartments\n  c=1\n@species\n  c:A=1\n  c:B=1\n  c:C=1\n  c:E=1\n@reactions\n@rxn=r1\n2 A + B -> C : E\n";
        let doc = parse_shorthand(src).unwrap();
        let r = &doc.reactions[0];
        assert_eq!(r.reactants.len(), 2);
        assert_eq!(r.reactants[0].species, "A");
        assert_eq!(r.reactants[0].stoichiometry, 2.0);
        assert_eq!(r.reactants[1].species, "B");
        assert_eq!(r.reactants[1].stoichiometry, 1.0);
        assert_eq!(r.products[0].species, "C");
        assert_eq!(r.modifiers, ["E"]);
        assert!(r.kinetic_law.is_none());
        assert!(!r.reversible);
    }

    #[test]
    fn print_parse_is_identity_on_listing() {
        let doc = parse_shorthand(LISTING).unwrap();
        let printed = print_shorthand(&doc).unwrap();
        let reparsed = parse_shorthand(&printed).unwrap();
        assert_eq!(doc, reparsed);
        // print∘parse is a fixpoint after one pass.
        assert_eq!(print_shorthand(&reparsed).unwrap(), printed);
    }

    #[test]
    fn reversible_arrow_round_trips() {
        let src = "@model:2.4.1=M\n@compartments\n  c=1\n@species\n  c:A=1\n  c:B=1\n@reactions\n@rxn=r1\nA <-> B\n";
        let doc = parse_shorthand(src).unwrap();
        assert!(doc.reactions[0].reversible);
        let printed = print_shorthand(&doc).unwrap();
        assert!(printed.contains("A <-> B"));
        assert_eq!(parse_shorthand(&printed).unwrap(), doc);
    }

    #[test]
    fn extensions_round_trip() {
        let src = concat!(
            "@model:3.1.7=Big \"The Big Model\"\n",
            "@compartments\n",
            "  cyto \"Cytosol\"=2.5 !SBO:0000290\n",
            "@species\n",
            "  cyto:glc \"D-Glucose\"=0.5 b c !SBO:0000247\n",
            "  cyto:atp=3\n",
            "@parameters\n",
            "  k1=0.001 !SBO:0000153\n",
            "@reactions\n",
            "@rxn=use \"consume glucose\" !SBO:0000375\n",
            "2 glc + atp -> : glc\n",
            "k1*glc^2\n",
            "@local:kc=10 !SBO:0000025\n",
            "@rxn=make\n",
            "-> glc\n",
            "@annotations\n",
            "  glc is identifiers.org/obo.chebi/CHEBI:17234\n",
            "  glc isVersionOf identifiers.org/kegg.compound/C00031\n",
            "  use.kc is identifiers.org/ec-code/2.7.1.1\n",
        );
        let doc = parse_shorthand(src).unwrap();
        assert_eq!(doc.level, 3);
        assert_eq!(doc.version, 1);
        assert_eq!(doc.name, "The Big Model");
        assert_eq!(doc.compartments[0].name, "Cytosol");
        assert_eq!(doc.compartments[0].sbo.as_deref(), Some("SBO:0000290"));
        let glc = doc.find_species("glc").unwrap();
        assert!(glc.boundary && glc.constant);
        assert_eq!(glc.annotations.len(), 2);
        let rxn = doc.find_reaction("use").unwrap();
        assert_eq!(rxn.local_parameters[0].id, "kc");
        assert_eq!(rxn.local_parameters[0].annotations.len(), 1);
        assert!(rxn.products.is_empty());
        assert!(doc.find_reaction("make").unwrap().reactants.is_empty());
        assert!(doc.find_reaction("make").unwrap().kinetic_law.is_none());

        let printed = print_shorthand(&doc).unwrap();
        let reparsed = parse_shorthand(&printed).unwrap();
        assert_eq!(doc, reparsed);
        assert_eq!(print_shorthand(&reparsed).unwrap(), printed);
    }

    #[test]
    fn crlf_accepted() {
        let src = LISTING.replace('\n', "\r\n");
        assert_eq!(parse_shorthand(&src).unwrap(), parse_shorthand(LISTING).unwrap());
    }

    #[test]
    fn missing_header_is_syntax_error() {
        let err = parse_shorthand("@compartments\n  c=1\n").unwrap_err();
        match err {
            ShorthandError::Syntax { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other:?}"),
        }
        assert!(matches!(
            parse_shorthand(""),
            Err(ShorthandError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn unknown_section_reported() {
        let err = parse_shorthand("@model:2.4.1=M\n@things\n").unwrap_err();
        assert_eq!(
            err,
            ShorthandError::UnknownSection {
                line: 2,
                section: "things".into()
            }
        );
    }

    #[test]
    fn dangling_reaction_block_reported() {
        let src = "@model:2.4.1=M\n@reactions\n@rxn=r1\n";
        let err = parse_shorthand(src).unwrap_err();
        assert_eq!(
            err,
            ShorthandError::DanglingReactionBlock {
                line: 3,
                id: "r1".into()
            }
        );
    }

    #[test]
    fn duplicate_id_reported() {
        let src = "@model:2.4.1=M\n@parameters\n  k=1\n  k=2\n";
        let err = parse_shorthand(src).unwrap_err();
        assert_eq!(
            err,
            ShorthandError::DuplicateId {
                line: 4,
                id: "k".into()
            }
        );
    }

    #[test]
    fn bad_kinetic_law_has_line_and_column() {
        let src = "@model:2.4.1=M\n@compartments\n  c=1\n@species\n  c:A=1\n@reactions\n@rxn=r\nA ->\nA + * 2\n";
        match parse_shorthand(src).unwrap_err() {
            ShorthandError::Syntax { line, col, .. } => {
                assert_eq!(line, 9);
                assert_eq!(col, 5);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn undeclared_annotation_target_rejected() {
        let src = "@model:2.4.1=M\n@annotations\n  nope is identifiers.org/a/1\n";
        assert!(matches!(
            parse_shorthand(src),
            Err(ShorthandError::Syntax { line: 3, .. })
        ));
    }

    #[test]
    fn equation_without_arrow_rejected() {
        let src = "@model:2.4.1=M\n@compartments\n  c=1\n@species\n  c:A=1\n@reactions\n@rxn=r\nA + A\n";
        assert!(matches!(
            parse_shorthand(src),
            Err(ShorthandError::Syntax { line: 8, .. })
        ));
    }
}
