//! Structural rate-law classification and SBO term assignment.
//!
//! A kinetic law is matched — after canonicalization, so the order of sum
//! and product operands never matters — against four pattern families:
//!
//! - `k·Π c_s^{m_s}` with exponents matching the reactant stoichiometry →
//!   irreversible mass action;
//! - `kf·Π c_s^{m_s} − kr·Π c_p^{m_p}` matching reactant/product
//!   stoichiometries → reversible mass action;
//! - `V·c/(K + c)` over the single substrate → irreversible
//!   Michaelis–Menten;
//! - the common modular rate law (see
//!   [`crate::balance::modular_rate_law`]) → modular reversible.
//!
//! Everything else is `Unknown` and left untouched. SBO identifiers are
//! never hardcoded: they come from an editable rule table
//! ([`SboRuleTable`]), shipped with defaults taken from the Systems Biology
//! Ontology export. Assignment never overwrites an existing `sbo` value.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::balance::modular_denominator;
use crate::expr::{canonical_key, collect_product, collect_sum, Expression};
use crate::model::{require_valid, InvalidModel, ModelDocument, Reaction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateLawClass {
    MassActionIrreversible,
    MassActionReversible,
    MichaelisMentenIrreversible,
    ModularReversible,
    Unknown,
}

impl RateLawClass {
    /// The classes a rule table must map (everything except `Unknown`).
    pub const ASSIGNABLE: [RateLawClass; 4] = [
        RateLawClass::MassActionIrreversible,
        RateLawClass::MassActionReversible,
        RateLawClass::MichaelisMentenIrreversible,
        RateLawClass::ModularReversible,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RateLawClass::MassActionIrreversible => "mass-action-irreversible",
            RateLawClass::MassActionReversible => "mass-action-reversible",
            RateLawClass::MichaelisMentenIrreversible => "michaelis-menten-irreversible",
            RateLawClass::ModularReversible => "modular-reversible",
            RateLawClass::Unknown => "unknown",
        }
    }
}

impl fmt::Display for RateLawClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParameterRole {
    ForwardRateConstant,
    ReverseRateConstant,
    CatalyticConstant,
    MichaelisConstant,
    MaximalVelocity,
    InhibitionConstant,
    ActivationConstant,
}

impl ParameterRole {
    pub const ALL: [ParameterRole; 7] = [
        ParameterRole::ForwardRateConstant,
        ParameterRole::ReverseRateConstant,
        ParameterRole::CatalyticConstant,
        ParameterRole::MichaelisConstant,
        ParameterRole::MaximalVelocity,
        ParameterRole::InhibitionConstant,
        ParameterRole::ActivationConstant,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ParameterRole::ForwardRateConstant => "forward-rate-constant",
            ParameterRole::ReverseRateConstant => "reverse-rate-constant",
            ParameterRole::CatalyticConstant => "catalytic-constant",
            ParameterRole::MichaelisConstant => "michaelis-constant",
            ParameterRole::MaximalVelocity => "maximal-velocity",
            ParameterRole::InhibitionConstant => "inhibition-constant",
            ParameterRole::ActivationConstant => "activation-constant",
        }
    }
}

impl fmt::Display for ParameterRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum SboError {
    #[error("reaction `{0}` has no kinetic law")]
    NoKineticLaw(String),
    #[error("malformed rule table: {0}")]
    MalformedRuleTable(String),
    #[error(transparent)]
    Invalid(#[from] InvalidModel),
}

/// Default rule table, TSV with columns `Target`, `Pattern/Role`, `SBOId`.
///
/// The identifiers were taken from the Systems Biology Ontology export
/// (https://www.ebi.ac.uk/sbo/): 41/42 mass action rate laws for
/// irreversible/reversible reactions (continuous scheme), 29
/// Henri–Michaelis–Menten, 528 common modular rate law, 153/156
/// forward/reverse rate constant, 25 catalytic rate constant, 27 Michaelis
/// constant, 186 maximal velocity, 261 inhibitory constant, 363 activation
/// constant. They are data, not code — pass an edited table to track
/// ontology revisions.
pub const DEFAULT_RULE_TABLE_TSV: &str = "\
# Default SBO assignments. Columns: Target <tab> Pattern/Role <tab> SBOId.
# Identifiers follow the Systems Biology Ontology export; edit and supply
# your own table to track ontology updates.
law\tmass-action-irreversible\tSBO:0000041
law\tmass-action-reversible\tSBO:0000042
law\tmichaelis-menten-irreversible\tSBO:0000029
law\tmodular-reversible\tSBO:0000528
parameter\tforward-rate-constant\tSBO:0000153
parameter\treverse-rate-constant\tSBO:0000156
parameter\tcatalytic-constant\tSBO:0000025
parameter\tmichaelis-constant\tSBO:0000027
parameter\tmaximal-velocity\tSBO:0000186
parameter\tinhibition-constant\tSBO:0000261
parameter\tactivation-constant\tSBO:0000363
";

/// Maps every assignable [`RateLawClass`] and every [`ParameterRole`] to an
/// SBO identifier of the form `SBO:NNNNNNN`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SboRuleTable {
    law: BTreeMap<RateLawClass, String>,
    role: BTreeMap<ParameterRole, String>,
}

fn valid_sbo_id(s: &str) -> bool {
    s.len() == 11 && s.starts_with("SBO:") && s[4..].bytes().all(|b| b.is_ascii_digit())
}

impl SboRuleTable {
    /// Parse a rule table from TSV. Blank lines and `#` comments are
    /// skipped. The table must define all four assignable law classes and
    /// all seven parameter roles, each exactly once.
    pub fn parse_tsv(text: &str) -> Result<SboRuleTable, SboError> {
        let mut law: BTreeMap<RateLawClass, String> = BTreeMap::new();
        let mut role: BTreeMap<ParameterRole, String> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(SboError::MalformedRuleTable(format!(
                    "line {lineno}: expected 3 tab-separated columns, found {}",
                    cols.len()
                )));
            }
            let (target, pattern, id) = (cols[0].trim(), cols[1].trim(), cols[2].trim());
            if !valid_sbo_id(id) {
                return Err(SboError::MalformedRuleTable(format!(
                    "line {lineno}: `{id}` is not of the form SBO:NNNNNNN"
                )));
            }
            match target {
                "law" => {
                    let class = RateLawClass::ASSIGNABLE
                        .into_iter()
                        .find(|c| c.as_str() == pattern)
                        .ok_or_else(|| {
                            SboError::MalformedRuleTable(format!(
                                "line {lineno}: unknown law pattern `{pattern}`"
                            ))
                        })?;
                    if law.insert(class, id.to_string()).is_some() {
                        return Err(SboError::MalformedRuleTable(format!(
                            "line {lineno}: duplicate law pattern `{pattern}`"
                        )));
                    }
                }
                "parameter" => {
                    let r = ParameterRole::ALL
                        .into_iter()
                        .find(|r| r.as_str() == pattern)
                        .ok_or_else(|| {
                            SboError::MalformedRuleTable(format!(
                                "line {lineno}: unknown parameter role `{pattern}`"
                            ))
                        })?;
                    if role.insert(r, id.to_string()).is_some() {
                        return Err(SboError::MalformedRuleTable(format!(
                            "line {lineno}: duplicate parameter role `{pattern}`"
                        )));
                    }
                }
                other => {
                    return Err(SboError::MalformedRuleTable(format!(
                        "line {lineno}: unknown target `{other}` (expected `law` or `parameter`)"
                    )));
                }
            }
        }
        for class in RateLawClass::ASSIGNABLE {
            if !law.contains_key(&class) {
                return Err(SboError::MalformedRuleTable(format!(
                    "missing law pattern `{class}`"
                )));
            }
        }
        for r in ParameterRole::ALL {
            if !role.contains_key(&r) {
                return Err(SboError::MalformedRuleTable(format!(
                    "missing parameter role `{r}`"
                )));
            }
        }
        Ok(SboRuleTable { law, role })
    }

    pub fn law_id(&self, class: RateLawClass) -> &str {
        self.law
            .get(&class)
            .map(String::as_str)
            .expect("table validated to cover every assignable class")
    }

    pub fn role_id(&self, role: ParameterRole) -> &str {
        self.role
            .get(&role)
            .map(String::as_str)
            .expect("table validated to cover every role")
    }

    /// Every id appearing anywhere in the table.
    pub fn all_ids(&self) -> BTreeSet<&str> {
        self.law
            .values()
            .chain(self.role.values())
            .map(String::as_str)
            .collect()
    }
}

impl Default for SboRuleTable {
    fn default() -> Self {
        SboRuleTable::parse_tsv(DEFAULT_RULE_TABLE_TSV).expect("shipped default table is valid")
    }
}

/// Symbol universe for classifying one reaction's law.
struct SymbolTable<'a> {
    species: BTreeSet<&'a str>,
    params: BTreeSet<&'a str>,
}

impl<'a> SymbolTable<'a> {
    fn of(rxn: &'a Reaction, doc: &'a ModelDocument) -> Self {
        SymbolTable {
            species: doc.species.iter().map(|s| s.id.as_str()).collect(),
            params: doc
                .parameters
                .iter()
                .map(|p| p.id.as_str())
                .chain(rxn.local_parameters.iter().map(|p| p.id.as_str()))
                .collect(),
        }
    }
}

/// Aggregate one reaction side into species → total stoichiometry (zero
/// totals dropped).
fn side_stoich(refs: &[crate::model::SpeciesRef]) -> BTreeMap<String, f64> {
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    for r in refs {
        *out.entry(r.species.clone()).or_insert(0.0) += r.stoichiometry;
    }
    out.retain(|_, v| *v != 0.0);
    out
}

/// Decompose `k·Π c_s^{m_s}`: exactly one bare parameter symbol, every
/// other factor a species symbol or species power with positive exponent.
fn mass_action_term(term: &Expression, t: &SymbolTable) -> Option<(String, BTreeMap<String, f64>)> {
    let mut factors = Vec::new();
    collect_product(term, &mut factors);
    let mut param: Option<String> = None;
    let mut powers: BTreeMap<String, f64> = BTreeMap::new();
    for f in factors {
        match f {
            Expression::Symbol(s) => {
                if t.species.contains(s.as_str()) {
                    *powers.entry(s).or_insert(0.0) += 1.0;
                } else if t.params.contains(s.as_str()) {
                    if param.replace(s).is_some() {
                        return None;
                    }
                } else {
                    return None;
                }
            }
            Expression::Pow(base, exp) => match (base.as_ref(), exp.as_ref()) {
                (Expression::Symbol(s), Expression::Number(n))
                    if *n > 0.0 && t.species.contains(s.as_str()) =>
                {
                    *powers.entry(s.clone()).or_insert(0.0) += n;
                }
                _ => return None,
            },
            _ => return None,
        }
    }
    param.map(|p| (p, powers))
}

/// Match `V·c/(K + c)` against the single substrate: returns (V, K).
fn match_michaelis(law: &Expression, rxn: &Reaction, t: &SymbolTable) -> Option<(String, String)> {
    let stoich = side_stoich(&rxn.reactants);
    if stoich.len() != 1 {
        return None;
    }
    let substrate = stoich.keys().next().unwrap().as_str();

    let mut top = Vec::new();
    collect_product(law, &mut top);
    let mut numerator_factors: Vec<Expression> = Vec::new();
    let mut quotient: Option<(Expression, Expression)> = None;
    for f in top {
        if let Expression::Div(a, b) = f {
            if quotient.replace((*a, *b)).is_some() {
                return None;
            }
        } else {
            numerator_factors.push(f);
        }
    }
    let (num, den) = quotient?;
    collect_product(&num, &mut numerator_factors);

    // Numerator: exactly {V, substrate}.
    if numerator_factors.len() != 2 {
        return None;
    }
    let mut v_sym: Option<String> = None;
    let mut saw_substrate = false;
    for f in numerator_factors {
        match f {
            Expression::Symbol(s) if s == substrate => {
                if saw_substrate {
                    return None;
                }
                saw_substrate = true;
            }
            Expression::Symbol(s) if t.params.contains(s.as_str()) => {
                if v_sym.replace(s).is_some() {
                    return None;
                }
            }
            _ => return None,
        }
    }
    let v_sym = v_sym?;
    if !saw_substrate {
        return None;
    }

    // Denominator: exactly {K, substrate}, both positive terms.
    let mut terms = Vec::new();
    collect_sum(&den, false, &mut terms);
    if terms.len() != 2 || terms.iter().any(|(neg, _)| *neg) {
        return None;
    }
    let mut k_sym: Option<String> = None;
    let mut saw_substrate_den = false;
    for (_, term) in terms {
        match term {
            Expression::Symbol(s) if s == substrate => {
                if saw_substrate_den {
                    return None;
                }
                saw_substrate_den = true;
            }
            Expression::Symbol(s) if t.params.contains(s.as_str()) => {
                if k_sym.replace(s).is_some() {
                    return None;
                }
            }
            _ => return None,
        }
    }
    let k_sym = k_sym?;
    if !saw_substrate_den {
        return None;
    }
    Some((v_sym, k_sym))
}

/// Decompose one side of the modular numerator: exactly one bare parameter
/// (the kcat) times (c/KM) ratios or their positive powers.
fn modular_term(
    term: &Expression,
    t: &SymbolTable,
) -> Option<(String, BTreeMap<String, (String, f64)>)> {
    let mut factors = Vec::new();
    collect_product(term, &mut factors);
    let mut kcat: Option<String> = None;
    let mut ratios: BTreeMap<String, (String, f64)> = BTreeMap::new();
    let mut push_ratio = |c: &str, k: &str, n: f64| -> bool {
        if !t.species.contains(c) || !t.params.contains(k) {
            return false;
        }
        ratios.insert(c.to_string(), (k.to_string(), n)).is_none()
    };
    for f in factors {
        match f {
            Expression::Symbol(s) if t.params.contains(s.as_str()) => {
                if kcat.replace(s).is_some() {
                    return None;
                }
            }
            Expression::Div(a, b) => match (a.as_ref(), b.as_ref()) {
                (Expression::Symbol(c), Expression::Symbol(k)) => {
                    if !push_ratio(c, k, 1.0) {
                        return None;
                    }
                }
                _ => return None,
            },
            Expression::Pow(base, exp) => match (base.as_ref(), exp.as_ref()) {
                (Expression::Div(a, b), Expression::Number(n)) if *n > 0.0 => {
                    match (a.as_ref(), b.as_ref()) {
                        (Expression::Symbol(c), Expression::Symbol(k)) => {
                            if !push_ratio(c, k, *n) {
                                return None;
                            }
                        }
                        _ => return None,
                    }
                }
                _ => return None,
            },
            _ => return None,
        }
    }
    kcat.map(|k| (k, ratios))
}

/// Match the common modular rate law; returns (u, kcat_fwd, kcat_rev, km map).
fn match_modular(
    law: &Expression,
    rxn: &Reaction,
    doc: &ModelDocument,
    t: &SymbolTable,
) -> Option<(String, String, String, BTreeMap<String, String>)> {
    let net: Vec<(String, f64)> = doc
        .species
        .iter()
        .filter_map(|s| {
            let n = rxn.net_stoichiometry(&s.id);
            (n != 0.0).then(|| (s.id.clone(), n))
        })
        .collect();
    if net.is_empty() {
        return None;
    }

    // Normalize `u·(num/den)` and `(u·num)/den` to (u, diff, den).
    let mut top = Vec::new();
    collect_product(law, &mut top);
    let mut outer: Vec<Expression> = Vec::new();
    let mut quotient: Option<(Expression, Expression)> = None;
    for f in top {
        if let Expression::Div(a, b) = f {
            if quotient.replace((*a, *b)).is_some() {
                return None;
            }
        } else {
            outer.push(f);
        }
    }
    let (num, den) = quotient?;
    collect_product(&num, &mut outer);
    if outer.len() != 2 {
        return None;
    }
    let mut u_sym: Option<String> = None;
    let mut diff: Option<Expression> = None;
    for f in outer {
        match f {
            Expression::Symbol(s) if t.params.contains(s.as_str()) => {
                if u_sym.replace(s).is_some() {
                    return None;
                }
            }
            other @ (Expression::Add(..) | Expression::Sub(..)) => {
                if diff.replace(other).is_some() {
                    return None;
                }
            }
            _ => return None,
        }
    }
    let (u_sym, diff) = (u_sym?, diff?);

    // The difference: one positive and one negative modular term whose
    // ratio powers match the net stoichiometry sides.
    let mut terms = Vec::new();
    collect_sum(&diff, false, &mut terms);
    if terms.len() != 2 {
        return None;
    }
    let pos = terms.iter().find(|(neg, _)| !*neg)?;
    let neg = terms.iter().find(|(neg, _)| *neg)?;
    let (kf, fwd) = modular_term(&pos.1, t)?;
    let (kr, rev) = modular_term(&neg.1, t)?;

    let expect_side: BTreeMap<&str, f64> = net
        .iter()
        .filter(|(_, n)| *n < 0.0)
        .map(|(sid, n)| (sid.as_str(), n.abs()))
        .collect();
    let found_fwd: BTreeMap<&str, f64> = fwd
        .iter()
        .map(|(sid, (_, n))| (sid.as_str(), *n))
        .collect();
    if expect_side != found_fwd {
        return None;
    }
    let expect_side: BTreeMap<&str, f64> = net
        .iter()
        .filter(|(_, n)| *n > 0.0)
        .map(|(sid, n)| (sid.as_str(), *n))
        .collect();
    let found_rev: BTreeMap<&str, f64> = rev
        .iter()
        .map(|(sid, (_, n))| (sid.as_str(), *n))
        .collect();
    if expect_side != found_rev {
        return None;
    }

    let mut km: BTreeMap<String, String> = BTreeMap::new();
    for (sid, (k, _)) in fwd.iter().chain(rev.iter()) {
        km.insert(sid.clone(), k.clone());
    }
    // Denominator must be the template's, up to operand order.
    if canonical_key(&den) != canonical_key(&modular_denominator(&km, &net)) {
        return None;
    }
    Some((u_sym, kf, kr, km))
}

/// Classify a reaction's kinetic law and name the parameters whose role the
/// pattern determines. `Unknown` carries an empty role map.
pub fn classify_rate_law(
    rxn: &Reaction,
    doc: &ModelDocument,
) -> Result<(RateLawClass, BTreeMap<String, ParameterRole>), SboError> {
    let law = rxn
        .kinetic_law
        .as_ref()
        .ok_or_else(|| SboError::NoKineticLaw(rxn.id.clone()))?;
    let t = SymbolTable::of(rxn, doc);

    let mut terms = Vec::new();
    collect_sum(law, false, &mut terms);

    if terms.len() == 1 && !terms[0].0 {
        if let Some((k, powers)) = mass_action_term(&terms[0].1, &t) {
            if powers == side_stoich(&rxn.reactants) {
                let mut roles = BTreeMap::new();
                roles.insert(k, ParameterRole::ForwardRateConstant);
                return Ok((RateLawClass::MassActionIrreversible, roles));
            }
        }
    }

    if terms.len() == 2 {
        let pos = terms.iter().find(|(neg, _)| !*neg);
        let neg = terms.iter().find(|(neg, _)| *neg);
        if let (Some((_, pt)), Some((_, nt))) = (pos, neg) {
            if let (Some((kf, pf)), Some((kr, pr))) =
                (mass_action_term(pt, &t), mass_action_term(nt, &t))
            {
                if pf == side_stoich(&rxn.reactants) && pr == side_stoich(&rxn.products) {
                    let mut roles = BTreeMap::new();
                    roles.insert(kf, ParameterRole::ForwardRateConstant);
                    roles.insert(kr, ParameterRole::ReverseRateConstant);
                    return Ok((RateLawClass::MassActionReversible, roles));
                }
            }
        }
    }

    if let Some((v, k)) = match_michaelis(law, rxn, &t) {
        let mut roles = BTreeMap::new();
        roles.insert(v, ParameterRole::MaximalVelocity);
        roles.insert(k, ParameterRole::MichaelisConstant);
        return Ok((RateLawClass::MichaelisMentenIrreversible, roles));
    }

    if let Some((_, kf, kr, km)) = match_modular(law, rxn, doc, &t) {
        let mut roles = BTreeMap::new();
        roles.insert(kf, ParameterRole::CatalyticConstant);
        roles.insert(kr, ParameterRole::CatalyticConstant);
        for k in km.values() {
            roles.insert(k.clone(), ParameterRole::MichaelisConstant);
        }
        return Ok((RateLawClass::ModularReversible, roles));
    }

    Ok((RateLawClass::Unknown, BTreeMap::new()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignAction {
    Assigned,
    Skipped,
}

impl AssignAction {
    pub fn as_str(&self) -> &'static str {
        match self {
            AssignAction::Assigned => "assigned",
            AssignAction::Skipped => "skipped",
        }
    }
}

/// One line of the assignment log. `target` is the reaction id or the
/// parameter path (`pid` for globals, `rid.pid` for locals); `sbo` is the
/// id the table proposes; `existing` is the value that blocked an
/// overwrite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentLogEntry {
    pub target: String,
    pub sbo: String,
    pub action: AssignAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub existing: Option<String>,
}

/// Render an assignment log as TSV: target, action, sbo, existing.
pub fn assignment_log_tsv(log: &[AssignmentLogEntry]) -> String {
    let mut out = String::from("#target\taction\tsbo\texisting\n");
    for e in log {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            e.target,
            e.action.as_str(),
            e.sbo,
            e.existing.as_deref().unwrap_or("")
        ));
    }
    out
}

/// Classify every reaction with a kinetic law and stamp SBO terms on the
/// reaction and its role-mapped parameters. Existing `sbo` values are never
/// overwritten (logged as skipped); `Unknown` laws and law-less reactions
/// are untouched and unlogged.
pub fn assign_sbo_terms(
    doc: &ModelDocument,
    rules: &SboRuleTable,
) -> Result<(ModelDocument, Vec<AssignmentLogEntry>), SboError> {
    require_valid(doc)?;
    let mut out = doc.clone();
    let mut log = Vec::new();
    for ri in 0..doc.reactions.len() {
        if doc.reactions[ri].kinetic_law.is_none() {
            continue;
        }
        let (class, roles) = classify_rate_law(&doc.reactions[ri], doc)?;
        if class == RateLawClass::Unknown {
            continue;
        }
        let rid = doc.reactions[ri].id.clone();
        let law_id = rules.law_id(class).to_string();
        {
            let rxn = &mut out.reactions[ri];
            match &rxn.sbo {
                None => {
                    rxn.sbo = Some(law_id.clone());
                    log.push(AssignmentLogEntry {
                        target: rid.clone(),
                        sbo: law_id,
                        action: AssignAction::Assigned,
                        existing: None,
                    });
                }
                Some(existing) => log.push(AssignmentLogEntry {
                    target: rid.clone(),
                    sbo: law_id,
                    action: AssignAction::Skipped,
                    existing: Some(existing.clone()),
                }),
            }
        }
        for (sym, role) in roles {
            let role_id = rules.role_id(role).to_string();
            let (target, slot) = if let Some(p) = out.reactions[ri]
                .local_parameters
                .iter_mut()
                .find(|p| p.id == sym)
            {
                (format!("{rid}.{sym}"), &mut p.sbo)
            } else if let Some(p) = out.parameters.iter_mut().find(|p| p.id == sym) {
                (sym.clone(), &mut p.sbo)
            } else {
                // Classification only names symbols from the parameter
                // table, so one of the two lookups always hits.
                unreachable!("role symbol `{sym}` resolves to a parameter");
            };
            match slot {
                None => {
                    *slot = Some(role_id.clone());
                    log.push(AssignmentLogEntry {
                        target,
                        sbo: role_id,
                        action: AssignAction::Assigned,
                        existing: None,
                    });
                }
                Some(existing) => {
                    let existing = existing.clone();
                    log.push(AssignmentLogEntry {
                        target,
                        sbo: role_id,
                        action: AssignAction::Skipped,
                        existing: Some(existing),
                    });
                }
            }
        }
    }
    Ok((out, log))
}
