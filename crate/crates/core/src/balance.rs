//! Bayesian parameter balancing: complete an incomplete kinetic data set by
//! a linear-Gaussian posterior over log-scale basic quantities, check its
//! thermodynamic consistency, and write modular rate laws back into the
//! model.
//!
//! All multiplicative quantities live on the natural-log scale internally;
//! chemical potentials and reaction affinities stay on the additive kJ/mol
//! scale. Every derived quantity is an exactly linear function of the basic
//! vector q, encoded as a row of the dependence matrix Q:
//!
//! ```text
//! ln Keq_r    = −(1/RT)·Σ_i n_ri·μ°_i
//! ln k⁺cat_r  = ln kV_r + ½·(ln Keq_r − Σ_i n_ri·ln KM_ri)
//! ln k⁻cat_r  = ln kV_r − ½·(ln Keq_r − Σ_i n_ri·ln KM_ri)
//! ln Vmax±_r  = ln k±cat_r + ln u_r
//! μ_i         = μ°_i + RT·ln c_i
//! A_r         = −Σ_i n_ri·μ_i
//! ```
//!
//! with n_ri the net stoichiometry. The posterior solves the normal
//! equations of the stacked prior + observation system via a symmetric
//! positive-definite (Cholesky) factorization, never explicit inversion.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Expression;
use crate::model::{
    require_valid, stoichiometric_matrix, InvalidModel, ModelDocument, Parameter,
    StoichiometricMatrix,
};

/// Thermal energy RT in kJ/mol at 298.15 K.
pub const DEFAULT_RT: f64 = 2.4790;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QuantityType {
    /// Michaelis constant (mM), per (reaction, species).
    #[serde(rename = "KM")]
    Km,
    /// Inhibitory constant (mM), per (reaction, modifier species).
    #[serde(rename = "KI")]
    Ki,
    /// Activation constant (mM), per (reaction, modifier species).
    #[serde(rename = "KA")]
    Ka,
    /// Concentration (mM), per species.
    Conc,
    /// Standard chemical potential (kJ/mol), per species.
    StdChemPotential,
    /// Catalytic rate constant geometric mean (1/s), per reaction.
    VelocityConst,
    /// Concentration of enzyme (mM), per reaction.
    EnzymeConc,
    /// Forward catalytic rate constant (1/s), per reaction.
    KcatFwd,
    /// Reverse catalytic rate constant (1/s), per reaction.
    KcatRev,
    /// Equilibrium constant (dimensionless), per reaction.
    Keq,
    /// Forward maximal velocity (mM/s), per reaction.
    VmaxFwd,
    /// Reverse maximal velocity (mM/s), per reaction.
    VmaxRev,
    /// Chemical potential (kJ/mol), per species.
    ChemPotential,
    /// Reaction affinity (kJ/mol), per reaction.
    ReactionAffinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Stored as natural log of the positive quantity.
    Multiplicative,
    /// Stored as-is (kJ/mol).
    Additive,
}

impl QuantityType {
    pub const ALL: [QuantityType; 14] = [
        QuantityType::Km,
        QuantityType::Ki,
        QuantityType::Ka,
        QuantityType::Conc,
        QuantityType::StdChemPotential,
        QuantityType::VelocityConst,
        QuantityType::EnzymeConc,
        QuantityType::KcatFwd,
        QuantityType::KcatRev,
        QuantityType::Keq,
        QuantityType::VmaxFwd,
        QuantityType::VmaxRev,
        QuantityType::ChemPotential,
        QuantityType::ReactionAffinity,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            QuantityType::Km => "KM",
            QuantityType::Ki => "KI",
            QuantityType::Ka => "KA",
            QuantityType::Conc => "Conc",
            QuantityType::StdChemPotential => "StdChemPotential",
            QuantityType::VelocityConst => "VelocityConst",
            QuantityType::EnzymeConc => "EnzymeConc",
            QuantityType::KcatFwd => "KcatFwd",
            QuantityType::KcatRev => "KcatRev",
            QuantityType::Keq => "Keq",
            QuantityType::VmaxFwd => "VmaxFwd",
            QuantityType::VmaxRev => "VmaxRev",
            QuantityType::ChemPotential => "ChemPotential",
            QuantityType::ReactionAffinity => "ReactionAffinity",
        }
    }

    pub fn parse(s: &str) -> Result<QuantityType, BalanceError> {
        QuantityType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| BalanceError::UnknownQuantityType(s.to_string()))
    }

    pub fn scale(&self) -> Scale {
        match self {
            QuantityType::StdChemPotential
            | QuantityType::ChemPotential
            | QuantityType::ReactionAffinity => Scale::Additive,
            _ => Scale::Multiplicative,
        }
    }

    pub fn unit(&self) -> &'static str {
        match self {
            QuantityType::Km
            | QuantityType::Ki
            | QuantityType::Ka
            | QuantityType::Conc
            | QuantityType::EnzymeConc => "mM",
            QuantityType::VelocityConst | QuantityType::KcatFwd | QuantityType::KcatRev => "1/s",
            QuantityType::Keq => "dimensionless",
            QuantityType::VmaxFwd | QuantityType::VmaxRev => "mM/s",
            QuantityType::StdChemPotential
            | QuantityType::ChemPotential
            | QuantityType::ReactionAffinity => "kJ/mol",
        }
    }

    pub fn is_basic(&self) -> bool {
        matches!(
            self,
            QuantityType::Km
                | QuantityType::Ki
                | QuantityType::Ka
                | QuantityType::Conc
                | QuantityType::StdChemPotential
                | QuantityType::VelocityConst
                | QuantityType::EnzymeConc
        )
    }

    /// Does an instance of this type carry a reaction id, a species id, or
    /// both?
    fn arity(&self) -> (bool, bool) {
        match self {
            QuantityType::Km | QuantityType::Ki | QuantityType::Ka => (true, true),
            QuantityType::Conc | QuantityType::StdChemPotential | QuantityType::ChemPotential => {
                (false, true)
            }
            _ => (true, false),
        }
    }
}

impl fmt::Display for QuantityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct QuantityInstance {
    #[serde(rename = "type")]
    pub quantity: QuantityType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reaction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub species: Option<String>,
}

impl QuantityInstance {
    pub fn per_reaction(quantity: QuantityType, reaction: &str) -> Self {
        QuantityInstance {
            quantity,
            reaction: Some(reaction.to_string()),
            species: None,
        }
    }

    pub fn per_species(quantity: QuantityType, species: &str) -> Self {
        QuantityInstance {
            quantity,
            reaction: None,
            species: Some(species.to_string()),
        }
    }

    pub fn per_pair(quantity: QuantityType, reaction: &str, species: &str) -> Self {
        QuantityInstance {
            quantity,
            reaction: Some(reaction.to_string()),
            species: Some(species.to_string()),
        }
    }
}

impl fmt::Display for QuantityInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<&str> = [self.reaction.as_deref(), self.species.as_deref()]
            .into_iter()
            .flatten()
            .collect();
        write!(f, "{}[{}]", self.quantity, ids.join(","))
    }
}

/// All numbers on natural scale (medians) except the std of multiplicative
/// quantities, which is on the log scale throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BalancingConfig {
    /// Thermal energy RT in kJ/mol.
    pub rt: f64,
    pub prior_median_km: f64,
    pub prior_median_ki: f64,
    pub prior_median_ka: f64,
    pub prior_median_conc: f64,
    pub prior_median_velocity_const: f64,
    pub prior_median_enzyme_conc: f64,
    /// Log-scale std shared by all multiplicative basic priors.
    pub prior_ln_std: f64,
    pub prior_potential_mean: f64,
    pub prior_potential_std: f64,
    pub pseudo_kcat: f64,
    pub pseudo_keq: f64,
    pub pseudo_vmax_fwd: f64,
    pub pseudo_vmax_rev: f64,
    /// Log-scale std shared by all multiplicative pseudo observations.
    pub pseudo_ln_std: f64,
    pub pseudo_affinity_center: f64,
    pub pseudo_affinity_std: f64,
    pub pseudo_potential_center: f64,
    pub pseudo_potential_std: f64,
    pub use_pseudo_kcat: bool,
    pub use_pseudo_keq: bool,
    pub use_pseudo_vmax_fwd: bool,
    pub use_pseudo_vmax_rev: bool,
    pub use_pseudo_affinity: bool,
    pub use_pseudo_potential: bool,
    /// Enumerate a KI basic per (reaction, modifier) pair.
    pub include_ki: bool,
    /// Enumerate a KA basic per (reaction, modifier) pair.
    pub include_ka: bool,
}

impl Default for BalancingConfig {
    fn default() -> Self {
        BalancingConfig {
            rt: DEFAULT_RT,
            prior_median_km: 0.1,
            prior_median_ki: 0.1,
            prior_median_ka: 0.1,
            prior_median_conc: 0.1,
            prior_median_velocity_const: 10.0,
            prior_median_enzyme_conc: 0.0001,
            prior_ln_std: 1.0,
            prior_potential_mean: 0.0,
            prior_potential_std: 500.0,
            pseudo_kcat: 10.0,
            pseudo_keq: 1.0,
            pseudo_vmax_fwd: 0.001,
            pseudo_vmax_rev: 0.001,
            pseudo_ln_std: 2.0,
            pseudo_affinity_center: 0.0,
            pseudo_affinity_std: 20.0,
            pseudo_potential_center: 0.0,
            pseudo_potential_std: 20.0,
            use_pseudo_kcat: true,
            use_pseudo_keq: true,
            use_pseudo_vmax_fwd: true,
            use_pseudo_vmax_rev: true,
            use_pseudo_affinity: true,
            use_pseudo_potential: true,
            include_ki: true,
            include_ka: true,
        }
    }
}

/// One observation, already converted to the internal scale (log for
/// multiplicative quantities).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub instance: QuantityInstance,
    pub value: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalancingProblem {
    /// The basic quantity vector q, enumerated deterministically:
    /// μ° (species order), kV (reaction order), KM (reaction × participant),
    /// KI, KA (reaction × modifier), c (species order), u (reaction order).
    pub basics: Vec<QuantityInstance>,
    /// Derived instances: μ (species order), then per reaction Keq, k⁺cat,
    /// k⁻cat, Vmax⁺, Vmax⁻, A.
    pub derived: Vec<QuantityInstance>,
    /// rows = basics + derived (in that order), cols = basics; top block is
    /// the identity.
    pub q_matrix: DMatrix<f64>,
    pub prior_mean: DVector<f64>,
    pub prior_std: DVector<f64>,
    pub data: Vec<Observation>,
    pub pseudo: Vec<Observation>,
    pub rt: f64,
    /// Net stoichiometric matrix of the source document.
    pub stoichiometry: StoichiometricMatrix,
    index: BTreeMap<QuantityInstance, usize>,
}

impl BalancingProblem {
    /// Row index of an instance in the dependence matrix.
    pub fn row_index(&self, instance: &QuantityInstance) -> Option<usize> {
        self.index.get(instance).copied()
    }

    /// All instances in row order (basics, then derived).
    pub fn instances(&self) -> impl Iterator<Item = &QuantityInstance> {
        self.basics.iter().chain(self.derived.iter())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalancedSet {
    /// All instances in row order (basics, then derived).
    pub instances: Vec<QuantityInstance>,
    /// Posterior mean over all rows, internal scale.
    pub posterior_mean: DVector<f64>,
    /// Posterior covariance over the basics.
    pub posterior_cov: DMatrix<f64>,
    /// Posterior std per row (propagated through Q), internal scale.
    pub posterior_std: DVector<f64>,
    /// Posterior medians per row in natural units.
    pub medians: Vec<f64>,
    index: BTreeMap<QuantityInstance, usize>,
}

impl BalancedSet {
    pub fn index_of(&self, instance: &QuantityInstance) -> Option<usize> {
        self.index.get(instance).copied()
    }

    /// Posterior median in natural units.
    pub fn median(&self, instance: &QuantityInstance) -> Option<f64> {
        self.index_of(instance).map(|i| self.medians[i])
    }

    /// Posterior std on the internal scale (log for multiplicative).
    pub fn posterior_ln_std(&self, instance: &QuantityInstance) -> Option<f64> {
        self.index_of(instance).map(|i| self.posterior_std[i])
    }
}

#[derive(Debug, Error)]
pub enum BalanceError {
    #[error("unknown quantity type `{0}`")]
    UnknownQuantityType(String),
    #[error("unknown element id `{0}`")]
    UnknownElementId(String),
    #[error("no quantity instance `{0}` in this problem")]
    UnknownInstance(String),
    #[error("unit mismatch for {quantity}: expected `{expected}`, found `{found}`")]
    UnitMismatch {
        quantity: String,
        expected: String,
        found: String,
    },
    #[error("non-positive value {value} for log-scale quantity {quantity}")]
    NonPositiveValueForLogScale { quantity: String, value: f64 },
    #[error("malformed data line {line}: {reason}")]
    MalformedData { line: usize, reason: String },
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("balanced set does not cover reaction `{0}`")]
    IncompleteBalance(String),
    #[error(transparent)]
    Invalid(#[from] InvalidModel),
}

/// Net stoichiometry of one reaction as (species index, species id, n).
fn net_rows(stoich: &StoichiometricMatrix, rxn_col: usize) -> Vec<(usize, String, f64)> {
    let mut out = Vec::new();
    for (si, sid) in stoich.species_ids.iter().enumerate() {
        let n = stoich.entries[si * stoich.reaction_ids.len() + rxn_col];
        if n != 0.0 {
            out.push((si, sid.clone(), n));
        }
    }
    out
}

/// Enumerate basics and derived instances and build the dependence matrix.
pub fn build_problem(
    doc: &ModelDocument,
    data_tsv: &str,
    config: &BalancingConfig,
) -> Result<BalancingProblem, BalanceError> {
    require_valid(doc)?;
    let stoich = stoichiometric_matrix(doc).expect("validated model has a stoichiometric matrix");
    let rt = config.rt;

    let mut basics: Vec<QuantityInstance> = Vec::new();
    let mut prior_mean: Vec<f64> = Vec::new();
    let mut prior_std: Vec<f64> = Vec::new();
    let push_basic = |inst: QuantityInstance, mean: f64, std: f64,
                          basics: &mut Vec<QuantityInstance>,
                          prior_mean: &mut Vec<f64>,
                          prior_std: &mut Vec<f64>| {
        basics.push(inst);
        prior_mean.push(mean);
        prior_std.push(std);
    };

    for s in &doc.species {
        push_basic(
            QuantityInstance::per_species(QuantityType::StdChemPotential, &s.id),
            config.prior_potential_mean,
            config.prior_potential_std,
            &mut basics,
            &mut prior_mean,
            &mut prior_std,
        );
    }
    for r in &doc.reactions {
        push_basic(
            QuantityInstance::per_reaction(QuantityType::VelocityConst, &r.id),
            config.prior_median_velocity_const.ln(),
            config.prior_ln_std,
            &mut basics,
            &mut prior_mean,
            &mut prior_std,
        );
    }
    // KM per (reaction, species) with nonzero net stoichiometry, species in
    // document order within each reaction.
    for (ri, rid) in stoich.reaction_ids.iter().enumerate() {
        for (_, sid, _) in net_rows(&stoich, ri) {
            push_basic(
                QuantityInstance::per_pair(QuantityType::Km, rid, &sid),
                config.prior_median_km.ln(),
                config.prior_ln_std,
                &mut basics,
                &mut prior_mean,
                &mut prior_std,
            );
        }
    }
    if config.include_ki {
        for r in &doc.reactions {
            for m in &r.modifiers {
                push_basic(
                    QuantityInstance::per_pair(QuantityType::Ki, &r.id, m),
                    config.prior_median_ki.ln(),
                    config.prior_ln_std,
                    &mut basics,
                    &mut prior_mean,
                    &mut prior_std,
                );
            }
        }
    }
    if config.include_ka {
        for r in &doc.reactions {
            for m in &r.modifiers {
                push_basic(
                    QuantityInstance::per_pair(QuantityType::Ka, &r.id, m),
                    config.prior_median_ka.ln(),
                    config.prior_ln_std,
                    &mut basics,
                    &mut prior_mean,
                    &mut prior_std,
                );
            }
        }
    }
    for s in &doc.species {
        push_basic(
            QuantityInstance::per_species(QuantityType::Conc, &s.id),
            config.prior_median_conc.ln(),
            config.prior_ln_std,
            &mut basics,
            &mut prior_mean,
            &mut prior_std,
        );
    }
    for r in &doc.reactions {
        push_basic(
            QuantityInstance::per_reaction(QuantityType::EnzymeConc, &r.id),
            config.prior_median_enzyme_conc.ln(),
            config.prior_ln_std,
            &mut basics,
            &mut prior_mean,
            &mut prior_std,
        );
    }

    let n = basics.len();
    let col_of: BTreeMap<&QuantityInstance, usize> =
        basics.iter().enumerate().map(|(i, b)| (b, i)).collect();
    let col = |inst: &QuantityInstance| -> usize {
        *col_of.get(inst).expect("basic instance enumerated")
    };

    // Derived rows.
    let mut derived: Vec<QuantityInstance> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();

    // μ_i = μ°_i + RT·ln c_i
    for s in &doc.species {
        let mut row = vec![0.0; n];
        row[col(&QuantityInstance::per_species(QuantityType::StdChemPotential, &s.id))] = 1.0;
        row[col(&QuantityInstance::per_species(QuantityType::Conc, &s.id))] = rt;
        derived.push(QuantityInstance::per_species(QuantityType::ChemPotential, &s.id));
        rows.push(row);
    }
    for (ri, rid) in stoich.reaction_ids.iter().enumerate() {
        let net = net_rows(&stoich, ri);
        // ln Keq_r = −(1/RT)·Σ n_ri·μ°_i
        let mut keq = vec![0.0; n];
        for (_, sid, nri) in &net {
            keq[col(&QuantityInstance::per_species(QuantityType::StdChemPotential, sid))] =
                -nri / rt;
        }
        // ln k±cat_r = ln kV_r ± ½(ln Keq_r − Σ n_ri ln KM_ri)
        let mut fwd = vec![0.0; n];
        let mut rev = vec![0.0; n];
        fwd[col(&QuantityInstance::per_reaction(QuantityType::VelocityConst, rid))] = 1.0;
        rev[col(&QuantityInstance::per_reaction(QuantityType::VelocityConst, rid))] = 1.0;
        for (j, &coeff) in keq.iter().enumerate() {
            fwd[j] += 0.5 * coeff;
            rev[j] -= 0.5 * coeff;
        }
        for (_, sid, nri) in &net {
            let j = col(&QuantityInstance::per_pair(QuantityType::Km, rid, sid));
            fwd[j] -= 0.5 * nri;
            rev[j] += 0.5 * nri;
        }
        // ln Vmax±_r = ln k±cat_r + ln u_r
        let u_col = col(&QuantityInstance::per_reaction(QuantityType::EnzymeConc, rid));
        let mut vfwd = fwd.clone();
        let mut vrev = rev.clone();
        vfwd[u_col] += 1.0;
        vrev[u_col] += 1.0;
        // A_r = −Σ n_ri·μ_i = −Σ n_ri·(μ°_i + RT·ln c_i)
        let mut aff = vec![0.0; n];
        for (_, sid, nri) in &net {
            aff[col(&QuantityInstance::per_species(QuantityType::StdChemPotential, sid))] = -nri;
            aff[col(&QuantityInstance::per_species(QuantityType::Conc, sid))] = -nri * rt;
        }
        derived.push(QuantityInstance::per_reaction(QuantityType::Keq, rid));
        rows.push(keq);
        derived.push(QuantityInstance::per_reaction(QuantityType::KcatFwd, rid));
        rows.push(fwd);
        derived.push(QuantityInstance::per_reaction(QuantityType::KcatRev, rid));
        rows.push(rev);
        derived.push(QuantityInstance::per_reaction(QuantityType::VmaxFwd, rid));
        rows.push(vfwd);
        derived.push(QuantityInstance::per_reaction(QuantityType::VmaxRev, rid));
        rows.push(vrev);
        derived.push(QuantityInstance::per_reaction(QuantityType::ReactionAffinity, rid));
        rows.push(aff);
    }

    let total = n + derived.len();
    let mut q_matrix = DMatrix::zeros(total, n);
    for i in 0..n {
        q_matrix[(i, i)] = 1.0;
    }
    for (k, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            q_matrix[(n + k, j)] = v;
        }
    }

    let mut index: BTreeMap<QuantityInstance, usize> = BTreeMap::new();
    for (i, inst) in basics.iter().chain(derived.iter()).enumerate() {
        index.insert(inst.clone(), i);
    }

    let data = parse_data_tsv(doc, data_tsv, &index)?;

    // Pseudo observations for enabled derived types lacking data.
    let has_data: BTreeSet<&QuantityInstance> = data.iter().map(|o| &o.instance).collect();
    let mut pseudo: Vec<Observation> = Vec::new();
    let push_pseudo = |inst: QuantityInstance, value: f64, std: f64, pseudo: &mut Vec<Observation>| {
        if !has_data.contains(&inst) {
            pseudo.push(Observation {
                instance: inst,
                value,
                std,
            });
        }
    };
    if config.use_pseudo_potential {
        for s in &doc.species {
            push_pseudo(
                QuantityInstance::per_species(QuantityType::ChemPotential, &s.id),
                config.pseudo_potential_center,
                config.pseudo_potential_std,
                &mut pseudo,
            );
        }
    }
    for r in &doc.reactions {
        if config.use_pseudo_keq {
            push_pseudo(
                QuantityInstance::per_reaction(QuantityType::Keq, &r.id),
                config.pseudo_keq.ln(),
                config.pseudo_ln_std,
                &mut pseudo,
            );
        }
        if config.use_pseudo_kcat {
            push_pseudo(
                QuantityInstance::per_reaction(QuantityType::KcatFwd, &r.id),
                config.pseudo_kcat.ln(),
                config.pseudo_ln_std,
                &mut pseudo,
            );
            push_pseudo(
                QuantityInstance::per_reaction(QuantityType::KcatRev, &r.id),
                config.pseudo_kcat.ln(),
                config.pseudo_ln_std,
                &mut pseudo,
            );
        }
        if config.use_pseudo_vmax_fwd {
            push_pseudo(
                QuantityInstance::per_reaction(QuantityType::VmaxFwd, &r.id),
                config.pseudo_vmax_fwd.ln(),
                config.pseudo_ln_std,
                &mut pseudo,
            );
        }
        if config.use_pseudo_vmax_rev {
            push_pseudo(
                QuantityInstance::per_reaction(QuantityType::VmaxRev, &r.id),
                config.pseudo_vmax_rev.ln(),
                config.pseudo_ln_std,
                &mut pseudo,
            );
        }
        if config.use_pseudo_affinity {
            push_pseudo(
                QuantityInstance::per_reaction(QuantityType::ReactionAffinity, &r.id),
                config.pseudo_affinity_center,
                config.pseudo_affinity_std,
                &mut pseudo,
            );
        }
    }

    Ok(BalancingProblem {
        basics,
        derived,
        q_matrix,
        prior_mean: DVector::from_vec(prior_mean),
        prior_std: DVector::from_vec(prior_std),
        data,
        pseudo,
        rt,
        stoichiometry: stoich,
        index,
    })
}

/// Parse the data TSV: columns QuantityType, ReactionID, SpeciesID, Value,
/// Std, Unit; `#` starts a comment line. Values are medians in the
/// quantity's canonical unit; stds are log-scale for multiplicative
/// quantities.
fn parse_data_tsv(
    doc: &ModelDocument,
    text: &str,
    index: &BTreeMap<QuantityInstance, usize>,
) -> Result<Vec<Observation>, BalanceError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 {
            return Err(BalanceError::MalformedData {
                line: lineno,
                reason: format!("expected 6 tab-separated columns, found {}", cols.len()),
            });
        }
        let quantity = QuantityType::parse(cols[0].trim())?;
        let (needs_rxn, needs_species) = quantity.arity();
        let rxn = cols[1].trim();
        let species = cols[2].trim();
        if needs_rxn != !rxn.is_empty() || needs_species != !species.is_empty() {
            return Err(BalanceError::MalformedData {
                line: lineno,
                reason: format!(
                    "{} requires {}reaction id and {}species id",
                    quantity,
                    if needs_rxn { "a " } else { "no " },
                    if needs_species { "a " } else { "no " }
                ),
            });
        }
        if needs_rxn && doc.find_reaction(rxn).is_none() {
            return Err(BalanceError::UnknownElementId(rxn.to_string()));
        }
        if needs_species && doc.find_species(species).is_none() {
            return Err(BalanceError::UnknownElementId(species.to_string()));
        }
        let instance = QuantityInstance {
            quantity,
            reaction: (!rxn.is_empty()).then(|| rxn.to_string()),
            species: (!species.is_empty()).then(|| species.to_string()),
        };
        if !index.contains_key(&instance) {
            return Err(BalanceError::UnknownInstance(instance.to_string()));
        }
        let value: f64 = cols[3].trim().parse().map_err(|_| BalanceError::MalformedData {
            line: lineno,
            reason: format!("bad value `{}`", cols[3].trim()),
        })?;
        let std: f64 = cols[4].trim().parse().map_err(|_| BalanceError::MalformedData {
            line: lineno,
            reason: format!("bad std `{}`", cols[4].trim()),
        })?;
        if !(std.is_finite() && std > 0.0) {
            return Err(BalanceError::MalformedData {
                line: lineno,
                reason: format!("std must be positive, found {std}"),
            });
        }
        let unit = cols[5].trim();
        if unit != quantity.unit() {
            return Err(BalanceError::UnitMismatch {
                quantity: instance.to_string(),
                expected: quantity.unit().to_string(),
                found: unit.to_string(),
            });
        }
        let internal = match quantity.scale() {
            Scale::Multiplicative => {
                if !(value.is_finite() && value > 0.0) {
                    return Err(BalanceError::NonPositiveValueForLogScale {
                        quantity: instance.to_string(),
                        value,
                    });
                }
                value.ln()
            }
            Scale::Additive => {
                if !value.is_finite() {
                    return Err(BalanceError::MalformedData {
                        line: lineno,
                        reason: format!("bad value {value}"),
                    });
                }
                value
            }
        };
        out.push(Observation {
            instance,
            value: internal,
            std,
        });
    }
    Ok(out)
}

/// Gaussian update over the basics, derived rows propagated through Q.
pub fn balance(p: &BalancingProblem) -> Result<BalancedSet, BalanceError> {
    let n = p.basics.len();
    for (i, &s) in p.prior_std.iter().enumerate() {
        if !(s.is_finite() && s > 0.0) {
            return Err(BalanceError::SingularSystem(format!(
                "prior std of {} is {s}",
                p.basics[i]
            )));
        }
    }
    for obs in p.data.iter().chain(p.pseudo.iter()) {
        if !(obs.std.is_finite() && obs.std > 0.0) {
            return Err(BalanceError::SingularSystem(format!(
                "observation std of {} is {}",
                obs.instance, obs.std
            )));
        }
    }

    let mut precision = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for i in 0..n {
        let w = 1.0 / (p.prior_std[i] * p.prior_std[i]);
        precision[(i, i)] += w;
        rhs[i] += w * p.prior_mean[i];
    }
    for obs in p.data.iter().chain(p.pseudo.iter()) {
        let row_idx = p
            .row_index(&obs.instance)
            .ok_or_else(|| BalanceError::UnknownInstance(obs.instance.to_string()))?;
        let q = p.q_matrix.row(row_idx);
        let w = 1.0 / (obs.std * obs.std);
        for i in 0..n {
            let qi = q[i];
            if qi == 0.0 {
                continue;
            }
            rhs[i] += w * obs.value * qi;
            for j in 0..n {
                let qj = q[j];
                if qj != 0.0 {
                    precision[(i, j)] += w * qi * qj;
                }
            }
        }
    }

    let chol = nalgebra::Cholesky::new(precision).ok_or_else(|| {
        BalanceError::NumericalFailure("posterior precision is not positive definite".into())
    })?;
    let mean_basics = chol.solve(&rhs);
    let mut cov = chol.inverse();
    // Enforce exact symmetry against round-off.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }

    let posterior_mean = &p.q_matrix * &mean_basics;
    let total = p.q_matrix.nrows();
    let mut posterior_std = DVector::zeros(total);
    for k in 0..total {
        let row = p.q_matrix.row(k);
        let mut var = 0.0;
        for i in 0..n {
            if row[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                var += row[i] * cov[(i, j)] * row[j];
            }
        }
        posterior_std[k] = var.max(0.0).sqrt();
    }

    let instances: Vec<QuantityInstance> = p.instances().cloned().collect();
    let medians: Vec<f64> = instances
        .iter()
        .enumerate()
        .map(|(k, inst)| match inst.quantity.scale() {
            Scale::Multiplicative => posterior_mean[k].exp(),
            Scale::Additive => posterior_mean[k],
        })
        .collect();

    Ok(BalancedSet {
        instances,
        posterior_mean,
        posterior_cov: cov,
        posterior_std,
        medians,
        index: p.index.clone(),
    })
}

/// Thermodynamic consistency residuals of a balanced set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// |cᵀ·ln Keq| per null-space basis vector c of the stoichiometric
    /// matrix (reaction space).
    pub wegscheider: Vec<f64>,
    /// |ln k⁺cat − ln k⁻cat − ln Keq + Σ n·ln KM| per reaction.
    pub haldane: BTreeMap<String, f64>,
    /// |ln Vmax⁺ − ln k⁺cat − ln u| per reaction.
    pub vmax_fwd: BTreeMap<String, f64>,
    /// |ln Vmax⁻ − ln k⁻cat − ln u| per reaction.
    pub vmax_rev: BTreeMap<String, f64>,
}

impl ConsistencyReport {
    pub fn max_residual(&self) -> f64 {
        self.wegscheider
            .iter()
            .chain(self.haldane.values())
            .chain(self.vmax_fwd.values())
            .chain(self.vmax_rev.values())
            .fold(0.0, |acc, &v| acc.max(v))
    }
}

pub fn consistency_report(p: &BalancingProblem, b: &BalancedSet) -> ConsistencyReport {
    let mut report = ConsistencyReport::default();
    let at = |inst: &QuantityInstance| -> f64 {
        b.index_of(inst)
            .map(|i| b.posterior_mean[i])
            .unwrap_or(0.0)
    };

    // Wegscheider cycles: null space of N in reaction space via SVD.
    let stoich = &p.stoichiometry;
    let n_rxn = stoich.reaction_ids.len();
    let n_species = stoich.species_ids.len();
    if n_rxn > 0 && n_species > 0 {
        let n_mat = DMatrix::from_fn(n_species, n_rxn, |i, j| stoich.entries[i * n_rxn + j]);
        let svd = n_mat.clone().svd(false, true);
        let v_t = svd.v_t.expect("svd computed with v_t");
        let max_sv = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
        let tol = max_sv * 1e-12 * (n_species.max(n_rxn) as f64);
        let ln_keq: Vec<f64> = stoich
            .reaction_ids
            .iter()
            .map(|rid| at(&QuantityInstance::per_reaction(QuantityType::Keq, rid)))
            .collect();
        for k in 0..v_t.nrows() {
            let singular = if k < svd.singular_values.len() {
                svd.singular_values[k]
            } else {
                0.0
            };
            if singular <= tol {
                let c = v_t.row(k);
                let residual: f64 = (0..n_rxn).map(|j| c[j] * ln_keq[j]).sum();
                report.wegscheider.push(residual.abs());
            }
        }
    }

    for (ri, rid) in stoich.reaction_ids.iter().enumerate() {
        let keq = at(&QuantityInstance::per_reaction(QuantityType::Keq, rid));
        let kf = at(&QuantityInstance::per_reaction(QuantityType::KcatFwd, rid));
        let kr = at(&QuantityInstance::per_reaction(QuantityType::KcatRev, rid));
        let u = at(&QuantityInstance::per_reaction(QuantityType::EnzymeConc, rid));
        let vf = at(&QuantityInstance::per_reaction(QuantityType::VmaxFwd, rid));
        let vr = at(&QuantityInstance::per_reaction(QuantityType::VmaxRev, rid));
        let km_sum: f64 = net_rows(stoich, ri)
            .iter()
            .map(|(_, sid, n)| n * at(&QuantityInstance::per_pair(QuantityType::Km, rid, sid)))
            .sum();
        report.haldane.insert(rid.clone(), (kf - kr - keq + km_sum).abs());
        report.vmax_fwd.insert(rid.clone(), (vf - kf - u).abs());
        report.vmax_rev.insert(rid.clone(), (vr - kr - u).abs());
    }
    report
}

/// Balance report TSV: instance, prior median, data value, posterior
/// median, posterior ln-std. Multiplicative medians are natural-unit;
/// stds stay on the internal (log) scale.
pub fn balance_report_tsv(p: &BalancingProblem, b: &BalancedSet) -> String {
    let prior_full = &p.q_matrix * &p.prior_mean;
    let mut out = String::from("#instance\tprior_median\tdata_value\tposterior_median\tposterior_ln_std\n");
    for (k, inst) in b.instances.iter().enumerate() {
        let to_natural = |v: f64| match inst.quantity.scale() {
            Scale::Multiplicative => v.exp(),
            Scale::Additive => v,
        };
        let data: Vec<String> = p
            .data
            .iter()
            .filter(|o| &o.instance == inst)
            .map(|o| format_sig(to_natural(o.value)))
            .collect();
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            inst,
            format_sig(to_natural(prior_full[k])),
            data.join(","),
            format_sig(b.medians[k]),
            format_sig(b.posterior_std[k]),
        ));
    }
    out
}

/// Six significant digits, plain decimal or scientific as `{:.6e}` chooses.
fn format_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let formatted = format!("{v:.6}");
    if formatted.trim_end_matches('0').trim_end_matches('.').len() <= 1
        || v.abs() >= 1e6
        || v.abs() < 1e-4
    {
        format!("{v:.6e}")
    } else {
        formatted
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

fn expr_product(terms: Vec<Expression>) -> Expression {
    terms
        .into_iter()
        .reduce(Expression::mul)
        .unwrap_or_else(|| Expression::number(1.0))
}

fn pow_abs(base: Expression, n: f64) -> Expression {
    if n.abs() == 1.0 {
        base
    } else {
        Expression::pow(base, Expression::number(n.abs()))
    }
}

fn km_ratio(sid: &str, km: &BTreeMap<String, String>) -> Expression {
    Expression::div(
        Expression::symbol(sid),
        Expression::symbol(km.get(sid).expect("km symbol for every net participant")),
    )
}

/// Numerator of the modular law: k⁺cat·Π_s (c_s/KM_s)^{|n_s|} − k⁻cat·Π_p (c_p/KM_p)^{n_p}.
pub(crate) fn modular_numerator(
    kcat_fwd: &str,
    kcat_rev: &str,
    km: &BTreeMap<String, String>,
    net: &[(String, f64)],
) -> Expression {
    let side = |pred: fn(f64) -> bool| -> Expression {
        expr_product(
            net.iter()
                .filter(|(_, n)| pred(*n))
                .map(|(sid, n)| pow_abs(km_ratio(sid, km), *n))
                .collect(),
        )
    };
    Expression::sub(
        Expression::mul(Expression::symbol(kcat_fwd), side(|n| n < 0.0)),
        Expression::mul(Expression::symbol(kcat_rev), side(|n| n > 0.0)),
    )
}

/// Denominator of the modular law: Π_s (1+c_s/KM_s)^{|n_s|} + Π_p (1+c_p/KM_p)^{n_p} − 1.
pub(crate) fn modular_denominator(
    km: &BTreeMap<String, String>,
    net: &[(String, f64)],
) -> Expression {
    let side = |pred: fn(f64) -> bool| -> Expression {
        expr_product(
            net.iter()
                .filter(|(_, n)| pred(*n))
                .map(|(sid, n)| {
                    pow_abs(
                        Expression::add(Expression::number(1.0), km_ratio(sid, km)),
                        *n,
                    )
                })
                .collect(),
        )
    };
    Expression::sub(
        Expression::add(side(|n| n < 0.0), side(|n| n > 0.0)),
        Expression::number(1.0),
    )
}

/// The common modular rate law over the given symbols:
///
/// ```text
/// v = u·(k⁺cat·Π_s (c_s/KM_s)^{|n_s|} − k⁻cat·Π_p (c_p/KM_p)^{n_p})
///     / (Π_s (1+c_s/KM_s)^{|n_s|} + Π_p (1+c_p/KM_p)^{n_p} − 1)
/// ```
///
/// `net` lists (species id, net stoichiometry) with n ≠ 0 — substrates
/// negative, products positive; `km[species]` names the Michaelis-constant
/// symbol of each listed species.
pub fn modular_rate_law(
    u: &str,
    kcat_fwd: &str,
    kcat_rev: &str,
    km: &BTreeMap<String, String>,
    net: &[(String, f64)],
) -> Expression {
    Expression::mul(
        Expression::symbol(u),
        Expression::div(
            modular_numerator(kcat_fwd, kcat_rev, km, net),
            modular_denominator(km, net),
        ),
    )
}

/// Replace every kinetic law with the common modular rate law populated
/// from posterior medians (see [`modular_rate_law`]). Local parameters
/// `kcat_fwd`, `kcat_rev`, `u`, and `km_<species>` carry the medians;
/// existing local parameters are replaced along with the law.
pub fn apply_balanced(
    doc: &ModelDocument,
    b: &BalancedSet,
    _config: &BalancingConfig,
) -> Result<ModelDocument, BalanceError> {
    require_valid(doc)?;
    let stoich = stoichiometric_matrix(doc).expect("validated model");
    let mut out = doc.clone();
    for (ri, rxn) in out.reactions.iter_mut().enumerate() {
        let rid = rxn.id.clone();
        let need = |inst: QuantityInstance| -> Result<f64, BalanceError> {
            b.median(&inst)
                .ok_or_else(|| BalanceError::IncompleteBalance(rid.clone()))
        };
        let kcat_fwd = need(QuantityInstance::per_reaction(QuantityType::KcatFwd, &rid))?;
        let kcat_rev = need(QuantityInstance::per_reaction(QuantityType::KcatRev, &rid))?;
        let enzyme = need(QuantityInstance::per_reaction(QuantityType::EnzymeConc, &rid))?;
        let net: Vec<(String, f64)> = net_rows(&stoich, ri)
            .into_iter()
            .map(|(_, sid, n)| (sid, n))
            .collect();
        let mut locals = vec![
            Parameter::new("kcat_fwd", kcat_fwd),
            Parameter::new("kcat_rev", kcat_rev),
            Parameter::new("u", enzyme),
        ];
        let mut km_names: BTreeMap<String, String> = BTreeMap::new();
        for (sid, _) in &net {
            let km = need(QuantityInstance::per_pair(QuantityType::Km, &rid, sid))?;
            let name = format!("km_{sid}");
            locals.push(Parameter::new(&name, km));
            km_names.insert(sid.clone(), name);
        }
        rxn.kinetic_law = Some(modular_rate_law("u", "kcat_fwd", "kcat_rev", &km_names, &net));
        rxn.local_parameters = locals;
    }
    require_valid(&out)?;
    Ok(out)
}
