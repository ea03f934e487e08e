//! Seeded random generators for property-style tests.
//!
//! Everything here is deterministic in the seed (ChaCha8), so failures
//! reproduce exactly.  Generated documents always pass validation.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use sbmlkit::balance::{BalancingConfig, BalancingProblem, QuantityInstance, Scale};
use sbmlkit::expr::Expression;
use sbmlkit::model::{require_valid, SpeciesRef};
use sbmlkit::{Compartment, ModelDocument, Parameter, Reaction, Species};

/// Upper bounds for [`random_document`].
#[derive(Debug, Clone, Copy)]
pub struct DocumentShape {
    pub max_compartments: usize,
    pub max_species: usize,
    pub max_reactions: usize,
    /// Allow modifier lists on reactions.
    pub modifiers: bool,
}

impl Default for DocumentShape {
    fn default() -> Self {
        DocumentShape {
            max_compartments: 2,
            max_species: 8,
            max_reactions: 10,
            modifiers: false,
        }
    }
}

/// A random valid model: mass-action reactions over a random species pool.
pub fn random_document(seed: u64) -> ModelDocument {
    random_document_shaped(seed, DocumentShape::default())
}

pub fn random_document_shaped(seed: u64, shape: DocumentShape) -> ModelDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut doc = ModelDocument::new(&format!("random_{seed}"));

    let n_comp = rng.gen_range(1..=shape.max_compartments.max(1));
    for c in 0..n_comp {
        doc.compartments
            .push(Compartment::new(&format!("c{c}"), (c + 1) as f64));
    }

    let n_species = rng.gen_range(2..=shape.max_species.max(2));
    for s in 0..n_species {
        let comp = format!("c{}", rng.gen_range(0..n_comp));
        let amount = rng.gen_range(1..=50) as f64 / 10.0;
        doc.species
            .push(Species::new(&format!("m{s}"), &comp, amount));
    }

    let n_reactions = rng.gen_range(1..=shape.max_reactions.max(1));
    for r in 0..n_reactions {
        let id = format!("v{r}");
        let reversible = rng.gen_bool(0.5);
        let mut rxn = Reaction::new(&id, reversible);

        // Pick disjoint reactant/product species so every participant has a
        // nonzero net coefficient.
        let mut pool: Vec<usize> = (0..n_species).collect();
        pool.shuffle(&mut rng);
        let n_react = rng.gen_range(1..=2.min(pool.len() - 1));
        let n_prod = rng.gen_range(1..=2.min(pool.len() - n_react));
        let (reactants, rest) = pool.split_at(n_react);
        let products = &rest[..n_prod];
        for &s in reactants {
            let stoich = if rng.gen_bool(0.2) { 2.0 } else { 1.0 };
            rxn.reactants.push(SpeciesRef::new(&format!("m{s}"), stoich));
        }
        for &s in products {
            let stoich = if rng.gen_bool(0.2) { 2.0 } else { 1.0 };
            rxn.products.push(SpeciesRef::new(&format!("m{s}"), stoich));
        }
        if shape.modifiers && rng.gen_bool(0.3) {
            let leftover = &rest[n_prod..];
            if let Some(&m) = leftover.first() {
                rxn.modifiers.push(format!("m{m}"));
            }
        }

        // Mass-action law from per-reaction global rate constants.
        let kf = format!("kf_{id}");
        doc.parameters
            .push(Parameter::new(&kf, rng.gen_range(1..=30) as f64 / 10.0));
        let mut fwd = Expression::symbol(&kf);
        for sr in &rxn.reactants {
            let c = Expression::symbol(&sr.species);
            let term = if sr.stoichiometry == 1.0 {
                c
            } else {
                Expression::pow(c, Expression::number(sr.stoichiometry))
            };
            fwd = Expression::mul(fwd, term);
        }
        let law = if reversible {
            let kr = format!("kr_{id}");
            doc.parameters
                .push(Parameter::new(&kr, rng.gen_range(1..=30) as f64 / 10.0));
            let mut rev = Expression::symbol(&kr);
            for sr in &rxn.products {
                let c = Expression::symbol(&sr.species);
                let term = if sr.stoichiometry == 1.0 {
                    c
                } else {
                    Expression::pow(c, Expression::number(sr.stoichiometry))
                };
                rev = Expression::mul(rev, term);
            }
            Expression::sub(fwd, rev)
        } else {
            fwd
        };
        rxn.kinetic_law = Some(law);
        doc.reactions.push(rxn);
    }

    require_valid(&doc).expect("random document must validate");
    doc
}

/// A random balancing workload: a small model (guaranteed ≤ 30 basic
/// quantities), a data TSV with 1–5 observations on randomly chosen
/// instances, and a configuration with randomized pseudo toggles.
pub fn random_balancing_inputs(seed: u64) -> (ModelDocument, String, BalancingConfig) {
    // Mixed away from the document seed so the two streams stay independent.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_ba1a);
    let doc = random_document_shaped(
        seed,
        DocumentShape {
            max_compartments: 1,
            max_species: 4,
            max_reactions: 3,
            modifiers: false,
        },
    );

    let mut config = BalancingConfig::default();
    config.use_pseudo_kcat = rng.gen_bool(0.5);
    config.use_pseudo_keq = rng.gen_bool(0.5);
    config.use_pseudo_vmax_fwd = rng.gen_bool(0.5);
    config.use_pseudo_vmax_rev = rng.gen_bool(0.5);
    config.use_pseudo_affinity = rng.gen_bool(0.5);
    config.use_pseudo_potential = rng.gen_bool(0.5);

    // Enumerate the instance catalog from a data-free problem, then draw
    // observations for a random sample of instances.
    let empty = sbmlkit::balance::build_problem(&doc, "", &config)
        .expect("random model must yield a balancing problem");
    let instances: Vec<QuantityInstance> = empty.instances().cloned().collect();
    let n_obs = rng.gen_range(1..=5.min(instances.len()));
    let mut picks: Vec<usize> = (0..instances.len()).collect();
    picks.shuffle(&mut rng);

    let mut tsv = String::from("#QuantityType\tReactionID\tSpeciesID\tValue\tStd\tUnit\n");
    for &i in picks.iter().take(n_obs) {
        let inst = &instances[i];
        let (value, std) = match inst.quantity.scale() {
            Scale::Multiplicative => (
                rng.gen_range(1..=400) as f64 / 20.0,
                rng.gen_range(1..=20) as f64 / 20.0,
            ),
            Scale::Additive => (
                rng.gen_range(-40..=40) as f64 * 2.5,
                rng.gen_range(1..=20) as f64,
            ),
        };
        tsv.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            inst.quantity.as_str(),
            inst.reaction.as_deref().unwrap_or(""),
            inst.species.as_deref().unwrap_or(""),
            value,
            std,
            inst.quantity.unit(),
        ));
    }
    (doc, tsv, config)
}

/// Build the problem for a random workload (convenience for tests).
pub fn random_problem(seed: u64) -> BalancingProblem {
    let (doc, tsv, config) = random_balancing_inputs(seed);
    sbmlkit::balance::build_problem(&doc, &tsv, &config)
        .expect("random balancing inputs must build")
}

/// Random cross-reference records over a closed URI pool, for equivalence
/// closure tests.  Returns the ingestible TSV and the raw (left, right)
/// URI pairs, one per record.
pub fn random_crossref_tsv(seed: u64, n_pairs: usize) -> (String, Vec<(String, String)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0_55ef);
    let namespaces = ["obo.chebi", "kegg.compound", "pubchem.compound", "obo.go"];
    let pool: Vec<String> = (0..(n_pairs / 4).max(8))
        .map(|i| {
            format!(
                "identifiers.org/{}/X{:05}",
                namespaces[i % namespaces.len()],
                i
            )
        })
        .collect();

    let mut tsv = String::new();
    let mut pairs = Vec::with_capacity(n_pairs);
    for k in 0..n_pairs {
        let a = pool.choose(&mut rng).unwrap().clone();
        let mut b = pool.choose(&mut rng).unwrap().clone();
        while b == a {
            b = pool.choose(&mut rng).unwrap().clone();
        }
        tsv.push_str(&format!("{a}\tentity {k}\t{b}\t\n"));
        pairs.push((a, b));
    }
    (tsv, pairs)
}
