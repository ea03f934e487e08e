//! Shared test support for the sbmlkit workspace: a fixture corpus of
//! twenty shorthand models, seeded random generators, and independent
//! reference implementations (oracles) that cross-check the production
//! numerics, equivalence closure, and clustering.
//!
//! This crate is a dev-dependency only; nothing in it ships.

pub mod corpus;
pub mod oracle;
pub mod random;

pub use corpus::{
    clustering_corpus, conflict_pair, documents, fixture, Fixture, ANNODB_FIXTURE_TSV,
    CLUSTERING_NAMES, CORPUS, MYMODEL_LISTING,
};
pub use oracle::{
    closure_classes, dense_posterior, eval_reference, invert_gauss_jordan, reference_partition,
    rel_diff, DensePosterior, UnionFind,
};
pub use random::{
    random_balancing_inputs, random_crossref_tsv, random_document, random_document_shaped,
    random_problem, DocumentShape,
};

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::collections::BTreeSet;

    use sbmlkit::annodb::AnnotationStore;
    use sbmlkit::diffmerge::{merge_models, MergeError, MergePolicy};
    use sbmlkit::model::validate_model;
    use sbmlkit::shorthand::{parse_shorthand, print_shorthand};

    use super::*;

    #[test]
    fn corpus_has_twenty_valid_models_reference_first() {
        assert_eq!(CORPUS.len(), 20);
        assert_eq!(CORPUS[0].name, "mymodel");
        for f in CORPUS {
            let doc = f.document();
            assert!(validate_model(&doc).is_clean(), "{} must be clean", f.name);
        }
    }

    #[test]
    fn corpus_names_are_unique() {
        let names: BTreeSet<&str> = CORPUS.iter().map(|f| f.name).collect();
        assert_eq!(names.len(), CORPUS.len());
    }

    #[test]
    fn corpus_element_ids_do_not_collide_across_models() {
        // Reaction and parameter ids are corpus-unique; this is what makes
        // every ordered pair of distinct models merge into something larger
        // than the left operand (see the diff/merge law tests).
        let mut reactions: BTreeMap<String, &str> = BTreeMap::new();
        let mut parameters: BTreeMap<String, &str> = BTreeMap::new();
        for f in CORPUS {
            let doc = f.document();
            for r in &doc.reactions {
                if let Some(prev) = reactions.insert(r.id.clone(), f.name) {
                    panic!("reaction id `{}` appears in {} and {}", r.id, prev, f.name);
                }
            }
            for p in &doc.parameters {
                if let Some(prev) = parameters.insert(p.id.clone(), f.name) {
                    panic!("parameter id `{}` appears in {} and {}", p.id, prev, f.name);
                }
            }
        }
    }

    #[test]
    fn corpus_round_trips_through_shorthand() {
        for f in CORPUS {
            let doc = f.document();
            let printed = print_shorthand(&doc).unwrap();
            let reparsed = parse_shorthand(&printed).unwrap();
            assert_eq!(doc, reparsed, "{} must survive print∘parse", f.name);
        }
    }

    #[test]
    fn conflict_pair_produces_exactly_one_initial_amount_conflict() {
        let (left, right) = conflict_pair();
        let err = merge_models(&[left, right], &MergePolicy::fail(), None).unwrap_err();
        match err {
            MergeError::Conflict(report) => {
                assert_eq!(report.len(), 1);
                let c = &report.conflicts[0];
                assert_eq!(c.attribute, "initial_amount");
                assert_eq!(c.left, "1");
                assert_eq!(c.right, "2");
                assert!(c.path.to_string().contains("glc"));
            }
            other => panic!("expected a merge conflict, got {other:?}"),
        }
    }

    #[test]
    fn clustering_corpus_is_ten_annotated_models() {
        let corpus = clustering_corpus();
        assert_eq!(corpus.len(), 10);
        for (label, doc) in &corpus {
            let annotated = doc
                .species
                .iter()
                .any(|s| !s.annotations.is_empty())
                || doc.reactions.iter().any(|r| !r.annotations.is_empty());
            assert!(annotated, "{label} must carry annotations");
        }
    }

    #[test]
    fn annodb_fixture_ingests_cleanly() {
        let mut store = AnnotationStore::in_memory();
        let summary = store
            .ingest_records(std::io::Cursor::new(ANNODB_FIXTURE_TSV))
            .unwrap();
        assert_eq!(summary.added, 5);
        assert!(summary.rejected.is_empty());
        assert_eq!(store.search_by_name("gluc", false).len(), 3);
    }

    #[test]
    fn random_documents_validate_across_seeds() {
        for seed in 0..100 {
            let doc = random_document(seed);
            assert!(validate_model(&doc).is_clean(), "seed {seed}");
            assert!(doc.reactions.len() <= 10);
        }
    }

    #[test]
    fn random_balancing_problems_stay_small() {
        for seed in 0..30 {
            let p = random_problem(seed);
            assert!(p.basics.len() <= 30, "seed {seed}: {} basics", p.basics.len());
            assert!(!p.data.is_empty());
        }
    }

    #[test]
    fn gauss_jordan_inverts_a_known_matrix() {
        let a = vec![vec![4.0, 7.0], vec![2.0, 6.0]];
        let inv = invert_gauss_jordan(&a).unwrap();
        // Known inverse: 1/10 * [[6, -7], [-2, 4]].
        assert!((inv[0][0] - 0.6).abs() < 1e-12);
        assert!((inv[0][1] + 0.7).abs() < 1e-12);
        assert!((inv[1][0] + 0.2).abs() < 1e-12);
        assert!((inv[1][1] - 0.4).abs() < 1e-12);
        let singular = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(invert_gauss_jordan(&singular).is_none());
    }

    #[test]
    fn dense_posterior_matches_a_hand_computation() {
        // One basic quantity with prior N(0, 1) and one direct observation
        // N(1, 1): posterior mean 0.5, variance 0.5.
        let doc = parse_shorthand(MYMODEL_LISTING).unwrap();
        let mut config = sbmlkit::balance::BalancingConfig::default();
        config.use_pseudo_kcat = false;
        config.use_pseudo_keq = false;
        config.use_pseudo_vmax_fwd = false;
        config.use_pseudo_vmax_rev = false;
        config.use_pseudo_affinity = false;
        config.use_pseudo_potential = false;
        let p = sbmlkit::balance::build_problem(&doc, "", &config).unwrap();
        let dense = dense_posterior(&p).unwrap();
        // With no data the posterior is the prior.
        for i in 0..p.basics.len() {
            assert!((dense.mean[i] - p.prior_mean[i]).abs() < 1e-12);
            assert!((dense.std[i] - p.prior_std[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn closure_classes_merges_chains() {
        let pairs = vec![
            ("a".to_string(), "b".to_string()),
            ("b".to_string(), "c".to_string()),
            ("x".to_string(), "y".to_string()),
        ];
        let classes = closure_classes(&pairs);
        let expected: BTreeSet<BTreeSet<String>> = [
            BTreeSet::from(["a".to_string(), "b".to_string(), "c".to_string()]),
            BTreeSet::from(["x".to_string(), "y".to_string()]),
        ]
        .into_iter()
        .collect();
        assert_eq!(classes, expected);
    }

    #[test]
    fn reference_partition_clusters_an_obvious_pair() {
        // Nodes 0 and 1 similar, node 2 isolated.
        let n = 3;
        let mut sim = vec![0.0; n * n];
        sim[1] = 0.9;
        sim[n] = 0.9;
        let assignment = reference_partition(n, &sim, 0.5);
        assert_eq!(assignment, vec![0, 0, 1]);
    }

    #[test]
    fn eval_reference_agrees_with_production_eval_on_corpus_laws() {
        for f in CORPUS {
            let doc = f.document();
            for r in &doc.reactions {
                let Some(law) = &r.kinetic_law else { continue };
                let mut env = BTreeMap::new();
                for s in &doc.species {
                    env.insert(s.id.clone(), 1.3);
                }
                for p in &doc.parameters {
                    env.insert(p.id.clone(), p.value);
                }
                for lp in &r.local_parameters {
                    env.insert(lp.id.clone(), lp.value);
                }
                let reference = eval_reference(law, &env).unwrap();
                let production = law.eval(&|name| env.get(name).copied()).unwrap();
                assert!(
                    (reference - production).abs() <= 1e-12 * reference.abs().max(1.0),
                    "{}/{}: {reference} vs {production}",
                    f.name,
                    r.id
                );
            }
        }
    }
}
