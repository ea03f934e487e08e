//! Annotation-similarity ranking and clustering of model collections.
//!
//! Each model is reduced to a [`Fingerprint`]: the set of `is`-qualified
//! resource URIs over all of its elements, optionally collapsed through an
//! equivalence oracle so cross-referenced identifiers count as one.
//! Similarity is the Jaccard index of two fingerprints; collections are
//! grouped by agglomerative average-linkage clustering with a similarity
//! threshold (default 0.3) as the stopping rule.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::annotation::{AnnotationSet, NormalizedUri, UriEquivalence};
use crate::model::{require_valid, InvalidModel, ModelDocument};

pub const DEFAULT_CLUSTER_THRESHOLD: f64 = 0.3;

/// A model reduced to its annotation identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub label: String,
    /// `is`-qualified URIs over all elements; when built with an oracle,
    /// each URI is the lexicographically smallest member of its
    /// equivalence class.
    pub uris: BTreeSet<NormalizedUri>,
}

/// Collect the `is`-URIs of every element (local parameters included).
pub fn fingerprint(
    doc: &ModelDocument,
    equiv: Option<&dyn UriEquivalence>,
) -> Result<Fingerprint, InvalidModel> {
    require_valid(doc)?;
    let mut uris: BTreeSet<NormalizedUri> = BTreeSet::new();
    let mut add = |set: &AnnotationSet| {
        for u in set.is_uris() {
            let canonical = match equiv {
                Some(oracle) => oracle
                    .equivalence_class(u)
                    .into_iter()
                    .next()
                    .unwrap_or_else(|| u.clone()),
                None => u.clone(),
            };
            uris.insert(canonical);
        }
    };
    for c in &doc.compartments {
        add(&c.annotations);
    }
    for s in &doc.species {
        add(&s.annotations);
    }
    for p in &doc.parameters {
        add(&p.annotations);
    }
    for r in &doc.reactions {
        add(&r.annotations);
        for lp in &r.local_parameters {
            add(&lp.annotations);
        }
    }
    Ok(Fingerprint {
        label: doc.id.clone(),
        uris,
    })
}

/// Jaccard index |∩|/|∪|; two empty fingerprints score 0.
pub fn similarity(a: &Fingerprint, b: &Fingerprint) -> f64 {
    if a.uris.is_empty() && b.uris.is_empty() {
        return 0.0;
    }
    let inter = a.uris.intersection(&b.uris).count() as f64;
    let union = a.uris.union(&b.uris).count() as f64;
    inter / union
}

/// Corpus ranked against a query: descending similarity, ties broken
/// lexicographically by label.
pub fn rank_models(query: &Fingerprint, corpus: &[Fingerprint]) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = corpus
        .iter()
        .map(|f| (f.label.clone(), similarity(query, f)))
        .collect();
    out.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("similarities are finite")
            .then_with(|| a.0.cmp(&b.0))
    });
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityGraph {
    /// Model labels in corpus order.
    pub nodes: Vec<String>,
    /// Undirected edges (i, j, similarity) with i < j, kept for pairs whose
    /// similarity reaches the clustering threshold.
    pub edges: Vec<(usize, usize, f64)>,
    /// Cluster id per node; ids are contiguous from 0, numbered by each
    /// cluster's first node.
    pub clusters: Vec<usize>,
}

impl SimilarityGraph {
    pub fn cluster_count(&self) -> usize {
        self.clusters.iter().copied().max().map_or(0, |m| m + 1)
    }

    /// Members of each cluster, by cluster id.
    pub fn cluster_members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cluster_count()];
        for (node, &c) in self.clusters.iter().enumerate() {
            out[c].push(node);
        }
        out
    }
}

/// Agglomerative average-linkage clustering over pairwise Jaccard
/// similarities. Merging stops when the best average cross-cluster
/// similarity drops below `threshold`; ties pick the earliest cluster pair.
pub fn cluster_models(corpus: &[Fingerprint], threshold: f64) -> SimilarityGraph {
    let n = corpus.len();
    let mut sim = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let s = similarity(&corpus[i], &corpus[j]);
            sim[i * n + j] = s;
            sim[j * n + i] = s;
        }
    }

    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    while clusters.len() > 1 {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let mut total = 0.0;
                for &x in &clusters[a] {
                    for &y in &clusters[b] {
                        total += sim[x * n + y];
                    }
                }
                let avg = total / (clusters[a].len() * clusters[b].len()) as f64;
                if best.is_none_or(|(_, _, s)| avg > s) {
                    best = Some((a, b, avg));
                }
            }
        }
        let (a, b, s) = best.expect("at least one pair while clusters.len() > 1");
        if s < threshold {
            break;
        }
        let absorbed = clusters.remove(b);
        clusters[a].extend(absorbed);
    }

    // Contiguous ids ordered by each cluster's first (smallest) node.
    for members in &mut clusters {
        members.sort_unstable();
    }
    clusters.sort_by_key(|m| m[0]);
    let mut assignment = vec![0usize; n];
    for (cid, members) in clusters.iter().enumerate() {
        for &node in members {
            assignment[node] = cid;
        }
    }

    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if sim[i * n + j] >= threshold {
                edges.push((i, j, sim[i * n + j]));
            }
        }
    }

    SimilarityGraph {
        nodes: corpus.iter().map(|f| f.label.clone()).collect(),
        edges,
        clusters: assignment,
    }
}

/// TSV view of a clustering: label, cluster id, nearest neighbor, score.
/// The nearest neighbor is the most similar other model (ties broken
/// lexicographically); a lone model has an empty neighbor and score 0.
pub fn cluster_report_tsv(corpus: &[Fingerprint], graph: &SimilarityGraph) -> String {
    assert_eq!(
        corpus.len(),
        graph.nodes.len(),
        "corpus and graph must describe the same models"
    );
    let mut out = String::from("#label\tcluster\tnearest\tscore\n");
    for (i, f) in corpus.iter().enumerate() {
        let mut nearest: Option<(f64, &str)> = None;
        for (j, other) in corpus.iter().enumerate() {
            if i == j {
                continue;
            }
            let s = similarity(f, other);
            let better = match nearest {
                None => true,
                Some((bs, bl)) => s > bs || (s == bs && other.label.as_str() < bl),
            };
            if better {
                nearest = Some((s, &other.label));
            }
        }
        let (score, label) = nearest.map_or((0.0, ""), |(s, l)| (s, l));
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.4}\n",
            f.label, graph.clusters[i], label, score
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annodb::AnnotationStore;
    use crate::annotation::{normalize_uri, Qualifier};
    use crate::model::{Compartment, Species};
    use std::io::Cursor;

    fn fp(label: &str, uris: &[&str]) -> Fingerprint {
        Fingerprint {
            label: label.to_string(),
            uris: uris.iter().map(|u| normalize_uri(u).unwrap()).collect(),
        }
    }

    #[test]
    fn unannotated_model_has_empty_fingerprint() {
        let f = fingerprint(&crate::model::my_model_fixture(), None).unwrap();
        assert_eq!(f.label, "MyModel");
        assert!(f.uris.is_empty());
    }

    #[test]
    fn equivalence_collapses_crosslinked_uris() {
        let mut store = AnnotationStore::in_memory();
        store
            .ingest_records(Cursor::new(
                "identifiers.org/obo.chebi/CHEBI:17234\tglucose\tidentifiers.org/kegg.compound/C00031\t\n",
            ))
            .unwrap();

        let mut doc = ModelDocument::new("m");
        doc.compartments.push(Compartment::new("c", 1.0));
        let mut s1 = Species::new("glc", "c", 1.0);
        s1.annotations.insert(
            Qualifier::Is,
            normalize_uri("identifiers.org/obo.chebi/CHEBI:17234").unwrap(),
        );
        let mut s2 = Species::new("glc2", "c", 1.0);
        s2.annotations.insert(
            Qualifier::Is,
            normalize_uri("identifiers.org/kegg.compound/C00031").unwrap(),
        );
        doc.species.push(s1);
        doc.species.push(s2);

        let plain = fingerprint(&doc, None).unwrap();
        assert_eq!(plain.uris.len(), 2);
        let collapsed = fingerprint(&doc, Some(&store)).unwrap();
        assert_eq!(collapsed.uris.len(), 1);
        // Representative is the lexicographically smallest class member.
        assert_eq!(
            collapsed.uris.iter().next().unwrap().as_str(),
            "identifiers.org/kegg.compound/C00031"
        );
    }

    #[test]
    fn fingerprint_collects_all_elements_is_uris_only() {
        let mut doc = ModelDocument::new("m");
        let mut c = Compartment::new("cell", 1.0);
        c.annotations.insert(
            Qualifier::Is,
            normalize_uri("identifiers.org/obo.go/GO:0005623").unwrap(),
        );
        doc.compartments.push(c);
        let mut s = Species::new("atp", "cell", 1.0);
        s.annotations.insert(
            Qualifier::Is,
            normalize_uri("identifiers.org/obo.chebi/CHEBI:15422").unwrap(),
        );
        // Non-`is` qualifiers are ignored.
        s.annotations.insert(
            Qualifier::IsVersionOf,
            normalize_uri("identifiers.org/kegg.compound/C00002").unwrap(),
        );
        doc.species.push(s);
        let mut s2 = Species::new("adp", "cell", 1.0);
        s2.annotations.insert(
            Qualifier::Is,
            normalize_uri("identifiers.org/obo.chebi/CHEBI:16761").unwrap(),
        );
        doc.species.push(s2);

        let f = fingerprint(&doc, None).unwrap();
        let expect: BTreeSet<String> = [
            "identifiers.org/obo.go/GO:0005623",
            "identifiers.org/obo.chebi/CHEBI:15422",
            "identifiers.org/obo.chebi/CHEBI:16761",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let got: BTreeSet<String> = f.uris.iter().map(|u| u.as_str().to_string()).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn jaccard_similarity_basics() {
        let a = fp("a", &["identifiers.org/x/1", "identifiers.org/x/2"]);
        let b = fp("b", &["identifiers.org/x/3"]);
        assert_eq!(similarity(&a, &a), 1.0);
        assert_eq!(similarity(&a, &b), 0.0);
        let empty = fp("e", &[]);
        assert_eq!(similarity(&empty, &empty), 0.0);

        // |∩| = 2, |∪| = 5 → 0.4
        let f1 = fp("f1", &[
            "identifiers.org/x/1",
            "identifiers.org/x/2",
            "identifiers.org/x/3",
        ]);
        let f2 = fp("f2", &[
            "identifiers.org/x/2",
            "identifiers.org/x/3",
            "identifiers.org/x/4",
            "identifiers.org/x/5",
        ]);
        assert!((similarity(&f1, &f2) - 0.4).abs() < 1e-15);
        assert_eq!(similarity(&f1, &f2), similarity(&f2, &f1));
    }

    #[test]
    fn ranking_orders_by_score_then_label() {
        let q = fp("q", &["identifiers.org/x/1", "identifiers.org/x/2"]);
        let corpus = vec![
            fp("far", &["identifiers.org/x/9"]),
            fp("q", &["identifiers.org/x/1", "identifiers.org/x/2"]),
            fp("half_b", &["identifiers.org/x/1", "identifiers.org/x/3"]),
            fp("half_a", &["identifiers.org/x/2", "identifiers.org/x/3"]),
        ];
        let ranked = rank_models(&q, &corpus);
        let labels: Vec<&str> = ranked.iter().map(|(l, _)| l.as_str()).collect();
        assert_eq!(labels, vec!["q", "half_a", "half_b", "far"]);
        assert_eq!(ranked[0].1, 1.0);
        assert!(rank_models(&q, &[]).is_empty());
    }

    #[test]
    fn single_model_is_one_cluster_without_edges() {
        let g = cluster_models(&[fp("only", &["identifiers.org/x/1"])], 0.3);
        assert_eq!(g.nodes, vec!["only"]);
        assert!(g.edges.is_empty());
        assert_eq!(g.clusters, vec![0]);
        assert_eq!(g.cluster_count(), 1);
    }

    #[test]
    fn identical_fingerprints_merge_with_unit_edge() {
        let corpus = vec![
            fp("a", &["identifiers.org/x/1"]),
            fp("b", &["identifiers.org/x/1"]),
        ];
        let g = cluster_models(&corpus, 0.3);
        assert_eq!(g.clusters, vec![0, 0]);
        assert_eq!(g.edges, vec![(0, 1, 1.0)]);
    }

    #[test]
    fn threshold_above_one_keeps_singletons() {
        let corpus = vec![
            fp("a", &["identifiers.org/x/1"]),
            fp("b", &["identifiers.org/x/1"]),
            fp("c", &["identifiers.org/x/2"]),
        ];
        let g = cluster_models(&corpus, 1.1);
        assert_eq!(g.clusters, vec![0, 1, 2]);
        assert!(g.edges.is_empty());
    }

    #[test]
    fn threshold_zero_merges_connected_corpus() {
        let corpus = vec![
            fp("a", &["identifiers.org/x/1", "identifiers.org/x/2"]),
            fp("b", &["identifiers.org/x/2", "identifiers.org/x/3"]),
            fp("c", &["identifiers.org/x/3", "identifiers.org/x/4"]),
        ];
        let g = cluster_models(&corpus, 0.0);
        assert_eq!(g.cluster_count(), 1);
    }

    #[test]
    fn mixed_corpus_partitions_at_default_threshold() {
        let corpus = vec![
            fp("glyc1", &["identifiers.org/x/1", "identifiers.org/x/2", "identifiers.org/x/3"]),
            fp("glyc2", &["identifiers.org/x/1", "identifiers.org/x/2", "identifiers.org/x/4"]),
            fp("tca", &["identifiers.org/y/1", "identifiers.org/y/2"]),
        ];
        let g = cluster_models(&corpus, DEFAULT_CLUSTER_THRESHOLD);
        assert_eq!(g.clusters, vec![0, 0, 1]);
        assert_eq!(g.edges.len(), 1);
        let (i, j, s) = g.edges[0];
        assert_eq!((i, j), (0, 1));
        assert!((s - 0.5).abs() < 1e-15);
        let members = g.cluster_members();
        assert_eq!(members, vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn report_tsv_names_nearest_neighbors() {
        let corpus = vec![
            fp("a", &["identifiers.org/x/1", "identifiers.org/x/2"]),
            fp("b", &["identifiers.org/x/1", "identifiers.org/x/2"]),
            fp("c", &["identifiers.org/y/1"]),
        ];
        let g = cluster_models(&corpus, 0.3);
        let tsv = cluster_report_tsv(&corpus, &g);
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines[0], "#label\tcluster\tnearest\tscore");
        assert_eq!(lines[1], "a\t0\tb\t1.0000");
        assert_eq!(lines[2], "b\t0\ta\t1.0000");
        // `c` is alone: nearest by tie-break is the lexicographically
        // smallest label at score 0.
        assert_eq!(lines[3], "c\t1\ta\t0.0000");

        let lone = vec![fp("solo", &[])];
        let g1 = cluster_models(&lone, 0.3);
        let tsv1 = cluster_report_tsv(&lone, &g1);
        assert_eq!(tsv1.lines().nth(1).unwrap(), "solo\t0\t\t0.0000");
    }
}
