//! Operation pipelines shared verbatim by the CLI and the HTTP service.

use sbmlkit::annotation::UriEquivalence;
use sbmlkit::balance::{
    apply_balanced, balance, build_problem, BalanceError, BalancingConfig,
};
use sbmlkit::cluster::{cluster_models, fingerprint, Fingerprint, SimilarityGraph};
use sbmlkit::model::InvalidModel;
use sbmlkit::sbo::{assign_sbo_terms, SboError, SboRuleTable};
use sbmlkit::ModelDocument;

use crate::formats::{
    balance_report, dedup_labels, model_body, BalanceBody, SboBody,
};

/// Build, solve, apply, and report a balancing run on one model.
pub fn run_balance(
    doc: &ModelDocument,
    data_tsv: &str,
    config: &BalancingConfig,
) -> Result<BalanceBody, BalanceError> {
    let problem = build_problem(doc, data_tsv, config)?;
    let balanced = balance(&problem)?;
    let applied = apply_balanced(doc, &balanced, config)?;
    let report = balance_report(&problem, &balanced);
    let body = model_body(&applied)?;
    Ok(BalanceBody {
        model: body.model,
        hash: body.hash,
        report,
    })
}

/// Classify rate laws and assign SBO terms from a rule table.
pub fn run_sbo(doc: &ModelDocument, rules: &SboRuleTable) -> Result<SboBody, SboError> {
    let (annotated, log) = assign_sbo_terms(doc, rules)?;
    let body = model_body(&annotated).expect("sbo assignment preserves validity");
    Ok(SboBody {
        model: body.model,
        hash: body.hash,
        log,
    })
}

/// Fingerprint a model list (labels are document ids, deduplicated in
/// order) and cluster it.
pub fn run_cluster(
    docs: &[ModelDocument],
    threshold: f64,
    equiv: Option<&dyn UriEquivalence>,
) -> Result<(Vec<Fingerprint>, SimilarityGraph), InvalidModel> {
    let ids: Vec<String> = docs.iter().map(|d| d.id.clone()).collect();
    let labels = dedup_labels(&ids);
    let mut fingerprints = Vec::with_capacity(docs.len());
    for (doc, label) in docs.iter().zip(labels) {
        let mut fp = fingerprint(doc, equiv)?;
        fp.label = label;
        fingerprints.push(fp);
    }
    let graph = cluster_models(&fingerprints, threshold);
    Ok((fingerprints, graph))
}
