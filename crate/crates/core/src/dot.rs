//! GraphViz DOT emission for reaction networks and similarity graphs.
//!
//! Models render as bipartite digraphs — species as ellipses, reactions as
//! boxes — with solid substrate/product edges (stoichiometry labels when
//! ≠ 1), optional dashed modifier edges, and optional compartment
//! subgraph clusters. Similarity graphs render undirected with two-decimal
//! edge labels and cluster-colored nodes. Output is deterministic:
//! byte-equal for equal inputs.

use serde::{Deserialize, Serialize};

use crate::cluster::SimilarityGraph;
use crate::expr::format_number;
use crate::model::{require_valid, InvalidModel, ModelDocument};

/// Rendered DOT text; every edge endpoint is a declared node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DotDocument {
    pub text: String,
}

impl DotDocument {
    pub fn as_str(&self) -> &str {
        &self.text
    }
}

impl std::fmt::Display for DotDocument {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DotOptions {
    /// Draw dashed modifier → reaction edges.
    pub show_modifiers: bool,
    /// Group species into one subgraph cluster per compartment.
    pub compartment_clusters: bool,
}

impl Default for DotOptions {
    fn default() -> Self {
        DotOptions {
            show_modifiers: true,
            compartment_clusters: false,
        }
    }
}

/// Escape a string for a double-quoted DOT literal.
fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// A bare DOT ID, or a quoted literal when the name needs it.
fn dot_id(s: &str) -> String {
    let bare = !s.is_empty()
        && !s.starts_with(|c: char| c.is_ascii_digit())
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if bare {
        s.to_string()
    } else {
        quote(s)
    }
}

fn label_of<'a>(name: &'a str, id: &'a str) -> &'a str {
    if name.is_empty() {
        id
    } else {
        name
    }
}

/// Bipartite species/reaction digraph. Node ids carry `s_`/`r_` prefixes so
/// model ids can never collide with DOT keywords.
pub fn model_to_dot(doc: &ModelDocument, opts: DotOptions) -> Result<DotDocument, InvalidModel> {
    require_valid(doc)?;
    let mut out = String::from("digraph model {\n");

    if opts.compartment_clusters {
        for (ci, comp) in doc.compartments.iter().enumerate() {
            let members: Vec<&crate::model::Species> = doc
                .species
                .iter()
                .filter(|s| s.compartment == comp.id)
                .collect();
            if members.is_empty() {
                continue;
            }
            out.push_str(&format!("  subgraph cluster_{ci} {{\n"));
            out.push_str(&format!(
                "    label={};\n",
                quote(label_of(&comp.name, &comp.id))
            ));
            for s in members {
                out.push_str(&format!(
                    "    s_{} [label={}, shape=ellipse];\n",
                    s.id,
                    quote(label_of(&s.name, &s.id))
                ));
            }
            out.push_str("  }\n");
        }
    } else {
        for s in &doc.species {
            out.push_str(&format!(
                "  s_{} [label={}, shape=ellipse];\n",
                s.id,
                quote(label_of(&s.name, &s.id))
            ));
        }
    }

    for r in &doc.reactions {
        out.push_str(&format!(
            "  r_{} [label={}, shape=box];\n",
            r.id,
            quote(label_of(&r.name, &r.id))
        ));
    }

    for r in &doc.reactions {
        for sref in &r.reactants {
            if sref.stoichiometry == 1.0 {
                out.push_str(&format!("  s_{} -> r_{};\n", sref.species, r.id));
            } else {
                out.push_str(&format!(
                    "  s_{} -> r_{} [label={}];\n",
                    sref.species,
                    r.id,
                    quote(&format_number(sref.stoichiometry))
                ));
            }
        }
        for sref in &r.products {
            if sref.stoichiometry == 1.0 {
                out.push_str(&format!("  r_{} -> s_{};\n", r.id, sref.species));
            } else {
                out.push_str(&format!(
                    "  r_{} -> s_{} [label={}];\n",
                    r.id,
                    sref.species,
                    quote(&format_number(sref.stoichiometry))
                ));
            }
        }
        if opts.show_modifiers {
            for m in &r.modifiers {
                out.push_str(&format!("  s_{} -> r_{} [style=dashed];\n", m, r.id));
            }
        }
    }

    out.push_str("}\n");
    Ok(DotDocument { text: out })
}

/// Fixed fill palette, cycled by cluster index.
pub const CLUSTER_PALETTE: [&str; 8] = [
    "#a6cee3", "#b2df8a", "#fb9a99", "#fdbf6f", "#cab2d6", "#ffff99", "#1f78b4", "#33a02c",
];

/// Undirected similarity graph: nodes filled by cluster color, edges
/// labeled with the similarity to two decimals.
pub fn similarity_to_dot(g: &SimilarityGraph) -> DotDocument {
    let mut out = String::from("graph similarity {\n");
    for (i, label) in g.nodes.iter().enumerate() {
        let color = CLUSTER_PALETTE[g.clusters[i] % CLUSTER_PALETTE.len()];
        out.push_str(&format!(
            "  {} [style=filled, fillcolor={}];\n",
            dot_id(label),
            quote(color)
        ));
    }
    for (i, j, s) in &g.edges {
        out.push_str(&format!(
            "  {} -- {} [label={}];\n",
            dot_id(&g.nodes[*i]),
            dot_id(&g.nodes[*j]),
            quote(&format!("{s:.2}"))
        ));
    }
    out.push_str("}\n");
    DotDocument { text: out }
}
