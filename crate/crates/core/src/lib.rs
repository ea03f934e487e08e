//! Offline toolkit for working with a documented subset of SBML models.
//!
//! The crate bundles the machinery behind one engine:
//!
//! - [`model`] — the in-memory document model, structural validation, and
//!   stoichiometric matrix extraction;
//! - [`expr`] — the arithmetic AST used for kinetic laws, with an infix
//!   parser/printer and an evaluator;
//! - [`sbml`] — reader/writer for the SBML XML subset (MathML kinetic laws,
//!   RDF annotation blocks);
//! - [`shorthand`] — the line-oriented model DSL compiled to and from
//!   documents;
//! - [`annotation`] / [`semantics`] — MIRIAM-style resource URIs, element
//!   matching across models, and annotation editing;
//! - [`annodb`] — a persistent offline store of entities, synonyms, and
//!   cross-references with an equivalence partition over URIs;
//! - [`diffmerge`] — element-aligned diff, policy-driven merge, and
//!   dependency-closure split;
//! - [`balance`] — Bayesian completion of kinetic data sets on a log-linear
//!   scale, thermodynamically consistent by construction, plus modular rate
//!   law insertion;
//! - [`sbo`] — structural rate-law classification and SBO term assignment
//!   from an editable rule table;
//! - [`cluster`] — annotation-similarity ranking and agglomerative
//!   clustering of model collections;
//! - [`dot`] — GraphViz DOT emission for reaction networks and similarity
//!   graphs.
//!
//! All operations are pure functions over immutable documents unless a store
//! directory is explicitly involved ([`annodb`]).

pub mod annodb;
pub mod annotation;
pub mod balance;
pub mod cluster;
pub mod diffmerge;
pub mod dot;
pub mod expr;
pub mod model;
pub mod sbml;
pub mod sbo;
pub mod semantics;
pub mod shorthand;

pub use annotation::{AnnotationSet, NormalizedUri, Qualifier};
pub use expr::Expression;
pub use model::{Compartment, ModelDocument, Parameter, Reaction, Species};
