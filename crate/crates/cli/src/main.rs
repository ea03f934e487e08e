//! `sbmlkit` — SBML model toolkit.
//!
//! Subcommands cover the whole library surface: shorthand compilation,
//! validation, semantic diff/merge/split, annotation editing, parameter
//! balancing, SBO term assignment, annotation-similarity clustering, DOT
//! export, the offline annotation store, and the HTTP service.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation/parse error,
//! 3 merge conflict, 4 numerical failure.

mod formats;
mod ops;
mod server;
mod store;

use std::io::{Read as _, Write as _};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use sbmlkit::annodb::AnnotationStore;
use sbmlkit::annotation::{Qualifier, UriEquivalence};
use sbmlkit::balance::{BalanceError, BalancingConfig};
use sbmlkit::diffmerge::{diff_models, merge_models, split_model, MergeError, MergePolicy, SplitError};
use sbmlkit::dot::{model_to_dot, similarity_to_dot, DotOptions};
use sbmlkit::model::validate_model;
use sbmlkit::sbo::{assignment_log_tsv, SboError, SboRuleTable};
use sbmlkit::semantics::{remove_annotation, set_annotation};
use sbmlkit::shorthand::print_shorthand;
use sbmlkit::ModelDocument;

use formats::{
    balance_payload, cluster_payload, conflict_payload, diff_payload, json_bytes, merge_body,
    merge_payload, records_payload, sbo_payload, validation_payload, Format,
};
use ops::{run_balance, run_cluster, run_sbo};
use store::{canonical_bytes_and_hash, parse_model_bytes, parse_model_bytes_loose, ModelInputError};

const EXIT_USAGE: i32 = 1;
const EXIT_INVALID: i32 = 2;
const EXIT_CONFLICT: i32 = 3;
const EXIT_NUMERICAL: i32 = 4;

#[derive(Parser)]
#[command(
    name = "sbmlkit",
    version,
    about = "SBML model toolkit: shorthand, diff/merge/split, annotations, balancing, SBO terms, clustering, DOT export, and an HTTP service"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Translate between shorthand and SBML
    Shorthand {
        #[command(subcommand)]
        direction: ShorthandCmd,
    },
    /// Check a model and report findings (exit 2 on errors)
    Validate {
        /// Model file (SBML or shorthand), or `-` for stdin
        input: String,
        /// Emit the report as JSON instead of TSV
        #[arg(long)]
        json: bool,
    },
    /// Compare two models element by element
    Diff {
        left: String,
        right: String,
        #[arg(long)]
        json: bool,
        /// Annotation database directory (enables cross-reference matching)
        #[arg(long)]
        db: Option<PathBuf>,
    },
    /// Merge two or more models (left fold, in argument order)
    Merge {
        /// Model files, first is the base
        #[arg(required = true)]
        inputs: Vec<String>,
        /// fail | left | right | file=OVERRIDES.tsv
        #[arg(long)]
        policy: String,
        /// Emit the JSON result payload instead of the merged SBML
        #[arg(long)]
        json: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        db: Option<PathBuf>,
    },
    /// Extract the dependency closure of seed elements as a submodel
    Split {
        input: String,
        /// Seed element ids (comma-separated or repeated)
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<String>,
        /// Also pull every reaction touching an included species, to fixpoint
        #[arg(long)]
        expand_reactions: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Edit MIRIAM annotations on a model element
    Annotate {
        #[command(subcommand)]
        action: AnnotateCmd,
    },
    /// Balance kinetic parameters against data and insert modular rate laws
    Balance {
        input: String,
        /// Observation table (TSV)
        #[arg(long)]
        data: PathBuf,
        /// Write the balancing report (TSV) to this file
        #[arg(long)]
        report: Option<PathBuf>,
        /// Balancing configuration (TOML); defaults match the prior table
        #[arg(long)]
        config: Option<PathBuf>,
        /// Emit the JSON result payload instead of the balanced SBML
        #[arg(long)]
        json: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Classify rate laws and assign SBO terms
    Sbo {
        input: String,
        /// Rule table (TSV) overriding the built-in one
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Write the assignment log (TSV) to this file
        #[arg(long)]
        log: Option<PathBuf>,
        /// Emit the JSON result payload instead of the annotated SBML
        #[arg(long)]
        json: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Cluster models by annotation similarity
    Cluster {
        #[arg(required = true)]
        inputs: Vec<String>,
        /// Similarity threshold (default 0.3)
        #[arg(long)]
        threshold: Option<f64>,
        /// Write the similarity graph as DOT to this file
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Emit the similarity graph as JSON instead of the TSV report
        #[arg(long)]
        json: bool,
        #[arg(long)]
        db: Option<PathBuf>,
    },
    /// Render the reaction network as DOT
    Viz {
        input: String,
        /// Omit dashed modifier edges
        #[arg(long)]
        no_modifiers: bool,
        /// Group species into one subgraph cluster per compartment
        #[arg(long)]
        compartment_clusters: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Offline annotation store
    Annodb {
        #[command(subcommand)]
        action: AnnodbCmd,
    },
    /// Run the HTTP service
    Serve {
        #[arg(long)]
        port: u16,
        /// Model store directory (created if missing)
        #[arg(long)]
        store: PathBuf,
        /// Annotation database directory (searches + equivalence matching)
        #[arg(long)]
        db: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ShorthandCmd {
    /// Shorthand in, canonical SBML out
    Compile(TranslateArgs),
    /// SBML in, canonical shorthand out
    Decompile(TranslateArgs),
}

#[derive(Args)]
struct TranslateArgs {
    /// Model file, or `-` for stdin
    input: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AnnotateCmd {
    /// Add `(qualifier, uri)` to an element's annotation set
    Set(AnnotateArgs),
    /// Remove `(qualifier, uri)` from an element's annotation set
    Remove(AnnotateArgs),
}

#[derive(Args)]
struct AnnotateArgs {
    input: String,
    /// Element id, or `<reaction>.<local parameter>`
    target: String,
    /// Biology qualifier (is, isVersionOf, hasPart, isDescribedBy, …)
    qualifier: String,
    /// Resource URI (identifiers.org, MIRIAM URN, or legacy URL form)
    uri: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AnnodbCmd {
    /// Load record TSV files into a store directory
    Ingest {
        #[arg(long)]
        db: PathBuf,
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Emit ingest summaries as JSON
        #[arg(long)]
        json: bool,
    },
    /// Search records by name or by cross-reference id
    Search {
        #[arg(long)]
        db: PathBuf,
        /// Substring (or exact, with --exact) name query
        #[arg(long, conflicts_with_all = ["ns", "id"])]
        name: Option<String>,
        /// Require whole-name equality
        #[arg(long, requires = "name")]
        exact: bool,
        /// Namespace for an id lookup (with --id)
        #[arg(long, requires = "id")]
        ns: Option<String>,
        /// Entity id for an id lookup (with --ns)
        #[arg(long, requires = "ns")]
        id: Option<String>,
        #[arg(long)]
        json: bool,
    },
}

/// A failed run: exit code, optional stderr line, optional stdout payload
/// (the conflict report for exit 3).
struct Failure {
    code: i32,
    message: Option<String>,
    payload: Option<Vec<u8>>,
}

impl Failure {
    fn new(code: i32, message: impl ToString) -> Failure {
        Failure {
            code,
            message: Some(message.to_string()),
            payload: None,
        }
    }

    fn usage(message: impl ToString) -> Failure {
        Failure::new(EXIT_USAGE, message)
    }

    fn invalid(message: impl ToString) -> Failure {
        Failure::new(EXIT_INVALID, message)
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version print on stdout and succeed; real usage
            // errors exit 1 (clap's default of 2 is taken by validation).
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            e.print().ok();
            std::process::exit(code);
        }
    };
    if let Err(failure) = run(cli) {
        if let Some(payload) = failure.payload {
            std::io::stdout().write_all(&payload).ok();
        }
        if let Some(message) = failure.message {
            eprintln!("error: {message}");
        }
        std::process::exit(failure.code);
    }
}

// ----- shared plumbing -------------------------------------------------------

fn read_input(path: &str) -> Result<Vec<u8>, Failure> {
    if path == "-" {
        let mut buf = Vec::new();
        std::io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| Failure::usage(format!("reading stdin: {e}")))?;
        Ok(buf)
    } else {
        std::fs::read(path).map_err(|e| Failure::usage(format!("reading {path}: {e}")))
    }
}

fn read_text_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("reading {}: {e}", path.display())))
}

fn input_failure(e: ModelInputError) -> Failure {
    Failure::invalid(e)
}

fn load_model(path: &str) -> Result<ModelDocument, Failure> {
    let bytes = read_input(path)?;
    parse_model_bytes(&bytes).map_err(input_failure)
}

fn load_models(paths: &[String]) -> Result<Vec<ModelDocument>, Failure> {
    if paths.iter().any(|p| p == "-") {
        return Err(Failure::usage(
            "stdin (`-`) is only supported for single-model commands",
        ));
    }
    paths.iter().map(|p| load_model(p)).collect()
}

fn emit(bytes: &[u8], output: Option<&Path>) -> Result<(), Failure> {
    match output {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| Failure::usage(format!("writing {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::usage(format!("writing stdout: {e}"))),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes)
        .map_err(|e| Failure::usage(format!("writing {}: {e}", path.display())))
}

fn format_of(json: bool) -> Format {
    if json {
        Format::Json
    } else {
        Format::Tsv
    }
}

fn open_db(dir: &Path) -> Result<AnnotationStore, Failure> {
    AnnotationStore::open(dir)
        .map_err(|e| Failure::usage(format!("opening annotation store {}: {e}", dir.display())))
}

/// `--db DIR` as an optional equivalence oracle for matching.
fn optional_db(dir: Option<&PathBuf>) -> Result<Option<AnnotationStore>, Failure> {
    dir.map(|d| open_db(d)).transpose()
}

fn as_equiv(db: &Option<AnnotationStore>) -> Option<&dyn UriEquivalence> {
    db.as_ref().map(|db| db as &dyn UriEquivalence)
}

fn parse_policy(spec: &str) -> Result<MergePolicy, Failure> {
    match spec {
        "fail" => Ok(MergePolicy::fail()),
        "left" => Ok(MergePolicy::left()),
        "right" => Ok(MergePolicy::right()),
        other => match other.strip_prefix("file=") {
            Some(path) => {
                let text = read_text_file(Path::new(path))?;
                let overrides = MergePolicy::parse_overrides_tsv(&text)
                    .map_err(|e| Failure::invalid(format!("policy file {path}: {e}")))?;
                // Unresolved conflicts still abort: the file only settles
                // the attributes it names.
                let mut policy = MergePolicy::fail();
                policy.overrides = overrides;
                Ok(policy)
            }
            None => Err(Failure::usage(format!(
                "--policy must be fail, left, right, or file=F (got `{other}`)"
            ))),
        },
    }
}

fn balance_failure(e: BalanceError) -> Failure {
    match e {
        BalanceError::SingularSystem(_) | BalanceError::NumericalFailure(_) => {
            Failure::new(EXIT_NUMERICAL, e)
        }
        other => Failure::invalid(other),
    }
}

// ----- dispatch --------------------------------------------------------------

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Shorthand { direction } => match direction {
            ShorthandCmd::Compile(args) => {
                let doc = load_model(&args.input)?;
                let (bytes, _) = canonical_bytes_and_hash(&doc).map_err(Failure::invalid)?;
                emit(&bytes, args.output.as_deref())
            }
            ShorthandCmd::Decompile(args) => {
                let doc = load_model(&args.input)?;
                let text = print_shorthand(&doc).map_err(Failure::invalid)?;
                emit(text.as_bytes(), args.output.as_deref())
            }
        },

        Command::Validate { input, json } => {
            let bytes = read_input(&input)?;
            let doc = parse_model_bytes_loose(&bytes).map_err(input_failure)?;
            let report = validate_model(&doc);
            let payload = validation_payload(&report, format_of(json));
            emit(&payload, None)?;
            if report.is_clean() {
                Ok(())
            } else {
                Err(Failure {
                    code: EXIT_INVALID,
                    message: Some(format!("{} validation error(s)", report.error_count())),
                    payload: None,
                })
            }
        }

        Command::Diff { left, right, json, db } => {
            let docs = load_models(&[left, right])?;
            let db = optional_db(db.as_ref())?;
            let report =
                diff_models(&docs[0], &docs[1], as_equiv(&db)).map_err(Failure::invalid)?;
            emit(&diff_payload(&report, format_of(json)), None)
        }

        Command::Merge { inputs, policy, json, output, db } => {
            let docs = load_models(&inputs)?;
            let policy = parse_policy(&policy)?;
            let db = optional_db(db.as_ref())?;
            match merge_models(&docs, &policy, as_equiv(&db)) {
                Ok(outcome) => {
                    let body = merge_body(&outcome).map_err(Failure::invalid)?;
                    if json {
                        emit(&merge_payload(&body, Format::Json), output.as_deref())
                    } else {
                        emit(body.model.as_bytes(), output.as_deref())
                    }
                }
                Err(MergeError::Conflict(report)) => Err(Failure {
                    code: EXIT_CONFLICT,
                    message: Some(format!("merge aborted with {} conflict(s)", report.len())),
                    payload: Some(conflict_payload(&report, format_of(json))),
                }),
                Err(MergeError::NoModels) => {
                    Err(Failure::usage("merge requires at least one model"))
                }
                Err(MergeError::Invalid(e)) => Err(Failure::invalid(e)),
            }
        }

        Command::Split { input, seeds, expand_reactions, output } => {
            let doc = load_model(&input)?;
            let seed_refs: Vec<&str> = seeds.iter().map(|s| s.as_str()).collect();
            let sub = split_model(&doc, &seed_refs, expand_reactions).map_err(|e| match e {
                SplitError::NoSuchElement(_) => Failure::invalid(e),
                SplitError::Invalid(inner) => Failure::invalid(inner),
            })?;
            let (bytes, _) = canonical_bytes_and_hash(&sub).map_err(Failure::invalid)?;
            emit(&bytes, output.as_deref())
        }

        Command::Annotate { action } => {
            let (args, set) = match &action {
                AnnotateCmd::Set(args) => (args, true),
                AnnotateCmd::Remove(args) => (args, false),
            };
            let doc = load_model(&args.input)?;
            let qualifier = Qualifier::parse(&args.qualifier);
            let updated = if set {
                set_annotation(&doc, &args.target, qualifier, &args.uri)
                    .map_err(Failure::invalid)?
            } else {
                let (updated, removed) =
                    remove_annotation(&doc, &args.target, &qualifier, &args.uri)
                        .map_err(Failure::invalid)?;
                if !removed {
                    eprintln!(
                        "warning: `{}` had no {} {} annotation",
                        args.target, args.qualifier, args.uri
                    );
                }
                updated
            };
            let (bytes, _) = canonical_bytes_and_hash(&updated).map_err(Failure::invalid)?;
            emit(&bytes, args.output.as_deref())
        }

        Command::Balance { input, data, report, config, json, output } => {
            let doc = load_model(&input)?;
            let data_tsv = read_text_file(&data)?;
            let config = match config {
                Some(path) => {
                    let text = read_text_file(&path)?;
                    toml::from_str::<BalancingConfig>(&text).map_err(|e| {
                        Failure::invalid(format!("config {}: {e}", path.display()))
                    })?
                }
                None => BalancingConfig::default(),
            };
            let result = run_balance(&doc, &data_tsv, &config).map_err(balance_failure)?;
            if let Some(path) = report {
                write_file(&path, result.report.as_bytes())?;
            }
            if json {
                emit(&balance_payload(&result, Format::Json), output.as_deref())
            } else {
                emit(result.model.as_bytes(), output.as_deref())
            }
        }

        Command::Sbo { input, rules, log, json, output } => {
            let doc = load_model(&input)?;
            let table = match rules {
                Some(path) => {
                    let text = read_text_file(&path)?;
                    SboRuleTable::parse_tsv(&text).map_err(|e| match e {
                        SboError::Invalid(inner) => Failure::invalid(inner),
                        other => Failure::invalid(other),
                    })?
                }
                None => SboRuleTable::default(),
            };
            let result = run_sbo(&doc, &table).map_err(Failure::invalid)?;
            if let Some(path) = log {
                write_file(&path, assignment_log_tsv(&result.log).as_bytes())?;
            }
            if json {
                emit(&sbo_payload(&result, Format::Json), output.as_deref())
            } else {
                emit(result.model.as_bytes(), output.as_deref())
            }
        }

        Command::Cluster { inputs, threshold, dot, json, db } => {
            let docs = load_models(&inputs)?;
            let threshold = threshold.unwrap_or(sbmlkit::cluster::DEFAULT_CLUSTER_THRESHOLD);
            if !threshold.is_finite() {
                return Err(Failure::usage("--threshold must be finite"));
            }
            let db = optional_db(db.as_ref())?;
            let (fingerprints, graph) =
                run_cluster(&docs, threshold, as_equiv(&db)).map_err(Failure::invalid)?;
            if let Some(path) = dot {
                write_file(&path, similarity_to_dot(&graph).as_str().as_bytes())?;
            }
            emit(&cluster_payload(&fingerprints, &graph, format_of(json)), None)
        }

        Command::Viz { input, no_modifiers, compartment_clusters, output } => {
            let doc = load_model(&input)?;
            let opts = DotOptions {
                show_modifiers: !no_modifiers,
                compartment_clusters,
            };
            let dot = model_to_dot(&doc, opts).map_err(Failure::invalid)?;
            emit(dot.as_str().as_bytes(), output.as_deref())
        }

        Command::Annodb { action } => match action {
            AnnodbCmd::Ingest { db, files, json } => {
                let mut store = open_db(&db)?;
                let mut summaries = Vec::new();
                for file in &files {
                    let summary = store.ingest_file(file).map_err(|e| {
                        Failure::invalid(format!("ingesting {}: {e}", file.display()))
                    })?;
                    for reject in &summary.rejected {
                        eprintln!(
                            "warning: {} line {}: {}",
                            file.display(),
                            reject.line,
                            reject.reason
                        );
                    }
                    if !json {
                        println!(
                            "{}: added {} unchanged {} rejected {}",
                            file.display(),
                            summary.added,
                            summary.unchanged,
                            summary.rejected.len()
                        );
                    }
                    summaries.push(summary);
                }
                if json {
                    emit(&json_bytes(&summaries), None)?;
                }
                Ok(())
            }
            AnnodbCmd::Search { db, name, exact, ns, id, json } => {
                let store = open_db(&db)?;
                let records = match (&name, &ns, &id) {
                    (Some(query), None, None) => store.search_by_name(query, exact),
                    (None, Some(ns), Some(id)) => store.search_by_id(ns, id).into_iter().collect(),
                    _ => {
                        return Err(Failure::usage(
                            "search needs --name QUERY [--exact] or --ns NS --id ID",
                        ))
                    }
                };
                emit(&records_payload(&records, format_of(json)), None)
            }
        },

        Command::Serve { port, store, db } => {
            server::serve(port, store, db).map_err(|e| Failure::usage(e.to_string()))
        }
    }
}
