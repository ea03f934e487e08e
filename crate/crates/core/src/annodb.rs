//! Offline annotation store: entities, synonyms, cross-references.
//!
//! Records are ingested from TSV files (UTF-8, tab-separated, `|` as the
//! list separator, `#` starts a comment line):
//!
//! ```text
//! PrimaryURI <TAB> Names(|-separated) <TAB> CrossRefs(|-separated) <TAB> Relations(rel=uri|…)
//! ```
//!
//! The store persists as a directory holding an append-only `records.log`
//! of canonicalized record lines; the in-memory index (by URI, by lowercase
//! name, and the cross-reference equivalence partition) is rebuilt on open.
//! Re-ingesting a file the store has already seen leaves the directory
//! byte-for-byte unchanged. Ingestion takes an exclusive `store.lock` in the
//! directory; concurrent readers need no lock.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{normalize_uri, NormalizedUri, UnrecognizedUriScheme, UriEquivalence};

pub const RECORDS_LOG: &str = "records.log";
pub const STORE_LOCK: &str = "store.lock";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub primary_uri: NormalizedUri,
    /// Synonyms; the first entry is the preferred name. Never empty.
    pub names: Vec<String>,
    pub crossrefs: BTreeSet<NormalizedUri>,
    pub relations: BTreeSet<(String, NormalizedUri)>,
}

impl EntityRecord {
    pub fn preferred_name(&self) -> &str {
        &self.names[0]
    }

    /// Canonical TSV line (always four columns) used in the append-only log.
    fn canonical_line(&self) -> String {
        let crossrefs: Vec<&str> = self.crossrefs.iter().map(|u| u.as_str()).collect();
        let relations: Vec<String> = self
            .relations
            .iter()
            .map(|(rel, uri)| format!("{rel}={uri}"))
            .collect();
        format!(
            "{}\t{}\t{}\t{}",
            self.primary_uri,
            self.names.join("|"),
            crossrefs.join("|"),
            relations.join("|")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MalformedRecord {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IngestSummary {
    /// Records new to the store.
    pub added: usize,
    /// Records the store had already seen (skipped, store unchanged).
    pub unchanged: usize,
    /// Rejected lines with reasons; ingestion continues past them.
    pub rejected: Vec<MalformedRecord>,
}

#[derive(Debug, Error)]
pub enum AnnodbError {
    #[error("annotation store i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("annotation store is locked by another writer: {0}")]
    StoreLocked(PathBuf),
    #[error(transparent)]
    Uri(#[from] UnrecognizedUriScheme),
}

/// Union-find over interned URI ids, union by size.
#[derive(Debug, Default, Clone)]
struct Partition {
    ids: BTreeMap<NormalizedUri, usize>,
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl Partition {
    fn intern(&mut self, uri: &NormalizedUri) -> usize {
        if let Some(&id) = self.ids.get(uri) {
            return id;
        }
        let id = self.parent.len();
        self.ids.insert(uri.clone(), id);
        self.parent.push(id);
        self.size.push(1);
        id
    }

    fn find(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }

    fn root_of(&self, uri: &NormalizedUri) -> Option<usize> {
        self.ids.get(uri).map(|&id| self.find(id))
    }

    fn class_of(&self, uri: &NormalizedUri) -> BTreeSet<NormalizedUri> {
        let mut class = BTreeSet::new();
        class.insert(uri.clone());
        if let Some(root) = self.root_of(uri) {
            for (u, &id) in &self.ids {
                if self.find(id) == root {
                    class.insert(u.clone());
                }
            }
        }
        class
    }

    fn classes(&self) -> Vec<BTreeSet<NormalizedUri>> {
        let mut by_root: BTreeMap<usize, BTreeSet<NormalizedUri>> = BTreeMap::new();
        for (u, &id) in &self.ids {
            by_root.entry(self.find(id)).or_default().insert(u.clone());
        }
        by_root.into_values().collect()
    }
}

#[derive(Debug)]
pub struct AnnotationStore {
    dir: Option<PathBuf>,
    /// All ingested records in log order (later records with the same
    /// primary URI supersede earlier ones in the indexes).
    records: Vec<EntityRecord>,
    /// Canonical log lines already present, for byte-exact idempotence.
    seen_lines: HashSet<String>,
    /// Primary URI → index of the latest record carrying it.
    by_primary: BTreeMap<NormalizedUri, usize>,
    /// Lowercase name → indices of latest records carrying it.
    by_name: HashMap<String, BTreeSet<usize>>,
    partition: Partition,
}

impl AnnotationStore {
    /// A store without a backing directory (nothing is persisted).
    pub fn in_memory() -> Self {
        AnnotationStore {
            dir: None,
            records: Vec::new(),
            seen_lines: HashSet::new(),
            by_primary: BTreeMap::new(),
            by_name: HashMap::new(),
            partition: Partition::default(),
        }
    }

    /// Open (or create) a persistent store directory and rebuild the index
    /// from its `records.log`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, AnnodbError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut store = AnnotationStore::in_memory();
        store.dir = Some(dir.to_path_buf());
        let log = dir.join(RECORDS_LOG);
        if log.exists() {
            for line in fs::read_to_string(&log)?.lines() {
                // Log lines are canonical; a line that fails to parse means
                // the store was corrupted externally.
                match parse_record_line(line) {
                    Ok(Some(record)) => {
                        store.insert_record(record);
                    }
                    Ok(None) => {}
                    Err(reason) => {
                        return Err(AnnodbError::Io(std::io::Error::new(
                            std::io::ErrorKind::InvalidData,
                            format!("corrupt records.log line: {reason}"),
                        )))
                    }
                }
            }
        }
        Ok(store)
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Number of distinct primary URIs currently indexed.
    pub fn len(&self) -> usize {
        self.by_primary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_primary.is_empty()
    }

    /// Latest record per primary URI, ordered by primary URI.
    pub fn records(&self) -> impl Iterator<Item = &EntityRecord> {
        self.by_primary.values().map(move |&i| &self.records[i])
    }

    fn insert_record(&mut self, record: EntityRecord) {
        self.seen_lines.insert(record.canonical_line());
        let idx = self.records.len();
        // Drop the superseded record (same primary URI) from the name index.
        if let Some(&old) = self.by_primary.get(&record.primary_uri) {
            for name in &self.records[old].names {
                if let Some(set) = self.by_name.get_mut(&name.to_lowercase()) {
                    set.remove(&old);
                }
            }
        }
        for name in &record.names {
            self.by_name
                .entry(name.to_lowercase())
                .or_default()
                .insert(idx);
        }
        let primary_id = self.partition.intern(&record.primary_uri);
        for xref in &record.crossrefs {
            let xref_id = self.partition.intern(xref);
            self.partition.union(primary_id, xref_id);
        }
        self.by_primary.insert(record.primary_uri.clone(), idx);
        self.records.push(record);
    }

    /// Ingest a TSV record stream. Malformed lines are rejected and counted;
    /// ingestion continues. Re-ingesting known records changes nothing.
    pub fn ingest_records(&mut self, reader: impl BufRead) -> Result<IngestSummary, AnnodbError> {
        let _guard = match &self.dir {
            Some(dir) => Some(LockGuard::acquire(dir)?),
            None => None,
        };
        let mut summary = IngestSummary::default();
        let mut new_lines = String::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            match parse_record_line(&line) {
                Ok(None) => {}
                Ok(Some(record)) => {
                    let canonical = record.canonical_line();
                    if self.seen_lines.contains(&canonical) {
                        summary.unchanged += 1;
                    } else {
                        new_lines.push_str(&canonical);
                        new_lines.push('\n');
                        self.insert_record(record);
                        summary.added += 1;
                    }
                }
                Err(reason) => summary.rejected.push(MalformedRecord {
                    line: lineno + 1,
                    reason,
                }),
            }
        }
        if !new_lines.is_empty() {
            if let Some(dir) = &self.dir {
                let mut file = fs::OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(dir.join(RECORDS_LOG))?;
                file.write_all(new_lines.as_bytes())?;
                file.sync_all()?;
            }
        }
        Ok(summary)
    }

    pub fn ingest_file(&mut self, path: impl AsRef<Path>) -> Result<IngestSummary, AnnodbError> {
        let file = fs::File::open(path)?;
        self.ingest_records(std::io::BufReader::new(file))
    }

    /// Case-insensitive name search. `exact` requires whole-name equality;
    /// otherwise any name containing the query as a substring matches.
    /// Results are ordered by (preferred name, primary URI).
    pub fn search_by_name(&self, query: &str, exact: bool) -> Vec<&EntityRecord> {
        let needle = query.to_lowercase();
        let mut hits: BTreeSet<usize> = BTreeSet::new();
        if exact {
            if let Some(set) = self.by_name.get(&needle) {
                hits.extend(set.iter().copied());
            }
        } else {
            for (name, set) in &self.by_name {
                if name.contains(&needle) {
                    hits.extend(set.iter().copied());
                }
            }
        }
        let mut out: Vec<&EntityRecord> = hits.into_iter().map(|i| &self.records[i]).collect();
        out.sort_by(|a, b| {
            let ka = (a.preferred_name().to_lowercase(), a.primary_uri.as_str());
            let kb = (b.preferred_name().to_lowercase(), b.primary_uri.as_str());
            ka.cmp(&kb).then_with(|| a.preferred_name().cmp(b.preferred_name()))
        });
        out
    }

    /// Exact id lookup through the equivalence partition: a hit on any class
    /// member returns the class representative record (the record whose
    /// primary URI is the smallest in the class).
    pub fn search_by_id(&self, namespace: &str, id: &str) -> Option<&EntityRecord> {
        let uri = NormalizedUri::from_parts(namespace, id).ok()?;
        let class = self.partition.class_of(&uri);
        class
            .iter()
            .find_map(|member| self.by_primary.get(member))
            .map(|&i| &self.records[i])
    }

    /// The full equivalence class of a URI; a singleton when unknown.
    pub fn equivalence_set(
        &self,
        uri: &str,
    ) -> Result<BTreeSet<NormalizedUri>, UnrecognizedUriScheme> {
        let uri = normalize_uri(uri)?;
        Ok(self.partition.class_of(&uri))
    }

    /// Every equivalence class with at least one member, for partition-level
    /// comparisons.
    pub fn equivalence_classes(&self) -> Vec<BTreeSet<NormalizedUri>> {
        self.partition.classes()
    }
}

impl UriEquivalence for AnnotationStore {
    fn equivalence_class(&self, uri: &NormalizedUri) -> BTreeSet<NormalizedUri> {
        self.partition.class_of(uri)
    }
}

struct LockGuard {
    path: PathBuf,
}

impl LockGuard {
    fn acquire(dir: &Path) -> Result<LockGuard, AnnodbError> {
        let path = dir.join(STORE_LOCK);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(LockGuard { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(AnnodbError::StoreLocked(path))
            }
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Parse one TSV line. `Ok(None)` for comments and blank lines; `Err(reason)`
/// for malformed records.
fn parse_record_line(line: &str) -> Result<Option<EntityRecord>, String> {
    let trimmed = line.trim_end_matches(['\r', '\n']);
    if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
        return Ok(None);
    }
    let cols: Vec<&str> = trimmed.split('\t').collect();
    if cols.len() < 2 || cols.len() > 4 {
        return Err(format!("expected 2-4 tab-separated columns, found {}", cols.len()));
    }
    let primary = normalize_uri(cols[0].trim())
        .map_err(|e| format!("primary URI: {e}"))?;
    let mut names: Vec<String> = Vec::new();
    for raw in cols[1].split('|') {
        let name = raw.trim();
        if !name.is_empty() && !names.iter().any(|n| n == name) {
            names.push(name.to_string());
        }
    }
    if names.is_empty() {
        return Err("record has no names".to_string());
    }
    let mut crossrefs = BTreeSet::new();
    if let Some(col) = cols.get(2) {
        for raw in col.split('|') {
            let raw = raw.trim();
            if raw.is_empty() {
                continue;
            }
            let uri = normalize_uri(raw).map_err(|e| format!("crossref: {e}"))?;
            if uri != primary {
                crossrefs.insert(uri);
            }
        }
    }
    let mut relations = BTreeSet::new();
    if let Some(col) = cols.get(3) {
        for raw in col.split('|') {
            let raw = raw.trim();
            if raw.is_empty() {
                continue;
            }
            let (rel, target) = raw
                .split_once('=')
                .ok_or_else(|| format!("relation `{raw}` lacks `=`"))?;
            let rel = rel.trim();
            if rel.is_empty() {
                return Err(format!("relation `{raw}` has an empty relation name"));
            }
            let uri = normalize_uri(target.trim()).map_err(|e| format!("relation: {e}"))?;
            relations.insert((rel.to_string(), uri));
        }
    }
    Ok(Some(EntityRecord {
        primary_uri: primary,
        names,
        crossrefs,
        relations,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    const FIXTURE: &str = "\
# five-record fixture
identifiers.org/obo.chebi/CHEBI:17234\tglucose|D-glucose\tidentifiers.org/kegg.compound/C00031\t
identifiers.org/obo.chebi/CHEBI:17925\talpha-D-glucose\tidentifiers.org/obo.chebi/CHEBI:17234\tis_a=identifiers.org/obo.chebi/CHEBI:17234
identifiers.org/obo.chebi/CHEBI:15903\tbeta-D-glucose\t\t
identifiers.org/obo.chebi/CHEBI:15422\tATP|adenosine triphosphate\tidentifiers.org/kegg.compound/C00002\t
identifiers.org/obo.chebi/CHEBI:16761\tADP\t\t
";

    fn fixture_store() -> AnnotationStore {
        let mut store = AnnotationStore::in_memory();
        let summary = store.ingest_records(Cursor::new(FIXTURE)).unwrap();
        assert_eq!(summary.added, 5);
        assert!(summary.rejected.is_empty());
        store
    }

    #[test]
    fn empty_ingest_changes_nothing() {
        let mut store = AnnotationStore::in_memory();
        let summary = store.ingest_records(Cursor::new("")).unwrap();
        assert_eq!(summary, IngestSummary::default());
        assert!(store.is_empty());
    }

    #[test]
    fn crossref_joins_equivalence_class() {
        let store = fixture_store();
        let class = store
            .equivalence_set("identifiers.org/obo.chebi/CHEBI:17234")
            .unwrap();
        assert!(class.contains(&NormalizedUri::from_parts("kegg.compound", "C00031").unwrap()));
        // 17925 crossrefs 17234, so all three plus the KEGG id share a class.
        assert!(class.contains(&NormalizedUri::from_parts("obo.chebi", "CHEBI:17925").unwrap()));
        assert_eq!(class.len(), 3);
    }

    #[test]
    fn chained_crossrefs_close_transitively() {
        let mut store = AnnotationStore::in_memory();
        let tsv = "identifiers.org/x/A\ta\tidentifiers.org/x/B\t\n\
                   identifiers.org/x/B\tb\tidentifiers.org/x/C\t\n";
        store.ingest_records(Cursor::new(tsv)).unwrap();
        let class = store.equivalence_set("identifiers.org/x/C").unwrap();
        assert_eq!(class.len(), 3);
        for member in ["A", "B", "C"] {
            assert!(class.contains(&NormalizedUri::from_parts("x", member).unwrap()));
        }
    }

    #[test]
    fn unknown_uri_is_singleton_class() {
        let store = fixture_store();
        let class = store.equivalence_set("identifiers.org/zz/999").unwrap();
        assert_eq!(class.len(), 1);
        assert!(class.contains(&NormalizedUri::from_parts("zz", "999").unwrap()));
        assert!(store.equivalence_set("ftp://nope").is_err());
    }

    #[test]
    fn partition_property_holds_on_fixture() {
        let store = fixture_store();
        for record in store.records() {
            let v = store.equivalence_set(record.primary_uri.as_str()).unwrap();
            for u in &v {
                let u_class = store.equivalence_set(u.as_str()).unwrap();
                assert_eq!(u_class, v);
            }
        }
    }

    #[test]
    fn exact_name_search_finds_record() {
        let store = fixture_store();
        let hits = store.search_by_name("GLUCOSE", true);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].preferred_name(), "glucose");
        assert!(store.search_by_name("gluc", true).is_empty());
        assert!(AnnotationStore::in_memory().search_by_name("x", true).is_empty());
    }

    #[test]
    fn substring_search_ordered_by_preferred_name() {
        let store = fixture_store();
        let hits = store.search_by_name("gluc", false);
        let names: Vec<&str> = hits.iter().map(|r| r.preferred_name()).collect();
        assert_eq!(names, vec!["alpha-D-glucose", "beta-D-glucose", "glucose"]);
    }

    #[test]
    fn id_search_resolves_through_equivalence() {
        let store = fixture_store();
        let direct = store.search_by_id("obo.chebi", "CHEBI:17234").unwrap();
        let via_xref = store.search_by_id("kegg.compound", "C00031").unwrap();
        assert_eq!(direct, via_xref);
        // Representative = smallest primary URI in the class with a record.
        assert_eq!(
            direct.primary_uri,
            NormalizedUri::from_parts("obo.chebi", "CHEBI:17234").unwrap()
        );
        assert!(store.search_by_id("kegg.compound", "C99999").is_none());
    }

    #[test]
    fn malformed_lines_rejected_and_counted() {
        let mut store = AnnotationStore::in_memory();
        let tsv = "identifiers.org/x/1\tone\t\t\n\
                   not-a-uri\tbad\t\t\n\
                   identifiers.org/x/2\t\t\t\n\
                   identifiers.org/x/3\tthree\t\tmissing-equals\n\
                   identifiers.org/x/4\tfour\t\t\n";
        let summary = store.ingest_records(Cursor::new(tsv)).unwrap();
        assert_eq!(summary.added, 2);
        assert_eq!(summary.rejected.len(), 3);
        assert_eq!(summary.rejected[0].line, 2);
        assert_eq!(summary.rejected[1].line, 3);
        assert_eq!(summary.rejected[2].line, 4);
        assert_eq!(store.len(), 2);
    }

    #[test]
    fn persistent_store_reopens_and_ingests_idempotently() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db");
        {
            let mut store = AnnotationStore::open(&path).unwrap();
            let summary = store.ingest_records(Cursor::new(FIXTURE)).unwrap();
            assert_eq!(summary.added, 5);
        }
        let log_bytes = fs::read(path.join(RECORDS_LOG)).unwrap();
        {
            let mut store = AnnotationStore::open(&path).unwrap();
            assert_eq!(store.len(), 5);
            let summary = store.ingest_records(Cursor::new(FIXTURE)).unwrap();
            assert_eq!(summary.added, 0);
            assert_eq!(summary.unchanged, 5);
            // Byte-exact idempotence of the on-disk store.
            assert_eq!(fs::read(path.join(RECORDS_LOG)).unwrap(), log_bytes);
            // Index intact after the no-op ingest.
            assert!(store.search_by_id("kegg.compound", "C00031").is_some());
        }
        // The writer lock is released on drop.
        assert!(!path.join(STORE_LOCK).exists());
    }

    #[test]
    fn lock_blocks_second_writer() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db");
        let mut store = AnnotationStore::open(&path).unwrap();
        fs::write(path.join(STORE_LOCK), b"").unwrap();
        let err = store.ingest_records(Cursor::new(FIXTURE)).unwrap_err();
        assert!(matches!(err, AnnodbError::StoreLocked(_)));
        fs::remove_file(path.join(STORE_LOCK)).unwrap();
        assert_eq!(store.ingest_records(Cursor::new(FIXTURE)).unwrap().added, 5);
    }

    #[test]
    fn later_record_supersedes_earlier_in_name_index() {
        let mut store = AnnotationStore::in_memory();
        store
            .ingest_records(Cursor::new("identifiers.org/x/1\told name\t\t\n"))
            .unwrap();
        store
            .ingest_records(Cursor::new("identifiers.org/x/1\tnew name\t\t\n"))
            .unwrap();
        assert_eq!(store.len(), 1);
        assert!(store.search_by_name("old name", true).is_empty());
        assert_eq!(store.search_by_name("new name", true).len(), 1);
    }

    #[test]
    fn uri_equivalence_trait_matches_equivalence_set() {
        let store = fixture_store();
        let uri = NormalizedUri::from_parts("obo.chebi", "CHEBI:17234").unwrap();
        let via_trait = UriEquivalence::equivalence_class(&store, &uri);
        let via_method = store.equivalence_set(uri.as_str()).unwrap();
        assert_eq!(via_trait, via_method);
    }
}
