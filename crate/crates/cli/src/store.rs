//! Content-addressed model store.
//!
//! Models are persisted as canonical SBML under the lowercase hex SHA-256
//! of those bytes, so storing equal content twice yields the same handle
//! and one object.  Writes go to a temp file in the store directory and
//! are renamed into place, which keeps concurrent writers safe; reads take
//! no lock.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use sha2::{Digest, Sha256};

use sbmlkit::model::{require_valid, InvalidModel};
use sbmlkit::sbml::{read_sbml, write_sbml_canonical, SbmlError};
use sbmlkit::shorthand::{parse_shorthand, ShorthandError};
use sbmlkit::ModelDocument;

/// Why a byte stream could not be turned into a valid model.
#[derive(Debug)]
pub enum ModelInputError {
    /// Not UTF-8, or neither shorthand (`@model:`) nor XML (`<`).
    UnrecognizedFormat(String),
    /// Recognized as shorthand but failed to parse.
    Shorthand(ShorthandError),
    /// Recognized as SBML but failed to parse.
    Sbml(SbmlError),
    /// Parsed, but the document has validation errors.
    Invalid(InvalidModel),
}

impl fmt::Display for ModelInputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelInputError::UnrecognizedFormat(msg) => write!(f, "{msg}"),
            ModelInputError::Shorthand(e) => write!(f, "shorthand: {e}"),
            ModelInputError::Sbml(e) => write!(f, "sbml: {e}"),
            ModelInputError::Invalid(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ModelInputError {}

/// Parse model text in either supported format, auto-detected by the first
/// non-whitespace bytes: `@model:` means shorthand, `<` means SBML.
/// Unlike [`parse_model_bytes`], the document is not required to validate
/// (the `validate` subcommand reports findings instead of failing).
pub fn parse_model_bytes_loose(bytes: &[u8]) -> Result<ModelDocument, ModelInputError> {
    let text = std::str::from_utf8(bytes).map_err(|_| {
        ModelInputError::UnrecognizedFormat("model input is not UTF-8 text".to_string())
    })?;
    let trimmed = text.trim_start();
    if trimmed.starts_with("@model:") {
        parse_shorthand(text).map_err(ModelInputError::Shorthand)
    } else if trimmed.starts_with('<') {
        read_sbml(bytes).map_err(ModelInputError::Sbml)
    } else {
        Err(ModelInputError::UnrecognizedFormat(
            "unrecognized model format: expected shorthand starting with `@model:` or XML starting with `<`".to_string(),
        ))
    }
}

/// [`parse_model_bytes_loose`] plus the validity gate every operation
/// requires.
pub fn parse_model_bytes(bytes: &[u8]) -> Result<ModelDocument, ModelInputError> {
    let doc = parse_model_bytes_loose(bytes)?;
    require_valid(&doc).map_err(ModelInputError::Invalid)?;
    Ok(doc)
}

/// Canonical SBML bytes and their lowercase hex SHA-256 handle.
pub fn canonical_bytes_and_hash(doc: &ModelDocument) -> Result<(Vec<u8>, String), InvalidModel> {
    let bytes = write_sbml_canonical(doc)?;
    let hash = hex::encode(Sha256::digest(&bytes));
    Ok((bytes, hash))
}

/// True iff `s` is syntactically a model handle (64 lowercase hex digits).
pub fn is_handle(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Directory of canonical SBML files named `<hash>.xml`.
#[derive(Debug)]
pub struct ModelStore {
    dir: PathBuf,
}

impl ModelStore {
    pub fn open(dir: impl AsRef<Path>) -> io::Result<ModelStore> {
        fs::create_dir_all(&dir)?;
        Ok(ModelStore {
            dir: dir.as_ref().to_path_buf(),
        })
    }

    fn object_path(&self, hash: &str) -> PathBuf {
        self.dir.join(format!("{hash}.xml"))
    }

    /// Persist a validated document; idempotent, returns the handle.
    pub fn put(&self, doc: &ModelDocument) -> io::Result<String> {
        let (bytes, hash) = canonical_bytes_and_hash(doc)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?;
        let target = self.object_path(&hash);
        if target.exists() {
            return Ok(hash);
        }
        let tmp = self.dir.join(format!(
            ".tmp-{hash}-{}-{}",
            std::process::id(),
            TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        fs::write(&tmp, &bytes)?;
        fs::rename(&tmp, &target)?;
        Ok(hash)
    }

    /// Canonical SBML bytes for a handle, if stored.
    pub fn get_bytes(&self, hash: &str) -> Option<Vec<u8>> {
        if !is_handle(hash) {
            return None;
        }
        fs::read(self.object_path(hash)).ok()
    }

    /// Parsed document for a handle, if stored.
    pub fn get(&self, hash: &str) -> Option<ModelDocument> {
        let bytes = self.get_bytes(hash)?;
        read_sbml(&bytes).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sbmlkit_testkit::MYMODEL_LISTING;

    #[test]
    fn shorthand_and_its_canonical_sbml_share_a_handle() {
        let doc = parse_model_bytes(MYMODEL_LISTING.as_bytes()).unwrap();
        let (sbml, hash_a) = canonical_bytes_and_hash(&doc).unwrap();
        let doc_b = parse_model_bytes(&sbml).unwrap();
        let (_, hash_b) = canonical_bytes_and_hash(&doc_b).unwrap();
        assert_eq!(hash_a, hash_b);
        assert!(is_handle(&hash_a));
    }

    #[test]
    fn put_is_idempotent_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let store = ModelStore::open(dir.path().join("store")).unwrap();
        let doc = parse_model_bytes(MYMODEL_LISTING.as_bytes()).unwrap();
        let h1 = store.put(&doc).unwrap();
        let h2 = store.put(&doc).unwrap();
        assert_eq!(h1, h2);
        let count = fs::read_dir(&store.dir).unwrap().count();
        assert_eq!(count, 1, "one stored object, no leftover temp files");
        assert_eq!(store.get(&h1).unwrap(), doc);
        assert!(store.get_bytes("deadbeef").is_none());
        assert!(store.get_bytes(&"0".repeat(64)).is_none());
    }

    #[test]
    fn malformed_input_is_rejected_with_a_diagnostic() {
        let err = parse_model_bytes(b"not a model").unwrap_err();
        assert!(matches!(err, ModelInputError::UnrecognizedFormat(_)));
        let err = parse_model_bytes(b"@model:oops").unwrap_err();
        assert!(matches!(err, ModelInputError::Shorthand(_)));
        let err = parse_model_bytes(b"<sbml").unwrap_err();
        assert!(matches!(err, ModelInputError::Sbml(_)));
    }
}
