//! File-backed ciphertext store for the storage provider.
//!
//! Layout under the store root:
//!
//! ```text
//! manifest.vdsm          StoreManifest: epoch, manager key, entry ids
//! entries/<hex(id)>.vdsm one SharedCiphertext per stored file
//! ```
//!
//! Entry files are written before the manifest, and the manifest is
//! replaced via write-to-temp + atomic rename, so a crash never
//! leaves the manifest naming an entry that was not fully written.
//!
//! The store preserves one invariant: every listed entry carries the
//! manifest's epoch and a signature that verifies under the
//! manifest's manager key. Inserts that would break it are rejected,
//! and signature updates rewrite every entry before the manifest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::groupmath::G2;
use crate::scheme::{apply_update, verify, PublicParams, SharedCiphertext, UpdateKey};
use crate::wire::{
    decode_shared_ciphertext, decode_store_manifest, encode_shared_ciphertext,
    encode_store_manifest, StoreManifest, WireError,
};

const MANIFEST_FILE: &str = "manifest.vdsm";
const MANIFEST_TMP: &str = "manifest.vdsm.tmp";
const ENTRIES_DIR: &str = "entries";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store already initialized at {0}")]
    AlreadyExists(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Wire {
        path: PathBuf,
        #[source]
        source: WireError,
    },
    #[error("entry {0:?} already stored")]
    DuplicateEntry(String),
    #[error("no entry {0:?}")]
    NotFound(String),
    #[error("entry epoch {entry} does not match store epoch {store}")]
    EpochMismatch { entry: u64, store: u64 },
    #[error("signature of entry {0:?} does not verify under the current manager key")]
    BadSignature(String),
    #[error("update key is for epoch {got}, store expects {want}")]
    StaleUpdate { got: u64, want: u64 },
}

fn io_err(path: &Path, source: io::Error) -> StoreError {
    StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// The storage provider's persistent state: a manifest (epoch,
/// manager verification key, entry listing) plus one file per entry.
#[derive(Debug)]
pub struct CspStore {
    root: PathBuf,
    manifest: StoreManifest,
}

impl CspStore {
    /// Initialize an empty store. Fails if `root` already holds one.
    pub fn create(root: &Path, pk_m: G2, epoch: u64) -> Result<CspStore, StoreError> {
        let manifest_path = root.join(MANIFEST_FILE);
        if manifest_path.exists() {
            return Err(StoreError::AlreadyExists(manifest_path));
        }
        let entries = root.join(ENTRIES_DIR);
        fs::create_dir_all(&entries).map_err(|e| io_err(&entries, e))?;
        let store = CspStore {
            root: root.to_path_buf(),
            manifest: StoreManifest {
                epoch,
                pk_m,
                file_ids: Vec::new(),
            },
        };
        store.write_manifest()?;
        Ok(store)
    }

    /// Open an existing store by reading its manifest.
    pub fn open(root: &Path) -> Result<CspStore, StoreError> {
        let manifest_path = root.join(MANIFEST_FILE);
        let bytes = fs::read(&manifest_path).map_err(|e| io_err(&manifest_path, e))?;
        let manifest = decode_store_manifest(&bytes).map_err(|e| StoreError::Wire {
            path: manifest_path,
            source: e,
        })?;
        Ok(CspStore {
            root: root.to_path_buf(),
            manifest,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// The public bulletin: current epoch, manager key, entry ids.
    pub fn manifest(&self) -> &StoreManifest {
        &self.manifest
    }

    pub fn ids(&self) -> &[String] {
        &self.manifest.file_ids
    }

    fn entry_path(&self, id: &str) -> PathBuf {
        self.root
            .join(ENTRIES_DIR)
            .join(format!("{}.vdsm", hex::encode(id.as_bytes())))
    }

    fn write_manifest(&self) -> Result<(), StoreError> {
        let tmp = self.root.join(MANIFEST_TMP);
        fs::write(&tmp, encode_store_manifest(&self.manifest)).map_err(|e| io_err(&tmp, e))?;
        let target = self.root.join(MANIFEST_FILE);
        fs::rename(&tmp, &target).map_err(|e| io_err(&target, e))
    }

    /// Insert a ciphertext under its file id. The entry must be
    /// fresh, carry the store's epoch, and verify under the current
    /// manager key; the store never holds an unverifiable entry.
    pub fn store(&mut self, pk: &PublicParams, ct: &SharedCiphertext) -> Result<(), StoreError> {
        let id = &ct.meta.file_id;
        if self.manifest.file_ids.binary_search(id).is_ok() {
            return Err(StoreError::DuplicateEntry(id.clone()));
        }
        if ct.meta.epoch != self.manifest.epoch {
            return Err(StoreError::EpochMismatch {
                entry: ct.meta.epoch,
                store: self.manifest.epoch,
            });
        }
        if !verify(pk, ct, &self.manifest.pk_m) {
            return Err(StoreError::BadSignature(id.clone()));
        }
        let path = self.entry_path(id);
        fs::write(&path, encode_shared_ciphertext(ct)).map_err(|e| io_err(&path, e))?;
        let pos = self.manifest.file_ids.binary_search(id).unwrap_err();
        self.manifest.file_ids.insert(pos, id.clone());
        self.write_manifest()
    }

    /// Raw stored bytes of an entry, exactly as persisted.
    pub fn fetch_bytes(&self, id: &str) -> Result<Vec<u8>, StoreError> {
        if self.manifest.file_ids.binary_search(&id.to_string()).is_err() {
            return Err(StoreError::NotFound(id.to_string()));
        }
        let path = self.entry_path(id);
        fs::read(&path).map_err(|e| io_err(&path, e))
    }

    pub fn fetch(&self, id: &str) -> Result<SharedCiphertext, StoreError> {
        let bytes = self.fetch_bytes(id)?;
        decode_shared_ciphertext(&bytes).map_err(|e| StoreError::Wire {
            path: self.entry_path(id),
            source: e,
        })
    }

    /// Apply an owner-churn update: exponentiate every stored
    /// signature by the update factor and adopt the new manager key
    /// and epoch. The key must be for exactly the next epoch; replays
    /// and gaps are rejected with the store unchanged.
    pub fn apply_update(
        &mut self,
        pk: &PublicParams,
        upk: &UpdateKey,
    ) -> Result<(), StoreError> {
        if upk.epoch != self.manifest.epoch + 1 {
            return Err(StoreError::StaleUpdate {
                got: upk.epoch,
                want: self.manifest.epoch + 1,
            });
        }
        for id in &self.manifest.file_ids {
            let path = self.entry_path(id);
            let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
            let mut ct = decode_shared_ciphertext(&bytes).map_err(|e| StoreError::Wire {
                path: path.clone(),
                source: e,
            })?;
            ct.sigma = apply_update(pk, &ct.sigma, upk);
            ct.meta.epoch = upk.epoch;
            fs::write(&path, encode_shared_ciphertext(&ct)).map_err(|e| io_err(&path, e))?;
        }
        self.manifest.epoch = upk.epoch;
        self.manifest.pk_m = upk.new_pk_m;
        self.write_manifest()
    }

    /// Check the store invariant: every listed entry exists, decodes,
    /// carries the manifest epoch and its own id, and verifies under
    /// the manifest's manager key. Corruption reports as `Ok(false)`;
    /// only environmental failures are errors.
    pub fn verify_all(&self, pk: &PublicParams) -> Result<bool, StoreError> {
        for id in &self.manifest.file_ids {
            let path = self.entry_path(id);
            let bytes = match fs::read(&path) {
                Ok(b) => b,
                Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(false),
                Err(e) => return Err(io_err(&path, e)),
            };
            let ct = match decode_shared_ciphertext(&bytes) {
                Ok(ct) => ct,
                Err(_) => return Ok(false),
            };
            if ct.meta.file_id != *id
                || ct.meta.epoch != self.manifest.epoch
                || !verify(pk, &ct, &self.manifest.pk_m)
            {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
