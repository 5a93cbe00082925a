//! On-disk workspace for the operator tool.
//!
//! One workspace is one deployment: a single authority, a single
//! data manager, one store. Everything lives under a root directory:
//!
//! ```text
//! <root>/
//!   vdsdm.toml                  attribute universe and owner roster
//!   vdsdm.lock                  held for the duration of a mutating command
//!   ta/public_params.vdsm       system public key
//!   ta/master_key.vdsm          authority master secret
//!   dm/manager_state.vdsm       manager signing state (secret)
//!   dm/staging/<file>.vdsm      encrypted, awaiting owner signatures
//!   dm/outbox/<file>/<owner>.vdsm   collected signature shares
//!   dm/ready/<file>.vdsm        aggregated, ready to upload
//!   owners/<owner>/share.vdsm   dealt signing shares
//!   users/<user>/key.vdsm       issued attribute keys
//!   csp/                        the store (manifest + entries)
//! ```
//!
//! Every artifact file is wire-encoded; anything that fails to decode
//! is reported with its path. Names that become path components
//! (owners, users, file ids) are restricted to the attribute-name
//! charset, so they can never traverse outside the workspace.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use vdsdm::policy::PolicyAst;
use vdsdm::scheme::{
    ManagerState, MasterKey, OwnerShare, PublicParams, SharedCiphertext, SignatureShare,
    StagedCiphertext, UserKey,
};
use vdsdm::wire::{self, WireError};

/// Config file name at the workspace root.
pub const CONFIG_FILE: &str = "vdsdm.toml";
/// Lock file name at the workspace root.
pub const LOCK_FILE: &str = "vdsdm.lock";

/// Everything a command can fail with. The exit-code mapping is:
/// verification failures and denials exit 1, everything else exits 2.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad invocation or workspace state; exits 2.
    #[error("{0}")]
    Usage(String),
    /// A signature or payload check failed; exits 1.
    #[error("VERIFY FAILED: {0}")]
    Verify(String),
    /// A key does not satisfy a policy; exits 1.
    #[error("ACCESS DENIED: {0}")]
    Denied(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Decode {
        path: PathBuf,
        #[source]
        source: WireError,
    },
    #[error(transparent)]
    Scheme(#[from] vdsdm::scheme::SchemeError),
    #[error(transparent)]
    Policy(#[from] vdsdm::policy::PolicyError),
    #[error(transparent)]
    Store(#[from] vdsdm::protocol::StoreError),
    #[error(transparent)]
    Script(#[from] vdsdm::protocol::ScriptError),
    #[error(transparent)]
    Protocol(#[from] vdsdm::protocol::ProtocolError),
}

impl CliError {
    /// 1 for verification failures and denials, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verify(_) | CliError::Denied(_) => 1,
            _ => 2,
        }
    }

    /// Whether the message already carries its own prefix (the exit-1
    /// classes); other errors get an `error:` prefix when reported.
    pub fn self_prefixed(&self) -> bool {
        matches!(self, CliError::Verify(_) | CliError::Denied(_))
    }
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io { path: path.to_path_buf(), source }
}

fn decode_err(path: &Path, source: WireError) -> CliError {
    CliError::Decode { path: path.to_path_buf(), source }
}

/// Reject names that are not plain lowercase identifiers. Owners,
/// users, attributes, and file ids all share the rule; it is stricter
/// than what policies accept because these names become path
/// components, which must never traverse outside the workspace.
pub fn check_name(what: &str, name: &str) -> Result<(), CliError> {
    let mut chars = name.chars();
    let valid = matches!(chars.next(), Some('a'..='z'))
        && chars.all(|c| matches!(c, 'a'..='z' | '0'..='9' | '_'));
    if valid && PolicyAst::valid_attribute(name) {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "invalid {what} name {name:?}: use a lowercase letter followed by \
             lowercase letters, digits, or underscores"
        )))
    }
}

/// The workspace config: the deployment's attribute universe and the
/// current owner roster (kept in sync by `update-owners`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    pub universe: Vec<String>,
    pub owners: Vec<String>,
}

/// Path layout and typed artifact I/O rooted at one directory.
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    /// Initialize a fresh workspace: directories plus config. Refuses
    /// to touch a directory that already holds a config.
    pub fn init(root: &Path, config: &Config) -> Result<Workspace, CliError> {
        let ws = Workspace { root: root.to_path_buf() };
        if ws.config_path().exists() {
            return Err(CliError::Usage(format!(
                "workspace already initialized ({} exists)",
                ws.config_path().display()
            )));
        }
        for dir in [
            ws.root.clone(),
            ws.ta_dir(),
            ws.dm_dir(),
            ws.staging_dir(),
            ws.ready_dir(),
            ws.outbox_dir(),
            ws.owners_dir(),
            ws.users_dir(),
        ] {
            fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        }
        ws.save_config(config)?;
        Ok(ws)
    }

    /// Open an existing workspace; the config must be present.
    pub fn open(root: &Path) -> Result<Workspace, CliError> {
        let ws = Workspace { root: root.to_path_buf() };
        if !ws.config_path().exists() {
            return Err(CliError::Usage(format!(
                "no workspace at {} (run `vdsdm setup` first)",
                ws.root.display()
            )));
        }
        Ok(ws)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// A path rendered relative to the workspace root, for reports.
    pub fn rel(&self, path: &Path) -> String {
        path.strip_prefix(&self.root)
            .unwrap_or(path)
            .display()
            .to_string()
    }

    pub fn config_path(&self) -> PathBuf {
        self.root.join(CONFIG_FILE)
    }

    fn ta_dir(&self) -> PathBuf {
        self.root.join("ta")
    }

    fn dm_dir(&self) -> PathBuf {
        self.root.join("dm")
    }

    fn staging_dir(&self) -> PathBuf {
        self.dm_dir().join("staging")
    }

    fn ready_dir(&self) -> PathBuf {
        self.dm_dir().join("ready")
    }

    fn outbox_dir(&self) -> PathBuf {
        self.dm_dir().join("outbox")
    }

    fn owners_dir(&self) -> PathBuf {
        self.root.join("owners")
    }

    fn users_dir(&self) -> PathBuf {
        self.root.join("users")
    }

    pub fn csp_dir(&self) -> PathBuf {
        self.root.join("csp")
    }

    pub fn public_params_path(&self) -> PathBuf {
        self.ta_dir().join("public_params.vdsm")
    }

    pub fn master_key_path(&self) -> PathBuf {
        self.ta_dir().join("master_key.vdsm")
    }

    pub fn manager_state_path(&self) -> PathBuf {
        self.dm_dir().join("manager_state.vdsm")
    }

    pub fn staged_path(&self, file_id: &str) -> PathBuf {
        self.staging_dir().join(format!("{file_id}.vdsm"))
    }

    pub fn ready_path(&self, file_id: &str) -> PathBuf {
        self.ready_dir().join(format!("{file_id}.vdsm"))
    }

    pub fn outbox_share_path(&self, file_id: &str, owner: &str) -> PathBuf {
        self.outbox_dir().join(file_id).join(format!("{owner}.vdsm"))
    }

    pub fn owner_dir(&self, owner: &str) -> PathBuf {
        self.owners_dir().join(owner)
    }

    pub fn owner_share_path(&self, owner: &str) -> PathBuf {
        self.owner_dir(owner).join("share.vdsm")
    }

    pub fn user_key_path(&self, user: &str) -> PathBuf {
        self.users_dir().join(user).join("key.vdsm")
    }

    /// Take the workspace mutation lock. Held until the guard drops;
    /// a second mutating invocation fails fast instead of racing.
    pub fn lock(&self) -> Result<LockGuard, CliError> {
        let path = self.root.join(LOCK_FILE);
        let result = fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path);
        match result {
            Ok(mut file) => {
                let _ = write!(file, "{}", std::process::id());
                Ok(LockGuard { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CliError::Usage(format!(
                    "workspace is locked by another invocation ({} exists; \
                     remove it if that invocation is gone)",
                    path.display()
                )))
            }
            Err(e) => Err(io_err(&path, e)),
        }
    }

    pub fn config(&self) -> Result<Config, CliError> {
        let path = self.config_path();
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn save_config(&self, config: &Config) -> Result<(), CliError> {
        let path = self.config_path();
        let text = toml::to_string_pretty(config)
            .expect("config serializes");
        fs::write(&path, text).map_err(|e| io_err(&path, e))
    }

    pub fn read_bytes(&self, path: &Path) -> Result<Vec<u8>, CliError> {
        fs::read(path).map_err(|e| io_err(path, e))
    }

    /// Write an artifact, creating the parent directory as needed.
    pub fn write_bytes(&self, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        fs::write(path, bytes).map_err(|e| io_err(path, e))
    }

    pub fn load_public_params(&self) -> Result<PublicParams, CliError> {
        let path = self.public_params_path();
        wire::decode_public_params(&self.read_bytes(&path)?).map_err(|e| decode_err(&path, e))
    }

    pub fn load_master_key(&self) -> Result<MasterKey, CliError> {
        let path = self.master_key_path();
        wire::decode_master_key(&self.read_bytes(&path)?).map_err(|e| decode_err(&path, e))
    }

    pub fn load_manager_state(&self) -> Result<ManagerState, CliError> {
        let path = self.manager_state_path();
        if !path.exists() {
            return Err(CliError::Usage(
                "no manager key yet (run `vdsdm keygen-manager` first)".to_string(),
            ));
        }
        wire::decode_manager_state(&self.read_bytes(&path)?).map_err(|e| decode_err(&path, e))
    }

    pub fn load_user_key(&self, user: &str) -> Result<UserKey, CliError> {
        let path = self.user_key_path(user);
        if !path.exists() {
            return Err(CliError::Usage(format!("no key issued for user {user:?}")));
        }
        wire::decode_user_key(&self.read_bytes(&path)?).map_err(|e| decode_err(&path, e))
    }

    pub fn load_owner_share(&self, owner: &str) -> Result<OwnerShare, CliError> {
        let path = self.owner_share_path(owner);
        if !path.exists() {
            return Err(CliError::Usage(format!("no share dealt to owner {owner:?}")));
        }
        wire::decode_owner_share(&self.read_bytes(&path)?).map_err(|e| decode_err(&path, e))
    }

    pub fn load_staged(&self, file_id: &str) -> Result<StagedCiphertext, CliError> {
        let path = self.staged_path(file_id);
        if !path.exists() {
            return Err(CliError::Usage(format!(
                "no staged ciphertext for {file_id:?} (run `vdsdm encrypt` first)"
            )));
        }
        wire::decode_staged_ciphertext(&self.read_bytes(&path)?).map_err(|e| decode_err(&path, e))
    }

    pub fn load_ready(&self, file_id: &str) -> Result<SharedCiphertext, CliError> {
        let path = self.ready_path(file_id);
        if !path.exists() {
            return Err(CliError::Usage(format!(
                "no aggregated ciphertext for {file_id:?} (run `vdsdm aggregate` first)"
            )));
        }
        wire::decode_shared_ciphertext(&self.read_bytes(&path)?).map_err(|e| decode_err(&path, e))
    }

    pub fn load_outbox_share(&self, file_id: &str, owner: &str) -> Result<SignatureShare, CliError> {
        let path = self.outbox_share_path(file_id, owner);
        if !path.exists() {
            return Err(CliError::Usage(format!(
                "no signature share from {owner:?} for {file_id:?} (run `vdsdm sign` first)"
            )));
        }
        wire::decode_signature_share(&self.read_bytes(&path)?).map_err(|e| decode_err(&path, e))
    }
}

/// Removes the lock file when the command finishes.
pub struct LockGuard {
    path: PathBuf,
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
