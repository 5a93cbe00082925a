//! `vdsdm` — operator tool driving the full data-sharing lifecycle
//! against an on-disk workspace.
//!
//! The happy path, start to finish:
//!
//! ```text
//! vdsdm setup --attrs dept_eng,clearance_high --owners alice,bob
//! vdsdm keygen-manager
//! vdsdm keygen-user --user carol --attrs dept_eng
//! vdsdm encrypt --file-id report --policy "dept_eng" --in report.pdf
//! vdsdm sign --file-id report --owner alice
//! vdsdm sign --file-id report --owner bob
//! vdsdm aggregate --file-id report
//! vdsdm upload --file-id report
//! vdsdm verify --file-id report
//! vdsdm decrypt --file-id report --user carol --out report.out.pdf
//! ```
//!
//! Exit codes: 0 success, 1 verification failure or access denial
//! (messages prefixed `VERIFY FAILED` / `ACCESS DENIED`), 2 usage,
//! decoding, or I/O problems. Reads (`fetch`, `verify`, `decrypt`)
//! never change the store; mutating commands take the workspace lock
//! for their duration. Pass `--seed` to make any command's
//! randomness reproducible.

mod workspace;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use vdsdm::bench::{self, BenchAlgo, BenchError, SweepSpec};
use vdsdm::groupmath::PairingSuite;
use vdsdm::policy::parse_policy;
use vdsdm::protocol::{parse_scenario, run_scenario, CspStore, StoreError};
use vdsdm::scheme::{self, CtMeta, OwnerShare, SchemeError};
use vdsdm::wire;

use workspace::{check_name, CliError, Config, Workspace};

#[derive(Parser)]
#[command(
    name = "vdsdm",
    version,
    about = "Attribute-based data sharing with owner-group signatures",
    propagate_version = true
)]
struct Cli {
    /// Workspace directory.
    #[arg(long, global = true, default_value = ".")]
    dir: PathBuf,

    /// Seed for all randomness (omit for fresh entropy).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a workspace: attribute universe, owner roster, system keys.
    Setup {
        /// Attribute universe, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        attrs: Vec<String>,
        /// Owner roster, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        owners: Vec<String>,
    },
    /// Issue an attribute key to a user.
    KeygenUser {
        #[arg(long)]
        user: String,
        /// Attributes the key embeds, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        attrs: Vec<String>,
    },
    /// Deal the owner-group signing key and initialize the store.
    KeygenManager,
    /// Encrypt a file under a policy; the result awaits owner signatures.
    Encrypt {
        #[arg(long = "file-id")]
        file_id: String,
        /// Access policy, e.g. "a AND (b OR c)" or "2 OF (a, b, c)".
        #[arg(long)]
        policy: String,
        /// Plaintext file to encrypt.
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Produce one owner's signature share over a staged ciphertext.
    Sign {
        #[arg(long = "file-id")]
        file_id: String,
        #[arg(long)]
        owner: String,
    },
    /// Combine every owner's share into the aggregate signature.
    Aggregate {
        #[arg(long = "file-id")]
        file_id: String,
    },
    /// Submit an aggregated ciphertext to the store.
    Upload {
        #[arg(long = "file-id")]
        file_id: String,
    },
    /// Copy a stored ciphertext out of the store, unmodified.
    Fetch {
        #[arg(long = "file-id")]
        file_id: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check stored signatures against the manager key (all files
    /// when no --file-id is given).
    Verify {
        #[arg(long = "file-id")]
        file_id: Option<String>,
    },
    /// Verify a stored ciphertext, then decrypt it with a user key.
    Decrypt {
        #[arg(long = "file-id")]
        file_id: String,
        #[arg(long)]
        user: String,
        /// Where to write the recovered plaintext.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-key the owner roster and refresh every stored signature.
    UpdateOwners {
        /// Owners to add, comma-separated.
        #[arg(long, value_delimiter = ',')]
        join: Vec<String>,
        /// Owners to remove, comma-separated.
        #[arg(long, value_delimiter = ',')]
        leave: Vec<String>,
    },
    /// Replay a scenario script against a scratch deployment.
    Scenario {
        /// Script file to run.
        #[arg(long)]
        script: PathBuf,
        /// Store directory for the run (a temporary one by default).
        #[arg(long = "store-dir")]
        store_dir: Option<PathBuf>,
    },
    /// Sweep one algorithm over a parameter grid, emitting CSV.
    Bench {
        /// Algorithm: setup, keygen-du, keygen-dm, encrypt, sign,
        /// aggregate, verify, decrypt, or update.
        #[arg(long)]
        algo: String,
        /// Swept parameter; must match the algorithm's (informational).
        #[arg(long)]
        param: Option<String>,
        #[arg(long, default_value_t = 10)]
        min: usize,
        #[arg(long, default_value_t = 100)]
        max: usize,
        #[arg(long, default_value_t = 10)]
        step: usize,
        /// Measurements per grid value.
        #[arg(long, default_value_t = 1)]
        reps: usize,
        /// CSV output path (standard output when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            if e.self_prefixed() {
                eprintln!("{e}");
            } else {
                eprintln!("error: {e}");
            }
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let mut rng = match cli.seed {
        Some(seed) => ChaCha20Rng::seed_from_u64(seed),
        None => ChaCha20Rng::from_entropy(),
    };
    let dir = cli.dir;
    match cli.command {
        Command::Setup { attrs, owners } => cmd_setup(&dir, &attrs, &owners, &mut rng),
        Command::KeygenUser { user, attrs } => cmd_keygen_user(&dir, &user, &attrs, &mut rng),
        Command::KeygenManager => cmd_keygen_manager(&dir, &mut rng),
        Command::Encrypt { file_id, policy, input } => {
            cmd_encrypt(&dir, &file_id, &policy, &input, &mut rng)
        }
        Command::Sign { file_id, owner } => cmd_sign(&dir, &file_id, &owner),
        Command::Aggregate { file_id } => cmd_aggregate(&dir, &file_id),
        Command::Upload { file_id } => cmd_upload(&dir, &file_id),
        Command::Fetch { file_id, out } => cmd_fetch(&dir, &file_id, &out),
        Command::Verify { file_id } => cmd_verify(&dir, file_id.as_deref()),
        Command::Decrypt { file_id, user, out } => cmd_decrypt(&dir, &file_id, &user, &out),
        Command::UpdateOwners { join, leave } => cmd_update_owners(&dir, &join, &leave, &mut rng),
        Command::Scenario { script, store_dir } => {
            cmd_scenario(&script, store_dir.as_deref(), &mut rng)
        }
        Command::Bench { algo, param, min, max, step, reps, out } => {
            cmd_bench(&algo, param.as_deref(), min, max, step, reps, out.as_deref(), &mut rng)
        }
    }
}

fn report_write(ws: &Workspace, path: &Path, len: usize) {
    println!("wrote {} ({len} bytes)", ws.rel(path));
}

fn cmd_setup(
    dir: &Path,
    attrs: &[String],
    owners: &[String],
    rng: &mut ChaCha20Rng,
) -> Result<i32, CliError> {
    for a in attrs {
        check_name("attribute", a)?;
    }
    let mut seen = BTreeSet::new();
    for o in owners {
        check_name("owner", o)?;
        if !seen.insert(o) {
            return Err(CliError::Usage(format!("duplicate owner {o:?}")));
        }
    }
    let config = Config { universe: attrs.to_vec(), owners: owners.to_vec() };
    let ws = Workspace::init(dir, &config)?;
    let _lock = ws.lock()?;
    let (pk, msk) = scheme::setup(PairingSuite::new(), attrs, rng)?;
    let pk_bytes = wire::encode_public_params(&pk);
    let msk_bytes = wire::encode_master_key(&msk);
    ws.write_bytes(&ws.public_params_path(), &pk_bytes)?;
    ws.write_bytes(&ws.master_key_path(), &msk_bytes)?;
    println!(
        "initialized workspace at {} ({} attributes, {} owners)",
        ws.root().display(),
        attrs.len(),
        owners.len()
    );
    report_write(&ws, &ws.public_params_path(), pk_bytes.len());
    report_write(&ws, &ws.master_key_path(), msk_bytes.len());
    Ok(0)
}

fn cmd_keygen_manager(dir: &Path, rng: &mut ChaCha20Rng) -> Result<i32, CliError> {
    let ws = Workspace::open(dir)?;
    let _lock = ws.lock()?;
    if ws.manager_state_path().exists() {
        return Err(CliError::Usage(
            "manager key already dealt (use `vdsdm update-owners` to re-key)".to_string(),
        ));
    }
    let config = ws.config()?;
    let pk = ws.load_public_params()?;
    let state = scheme::keygen_dm(&pk, &config.owners, rng)?;
    let state_bytes = wire::encode_manager_state(&state);
    ws.write_bytes(&ws.manager_state_path(), &state_bytes)?;
    for owner in &state.owners {
        let share = OwnerShare {
            owner: owner.clone(),
            point: state.share_of(owner).expect("dealt share").clone(),
        };
        let bytes = wire::encode_owner_share(&share);
        ws.write_bytes(&ws.owner_share_path(owner), &bytes)?;
    }
    CspStore::create(&ws.csp_dir(), state.pk_m, state.epoch)?;
    println!(
        "dealt signing shares to {} owners; store initialized at epoch {}",
        state.owners.len(),
        state.epoch
    );
    report_write(&ws, &ws.manager_state_path(), state_bytes.len());
    Ok(0)
}

fn cmd_keygen_user(
    dir: &Path,
    user: &str,
    attrs: &[String],
    rng: &mut ChaCha20Rng,
) -> Result<i32, CliError> {
    check_name("user", user)?;
    for a in attrs {
        check_name("attribute", a)?;
    }
    let ws = Workspace::open(dir)?;
    let _lock = ws.lock()?;
    let key_path = ws.user_key_path(user);
    if key_path.exists() {
        return Err(CliError::Usage(format!(
            "user {user:?} already has a key ({})",
            ws.rel(&key_path)
        )));
    }
    let pk = ws.load_public_params()?;
    let msk = ws.load_master_key()?;
    let attr_set: BTreeSet<String> = attrs.iter().cloned().collect();
    let key = scheme::keygen_du(&pk, &msk, &attr_set, rng)?;
    let bytes = wire::encode_user_key(&key);
    ws.write_bytes(&key_path, &bytes)?;
    println!("issued key to {user} for {} attributes", attr_set.len());
    report_write(&ws, &key_path, bytes.len());
    Ok(0)
}

fn cmd_encrypt(
    dir: &Path,
    file_id: &str,
    policy_text: &str,
    input: &Path,
    rng: &mut ChaCha20Rng,
) -> Result<i32, CliError> {
    check_name("file id", file_id)?;
    let ws = Workspace::open(dir)?;
    let _lock = ws.lock()?;
    let staged_path = ws.staged_path(file_id);
    if staged_path.exists() {
        return Err(CliError::Usage(format!(
            "{file_id:?} is already staged ({})",
            ws.rel(&staged_path)
        )));
    }
    let policy = parse_policy(policy_text)?;
    let pk = ws.load_public_params()?;
    let manager = ws.load_manager_state()?;
    let file = ws.read_bytes(input)?;
    let meta = CtMeta { file_id: file_id.to_string(), epoch: manager.epoch };
    let staged = scheme::encrypt(&pk, &policy, &file, meta, rng)?;
    let rows = staged.kem.lsss.rows();
    let bytes = wire::encode_staged_ciphertext(&staged);
    ws.write_bytes(&staged_path, &bytes)?;
    println!(
        "staged {file_id} under policy {policy_text:?} ({rows} policy rows, epoch {})",
        manager.epoch
    );
    report_write(&ws, &staged_path, bytes.len());
    Ok(0)
}

fn cmd_sign(dir: &Path, file_id: &str, owner: &str) -> Result<i32, CliError> {
    check_name("file id", file_id)?;
    check_name("owner", owner)?;
    let ws = Workspace::open(dir)?;
    let _lock = ws.lock()?;
    let pk = ws.load_public_params()?;
    let staged = ws.load_staged(file_id)?;
    let share = ws.load_owner_share(owner)?;
    if share.owner != owner {
        return Err(CliError::Usage(format!(
            "share file for {owner:?} names {:?}",
            share.owner
        )));
    }
    let sig = scheme::sign_share(&pk, &staged.c_f, owner, &share.point);
    let bytes = wire::encode_signature_share(&sig);
    let path = ws.outbox_share_path(file_id, owner);
    ws.write_bytes(&path, &bytes)?;
    println!("{owner} signed {file_id}");
    report_write(&ws, &path, bytes.len());
    Ok(0)
}

fn cmd_aggregate(dir: &Path, file_id: &str) -> Result<i32, CliError> {
    check_name("file id", file_id)?;
    let ws = Workspace::open(dir)?;
    let _lock = ws.lock()?;
    let pk = ws.load_public_params()?;
    let staged = ws.load_staged(file_id)?;
    let manager = ws.load_manager_state()?;
    let shares: Vec<_> = manager
        .owners
        .iter()
        .map(|o| ws.load_outbox_share(file_id, o))
        .collect::<Result<_, _>>()?;
    let sigma = manager.aggregate(&pk, &shares)?;
    let shared = staged.with_signature(sigma);
    if !scheme::verify(&pk, &shared, &manager.pk_m) {
        return Err(CliError::Verify(format!(
            "aggregated signature for {file_id:?} failed its self-check"
        )));
    }
    let bytes = wire::encode_shared_ciphertext(&shared);
    let path = ws.ready_path(file_id);
    ws.write_bytes(&path, &bytes)?;
    println!(
        "aggregated {} signature shares for {file_id}",
        shares.len()
    );
    report_write(&ws, &path, bytes.len());
    Ok(0)
}

fn cmd_upload(dir: &Path, file_id: &str) -> Result<i32, CliError> {
    check_name("file id", file_id)?;
    let ws = Workspace::open(dir)?;
    let _lock = ws.lock()?;
    let pk = ws.load_public_params()?;
    let ct = ws.load_ready(file_id)?;
    let mut store = CspStore::open(&ws.csp_dir())?;
    store.store(&pk, &ct).map_err(|e| match e {
        StoreError::BadSignature(id) => CliError::Verify(format!(
            "store rejected {id:?}: aggregate signature does not verify"
        )),
        other => CliError::Store(other),
    })?;
    println!(
        "uploaded {file_id} (store epoch {}, {} entries)",
        store.manifest().epoch,
        store.ids().len()
    );
    Ok(0)
}

fn cmd_fetch(dir: &Path, file_id: &str, out: &Path) -> Result<i32, CliError> {
    check_name("file id", file_id)?;
    let ws = Workspace::open(dir)?;
    let store = CspStore::open(&ws.csp_dir())?;
    let bytes = store.fetch_bytes(file_id)?;
    ws.write_bytes(out, &bytes)?;
    println!("fetched {file_id} ({} bytes) -> {}", bytes.len(), out.display());
    Ok(0)
}

fn cmd_verify(dir: &Path, file_id: Option<&str>) -> Result<i32, CliError> {
    let ws = Workspace::open(dir)?;
    let pk = ws.load_public_params()?;
    let store = CspStore::open(&ws.csp_dir())?;
    let ids: Vec<String> = match file_id {
        Some(id) => {
            check_name("file id", id)?;
            if !store.ids().contains(&id.to_string()) {
                return Err(CliError::Store(StoreError::NotFound(id.to_string())));
            }
            vec![id.to_string()]
        }
        None => store.ids().to_vec(),
    };
    if ids.is_empty() {
        println!("store is empty; nothing to verify");
        return Ok(0);
    }
    let manifest = store.manifest();
    let mut failures = Vec::new();
    for id in &ids {
        match store.fetch(id) {
            Ok(ct) => {
                let sound = ct.meta.file_id == *id
                    && ct.meta.epoch == manifest.epoch
                    && scheme::verify(&pk, &ct, &manifest.pk_m);
                if sound {
                    println!("VERIFY OK {id}");
                } else {
                    failures.push(format!("{id}: signature check failed"));
                }
            }
            Err(e) => failures.push(format!("{id}: {e}")),
        }
    }
    if failures.is_empty() {
        Ok(0)
    } else {
        Err(CliError::Verify(failures.join("; ")))
    }
}

fn cmd_decrypt(dir: &Path, file_id: &str, user: &str, out: &Path) -> Result<i32, CliError> {
    check_name("file id", file_id)?;
    check_name("user", user)?;
    let ws = Workspace::open(dir)?;
    let pk = ws.load_public_params()?;
    let key = ws.load_user_key(user)?;
    let store = CspStore::open(&ws.csp_dir())?;
    let ct = match store.fetch(file_id) {
        Ok(ct) => ct,
        Err(e @ StoreError::NotFound(_)) => return Err(CliError::Store(e)),
        Err(StoreError::Wire { path, source }) => {
            return Err(CliError::Verify(format!(
                "stored entry is corrupt ({}: {source})",
                path.display()
            )))
        }
        Err(e) => return Err(CliError::Store(e)),
    };
    let manifest = store.manifest();
    let sound = ct.meta.file_id == file_id
        && ct.meta.epoch == manifest.epoch
        && scheme::verify(&pk, &ct, &manifest.pk_m);
    if !sound {
        return Err(CliError::Verify(format!(
            "{file_id}: stored ciphertext does not verify; refusing to decrypt"
        )));
    }
    let file = match scheme::decrypt(&pk, &ct, &key) {
        Ok(file) => file,
        Err(SchemeError::AccessDenied) => {
            return Err(CliError::Denied(format!(
                "key of user {user:?} does not satisfy the policy of {file_id:?}"
            )))
        }
        Err(SchemeError::IntegrityFailure) => {
            return Err(CliError::Verify(format!(
                "{file_id}: payload failed authenticated decryption"
            )))
        }
        Err(e) => return Err(CliError::Scheme(e)),
    };
    ws.write_bytes(out, &file)?;
    println!(
        "decrypted {file_id} ({} bytes) -> {}",
        file.len(),
        out.display()
    );
    Ok(0)
}

fn cmd_update_owners(
    dir: &Path,
    join: &[String],
    leave: &[String],
    rng: &mut ChaCha20Rng,
) -> Result<i32, CliError> {
    for o in join.iter().chain(leave) {
        check_name("owner", o)?;
    }
    let ws = Workspace::open(dir)?;
    let _lock = ws.lock()?;
    let pk = ws.load_public_params()?;
    let state = ws.load_manager_state()?;
    let (next, upk) = scheme::update_owners(&pk, &state, join, leave, rng)?;
    let state_bytes = wire::encode_manager_state(&next);
    ws.write_bytes(&ws.manager_state_path(), &state_bytes)?;
    for gone in leave {
        let dir = ws.owner_dir(gone);
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| CliError::Io { path: dir.clone(), source: e })?;
        }
    }
    for owner in &next.owners {
        let share = OwnerShare {
            owner: owner.clone(),
            point: next.share_of(owner).expect("dealt share").clone(),
        };
        ws.write_bytes(&ws.owner_share_path(owner), &wire::encode_owner_share(&share))?;
    }
    let mut store = CspStore::open(&ws.csp_dir())?;
    store.apply_update(&pk, &upk)?;
    let mut config = ws.config()?;
    config.owners = next.owners.clone();
    ws.save_config(&config)?;
    println!(
        "re-keyed roster to {} owners (epoch {}); refreshed {} stored signatures",
        next.owners.len(),
        next.epoch,
        store.ids().len()
    );
    Ok(0)
}

fn cmd_scenario(
    script_path: &Path,
    store_dir: Option<&Path>,
    rng: &mut ChaCha20Rng,
) -> Result<i32, CliError> {
    let text = fs::read_to_string(script_path)
        .map_err(|e| CliError::Io { path: script_path.to_path_buf(), source: e })?;
    let script = parse_scenario(&text)?;
    let scratch;
    let store_root: &Path = match store_dir {
        Some(dir) => dir,
        None => {
            scratch = tempfile::tempdir()
                .map_err(|e| CliError::Io { path: PathBuf::from("<tempdir>"), source: e })?;
            scratch.path()
        }
    };
    let store_root = store_root.join("store");
    let transcript = run_scenario(&script, &store_root, rng)?;
    print!("{}", transcript.render());
    let stores_ok = transcript.all_stores_ok();
    let expectations_ok = transcript.all_expectations_met();
    if stores_ok && expectations_ok {
        println!(
            "scenario: {} events, {} messages, all expectations met",
            transcript.events.len(),
            transcript.messages.len()
        );
        Ok(0)
    } else {
        if !stores_ok {
            eprintln!("scenario: store invariant violated");
        }
        if !expectations_ok {
            eprintln!("scenario: expectation failures (see transcript)");
        }
        Ok(1)
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    algo: &str,
    param: Option<&str>,
    min: usize,
    max: usize,
    step: usize,
    reps: usize,
    out: Option<&Path>,
    rng: &mut ChaCha20Rng,
) -> Result<i32, CliError> {
    let algo = BenchAlgo::from_name(algo).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown algorithm {algo:?}; one of: {}",
            BenchAlgo::ALL.map(|a| a.name()).join(", ")
        ))
    })?;
    if let Some(p) = param {
        if p != algo.param() {
            return Err(CliError::Usage(format!(
                "{} sweeps {} (got --param {p})",
                algo.name(),
                algo.param()
            )));
        }
    }
    let spec = SweepSpec { algo, min, max, step, reps };
    let rows = bench::bench_sweep(&spec, rng).map_err(|e| match e {
        BenchError::Grid(msg) => CliError::Usage(format!("invalid sweep grid: {msg}")),
        BenchError::Scheme(e) => CliError::Scheme(e),
    })?;
    let csv = bench::to_csv(&rows);
    match out {
        Some(path) => {
            fs::write(path, csv)
                .map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
            println!(
                "wrote {} rows for {} to {}",
                rows.len(),
                algo.name(),
                path.display()
            );
        }
        None => print!("{csv}"),
    }
    Ok(0)
}
