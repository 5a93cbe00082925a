//! Five-entity message-passing harness: trusted authority, data
//! manager, data owners, storage provider, and data users exchanging
//! wire-encoded artifacts over a deterministic in-process queue, with
//! the provider's state persisted in a file-backed [`CspStore`].
//!
//! Every exchanged [`Message`] carries its payload as wire bytes —
//! entities communicate only through encodings, never by sharing
//! structs. Payload per kind:
//!
//! | kind              | payload                                        |
//! |-------------------|------------------------------------------------|
//! | IssueUserKey      | UserKey artifact                               |
//! | DistributeShare   | OwnerShare artifact                            |
//! | RequestSignature  | StagedCiphertext artifact                      |
//! | SubmitSignature   | multipart: file id, SignatureShare artifact    |
//! | UploadCiphertext  | SharedCiphertext artifact                      |
//! | SearchRequest     | file id (UTF-8)                                |
//! | SearchResult      | multipart: StoreManifest, SharedCiphertext     |
//! | PushUpdateKey     | UpdateKey artifact                             |
//! | Ack / Error       | human-readable note (UTF-8)                    |
//!
//! Multipart payloads are framed as a big-endian `u32` part count
//! followed by, per part, a `u32` length and the bytes.
//!
//! [`run_scenario`] executes a parsed [`ScenarioScript`]: each event
//! triggers a message cascade that drains to completion before the
//! next event, the store invariant is re-checked from disk after
//! every event, and the returned [`Transcript`] records all messages
//! and per-event outcomes. Delivery order is deterministic, so a
//! seeded run reproduces its transcript exactly.
//!
//! The storage provider can be made semi-honest: a `tamper` event
//! arms a per-file fault that corrupts one payload byte in every
//! subsequent search *response* for that file. The durable entry is
//! untouched — modeling a provider that returns incorrect results —
//! so the store invariant keeps holding while users' verification
//! fails.

pub mod script;
pub mod store;

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::path::Path;

use ark_std::rand::{CryptoRng, RngCore};
use thiserror::Error;

use crate::scheme::{
    encrypt, keygen_dm, keygen_du, setup, sign_share, update_owners, CtMeta, ManagerState,
    MasterKey, OwnerShare, PublicParams, SchemeError, SignatureShare, StagedCiphertext, UserKey,
};
use crate::groupmath::PairingSuite;
use crate::wire::{
    decode_owner_share, decode_shared_ciphertext, decode_signature_share,
    decode_staged_ciphertext, decode_store_manifest, decode_update_key, decode_user_key,
    encode_owner_share, encode_shared_ciphertext, encode_signature_share,
    encode_staged_ciphertext, encode_store_manifest, encode_update_key, encode_user_key,
    WireError,
};

pub use script::{parse_scenario, Expectation, ScenarioScript, ScriptError, ScriptEvent};
pub use store::{CspStore, StoreError};

/// Who a message is from or to.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EntityId {
    Ta,
    Dm,
    Csp,
    Owner(String),
    User(String),
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityId::Ta => write!(f, "TA"),
            EntityId::Dm => write!(f, "DM"),
            EntityId::Csp => write!(f, "CSP"),
            EntityId::Owner(n) => write!(f, "owner:{n}"),
            EntityId::User(n) => write!(f, "user:{n}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MessageKind {
    IssueUserKey,
    DistributeShare,
    RequestSignature,
    SubmitSignature,
    UploadCiphertext,
    SearchRequest,
    SearchResult,
    PushUpdateKey,
    Ack,
    Error,
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            MessageKind::IssueUserKey => "issue-user-key",
            MessageKind::DistributeShare => "distribute-share",
            MessageKind::RequestSignature => "request-signature",
            MessageKind::SubmitSignature => "submit-signature",
            MessageKind::UploadCiphertext => "upload-ciphertext",
            MessageKind::SearchRequest => "search-request",
            MessageKind::SearchResult => "search-result",
            MessageKind::PushUpdateKey => "push-update-key",
            MessageKind::Ack => "ack",
            MessageKind::Error => "error",
        };
        f.write_str(name)
    }
}

/// One delivered message. `seq` is a global, gap-free counter.
#[derive(Clone, Debug, PartialEq)]
pub struct Message {
    pub seq: u64,
    pub kind: MessageKind,
    pub from: EntityId,
    pub to: EntityId,
    pub payload: Vec<u8>,
}

fn pack_parts(parts: &[&[u8]]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(parts.len() as u32).to_be_bytes());
    for part in parts {
        out.extend_from_slice(&(part.len() as u32).to_be_bytes());
        out.extend_from_slice(part);
    }
    out
}

fn unpack_parts(bytes: &[u8], want: usize) -> Result<Vec<Vec<u8>>, ProtocolError> {
    let mut rest = bytes;
    let u32_field = |rest: &mut &[u8]| -> Result<usize, ProtocolError> {
        if rest.len() < 4 {
            return Err(ProtocolError::Flow("truncated multipart payload".into()));
        }
        let (head, tail) = rest.split_at(4);
        *rest = tail;
        Ok(u32::from_be_bytes(head.try_into().unwrap()) as usize)
    };
    let count = u32_field(&mut rest)?;
    if count != want {
        return Err(ProtocolError::Flow(format!(
            "multipart payload has {count} parts, expected {want}"
        )));
    }
    let mut parts = Vec::with_capacity(want);
    for _ in 0..count {
        let len = u32_field(&mut rest)?;
        if rest.len() < len {
            return Err(ProtocolError::Flow("truncated multipart payload".into()));
        }
        let (head, tail) = rest.split_at(len);
        parts.push(head.to_vec());
        rest = tail;
    }
    if !rest.is_empty() {
        return Err(ProtocolError::Flow("trailing multipart bytes".into()));
    }
    Ok(parts)
}

/// What an event amounted to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    KeyIssued,
    Stored,
    DecryptOk,
    AccessDenied,
    VerifyFailed,
    NotFound,
    RosterChanged { size: usize },
    FaultArmed,
}

impl Outcome {
    fn meets(&self, expect: Expectation) -> bool {
        matches!(
            (self, expect),
            (Outcome::DecryptOk, Expectation::Ok)
                | (Outcome::AccessDenied, Expectation::Denied)
                | (Outcome::VerifyFailed, Expectation::VerifyFail)
                | (Outcome::NotFound, Expectation::NotFound)
        )
    }

    fn label(&self) -> String {
        match self {
            Outcome::KeyIssued => "key issued".into(),
            Outcome::Stored => "stored".into(),
            Outcome::DecryptOk => "decrypt ok".into(),
            Outcome::AccessDenied => "access denied".into(),
            Outcome::VerifyFailed => "verify failed".into(),
            Outcome::NotFound => "not found".into(),
            Outcome::RosterChanged { size } => format!("roster changed ({size} owners)"),
            Outcome::FaultArmed => "fault armed".into(),
        }
    }
}

/// Per-event transcript entry.
#[derive(Clone, Debug, PartialEq)]
pub struct EventRecord {
    /// The script line that caused this event, verbatim.
    pub line: String,
    /// First and last message seq produced by the event, if any.
    pub seq_range: Option<(u64, u64)>,
    pub outcome: Outcome,
    /// Whether the user-side handler reached the decryption step.
    pub decrypt_attempted: bool,
    /// Store invariant re-checked from disk after the event.
    pub store_ok: bool,
    /// Outcome compared against the line's `expect=` clause, if any.
    pub expectation_met: Option<bool>,
}

/// Full record of a scenario run.
#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    pub messages: Vec<Message>,
    pub events: Vec<EventRecord>,
}

impl Transcript {
    pub fn all_expectations_met(&self) -> bool {
        self.events
            .iter()
            .all(|e| e.expectation_met.unwrap_or(true))
    }

    pub fn all_stores_ok(&self) -> bool {
        self.events.iter().all(|e| e.store_ok)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("== events ==\n");
        for (i, ev) in self.events.iter().enumerate() {
            let seqs = match ev.seq_range {
                Some((a, b)) => format!("seq {a}-{b}"),
                None => "no messages".into(),
            };
            let expect = match ev.expectation_met {
                Some(true) => "  [as expected]",
                Some(false) => "  [EXPECTATION FAILED]",
                None => "",
            };
            let store = if ev.store_ok { "" } else { "  [STORE BROKEN]" };
            out.push_str(&format!(
                "{:3}. {:<55} -> {} ({seqs}){expect}{store}\n",
                i + 1,
                ev.line,
                ev.outcome.label(),
            ));
        }
        out.push_str("== messages ==\n");
        for m in &self.messages {
            out.push_str(&format!(
                "  #{:<4} {:>9} -> {:<9} {:<18} ({} bytes)\n",
                m.seq,
                m.from.to_string(),
                m.to.to_string(),
                m.kind.to_string(),
                m.payload.len()
            ));
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    /// An internal consistency violation — a handler received a
    /// message it cannot be holding in a validated run.
    #[error("protocol flow error: {0}")]
    Flow(String),
}

struct PendingUpload {
    staged: StagedCiphertext,
    got: BTreeMap<String, SignatureShare>,
}

struct System<'a, R: RngCore + CryptoRng> {
    pk: PublicParams,
    msk: MasterKey,
    manager: ManagerState,
    owner_shares: BTreeMap<String, OwnerShare>,
    user_keys: BTreeMap<String, UserKey>,
    store: CspStore,
    faults: BTreeMap<String, usize>,
    plaintexts: BTreeMap<String, Vec<u8>>,
    pending: BTreeMap<String, PendingUpload>,
    queue: VecDeque<Message>,
    messages: Vec<Message>,
    seq: u64,
    last_search: Option<(Outcome, bool)>,
    rng: &'a mut R,
}

/// Execute a validated script against a fresh store rooted at
/// `store_root`, returning the full transcript. Deterministic for a
/// deterministic `rng`.
pub fn run_scenario<R: RngCore + CryptoRng>(
    script: &ScenarioScript,
    store_root: &Path,
    rng: &mut R,
) -> Result<Transcript, ProtocolError> {
    let suite = PairingSuite::new();
    let (pk, msk) = setup(suite, &script.universe, rng)?;
    let manager = keygen_dm(&pk, &script.owners, rng)?;
    let store = CspStore::create(store_root, manager.pk_m, manager.epoch)?;

    let mut sys = System {
        pk,
        msk,
        manager,
        owner_shares: BTreeMap::new(),
        user_keys: BTreeMap::new(),
        store,
        faults: BTreeMap::new(),
        plaintexts: BTreeMap::new(),
        pending: BTreeMap::new(),
        queue: VecDeque::new(),
        messages: Vec::new(),
        seq: 0,
        last_search: None,
        rng,
    };

    // Initial share dealing is part of the protocol, not setup: the
    // manager messages every owner before the first event.
    for owner in sys.manager.owners.clone() {
        let share = OwnerShare {
            owner: owner.clone(),
            point: sys.manager.shares[&owner].clone(),
        };
        sys.send(
            MessageKind::DistributeShare,
            EntityId::Dm,
            EntityId::Owner(owner),
            encode_owner_share(&share),
        );
    }
    sys.drain()?;

    let mut events = Vec::new();
    for line in &script.lines {
        let first_seq = sys.seq + 1;
        let (outcome, decrypt_attempted, expect) = sys.run_event(&line.event)?;
        let seq_range = if sys.seq >= first_seq {
            Some((first_seq, sys.seq))
        } else {
            None
        };
        let store_ok = sys.store.verify_all(&sys.pk)?;
        events.push(EventRecord {
            line: line.raw.clone(),
            seq_range,
            expectation_met: expect.map(|e| outcome.meets(e)),
            outcome,
            decrypt_attempted,
            store_ok,
        });
    }

    Ok(Transcript {
        messages: sys.messages,
        events,
    })
}

impl<R: RngCore + CryptoRng> System<'_, R> {
    fn send(&mut self, kind: MessageKind, from: EntityId, to: EntityId, payload: Vec<u8>) {
        self.seq += 1;
        let msg = Message {
            seq: self.seq,
            kind,
            from,
            to,
            payload,
        };
        self.messages.push(msg.clone());
        self.queue.push_back(msg);
    }

    fn drain(&mut self) -> Result<(), ProtocolError> {
        while let Some(msg) = self.queue.pop_front() {
            self.deliver(&msg)?;
        }
        Ok(())
    }

    fn run_event(
        &mut self,
        event: &ScriptEvent,
    ) -> Result<(Outcome, bool, Option<Expectation>), ProtocolError> {
        match event {
            ScriptEvent::DeclareUser { name, attrs } => {
                let key = keygen_du(&self.pk, &self.msk, attrs, self.rng)?;
                self.send(
                    MessageKind::IssueUserKey,
                    EntityId::Ta,
                    EntityId::User(name.clone()),
                    encode_user_key(&key),
                );
                self.drain()?;
                Ok((Outcome::KeyIssued, false, None))
            }
            ScriptEvent::AddFile {
                id,
                policy,
                content,
            } => {
                let file = content
                    .clone()
                    .unwrap_or_else(|| format!("contents of {id}").into_bytes());
                let staged = encrypt(
                    &self.pk,
                    policy,
                    &file,
                    CtMeta {
                        file_id: id.clone(),
                        epoch: self.manager.epoch,
                    },
                    self.rng,
                )?;
                self.plaintexts.insert(id.clone(), file);
                self.pending.insert(
                    id.clone(),
                    PendingUpload {
                        staged: staged.clone(),
                        got: BTreeMap::new(),
                    },
                );
                let bytes = encode_staged_ciphertext(&staged);
                for owner in self.manager.owners.clone() {
                    self.send(
                        MessageKind::RequestSignature,
                        EntityId::Dm,
                        EntityId::Owner(owner),
                        bytes.clone(),
                    );
                }
                self.drain()?;
                if !self.store.ids().contains(id) {
                    return Err(ProtocolError::Flow(format!(
                        "file {id:?} missing from store after upload"
                    )));
                }
                Ok((Outcome::Stored, false, None))
            }
            ScriptEvent::UserSearch { user, id, expect } => {
                self.last_search = None;
                self.send(
                    MessageKind::SearchRequest,
                    EntityId::User(user.clone()),
                    EntityId::Csp,
                    id.as_bytes().to_vec(),
                );
                self.drain()?;
                let (outcome, attempted) = self.last_search.take().ok_or_else(|| {
                    ProtocolError::Flow("search produced no outcome".into())
                })?;
                Ok((outcome, attempted, *expect))
            }
            ScriptEvent::OwnerJoin(name) => self.churn(&[name.clone()], &[]),
            ScriptEvent::OwnerLeave(name) => self.churn(&[], &[name.clone()]),
            ScriptEvent::Tamper { id, index } => {
                self.faults.insert(id.clone(), *index);
                Ok((Outcome::FaultArmed, false, None))
            }
        }
    }

    /// Owner churn: re-deal shares, push the update key to the store.
    /// Third-party-free by construction — only DM, owners, and CSP
    /// exchange messages here.
    fn churn(
        &mut self,
        joins: &[String],
        leaves: &[String],
    ) -> Result<(Outcome, bool, Option<Expectation>), ProtocolError> {
        let (next, upk) = update_owners(&self.pk, &self.manager, joins, leaves, self.rng)?;
        self.manager = next;
        for left in leaves {
            self.owner_shares.remove(left);
        }
        for owner in self.manager.owners.clone() {
            let share = OwnerShare {
                owner: owner.clone(),
                point: self.manager.shares[&owner].clone(),
            };
            self.send(
                MessageKind::DistributeShare,
                EntityId::Dm,
                EntityId::Owner(owner),
                encode_owner_share(&share),
            );
        }
        self.send(
            MessageKind::PushUpdateKey,
            EntityId::Dm,
            EntityId::Csp,
            encode_update_key(&upk),
        );
        self.drain()?;
        Ok((
            Outcome::RosterChanged {
                size: self.manager.owners.len(),
            },
            false,
            None,
        ))
    }

    fn deliver(&mut self, msg: &Message) -> Result<(), ProtocolError> {
        match (&msg.to, msg.kind) {
            (EntityId::Owner(name), MessageKind::DistributeShare) => {
                let share = decode_owner_share(&msg.payload)?;
                if share.owner != *name {
                    return Err(ProtocolError::Flow(format!(
                        "share for {:?} delivered to {name:?}",
                        share.owner
                    )));
                }
                self.owner_shares.insert(name.clone(), share);
                self.send(
                    MessageKind::Ack,
                    EntityId::Owner(name.clone()),
                    EntityId::Dm,
                    b"share received".to_vec(),
                );
                Ok(())
            }
            (EntityId::Owner(name), MessageKind::RequestSignature) => {
                let staged = decode_staged_ciphertext(&msg.payload)?;
                let share = self.owner_shares.get(name).ok_or_else(|| {
                    ProtocolError::Flow(format!("owner {name:?} holds no share"))
                })?;
                let sig = sign_share(&self.pk, &staged.c_f, name, &share.point);
                self.send(
                    MessageKind::SubmitSignature,
                    EntityId::Owner(name.clone()),
                    EntityId::Dm,
                    pack_parts(&[
                        staged.meta.file_id.as_bytes(),
                        &encode_signature_share(&sig),
                    ]),
                );
                Ok(())
            }
            (EntityId::Dm, MessageKind::SubmitSignature) => {
                let parts = unpack_parts(&msg.payload, 2)?;
                let id = String::from_utf8(parts[0].clone())
                    .map_err(|_| ProtocolError::Flow("file id is not UTF-8".into()))?;
                let share = decode_signature_share(&parts[1])?;
                let pending = self.pending.get_mut(&id).ok_or_else(|| {
                    ProtocolError::Flow(format!("signature for unknown upload {id:?}"))
                })?;
                pending.got.insert(share.owner.clone(), share);
                if pending.got.len() == self.manager.owners.len() {
                    let pending = self.pending.remove(&id).expect("present");
                    let shares: Vec<SignatureShare> = pending.got.into_values().collect();
                    let sigma = self.manager.aggregate(&self.pk, &shares)?;
                    let ct = pending.staged.with_signature(sigma);
                    self.send(
                        MessageKind::UploadCiphertext,
                        EntityId::Dm,
                        EntityId::Csp,
                        encode_shared_ciphertext(&ct),
                    );
                }
                Ok(())
            }
            (EntityId::Csp, MessageKind::UploadCiphertext) => {
                let ct = decode_shared_ciphertext(&msg.payload)?;
                let id = ct.meta.file_id.clone();
                self.store.store(&self.pk, &ct)?;
                self.send(
                    MessageKind::Ack,
                    EntityId::Csp,
                    EntityId::Dm,
                    format!("stored {id}").into_bytes(),
                );
                Ok(())
            }
            (EntityId::Csp, MessageKind::SearchRequest) => {
                let id = String::from_utf8(msg.payload.clone())
                    .map_err(|_| ProtocolError::Flow("search id is not UTF-8".into()))?;
                if !self.store.ids().contains(&id) {
                    self.send(
                        MessageKind::Error,
                        EntityId::Csp,
                        msg.from.clone(),
                        format!("no entry {id}").into_bytes(),
                    );
                    return Ok(());
                }
                let mut ct = self.store.fetch(&id)?;
                if let Some(&index) = self.faults.get(&id) {
                    // Semi-honest response: corrupt one payload byte
                    // on the way out, never on disk.
                    let at = index % ct.c_f.len();
                    ct.c_f[at] ^= 0x01;
                }
                let manifest = encode_store_manifest(self.store.manifest());
                let body = encode_shared_ciphertext(&ct);
                self.send(
                    MessageKind::SearchResult,
                    EntityId::Csp,
                    msg.from.clone(),
                    pack_parts(&[&manifest, &body]),
                );
                Ok(())
            }
            (EntityId::Csp, MessageKind::PushUpdateKey) => {
                let upk = decode_update_key(&msg.payload)?;
                self.store.apply_update(&self.pk, &upk)?;
                self.send(
                    MessageKind::Ack,
                    EntityId::Csp,
                    EntityId::Dm,
                    format!("updated to epoch {}", upk.epoch).into_bytes(),
                );
                Ok(())
            }
            (EntityId::User(name), MessageKind::IssueUserKey) => {
                let key = decode_user_key(&msg.payload)?;
                self.user_keys.insert(name.clone(), key);
                self.send(
                    MessageKind::Ack,
                    EntityId::User(name.clone()),
                    EntityId::Ta,
                    b"key received".to_vec(),
                );
                Ok(())
            }
            (EntityId::User(name), MessageKind::SearchResult) => {
                let parts = unpack_parts(&msg.payload, 2)?;
                let manifest = decode_store_manifest(&parts[0])?;
                let ct = decode_shared_ciphertext(&parts[1])?;
                let key = self.user_keys.get(name).ok_or_else(|| {
                    ProtocolError::Flow(format!("user {name:?} holds no key"))
                })?;
                if !crate::scheme::verify(&self.pk, &ct, &manifest.pk_m) {
                    // Integrity check failed: stop before decryption.
                    self.last_search = Some((Outcome::VerifyFailed, false));
                    return Ok(());
                }
                match crate::scheme::decrypt(&self.pk, &ct, key) {
                    Ok(file) => {
                        let expected = self.plaintexts.get(&ct.meta.file_id);
                        if expected != Some(&file) {
                            return Err(ProtocolError::Flow(format!(
                                "decrypted {} to unexpected plaintext",
                                ct.meta.file_id
                            )));
                        }
                        self.last_search = Some((Outcome::DecryptOk, true));
                    }
                    Err(SchemeError::AccessDenied) => {
                        self.last_search = Some((Outcome::AccessDenied, true));
                    }
                    Err(e) => return Err(e.into()),
                }
                Ok(())
            }
            (EntityId::User(_), MessageKind::Error) => {
                self.last_search = Some((Outcome::NotFound, false));
                Ok(())
            }
            (_, MessageKind::Ack) => Ok(()),
            (to, kind) => Err(ProtocolError::Flow(format!(
                "unroutable message {kind} for {to}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests;
