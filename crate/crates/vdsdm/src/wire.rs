//! Canonical, versioned byte encodings for every artifact that is
//! exchanged between entities or persisted to disk.
//!
//! Every encoding is an *envelope*:
//!
//! ```text
//! magic "VDSM" (4 bytes) ‖ version 0x01 (1 byte) ‖ kind (1 byte) ‖ body
//! ```
//!
//! Bodies are built from five primitives, concatenated in a fixed
//! field order per kind:
//!
//! * integers — `u32`/`u64` big-endian, fixed width;
//! * scalars — 32 bytes big-endian, strictly less than the group
//!   order (larger values are rejected, so every scalar has exactly
//!   one encoding);
//! * group elements — canonical compressed points, 48 bytes in G1
//!   and 96 bytes in G2, 576 bytes in the target group; curve and
//!   prime-order-subgroup membership are checked at decode time;
//! * byte strings — `u32` big-endian length prefix, then the bytes;
//!   the prefix is checked against the remaining input *before*
//!   anything is allocated;
//! * attribute/owner tables — length-prefixed count, then entries.
//!   Tables with map semantics (attribute tables, manifest listings)
//!   are encoded sorted and decoders require strictly increasing
//!   keys; rosters keep their semantic order and decoders require
//!   distinct names.
//!
//! Decoding is the exact inverse of encoding and *total*: arbitrary
//! input yields a structured [`WireError`], never a panic, never a
//! partial artifact. On success the artifact is canonical — encoding
//! it again reproduces the input bytes bit for bit. Trailing bytes
//! after a body are an error.

use std::collections::{BTreeMap, BTreeSet};

use ark_ff::Zero;
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize};
use thiserror::Error;

use crate::groupmath::{PairingSuite, Scalar, SharePoint, G1, G2, Gt};
use crate::policy::LsssProgram;
use crate::scheme::{
    CtMeta, KemCiphertext, KemRow, ManagerPublic, ManagerState, MasterKey, OwnerShare,
    PublicParams, SharedCiphertext, SignatureShare, StagedCiphertext, UpdateKey, UserKey,
};

/// First four bytes of every encoded artifact.
pub const MAGIC: [u8; 4] = *b"VDSM";
/// Format version emitted by this crate; other versions are rejected.
pub const VERSION: u8 = 0x01;

/// Serialized width of a scalar (big-endian).
pub const SCALAR_LEN: usize = 32;
/// Serialized width of a compressed G1 point.
pub const G1_LEN: usize = 48;
/// Serialized width of a compressed G2 point.
pub const G2_LEN: usize = 96;
/// Serialized width of a compressed target-group element.
pub const GT_LEN: usize = 576;

/// Artifact type tag carried in byte 5 of the envelope.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Kind {
    PublicParams = 0x01,
    MasterKey = 0x02,
    UserKey = 0x03,
    ManagerState = 0x04,
    ManagerPublic = 0x05,
    OwnerShare = 0x06,
    LsssProgram = 0x07,
    StagedCiphertext = 0x08,
    SignatureShare = 0x09,
    SharedCiphertext = 0x0A,
    UpdateKey = 0x0B,
    StoreManifest = 0x0C,
}

impl Kind {
    fn from_byte(b: u8) -> Option<Kind> {
        Some(match b {
            0x01 => Kind::PublicParams,
            0x02 => Kind::MasterKey,
            0x03 => Kind::UserKey,
            0x04 => Kind::ManagerState,
            0x05 => Kind::ManagerPublic,
            0x06 => Kind::OwnerShare,
            0x07 => Kind::LsssProgram,
            0x08 => Kind::StagedCiphertext,
            0x09 => Kind::SignatureShare,
            0x0A => Kind::SharedCiphertext,
            0x0B => Kind::UpdateKey,
            0x0C => Kind::StoreManifest,
            _ => return None,
        })
    }
}

/// Everything that can go wrong while decoding; encoding never fails.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("bad magic bytes (not a VDSM artifact)")]
    BadMagic,
    #[error("unsupported format version {0}")]
    BadVersion(u8),
    #[error("unknown artifact kind 0x{0:02x}")]
    UnknownKind(u8),
    #[error("expected {want:?}, found {got:?}")]
    WrongKind { want: Kind, got: Kind },
    #[error("input truncated: need {need} more bytes, have {have}")]
    Truncated { need: usize, have: usize },
    #[error("{0} trailing bytes after artifact body")]
    TrailingBytes(usize),
    #[error("field {0:?} is not a canonical in-group element")]
    NonCanonicalElement(&'static str),
    #[error("field {0:?} is not a canonical scalar")]
    NonCanonicalScalar(&'static str),
    #[error("malformed artifact: {0}")]
    Malformed(&'static str),
}

/// The store's bulletin: current epoch, current manager verification
/// key, and the ids of every held entry. Persisted (atomically, last)
/// alongside the entries so a reopened store can re-check itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoreManifest {
    pub epoch: u64,
    pub pk_m: G2,
    /// Sorted, distinct, non-empty file ids.
    pub file_ids: Vec<String>,
}

/// Any decodable artifact, tagged by [`Kind`].
#[derive(Clone, Debug, PartialEq)]
pub enum Artifact {
    PublicParams(PublicParams),
    MasterKey(MasterKey),
    UserKey(UserKey),
    ManagerState(ManagerState),
    ManagerPublic(ManagerPublic),
    OwnerShare(OwnerShare),
    LsssProgram(LsssProgram),
    StagedCiphertext(StagedCiphertext),
    SignatureShare(SignatureShare),
    SharedCiphertext(SharedCiphertext),
    UpdateKey(UpdateKey),
    StoreManifest(StoreManifest),
}

impl Artifact {
    pub fn kind(&self) -> Kind {
        match self {
            Artifact::PublicParams(_) => Kind::PublicParams,
            Artifact::MasterKey(_) => Kind::MasterKey,
            Artifact::UserKey(_) => Kind::UserKey,
            Artifact::ManagerState(_) => Kind::ManagerState,
            Artifact::ManagerPublic(_) => Kind::ManagerPublic,
            Artifact::OwnerShare(_) => Kind::OwnerShare,
            Artifact::LsssProgram(_) => Kind::LsssProgram,
            Artifact::StagedCiphertext(_) => Kind::StagedCiphertext,
            Artifact::SignatureShare(_) => Kind::SignatureShare,
            Artifact::SharedCiphertext(_) => Kind::SharedCiphertext,
            Artifact::UpdateKey(_) => Kind::UpdateKey,
            Artifact::StoreManifest(_) => Kind::StoreManifest,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        match self {
            Artifact::PublicParams(x) => encode_public_params(x),
            Artifact::MasterKey(x) => encode_master_key(x),
            Artifact::UserKey(x) => encode_user_key(x),
            Artifact::ManagerState(x) => encode_manager_state(x),
            Artifact::ManagerPublic(x) => encode_manager_public(x),
            Artifact::OwnerShare(x) => encode_owner_share(x),
            Artifact::LsssProgram(x) => encode_lsss_program(x),
            Artifact::StagedCiphertext(x) => encode_staged_ciphertext(x),
            Artifact::SignatureShare(x) => encode_signature_share(x),
            Artifact::SharedCiphertext(x) => encode_shared_ciphertext(x),
            Artifact::UpdateKey(x) => encode_update_key(x),
            Artifact::StoreManifest(x) => encode_store_manifest(x),
        }
    }
}

// ---------------------------------------------------------------- writer

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new(kind: Kind) -> Writer {
        let mut buf = Vec::with_capacity(256);
        buf.extend_from_slice(&MAGIC);
        buf.push(VERSION);
        buf.push(kind as u8);
        Writer { buf }
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    fn var_bytes(&mut self, b: &[u8]) {
        let n = u32::try_from(b.len()).expect("field longer than u32::MAX bytes");
        self.u32(n);
        self.buf.extend_from_slice(b);
    }

    fn string(&mut self, s: &str) {
        self.var_bytes(s.as_bytes());
    }

    fn scalar(&mut self, s: &Scalar) {
        let mut le = Vec::with_capacity(SCALAR_LEN);
        s.serialize_compressed(&mut le).expect("scalar serializes");
        le.reverse();
        debug_assert_eq!(le.len(), SCALAR_LEN);
        self.buf.extend_from_slice(&le);
    }

    fn g1(&mut self, p: &G1) {
        p.serialize_compressed(&mut self.buf).expect("G1 serializes");
    }

    fn g2(&mut self, p: &G2) {
        p.serialize_compressed(&mut self.buf).expect("G2 serializes");
    }

    fn gt(&mut self, p: &Gt) {
        p.serialize_compressed(&mut self.buf).expect("Gt serializes");
    }

    fn finish(self) -> Vec<u8> {
        self.buf
    }
}

// ---------------------------------------------------------------- reader

struct Reader<'a> {
    rest: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.rest.len() < n {
            return Err(WireError::Truncated {
                need: n - self.rest.len(),
                have: self.rest.len(),
            });
        }
        let (head, tail) = self.rest.split_at(n);
        self.rest = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, WireError> {
        let b = self.take(8)?;
        Ok(u64::from_be_bytes(b.try_into().unwrap()))
    }

    fn var_bytes(&mut self) -> Result<&'a [u8], WireError> {
        let n = self.u32()? as usize;
        self.take(n)
    }

    fn string(&mut self) -> Result<String, WireError> {
        let b = self.var_bytes()?;
        String::from_utf8(b.to_vec()).map_err(|_| WireError::Malformed("string is not UTF-8"))
    }

    fn scalar(&mut self, field: &'static str) -> Result<Scalar, WireError> {
        let mut be = self.take(SCALAR_LEN)?.to_vec();
        be.reverse();
        Scalar::deserialize_compressed(be.as_slice())
            .map_err(|_| WireError::NonCanonicalScalar(field))
    }

    fn g1(&mut self, field: &'static str) -> Result<G1, WireError> {
        let b = self.take(G1_LEN)?;
        G1::deserialize_compressed(b).map_err(|_| WireError::NonCanonicalElement(field))
    }

    fn g2(&mut self, field: &'static str) -> Result<G2, WireError> {
        let b = self.take(G2_LEN)?;
        G2::deserialize_compressed(b).map_err(|_| WireError::NonCanonicalElement(field))
    }

    fn gt(&mut self, field: &'static str) -> Result<Gt, WireError> {
        let b = self.take(GT_LEN)?;
        Gt::deserialize_compressed(b).map_err(|_| WireError::NonCanonicalElement(field))
    }

    /// Assert the body has been fully consumed.
    fn done(self) -> Result<(), WireError> {
        if self.rest.is_empty() {
            Ok(())
        } else {
            Err(WireError::TrailingBytes(self.rest.len()))
        }
    }
}

/// Strip the envelope, returning the kind tag and a reader over the body.
fn open(bytes: &[u8]) -> Result<(Kind, Reader<'_>), WireError> {
    let mut r = Reader { rest: bytes };
    if r.take(4)? != MAGIC {
        return Err(WireError::BadMagic);
    }
    let version = r.take(1)?[0];
    if version != VERSION {
        return Err(WireError::BadVersion(version));
    }
    let kind_byte = r.take(1)?[0];
    let kind = Kind::from_byte(kind_byte).ok_or(WireError::UnknownKind(kind_byte))?;
    Ok((kind, r))
}

/// Strip the envelope and require a specific kind tag.
fn open_as(bytes: &[u8], want: Kind) -> Result<Reader<'_>, WireError> {
    let (got, r) = open(bytes)?;
    if got != want {
        return Err(WireError::WrongKind { want, got });
    }
    Ok(r)
}

// ----------------------------------------------------- per-kind bodies

pub fn encode_public_params(pk: &PublicParams) -> Vec<u8> {
    let mut w = Writer::new(Kind::PublicParams);
    w.gt(&pk.e_gg_alpha);
    w.g1(&pk.g_beta);
    w.u32(pk.attr_elements.len() as u32);
    for (name, h) in &pk.attr_elements {
        w.string(name);
        w.g1(h);
    }
    w.finish()
}

pub fn decode_public_params(bytes: &[u8]) -> Result<PublicParams, WireError> {
    let mut r = open_as(bytes, Kind::PublicParams)?;
    let e_gg_alpha = r.gt("e_gg_alpha")?;
    if e_gg_alpha.is_zero() {
        return Err(WireError::Malformed("e_gg_alpha is the identity"));
    }
    let g_beta = r.g1("g_beta")?;
    let n = r.u32()?;
    if n == 0 {
        return Err(WireError::Malformed("attribute table is empty"));
    }
    let mut attr_elements = BTreeMap::new();
    let mut prev: Option<String> = None;
    for _ in 0..n {
        let name = r.string()?;
        if prev.as_deref() >= Some(name.as_str()) {
            return Err(WireError::Malformed("attribute names out of order"));
        }
        let h = r.g1("attr_element")?;
        attr_elements.insert(name.clone(), h);
        prev = Some(name);
    }
    r.done()?;
    Ok(PublicParams {
        suite: PairingSuite::new(),
        e_gg_alpha,
        g_beta,
        attr_elements,
    })
}

pub fn encode_master_key(msk: &MasterKey) -> Vec<u8> {
    let mut w = Writer::new(Kind::MasterKey);
    w.g1(&msk.g_alpha);
    w.finish()
}

pub fn decode_master_key(bytes: &[u8]) -> Result<MasterKey, WireError> {
    let mut r = open_as(bytes, Kind::MasterKey)?;
    let g_alpha = r.g1("g_alpha")?;
    r.done()?;
    Ok(MasterKey { g_alpha })
}

pub fn encode_user_key(key: &UserKey) -> Vec<u8> {
    let mut w = Writer::new(Kind::UserKey);
    w.g1(&key.k1);
    w.g2(&key.k2);
    w.u32(key.kx.len() as u32);
    for (attr, kx) in &key.kx {
        w.string(attr);
        w.g1(kx);
    }
    w.finish()
}

pub fn decode_user_key(bytes: &[u8]) -> Result<UserKey, WireError> {
    let mut r = open_as(bytes, Kind::UserKey)?;
    let k1 = r.g1("k1")?;
    let k2 = r.g2("k2")?;
    let n = r.u32()?;
    let mut kx = BTreeMap::new();
    let mut prev: Option<String> = None;
    for _ in 0..n {
        let attr = r.string()?;
        if prev.as_deref() >= Some(attr.as_str()) {
            return Err(WireError::Malformed("key attributes out of order"));
        }
        let el = r.g1("kx")?;
        kx.insert(attr.clone(), el);
        prev = Some(attr);
    }
    r.done()?;
    Ok(UserKey { k1, k2, kx })
}

pub fn encode_manager_state(st: &ManagerState) -> Vec<u8> {
    let mut w = Writer::new(Kind::ManagerState);
    w.g2(&st.pk_m);
    w.scalar(&st.sk_m);
    w.u64(st.epoch);
    w.u32(st.owners.len() as u32);
    for owner in &st.owners {
        let point = st
            .shares
            .get(owner)
            .expect("every roster owner holds a share");
        w.string(owner);
        w.scalar(&point.x);
        w.scalar(&point.y);
    }
    w.finish()
}

pub fn decode_manager_state(bytes: &[u8]) -> Result<ManagerState, WireError> {
    let mut r = open_as(bytes, Kind::ManagerState)?;
    let pk_m = r.g2("pk_m")?;
    let sk_m = r.scalar("sk_m")?;
    let epoch = r.u64()?;
    let d = r.u32()?;
    if d == 0 {
        return Err(WireError::Malformed("owner roster is empty"));
    }
    let mut owners = Vec::new();
    let mut shares = BTreeMap::new();
    for _ in 0..d {
        let owner = r.string()?;
        let x = r.scalar("share.x")?;
        let y = r.scalar("share.y")?;
        if x.is_zero() {
            return Err(WireError::Malformed("share abscissa is zero"));
        }
        if shares.insert(owner.clone(), SharePoint { x, y }).is_some() {
            return Err(WireError::Malformed("duplicate owner in roster"));
        }
        owners.push(owner);
    }
    r.done()?;
    Ok(ManagerState {
        pk_m,
        sk_m,
        owners,
        shares,
        epoch,
    })
}

pub fn encode_manager_public(mp: &ManagerPublic) -> Vec<u8> {
    let mut w = Writer::new(Kind::ManagerPublic);
    w.g2(&mp.pk_m);
    w.u64(mp.epoch);
    w.u32(mp.owners.len() as u32);
    for owner in &mp.owners {
        w.string(owner);
    }
    w.finish()
}

pub fn decode_manager_public(bytes: &[u8]) -> Result<ManagerPublic, WireError> {
    let mut r = open_as(bytes, Kind::ManagerPublic)?;
    let pk_m = r.g2("pk_m")?;
    let epoch = r.u64()?;
    let d = r.u32()?;
    if d == 0 {
        return Err(WireError::Malformed("owner roster is empty"));
    }
    let mut owners = Vec::new();
    let mut seen = BTreeSet::new();
    for _ in 0..d {
        let owner = r.string()?;
        if !seen.insert(owner.clone()) {
            return Err(WireError::Malformed("duplicate owner in roster"));
        }
        owners.push(owner);
    }
    r.done()?;
    Ok(ManagerPublic { pk_m, epoch, owners })
}

pub fn encode_owner_share(sh: &OwnerShare) -> Vec<u8> {
    let mut w = Writer::new(Kind::OwnerShare);
    w.string(&sh.owner);
    w.scalar(&sh.point.x);
    w.scalar(&sh.point.y);
    w.finish()
}

pub fn decode_owner_share(bytes: &[u8]) -> Result<OwnerShare, WireError> {
    let mut r = open_as(bytes, Kind::OwnerShare)?;
    let owner = r.string()?;
    let x = r.scalar("x")?;
    let y = r.scalar("y")?;
    if x.is_zero() {
        return Err(WireError::Malformed("share abscissa is zero"));
    }
    r.done()?;
    Ok(OwnerShare {
        owner,
        point: SharePoint { x, y },
    })
}

pub fn encode_lsss_program(p: &LsssProgram) -> Vec<u8> {
    let mut w = Writer::new(Kind::LsssProgram);
    write_lsss(&mut w, p);
    w.finish()
}

pub fn decode_lsss_program(bytes: &[u8]) -> Result<LsssProgram, WireError> {
    let mut r = open_as(bytes, Kind::LsssProgram)?;
    let p = read_lsss(&mut r)?;
    r.done()?;
    Ok(p)
}

fn write_lsss(w: &mut Writer, p: &LsssProgram) {
    w.u32(p.rows() as u32);
    w.u32(p.width() as u32);
    for row in &p.matrix {
        debug_assert_eq!(row.len(), p.width());
        for entry in row {
            w.scalar(entry);
        }
    }
    for attr in &p.rho {
        w.string(attr);
    }
}

fn read_lsss(r: &mut Reader<'_>) -> Result<LsssProgram, WireError> {
    let rows = r.u32()? as usize;
    let width = r.u32()? as usize;
    if rows == 0 || width == 0 {
        return Err(WireError::Malformed("share matrix is empty"));
    }
    let mut matrix = Vec::new();
    for _ in 0..rows {
        let mut row = Vec::new();
        for _ in 0..width {
            row.push(r.scalar("matrix entry")?);
        }
        matrix.push(row);
    }
    let mut rho = Vec::new();
    for _ in 0..rows {
        rho.push(r.string()?);
    }
    Ok(LsssProgram { matrix, rho })
}

pub fn encode_staged_ciphertext(ct: &StagedCiphertext) -> Vec<u8> {
    let mut w = Writer::new(Kind::StagedCiphertext);
    write_ct_common(&mut w, &ct.meta, &ct.c_f, &ct.kem);
    w.finish()
}

pub fn decode_staged_ciphertext(bytes: &[u8]) -> Result<StagedCiphertext, WireError> {
    let mut r = open_as(bytes, Kind::StagedCiphertext)?;
    let (meta, c_f, kem) = read_ct_common(&mut r)?;
    r.done()?;
    Ok(StagedCiphertext { meta, c_f, kem })
}

pub fn encode_signature_share(sh: &SignatureShare) -> Vec<u8> {
    let mut w = Writer::new(Kind::SignatureShare);
    w.string(&sh.owner);
    w.g1(&sh.sigma_t);
    w.finish()
}

pub fn decode_signature_share(bytes: &[u8]) -> Result<SignatureShare, WireError> {
    let mut r = open_as(bytes, Kind::SignatureShare)?;
    let owner = r.string()?;
    let sigma_t = r.g1("sigma_t")?;
    r.done()?;
    Ok(SignatureShare { owner, sigma_t })
}

pub fn encode_shared_ciphertext(ct: &SharedCiphertext) -> Vec<u8> {
    let mut w = Writer::new(Kind::SharedCiphertext);
    write_ct_common(&mut w, &ct.meta, &ct.c_f, &ct.kem);
    w.g1(&ct.sigma);
    w.finish()
}

pub fn decode_shared_ciphertext(bytes: &[u8]) -> Result<SharedCiphertext, WireError> {
    let mut r = open_as(bytes, Kind::SharedCiphertext)?;
    let (meta, c_f, kem) = read_ct_common(&mut r)?;
    let sigma = r.g1("sigma")?;
    r.done()?;
    Ok(SharedCiphertext {
        meta,
        c_f,
        kem,
        sigma,
    })
}

fn write_ct_common(w: &mut Writer, meta: &CtMeta, c_f: &[u8], kem: &KemCiphertext) {
    w.string(&meta.file_id);
    w.u64(meta.epoch);
    w.var_bytes(c_f);
    write_lsss(w, &kem.lsss);
    w.gt(&kem.c1);
    w.g2(&kem.c2);
    w.u32(kem.rows.len() as u32);
    for row in &kem.rows {
        w.g1(&row.c_tau);
        w.g2(&row.d_tau);
    }
}

fn read_ct_common(r: &mut Reader<'_>) -> Result<(CtMeta, Vec<u8>, KemCiphertext), WireError> {
    let file_id = r.string()?;
    if file_id.is_empty() {
        return Err(WireError::Malformed("file id is empty"));
    }
    let epoch = r.u64()?;
    let c_f = r.var_bytes()?.to_vec();
    if c_f.len() < crate::scheme::DEM_NONCE_LEN + crate::scheme::DEM_TAG_LEN {
        return Err(WireError::Malformed("payload shorter than AEAD envelope"));
    }
    let lsss = read_lsss(r)?;
    let c1 = r.gt("c1")?;
    let c2 = r.g2("c2")?;
    let q = r.u32()? as usize;
    if q != lsss.rows() {
        return Err(WireError::Malformed("row count does not match matrix"));
    }
    let mut rows = Vec::new();
    for _ in 0..q {
        let c_tau = r.g1("c_tau")?;
        let d_tau = r.g2("d_tau")?;
        rows.push(KemRow { c_tau, d_tau });
    }
    Ok((
        CtMeta { file_id, epoch },
        c_f,
        KemCiphertext {
            lsss,
            c1,
            c2,
            rows,
        },
    ))
}

pub fn encode_update_key(upk: &UpdateKey) -> Vec<u8> {
    let mut w = Writer::new(Kind::UpdateKey);
    w.scalar(&upk.factor);
    w.g2(&upk.new_pk_m);
    w.u64(upk.epoch);
    w.finish()
}

pub fn decode_update_key(bytes: &[u8]) -> Result<UpdateKey, WireError> {
    let mut r = open_as(bytes, Kind::UpdateKey)?;
    let factor = r.scalar("factor")?;
    if factor.is_zero() {
        return Err(WireError::Malformed("update factor is zero"));
    }
    let new_pk_m = r.g2("new_pk_m")?;
    let epoch = r.u64()?;
    r.done()?;
    Ok(UpdateKey {
        factor,
        new_pk_m,
        epoch,
    })
}

pub fn encode_store_manifest(m: &StoreManifest) -> Vec<u8> {
    let mut w = Writer::new(Kind::StoreManifest);
    w.u64(m.epoch);
    w.g2(&m.pk_m);
    w.u32(m.file_ids.len() as u32);
    for id in &m.file_ids {
        w.string(id);
    }
    w.finish()
}

pub fn decode_store_manifest(bytes: &[u8]) -> Result<StoreManifest, WireError> {
    let mut r = open_as(bytes, Kind::StoreManifest)?;
    let epoch = r.u64()?;
    let pk_m = r.g2("pk_m")?;
    let n = r.u32()?;
    let mut file_ids = Vec::new();
    let mut prev: Option<String> = None;
    for _ in 0..n {
        let id = r.string()?;
        if id.is_empty() {
            return Err(WireError::Malformed("file id is empty"));
        }
        if prev.as_deref() >= Some(id.as_str()) {
            return Err(WireError::Malformed("file ids out of order"));
        }
        prev = Some(id.clone());
        file_ids.push(id);
    }
    r.done()?;
    Ok(StoreManifest {
        epoch,
        pk_m,
        file_ids,
    })
}

/// Decode any artifact by its kind tag. Total: returns a structured
/// error on every malformed input.
pub fn decode_any(bytes: &[u8]) -> Result<Artifact, WireError> {
    let (kind, _) = open(bytes)?;
    Ok(match kind {
        Kind::PublicParams => Artifact::PublicParams(decode_public_params(bytes)?),
        Kind::MasterKey => Artifact::MasterKey(decode_master_key(bytes)?),
        Kind::UserKey => Artifact::UserKey(decode_user_key(bytes)?),
        Kind::ManagerState => Artifact::ManagerState(decode_manager_state(bytes)?),
        Kind::ManagerPublic => Artifact::ManagerPublic(decode_manager_public(bytes)?),
        Kind::OwnerShare => Artifact::OwnerShare(decode_owner_share(bytes)?),
        Kind::LsssProgram => Artifact::LsssProgram(decode_lsss_program(bytes)?),
        Kind::StagedCiphertext => Artifact::StagedCiphertext(decode_staged_ciphertext(bytes)?),
        Kind::SignatureShare => Artifact::SignatureShare(decode_signature_share(bytes)?),
        Kind::SharedCiphertext => Artifact::SharedCiphertext(decode_shared_ciphertext(bytes)?),
        Kind::UpdateKey => Artifact::UpdateKey(decode_update_key(bytes)?),
        Kind::StoreManifest => Artifact::StoreManifest(decode_store_manifest(bytes)?),
    })
}

#[cfg(test)]
mod tests;
