//! The nine core operations of the scheme and the artifacts they
//! exchange.
//!
//! Roles: a trusted authority (TA) runs [`setup`] and issues user keys
//! ([`keygen_du`]); the data manager (DM) creates its signing identity
//! and deals shares of it to the data owners ([`keygen_dm`]), encrypts
//! files under access policies ([`encrypt`]), and aggregates the
//! owners' signature shares ([`aggregate_at`]); each data owner signs
//! the encrypted payload with its share ([`sign_share`]); the storage
//! provider and any user can check integrity ([`verify`]); authorized
//! users recover the file ([`decrypt`]); owner-set churn re-shares a
//! fresh signing key and yields an update exponent the store applies
//! to every signature in place ([`update_owners`], [`apply_update`]).
//!
//! Group placement: signatures and hashed payloads live in G1 (small,
//! fast); the manager verification key and the per-row helper values
//! live in G2; the file key is blinded in the target group. Every
//! pairing below is of the form e(G1, G2).

use std::collections::{BTreeMap, BTreeSet};

use ark_ff::{Field, UniformRand, Zero};
use ark_std::rand::{CryptoRng, RngCore};
use chacha20poly1305::aead::Aead;
use chacha20poly1305::{ChaCha20Poly1305, KeyInit, Nonce};
use thiserror::Error;

use crate::groupmath::{
    self, kem_key_to_dem_key, lagrange_at_zero, random_nonzero_scalar, GroupMathError,
    PairingSuite, Scalar, SharePoint, G1, G2, Gt,
};
use crate::policy::{
    compile_lsss, reconstruction_coeffs, LsssProgram, PolicyAst, PolicyError,
};

/// AEAD nonce length prefixing every encrypted payload.
pub const DEM_NONCE_LEN: usize = 12;
/// AEAD tag length suffixing every encrypted payload.
pub const DEM_TAG_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("attribute universe is empty")]
    EmptyUniverse,
    #[error("duplicate attribute {0:?}")]
    DuplicateAttribute(String),
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("owner roster is empty")]
    EmptyRoster,
    #[error("duplicate owner {0:?}")]
    DuplicateOwner(String),
    #[error("unknown owner {0:?}")]
    UnknownOwner(String),
    #[error("have {have} signature shares, need {need}")]
    InsufficientShares { have: usize, need: usize },
    #[error("signature share count {shares} does not match abscissa count {xs}")]
    ShareCountMismatch { shares: usize, xs: usize },
    #[error("attribute set does not satisfy the ciphertext policy")]
    AccessDenied,
    #[error("payload integrity check failed")]
    IntegrityFailure,
    #[error("ciphertext is malformed: {0}")]
    MalformedCiphertext(&'static str),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    GroupMath(#[from] GroupMathError),
}

/// Public parameters shared by every entity. The embedded suite
/// carries the (optional) operation counters; swap in
/// [`PairingSuite::counted`] to measure.
#[derive(Clone, Debug)]
pub struct PublicParams {
    pub suite: PairingSuite,
    /// e(g₁, g₂)^α — blinds the file key at encryption time.
    pub e_gg_alpha: Gt,
    /// g₁^β — binds user keys to LSSS shares.
    pub g_beta: G1,
    /// Per-attribute group element h_x, fixed at setup.
    pub attr_elements: BTreeMap<String, G1>,
}

impl PartialEq for PublicParams {
    fn eq(&self, other: &Self) -> bool {
        // The suite is instrumentation, not key material.
        self.e_gg_alpha == other.e_gg_alpha
            && self.g_beta == other.g_beta
            && self.attr_elements == other.attr_elements
    }
}

/// Master secret held by the TA.
#[derive(Clone, Debug, PartialEq)]
pub struct MasterKey {
    /// g₁^α.
    pub g_alpha: G1,
}

/// A data user's attribute key.
#[derive(Clone, Debug, PartialEq)]
pub struct UserKey {
    /// g₁^α · g₁^{vβ} — couples the master secret to this key's
    /// personal randomizer v.
    pub k1: G1,
    /// g₂^v.
    pub k2: G2,
    /// h_x^v for each attribute x granted to this user; the key set of
    /// this map is the user's attribute set.
    pub kx: BTreeMap<String, G1>,
}

impl UserKey {
    pub fn attrs(&self) -> BTreeSet<String> {
        self.kx.keys().cloned().collect()
    }
}

/// The data manager's signing state: public key, signing secret, and
/// the owner roster with each owner's share of the secret.
#[derive(Clone, Debug, PartialEq)]
pub struct ManagerState {
    /// g₂^c — the group verification key.
    pub pk_m: G2,
    /// c — never leaves the manager; reconstructible only by all
    /// owners together.
    pub sk_m: Scalar,
    /// Owner ids in roster order (declaration order, joiners appended).
    pub owners: Vec<String>,
    /// Owner id → Shamir point; abscissa is the 1-based roster index
    /// at dealing time.
    pub shares: BTreeMap<String, SharePoint>,
    /// Increments on every owner-set change.
    pub epoch: u64,
}

/// Public face of the manager state (what the store and users see).
#[derive(Clone, Debug, PartialEq)]
pub struct ManagerPublic {
    pub pk_m: G2,
    pub epoch: u64,
    pub owners: Vec<String>,
}

impl From<&ManagerState> for ManagerPublic {
    fn from(st: &ManagerState) -> Self {
        ManagerPublic {
            pk_m: st.pk_m,
            epoch: st.epoch,
            owners: st.owners.clone(),
        }
    }
}

/// One owner's share of the manager signing key, as dealt.
#[derive(Clone, Debug, PartialEq)]
pub struct OwnerShare {
    pub owner: String,
    pub point: SharePoint,
}

/// Feldman-style commitments to the sharing polynomial (g₂^{a_i}),
/// returned by the audited dealing paths so owners can check a
/// received share against the public polynomial.
#[derive(Clone, Debug, PartialEq)]
pub struct ShareCommitments {
    pub coefficients: Vec<G2>,
}

/// Ciphertext identity and the epoch it was signed under.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CtMeta {
    pub file_id: String,
    pub epoch: u64,
}

/// Per-row KEM material: C_τ = g₁^{βλ_τ} · h_{ρ(τ)}^{-r_τ} and
/// D_τ = g₂^{r_τ}.
#[derive(Clone, Debug, PartialEq)]
pub struct KemRow {
    pub c_tau: G1,
    pub d_tau: G2,
}

/// The attribute-based key encapsulation: policy program, blinded file
/// key, and per-row helper values.
#[derive(Clone, Debug, PartialEq)]
pub struct KemCiphertext {
    pub lsss: LsssProgram,
    /// K · e(g₁,g₂)^{sα}.
    pub c1: Gt,
    /// g₂^s.
    pub c2: G2,
    /// One row per LSSS row, same order.
    pub rows: Vec<KemRow>,
}

/// Ciphertext as produced by the manager, before owners have signed.
#[derive(Clone, Debug, PartialEq)]
pub struct StagedCiphertext {
    pub meta: CtMeta,
    /// nonce ‖ AEAD body ‖ tag — the bytes the owners sign.
    pub c_f: Vec<u8>,
    pub kem: KemCiphertext,
}

/// Ciphertext carrying the aggregated owner signature; the only form
/// the store accepts.
#[derive(Clone, Debug, PartialEq)]
pub struct SharedCiphertext {
    pub meta: CtMeta,
    pub c_f: Vec<u8>,
    pub kem: KemCiphertext,
    /// H(C_F)^c, assembled from owner shares.
    pub sigma: G1,
}

impl StagedCiphertext {
    pub fn with_signature(self, sigma: G1) -> SharedCiphertext {
        SharedCiphertext {
            meta: self.meta,
            c_f: self.c_f,
            kem: self.kem,
            sigma,
        }
    }
}

/// One owner's signature share over a staged payload.
#[derive(Clone, Debug, PartialEq)]
pub struct SignatureShare {
    pub owner: String,
    /// H(C_F)^{y_t}.
    pub sigma_t: G1,
}

/// Everything the store needs to refresh signatures after an owner-set
/// change.
#[derive(Clone, Debug, PartialEq)]
pub struct UpdateKey {
    /// c*/c — raises old signatures to the new signing key.
    pub factor: Scalar,
    /// g₂^{c*}.
    pub new_pk_m: G2,
    /// The epoch this update establishes.
    pub epoch: u64,
}

/// Test/audit view of an encryption's internal randomness.
#[derive(Clone, Debug)]
pub struct EncryptionAudit {
    /// The LSSS sharing secret s.
    pub s: Scalar,
    /// The raw file key K before blinding.
    pub kem_key: Gt,
    /// KDF(K) — the AEAD key actually used.
    pub dem_key: [u8; 32],
}

/// Test/audit view of a decryption's intermediate values.
#[derive(Clone, Debug)]
pub struct DecryptionAudit {
    /// The recovered blinding factor e(g₁,g₂)^{sα}.
    pub blinding: Gt,
    /// The recovered file key K.
    pub kem_key: Gt,
}

/// Create public parameters and the master key over an attribute
/// universe.
pub fn setup<R: RngCore + CryptoRng>(
    suite: PairingSuite,
    universe: &[String],
    rng: &mut R,
) -> Result<(PublicParams, MasterKey), SchemeError> {
    if universe.is_empty() {
        return Err(SchemeError::EmptyUniverse);
    }
    let alpha = random_nonzero_scalar(rng);
    let beta = random_nonzero_scalar(rng);
    let g_alpha = suite.g1_exp(&suite.gen_g1(), &alpha);
    let g_beta = suite.g1_exp(&suite.gen_g1(), &beta);
    // e(g,g)^α from the already-computed g₁^α: one pairing.
    let e_gg_alpha = suite.pair(&g_alpha, &suite.gen_g2());
    let mut attr_elements = BTreeMap::new();
    for name in universe {
        if attr_elements
            .insert(name.clone(), G1::rand(rng))
            .is_some()
        {
            return Err(SchemeError::DuplicateAttribute(name.clone()));
        }
    }
    Ok((
        PublicParams {
            suite,
            e_gg_alpha,
            g_beta,
            attr_elements,
        },
        MasterKey { g_alpha },
    ))
}

/// Issue a user key for an attribute set (TA operation).
pub fn keygen_du<R: RngCore + CryptoRng>(
    pk: &PublicParams,
    msk: &MasterKey,
    attrs: &BTreeSet<String>,
    rng: &mut R,
) -> Result<UserKey, SchemeError> {
    let v = random_nonzero_scalar(rng);
    let mut kx = BTreeMap::new();
    for name in attrs {
        let h = pk
            .attr_elements
            .get(name)
            .ok_or_else(|| SchemeError::UnknownAttribute(name.clone()))?;
        kx.insert(name.clone(), pk.suite.g1_exp(h, &v));
    }
    let k1 = msk.g_alpha + pk.suite.g1_exp(&pk.g_beta, &v);
    let k2 = pk.suite.g2_exp(&pk.suite.gen_g2(), &v);
    Ok(UserKey { k1, k2, kx })
}

fn check_roster(owners: &[String]) -> Result<(), SchemeError> {
    if owners.is_empty() {
        return Err(SchemeError::EmptyRoster);
    }
    let mut seen = BTreeSet::new();
    for o in owners {
        if !seen.insert(o) {
            return Err(SchemeError::DuplicateOwner(o.clone()));
        }
    }
    Ok(())
}

fn deal_to_roster<R: RngCore + CryptoRng>(
    secret: &Scalar,
    owners: &[String],
    rng: &mut R,
) -> (BTreeMap<String, SharePoint>, Vec<Scalar>) {
    let coeffs = groupmath::sample_share_polynomial(secret, owners.len(), rng);
    let xs: Vec<Scalar> = (1..=owners.len() as u64).map(Scalar::from).collect();
    let points = groupmath::share_polynomial(&coeffs, &xs)
        .expect("roster indices are nonzero and distinct");
    let shares = owners
        .iter()
        .cloned()
        .zip(points)
        .collect();
    (shares, coeffs)
}

fn commitments(pk: &PublicParams, coeffs: &[Scalar]) -> ShareCommitments {
    ShareCommitments {
        coefficients: coeffs
            .iter()
            .map(|a| pk.suite.g2_exp(&pk.suite.gen_g2(), a))
            .collect(),
    }
}

fn keygen_dm_inner<R: RngCore + CryptoRng>(
    pk: &PublicParams,
    owners: &[String],
    rng: &mut R,
) -> Result<(ManagerState, Vec<Scalar>), SchemeError> {
    check_roster(owners)?;
    let c = random_nonzero_scalar(rng);
    let pk_m = pk.suite.g2_exp(&pk.suite.gen_g2(), &c);
    let (shares, coeffs) = deal_to_roster(&c, owners, rng);
    Ok((
        ManagerState {
            pk_m,
            sk_m: c,
            owners: owners.to_vec(),
            shares,
            epoch: 1,
        },
        coeffs,
    ))
}

/// Create the manager signing identity: signing key c, verification
/// key g₂^c, and a full-threshold Shamir sharing of c across the
/// roster (all owners must sign).
pub fn keygen_dm<R: RngCore + CryptoRng>(
    pk: &PublicParams,
    owners: &[String],
    rng: &mut R,
) -> Result<ManagerState, SchemeError> {
    keygen_dm_inner(pk, owners, rng).map(|(st, _)| st)
}

/// [`keygen_dm`] plus commitments to the sharing polynomial, so owners
/// can verify their dealt share (audit/test mode; the plain path sends
/// bare shares).
pub fn keygen_dm_audited<R: RngCore + CryptoRng>(
    pk: &PublicParams,
    owners: &[String],
    rng: &mut R,
) -> Result<(ManagerState, ShareCommitments), SchemeError> {
    let (st, coeffs) = keygen_dm_inner(pk, owners, rng)?;
    let comm = commitments(pk, &coeffs);
    Ok((st, comm))
}

/// Check a dealt share against the polynomial commitments:
/// g₂^y == Π (g₂^{a_i})^{x^i}.
pub fn verify_share(pk: &PublicParams, comm: &ShareCommitments, point: &SharePoint) -> bool {
    let mut expected = G2::zero();
    let mut power = Scalar::from(1u64);
    for c in &comm.coefficients {
        expected += pk.suite.g2_exp(c, &power);
        power *= point.x;
    }
    expected == pk.suite.g2_exp(&pk.suite.gen_g2(), &point.y)
}

/// Encrypt a file under a policy (DM operation). The output still
/// needs the owners' signatures before the store will accept it.
pub fn encrypt<R: RngCore + CryptoRng>(
    pk: &PublicParams,
    policy: &PolicyAst,
    file: &[u8],
    meta: CtMeta,
    rng: &mut R,
) -> Result<StagedCiphertext, SchemeError> {
    encrypt_audited(pk, policy, file, meta, rng).map(|(ct, _)| ct)
}

/// [`encrypt`] that also reveals the sharing secret and file key for
/// the correctness-identity tests.
pub fn encrypt_audited<R: RngCore + CryptoRng>(
    pk: &PublicParams,
    policy: &PolicyAst,
    file: &[u8],
    meta: CtMeta,
    rng: &mut R,
) -> Result<(StagedCiphertext, EncryptionAudit), SchemeError> {
    let lsss = compile_lsss(policy)?;
    for attr in &lsss.rho {
        if !pk.attr_elements.contains_key(attr) {
            return Err(SchemeError::UnknownAttribute(attr.clone()));
        }
    }
    let s = random_nonzero_scalar(rng);
    let mut v = Vec::with_capacity(lsss.width());
    v.push(s);
    for _ in 1..lsss.width() {
        v.push(Scalar::rand(rng));
    }
    let lambda = crate::policy::share_with_vector(&lsss, &v)?;

    let kem_key = Gt::rand(rng);
    let c1 = kem_key + pk.suite.gt_exp(&pk.e_gg_alpha, &s);
    let c2 = pk.suite.g2_exp(&pk.suite.gen_g2(), &s);
    let mut rows = Vec::with_capacity(lsss.rows());
    for (tau, lam) in lambda.lambda.iter().enumerate() {
        let h = &pk.attr_elements[&lsss.rho[tau]];
        let r = Scalar::rand(rng);
        let c_tau = pk.suite.g1_exp(&pk.g_beta, lam) + pk.suite.g1_exp(h, &-r);
        let d_tau = pk.suite.g2_exp(&pk.suite.gen_g2(), &r);
        rows.push(KemRow { c_tau, d_tau });
    }

    let dem_key = kem_key_to_dem_key(&kem_key);
    let c_f = dem_seal(&dem_key, file, rng);
    Ok((
        StagedCiphertext {
            meta,
            c_f,
            kem: KemCiphertext { lsss, c1, c2, rows },
        },
        EncryptionAudit { s, kem_key, dem_key },
    ))
}

/// Sign a staged payload with one owner share (DO operation).
pub fn sign_share(
    pk: &PublicParams,
    c_f: &[u8],
    owner: &str,
    share: &SharePoint,
) -> SignatureShare {
    let h = pk.suite.hash_to_g1(c_f);
    SignatureShare {
        owner: owner.to_string(),
        sigma_t: pk.suite.g1_exp(&h, &share.y),
    }
}

/// Aggregate signature shares issued at the given abscissae:
/// σ = Π σ_t^{L_t(0)}. With shares from every roster member this
/// equals H(C_F)^c; with fewer it does not verify.
pub fn aggregate_at(
    pk: &PublicParams,
    shares: &[SignatureShare],
    xs: &[Scalar],
) -> Result<G1, SchemeError> {
    if shares.is_empty() {
        return Err(SchemeError::InsufficientShares { have: 0, need: 1 });
    }
    if shares.len() != xs.len() {
        return Err(SchemeError::ShareCountMismatch {
            shares: shares.len(),
            xs: xs.len(),
        });
    }
    let coeffs = lagrange_at_zero(xs)?;
    let mut sigma = G1::zero();
    for (share, l) in shares.iter().zip(&coeffs) {
        sigma += pk.suite.g1_exp(&share.sigma_t, l);
    }
    Ok(sigma)
}

impl ManagerState {
    pub fn share_of(&self, owner: &str) -> Option<&SharePoint> {
        self.shares.get(owner)
    }

    /// Aggregate exactly one share from every roster member. Order of
    /// the input is irrelevant; duplicates and strangers are errors.
    pub fn aggregate(
        &self,
        pk: &PublicParams,
        shares: &[SignatureShare],
    ) -> Result<G1, SchemeError> {
        let mut by_owner: BTreeMap<&str, &SignatureShare> = BTreeMap::new();
        for sh in shares {
            if !self.shares.contains_key(&sh.owner) {
                return Err(SchemeError::UnknownOwner(sh.owner.clone()));
            }
            if by_owner.insert(&sh.owner, sh).is_some() {
                return Err(SchemeError::DuplicateOwner(sh.owner.clone()));
            }
        }
        if by_owner.len() != self.owners.len() {
            return Err(SchemeError::InsufficientShares {
                have: by_owner.len(),
                need: self.owners.len(),
            });
        }
        let ordered: Vec<SignatureShare> = self
            .owners
            .iter()
            .map(|o| (*by_owner[o.as_str()]).clone())
            .collect();
        let xs: Vec<Scalar> = self.owners.iter().map(|o| self.shares[o].x).collect();
        aggregate_at(pk, &ordered, &xs)
    }
}

/// Check a fetched ciphertext against the manager verification key:
/// e(σ, g₂) == e(H(C_F), PK_m). Exactly two pairings.
pub fn verify(pk: &PublicParams, ct: &SharedCiphertext, pk_m: &G2) -> bool {
    let h = pk.suite.hash_to_g1(&ct.c_f);
    pk.suite.pair(&ct.sigma, &pk.suite.gen_g2()) == pk.suite.pair(&h, pk_m)
}

/// Recover the file with an attribute key (DU operation). Fails with
/// [`SchemeError::AccessDenied`] when the key's attributes do not
/// satisfy the ciphertext policy, and [`SchemeError::IntegrityFailure`]
/// when the payload does not authenticate under the recovered key.
pub fn decrypt(
    pk: &PublicParams,
    ct: &SharedCiphertext,
    sk: &UserKey,
) -> Result<Vec<u8>, SchemeError> {
    decrypt_audited(pk, ct, sk).map(|(file, _)| file)
}

/// [`decrypt`] that also reveals the recovered blinding factor and
/// file key for the correctness-identity tests.
pub fn decrypt_audited(
    pk: &PublicParams,
    ct: &SharedCiphertext,
    sk: &UserKey,
) -> Result<(Vec<u8>, DecryptionAudit), SchemeError> {
    let rc = reconstruction_coeffs(&ct.kem.lsss, &sk.attrs()).ok_or(SchemeError::AccessDenied)?;
    // A = e(K₁, C₂) / Π (e(C_τ, K₂) · e(K_ρ(τ), D_τ))^{ω_τ} = e(g,g)^{sα}:
    // the vβ parts telescope away, leaving only the blinding.
    let numerator = pk.suite.pair(&sk.k1, &ct.kem.c2);
    let mut denominator = Gt::zero();
    for (row, w) in &rc.omega {
        let kem_row = ct
            .kem
            .rows
            .get(*row)
            .ok_or(SchemeError::MalformedCiphertext("row index out of range"))?;
        let attr = &ct.kem.lsss.rho[*row];
        let kx = sk
            .kx
            .get(attr)
            .expect("reconstruction rows are labeled by held attributes");
        let term = pk.suite.pair(&kem_row.c_tau, &sk.k2) + pk.suite.pair(kx, &kem_row.d_tau);
        denominator += pk.suite.gt_exp(&term, w);
    }
    let blinding = numerator - denominator;
    let kem_key = ct.kem.c1 - blinding;
    let file = dem_open(&kem_key_to_dem_key(&kem_key), &ct.c_f)?;
    Ok((file, DecryptionAudit { blinding, kem_key }))
}

/// Re-key for a changed owner roster (DM operation): retained owners
/// keep their ids (order preserved), joiners are appended, and a fresh
/// signing key c* is dealt to the new roster. Returns the new state
/// and the update key for the store; the DM's staged/shared
/// ciphertexts themselves are untouched — the store refreshes their
/// signatures via [`apply_update`].
pub fn update_owners<R: RngCore + CryptoRng>(
    pk: &PublicParams,
    state: &ManagerState,
    joins: &[String],
    leaves: &[String],
    rng: &mut R,
) -> Result<(ManagerState, UpdateKey), SchemeError> {
    let c_star = random_nonzero_scalar(rng);
    let (next, upk, _) = rekey_roster(pk, state, joins, leaves, c_star, rng)?;
    Ok((next, upk))
}

/// [`update_owners`] plus commitments for the freshly dealt shares.
pub fn update_owners_audited<R: RngCore + CryptoRng>(
    pk: &PublicParams,
    state: &ManagerState,
    joins: &[String],
    leaves: &[String],
    rng: &mut R,
) -> Result<(ManagerState, UpdateKey, ShareCommitments), SchemeError> {
    let c_star = random_nonzero_scalar(rng);
    let (next, upk, coeffs) = rekey_roster(pk, state, joins, leaves, c_star, rng)?;
    let comm = commitments(pk, &coeffs);
    Ok((next, upk, comm))
}

/// Deterministic-secret variant for the identity-update unit test.
#[cfg(test)]
pub(crate) fn update_owners_with_secret<R: RngCore + CryptoRng>(
    pk: &PublicParams,
    state: &ManagerState,
    joins: &[String],
    leaves: &[String],
    c_star: Scalar,
    rng: &mut R,
) -> Result<(ManagerState, UpdateKey), SchemeError> {
    let (next, upk, _) = rekey_roster(pk, state, joins, leaves, c_star, rng)?;
    Ok((next, upk))
}

fn rekey_roster<R: RngCore + CryptoRng>(
    pk: &PublicParams,
    state: &ManagerState,
    joins: &[String],
    leaves: &[String],
    c_star: Scalar,
    rng: &mut R,
) -> Result<(ManagerState, UpdateKey, Vec<Scalar>), SchemeError> {
    let mut leaving = BTreeSet::new();
    for l in leaves {
        if !state.shares.contains_key(l) {
            return Err(SchemeError::UnknownOwner(l.clone()));
        }
        if !leaving.insert(l.clone()) {
            return Err(SchemeError::DuplicateOwner(l.clone()));
        }
    }
    let mut roster: Vec<String> = state
        .owners
        .iter()
        .filter(|o| !leaving.contains(*o))
        .cloned()
        .collect();
    for j in joins {
        if roster.contains(j) {
            return Err(SchemeError::DuplicateOwner(j.clone()));
        }
        roster.push(j.clone());
    }
    check_roster(&roster)?;

    let new_pk_m = pk.suite.g2_exp(&pk.suite.gen_g2(), &c_star);
    let (shares, coeffs) = deal_to_roster(&c_star, &roster, rng);
    let factor = c_star
        * state
            .sk_m
            .inverse()
            .expect("manager signing key is nonzero");
    let epoch = state.epoch + 1;
    Ok((
        ManagerState {
            pk_m: new_pk_m,
            sk_m: c_star,
            owners: roster,
            shares,
            epoch,
        },
        UpdateKey {
            factor,
            new_pk_m,
            epoch,
        },
        coeffs,
    ))
}

/// Refresh a stored signature for a new epoch: σ* = σ^{c*/c}. Applied
/// by the store to every entry; no owner involvement.
pub fn apply_update(pk: &PublicParams, sigma: &G1, upk: &UpdateKey) -> G1 {
    pk.suite.g1_exp(sigma, &upk.factor)
}

fn dem_seal<R: RngCore + CryptoRng>(key: &[u8; 32], plaintext: &[u8], rng: &mut R) -> Vec<u8> {
    let cipher = ChaCha20Poly1305::new(key.into());
    let mut nonce = [0u8; DEM_NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    let sealed = cipher
        .encrypt(Nonce::from_slice(&nonce), plaintext)
        .expect("in-memory AEAD encryption is infallible");
    let mut out = Vec::with_capacity(DEM_NONCE_LEN + sealed.len());
    out.extend_from_slice(&nonce);
    out.extend_from_slice(&sealed);
    out
}

fn dem_open(key: &[u8; 32], c_f: &[u8]) -> Result<Vec<u8>, SchemeError> {
    if c_f.len() < DEM_NONCE_LEN + DEM_TAG_LEN {
        return Err(SchemeError::MalformedCiphertext("payload too short"));
    }
    let (nonce, body) = c_f.split_at(DEM_NONCE_LEN);
    let cipher = ChaCha20Poly1305::new(key.into());
    cipher
        .decrypt(Nonce::from_slice(nonce), body)
        .map_err(|_| SchemeError::IntegrityFailure)
}
