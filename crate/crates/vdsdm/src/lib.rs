//! VDS-DM: verifiable data sharing for dynamic multi-owner groups.
//!
//! A data manager (DM) shares files with data users (DUs) under
//! attribute-based access policies while a changing set of data owners
//! (DOs) jointly vouches for ciphertext integrity:
//!
//! * files are protected with ciphertext-policy attribute-based
//!   encryption — an LSSS access structure over attributes decides who
//!   can recover the payload key ([`scheme::encrypt`] / [`scheme::decrypt`]);
//! * each owner holds one point of a Shamir sharing of the manager
//!   signing key and signs the encrypted payload independently
//!   ([`scheme::sign_share`]); the manager aggregates the shares by
//!   Lagrange interpolation in the exponent ([`scheme::aggregate_at`]);
//! * anyone can check a fetched ciphertext against the aggregate
//!   signature with two pairings ([`scheme::verify`]);
//! * when the owner set changes, the manager re-shares a fresh signing
//!   key and hands the storage provider a single update exponent that
//!   refreshes every stored signature in place — no third party and no
//!   re-signing round ([`scheme::update_owners`], [`scheme::apply_update`]).
//!
//! Module map:
//!
//! * [`groupmath`] — pairing suite over BLS12-381, operation counters,
//!   Shamir sharing and Lagrange coefficients, hash-to-group, KDF;
//! * [`policy`] — access-policy AST, parser, LSSS compiler,
//!   satisfaction check and reconstruction coefficients;
//! * [`scheme`] — the nine core operations over the types above;
//! * [`wire`] — canonical, versioned, validated byte encodings for
//!   every artifact that crosses an entity boundary;
//! * [`protocol`] — a deterministic five-entity simulation (TA, DM,
//!   DOs, CSP, DUs) driven by scenario scripts, plus the file-backed
//!   ciphertext store;
//! * [`bench`] — operation-count and wall-clock measurement harness.

pub mod bench;
pub mod groupmath;
pub mod policy;
pub mod protocol;
pub mod scheme;
pub mod wire;
