//! Pairing-group arithmetic: the suite abstraction over BLS12-381,
//! operation counters, Shamir secret sharing and Lagrange interpolation
//! over the scalar field, hash-to-group, and payload-key derivation.
//!
//! All scheme-level exponentiations and pairings go through a
//! [`PairingSuite`] so that a counted suite observes exactly the
//! operations the complexity accounting talks about. Group additions,
//! random sampling and hashing are deliberately not counted.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use ark_bls12_381::{Bls12_381, Fr};
use ark_ec::hashing::curve_maps::wb::WBMap;
use ark_ec::hashing::map_to_curve_hasher::MapToCurveBasedHasher;
use ark_ec::hashing::HashToCurve;
use ark_ec::pairing::{Pairing, PairingOutput};
use ark_ec::PrimeGroup;
use ark_ff::field_hashers::DefaultFieldHasher;
use ark_ff::{Field, UniformRand, Zero};
use ark_serialize::CanonicalSerialize;
use ark_std::rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Scalar field element (exponent).
pub type Scalar = Fr;
/// First source group (signatures, attribute elements live here).
pub type G1 = ark_bls12_381::G1Projective;
/// Second source group (public verification material lives here).
pub type G2 = ark_bls12_381::G2Projective;
/// Pairing target group.
pub type Gt = PairingOutput<Bls12_381>;

/// Domain separation tag for hashing payloads onto G1.
pub const HASH_TO_GROUP_DST: &[u8] = b"VDS-DM:H2:v1";
/// Domain separation tag for deriving the payload (DEM) key from a
/// target-group element.
pub const KDF_DST: &[u8] = b"VDS-DM:KDF:v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupMathError {
    #[error("no evaluation points given")]
    NoPoints,
    #[error("zero x-coordinate in a sharing")]
    ZeroAbscissa,
    #[error("duplicate x-coordinate in a sharing")]
    DuplicateAbscissa,
    #[error("polynomial has no coefficients")]
    EmptyPolynomial,
}

/// One evaluation point of a shared polynomial. The x-coordinate is
/// public (it identifies the holder); the y-coordinate is the secret
/// share. `x` must never be zero — x = 0 is where the secret lives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharePoint {
    pub x: Scalar,
    pub y: Scalar,
}

impl SharePoint {
    pub fn new(x: Scalar, y: Scalar) -> Result<Self, GroupMathError> {
        if x.is_zero() {
            return Err(GroupMathError::ZeroAbscissa);
        }
        Ok(SharePoint { x, y })
    }
}

/// Snapshot of the operation counters of a counted suite.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounts {
    /// Pairing evaluations.
    pub pairings: u64,
    /// Exponentiations in either source group.
    pub exp_g: u64,
    /// Exponentiations in the target group.
    pub exp_gt: u64,
}

#[derive(Debug, Default)]
struct CounterCell {
    pairings: AtomicU64,
    exp_g: AtomicU64,
    exp_gt: AtomicU64,
}

/// Entry point for all counted group operations.
///
/// A plain suite ([`PairingSuite::new`]) performs the operations
/// directly; a counted suite ([`PairingSuite::counted`]) additionally
/// tallies pairings and exponentiations. Clones share the same
/// counters, so a suite embedded in public parameters keeps counting
/// across the operations that use those parameters.
#[derive(Clone, Debug, Default)]
pub struct PairingSuite {
    counters: Option<Arc<CounterCell>>,
}

impl PairingSuite {
    /// Suite without counters.
    pub fn new() -> Self {
        PairingSuite { counters: None }
    }

    /// Suite that tallies pairings and exponentiations.
    pub fn counted() -> Self {
        PairingSuite {
            counters: Some(Arc::new(CounterCell::default())),
        }
    }

    pub fn is_counted(&self) -> bool {
        self.counters.is_some()
    }

    /// Current counter values; all zero for an uncounted suite.
    pub fn counts(&self) -> OpCounts {
        match &self.counters {
            Some(c) => OpCounts {
                pairings: c.pairings.load(Ordering::Relaxed),
                exp_g: c.exp_g.load(Ordering::Relaxed),
                exp_gt: c.exp_gt.load(Ordering::Relaxed),
            },
            None => OpCounts::default(),
        }
    }

    pub fn reset_counts(&self) {
        if let Some(c) = &self.counters {
            c.pairings.store(0, Ordering::Relaxed);
            c.exp_g.store(0, Ordering::Relaxed);
            c.exp_gt.store(0, Ordering::Relaxed);
        }
    }

    fn bump(&self, field: fn(&CounterCell) -> &AtomicU64) {
        if let Some(c) = &self.counters {
            field(c).fetch_add(1, Ordering::Relaxed);
        }
    }

    /// Fixed generator of G1.
    pub fn gen_g1(&self) -> G1 {
        G1::generator()
    }

    /// Fixed generator of G2.
    pub fn gen_g2(&self) -> G2 {
        G2::generator()
    }

    /// Bilinear pairing e(a, b). Counted.
    pub fn pair(&self, a: &G1, b: &G2) -> Gt {
        self.bump(|c| &c.pairings);
        Bls12_381::pairing(*a, *b)
    }

    /// base^exp in G1. Counted as a source-group exponentiation.
    pub fn g1_exp(&self, base: &G1, exp: &Scalar) -> G1 {
        self.bump(|c| &c.exp_g);
        *base * exp
    }

    /// base^exp in G2. Counted as a source-group exponentiation.
    pub fn g2_exp(&self, base: &G2, exp: &Scalar) -> G2 {
        self.bump(|c| &c.exp_g);
        *base * exp
    }

    /// base^exp in the target group. Counted separately: target-group
    /// exponentiations are markedly more expensive.
    pub fn gt_exp(&self, base: &Gt, exp: &Scalar) -> Gt {
        self.bump(|c| &c.exp_gt);
        *base * exp
    }

    /// Hash an arbitrary byte string onto G1 (simplified SWU map with
    /// SHA-256 expansion under [`HASH_TO_GROUP_DST`]). Deterministic;
    /// not counted — the accounting tracks pairings and
    /// exponentiations only.
    pub fn hash_to_g1(&self, msg: &[u8]) -> G1 {
        let hasher = MapToCurveBasedHasher::<
            G1,
            DefaultFieldHasher<Sha256, 128>,
            WBMap<ark_bls12_381::g1::Config>,
        >::new(HASH_TO_GROUP_DST)
        .expect("hash-to-curve parameters are fixed and valid");
        G1::from(hasher.hash(msg).expect("hash-to-curve is total"))
    }
}

/// Derive the 32-byte payload-encryption key from a target-group
/// element: SHA-256 over [`KDF_DST`] followed by the element's
/// canonical compressed encoding.
pub fn kem_key_to_dem_key(k: &Gt) -> [u8; 32] {
    let mut bytes = Vec::with_capacity(Gt::default().compressed_size());
    k.serialize_compressed(&mut bytes)
        .expect("target-group serialization is infallible");
    let mut h = Sha256::new();
    h.update(KDF_DST);
    h.update(&bytes);
    h.finalize().into()
}

/// Uniformly random nonzero scalar.
pub fn random_nonzero_scalar<R: RngCore + CryptoRng>(rng: &mut R) -> Scalar {
    loop {
        let s = Scalar::rand(rng);
        if !s.is_zero() {
            return s;
        }
    }
}

fn check_abscissae(x_coords: &[Scalar]) -> Result<(), GroupMathError> {
    if x_coords.is_empty() {
        return Err(GroupMathError::NoPoints);
    }
    let mut seen = BTreeSet::new();
    for x in x_coords {
        if x.is_zero() {
            return Err(GroupMathError::ZeroAbscissa);
        }
        if !seen.insert(*x) {
            return Err(GroupMathError::DuplicateAbscissa);
        }
    }
    Ok(())
}

fn eval_poly(coeffs: &[Scalar], x: &Scalar) -> Scalar {
    // Horner, highest coefficient first.
    let mut acc = Scalar::zero();
    for c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Evaluate the polynomial with the given coefficients (constant term
/// first) at each x-coordinate. Deterministic core of [`shamir_share`].
pub fn share_polynomial(
    coeffs: &[Scalar],
    x_coords: &[Scalar],
) -> Result<Vec<SharePoint>, GroupMathError> {
    if coeffs.is_empty() {
        return Err(GroupMathError::EmptyPolynomial);
    }
    check_abscissae(x_coords)?;
    Ok(x_coords
        .iter()
        .map(|&x| SharePoint {
            x,
            y: eval_poly(coeffs, &x),
        })
        .collect())
}

/// Sample a random polynomial of degree `x_coords.len() - 1` with the
/// given constant term. Returns the full coefficient vector (constant
/// term first); pair with [`share_polynomial`] to deal shares.
pub fn sample_share_polynomial<R: RngCore + CryptoRng>(
    secret: &Scalar,
    degree_plus_one: usize,
    rng: &mut R,
) -> Vec<Scalar> {
    let mut coeffs = Vec::with_capacity(degree_plus_one.max(1));
    coeffs.push(*secret);
    for _ in 1..degree_plus_one {
        coeffs.push(Scalar::rand(rng));
    }
    coeffs
}

/// Shamir-share `secret` at the given x-coordinates: a fresh random
/// polynomial of degree `x_coords.len() - 1` with constant term
/// `secret`, so that all points reconstruct the secret and any proper
/// subset carries no information about it.
pub fn shamir_share<R: RngCore + CryptoRng>(
    secret: &Scalar,
    x_coords: &[Scalar],
    rng: &mut R,
) -> Result<Vec<SharePoint>, GroupMathError> {
    check_abscissae(x_coords)?;
    let coeffs = sample_share_polynomial(secret, x_coords.len(), rng);
    share_polynomial(&coeffs, x_coords)
}

/// Lagrange basis coefficients at zero: `out[t] = Π_{l≠t} -x_l / (x_t - x_l)`,
/// so that `Σ out[t]·f(x_t) = f(0)` for any polynomial f of degree
/// below `x_coords.len()`.
pub fn lagrange_at_zero(x_coords: &[Scalar]) -> Result<Vec<Scalar>, GroupMathError> {
    check_abscissae(x_coords)?;
    let mut out = Vec::with_capacity(x_coords.len());
    for (t, xt) in x_coords.iter().enumerate() {
        let mut num = Scalar::from(1u64);
        let mut den = Scalar::from(1u64);
        for (l, xl) in x_coords.iter().enumerate() {
            if l == t {
                continue;
            }
            num *= -*xl;
            den *= *xt - xl;
        }
        let den_inv = den
            .inverse()
            .expect("denominator nonzero: abscissae are distinct");
        out.push(num * den_inv);
    }
    Ok(out)
}
