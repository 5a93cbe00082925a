use std::collections::BTreeSet;
use std::sync::OnceLock;

use ark_ff::{BigInteger, PrimeField};
use ark_serialize::CanonicalSerialize;
use ark_std::rand::SeedableRng;
use proptest::prelude::*;
use rand_chacha::ChaCha20Rng;

use super::*;
use crate::policy::{compile_lsss, parse_policy};
use crate::scheme::{
    encrypt, keygen_dm, keygen_du, setup, sign_share, update_owners, CtMeta,
};

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// One artifact of every kind, derived from a single seed.
fn artifact_set(seed: u64) -> Vec<Artifact> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (pk, msk) = setup(PairingSuite::new(), &names(&["a", "b", "c"]), &mut rng).unwrap();
    let attrs: BTreeSet<String> = names(&["a", "b"]).into_iter().collect();
    let user = keygen_du(&pk, &msk, &attrs, &mut rng).unwrap();
    let st = keygen_dm(&pk, &names(&["o1", "o2", "o3"]), &mut rng).unwrap();

    let policy = parse_policy("a AND (b OR c)").unwrap();
    let staged = encrypt(
        &pk,
        &policy,
        b"wire fixture payload",
        CtMeta {
            file_id: "f1".into(),
            epoch: st.epoch,
        },
        &mut rng,
    )
    .unwrap();
    let shares: Vec<_> = st
        .owners
        .iter()
        .map(|o| sign_share(&pk, &staged.c_f, o, st.share_of(o).unwrap()))
        .collect();
    let sigma = st.aggregate(&pk, &shares).unwrap();
    let shared = staged.clone().with_signature(sigma);
    let (st2, upk) = update_owners(&pk, &st, &names(&["o4"]), &names(&["o1"]), &mut rng).unwrap();

    let owner_share = OwnerShare {
        owner: "o2".into(),
        point: st.shares["o2"].clone(),
    };
    let manifest = StoreManifest {
        epoch: st2.epoch,
        pk_m: st2.pk_m,
        file_ids: names(&["f1", "f2"]),
    };

    vec![
        Artifact::PublicParams(pk),
        Artifact::MasterKey(msk),
        Artifact::UserKey(user),
        Artifact::ManagerPublic(ManagerPublic::from(&st)),
        Artifact::ManagerState(st),
        Artifact::OwnerShare(owner_share),
        Artifact::LsssProgram(compile_lsss(&policy).unwrap()),
        Artifact::StagedCiphertext(staged),
        Artifact::SignatureShare(shares[0].clone()),
        Artifact::SharedCiphertext(shared),
        Artifact::UpdateKey(upk),
        Artifact::StoreManifest(manifest),
    ]
}

fn fixture_encodings() -> &'static Vec<Vec<u8>> {
    static FIXTURES: OnceLock<Vec<Vec<u8>>> = OnceLock::new();
    FIXTURES.get_or_init(|| artifact_set(0xF1C5).iter().map(Artifact::encode).collect())
}

#[test]
fn element_widths_match_constants() {
    let set = artifact_set(1);
    let Artifact::PublicParams(pk) = &set[0] else {
        unreachable!()
    };
    assert_eq!(ser_gt(&pk.e_gg_alpha).len(), GT_LEN);
    assert_eq!(ser_g1(&pk.g_beta).len(), G1_LEN);
    assert_eq!(ser_scalar_be(&Scalar::from(7u64)).len(), SCALAR_LEN);
    let Artifact::ManagerState(st) = &set[4] else {
        unreachable!()
    };
    assert_eq!(ser_g2(&st.pk_m).len(), G2_LEN);
}

#[test]
fn round_trips_every_kind() {
    for seed in 0..10u64 {
        let set = artifact_set(seed);
        assert_eq!(set.len(), 12);
        let mut kinds = BTreeSet::new();
        for artifact in &set {
            kinds.insert(artifact.kind() as u8);
            let bytes = artifact.encode();
            // Canonicity: encoding is deterministic…
            assert_eq!(bytes, artifact.encode());
            // …and decode is its exact inverse.
            let back = decode_any(&bytes).unwrap();
            assert_eq!(&back, artifact, "{:?} seed {seed}", artifact.kind());
            assert_eq!(back.encode(), bytes);
        }
        assert_eq!(kinds.len(), 12, "every kind distinct");
    }
}

#[test]
fn typed_decoders_match_untyped() {
    let set = artifact_set(99);
    for artifact in &set {
        let bytes = artifact.encode();
        match artifact {
            Artifact::PublicParams(x) => assert_eq!(&decode_public_params(&bytes).unwrap(), x),
            Artifact::MasterKey(x) => assert_eq!(&decode_master_key(&bytes).unwrap(), x),
            Artifact::UserKey(x) => assert_eq!(&decode_user_key(&bytes).unwrap(), x),
            Artifact::ManagerState(x) => assert_eq!(&decode_manager_state(&bytes).unwrap(), x),
            Artifact::ManagerPublic(x) => assert_eq!(&decode_manager_public(&bytes).unwrap(), x),
            Artifact::OwnerShare(x) => assert_eq!(&decode_owner_share(&bytes).unwrap(), x),
            Artifact::LsssProgram(x) => assert_eq!(&decode_lsss_program(&bytes).unwrap(), x),
            Artifact::StagedCiphertext(x) => {
                assert_eq!(&decode_staged_ciphertext(&bytes).unwrap(), x)
            }
            Artifact::SignatureShare(x) => {
                assert_eq!(&decode_signature_share(&bytes).unwrap(), x)
            }
            Artifact::SharedCiphertext(x) => {
                assert_eq!(&decode_shared_ciphertext(&bytes).unwrap(), x)
            }
            Artifact::UpdateKey(x) => assert_eq!(&decode_update_key(&bytes).unwrap(), x),
            Artifact::StoreManifest(x) => assert_eq!(&decode_store_manifest(&bytes).unwrap(), x),
        }
    }
}

// ------------------------------------------------- independent encoder
//
// A second encoder, written against the documented format rather than
// the Writer type: raw byte pushes, big-endian scalars taken through
// the integer representation instead of reversed little-endian
// serialization. Any drift between the format documentation and the
// production encoder shows up here as a byte mismatch.

fn ser_g1(p: &G1) -> Vec<u8> {
    let mut v = Vec::new();
    p.serialize_compressed(&mut v).unwrap();
    v
}

fn ser_g2(p: &G2) -> Vec<u8> {
    let mut v = Vec::new();
    p.serialize_compressed(&mut v).unwrap();
    v
}

fn ser_gt(p: &Gt) -> Vec<u8> {
    let mut v = Vec::new();
    p.serialize_compressed(&mut v).unwrap();
    v
}

fn ser_scalar_be(s: &Scalar) -> Vec<u8> {
    s.into_bigint().to_bytes_be()
}

fn envelope(kind: u8) -> Vec<u8> {
    let mut v = b"VDSM".to_vec();
    v.push(0x01);
    v.push(kind);
    v
}

fn push_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_be_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn oracle_public_params(pk: &PublicParams) -> Vec<u8> {
    let mut out = envelope(0x01);
    out.extend(ser_gt(&pk.e_gg_alpha));
    out.extend(ser_g1(&pk.g_beta));
    out.extend((pk.attr_elements.len() as u32).to_be_bytes());
    for (name, h) in &pk.attr_elements {
        push_str(&mut out, name);
        out.extend(ser_g1(h));
    }
    out
}

fn oracle_user_key(key: &UserKey) -> Vec<u8> {
    let mut out = envelope(0x03);
    out.extend(ser_g1(&key.k1));
    out.extend(ser_g2(&key.k2));
    out.extend((key.kx.len() as u32).to_be_bytes());
    for (attr, el) in &key.kx {
        push_str(&mut out, attr);
        out.extend(ser_g1(el));
    }
    out
}

fn oracle_manager_state(st: &ManagerState) -> Vec<u8> {
    let mut out = envelope(0x04);
    out.extend(ser_g2(&st.pk_m));
    out.extend(ser_scalar_be(&st.sk_m));
    out.extend(st.epoch.to_be_bytes());
    out.extend((st.owners.len() as u32).to_be_bytes());
    for owner in &st.owners {
        push_str(&mut out, owner);
        out.extend(ser_scalar_be(&st.shares[owner].x));
        out.extend(ser_scalar_be(&st.shares[owner].y));
    }
    out
}

fn oracle_ct_body(meta: &CtMeta, c_f: &[u8], kem: &KemCiphertext, row_count: u32) -> Vec<u8> {
    let mut out = Vec::new();
    push_str(&mut out, &meta.file_id);
    out.extend(meta.epoch.to_be_bytes());
    out.extend((c_f.len() as u32).to_be_bytes());
    out.extend_from_slice(c_f);
    out.extend((kem.lsss.rows() as u32).to_be_bytes());
    out.extend((kem.lsss.width() as u32).to_be_bytes());
    for row in &kem.lsss.matrix {
        for entry in row {
            out.extend(ser_scalar_be(entry));
        }
    }
    for attr in &kem.lsss.rho {
        push_str(&mut out, attr);
    }
    out.extend(ser_gt(&kem.c1));
    out.extend(ser_g2(&kem.c2));
    out.extend(row_count.to_be_bytes());
    for row in &kem.rows {
        out.extend(ser_g1(&row.c_tau));
        out.extend(ser_g2(&row.d_tau));
    }
    out
}

fn oracle_shared_ciphertext(ct: &SharedCiphertext) -> Vec<u8> {
    let mut out = envelope(0x0A);
    out.extend(oracle_ct_body(
        &ct.meta,
        &ct.c_f,
        &ct.kem,
        ct.kem.rows.len() as u32,
    ));
    out.extend(ser_g1(&ct.sigma));
    out
}

fn oracle_update_key(upk: &UpdateKey) -> Vec<u8> {
    let mut out = envelope(0x0B);
    out.extend(ser_scalar_be(&upk.factor));
    out.extend(ser_g2(&upk.new_pk_m));
    out.extend(upk.epoch.to_be_bytes());
    out
}

fn oracle_store_manifest(m: &StoreManifest) -> Vec<u8> {
    let mut out = envelope(0x0C);
    out.extend(m.epoch.to_be_bytes());
    out.extend(ser_g2(&m.pk_m));
    out.extend((m.file_ids.len() as u32).to_be_bytes());
    for id in &m.file_ids {
        push_str(&mut out, id);
    }
    out
}

#[test]
fn independent_encoder_produces_identical_bytes() {
    for seed in [7u64, 8, 9] {
        for artifact in artifact_set(seed) {
            let expected = match &artifact {
                Artifact::PublicParams(x) => oracle_public_params(x),
                Artifact::UserKey(x) => oracle_user_key(x),
                Artifact::ManagerState(x) => oracle_manager_state(x),
                Artifact::SharedCiphertext(x) => oracle_shared_ciphertext(x),
                Artifact::UpdateKey(x) => oracle_update_key(x),
                Artifact::StoreManifest(x) => oracle_store_manifest(x),
                _ => continue,
            };
            assert_eq!(
                artifact.encode(),
                expected,
                "{:?} seed {seed}",
                artifact.kind()
            );
        }
    }
}

// ------------------------------------------------------ envelope errors

#[test]
fn envelope_validation() {
    let good = fixture_encodings()[1].clone(); // MasterKey

    let mut bad_magic = good.clone();
    bad_magic[0] ^= 0xFF;
    assert_eq!(decode_any(&bad_magic), Err(WireError::BadMagic));

    let mut bad_version = good.clone();
    bad_version[4] = 0x02;
    assert_eq!(decode_any(&bad_version), Err(WireError::BadVersion(0x02)));

    let mut bad_kind = good.clone();
    bad_kind[5] = 0xEE;
    assert_eq!(decode_any(&bad_kind), Err(WireError::UnknownKind(0xEE)));

    assert_eq!(
        decode_user_key(&good),
        Err(WireError::WrongKind {
            want: Kind::UserKey,
            got: Kind::MasterKey,
        })
    );

    let mut trailing = good.clone();
    trailing.push(0x00);
    assert_eq!(decode_any(&trailing), Err(WireError::TrailingBytes(1)));
}

#[test]
fn every_strict_prefix_is_truncation() {
    let full = fixture_encodings()[2].clone(); // UserKey
    for len in 0..full.len() {
        match decode_any(&full[..len]) {
            Err(WireError::Truncated { .. }) => {}
            other => panic!("prefix of {len} bytes gave {other:?}"),
        }
    }
}

// ---------------------------------------------- element/body rejection

#[test]
fn rejects_out_of_group_and_non_canonical_fields() {
    // A G1 slot filled with 0xFF cannot be a canonical point.
    let mut bad_point = fixture_encodings()[1].clone(); // MasterKey
    for b in &mut bad_point[6..6 + G1_LEN] {
        *b = 0xFF;
    }
    assert_eq!(
        decode_any(&bad_point),
        Err(WireError::NonCanonicalElement("g_alpha"))
    );

    // A scalar at or above the group order has no canonical encoding.
    let mut out = envelope(0x06);
    push_str(&mut out, "o1");
    out.extend([0xFF; SCALAR_LEN]); // x ≥ group order
    out.extend(ser_scalar_be(&Scalar::from(5u64)));
    assert_eq!(
        decode_any(&out),
        Err(WireError::NonCanonicalScalar("x"))
    );

    // Zero abscissa is structurally valid but semantically banned.
    let mut out = envelope(0x06);
    push_str(&mut out, "o1");
    out.extend([0x00; SCALAR_LEN]);
    out.extend(ser_scalar_be(&Scalar::from(5u64)));
    assert_eq!(
        decode_any(&out),
        Err(WireError::Malformed("share abscissa is zero"))
    );

    // Non-UTF-8 string data.
    let set = artifact_set(3);
    let Artifact::SignatureShare(sh) = &set[8] else {
        unreachable!()
    };
    let mut out = envelope(0x09);
    out.extend(2u32.to_be_bytes());
    out.extend([0xFF, 0xFE]);
    out.extend(ser_g1(&sh.sigma_t));
    assert_eq!(
        decode_any(&out),
        Err(WireError::Malformed("string is not UTF-8"))
    );
}

#[test]
fn rejects_semantic_violations() {
    let set = artifact_set(4);
    let Artifact::PublicParams(pk) = &set[0] else {
        unreachable!()
    };
    let Artifact::SharedCiphertext(ct) = &set[9] else {
        unreachable!()
    };
    let Artifact::UpdateKey(upk) = &set[10] else {
        unreachable!()
    };
    let Artifact::StoreManifest(manifest) = &set[11] else {
        unreachable!()
    };

    // Attribute table out of order.
    let mut out = envelope(0x01);
    out.extend(ser_gt(&pk.e_gg_alpha));
    out.extend(ser_g1(&pk.g_beta));
    out.extend(2u32.to_be_bytes());
    for name in ["b", "a"] {
        push_str(&mut out, name);
        out.extend(ser_g1(&pk.attr_elements[name]));
    }
    assert_eq!(
        decode_any(&out),
        Err(WireError::Malformed("attribute names out of order"))
    );

    // Identity blinding base.
    let mut out = envelope(0x01);
    out.extend(ser_gt(&Gt::zero()));
    out.extend(ser_g1(&pk.g_beta));
    out.extend(1u32.to_be_bytes());
    push_str(&mut out, "a");
    out.extend(ser_g1(&pk.attr_elements["a"]));
    assert_eq!(
        decode_any(&out),
        Err(WireError::Malformed("e_gg_alpha is the identity"))
    );

    // Row count disagreeing with the matrix.
    let mut out = envelope(0x0A);
    out.extend(oracle_ct_body(
        &ct.meta,
        &ct.c_f,
        &ct.kem,
        ct.kem.rows.len() as u32 + 1,
    ));
    out.extend(ser_g1(&ct.sigma));
    assert_eq!(
        decode_any(&out),
        Err(WireError::Malformed("row count does not match matrix"))
    );

    // Payload shorter than nonce + tag.
    let mut short = ct.clone();
    short.c_f = vec![0u8; 27];
    assert_eq!(
        decode_any(&encode_shared_ciphertext(&short)),
        Err(WireError::Malformed("payload shorter than AEAD envelope"))
    );

    // Empty file id.
    let mut anon = ct.clone();
    anon.meta.file_id.clear();
    assert_eq!(
        decode_any(&encode_shared_ciphertext(&anon)),
        Err(WireError::Malformed("file id is empty"))
    );

    // Zero update factor.
    let mut out = envelope(0x0B);
    out.extend([0x00; SCALAR_LEN]);
    out.extend(ser_g2(&upk.new_pk_m));
    out.extend(upk.epoch.to_be_bytes());
    assert_eq!(
        decode_any(&out),
        Err(WireError::Malformed("update factor is zero"))
    );

    // Manifest ids must be sorted and distinct.
    let mut unsorted = manifest.clone();
    unsorted.file_ids = names(&["f2", "f1"]);
    assert_eq!(
        decode_any(&encode_store_manifest(&unsorted)),
        Err(WireError::Malformed("file ids out of order"))
    );
    let mut dup = manifest.clone();
    dup.file_ids = names(&["f1", "f1"]);
    assert_eq!(
        decode_any(&encode_store_manifest(&dup)),
        Err(WireError::Malformed("file ids out of order"))
    );

    // Empty share matrix.
    let mut out = envelope(0x07);
    out.extend(0u32.to_be_bytes());
    out.extend(1u32.to_be_bytes());
    assert_eq!(
        decode_any(&out),
        Err(WireError::Malformed("share matrix is empty"))
    );

    // Empty rosters.
    let Artifact::ManagerPublic(mp) = &set[3] else {
        unreachable!()
    };
    let mut empty = mp.clone();
    empty.owners.clear();
    assert_eq!(
        decode_any(&encode_manager_public(&empty)),
        Err(WireError::Malformed("owner roster is empty"))
    );
}

// ------------------------------------------------------------ totality

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Arbitrary bytes never panic the decoder.
    #[test]
    fn decode_any_is_total_on_noise(bytes in proptest::collection::vec(any::<u8>(), 0..512)) {
        let _ = decode_any(&bytes);
    }

    /// Noise behind a well-formed envelope header never panics either.
    #[test]
    fn decode_any_is_total_behind_valid_header(
        kind in 1u8..=12,
        tail in proptest::collection::vec(any::<u8>(), 0..512),
    ) {
        let mut bytes = envelope(kind);
        bytes.extend(tail);
        let _ = decode_any(&bytes);
    }

    /// Single-byte corruption of a valid artifact either fails with a
    /// structured error or yields an artifact that re-encodes to the
    /// corrupted bytes exactly (decode accepts only canonical input).
    #[test]
    fn corrupted_artifacts_decode_canonically_or_fail(
        pick in any::<prop::sample::Index>(),
        pos in any::<prop::sample::Index>(),
        xor in 1u8..=255,
    ) {
        let encodings = fixture_encodings();
        let mut bytes = encodings[pick.index(encodings.len())].clone();
        let at = pos.index(bytes.len());
        bytes[at] ^= xor;
        if let Ok(artifact) = decode_any(&bytes) {
            prop_assert_eq!(artifact.encode(), bytes);
        }
    }
}
