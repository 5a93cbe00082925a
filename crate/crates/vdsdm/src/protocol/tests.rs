use std::collections::BTreeSet;
use std::fs;

use ark_std::rand::SeedableRng;
use proptest::prelude::*;
use rand_chacha::ChaCha20Rng;
use tempfile::TempDir;

use super::*;
use crate::policy::parse_policy;
use crate::scheme::SharedCiphertext;

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

// ------------------------------------------------------------- store

struct StoreFixture {
    pk: PublicParams,
    manager: ManagerState,
    rng: ChaCha20Rng,
}

impl StoreFixture {
    fn new(seed: u64) -> StoreFixture {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (pk, _) = setup(PairingSuite::new(), &names(&["a", "b"]), &mut rng).unwrap();
        let manager = keygen_dm(&pk, &names(&["o1", "o2", "o3"]), &mut rng).unwrap();
        StoreFixture { pk, manager, rng }
    }

    fn make_ct(&mut self, id: &str) -> SharedCiphertext {
        let policy = parse_policy("a").unwrap();
        let staged = encrypt(
            &self.pk,
            &policy,
            format!("file {id}").as_bytes(),
            CtMeta {
                file_id: id.to_string(),
                epoch: self.manager.epoch,
            },
            &mut self.rng,
        )
        .unwrap();
        let shares: Vec<SignatureShare> = self
            .manager
            .owners
            .iter()
            .map(|o| sign_share(&self.pk, &staged.c_f, o, self.manager.share_of(o).unwrap()))
            .collect();
        let sigma = self.manager.aggregate(&self.pk, &shares).unwrap();
        staged.with_signature(sigma)
    }
}

#[test]
fn store_round_trips_bytes_and_survives_reopen() {
    let mut fx = StoreFixture::new(1);
    let dir = TempDir::new().unwrap();
    let root = dir.path().join("store");
    let mut store = CspStore::create(&root, fx.manager.pk_m, fx.manager.epoch).unwrap();

    let ct = fx.make_ct("f1");
    store.store(&fx.pk, &ct).unwrap();
    assert_eq!(store.ids(), ["f1".to_string()]);
    assert_eq!(
        store.fetch_bytes("f1").unwrap(),
        crate::wire::encode_shared_ciphertext(&ct)
    );
    assert_eq!(store.fetch("f1").unwrap(), ct);
    assert!(store.verify_all(&fx.pk).unwrap());
    assert!(!root.join("manifest.vdsm.tmp").exists());

    // A reopened store sees the same manifest and entries.
    let reopened = CspStore::open(&root).unwrap();
    assert_eq!(reopened.manifest(), store.manifest());
    assert_eq!(reopened.fetch("f1").unwrap(), ct);

    assert!(matches!(
        CspStore::create(&root, fx.manager.pk_m, 1),
        Err(StoreError::AlreadyExists(_))
    ));
}

#[test]
fn store_rejects_bad_inserts() {
    let mut fx = StoreFixture::new(2);
    let dir = TempDir::new().unwrap();
    let mut store =
        CspStore::create(dir.path(), fx.manager.pk_m, fx.manager.epoch).unwrap();

    let ct = fx.make_ct("f1");
    store.store(&fx.pk, &ct).unwrap();
    assert!(matches!(
        store.store(&fx.pk, &ct),
        Err(StoreError::DuplicateEntry(id)) if id == "f1"
    ));

    let mut tampered = fx.make_ct("f2");
    tampered.c_f[0] ^= 0x01;
    assert!(matches!(
        store.store(&fx.pk, &tampered),
        Err(StoreError::BadSignature(id)) if id == "f2"
    ));

    let mut stale = fx.make_ct("f3");
    stale.meta.epoch = 9;
    assert!(matches!(
        store.store(&fx.pk, &stale),
        Err(StoreError::EpochMismatch { entry: 9, store: 1 })
    ));

    assert!(matches!(
        store.fetch("missing"),
        Err(StoreError::NotFound(_))
    ));
    // Failed inserts leave the store intact.
    assert_eq!(store.ids(), ["f1".to_string()]);
    assert!(store.verify_all(&fx.pk).unwrap());
}

#[test]
fn update_re_signs_every_entry_and_rejects_replay() {
    let mut fx = StoreFixture::new(3);
    let dir = TempDir::new().unwrap();
    let mut store =
        CspStore::create(dir.path(), fx.manager.pk_m, fx.manager.epoch).unwrap();
    for id in ["f1", "f2", "f3"] {
        let ct = fx.make_ct(id);
        store.store(&fx.pk, &ct).unwrap();
    }

    let before = store.fetch("f2").unwrap();
    let (next, upk) =
        update_owners(&fx.pk, &fx.manager, &names(&["o4"]), &[], &mut fx.rng).unwrap();
    store.apply_update(&fx.pk, &upk).unwrap();

    assert_eq!(store.manifest().epoch, 2);
    assert_eq!(store.manifest().pk_m, next.pk_m);
    assert!(store.verify_all(&fx.pk).unwrap());
    let after = store.fetch("f2").unwrap();
    assert_eq!(after.meta.epoch, 2);
    assert_ne!(after.sigma, before.sigma);
    assert!(crate::scheme::verify(&fx.pk, &after, &next.pk_m));
    assert!(!crate::scheme::verify(&fx.pk, &before, &next.pk_m));

    // Replay (same epoch) and gaps are both stale.
    assert!(matches!(
        store.apply_update(&fx.pk, &upk),
        Err(StoreError::StaleUpdate { got: 2, want: 3 })
    ));
    let mut skipping = upk.clone();
    skipping.epoch = 4;
    assert!(matches!(
        store.apply_update(&fx.pk, &skipping),
        Err(StoreError::StaleUpdate { got: 4, want: 3 })
    ));
    assert_eq!(store.manifest().epoch, 2);
    assert!(store.verify_all(&fx.pk).unwrap());
    fx.manager = next;
}

#[test]
fn verify_all_detects_disk_corruption() {
    let mut fx = StoreFixture::new(4);
    let dir = TempDir::new().unwrap();
    let mut store =
        CspStore::create(dir.path(), fx.manager.pk_m, fx.manager.epoch).unwrap();
    let ct = fx.make_ct("f1");
    store.store(&fx.pk, &ct).unwrap();

    let entry = dir
        .path()
        .join("entries")
        .join(format!("{}.vdsm", hex::encode("f1")));
    let mut bytes = fs::read(&entry).unwrap();
    let at = bytes.len() / 2;
    bytes[at] ^= 0x01;
    fs::write(&entry, &bytes).unwrap();
    assert!(!store.verify_all(&fx.pk).unwrap());

    fs::remove_file(&entry).unwrap();
    assert!(!store.verify_all(&fx.pk).unwrap());
}

// ------------------------------------------------------------ scripts

#[test]
fn parses_full_grammar() {
    let text = r#"
# a comment
universe a b c

owners o1 o2
user u1 attrs=a,b
user u2
add_file f1 policy="a AND (b OR c)" content=00ff10
user_search u1 f1 expect=ok
owner_join o3
owner_leave o1
tamper f1 17
user_search u2 f1 expect=verify_fail
"#;
    let script = parse_scenario(text).unwrap();
    assert_eq!(script.universe, names(&["a", "b", "c"]));
    assert_eq!(script.owners, names(&["o1", "o2"]));
    assert_eq!(script.lines.len(), 8);
    assert_eq!(
        script.lines[0].event,
        ScriptEvent::DeclareUser {
            name: "u1".into(),
            attrs: ["a", "b"].iter().map(|s| s.to_string()).collect(),
        }
    );
    assert_eq!(
        script.lines[1].event,
        ScriptEvent::DeclareUser {
            name: "u2".into(),
            attrs: BTreeSet::new(),
        }
    );
    match &script.lines[2].event {
        ScriptEvent::AddFile { id, policy, content } => {
            assert_eq!(id, "f1");
            assert_eq!(policy.to_string(), "(a AND (b OR c))");
            assert_eq!(content.as_deref(), Some(&[0x00u8, 0xff, 0x10][..]));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(
        script.lines[3].event,
        ScriptEvent::UserSearch {
            user: "u1".into(),
            id: "f1".into(),
            expect: Some(Expectation::Ok),
        }
    );
    assert_eq!(script.lines[4].event, ScriptEvent::OwnerJoin("o3".into()));
    assert_eq!(script.lines[5].event, ScriptEvent::OwnerLeave("o1".into()));
    assert_eq!(
        script.lines[6].event,
        ScriptEvent::Tamper {
            id: "f1".into(),
            index: 17,
        }
    );
}

#[test]
fn rejects_invalid_scripts() {
    let assert_line = |text: &str, want_no: usize, want_msg: &str| {
        match parse_scenario(text) {
            Err(ScriptError::Line { no, msg }) => {
                assert_eq!(no, want_no, "wrong line for {want_msg:?}: {msg}");
                assert!(
                    msg.contains(want_msg),
                    "expected {want_msg:?} in {msg:?}"
                );
            }
            other => panic!("expected line error {want_msg:?}, got {other:?}"),
        }
    };

    assert!(matches!(
        parse_scenario("# nothing\n"),
        Err(ScriptError::Structure(_))
    ));
    assert_line("owners o1\n", 1, "follow the universe");
    assert_line("universe a\nuniverse b\n", 2, "declared twice");
    assert_line("universe a\nowners o1\nuser u1\nuser u1\n", 4, "declared twice");
    assert_line(
        "universe a\nowners o1\nuser u1 attrs=z\n",
        3,
        "not in universe",
    );
    assert_line(
        "universe a\nowners o1\nadd_file f1 policy=\"z\"\n",
        3,
        "not in universe",
    );
    assert_line(
        "universe a\nowners o1\nadd_file f1 policy=\"a AND\"\n",
        3,
        "bad policy",
    );
    assert_line("universe a\nowners o1\nadd_file f1\n", 3, "requires policy");
    assert_line(
        "universe a\nowners o1\nadd_file f1 policy=\"a\"\nadd_file f1 policy=\"a\"\n",
        4,
        "added twice",
    );
    assert_line(
        "universe a\nowners o1\nadd_file f1 policy=\"a\" content=xyz\n",
        3,
        "bad content hex",
    );
    assert_line(
        "universe a\nowners o1\nuser_search u9 f1\n",
        3,
        "unknown user",
    );
    assert_line(
        "universe a\nowners o1\nuser u1\nuser_search u1 f1 expect=maybe\n",
        4,
        "expect must be one of",
    );
    assert_line("universe a\nowners o1\nowner_join o1\n", 3, "already in the roster");
    assert_line("universe a\nowners o1\nowner_leave o9\n", 3, "not in the roster");
    assert_line("universe a\nowners o1\nowner_leave o1\n", 3, "would be empty");
    assert_line("universe a\nowners o1\ntamper f1 3\n", 3, "unknown file");
    assert_line(
        "universe a\nowners o1\nadd_file f1 policy=\"a AND b\n",
        3,
        "unterminated quote",
    );
    assert_line("universe a\nowners o1\nfrobnicate x\n", 3, "unknown statement");
    assert_line(
        "universe a\nowners o1\nuser u1 color=red\n",
        3,
        "unknown argument",
    );
}

// ------------------------------------------------------------ harness

fn run_text(text: &str, seed: u64) -> (Transcript, TempDir) {
    let script = parse_scenario(text).unwrap();
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let transcript = run_scenario(&script, &dir.path().join("store"), &mut rng).unwrap();
    (transcript, dir)
}

/// Structural sanity of any transcript: gap-free seq numbering, no
/// search result before its request, all owner signatures in before
/// each upload.
fn check_ordering(t: &Transcript) {
    for (i, m) in t.messages.iter().enumerate() {
        assert_eq!(m.seq, i as u64 + 1, "seq numbering must be gap-free");
    }
    let mut pending_searches = 0i64;
    for m in &t.messages {
        match m.kind {
            MessageKind::SearchRequest => pending_searches += 1,
            MessageKind::SearchResult => {
                pending_searches -= 1;
                assert!(pending_searches >= 0, "result #{} precedes request", m.seq);
            }
            _ => {}
        }
    }
    for m in &t.messages {
        if m.kind == MessageKind::UploadCiphertext {
            let requested = t
                .messages
                .iter()
                .filter(|x| x.kind == MessageKind::RequestSignature && x.seq < m.seq)
                .count();
            let submitted = t
                .messages
                .iter()
                .filter(|x| x.kind == MessageKind::SubmitSignature && x.seq < m.seq)
                .count();
            assert_eq!(
                requested, submitted,
                "upload #{} sent before all signatures arrived",
                m.seq
            );
        }
    }
}

const PIPELINE: &str = r#"
universe a b c
owners o1 o2 o3
user u1 attrs=a,b
add_file f1 policy="a AND b" content=00112233445566778899aabbccddeeff
user_search u1 f1 expect=ok
"#;

#[test]
fn pipeline_decrypts_for_authorized_user() {
    let (t, _dir) = run_text(PIPELINE, 7);
    assert!(t.all_expectations_met());
    assert!(t.all_stores_ok());
    check_ordering(&t);

    assert_eq!(t.events[1].outcome, Outcome::Stored);
    assert_eq!(t.events[2].outcome, Outcome::DecryptOk);
    assert!(t.events[2].decrypt_attempted);

    // The add_file cascade: one request and one submission per owner,
    // then exactly one upload.
    let (a, b) = t.events[1].seq_range.unwrap();
    let in_range: Vec<_> = t
        .messages
        .iter()
        .filter(|m| m.seq >= a && m.seq <= b)
        .collect();
    let count = |k: MessageKind| in_range.iter().filter(|m| m.kind == k).count();
    assert_eq!(count(MessageKind::RequestSignature), 3);
    assert_eq!(count(MessageKind::SubmitSignature), 3);
    assert_eq!(count(MessageKind::UploadCiphertext), 1);
}

#[test]
fn tampered_responses_fail_verification_before_decryption() {
    let text = r#"
universe a b
owners o1 o2
user u1 attrs=a,b
user u2
add_file f1 policy="a"
tamper f1 5
user_search u1 f1 expect=verify_fail
user_search u2 f1 expect=verify_fail
"#;
    let (t, dir) = run_text(text, 8);
    assert!(t.all_expectations_met(), "{}", t.render());
    // The durable store was never touched: the invariant holds even
    // while responses are corrupted.
    assert!(t.all_stores_ok());
    for ev in &t.events[4..6] {
        assert_eq!(ev.outcome, Outcome::VerifyFailed);
        assert!(!ev.decrypt_attempted, "no decryption after failed verify");
    }
    // Out-of-range tamper indices wrap instead of panicking.
    let text2 = r#"
universe a
owners o1
user u1 attrs=a
add_file f1 policy="a"
tamper f1 99999999
user_search u1 f1 expect=verify_fail
"#;
    let script = parse_scenario(text2).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let t2 = run_scenario(&script, &dir.path().join("second"), &mut rng).unwrap();
    assert!(t2.all_expectations_met(), "{}", t2.render());
}

#[test]
fn unauthorized_user_is_denied_after_verification() {
    let text = r#"
universe a b c
owners o1 o2
user u1 attrs=c
add_file f1 policy="a AND b"
user_search u1 f1 expect=denied
"#;
    let (t, _dir) = run_text(text, 10);
    assert!(t.all_expectations_met(), "{}", t.render());
    assert!(t.all_stores_ok());
    let ev = &t.events[2];
    assert_eq!(ev.outcome, Outcome::AccessDenied);
    // Verification passed; the policy, not integrity, blocked this user.
    assert!(ev.decrypt_attempted);
}

#[test]
fn searching_unknown_file_reports_not_found() {
    let text = r#"
universe a
owners o1
user u1 attrs=a
user_search u1 ghost expect=not_found
"#;
    let (t, _dir) = run_text(text, 11);
    assert!(t.all_expectations_met());
    let (a, b) = t.events[1].seq_range.unwrap();
    let kinds: Vec<MessageKind> = t
        .messages
        .iter()
        .filter(|m| m.seq >= a && m.seq <= b)
        .map(|m| m.kind)
        .collect();
    assert_eq!(kinds, [MessageKind::SearchRequest, MessageKind::Error]);
}

#[test]
fn churn_refreshes_store_without_third_party() {
    let text = r#"
universe a b
owners o1 o2
user u1 attrs=a
add_file f1 policy="a"
owner_join o3
user_search u1 f1 expect=ok
owner_leave o1
user_search u1 f1 expect=ok
"#;
    let (t, dir) = run_text(text, 12);
    assert!(t.all_expectations_met(), "{}", t.render());
    assert!(t.all_stores_ok());
    check_ordering(&t);
    assert_eq!(t.events[2].outcome, Outcome::RosterChanged { size: 3 });
    assert_eq!(t.events[4].outcome, Outcome::RosterChanged { size: 2 });

    // Owner churn involves only DM, owners, and CSP — never the TA.
    for ev in [&t.events[2], &t.events[4]] {
        let (a, b) = ev.seq_range.unwrap();
        for m in t.messages.iter().filter(|m| m.seq >= a && m.seq <= b) {
            assert_ne!(m.from, EntityId::Ta, "TA sent a message during churn");
            assert_ne!(m.to, EntityId::Ta, "TA received a message during churn");
        }
    }

    // The persisted store advanced two epochs and still verifies.
    let store = CspStore::open(&dir.path().join("store")).unwrap();
    assert_eq!(store.manifest().epoch, 3);
}

#[test]
fn seeded_runs_replay_identical_transcripts() {
    let (t1, _d1) = run_text(PIPELINE, 99);
    let (t2, _d2) = run_text(PIPELINE, 99);
    assert_eq!(t1, t2);
    let (t3, _d3) = run_text(PIPELINE, 100);
    assert_ne!(
        t1.messages.last().unwrap().payload,
        t3.messages.last().unwrap().payload,
        "different seeds produce different ciphertexts"
    );
}

#[test]
fn long_mixed_script_preserves_invariants() {
    let mut text = String::from("universe a b c d e\nowners o1 o2 o3\n");
    text.push_str("user u1 attrs=a,b\nuser u2 attrs=c\nuser u3 attrs=a,b,c,d\n");
    let policies = ["a", "a AND b", "b OR c", "2-of-(a, b, c)", "c AND d"];
    // Model of which users satisfy which policy, matching `satisfies`.
    let can_read = |user: &str, policy: &str| -> bool {
        let attrs: BTreeSet<String> = match user {
            "u1" => names(&["a", "b"]).into_iter().collect(),
            "u2" => names(&["c"]).into_iter().collect(),
            _ => names(&["a", "b", "c", "d"]).into_iter().collect(),
        };
        parse_policy(policy).unwrap().satisfies(&attrs)
    };

    let mut tampered: BTreeSet<usize> = BTreeSet::new();
    for i in 0..15 {
        text.push_str(&format!("add_file f{i} policy=\"{}\"\n", policies[i % 5]));
    }
    for i in [2usize, 7, 11] {
        text.push_str(&format!("tamper f{i} {}\n", i * 3));
        tampered.insert(i);
    }
    text.push_str("owner_join o4\nowner_leave o1\nowner_join o5\n");
    for i in 0..15 {
        for user in ["u1", "u2", "u3"] {
            let expect = if tampered.contains(&i) {
                "verify_fail"
            } else if can_read(user, policies[i % 5]) {
                "ok"
            } else {
                "denied"
            };
            text.push_str(&format!("user_search {user} f{i} expect={expect}\n"));
        }
    }
    text.push_str("user_search u1 nonesuch expect=not_found\n");

    let script = parse_scenario(&text).unwrap();
    assert!(script.lines.len() >= 50, "want a ≥50-event script");
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(42);
    let t = run_scenario(&script, &dir.path().join("store"), &mut rng).unwrap();
    assert!(t.all_expectations_met(), "{}", t.render());
    assert!(t.all_stores_ok());
    check_ordering(&t);
}

// ------------------------------------------------- random scripts

/// Deterministically expand raw choice tuples into a valid script,
/// tracking the model state needed to predict every search outcome.
fn build_random_script(choices: &[(u8, u8, u8)]) -> String {
    let mut text = String::from("universe a b c\nowners o1 o2\n");
    text.push_str("user u1 attrs=a,b\nuser u2 attrs=c\n");
    let policies = ["a", "a AND b", "b OR c", "2-of-(a, b, c)"];
    let user_attrs = |user: &str| -> BTreeSet<String> {
        match user {
            "u1" => names(&["a", "b"]).into_iter().collect(),
            _ => names(&["c"]).into_iter().collect(),
        }
    };

    let mut files: Vec<(String, usize, bool)> = Vec::new(); // id, policy idx, tampered
    let mut joinable = vec!["o3", "o4", "o5"];
    let mut leavable: Vec<String> = names(&["o1", "o2"]);
    let mut next_file = 0usize;

    for &(what, sel, aux) in choices {
        match what % 5 {
            0 => {
                let id = format!("f{next_file}");
                next_file += 1;
                let p = sel as usize % policies.len();
                text.push_str(&format!("add_file {id} policy=\"{}\"\n", policies[p]));
                files.push((id, p, false));
            }
            1 | 4 => {
                let user = if sel % 2 == 0 { "u1" } else { "u2" };
                if files.is_empty() || aux % 5 == 0 {
                    text.push_str(&format!("user_search {user} nF expect=not_found\n"));
                } else {
                    let (id, p, tampered) = &files[aux as usize % files.len()];
                    let expect = if *tampered {
                        "verify_fail"
                    } else if parse_policy(policies[*p])
                        .unwrap()
                        .satisfies(&user_attrs(user))
                    {
                        "ok"
                    } else {
                        "denied"
                    };
                    text.push_str(&format!("user_search {user} {id} expect={expect}\n"));
                }
            }
            2 => {
                if sel % 2 == 0 && !joinable.is_empty() {
                    let name = joinable.remove(0);
                    leavable.push(name.to_string());
                    text.push_str(&format!("owner_join {name}\n"));
                } else if leavable.len() > 1 {
                    let name = leavable.remove(sel as usize % leavable.len());
                    text.push_str(&format!("owner_leave {name}\n"));
                }
            }
            _ => {
                if !files.is_empty() {
                    let at = sel as usize % files.len();
                    files[at].2 = true;
                    text.push_str(&format!("tamper {} {aux}\n", files[at].0));
                }
            }
        }
    }
    text
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Whatever mix of events a script throws at the system, every
    /// predicted outcome matches and the store invariant holds after
    /// every event.
    #[test]
    fn random_scripts_meet_model_predictions(
        choices in proptest::collection::vec(any::<(u8, u8, u8)>(), 0..14),
        seed in any::<u64>(),
    ) {
        let text = build_random_script(&choices);
        let script = parse_scenario(&text).unwrap();
        let dir = TempDir::new().unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let t = run_scenario(&script, &dir.path().join("store"), &mut rng).unwrap();
        prop_assert!(t.all_expectations_met(), "{}", t.render());
        prop_assert!(t.all_stores_ok());
        check_ordering(&t);
    }
}
