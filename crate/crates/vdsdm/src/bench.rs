//! Cost measurement for every scheme algorithm: exact operation
//! counts, output sizes, and wall-clock timing sweeps.
//!
//! Each algorithm is benchmarked against the one parameter its cost
//! scales in — universe size `n_s`, user attribute count `n_u`,
//! policy leaf count `n_a`, or roster size `d`. A sweep runs the
//! algorithm over a value grid with a counting [`PairingSuite`] and
//! emits one [`BenchRow`] per `(value, rep)`, convertible to CSV with
//! the fixed header [`CSV_HEADER`].
//!
//! The counters record what the implementation actually does, wired
//! straight through [`PairingSuite`], so a reading is a measurement
//! rather than a formula. The expected readings are nevertheless
//! closed-form and exposed as [`expected_counts`]:
//!
//! | algorithm  | param | pairings  | exp (G₁/G₂) | exp (G_T) |
//! |------------|-------|-----------|-------------|-----------|
//! | setup      | n_s   | 1         | 2           | 0         |
//! | keygen-du  | n_u   | 0         | n_u + 2     | 0         |
//! | keygen-dm  | d     | 0         | 1           | 0         |
//! | encrypt    | n_a   | 0         | 3·n_a + 1   | 1         |
//! | sign       | d     | 0         | 1           | 0         |
//! | aggregate  | d     | 0         | d           | 0         |
//! | verify     | n_a   | 2         | 0           | 0         |
//! | decrypt    | n_a   | 2·n_a + 1 | 0           | n_a       |
//! | update     | d     | 0         | 1           | 0         |
//!
//! Two readings deserve a caveat because they differ from the
//! single-exponentiation figure one might expect:
//!
//! - **setup** pays one pairing and two source-group exponentiations
//!   to precompute `e(g,g)^α` once; the pairing is part of setup, not
//!   of any later algorithm.
//! - **aggregate** is a Lagrange-weighted product over the roster, so
//!   it performs `d` exponentiations — per-owner, not constant. The
//!   counter reports that honestly rather than folding it into sign.
//!
//! Policy shape is fixed per algorithm so the sweeps isolate the
//! advertised parameter. The encrypt sweep uses a disjunction of
//! `n_a` fixed-width attribute names, which keeps every share-vector
//! row at width 1: ciphertext size is then *exactly* affine in `n_a`
//! (each leaf adds one matrix scalar, one row label, and one G₁+G₂
//! row). The decrypt sweep uses a conjunction instead, forcing the
//! reconstruction set to all `n_a` rows so pairing count and time
//! scale with the policy. Timing columns report what the host
//! measured and are for plotting; correctness assertions belong on
//! the count and byte columns, which are machine-independent.
//!
//! Sweeps are sequential by construction — one measurement at a time
//! on the calling thread. For stable timings, avoid running them
//! concurrently with other load.

use std::collections::BTreeSet;
use std::time::Instant;

use ark_std::rand::{CryptoRng, RngCore};
use thiserror::Error;

use crate::groupmath::{OpCounts, PairingSuite};
use crate::policy::PolicyAst;
use crate::scheme::{self, CtMeta, SchemeError};
use crate::wire;

/// Largest parameter value a sweep will accept. Keeps grids inside
/// the policy arity limit and a single measurement under a second.
pub const MAX_VALUE: usize = 200;

/// Largest repetition count a sweep will accept.
pub const MAX_REPS: usize = 1000;

/// Header line for the CSV emitted by [`to_csv`], matching
/// [`BenchRow::csv_line`] field for field.
pub const CSV_HEADER: &str = "algo,param,value,rep,bytes,nanos,pairings,exp_g,exp_gt";

/// Fixed plaintext used by the encrypt/decrypt measurements, so the
/// symmetric layer contributes the same tiny constant to every row.
const BENCH_FILE: &[u8] = b"0123456789abcdef0123456789abcdef";

/// The benchmarkable algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchAlgo {
    /// System setup over a universe of `n_s` attributes.
    Setup,
    /// User key issue for `n_u` held attributes.
    KeygenDu,
    /// Manager key generation and share dealing for a roster of `d`.
    KeygenDm,
    /// Encryption under a width-1 disjunction of `n_a` leaves.
    Encrypt,
    /// One owner's signature share (roster of `d` for context).
    Sign,
    /// Aggregation of all `d` owner shares.
    Aggregate,
    /// Aggregate-signature verification (ciphertext has `n_a` leaves).
    Verify,
    /// Decryption of a conjunction over `n_a` leaves (all rows used).
    Decrypt,
    /// Roster re-key producing a fresh manager key and update key.
    Update,
}

impl BenchAlgo {
    /// Every algorithm, in sweep-report order.
    pub const ALL: [BenchAlgo; 9] = [
        BenchAlgo::Setup,
        BenchAlgo::KeygenDu,
        BenchAlgo::KeygenDm,
        BenchAlgo::Encrypt,
        BenchAlgo::Sign,
        BenchAlgo::Aggregate,
        BenchAlgo::Verify,
        BenchAlgo::Decrypt,
        BenchAlgo::Update,
    ];

    /// Stable name used in CSV rows and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            BenchAlgo::Setup => "setup",
            BenchAlgo::KeygenDu => "keygen-du",
            BenchAlgo::KeygenDm => "keygen-dm",
            BenchAlgo::Encrypt => "encrypt",
            BenchAlgo::Sign => "sign",
            BenchAlgo::Aggregate => "aggregate",
            BenchAlgo::Verify => "verify",
            BenchAlgo::Decrypt => "decrypt",
            BenchAlgo::Update => "update",
        }
    }

    /// The parameter this algorithm's sweep varies.
    pub fn param(self) -> &'static str {
        match self {
            BenchAlgo::Setup => "n_s",
            BenchAlgo::KeygenDu => "n_u",
            BenchAlgo::KeygenDm => "d",
            BenchAlgo::Encrypt => "n_a",
            BenchAlgo::Sign => "d",
            BenchAlgo::Aggregate => "d",
            BenchAlgo::Verify => "n_a",
            BenchAlgo::Decrypt => "n_a",
            BenchAlgo::Update => "d",
        }
    }

    /// Inverse of [`BenchAlgo::name`].
    pub fn from_name(name: &str) -> Option<BenchAlgo> {
        BenchAlgo::ALL.into_iter().find(|a| a.name() == name)
    }
}

/// What a sweep measures: `algo` at `param = value`, repetition
/// `rep`, with the encoded output size, elapsed wall-clock time, and
/// the operation counters for that single run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRow {
    pub algo: &'static str,
    pub param: &'static str,
    pub value: usize,
    pub rep: usize,
    pub bytes: usize,
    pub nanos: u128,
    pub counts: OpCounts,
}

impl BenchRow {
    /// One CSV record, fields ordered as in [`CSV_HEADER`].
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.algo,
            self.param,
            self.value,
            self.rep,
            self.bytes,
            self.nanos,
            self.counts.pairings,
            self.counts.exp_g,
            self.counts.exp_gt,
        )
    }
}

/// A sweep grid: run `algo` at `min, min+step, …, ≤ max`, `reps`
/// times per value.
#[derive(Debug, Clone, Copy)]
pub struct SweepSpec {
    pub algo: BenchAlgo,
    pub min: usize,
    pub max: usize,
    pub step: usize,
    pub reps: usize,
}

/// A single measurement before it is tagged with its grid position.
#[derive(Debug, Clone, Copy)]
pub struct Measurement {
    /// Encoded size of the algorithm's primary output (0 for verify,
    /// which produces only a bit).
    pub bytes: usize,
    /// Wall-clock time for the algorithm call alone — context
    /// construction and encoding are outside the clock.
    pub nanos: u128,
    /// Counter readings for the algorithm call alone.
    pub counts: OpCounts,
}

/// Why a measurement or sweep could not run.
#[derive(Debug, Error)]
pub enum BenchError {
    /// The requested grid is empty or out of bounds.
    #[error("invalid sweep grid: {0}")]
    Grid(&'static str),
    /// A scheme call failed. Valid grids never trigger this.
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

/// The counter readings [`measure`] must produce for `algo` at the
/// given parameter value — the closed forms from the module table.
pub fn expected_counts(algo: BenchAlgo, value: usize) -> OpCounts {
    let v = value as u64;
    match algo {
        BenchAlgo::Setup => OpCounts { pairings: 1, exp_g: 2, exp_gt: 0 },
        BenchAlgo::KeygenDu => OpCounts { pairings: 0, exp_g: v + 2, exp_gt: 0 },
        BenchAlgo::KeygenDm => OpCounts { pairings: 0, exp_g: 1, exp_gt: 0 },
        BenchAlgo::Encrypt => OpCounts { pairings: 0, exp_g: 3 * v + 1, exp_gt: 1 },
        BenchAlgo::Sign => OpCounts { pairings: 0, exp_g: 1, exp_gt: 0 },
        BenchAlgo::Aggregate => OpCounts { pairings: 0, exp_g: v, exp_gt: 0 },
        BenchAlgo::Verify => OpCounts { pairings: 2, exp_g: 0, exp_gt: 0 },
        BenchAlgo::Decrypt => OpCounts { pairings: 2 * v + 1, exp_g: 0, exp_gt: v },
        BenchAlgo::Update => OpCounts { pairings: 0, exp_g: 1, exp_gt: 0 },
    }
}

/// `n` fixed-width attribute names. Constant name length keeps the
/// per-leaf ciphertext overhead identical, so encrypt's byte column
/// is exactly affine in the leaf count.
fn attr_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("a{i:03}")).collect()
}

/// `n` fixed-width owner names.
fn owner_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("o{i:03}")).collect()
}

/// Disjunction over the given attributes (a single leaf for one).
/// Compiles to one width-1 share-vector row per attribute.
fn or_chain(attrs: &[String]) -> PolicyAst {
    let leaves: Vec<PolicyAst> = attrs.iter().map(PolicyAst::leaf).collect();
    match leaves.len() {
        1 => leaves.into_iter().next().expect("one leaf"),
        _ => PolicyAst::Or(leaves),
    }
}

/// Conjunction over the given attributes (a single leaf for one).
/// Every row is needed for reconstruction, so decryption touches all
/// `n` rows.
fn and_chain(attrs: &[String]) -> PolicyAst {
    let leaves: Vec<PolicyAst> = attrs.iter().map(PolicyAst::leaf).collect();
    match leaves.len() {
        1 => leaves.into_iter().next().expect("one leaf"),
        _ => PolicyAst::And(leaves),
    }
}

fn bench_meta() -> CtMeta {
    CtMeta { file_id: "bench".to_string(), epoch: 1 }
}

/// Run `algo` once at `param = value`: build the context it needs
/// with a counting suite, zero the counters, time the call, and
/// report counters plus encoded output size.
pub fn measure<R: RngCore + CryptoRng>(
    algo: BenchAlgo,
    value: usize,
    rng: &mut R,
) -> Result<Measurement, BenchError> {
    if value == 0 || value > MAX_VALUE {
        return Err(BenchError::Grid("value out of range"));
    }
    let suite = PairingSuite::counted();
    match algo {
        BenchAlgo::Setup => {
            let universe = attr_names(value);
            let started = Instant::now();
            let (pk, _) = scheme::setup(suite, &universe, rng)?;
            let nanos = started.elapsed().as_nanos();
            Ok(Measurement {
                bytes: wire::encode_public_params(&pk).len(),
                nanos,
                counts: pk.suite.counts(),
            })
        }
        BenchAlgo::KeygenDu => {
            let universe = attr_names(value);
            let (pk, msk) = scheme::setup(suite, &universe, rng)?;
            let attrs: BTreeSet<String> = universe.into_iter().collect();
            pk.suite.reset_counts();
            let started = Instant::now();
            let key = scheme::keygen_du(&pk, &msk, &attrs, rng)?;
            let nanos = started.elapsed().as_nanos();
            Ok(Measurement {
                bytes: wire::encode_user_key(&key).len(),
                nanos,
                counts: pk.suite.counts(),
            })
        }
        BenchAlgo::KeygenDm => {
            let (pk, _) = scheme::setup(suite, &attr_names(1), rng)?;
            let owners = owner_names(value);
            pk.suite.reset_counts();
            let started = Instant::now();
            let st = scheme::keygen_dm(&pk, &owners, rng)?;
            let nanos = started.elapsed().as_nanos();
            Ok(Measurement {
                bytes: wire::encode_manager_state(&st).len(),
                nanos,
                counts: pk.suite.counts(),
            })
        }
        BenchAlgo::Encrypt => {
            let universe = attr_names(value);
            let (pk, _) = scheme::setup(suite, &universe, rng)?;
            let policy = or_chain(&universe);
            pk.suite.reset_counts();
            let started = Instant::now();
            let staged = scheme::encrypt(&pk, &policy, BENCH_FILE, bench_meta(), rng)?;
            let nanos = started.elapsed().as_nanos();
            Ok(Measurement {
                bytes: wire::encode_staged_ciphertext(&staged).len(),
                nanos,
                counts: pk.suite.counts(),
            })
        }
        BenchAlgo::Sign => {
            let (pk, _) = scheme::setup(suite, &attr_names(1), rng)?;
            let owners = owner_names(value);
            let st = scheme::keygen_dm(&pk, &owners, rng)?;
            let policy = or_chain(&attr_names(1));
            let staged = scheme::encrypt(&pk, &policy, BENCH_FILE, bench_meta(), rng)?;
            let share = st.share_of(&owners[0]).expect("dealt share").clone();
            pk.suite.reset_counts();
            let started = Instant::now();
            let sig = scheme::sign_share(&pk, &staged.c_f, &owners[0], &share);
            let nanos = started.elapsed().as_nanos();
            Ok(Measurement {
                bytes: wire::encode_signature_share(&sig).len(),
                nanos,
                counts: pk.suite.counts(),
            })
        }
        BenchAlgo::Aggregate => {
            let (pk, _) = scheme::setup(suite, &attr_names(1), rng)?;
            let owners = owner_names(value);
            let st = scheme::keygen_dm(&pk, &owners, rng)?;
            let policy = or_chain(&attr_names(1));
            let staged = scheme::encrypt(&pk, &policy, BENCH_FILE, bench_meta(), rng)?;
            let shares: Vec<_> = owners
                .iter()
                .map(|o| {
                    let sh = st.share_of(o).expect("dealt share");
                    scheme::sign_share(&pk, &staged.c_f, o, sh)
                })
                .collect();
            pk.suite.reset_counts();
            let started = Instant::now();
            let _sigma = st.aggregate(&pk, &shares)?;
            let nanos = started.elapsed().as_nanos();
            Ok(Measurement {
                bytes: wire::G1_LEN,
                nanos,
                counts: pk.suite.counts(),
            })
        }
        BenchAlgo::Verify => {
            let universe = attr_names(value);
            let (pk, _) = scheme::setup(suite, &universe, rng)?;
            let st = scheme::keygen_dm(&pk, &owner_names(1), rng)?;
            let policy = or_chain(&universe);
            let staged = scheme::encrypt(&pk, &policy, BENCH_FILE, bench_meta(), rng)?;
            let sig = scheme::sign_share(&pk, &staged.c_f, "o000", st.share_of("o000").unwrap());
            let sigma = st.aggregate(&pk, &[sig])?;
            let ct = staged.with_signature(sigma);
            pk.suite.reset_counts();
            let started = Instant::now();
            let ok = scheme::verify(&pk, &ct, &st.pk_m);
            let nanos = started.elapsed().as_nanos();
            assert!(ok, "benchmark ciphertext must verify");
            Ok(Measurement { bytes: 0, nanos, counts: pk.suite.counts() })
        }
        BenchAlgo::Decrypt => {
            let universe = attr_names(value);
            let (pk, msk) = scheme::setup(suite, &universe, rng)?;
            let attrs: BTreeSet<String> = universe.iter().cloned().collect();
            let key = scheme::keygen_du(&pk, &msk, &attrs, rng)?;
            let st = scheme::keygen_dm(&pk, &owner_names(1), rng)?;
            let policy = and_chain(&universe);
            let staged = scheme::encrypt(&pk, &policy, BENCH_FILE, bench_meta(), rng)?;
            let sig = scheme::sign_share(&pk, &staged.c_f, "o000", st.share_of("o000").unwrap());
            let sigma = st.aggregate(&pk, &[sig])?;
            let ct = staged.with_signature(sigma);
            pk.suite.reset_counts();
            let started = Instant::now();
            let file = scheme::decrypt(&pk, &ct, &key)?;
            let nanos = started.elapsed().as_nanos();
            Ok(Measurement {
                bytes: file.len(),
                nanos,
                counts: pk.suite.counts(),
            })
        }
        BenchAlgo::Update => {
            let (pk, _) = scheme::setup(suite, &attr_names(1), rng)?;
            let st = scheme::keygen_dm(&pk, &owner_names(value), rng)?;
            pk.suite.reset_counts();
            let started = Instant::now();
            let (_next, upk) = scheme::update_owners(&pk, &st, &[], &[], rng)?;
            let nanos = started.elapsed().as_nanos();
            Ok(Measurement {
                bytes: wire::encode_update_key(&upk).len(),
                nanos,
                counts: pk.suite.counts(),
            })
        }
    }
}

/// Run a full sweep: every grid value, `reps` measurements each, one
/// row per measurement, values ascending and reps in order.
pub fn bench_sweep<R: RngCore + CryptoRng>(
    spec: &SweepSpec,
    rng: &mut R,
) -> Result<Vec<BenchRow>, BenchError> {
    if spec.min == 0 {
        return Err(BenchError::Grid("min must be at least 1"));
    }
    if spec.min > spec.max {
        return Err(BenchError::Grid("min must not exceed max"));
    }
    if spec.max > MAX_VALUE {
        return Err(BenchError::Grid("max exceeds the supported range"));
    }
    if spec.step == 0 {
        return Err(BenchError::Grid("step must be at least 1"));
    }
    if spec.reps == 0 {
        return Err(BenchError::Grid("reps must be at least 1"));
    }
    if spec.reps > MAX_REPS {
        return Err(BenchError::Grid("reps exceeds the supported range"));
    }
    let mut rows = Vec::new();
    for value in (spec.min..=spec.max).step_by(spec.step) {
        for rep in 0..spec.reps {
            let m = measure(spec.algo, value, rng)?;
            rows.push(BenchRow {
                algo: spec.algo.name(),
                param: spec.algo.param(),
                value,
                rep,
                bytes: m.bytes,
                nanos: m.nanos,
                counts: m.counts,
            });
        }
    }
    Ok(rows)
}

/// Render rows as a CSV document: [`CSV_HEADER`], then one line per
/// row, trailing newline included.
pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

/// Collapse rows to `(value, mean of field)` points, values
/// ascending — the input for [`linear_fit`] when reps > 1.
pub fn series(rows: &[BenchRow], field: impl Fn(&BenchRow) -> f64) -> Vec<(f64, f64)> {
    let mut sums: std::collections::BTreeMap<usize, (f64, usize)> = Default::default();
    for row in rows {
        let entry = sums.entry(row.value).or_insert((0.0, 0));
        entry.0 += field(row);
        entry.1 += 1;
    }
    sums.into_iter()
        .map(|(value, (sum, n))| (value as f64, sum / n as f64))
        .collect()
}

/// An ordinary least-squares line with its coefficient of
/// determination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// 1 − SS_res/SS_tot; 1.0 exactly when the points are collinear
    /// (including the horizontal case, which the line fits exactly).
    pub r2: f64,
}

/// Least-squares line through the points. `None` when there are
/// fewer than two points or the x values do not vary.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<LinearFit> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let r2 = if ss_tot == 0.0 {
        // All y equal: the horizontal fit is exact.
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Some(LinearFit { slope, intercept, r2 })
}
