//! Linear secret-sharing programs compiled from policy ASTs, secret
//! sharing along a program, and reconstruction coefficients.

use ark_ff::{Field, UniformRand, Zero};
use ark_std::rand::{CryptoRng, RngCore};

use std::collections::BTreeSet;

use super::{PolicyAst, PolicyError};
use crate::groupmath::Scalar;

/// A monotone span program: matrix `M` over the scalar field together
/// with the map `ρ` from rows to attribute names. Sharing a secret `s`
/// picks a random vector `v = (s, v₂, …, v_q)` and publishes
/// `λ_τ = M_τ · v` per row; rows whose attributes are held reconstruct
/// `s` iff they span the target vector `(1, 0, …, 0)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LsssProgram {
    /// One row per policy leaf, in leaf order; width is the sharing
    /// dimension `q` (column 0 carries the secret).
    pub matrix: Vec<Vec<Scalar>>,
    /// Attribute labeling each row.
    pub rho: Vec<String>,
}

impl LsssProgram {
    /// Number of rows (= policy leaves).
    pub fn rows(&self) -> usize {
        self.matrix.len()
    }

    /// Sharing dimension `q`.
    pub fn width(&self) -> usize {
        self.matrix.first().map(Vec::len).unwrap_or(0)
    }
}

/// The published per-row shares `λ_τ = M_τ · v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShareVector {
    pub lambda: Vec<Scalar>,
}

/// Per-row coefficients `ω` with `Σ_τ ω_τ · λ_τ = s`. One entry per
/// row whose attribute is held (rows the solver did not need carry a
/// zero coefficient); rows of unheld attributes are not listed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReconstructionCoeffs {
    /// `(row index, coefficient)` pairs, strictly increasing by row.
    pub omega: Vec<(usize, Scalar)>,
}

/// Compile a policy into an LSSS program.
///
/// Or-gates replicate the parent vector to every branch; And-gates
/// split it additively along a chain of fresh columns; a `k`-of-`m`
/// gate extends the parent vector with `k-1` fresh columns and hands
/// branch `i` the Vandermonde row `(i¹, …, i^{k-1})` over them, so any
/// `k` branches interpolate the parent share and fewer see only
/// uniformly random values.
pub fn compile_lsss(ast: &PolicyAst) -> Result<LsssProgram, PolicyError> {
    ast.validate(&super::PolicyLimits::default())?;
    let mut b = Builder {
        rows: Vec::new(),
        next_col: 1,
    };
    b.assign(ast, vec![(0, Scalar::from(1u64))]);
    let width = b.next_col;
    let mut matrix = Vec::with_capacity(b.rows.len());
    let mut rho = Vec::with_capacity(b.rows.len());
    for (sparse, attr) in b.rows {
        let mut row = vec![Scalar::zero(); width];
        for (col, val) in sparse {
            row[col] = val;
        }
        matrix.push(row);
        rho.push(attr);
    }
    Ok(LsssProgram { matrix, rho })
}

struct Builder {
    rows: Vec<(Vec<(usize, Scalar)>, String)>,
    next_col: usize,
}

impl Builder {
    fn fresh_col(&mut self) -> usize {
        let c = self.next_col;
        self.next_col += 1;
        c
    }

    fn assign(&mut self, node: &PolicyAst, vec: Vec<(usize, Scalar)>) {
        match node {
            PolicyAst::Leaf(attr) => self.rows.push((vec, attr.clone())),
            PolicyAst::Or(children) => {
                for child in children {
                    self.assign(child, vec.clone());
                }
            }
            PolicyAst::And(children) => {
                // v = (v + e_c1) + (-e_c1 + e_c2) + … + (-e_c{n-1}):
                // all branches sum back to v, any proper subset leaves
                // a fresh column unbalanced.
                let mut carry = vec;
                let last = children.len() - 1;
                for (i, child) in children.iter().enumerate() {
                    if i == last {
                        self.assign(child, carry);
                        break;
                    }
                    let col = self.fresh_col();
                    let mut row = carry.clone();
                    row.push((col, Scalar::from(1u64)));
                    self.assign(child, row);
                    carry = vec![(col, -Scalar::from(1u64))];
                }
            }
            PolicyAst::Threshold { k, children } => {
                if *k == 1 {
                    for child in children {
                        self.assign(child, vec.clone());
                    }
                    return;
                }
                let cols: Vec<usize> = (0..k - 1).map(|_| self.fresh_col()).collect();
                for (i, child) in children.iter().enumerate() {
                    let x = Scalar::from((i + 1) as u64);
                    let mut row = vec.clone();
                    let mut power = x;
                    for &col in &cols {
                        row.push((col, power));
                        power *= x;
                    }
                    self.assign(child, row);
                }
            }
        }
    }
}

/// Deterministic sharing along an explicit vector `v` (length must be
/// the program width; `v[0]` is the secret).
pub fn share_with_vector(prog: &LsssProgram, v: &[Scalar]) -> Result<ShareVector, PolicyError> {
    if v.len() != prog.width() {
        return Err(PolicyError::BadVectorLength {
            got: v.len(),
            want: prog.width(),
        });
    }
    let lambda = prog
        .matrix
        .iter()
        .map(|row| row.iter().zip(v).map(|(m, v)| *m * v).sum())
        .collect();
    Ok(ShareVector { lambda })
}

/// Share `secret` along the program with fresh random hiding
/// coordinates.
pub fn share_secret<R: RngCore + CryptoRng>(
    prog: &LsssProgram,
    secret: &Scalar,
    rng: &mut R,
) -> ShareVector {
    let mut v = Vec::with_capacity(prog.width());
    v.push(*secret);
    for _ in 1..prog.width() {
        v.push(Scalar::rand(rng));
    }
    share_with_vector(prog, &v).expect("vector built to width")
}

/// Coefficients reconstructing the secret from the rows labeled by
/// `attrs`, or `None` if those rows do not span the target vector
/// (the attribute set does not satisfy the policy).
///
/// Deterministic: Gaussian elimination with first-nonzero pivoting,
/// free variables set to zero — the same satisfying set always yields
/// the same coefficients.
pub fn reconstruction_coeffs(
    prog: &LsssProgram,
    attrs: &BTreeSet<String>,
) -> Option<ReconstructionCoeffs> {
    let live: Vec<usize> = (0..prog.rows())
        .filter(|&r| attrs.contains(&prog.rho[r]))
        .collect();
    if live.is_empty() {
        return None;
    }
    let q = prog.width();
    // Solve Mᵀ_I · ω = (1, 0, …, 0): unknowns are one ω per live row.
    let cols = live.len();
    let mut aug: Vec<Vec<Scalar>> = (0..q)
        .map(|coord| {
            let mut row: Vec<Scalar> = live
                .iter()
                .map(|&r| prog.matrix[r][coord])
                .collect();
            row.push(if coord == 0 {
                Scalar::from(1u64)
            } else {
                Scalar::zero()
            });
            row
        })
        .collect();

    let mut pivot_of_col: Vec<Option<usize>> = vec![None; cols];
    let mut pivot_row = 0;
    for col in 0..cols {
        let Some(found) = (pivot_row..q).find(|&r| !aug[r][col].is_zero()) else {
            continue;
        };
        aug.swap(pivot_row, found);
        let inv = aug[pivot_row][col]
            .inverse()
            .expect("pivot entry is nonzero");
        for entry in aug[pivot_row].iter_mut() {
            *entry *= inv;
        }
        for r in 0..q {
            if r != pivot_row && !aug[r][col].is_zero() {
                let factor = aug[r][col];
                for c in 0..=cols {
                    let sub = factor * aug[pivot_row][c];
                    aug[r][c] -= sub;
                }
            }
        }
        pivot_of_col[col] = Some(pivot_row);
        pivot_row += 1;
        if pivot_row == q {
            break;
        }
    }
    // Inconsistent system: some remaining row reads 0 = nonzero.
    for r in pivot_row..q {
        if !aug[r][cols].is_zero() {
            return None;
        }
    }
    let mut omega = Vec::new();
    for (col, pivot) in pivot_of_col.iter().enumerate() {
        let value = match pivot {
            Some(r) => aug[*r][cols],
            None => Scalar::zero(), // free variable
        };
        omega.push((live[col], value));
    }
    Some(ReconstructionCoeffs { omega })
}

impl ReconstructionCoeffs {
    /// Apply the coefficients to published shares: `Σ ω_τ · λ_τ`.
    pub fn reconstruct(&self, shares: &ShareVector) -> Option<Scalar> {
        let mut acc = Scalar::zero();
        for (row, w) in &self.omega {
            acc += *w * *shares.lambda.get(*row)?;
        }
        Some(acc)
    }
}
