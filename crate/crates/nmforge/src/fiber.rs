//! Finite-dimensional normed fibers and their duals.
//!
//! Supported norm families: `l^1`, `l^2`, `l^infinity`, their weighted
//! variants (coordinatewise scaling), and polyhedral norms given by a finite
//! spanning family of functionals, `|v| = max_j |<g_j, v>|`. Duality is
//! computed directly, with no Hahn-Banach step:
//!
//! * `l^1 <-> l^infinity`, `l^2` self-dual, weighted duals with reciprocal
//!   weights;
//! * the dual of a polyhedral norm is again polyhedral, generated by the
//!   vertices of the primal unit ball, which are enumerated exactly over the
//!   rationals (dimension at most 6).
//!
//! Every dual norm comes with an attainment vector: a concrete `v` with
//! `<w, v> = |w|' |v|`, kept rational by leaving `v` unnormalized.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::scalar::{fmt_rational, Rational, Scalar};
use num::traits::{One, Signed, Zero};

pub const MAX_POLYHEDRAL_DIM: usize = 6;

/// The exponent of an unweighted or weighted `l^p` fiber.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpExp {
    One,
    Two,
    Inf,
}

impl LpExp {
    pub fn conjugate(self) -> Self {
        match self {
            LpExp::One => LpExp::Inf,
            LpExp::Two => LpExp::Two,
            LpExp::Inf => LpExp::One,
        }
    }
}

impl std::fmt::Display for LpExp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LpExp::One => write!(f, "1"),
            LpExp::Two => write!(f, "2"),
            LpExp::Inf => write!(f, "inf"),
        }
    }
}

/// A finite-dimensional normed space in one of the supported families.
#[derive(Debug, Clone, PartialEq)]
pub enum FiberSpace {
    Lp {
        p: LpExp,
        dim: usize,
    },
    /// `|v| = l^p norm of (w_i v_i)`; all weights strictly positive.
    WeightedLp {
        p: LpExp,
        weights: Vec<Rational>,
    },
    /// `|v| = max_j |<g_j, v>|` for a spanning family `g_j`.
    Polyhedral {
        functionals: Vec<Vec<Rational>>,
        /// Vertices of the unit ball, enumerated once at construction.
        vertices: Vec<Vec<Rational>>,
    },
}

impl FiberSpace {
    pub fn lp(p: LpExp, dim: usize) -> Self {
        FiberSpace::Lp { p, dim }
    }

    pub fn weighted(p: LpExp, weights: Vec<Rational>) -> Result<Self> {
        for (i, w) in weights.iter().enumerate() {
            if !w.is_positive() {
                return Err(Error::BadNormWeight {
                    index: i,
                    weight: fmt_rational(w),
                });
            }
        }
        Ok(FiberSpace::WeightedLp { p, weights })
    }

    pub fn polyhedral(functionals: Vec<Vec<Rational>>) -> Result<Self> {
        let dim = functionals.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(Error::DegenerateNorm);
        }
        if dim > MAX_POLYHEDRAL_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        for g in &functionals {
            if g.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: g.len(),
                });
            }
        }
        if rank(&functionals) < dim {
            return Err(Error::DegenerateNorm);
        }
        let vertices = ball_vertices_of_polyhedral(&functionals, dim);
        Ok(FiberSpace::Polyhedral {
            functionals,
            vertices,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            FiberSpace::Lp { dim, .. } => *dim,
            FiberSpace::WeightedLp { weights, .. } => weights.len(),
            FiberSpace::Polyhedral { functionals, .. } => functionals[0].len(),
        }
    }

    fn check_dim(&self, v: &[Rational]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// The fiber norm. Exact except for an `l^2`-family norm whose sum of
    /// squares is not a perfect square.
    pub fn norm(&self, v: &[Rational]) -> Result<Scalar> {
        self.check_dim(v)?;
        Ok(match self {
            FiberSpace::Lp { p, .. } => lp_norm(*p, v),
            FiberSpace::WeightedLp { p, weights } => lp_norm(*p, &scale(v, weights)),
            FiberSpace::Polyhedral { functionals, .. } => Scalar::Exact(
                functionals
                    .iter()
                    .map(|g| dot(g, v).abs())
                    .max()
                    .expect("polyhedral fibers carry at least one functional"),
            ),
        })
    }

    /// `|v|^e`, computed without an intermediate root whenever the family
    /// allows it, so that integer powers of `l^2` norms stay rational.
    pub fn norm_pow(&self, v: &[Rational], e: &Rational) -> Result<Scalar> {
        self.check_dim(v)?;
        match self {
            FiberSpace::Lp { p: LpExp::Two, .. } => {
                let s: Rational = v.iter().map(|x| x * x).sum();
                Ok(Scalar::Exact(s).pow(&(e / Rational::from_integer(2.into()))))
            }
            FiberSpace::WeightedLp {
                p: LpExp::Two,
                weights,
            } => {
                let s: Rational = scale(v, weights).iter().map(|x| x * x).sum();
                Ok(Scalar::Exact(s).pow(&(e / Rational::from_integer(2.into()))))
            }
            _ => Ok(self.norm(v)?.pow(e)),
        }
    }

    /// The dual space in the same family catalogue, acting through the
    /// standard pairing.
    pub fn dual(&self) -> FiberSpace {
        match self {
            FiberSpace::Lp { p, dim } => FiberSpace::Lp {
                p: p.conjugate(),
                dim: *dim,
            },
            FiberSpace::WeightedLp { p, weights } => FiberSpace::WeightedLp {
                p: p.conjugate(),
                weights: weights.iter().map(|w| Rational::one() / w).collect(),
            },
            FiberSpace::Polyhedral { vertices, .. } => {
                // The dual unit ball is the polar of the primal ball, so the
                // dual norm is the support function of the primal ball: a
                // polyhedral norm generated by the primal ball's vertices.
                FiberSpace::polyhedral(vertices.clone())
                    .expect("primal ball vertices span the space")
            }
        }
    }

    /// Norm of `w` as a functional on this fiber.
    pub fn dual_norm(&self, w: &[Rational]) -> Result<Scalar> {
        self.dual().norm(w)
    }

    /// A nonzero vector attaining the dual norm: `<w, v> = |w|' |v|`.
    /// For `w = 0` any nonzero vector qualifies; the first basis vector is
    /// returned.
    pub fn attainment(&self, w: &[Rational]) -> Result<Vec<Rational>> {
        self.check_dim(w)?;
        let dim = self.dim();
        if w.iter().all(Rational::is_zero) {
            let mut e0 = vec![Rational::zero(); dim];
            e0[0] = Rational::one();
            return Ok(e0);
        }
        Ok(match self {
            FiberSpace::Lp { p, .. } => lp_attainment(*p, w),
            FiberSpace::WeightedLp { p, weights } => {
                // Rescale to the unweighted case: with u_i = w_i v_i the
                // pairing reads <w, v> = sum (w_i / wt_i) u_i.
                let reduced: Vec<Rational> =
                    w.iter().zip(weights).map(|(wi, wt)| wi / wt).collect();
                lp_attainment(*p, &reduced)
                    .iter()
                    .zip(weights)
                    .map(|(ui, wt)| ui / wt)
                    .collect()
            }
            FiberSpace::Polyhedral { vertices, .. } => vertices
                .iter()
                .max_by(|a, b| dot(w, a).cmp(&dot(w, b)))
                .expect("polyhedral balls have vertices")
                .clone(),
        })
    }

    /// Vertices of the unit ball, for families whose ball is a polytope.
    pub fn ball_vertices(&self) -> Option<Vec<Vec<Rational>>> {
        match self {
            FiberSpace::Lp { p: LpExp::Two, .. } | FiberSpace::WeightedLp { p: LpExp::Two, .. } => {
                None
            }
            FiberSpace::Lp { p: LpExp::One, dim } => {
                let mut out = Vec::new();
                for i in 0..*dim {
                    for sign in [1i64, -1] {
                        let mut v = vec![Rational::zero(); *dim];
                        v[i] = Rational::from_integer(sign.into());
                        out.push(v);
                    }
                }
                Some(out)
            }
            FiberSpace::Lp { p: LpExp::Inf, dim } => Some(sign_vectors(*dim)),
            FiberSpace::WeightedLp { p, weights } => {
                let unweighted = FiberSpace::lp(*p, weights.len());
                Some(
                    unweighted
                        .ball_vertices()?
                        .into_iter()
                        .map(|v| v.into_iter().zip(weights).map(|(x, w)| x / w).collect())
                        .collect(),
                )
            }
            FiberSpace::Polyhedral { vertices, .. } => Some(vertices.clone()),
        }
    }
}

/// The standard pairing `<w, v> = sum w_i v_i`.
pub fn pair(w: &[Rational], v: &[Rational]) -> Result<Rational> {
    if w.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            got: v.len(),
        });
    }
    Ok(dot(w, v))
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn scale(v: &[Rational], weights: &[Rational]) -> Vec<Rational> {
    v.iter().zip(weights).map(|(x, w)| x * w).collect()
}

fn lp_norm(p: LpExp, v: &[Rational]) -> Scalar {
    match p {
        LpExp::One => Scalar::Exact(v.iter().map(Rational::abs).sum()),
        LpExp::Inf => Scalar::Exact(
            v.iter()
                .map(Rational::abs)
                .max()
                .unwrap_or_else(Rational::zero),
        ),
        LpExp::Two => Scalar::Exact(v.iter().map(|x| x * x).sum::<Rational>()).nth_root(2),
    }
}

fn lp_attainment(p: LpExp, w: &[Rational]) -> Vec<Rational> {
    match p {
        // Dual of l^1 is l^infinity: localize at a maximal coordinate.
        LpExp::One => {
            let i = (0..w.len())
                .max_by(|&a, &b| w[a].abs().cmp(&w[b].abs()))
                .expect("nonzero vector");
            let mut v = vec![Rational::zero(); w.len()];
            v[i] = sign_of(&w[i]);
            v
        }
        // Dual of l^infinity is l^1: pair against the sign pattern.
        LpExp::Inf => w.iter().map(sign_of).collect(),
        // Self-dual: w itself attains, left unnormalized to stay rational.
        LpExp::Two => w.to_vec(),
    }
}

fn sign_of(x: &Rational) -> Rational {
    if x.is_negative() {
        -Rational::one()
    } else {
        Rational::one()
    }
}

fn sign_vectors(dim: usize) -> Vec<Vec<Rational>> {
    (0..(1usize << dim))
        .map(|mask| {
            (0..dim)
                .map(|i| {
                    if mask & (1 << i) != 0 {
                        -Rational::one()
                    } else {
                        Rational::one()
                    }
                })
                .collect()
        })
        .collect()
}

/// Operator norm of a rational matrix between two fibers, computed exactly
/// over vertices of the relevant polytopes. Between genuine `l^2` fibers only
/// diagonal matrices are supported.
pub fn operator_norm(
    matrix: &[Vec<Rational>],
    source: &FiberSpace,
    target: &FiberSpace,
) -> Result<Scalar> {
    let (rows, cols) = (matrix.len(), matrix.first().map(Vec::len).unwrap_or(0));
    if rows != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: rows,
        });
    }
    if cols != source.dim() {
        return Err(Error::DimensionMismatch {
            expected: source.dim(),
            got: cols,
        });
    }
    if let Some(vertices) = source.ball_vertices() {
        let mut best = Scalar::zero();
        for v in &vertices {
            let image: Vec<Rational> = matrix.iter().map(|row| dot(row, v)).collect();
            best = best.max(target.norm(&image)?);
        }
        return Ok(best);
    }
    if let Some(dual_vertices) = target.dual().ball_vertices() {
        // sup_{|v| <= 1} |A v| = max over dual-ball vertices g of the
        // source-dual norm of A^T g.
        let mut best = Scalar::zero();
        for g in &dual_vertices {
            let pulled: Vec<Rational> = (0..cols)
                .map(|j| matrix.iter().zip(g).map(|(row, gi)| &row[j] * gi).sum())
                .collect();
            best = best.max(source.dual_norm(&pulled)?);
        }
        return Ok(best);
    }
    if matrix
        .iter()
        .enumerate()
        .all(|(i, row)| row.iter().enumerate().all(|(j, x)| i == j || x.is_zero()))
    {
        let mut best = Scalar::zero();
        for i in 0..rows.min(cols) {
            let mut e = vec![Rational::zero(); cols];
            e[i] = Rational::one();
            let image: Vec<Rational> = matrix.iter().map(|row| dot(row, &e)).collect();
            let gain = target.norm(&image)? / source.norm(&e)?;
            best = best.max(gain);
        }
        return Ok(best);
    }
    Err(Error::OpNormUnsupported)
}

/// Rank of a rational matrix, by Gaussian elimination.
fn rank(rows: &[Vec<Rational>]) -> usize {
    let mut m: Vec<Vec<Rational>> = rows.to_vec();
    let cols = m.first().map(Vec::len).unwrap_or(0);
    let mut r = 0;
    for c in 0..cols {
        let Some(pivot) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, pivot);
        let lead = m[r][c].clone();
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let factor = &m[i][c] / &lead;
                for j in c..cols {
                    let sub = &factor * &m[r][j];
                    m[i][j] -= sub;
                }
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

/// Solve a square rational system `A x = b`; `None` when `A` is singular.
pub fn solve_square(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    for c in 0..n {
        let pivot = (c..n).find(|&i| !m[i][c].is_zero())?;
        m.swap(c, pivot);
        let lead = m[c][c].clone();
        for j in c..=n {
            m[c][j] = &m[c][j] / &lead;
        }
        for i in 0..n {
            if i != c && !m[i][c].is_zero() {
                let factor = m[i][c].clone();
                for j in c..=n {
                    let sub = &factor * &m[c][j];
                    m[i][j] -= sub;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n].clone()).collect())
}

/// Vertices of `{v : |<g_j, v>| <= 1 for all j}`: solutions of `dim`
/// linearly independent tight constraints that satisfy all others.
fn ball_vertices_of_polyhedral(functionals: &[Vec<Rational>], dim: usize) -> Vec<Vec<Rational>> {
    let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(functionals.len() * 2);
    for g in functionals {
        rows.push(g.clone());
        rows.push(g.iter().map(|x| -x).collect());
    }
    let ones = vec![Rational::one(); dim];
    let mut seen = BTreeSet::new();
    let mut vertices = Vec::new();
    for combo in combinations(rows.len(), dim) {
        let system: Vec<Vec<Rational>> = combo.iter().map(|&i| rows[i].clone()).collect();
        let Some(v) = solve_square(&system, &ones) else {
            continue;
        };
        let feasible = functionals
            .iter()
            .all(|g| dot(g, &v).abs() <= Rational::one());
        if feasible && seen.insert(v.clone()) {
            vertices.push(v);
        }
    }
    vertices
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack = vec![(0usize, Vec::<usize>::new())];
    while let Some((start, chosen)) = stack.pop() {
        if chosen.len() == k {
            out.push(chosen);
            continue;
        }
        for i in start..n {
            let mut next = chosen.clone();
            next.push(i);
            stack.push((i + 1, next));
        }
    }
    out
}
