//! Exact rationals viewed p-adically, and the Cartan and Iwasawa
//! decompositions of `SL_n(Q_p)` elements with rational entries.
//!
//! Every transformation used here is an integral matrix of determinant one
//! (entries in `Z_(p)`), so the outer factors stay in `SL_n(Z_p) ∩ M_n(Q)`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::coweight::DominantCoweight;
use crate::error::{Result, SphError};
use crate::matrix::{ExactScalar, RatMatrix};

/// The prime `p` and the rank `n` of `SL_n(Q_p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeContext {
    p: u64,
    n: usize,
}

impl PrimeContext {
    pub fn new(p: u64, n: usize) -> Result<Self> {
        if !is_prime(p) {
            return Err(SphError::NotPrime(p));
        }
        if n < 2 {
            return Err(SphError::RankTooSmall { required: 2, got: n });
        }
        Ok(PrimeContext { p, n })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p_big(&self) -> BigInt {
        BigInt::from(self.p)
    }

    /// `p^e` as an exact rational, `e` of either sign.
    pub fn p_pow(&self, e: i64) -> ExactScalar {
        let base = num_traits::pow(self.p_big(), e.unsigned_abs() as usize);
        if e >= 0 {
            ExactScalar::from_integer(base)
        } else {
            ExactScalar::new(BigInt::one(), base)
        }
    }
}

impl fmt::Display for PrimeContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SL_{}(Q_{})", self.n, self.p)
    }
}

/// Trial division up to `sqrt(p)`.
pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// p-adic valuation; `Infinite` is the valuation of zero and orders above
/// every finite value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => write!(f, "inf"),
        }
    }
}

fn int_valuation(x: &BigInt, p: &BigInt) -> i64 {
    debug_assert!(!x.is_zero());
    let mut v = 0;
    let mut y = x.clone();
    loop {
        let (q, r) = y.div_rem(p);
        if !r.is_zero() {
            return v;
        }
        y = q;
        v += 1;
    }
}

/// `x = p^v * unit`, or `Infinite` for zero.
pub fn valuation(x: &ExactScalar, ctx: &PrimeContext) -> Valuation {
    if x.is_zero() {
        return Valuation::Infinite;
    }
    let p = ctx.p_big();
    Valuation::Finite(int_valuation(x.numer(), &p) - int_valuation(x.denom(), &p))
}

fn val_raw(x: &ExactScalar, p: &BigInt) -> Option<i64> {
    if x.is_zero() {
        None
    } else {
        Some(int_valuation(x.numer(), p) - int_valuation(x.denom(), p))
    }
}

/// Entries in `Z_(p)`: every denominator is prime to `p`.
pub fn is_integral(m: &RatMatrix, ctx: &PrimeContext) -> bool {
    let p = ctx.p_big();
    m.entries().iter().all(|x| !x.denom().is_multiple_of(&p))
}

/// An element of `SL_n(Q_p)` with rational entries.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GroupElement {
    ctx: PrimeContext,
    mat: RatMatrix,
}

impl GroupElement {
    pub fn new(ctx: PrimeContext, mat: RatMatrix) -> Result<Self> {
        if mat.dim() != ctx.n() {
            return Err(SphError::Shape { expected: ctx.n(), got: format!("{}x{}", mat.dim(), mat.dim()) });
        }
        let d = mat.det();
        if !d.is_one() {
            return Err(SphError::NonUnimodular(d.to_string()));
        }
        Ok(GroupElement { ctx, mat })
    }

    /// Callers guarantee `det(mat) == 1`.
    pub(crate) fn new_unchecked(ctx: PrimeContext, mat: RatMatrix) -> Self {
        debug_assert!(mat.det().is_one());
        GroupElement { ctx, mat }
    }

    pub fn identity(ctx: PrimeContext) -> Self {
        GroupElement { ctx, mat: RatMatrix::identity(ctx.n()) }
    }

    /// `pi^m = diag(p^{m_1}, ..., p^{m_n})` for any zero-sum integer vector.
    pub fn pi_power(ctx: PrimeContext, m: &[i64]) -> Result<Self> {
        if m.len() != ctx.n() {
            return Err(SphError::DimensionMismatch { expected: ctx.n(), got: m.len() });
        }
        let s: i64 = m.iter().sum();
        if s != 0 {
            return Err(SphError::BadCoweightSum(s));
        }
        let diag: Vec<ExactScalar> = m.iter().map(|&e| ctx.p_pow(e)).collect();
        Ok(GroupElement { ctx, mat: RatMatrix::diagonal(&diag) })
    }

    pub fn ctx(&self) -> &PrimeContext {
        &self.ctx
    }

    pub fn matrix(&self) -> &RatMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> RatMatrix {
        self.mat
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        debug_assert_eq!(self.ctx, other.ctx);
        GroupElement { ctx: self.ctx, mat: &self.mat * &other.mat }
    }

    pub fn inverse(&self) -> GroupElement {
        let mat = self.mat.inverse().expect("determinant one matrices are invertible");
        GroupElement { ctx: self.ctx, mat }
    }

    /// Membership in `U = SL_n(Z_p)`.
    pub fn is_integral(&self) -> bool {
        is_integral(&self.mat, &self.ctx)
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.mat)
    }
}

/// `g = u1 * pi^m * u2` with `u1, u2` integral of determinant one.
#[derive(Clone, Debug)]
pub struct CartanForm {
    pub u1: GroupElement,
    pub m: DominantCoweight,
    pub u2: GroupElement,
}

impl CartanForm {
    pub fn reconstruct(&self) -> GroupElement {
        let pi = GroupElement::pi_power(*self.u1.ctx(), self.m.as_slice()).expect("dominant coweights have zero sum");
        self.u1.mul(&pi).mul(&self.u2)
    }
}

/// `g = u * diag(p^{hval_k} * hunit_k) * nmat`, `nmat` upper unitriangular.
#[derive(Clone, Debug)]
pub struct IwasawaForm {
    pub u: GroupElement,
    pub hval: Vec<i64>,
    pub hunit: Vec<ExactScalar>,
    pub nmat: GroupElement,
}

impl IwasawaForm {
    pub fn diagonal(&self) -> RatMatrix {
        let ctx = self.u.ctx();
        let diag: Vec<ExactScalar> =
            self.hval.iter().zip(&self.hunit).map(|(&v, e)| ctx.p_pow(v) * e).collect();
        RatMatrix::diagonal(&diag)
    }

    pub fn reconstruct(&self) -> RatMatrix {
        let uh = self.u.matrix() * &self.diagonal();
        &uh * self.nmat.matrix()
    }
}

/// Position of the valuation-minimal entry in `rows x cols`, ties broken by
/// lowest row, then lowest column.
fn min_val_pivot(a: &RatMatrix, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>, p: &BigInt) -> Option<(usize, usize, i64)> {
    let mut best: Option<(usize, usize, i64)> = None;
    for i in rows {
        for j in cols.clone() {
            if let Some(v) = val_raw(&a[(i, j)], p) {
                if best.map_or(true, |(_, _, bv)| v < bv) {
                    best = Some((i, j, v));
                }
            }
        }
    }
    best
}

fn check_unimodular(g: &GroupElement) -> Result<()> {
    let d = g.matrix().det();
    if !d.is_one() {
        return Err(SphError::NonUnimodular(d.to_string()));
    }
    Ok(())
}

/// Signed permutation of determinant one sending position `perm[k]` to `k`.
fn signed_permutation(perm: &[usize]) -> RatMatrix {
    let n = perm.len();
    let mut pm = RatMatrix::zeros(n);
    for (k, &src) in perm.iter().enumerate() {
        pm[(k, src)] = ExactScalar::one();
    }
    if pm.det().is_negative() {
        pm.negate_row(0);
    }
    pm
}

/// Smith-form elimination over `Z_(p)` with valuation-minimal pivoting.
pub fn cartan_decompose(g: &GroupElement) -> Result<CartanForm> {
    check_unimodular(g)?;
    let ctx = *g.ctx();
    let n = ctx.n();
    let p = ctx.p_big();
    let mut a = g.matrix().clone();
    let mut left = RatMatrix::identity(n);
    let mut right = RatMatrix::identity(n);

    for k in 0..n {
        let (i, j, _) = min_val_pivot(&a, k..n, k..n, &p).expect("nonsingular matrix has a nonzero pivot");
        if i != k {
            a.signed_swap_rows(k, i);
            left.signed_swap_rows(k, i);
        }
        if j != k {
            a.signed_swap_cols(k, j);
            right.signed_swap_cols(k, j);
        }
        let pivot = a[(k, k)].clone();
        for r in (k + 1)..n {
            if a[(r, k)].is_zero() {
                continue;
            }
            let c = -(&a[(r, k)] / &pivot);
            a.add_row_multiple(r, k, &c);
            left.add_row_multiple(r, k, &c);
        }
        for c in (k + 1)..n {
            if a[(k, c)].is_zero() {
                continue;
            }
            let f = -(&a[(k, c)] / &pivot);
            a.add_col_multiple(c, k, &f);
            right.add_col_multiple(c, k, &f);
        }
    }

    // a = left * g * right is diagonal; split each entry into p^v * unit.
    let mut vals = Vec::with_capacity(n);
    let mut units = Vec::with_capacity(n);
    for k in 0..n {
        let v = val_raw(&a[(k, k)], &p).expect("diagonal entries are nonzero");
        units.push(&a[(k, k)] / ctx.p_pow(v));
        vals.push(v);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| vals[y].cmp(&vals[x]).then(x.cmp(&y)));
    let m = DominantCoweight::new(order.iter().map(|&k| vals[k]).collect())?;
    let perm = signed_permutation(&order);
    let perm_inv = perm.inverse().expect("permutation is invertible");

    // g = left^-1 * diag(units) * perm^-1 * pi^m * perm * right^-1
    let left_inv = left.inverse().expect("elementary transforms are invertible");
    let right_inv = right.inverse().expect("elementary transforms are invertible");
    let u1 = &(&left_inv * &RatMatrix::diagonal(&units)) * &perm_inv;
    let u2 = &perm * &right_inv;
    Ok(CartanForm { u1: GroupElement::new_unchecked(ctx, u1), m, u2: GroupElement::new_unchecked(ctx, u2) })
}

/// Elementary-divisor exponents of an invertible rational matrix, sorted
/// descending. Skips factor bookkeeping.
pub fn elementary_exponents(mat: &RatMatrix, ctx: &PrimeContext) -> Vec<i64> {
    let n = mat.dim();
    let p = ctx.p_big();
    let mut a = mat.clone();
    let mut vals = Vec::with_capacity(n);
    for k in 0..n {
        let (i, j, v) = min_val_pivot(&a, k..n, k..n, &p).expect("nonsingular matrix has a nonzero pivot");
        a.swap_rows(k, i);
        a.swap_cols(k, j);
        vals.push(v);
        let pivot = a[(k, k)].clone();
        for r in (k + 1)..n {
            if a[(r, k)].is_zero() {
                continue;
            }
            let c = -(&a[(r, k)] / &pivot);
            // Column k of row r becomes zero; the rest of row k is removed
            // together with column k below, so only the trailing block matters.
            for col in (k + 1)..n {
                let t = &c * &a[(k, col)];
                a[(r, col)] += t;
            }
            a[(r, k)] = ExactScalar::zero();
        }
    }
    vals.sort_unstable_by(|x, y| y.cmp(x));
    vals
}

/// Cartan label of `g` without the outer factors.
pub fn cartan_label(g: &GroupElement) -> DominantCoweight {
    DominantCoweight::new(elementary_exponents(g.matrix(), g.ctx())).expect("determinant one forces zero sum")
}

/// Column-by-column elimination from the left, valuation-minimal pivot,
/// signed swaps, integral row operations.
pub fn iwasawa_decompose(g: &GroupElement) -> Result<IwasawaForm> {
    check_unimodular(g)?;
    let ctx = *g.ctx();
    let n = ctx.n();
    let p = ctx.p_big();
    let mut a = g.matrix().clone();
    let mut left = RatMatrix::identity(n);
    for k in 0..n {
        let (i, _, _) = min_val_pivot(&a, k..n, k..k + 1, &p).expect("nonsingular matrix has a nonzero pivot");
        if i != k {
            a.signed_swap_rows(k, i);
            left.signed_swap_rows(k, i);
        }
        let pivot = a[(k, k)].clone();
        for r in (k + 1)..n {
            if a[(r, k)].is_zero() {
                continue;
            }
            let c = -(&a[(r, k)] / &pivot);
            a.add_row_multiple(r, k, &c);
            left.add_row_multiple(r, k, &c);
        }
    }
    // a = left * g is upper triangular.
    let mut hval = Vec::with_capacity(n);
    let mut hunit = Vec::with_capacity(n);
    let mut hinv = Vec::with_capacity(n);
    for k in 0..n {
        let d = a[(k, k)].clone();
        let v = val_raw(&d, &p).expect("diagonal entries are nonzero");
        hunit.push(&d / ctx.p_pow(v));
        hval.push(v);
        hinv.push(d.recip());
    }
    let nmat = &RatMatrix::diagonal(&hinv) * &a;
    let u = left.inverse().expect("elementary transforms are invertible");
    Ok(IwasawaForm {
        u: GroupElement::new_unchecked(ctx, u),
        hval,
        hunit,
        nmat: GroupElement::new_unchecked(ctx, nmat),
    })
}

/// The valuation vector of the diagonal Iwasawa part, without the factors.
pub fn iwasawa_valuations(mat: &RatMatrix, ctx: &PrimeContext) -> Vec<i64> {
    let n = mat.dim();
    let p = ctx.p_big();
    let mut a = mat.clone();
    let mut hval = Vec::with_capacity(n);
    for k in 0..n {
        let (i, _, v) = min_val_pivot(&a, k..n, k..k + 1, &p).expect("nonsingular matrix has a nonzero pivot");
        a.swap_rows(k, i);
        hval.push(v);
        let pivot = a[(k, k)].clone();
        for r in (k + 1)..n {
            if a[(r, k)].is_zero() {
                continue;
            }
            let c = -(&a[(r, k)] / &pivot);
            for col in (k + 1)..n {
                let t = &c * &a[(k, col)];
                a[(r, col)] += t;
            }
            a[(r, k)] = ExactScalar::zero();
        }
    }
    hval
}

/// Product of `steps` seeded elementary matrices `I + c E_kl` (`c` in
/// `-2..=2`) and signed swaps: an element of `SL_n(Z) ⊂ U`.
pub fn random_unimodular(ctx: PrimeContext, rng: &mut impl rand::Rng, steps: usize) -> GroupElement {
    let n = ctx.n();
    let mut m = RatMatrix::identity(n);
    for _ in 0..steps {
        let k = rng.gen_range(0..n);
        let mut l = rng.gen_range(0..n - 1);
        if l >= k {
            l += 1;
        }
        if rng.gen_bool(0.2) {
            m.signed_swap_rows(k, l);
        } else {
            let c = ExactScalar::from_integer(BigInt::from(rng.gen_range(-2i64..=2)));
            m.add_row_multiple(k, l, &c);
        }
    }
    GroupElement::new_unchecked(ctx, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> ExactScalar {
        ExactScalar::new(a.into(), b.into())
    }

    fn ctx(p: u64, n: usize) -> PrimeContext {
        PrimeContext::new(p, n).unwrap()
    }

    #[test]
    fn prime_context_validation() {
        assert!(PrimeContext::new(4, 2).is_err());
        assert!(PrimeContext::new(1, 2).is_err());
        assert!(PrimeContext::new(7, 1).is_err());
        assert!(PrimeContext::new(97, 3).is_ok());
    }

    #[test]
    fn valuations() {
        assert_eq!(valuation(&q(8, 1), &ctx(2, 2)), Valuation::Finite(3));
        assert_eq!(valuation(&q(1, 9), &ctx(3, 2)), Valuation::Finite(-2));
        assert_eq!(valuation(&q(0, 1), &ctx(5, 2)), Valuation::Infinite);
        assert_eq!(valuation(&q(-12, 7), &ctx(2, 2)), Valuation::Finite(2));
        assert!(Valuation::Finite(1000) < Valuation::Infinite);
    }

    #[test]
    fn cartan_identity_and_diagonal() {
        let c = ctx(5, 3);
        let f = cartan_decompose(&GroupElement::identity(c)).unwrap();
        assert!(f.m.is_zero());
        assert_eq!(f.u1, GroupElement::identity(c));
        assert_eq!(f.u2, GroupElement::identity(c));

        let g = GroupElement::pi_power(c, &[1, 0, -1]).unwrap();
        let f = cartan_decompose(&g).unwrap();
        assert_eq!(f.m.as_slice(), &[1, 0, -1]);
        assert_eq!(f.u1, GroupElement::identity(c));
        assert_eq!(f.u2, GroupElement::identity(c));
    }

    #[test]
    fn cartan_sorts_and_reconstructs() {
        let c = ctx(2, 3);
        let g = GroupElement::pi_power(c, &[-1, 2, -1]).unwrap();
        let f = cartan_decompose(&g).unwrap();
        assert_eq!(f.m.as_slice(), &[2, -1, -1]);
        assert_eq!(f.reconstruct(), g);
        assert!(f.u1.is_integral() && f.u2.is_integral());
    }

    #[test]
    fn cartan_rejects_non_unimodular() {
        let c = ctx(2, 2);
        let m = RatMatrix::from_i64_rows(&[vec![2, 0], vec![0, 1]]).unwrap();
        assert!(GroupElement::new(c, m.clone()).is_err());
        let bogus = GroupElement { ctx: c, mat: m };
        assert!(matches!(cartan_decompose(&bogus), Err(SphError::NonUnimodular(_))));
        assert!(matches!(iwasawa_decompose(&bogus), Err(SphError::NonUnimodular(_))));
    }

    #[test]
    fn iwasawa_examples() {
        let c = ctx(3, 3);
        let upper = RatMatrix::from_rows(vec![
            vec![q(1, 1), q(2, 9), q(5, 1)],
            vec![q(0, 1), q(1, 1), q(1, 3)],
            vec![q(0, 1), q(0, 1), q(1, 1)],
        ])
        .unwrap();
        let g = GroupElement::new(c, upper).unwrap();
        let f = iwasawa_decompose(&g).unwrap();
        assert_eq!(f.hval, vec![0, 0, 0]);
        assert_eq!(f.u, GroupElement::identity(c));

        let g = GroupElement::pi_power(c, &[-2, 3, -1]).unwrap();
        assert_eq!(iwasawa_decompose(&g).unwrap().hval, vec![-2, 3, -1]);
    }

    #[test]
    fn iwasawa_needs_pivot_swap() {
        let c = ctx(2, 2);
        let g = GroupElement::new(c, RatMatrix::from_rows(vec![vec![q(1, 1), q(0, 1)], vec![q(1, 2), q(1, 1)]]).unwrap()).unwrap();
        let f = iwasawa_decompose(&g).unwrap();
        assert_eq!(f.hval, vec![-1, 1]);
        assert_eq!(f.reconstruct(), *g.matrix());
        assert!(f.u.is_integral());
        assert!(f.nmat.matrix().is_upper_triangular());
        // Quotient-lattice check: the first column of g generates p^{-1} Z_p,
        // and the covolume of the full column lattice is 1, so the second
        // diagonal valuation is +1.
        assert_eq!(iwasawa_valuations(g.matrix(), &c), vec![-1, 1]);
    }
}
