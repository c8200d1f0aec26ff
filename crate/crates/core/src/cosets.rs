//! Left cosets `wU` inside a double coset `U pi^m U`.
//!
//! A left coset `gU` is determined by the lattice `g Z_p^n`, so the cosets in
//! `U pi^m U` are the lattices with elementary divisors `p^m`. After shifting
//! `m` to be nonnegative these are sublattices of `Z_p^n`, enumerated by their
//! column Hermite normal forms.

use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

use num_bigint::BigInt;

pub use crate::coweight::DominantCoweight;
use crate::error::{Result, SphError};
use crate::lab::Lab;
use crate::matrix::{ExactScalar, RatMatrix};
use crate::padic::{cartan_label, GroupElement, PrimeContext};

/// Representatives `w_1, ..., w_L` with `U pi^m U = ⊔ w_i U`.
#[derive(Clone, Debug)]
pub struct CosetList {
    pub m: DominantCoweight,
    pub reps: Vec<GroupElement>,
}

impl CosetList {
    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }
}

fn check_coweight(m: &DominantCoweight, ctx: &PrimeContext) -> Result<()> {
    if m.rank() != ctx.n() {
        return Err(SphError::InvalidCoweight(format!("{m} has rank {} but n = {}", m.rank(), ctx.n())));
    }
    Ok(())
}

fn ipow(p: u64, e: u32) -> Option<u64> {
    p.checked_pow(e)
}

/// Modular inverse of a unit modulo `modulus`.
fn inv_mod(a: i128, modulus: i128) -> i128 {
    let (mut r0, mut r1) = (modulus, a.rem_euclid(modulus));
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    debug_assert_eq!(r0, 1, "not a unit");
    s0.rem_euclid(modulus)
}

fn val_mod(x: i128, p: i128, cap: u32) -> u32 {
    if x == 0 {
        return cap;
    }
    let mut v = 0;
    let mut y = x;
    while y % p == 0 && v < cap {
        y /= p;
        v += 1;
    }
    v
}

/// Elementary-divisor exponents of an integer matrix computed modulo `p^cap`;
/// exponents `>= cap` are reported as `cap`. Sorted descending.
pub(crate) fn elementary_exponents_mod(rows: &[Vec<i128>], p: u64, cap: u32) -> Vec<u32> {
    let n = rows.len();
    let p = p as i128;
    let modulus = p.pow(cap);
    let mut a: Vec<i128> = rows.iter().flatten().map(|x| x.rem_euclid(modulus)).collect();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut best = (k, k, cap);
        for i in k..n {
            for j in k..n {
                let v = val_mod(a[i * n + j], p, cap);
                if v < best.2 {
                    best = (i, j, v);
                }
            }
        }
        let (pi, pj, v) = best;
        if v == cap {
            out.extend(std::iter::repeat(cap).take(n - k));
            break;
        }
        for c in 0..n {
            a.swap(k * n + c, pi * n + c);
        }
        for r in 0..n {
            a.swap(r * n + k, r * n + pj);
        }
        out.push(v);
        let pv = p.pow(v);
        let unit_inv = inv_mod(a[k * n + k] / pv, modulus);
        for r in (k + 1)..n {
            let x = a[r * n + k];
            if x == 0 {
                continue;
            }
            let c = ((x / pv) % modulus * unit_inv) % modulus;
            for col in k..n {
                a[r * n + col] = (a[r * n + col] - c * a[k * n + col]).rem_euclid(modulus);
            }
        }
    }
    out.sort_unstable_by(|x, y| y.cmp(x));
    out
}

/// Compositions of `total` into `parts` entries each in `0..=max`.
fn bounded_compositions(parts: usize, total: i64, max: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(parts);
    fn rec(parts: usize, left: i64, max: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == parts - 1 {
            if (0..=max).contains(&left) {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        for d in (0..=max.min(left)).rev() {
            cur.push(d);
            rec(parts, left - d, max, cur, out);
            cur.pop();
        }
    }
    rec(parts, total, max, &mut cur, &mut out);
    out
}

/// Visits the integer Hermite normal forms `B` of the left cosets in
/// `U pi^m U`; the coset representative is `p^{m_n} B`. Returns the number
/// of cosets visited.
pub fn visit_hnf_cosets(m: &DominantCoweight, ctx: &PrimeContext, cap: u128, mut visit: impl FnMut(&[Vec<i128>])) -> Result<u128> {
    check_coweight(m, ctx)?;
    let n = ctx.n();
    let p = ctx.p();
    let shift = m.as_slice()[n - 1];
    let a: Vec<i64> = m.as_slice().iter().map(|&x| x - shift).collect();
    let total: i64 = a.iter().sum();
    let top = a[0];
    let target: Vec<u32> = a.iter().map(|&x| x as u32).collect();
    let modulus_exp = top as u32 + 1;
    // Products of two residues must fit in an i128.
    if (p as f64).powi(modulus_exp as i32) * (n as f64) > 1e18 {
        return Err(SphError::ResourceLimit { what: "HNF modulus", count: u128::MAX, cap });
    }

    let mut found: u128 = 0;
    for d in bounded_compositions(n, total, top) {
        // Candidate count for this diagonal: prod_{k<l} p^{d_k}.
        let mut slots: Vec<(usize, usize, i128)> = Vec::new();
        let mut candidates: u128 = 1;
        for k in 0..n {
            let modk = ipow(p, d[k] as u32).ok_or(SphError::ResourceLimit { what: "HNF entry", count: u128::MAX, cap })? as i128;
            for l in (k + 1)..n {
                slots.push((k, l, modk));
                candidates = candidates.saturating_mul(modk as u128);
            }
        }
        if candidates > cap.saturating_mul(64) {
            return Err(SphError::ResourceLimit { what: "HNF candidates", count: candidates, cap: cap.saturating_mul(64) });
        }
        let mut b: Vec<Vec<i128>> = vec![vec![0; n]; n];
        for k in 0..n {
            b[k][k] = (p as i128).pow(d[k] as u32);
        }
        let mut counter = vec![0i128; slots.len()];
        loop {
            for (idx, &(k, l, _)) in slots.iter().enumerate() {
                b[k][l] = counter[idx];
            }
            if elementary_exponents_mod(&b, p, modulus_exp) == target {
                if found >= cap {
                    return Err(SphError::ResourceLimit { what: "cosets", count: found + 1, cap });
                }
                found += 1;
                visit(&b);
            }
            // odometer
            let mut i = 0;
            while i < slots.len() {
                counter[i] += 1;
                if counter[i] < slots[i].2 {
                    break;
                }
                counter[i] = 0;
                i += 1;
            }
            if i == slots.len() {
                break;
            }
        }
    }
    Ok(found)
}

/// Hermite-normal-form enumeration of the left cosets in `U pi^m U`.
pub fn enumerate_left_cosets(m: &DominantCoweight, ctx: &PrimeContext, cap: u128) -> Result<CosetList> {
    let scale = ctx.p_pow(m.as_slice()[m.rank() - 1]);
    let mut reps = Vec::new();
    visit_hnf_cosets(m, ctx, cap, |b| {
        let rows: Vec<Vec<ExactScalar>> = b
            .iter()
            .map(|r| r.iter().map(|&x| ExactScalar::from_integer(BigInt::from(x)) * &scale).collect())
            .collect();
        let mat = RatMatrix::from_rows(rows).expect("square by construction");
        reps.push(GroupElement::new_unchecked(*ctx, mat));
    })?;
    Ok(CosetList { m: m.clone(), reps })
}

/// Memoized `enumerate_left_cosets` for the lab's context.
pub fn left_coset_reps(lab: &Lab, m: &DominantCoweight) -> Result<Arc<CosetList>> {
    check_coweight(m, lab.ctx())?;
    lab.cosets.get_or_try_insert(m, || enumerate_left_cosets(m, lab.ctx(), lab.coset_cap()))
}

/// `L(g)`: number of left cosets in `U g U`.
pub fn coset_count(lab: &Lab, g: &GroupElement) -> Result<usize> {
    let m = cartan_label(g);
    Ok(left_coset_reps(lab, &m)?.len())
}

pub fn coset_count_of(lab: &Lab, m: &DominantCoweight) -> Result<usize> {
    Ok(left_coset_reps(lab, m)?.len())
}

/// Independent count: orbit of the lattice `pi^{m_1 - m} Z^n mod p^N` under
/// the elementary generators of `SL_n(Z/p^N)`, `N = m_1 - m_n`.
///
/// The stabilizer of that lattice in `U` is
/// `{u : val(u_kl) >= max(0, m_l - m_k)}`, which contains the principal
/// congruence subgroup of level `N`, so the orbit length is the index.
pub fn quotient_oracle_count(m: &DominantCoweight, ctx: &PrimeContext, cap: u128) -> Result<u128> {
    check_coweight(m, ctx)?;
    let n = ctx.n();
    let level = m.spread() as u32;
    if level == 0 {
        return Ok(1);
    }
    let p = ctx.p();
    let modulus = ipow(p, level).ok_or(SphError::ResourceLimit { what: "quotient modulus", count: u128::MAX, cap })?;
    let space = (modulus as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if space > cap.saturating_mul(64) {
        return Err(SphError::ResourceLimit { what: "quotient module size", count: space, cap: cap.saturating_mul(64) });
    }
    let top = m.as_slice()[0];
    let gens: Vec<Vec<u64>> = (0..n)
        .map(|k| {
            let mut v = vec![0u64; n];
            v[k] = ipow(p, (top - m.as_slice()[k]) as u32).unwrap() % modulus;
            v
        })
        .collect();

    let encode = |v: &[u64]| -> u64 { v.iter().fold(0u64, |acc, &x| acc * modulus + x) };
    let decode = |mut c: u64| -> Vec<u64> {
        let mut v = vec![0u64; n];
        for k in (0..n).rev() {
            v[k] = c % modulus;
            c /= modulus;
        }
        v
    };

    // Span of the generators, as a sorted list of encoded vectors.
    let mut span: HashSet<u64> = HashSet::from([0]);
    for g in &gens {
        let mut next = HashSet::with_capacity(span.len() * 2);
        for &x in &span {
            let xv = decode(x);
            let mut cur = xv.clone();
            loop {
                if !next.insert(encode(&cur)) {
                    break;
                }
                for k in 0..n {
                    cur[k] = (cur[k] + g[k]) % modulus;
                }
            }
        }
        span = next;
    }
    let mut start: Vec<u64> = span.into_iter().collect();
    start.sort_unstable();

    // Elementary matrices E_kl(1), k != l, generate SL_n over a local ring.
    let apply = |sub: &[u64], k: usize, l: usize| -> Vec<u64> {
        let mut out: Vec<u64> = sub
            .iter()
            .map(|&c| {
                let mut v = decode(c);
                v[k] = (v[k] + v[l]) % modulus;
                encode(&v)
            })
            .collect();
        out.sort_unstable();
        out
    };

    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back(start);
    while let Some(sub) = queue.pop_front() {
        for k in 0..n {
            for l in 0..n {
                if k == l {
                    continue;
                }
                let img = apply(&sub, k, l);
                if !seen.contains(&img) {
                    if seen.len() as u128 >= cap {
                        return Err(SphError::ResourceLimit { what: "oracle orbit", count: seen.len() as u128 + 1, cap });
                    }
                    seen.insert(img.clone());
                    queue.push_back(img);
                }
            }
        }
    }
    Ok(seen.len() as u128)
}

/// Checks `w_i^{-1} w_j` is non-integral for every pair `i != j`.
pub fn pairwise_disjoint(list: &CosetList) -> bool {
    let invs: Vec<GroupElement> = list.reps.iter().map(|w| w.inverse()).collect();
    for (i, wi) in invs.iter().enumerate() {
        for (j, wj) in list.reps.iter().enumerate() {
            if i != j && wi.mul(wj).is_integral() {
                return false;
            }
        }
    }
    true
}

/// `|SL_n(Z/p^N)| = p^{(N-1)(n^2-1)} |SL_n(F_p)|`, saturating.
pub fn sl_order_mod_prime_power(n: usize, p: u64, level: u32) -> u128 {
    if level == 0 {
        return 1;
    }
    let p = p as u128;
    let mut order: u128 = 1;
    // |GL_n(F_p)| / (p - 1)
    for k in 0..n {
        let pn = p.saturating_pow(n as u32);
        order = order.saturating_mul(pn.saturating_sub(p.saturating_pow(k as u32)));
    }
    order /= p - 1;
    order.saturating_mul(p.saturating_pow((level - 1) * (n * n - 1) as u32))
}
