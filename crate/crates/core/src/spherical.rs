//! Satake parameters and the spherical functions `omega_s` of
//! `(SL_n(Q_p), SL_n(Z_p))`.
//!
//! `omega_s(g)` is the average of the quasi-character `alpha_s` over the
//! Iwasawa diagonal valuations of `w^{-1}`, `w` running over the left coset
//! representatives of `U g U`. The multiset of those valuation vectors (the
//! [`IwasawaProfile`]) depends only on the Cartan label and is cached per
//! label; it is independent of `s`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::cosets::{visit_hnf_cosets, CosetList};
use crate::coweight::DominantCoweight;
use crate::error::{Result, SphError};
use crate::hecke::HeckeElement;
use crate::lab::{Lab, Memo};
use crate::matrix::{ExactScalar, RatMatrix};
use crate::padic::{cartan_label, iwasawa_valuations, GroupElement, PrimeContext};

pub const DEFAULT_TOL: f64 = 1e-9;

fn rat(a: i64, b: i64) -> ExactScalar {
    ExactScalar::new(BigInt::from(a), BigInt::from(b))
}

fn rat_to_f64(x: &ExactScalar) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// One coordinate `re + i*im + i*(2*pi/log p)*turns` of a Satake parameter.
///
/// The `turns` part carries shifts by `(2 pi i / log p) * M-hat` exactly;
/// `im` is the rational imaginary part proper.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct ParamCoord {
    pub re: ExactScalar,
    pub im: ExactScalar,
    pub turns: ExactScalar,
}

impl ParamCoord {
    pub fn new(re: ExactScalar, im: ExactScalar) -> Self {
        ParamCoord { re, im, turns: ExactScalar::zero() }
    }

    fn sub(&self, o: &ParamCoord) -> ParamCoord {
        ParamCoord { re: &self.re - &o.re, im: &self.im - &o.im, turns: &self.turns - &o.turns }
    }

    pub fn to_complex(&self, ctx: &PrimeContext) -> Complex64 {
        let lp = (ctx.p() as f64).ln();
        Complex64::new(rat_to_f64(&self.re), rat_to_f64(&self.im) + 2.0 * PI / lp * rat_to_f64(&self.turns))
    }
}

/// Representative of `[s]` in `C^n / C(1, ..., 1)`, normalized to zero sum.
///
/// `exact` records whether the coordinates came from exact rationals (as
/// opposed to converted floating inputs); equivalence tests on exact
/// parameters are decided without tolerances.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SatakeParameter {
    ctx: PrimeContext,
    coords: Vec<ParamCoord>,
    exact: bool,
}

/// A permutation `w` acting by `(w s)_k = s_{w[k]}`.
pub type Permutation = Vec<usize>;

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    out
}

/// The order-reversing permutation `w_0`.
pub fn longest_element(n: usize) -> Permutation {
    (0..n).rev().collect()
}

impl SatakeParameter {
    pub fn from_coords(ctx: PrimeContext, coords: Vec<ParamCoord>, exact: bool) -> Result<Self> {
        if coords.len() != ctx.n() {
            return Err(SphError::DimensionMismatch { expected: ctx.n(), got: coords.len() });
        }
        let mut s = SatakeParameter { ctx, coords, exact };
        s.normalize();
        Ok(s)
    }

    /// Exact parameter from rational real and imaginary parts.
    pub fn exact(ctx: PrimeContext, re: Vec<ExactScalar>, im: Vec<ExactScalar>) -> Result<Self> {
        if re.len() != im.len() {
            return Err(SphError::DimensionMismatch { expected: re.len(), got: im.len() });
        }
        let coords = re.into_iter().zip(im).map(|(r, i)| ParamCoord::new(r, i)).collect();
        Self::from_coords(ctx, coords, true)
    }

    /// Parameter from floating point parts; equivalence tests use tolerances.
    pub fn from_f64(ctx: PrimeContext, re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != im.len() {
            return Err(SphError::DimensionMismatch { expected: re.len(), got: im.len() });
        }
        let conv = |x: f64| ExactScalar::from_float(x).ok_or_else(|| SphError::Parse(format!("non-finite coordinate {x}")));
        let coords = re
            .iter()
            .zip(im)
            .map(|(&r, &i)| Ok(ParamCoord::new(conv(r)?, conv(i)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_coords(ctx, coords, false)
    }

    /// Real parameter `(sigma, -sigma)` for `n = 2`, or any real vector.
    pub fn real(ctx: PrimeContext, re: Vec<ExactScalar>) -> Result<Self> {
        let n = re.len();
        Self::exact(ctx, re, vec![ExactScalar::zero(); n])
    }

    fn normalize(&mut self) {
        let n = ExactScalar::from_integer(BigInt::from(self.coords.len()));
        let mean = |f: &dyn Fn(&ParamCoord) -> &ExactScalar| -> ExactScalar {
            self.coords.iter().map(f).fold(ExactScalar::zero(), |a, x| a + x) / &n
        };
        let mre = mean(&|c| &c.re);
        let mim = mean(&|c| &c.im);
        let mt = mean(&|c| &c.turns);
        for c in &mut self.coords {
            c.re -= &mre;
            c.im -= &mim;
            c.turns -= &mt;
        }
    }

    pub fn ctx(&self) -> &PrimeContext {
        &self.ctx
    }

    pub fn coords(&self) -> &[ParamCoord] {
        &self.coords
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.coords.iter().map(|c| c.to_complex(&self.ctx)).collect()
    }

    /// `s + (2 pi i / log p) * shift`.
    pub fn shifted_by_period(&self, shift: &[ExactScalar]) -> Result<Self> {
        if shift.len() != self.coords.len() {
            return Err(SphError::DimensionMismatch { expected: self.coords.len(), got: shift.len() });
        }
        let coords = self
            .coords
            .iter()
            .zip(shift)
            .map(|(c, t)| ParamCoord { re: c.re.clone(), im: c.im.clone(), turns: &c.turns + t })
            .collect();
        Self::from_coords(self.ctx, coords, self.exact)
    }

    pub fn permuted(&self, w: &[usize]) -> Self {
        let coords = w.iter().map(|&k| self.coords[k].clone()).collect();
        SatakeParameter { ctx: self.ctx, coords, exact: self.exact }
    }

    pub fn conj(&self) -> Self {
        let coords = self
            .coords
            .iter()
            .map(|c| ParamCoord { re: c.re.clone(), im: -&c.im, turns: -&c.turns })
            .collect();
        SatakeParameter { ctx: self.ctx, coords, exact: self.exact }
    }

    pub fn neg(&self) -> Self {
        let coords = self
            .coords
            .iter()
            .map(|c| ParamCoord { re: -&c.re, im: -&c.im, turns: -&c.turns })
            .collect();
        SatakeParameter { ctx: self.ctx, coords, exact: self.exact }
    }

    /// `p^{-sum_k e_k (s_k + rho_k)}` with `rho_k = k - (n+1)/2` when
    /// `with_rho`; the exponent is assembled exactly before exponentiating.
    fn power_of_p(&self, e: &[i64], with_rho: bool) -> Complex64 {
        let n = self.coords.len() as i64;
        let mut re = ExactScalar::zero();
        let mut im = ExactScalar::zero();
        let mut turns = ExactScalar::zero();
        for (k, (c, &ek)) in self.coords.iter().zip(e).enumerate() {
            if ek == 0 {
                continue;
            }
            let ek_q = ExactScalar::from_integer(BigInt::from(ek));
            re += &ek_q * &c.re;
            if with_rho {
                re += &ek_q * rat(2 * (k as i64 + 1) - n - 1, 2);
            }
            im += &ek_q * &c.im;
            turns += &ek_q * &c.turns;
        }
        let lp = (self.ctx.p() as f64).ln();
        // e^{-2 pi i turns} only depends on turns mod 1.
        let frac = &turns - turns.floor();
        let modulus = (-rat_to_f64(&re) * lp).exp();
        let phase = -(rat_to_f64(&im) * lp) - 2.0 * PI * rat_to_f64(&frac);
        Complex64::from_polar(modulus, phase)
    }
}

impl fmt::Debug for SatakeParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coords
            .iter()
            .map(|c| {
                if c.turns.is_zero() {
                    format!("{}+{}i", c.re, c.im)
                } else {
                    format!("{}+{}i+{}τ", c.re, c.im, c.turns)
                }
            })
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

fn check_sum_zero(m: &[i64], ctx: &PrimeContext) -> Result<()> {
    if m.len() != ctx.n() {
        return Err(SphError::DimensionMismatch { expected: ctx.n(), got: m.len() });
    }
    let s: i64 = m.iter().sum();
    if s != 0 {
        return Err(SphError::BadCoweightSum(s));
    }
    Ok(())
}

/// `alpha_s(pi^m) = p^{-sum_k m_k (s_k + k - (n+1)/2)}`.
pub fn alpha_eval(s: &SatakeParameter, m: &[i64]) -> Result<Complex64> {
    check_sum_zero(m, s.ctx())?;
    Ok(s.power_of_p(m, true))
}

/// `t_k = (n+1)/2 - k`: the parameter of the constant function 1.
pub fn trivial_param(ctx: PrimeContext) -> SatakeParameter {
    let n = ctx.n() as i64;
    let re = (1..=n).map(|k| rat(n + 1 - 2 * k, 2)).collect();
    SatakeParameter::real(ctx, re).expect("length matches rank")
}

/// `t + (i/j) r` with `r = (1, 0, ..., 0, 1)`, without the rank check.
pub fn sequence_param_unchecked(j: u64, ctx: PrimeContext) -> SatakeParameter {
    let n = ctx.n();
    let t = trivial_param(ctx);
    let coords = t
        .coords
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let im = if k == 0 || k == n - 1 { rat(1, j as i64) } else { ExactScalar::zero() };
            ParamCoord::new(c.re.clone(), im)
        })
        .collect();
    SatakeParameter::from_coords(ctx, coords, true).expect("length matches rank")
}

/// `s(j) = t + (i/j) r`; the convergence and boundedness statements it is
/// built for need `n >= 3`.
pub fn sequence_param(j: u64, ctx: PrimeContext) -> Result<SatakeParameter> {
    if ctx.n() < 3 {
        return Err(SphError::RankTooSmall { required: 3, got: ctx.n() });
    }
    if j == 0 {
        return Err(SphError::Parse("sequence index j must be positive".into()));
    }
    Ok(sequence_param_unchecked(j, ctx))
}

/// Multiset of Iwasawa valuation vectors `hval(w^{-1})` over the left coset
/// representatives `w` of `U pi^m U`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IwasawaProfile {
    pub m: DominantCoweight,
    pub total: u64,
    pub counts: BTreeMap<Vec<i64>, u64>,
}

fn det_i128(rows: &[&[i128]], cols: &[usize]) -> Option<i128> {
    match cols.len() {
        0 => Some(1),
        1 => Some(rows[0][cols[0]]),
        _ => {
            let mut acc: i128 = 0;
            for (idx, &c) in cols.iter().enumerate() {
                let a = rows[0][c];
                if a == 0 {
                    continue;
                }
                let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
                let term = a.checked_mul(det_i128(&rows[1..], &rest)?)?;
                acc = if idx % 2 == 0 { acc.checked_add(term)? } else { acc.checked_sub(term)? };
            }
            Some(acc)
        }
    }
}

fn det_big(rows: &[&[i128]], cols: &[usize]) -> BigInt {
    if cols.is_empty() {
        return BigInt::one();
    }
    let mut acc = BigInt::zero();
    for (idx, &c) in cols.iter().enumerate() {
        let a = rows[0][c];
        if a == 0 {
            continue;
        }
        let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let term = BigInt::from(a) * det_big(&rows[1..], &rest);
        if idx % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

fn big_valuation(mut x: BigInt, p: u64) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    let mut v = 0;
    while (&x % &pb).is_zero() {
        x /= &pb;
        v += 1;
    }
    Some(v)
}

fn int_valuation(x: i128, p: u64) -> Option<i64> {
    if x == 0 {
        return None;
    }
    let (mut y, p, mut v) = (x, p as i128, 0);
    while y % p == 0 {
        y /= p;
        v += 1;
    }
    Some(v)
}

/// Least valuation of the minors of `b` on the given rows and any
/// `rows.len()` columns.
fn min_minor_valuation(b: &[Vec<i128>], rows: &[usize], p: u64) -> i64 {
    let n = b.len();
    let r = rows.len();
    let picked: Vec<&[i128]> = rows.iter().map(|&i| b[i].as_slice()).collect();
    let mut best: Option<i64> = None;
    let mut cols: Vec<usize> = (0..r).collect();
    loop {
        let v = match det_i128(&picked, &cols) {
            Some(d) => int_valuation(d, p),
            None => big_valuation(det_big(&picked, &cols), p),
        };
        if let Some(v) = v {
            best = Some(best.map_or(v, |b: i64| b.min(v)));
        }
        // next r-subset of 0..n
        let Some(i) = (0..r).rev().find(|&i| cols[i] < n - r + i) else { break };
        cols[i] += 1;
        for k in i + 1..r {
            cols[k] = cols[k - 1] + 1;
        }
    }
    best.expect("nonsingular matrix has a nonzero minor on every row set")
}

/// `hval(w^{-1})` for `w = p^shift B` with `B` integral and nonsingular.
///
/// Left multiplication by `U` preserves the least valuation of the
/// `k`-minors on the first `k` columns, so for `g = u b` with `b` upper
/// triangular those minima are the partial sums of `hval(g)`. Applied to
/// `B^{-1} = adj(B) / det B` with Jacobi's identity for the minors of the
/// adjugate, `hval_k = T_k - T_{k-1} - shift`, where `T_k` is the least
/// valuation of the `(n-k)`-minors of `B` on rows `k+1..n`.
pub fn inverse_valuations_from_integral(b: &[Vec<i128>], shift: i64, p: u64) -> Vec<i64> {
    let n = b.len();
    let t: Vec<i64> = (0..=n)
        .map(|k| if k == n { 0 } else { min_minor_valuation(b, &(k..n).collect::<Vec<_>>(), p) })
        .collect();
    (1..=n).map(|k| t[k] - t[k - 1] - shift).collect()
}

/// Profile straight from the coset representatives' matrices.
pub fn iwasawa_profile_from_reps(list: &CosetList, ctx: &PrimeContext) -> IwasawaProfile {
    let mut counts = BTreeMap::new();
    for w in &list.reps {
        *counts.entry(iwasawa_valuations(w.inverse().matrix(), ctx)).or_insert(0u64) += 1;
    }
    IwasawaProfile { m: list.m.clone(), total: list.len() as u64, counts }
}

/// Streams the Hermite normal forms of the cosets; no coset list is stored,
/// so labels with many cosets stay cheap (the lab's cap still applies).
pub fn iwasawa_profile(lab: &Lab, m: &DominantCoweight) -> Result<Arc<IwasawaProfile>> {
    lab.profiles.get_or_try_insert(m, || {
        let ctx = lab.ctx();
        let shift = m.as_slice().last().copied().unwrap_or(0);
        let mut counts = BTreeMap::new();
        let total = visit_hnf_cosets(m, ctx, lab.coset_cap(), |b| {
            *counts.entry(inverse_valuations_from_integral(b, shift, ctx.p())).or_insert(0u64) += 1;
        })?;
        Ok(IwasawaProfile { m: m.clone(), total: total as u64, counts })
    })
}

fn check_ctx(a: &PrimeContext, b: &PrimeContext) -> Result<()> {
    if a != b {
        return Err(SphError::ContextMismatch(a.to_string(), b.to_string()));
    }
    Ok(())
}

/// `omega_s(pi^m)` for a dominant `m`.
pub fn omega_at(lab: &Lab, s: &SatakeParameter, m: &DominantCoweight) -> Result<Complex64> {
    check_ctx(lab.ctx(), s.ctx())?;
    let prof = iwasawa_profile(lab, m)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (h, &c) in &prof.counts {
        acc += s.power_of_p(h, true) * c as f64;
    }
    Ok(acc / prof.total as f64)
}

pub fn omega_eval(lab: &Lab, s: &SatakeParameter, g: &GroupElement) -> Result<Complex64> {
    check_ctx(lab.ctx(), g.ctx())?;
    omega_at(lab, s, &cartan_label(g))
}

/// `omega_s` with values memoized per Cartan label.
pub struct SphericalFunction<'a> {
    lab: &'a Lab,
    s: SatakeParameter,
    values: Memo<DominantCoweight, Complex64>,
}

impl<'a> SphericalFunction<'a> {
    pub fn new(lab: &'a Lab, s: SatakeParameter) -> Result<Self> {
        check_ctx(lab.ctx(), s.ctx())?;
        Ok(SphericalFunction { lab, s, values: Memo::new() })
    }

    pub fn param(&self) -> &SatakeParameter {
        &self.s
    }

    pub fn lab(&self) -> &Lab {
        self.lab
    }

    pub fn at(&self, m: &DominantCoweight) -> Result<Complex64> {
        self.values.get_or_try_insert(m, || omega_at(self.lab, &self.s, m)).map(|v| *v)
    }

    pub fn eval(&self, g: &GroupElement) -> Result<Complex64> {
        self.at(&cartan_label(g))
    }
}

/// Does some `w in S_n` relate `s'` and `s` modulo `(2 pi i/log p) M-hat`
/// and the diagonal?
pub fn params_equivalent(s: &SatakeParameter, s2: &SatakeParameter, tol: f64) -> Result<bool> {
    check_ctx(s.ctx(), s2.ctx())?;
    Ok(equivalence_witness(s, s2, tol).is_some())
}

pub fn equivalence_witness(s: &SatakeParameter, s2: &SatakeParameter, tol: f64) -> Option<Permutation> {
    let n = s.coords.len();
    let lp = (s.ctx.p() as f64).ln();
    for w in permutations(n) {
        let ws = s.permuted(&w);
        let d: Vec<ParamCoord> = s2.coords.iter().zip(&ws.coords).map(|(a, b)| a.sub(b)).collect();
        let ok = if s.exact && s2.exact {
            // 2*pi/log p is irrational, so rational imaginary parts must agree
            // up to the diagonal and the period parts may differ by integers.
            d.windows(2).all(|x| {
                x[0].re == x[1].re && x[0].im == x[1].im && (&x[0].turns - &x[1].turns).is_integer()
            })
        } else {
            let dc: Vec<Complex64> = d.iter().map(|c| c.to_complex(&s.ctx)).collect();
            dc.windows(2).all(|x| {
                let diff = x[0] - x[1];
                let k = diff.im * lp / (2.0 * PI);
                diff.re.abs() <= tol && (k - k.round()).abs() <= tol
            })
        };
        if ok {
            return Some(w);
        }
    }
    None
}

/// A permutation `w` with `s = -w conj(s)` modulo the diagonal, if any.
pub fn is_star_param(s: &SatakeParameter, tol: f64) -> Option<Permutation> {
    let target = s.conj().neg();
    let n = s.coords.len();
    // Prefer w_0 when it works so the reported witness is canonical.
    let mut order = vec![longest_element(n)];
    order.extend(permutations(n).into_iter().filter(|w| *w != longest_element(n)));
    order.into_iter().find(|w| {
        let ws = target.permuted(w);
        if s.exact {
            ws.coords == s.coords
        } else {
            let a = ws.to_complex();
            let b = s.to_complex();
            a.iter().zip(&b).all(|(x, y)| (x - y).norm() <= tol)
        }
    })
}

/// `tau_omega(f) = sum_m f(m) L(pi^m) omega_s(pi^{-m})`.
pub fn tau_eval(lab: &Lab, s: &SatakeParameter, f: &HeckeElement) -> Result<Complex64> {
    check_ctx(lab.ctx(), f.ctx())?;
    check_ctx(lab.ctx(), s.ctx())?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, c) in f.terms() {
        let l = crate::cosets::coset_count_of(lab, m)? as f64;
        acc += c * l * omega_at(lab, s, &m.dual())?;
    }
    Ok(acc)
}

/// Laurent polynomial in `x_k = p^{-s_k}` with coefficients in
/// `Q[p^{1/2}]`. A key `(e, 1)` carries an extra factor `p^{1/2}`; rational
/// powers of `p` are folded into the coefficient, so the representation is
/// canonical.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct LaurentPolynomial {
    p: u64,
    terms: BTreeMap<(Vec<i64>, u8), ExactScalar>,
}

/// One serialized term: `coeff_num/coeff_den * p^{half_p_power/2} * x^exp`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaurentTerm {
    pub exp: Vec<i64>,
    pub coeff_num: String,
    pub coeff_den: String,
    pub half_p_power: i64,
}

impl LaurentPolynomial {
    pub fn zero(p: u64) -> Self {
        LaurentPolynomial { p, terms: BTreeMap::new() }
    }

    pub fn constant(p: u64, n: usize, c: ExactScalar) -> Self {
        let mut out = Self::zero(p);
        out.add_term(vec![0; n], 0, c);
        out
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `c * p^{half/2} * x^exp`.
    pub fn add_term(&mut self, exp: Vec<i64>, half: i64, c: ExactScalar) {
        if c.is_zero() {
            return;
        }
        let parity = half.rem_euclid(2);
        let whole = (half - parity) / 2;
        let pw = {
            let b = num_traits::pow(BigInt::from(self.p), whole.unsigned_abs() as usize);
            if whole >= 0 {
                ExactScalar::from_integer(b)
            } else {
                ExactScalar::new(BigInt::one(), b)
            }
        };
        let key = (exp, parity as u8);
        let entry = self.terms.entry(key.clone()).or_insert_with(ExactScalar::zero);
        *entry += c * pw;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, u8, &ExactScalar)> {
        self.terms.iter().map(|((e, h), c)| (e, *h, c))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for ((e, h), c) in &other.terms {
            out.add_term(e.clone(), *h as i64, c.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.p);
        for ((e1, h1), c1) in &self.terms {
            for ((e2, h2), c2) in &other.terms {
                let e: Vec<i64> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, (*h1 + *h2) as i64, c1 * c2);
            }
        }
        out
    }

    /// Coefficientwise invariance under every coordinate permutation.
    pub fn is_weyl_invariant(&self) -> bool {
        let Some(((e0, _), _)) = self.terms.iter().next() else {
            return true;
        };
        let perms = permutations(e0.len());
        self.terms.iter().all(|((e, h), c)| {
            perms.iter().all(|w| {
                let we: Vec<i64> = w.iter().map(|&k| e[k]).collect();
                self.terms.get(&(we, *h)) == Some(c)
            })
        })
    }

    /// Value at `x_k = p^{-s_k}`.
    pub fn evaluate(&self, s: &SatakeParameter) -> Complex64 {
        let sqrt_p = (self.p as f64).sqrt();
        self.terms
            .iter()
            .map(|((e, h), c)| {
                let scale = if *h == 1 { sqrt_p } else { 1.0 };
                s.power_of_p(e, false) * (rat_to_f64(c) * scale)
            })
            .sum()
    }

    pub fn to_terms(&self) -> Vec<LaurentTerm> {
        self.terms
            .iter()
            .map(|((e, h), c)| LaurentTerm {
                exp: e.clone(),
                coeff_num: c.numer().to_string(),
                coeff_den: c.denom().to_string(),
                half_p_power: *h as i64,
            })
            .collect()
    }

    pub fn from_terms(p: u64, terms: &[LaurentTerm]) -> Result<Self> {
        let mut out = Self::zero(p);
        for t in terms {
            let num: BigInt = t.coeff_num.parse().map_err(|_| SphError::Parse(format!("bad numerator {}", t.coeff_num)))?;
            let den: BigInt = t.coeff_den.parse().map_err(|_| SphError::Parse(format!("bad denominator {}", t.coeff_den)))?;
            if den.is_zero() {
                return Err(SphError::Parse("zero denominator".into()));
            }
            out.add_term(t.exp.clone(), t.half_p_power, ExactScalar::new(num, den));
        }
        Ok(out)
    }
}

impl fmt::Debug for LaurentPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|((e, h), c)| format!("{c}{}x^{e:?}", if *h == 1 { "*sqrt(p)*" } else { "*" }))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Exact rational value of a real Hecke coefficient.
fn exact_coefficient(m: &DominantCoweight, c: Complex64) -> Result<ExactScalar> {
    if c.im != 0.0 || !c.re.is_finite() {
        return Err(SphError::InexactCoefficient(m.to_string()));
    }
    ExactScalar::from_float(c.re).ok_or_else(|| SphError::InexactCoefficient(m.to_string()))
}

/// `P_f` with `P_f(x(s)) = tau_{omega_s}(f)` for every `s`.
pub fn satake_transform(lab: &Lab, f: &HeckeElement) -> Result<LaurentPolynomial> {
    check_ctx(lab.ctx(), f.ctx())?;
    let ctx = lab.ctx();
    let n = ctx.n() as i64;
    let mut out = LaurentPolynomial::zero(ctx.p());
    for (m, c) in f.terms() {
        let coeff = exact_coefficient(m, c)?;
        let dual = m.dual();
        let l_m = crate::cosets::coset_count_of(lab, m)?;
        let prof = iwasawa_profile(lab, &dual)?;
        // L(pi^m) / L(pi^{-m}) times the averaging weight.
        let weight = &coeff * ExactScalar::new(BigInt::from(l_m), BigInt::from(prof.total));
        for (h, &mult) in &prof.counts {
            // p^{-sum h_k (k - (n+1)/2)} = p^{half/2}
            let half: i64 = -h.iter().enumerate().map(|(k, &hk)| hk * (2 * (k as i64 + 1) - n - 1)).sum::<i64>();
            out.add_term(h.clone(), half, &weight * ExactScalar::from_integer(BigInt::from(mult)));
        }
    }
    Ok(out)
}

/// Majorant `sum_l |alpha(pi^{m(l)}) - 1|` over the Iwasawa profile of
/// `pi^m`; bounds `|omega_s(pi^m) - 1|` whenever `|alpha_s| = 1`.
pub fn convergence_majorant(lab: &Lab, s: &SatakeParameter, m: &DominantCoweight) -> Result<f64> {
    let prof = iwasawa_profile(lab, m)?;
    Ok(prof
        .counts
        .iter()
        .map(|(h, &c)| (s.power_of_p(h, true) - Complex64::new(1.0, 0.0)).norm() * c as f64)
        .sum())
}

/// Elements of `SL_n(Z/p^level)` lifted to exact determinant-one matrices
/// with entries in `Z_(p)`.
pub fn sl_mod_lifts(ctx: &PrimeContext, level: u32, cap: u128) -> Result<Vec<GroupElement>> {
    let n = ctx.n();
    let modulus = ctx.p().checked_pow(level).ok_or(SphError::ResourceLimit { what: "level", count: u128::MAX, cap })? as i64;
    let total = (modulus as u128).checked_pow((n * n) as u32).unwrap_or(u128::MAX);
    if total > cap {
        return Err(SphError::ResourceLimit { what: "matrices mod p^level", count: total, cap });
    }
    let mut out = Vec::new();
    let mut digits = vec![0i64; n * n];
    loop {
        let rows: Vec<Vec<i64>> = digits.chunks(n).map(|c| c.to_vec()).collect();
        let mat = RatMatrix::from_i64_rows(&rows).unwrap();
        let det = mat.det();
        let d = det.to_integer();
        if (&d - BigInt::one()).is_multiple_of(&BigInt::from(modulus)) {
            // Column 0 divided by det: congruent mod p^level, determinant one.
            let mut lifted = mat.clone();
            let dinv = det.recip();
            for r in 0..n {
                let v = &lifted[(r, 0)] * &dinv;
                lifted[(r, 0)] = v;
            }
            out.push(GroupElement::new_unchecked(*ctx, lifted));
        }
        let mut i = 0;
        while i < digits.len() {
            digits[i] += 1;
            if digits[i] < modulus {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        if i == digits.len() {
            break;
        }
    }
    Ok(out)
}

/// Both sides of `int_U omega(g1 u g2) du = omega(g1) omega(g2)`, the
/// integral computed as an exact finite average over `SL_n(Z/p^N)`, `N` the
/// spread of the Cartan label of `g2` (at least 1).
pub fn functional_equation_sides(
    sph: &SphericalFunction<'_>,
    g1: &GroupElement,
    g2: &GroupElement,
    cap: u128,
) -> Result<(Complex64, Complex64)> {
    let ctx = *sph.lab().ctx();
    let level = cartan_label(g2).spread().max(1) as u32;
    let reps = sl_mod_lifts(&ctx, level, cap)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for u in &reps {
        acc += sph.eval(&g1.mul(u).mul(g2))?;
    }
    let lhs = acc / reps.len() as f64;
    let rhs = sph.eval(g1)? * sph.eval(g2)?;
    Ok((lhs, rhs))
}

/// `(num/den)` rendering used by the JSON layer.
pub fn rational_string(x: &ExactScalar) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hecke::HeckeElement;

    fn ctx(p: u64, n: usize) -> PrimeContext {
        PrimeContext::new(p, n).unwrap()
    }

    fn cw(v: &[i64]) -> DominantCoweight {
        DominantCoweight::new(v.to_vec()).unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn trivial_parameter_values() {
        let t = trivial_param(ctx(2, 3));
        let re: Vec<ExactScalar> = t.coords().iter().map(|c| c.re.clone()).collect();
        assert_eq!(re, vec![rat(1, 1), rat(0, 1), rat(-1, 1)]);
        let t2 = trivial_param(ctx(2, 2));
        let re: Vec<ExactScalar> = t2.coords().iter().map(|c| c.re.clone()).collect();
        assert_eq!(re, vec![rat(1, 2), rat(-1, 2)]);
        for m in [[1, 0, -1], [3, -5, 2], [0, 0, 0]] {
            assert!(close(alpha_eval(&t, &m).unwrap(), Complex64::new(1.0, 0.0), 1e-14));
        }
    }

    #[test]
    fn alpha_rejects_bad_sum() {
        let t = trivial_param(ctx(2, 3));
        assert_eq!(alpha_eval(&t, &[1, 0, 0]), Err(SphError::BadCoweightSum(1)));
    }

    #[test]
    fn alpha_along_sequence() {
        let c = ctx(3, 4);
        for j in [1u64, 2, 7] {
            let s = sequence_param(j, c).unwrap();
            for m in [[2, -1, 0, -1], [1, 1, -1, -1], [-3, 0, 1, 2]] {
                let expected = Complex64::from_polar(1.0, -((m[0] + m[3]) as f64) / j as f64 * 3f64.ln());
                assert!(close(alpha_eval(&s, &m).unwrap(), expected, 1e-13));
            }
        }
    }

    #[test]
    fn sequence_requires_rank_three() {
        assert!(matches!(sequence_param(1, ctx(2, 2)), Err(SphError::RankTooSmall { .. })));
        let s1 = sequence_param(1, ctx(2, 3)).unwrap();
        let literal = SatakeParameter::exact(
            ctx(2, 3),
            vec![rat(1, 1), rat(0, 1), rat(-1, 1)],
            vec![rat(1, 1), rat(0, 1), rat(1, 1)],
        )
        .unwrap();
        assert_eq!(s1, literal);
        assert_eq!(s1.conj().neg().permuted(&longest_element(3)), s1);
    }

    #[test]
    fn star_test_examples() {
        let c = ctx(2, 2);
        let s = SatakeParameter::exact(c, vec![rat(1, 1), rat(-1, 1)], vec![rat(1, 1), rat(-1, 1)]).unwrap();
        assert_eq!(is_star_param(&s, DEFAULT_TOL), None);
        assert_eq!(is_star_param(&trivial_param(c), DEFAULT_TOL), Some(vec![1, 0]));
        let s = sequence_param(3, ctx(5, 3)).unwrap();
        assert_eq!(is_star_param(&s, DEFAULT_TOL), Some(vec![2, 1, 0]));
    }

    #[test]
    fn equivalence_examples() {
        let c = ctx(3, 3);
        let s = SatakeParameter::exact(c, vec![rat(1, 3), rat(2, 1), rat(-5, 7)], vec![rat(1, 2), rat(0, 1), rat(3, 1)]).unwrap();
        for w in permutations(3) {
            assert!(params_equivalent(&s, &s.permuted(&w), DEFAULT_TOL).unwrap());
        }
        let shifted = s.shifted_by_period(&[rat(1, 1), rat(0, 1), rat(0, 1)]).unwrap();
        assert!(params_equivalent(&s, &shifted, DEFAULT_TOL).unwrap());
        let half = s.shifted_by_period(&[rat(1, 2), rat(0, 1), rat(0, 1)]).unwrap();
        assert!(!params_equivalent(&s, &half, DEFAULT_TOL).unwrap());

        // The same shift through floating inputs goes through the tolerance path.
        let sc = s.to_complex();
        let lp = 3f64.ln();
        let re: Vec<f64> = sc.iter().map(|z| z.re).collect();
        let mut im: Vec<f64> = sc.iter().map(|z| z.im).collect();
        let sf = SatakeParameter::from_f64(c, &re, &im).unwrap();
        im[0] += 2.0 * PI / lp;
        let sf2 = SatakeParameter::from_f64(c, &re, &im).unwrap();
        assert!(params_equivalent(&sf, &sf2, 1e-9).unwrap());
        im[0] += 0.1;
        let sf3 = SatakeParameter::from_f64(c, &re, &im).unwrap();
        assert!(!params_equivalent(&sf, &sf3, 1e-9).unwrap());
    }

    #[test]
    fn omega_trivial_and_identity() {
        let c = ctx(2, 3);
        let lab = Lab::new(c);
        let t = trivial_param(c);
        let s = sequence_param(2, c).unwrap();
        for m in DominantCoweight::all_up_to_spread(3, 3) {
            assert!(close(omega_at(&lab, &t, &m).unwrap(), Complex64::new(1.0, 0.0), 1e-12));
        }
        let e = GroupElement::identity(c);
        assert_eq!(omega_eval(&lab, &s, &e).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn profile_counts_match_coset_count() {
        let c = ctx(3, 2);
        let lab = Lab::new(c);
        let prof = iwasawa_profile(&lab, &cw(&[1, -1])).unwrap();
        assert_eq!(prof.total, 12);
        assert_eq!(prof.counts.values().sum::<u64>(), 12);
        for h in prof.counts.keys() {
            assert_eq!(h.iter().sum::<i64>(), 0);
        }
    }

    #[test]
    fn streamed_profile_matches_matrix_route() {
        for (p, n, max) in [(2, 2, 4), (3, 2, 3), (2, 3, 3), (3, 3, 2), (2, 4, 2)] {
            let c = ctx(p, n);
            let lab = Lab::new(c);
            for m in DominantCoweight::all_up_to_spread(n, max) {
                let list = crate::cosets::enumerate_left_cosets(&m, &c, 1_000_000).unwrap();
                assert_eq!(*iwasawa_profile(&lab, &m).unwrap(), iwasawa_profile_from_reps(&list, &c), "p={p} m={m}");
            }
        }
    }

    #[test]
    fn satake_of_identity_is_one() {
        let c = ctx(2, 2);
        let lab = Lab::new(c);
        let one = HeckeElement::identity(c);
        assert_eq!(satake_transform(&lab, &one).unwrap(), LaurentPolynomial::constant(2, 2, rat(1, 1)));
    }

    #[test]
    fn satake_rejects_complex_coefficients() {
        let c = ctx(2, 2);
        let lab = Lab::new(c);
        let f = HeckeElement::from_terms(c, vec![(cw(&[1, -1]), Complex64::new(0.0, 1.0))]).unwrap();
        assert!(matches!(satake_transform(&lab, &f), Err(SphError::InexactCoefficient(_))));
    }

    #[test]
    fn laurent_half_powers_fold() {
        let mut a = LaurentPolynomial::zero(2);
        a.add_term(vec![1, -1], 1, rat(1, 1));
        let sq = a.mul(&a);
        let mut expected = LaurentPolynomial::zero(2);
        expected.add_term(vec![2, -2], 0, rat(2, 1));
        assert_eq!(sq, expected);
    }

    #[test]
    fn permutation_enumeration() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(permutations(1), vec![vec![0]]);
    }
}
