//! The Hecke algebra `H(G, U)` of finitely supported bi-`U`-invariant
//! functions, in the basis of characteristic functions of double cosets.
//!
//! Structure constants are exact integers; coefficients of elements are
//! double-precision complex numbers riding on top of them.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cosets::{coset_count_of, left_coset_reps};
use crate::coweight::DominantCoweight;
use crate::error::{Result, SphError};
use crate::lab::{Lab, StructureConstants};
use crate::matrix::ExactScalar;
use crate::padic::{cartan_label, GroupElement, PrimeContext};

/// Finitely supported map from double-coset labels to coefficients; zero
/// coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct HeckeElement {
    ctx: PrimeContext,
    coeffs: BTreeMap<DominantCoweight, Complex64>,
}

/// JSON row `{"m": [..], "re": .., "im": ..}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeckeTerm {
    pub m: Vec<i64>,
    pub re: f64,
    pub im: f64,
}

/// JSON row `{"m3": [..], "c": ..}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureTerm {
    pub m3: Vec<i64>,
    pub c: u64,
}

impl HeckeElement {
    pub fn zero(ctx: PrimeContext) -> Self {
        HeckeElement { ctx, coeffs: BTreeMap::new() }
    }

    /// `chi_U`, the unit of the algebra.
    pub fn identity(ctx: PrimeContext) -> Self {
        Self::basis(ctx, DominantCoweight::zero(ctx.n()))
    }

    /// Characteristic function of `U pi^m U`.
    pub fn basis(ctx: PrimeContext, m: DominantCoweight) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(m, Complex64::new(1.0, 0.0));
        HeckeElement { ctx, coeffs }
    }

    pub fn from_terms(ctx: PrimeContext, terms: impl IntoIterator<Item = (DominantCoweight, Complex64)>) -> Result<Self> {
        let mut out = Self::zero(ctx);
        for (m, c) in terms {
            if m.rank() != ctx.n() {
                return Err(SphError::InvalidCoweight(format!("{m} has rank {} but n = {}", m.rank(), ctx.n())));
            }
            out.add_at(m, c);
        }
        Ok(out)
    }

    fn add_at(&mut self, m: DominantCoweight, c: Complex64) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(m.clone()).or_insert_with(Complex64::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&m);
        }
    }

    pub fn ctx(&self) -> &PrimeContext {
        &self.ctx
    }

    pub fn terms(&self) -> impl Iterator<Item = (&DominantCoweight, Complex64)> {
        self.coeffs.iter().map(|(m, c)| (m, *c))
    }

    pub fn coeff(&self, m: &DominantCoweight) -> Complex64 {
        self.coeffs.get(m).copied().unwrap_or_default()
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero(self.ctx);
        for (m, v) in &self.coeffs {
            out.add_at(m.clone(), v * c);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_ctx(&self.ctx, &other.ctx)?;
        let mut out = self.clone();
        for (m, v) in &other.coeffs {
            out.add_at(m.clone(), *v);
        }
        Ok(out)
    }

    /// Coefficientwise comparison with absolute tolerance.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.ctx == other.ctx
            && self.coeffs.keys().chain(other.coeffs.keys()).all(|m| (self.coeff(m) - other.coeff(m)).norm() <= tol)
    }

    pub fn to_json_terms(&self) -> Vec<HeckeTerm> {
        self.coeffs
            .iter()
            .map(|(m, c)| HeckeTerm { m: m.as_slice().to_vec(), re: c.re, im: c.im })
            .collect()
    }

    pub fn from_json_terms(ctx: PrimeContext, terms: &[HeckeTerm]) -> Result<Self> {
        let parsed = terms
            .iter()
            .map(|t| Ok((DominantCoweight::new(t.m.clone())?, Complex64::new(t.re, t.im))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(ctx, parsed)
    }
}

fn check_ctx(a: &PrimeContext, b: &PrimeContext) -> Result<()> {
    if a != b {
        return Err(SphError::ContextMismatch(a.to_string(), b.to_string()));
    }
    Ok(())
}

fn compute_structure_constants(lab: &Lab, m1: &DominantCoweight, m2: &DominantCoweight) -> Result<StructureConstants> {
    let ctx = *lab.ctx();
    let reps = left_coset_reps(lab, m1)?;
    let inverses: Vec<GroupElement> = reps.reps.par_iter().map(|w| w.inverse()).collect();
    let candidates = DominantCoweight::product_candidates(m1, m2);
    let counts: Vec<(DominantCoweight, u64)> = candidates
        .into_par_iter()
        .map(|m3| {
            let target = GroupElement::pi_power(ctx, m3.as_slice()).expect("dominant coweights have zero sum");
            let c = inverses.iter().filter(|winv| cartan_label(&winv.mul(&target)) == *m2).count() as u64;
            (m3, c)
        })
        .collect();
    Ok(counts.into_iter().filter(|(_, c)| *c > 0).collect())
}

/// `chi_{U pi^m1 U} * chi_{U pi^m2 U} = sum_m3 c^{m3} chi_{U pi^m3 U}`, with
/// `c^{m3} = #{ w in U pi^m1 U / U : w^{-1} pi^m3 in U pi^m2 U }`.
pub fn structure_constants(lab: &Lab, m1: &DominantCoweight, m2: &DominantCoweight) -> Result<Arc<StructureConstants>> {
    for m in [m1, m2] {
        if m.rank() != lab.ctx().n() {
            return Err(SphError::InvalidCoweight(format!("{m} has rank {} but n = {}", m.rank(), lab.ctx().n())));
        }
    }
    let key = (m1.clone(), m2.clone());
    lab.structure.get_or_try_insert(&key, || compute_structure_constants(lab, m1, m2))
}

pub fn structure_terms(sc: &StructureConstants) -> Vec<StructureTerm> {
    sc.iter().map(|(m, &c)| StructureTerm { m3: m.as_slice().to_vec(), c }).collect()
}

/// Bilinear extension of the structure constants.
pub fn convolve(lab: &Lab, f1: &HeckeElement, f2: &HeckeElement) -> Result<HeckeElement> {
    check_ctx(&f1.ctx, &f2.ctx)?;
    check_ctx(lab.ctx(), &f1.ctx)?;
    let mut out = HeckeElement::zero(f1.ctx);
    for (m1, c1) in &f1.coeffs {
        for (m2, c2) in &f2.coeffs {
            let sc = structure_constants(lab, m1, m2)?;
            for (m3, &k) in sc.iter() {
                out.add_at(m3.clone(), c1 * c2 * k as f64);
            }
        }
    }
    Ok(out)
}

/// `Delta(pi^m) = L(pi^m) / L(pi^{-m})`, computed rather than assumed.
pub fn modular_function(lab: &Lab, m: &DominantCoweight) -> Result<ExactScalar> {
    let a = coset_count_of(lab, m)?;
    let b = coset_count_of(lab, &m.dual())?;
    Ok(ExactScalar::new(a.into(), b.into()))
}

/// `f*(g) = Delta(g^{-1}) conj(f(g^{-1}))`.
pub fn involve(lab: &Lab, f: &HeckeElement) -> Result<HeckeElement> {
    check_ctx(lab.ctx(), &f.ctx)?;
    let mut out = HeckeElement::zero(f.ctx);
    for (m, c) in &f.coeffs {
        // The result at m' = dual(m) reads f at m.
        let target = m.dual();
        let delta = modular_function(lab, m)?;
        let d = num_traits::ToPrimitive::to_f64(&delta).unwrap_or(f64::NAN);
        out.add_at(target, c.conj() * d);
    }
    Ok(out)
}

/// `||f||_1 = sum_m |f(m)| L(pi^m)`.
pub fn l1_norm(lab: &Lab, f: &HeckeElement) -> Result<f64> {
    check_ctx(lab.ctx(), &f.ctx)?;
    let mut acc = 0.0;
    for (m, c) in &f.coeffs {
        acc += c.norm() * coset_count_of(lab, m)? as f64;
    }
    Ok(acc)
}

/// Value of `f` at an arbitrary group element.
pub fn evaluate_at(f: &HeckeElement, g: &GroupElement) -> Complex64 {
    f.coeff(&cartan_label(g))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cw(v: &[i64]) -> DominantCoweight {
        DominantCoweight::new(v.to_vec()).unwrap()
    }

    #[test]
    fn unit_laws() {
        let ctx = PrimeContext::new(2, 2).unwrap();
        let lab = Lab::new(ctx);
        let f = HeckeElement::from_terms(ctx, vec![(cw(&[1, -1]), Complex64::new(2.0, -1.0)), (cw(&[0, 0]), Complex64::new(0.5, 0.0))]).unwrap();
        let e = HeckeElement::identity(ctx);
        assert!(convolve(&lab, &e, &f).unwrap().approx_eq(&f, 0.0));
        assert!(convolve(&lab, &f, &e).unwrap().approx_eq(&f, 0.0));
        assert_eq!(involve(&lab, &e).unwrap(), e);
        assert!(involve(&lab, &involve(&lab, &f).unwrap()).unwrap().approx_eq(&f, 0.0));
    }

    #[test]
    fn identity_constants() {
        let ctx = PrimeContext::new(3, 3).unwrap();
        let lab = Lab::new(ctx);
        let m = cw(&[2, -1, -1]);
        let sc = structure_constants(&lab, &DominantCoweight::zero(3), &m).unwrap();
        assert_eq!(sc.len(), 1);
        assert_eq!(sc.get(&m), Some(&1));
    }

    #[test]
    fn l1_of_basis() {
        let ctx = PrimeContext::new(2, 2).unwrap();
        let lab = Lab::new(ctx);
        assert_eq!(l1_norm(&lab, &HeckeElement::identity(ctx)).unwrap(), 1.0);
        assert_eq!(l1_norm(&lab, &HeckeElement::basis(ctx, cw(&[1, -1]))).unwrap(), 6.0);
    }

    #[test]
    fn context_mismatch() {
        let a = PrimeContext::new(2, 2).unwrap();
        let b = PrimeContext::new(3, 2).unwrap();
        let lab = Lab::new(a);
        let r = convolve(&lab, &HeckeElement::identity(a), &HeckeElement::identity(b));
        assert!(matches!(r, Err(SphError::ContextMismatch(..))));
    }

    #[test]
    fn zero_coefficients_are_dropped() {
        let ctx = PrimeContext::new(2, 2).unwrap();
        let f = HeckeElement::from_terms(ctx, vec![(cw(&[1, -1]), Complex64::new(1.0, 0.0)), (cw(&[1, -1]), Complex64::new(-1.0, 0.0))]).unwrap();
        assert_eq!(f.support_len(), 0);
    }
}
