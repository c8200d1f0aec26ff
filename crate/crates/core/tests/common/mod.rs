//! Test-side oracles, written independently of the library code paths they
//! check.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sphlab::cosets::left_coset_reps;
use sphlab::lab::StructureConstants;
use sphlab::padic::{cartan_label, random_unimodular};
use sphlab::spherical::permutations;
use sphlab::{DominantCoweight, ExactScalar, GroupElement, Lab, PrimeContext, RatMatrix};

pub fn ctx(p: u64, n: usize) -> PrimeContext {
    PrimeContext::new(p, n).unwrap()
}

pub fn cw(v: &[i64]) -> DominantCoweight {
    DominantCoweight::new(v.to_vec()).unwrap()
}

pub fn rat(a: i64, b: i64) -> ExactScalar {
    ExactScalar::new(BigInt::from(a), BigInt::from(b))
}

/// Coweights with spread at most `max_spread`.
pub fn grid(n: usize, max_spread: i64) -> Vec<DominantCoweight> {
    DominantCoweight::all_up_to_spread(n, max_spread)
}

/// Elementary matrix `I + c E_kl` with `c = a / (p^e q)`, `q` prime to `p`:
/// covers both `p`-adic denominators and units that are not integers.
fn elementary(ctx: &PrimeContext, rng: &mut ChaCha8Rng) -> RatMatrix {
    let n = ctx.n();
    let k = rng.gen_range(0..n);
    let mut l = rng.gen_range(0..n - 1);
    if l >= k {
        l += 1;
    }
    let p = ctx.p() as i64;
    let mut q = rng.gen_range(1..6i64);
    while q % p == 0 {
        q += 1;
    }
    let e = rng.gen_range(0..3u32);
    let a = rng.gen_range(-4..=4i64);
    let mut m = RatMatrix::identity(n);
    m.add_row_multiple(k, l, &rat(a, p.pow(e) * q));
    m
}

/// A seeded element of `SL_n(Q)` mixing `pi^m`, unimodular integer matrices
/// and elementary matrices with denominators.
pub fn random_element(ctx: &PrimeContext, seed: u64, max_spread: i64) -> GroupElement {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = grid(ctx.n(), max_spread);
    let m = &g[rng.gen_range(0..g.len())];
    let mut acc = random_unimodular(*ctx, &mut rng, 5).into_matrix();
    acc = &acc * GroupElement::pi_power(*ctx, m.as_slice()).unwrap().matrix();
    for _ in 0..rng.gen_range(0..4) {
        acc = &acc * &elementary(ctx, &mut rng);
    }
    acc = &acc * random_unimodular(*ctx, &mut rng, 5).matrix();
    GroupElement::new(*ctx, acc).unwrap()
}

/// Macdonald's closed formula for `omega_s(pi^lambda)` on `SL_n(Q_p)`:
/// `p^{-<lambda, rho>} / W(1/p) * sum_w prod_{i<j} (1 - x_{wj}/(p x_{wi})) /
/// (1 - x_{wj}/x_{wi}) * prod_k x_{wk}^{lambda_k}`, `x_k = p^{-s_k}`.
/// Valid for regular `s` (all `x_i / x_j` different from 1).
pub fn macdonald_omega(p: u64, s: &[Complex64], lambda: &[i64]) -> Complex64 {
    let n = s.len();
    let pf = p as f64;
    let lp = pf.ln();
    let x: Vec<Complex64> = s.iter().map(|sk| (-sk * lp).exp()).collect();
    let rho_pair: f64 = lambda.iter().enumerate().map(|(k, &l)| l as f64 * ((n as f64 + 1.0) / 2.0 - (k as f64 + 1.0))).sum();
    let mut total = Complex64::new(0.0, 0.0);
    let mut poincare = 0.0;
    for w in permutations(n) {
        let inversions = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| w[i] > w[j]).count();
        poincare += pf.powi(-(inversions as i32));
        let mut term = Complex64::new(1.0, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                let r = x[w[j]] / x[w[i]];
                term *= (1.0 - r / pf) / (1.0 - r);
            }
        }
        for k in 0..n {
            term *= x[w[k]].powi(lambda[k] as i32);
        }
        total += term;
    }
    total * pf.powf(-rho_pair) / poincare
}

/// `omega_s(pi^m)` under the convention `omega_s(g) = int_U psi(g^{-1} u) du`:
/// the inverse turns Macdonald's label `lambda` into its dual.
pub fn omega_oracle(p: u64, s: &[Complex64], m: &DominantCoweight) -> Complex64 {
    macdonald_omega(p, s, m.dual().as_slice())
}

/// Structure constants through right translates:
/// `c^{m3} = #{ v in U pi^{-m2} U / U : pi^{m3} v in U pi^{m1} U }`.
pub fn structure_constants_by_right_cosets(lab: &Lab, m1: &DominantCoweight, m2: &DominantCoweight) -> StructureConstants {
    let ctx = *lab.ctx();
    let reps = left_coset_reps(lab, &m2.dual()).unwrap();
    let mut out = StructureConstants::new();
    for m3 in DominantCoweight::product_candidates(m1, m2) {
        let pm = GroupElement::pi_power(ctx, m3.as_slice()).unwrap();
        let c = reps.reps.iter().filter(|v| cartan_label(&pm.mul(v)) == *m1).count() as u64;
        if c > 0 {
            out.insert(m3, c);
        }
    }
    out
}

pub fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}
