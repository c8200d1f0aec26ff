mod common;

use common::{close, ctx, cw, grid, omega_oracle, rat, random_element};
use num_complex::Complex64;
use proptest::prelude::*;
use sphlab::hecke::{convolve, HeckeElement};
use sphlab::padic::cartan_label;
use sphlab::spherical::{
    equivalence_witness, is_star_param, longest_element, omega_at, omega_eval, params_equivalent, permutations, satake_transform, sequence_param,
    tau_eval, trivial_param, SphericalFunction,
};
use sphlab::{GroupElement, Lab, SatakeParameter};

fn generic_param(c: sphlab::PrimeContext, seed: u64) -> SatakeParameter {
    let n = c.n();
    let re: Vec<f64> = (0..n).map(|k| ((seed.wrapping_mul(31) + k as u64 * 7) % 13) as f64 * 0.11 - 0.6).collect();
    let im: Vec<f64> = (0..n).map(|k| ((seed.wrapping_mul(17) + k as u64 * 5) % 11) as f64 * 0.09).collect();
    SatakeParameter::from_f64(c, &re, &im).unwrap()
}

#[test]
fn matches_macdonald_formula() {
    for (p, n, spread) in [(2u64, 2usize, 6i64), (3, 2, 4), (5, 2, 3), (2, 3, 3), (3, 3, 3), (2, 4, 2)] {
        let c = ctx(p, n);
        let lab = Lab::new(c);
        for seed in 0..3 {
            let s = generic_param(c, seed);
            let sc = s.to_complex();
            for m in grid(n, spread) {
                let got = omega_at(&lab, &s, &m).unwrap();
                let want = omega_oracle(p, &sc, &m);
                assert!(close(got, want, 1e-10), "p={p} n={n} m={m:?}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn sl2_value_at_sigma_one() {
    let c = ctx(2, 2);
    let lab = Lab::new(c);
    let s = SatakeParameter::real(c, vec![rat(1, 1), rat(-1, 1)]).unwrap();
    let v = omega_at(&lab, &s, &cw(&[1, -1])).unwrap();
    assert!((v - Complex64::new(19.0 / 12.0, 0.0)).norm() < 1e-14, "{v}");
}

#[test]
fn trivial_parameter_gives_one() {
    for (p, n) in [(2u64, 2usize), (3, 3), (2, 4)] {
        let c = ctx(p, n);
        let lab = Lab::new(c);
        let t = trivial_param(c);
        for m in grid(n, 2) {
            assert!((omega_at(&lab, &t, &m).unwrap() - 1.0).norm() < 1e-12);
        }
    }
}

#[test]
fn satake_transform_is_multiplicative_and_invariant() {
    let c = ctx(2, 3);
    let lab = Lab::new(c);
    let g = grid(3, 3);
    let elems: Vec<HeckeElement> = g
        .iter()
        .enumerate()
        .map(|(i, m)| HeckeElement::from_terms(c, [(m.clone(), Complex64::new(1.0 + i as f64, 0.0)), (cw(&[0, 0, 0]), Complex64::new(-0.5, 0.0))]).unwrap())
        .collect();
    for a in &elems {
        let pa = satake_transform(&lab, a).unwrap();
        assert!(pa.is_weyl_invariant());
        for b in &elems {
            let pb = satake_transform(&lab, b).unwrap();
            let pab = satake_transform(&lab, &convolve(&lab, a, b).unwrap()).unwrap();
            assert!(pab == pa.mul(&pb));
        }
    }
}

#[test]
fn satake_transform_evaluates_to_character() {
    let c = ctx(3, 2);
    let lab = Lab::new(c);
    let s = generic_param(c, 4);
    for m in grid(2, 4) {
        let f = HeckeElement::basis(c, m);
        let poly = satake_transform(&lab, &f).unwrap();
        assert!(close(poly.evaluate(&s), tau_eval(&lab, &s, &f).unwrap(), 1e-10));
    }
}

#[test]
fn sequence_parameters_are_star_and_pairwise_distinct() {
    for p in [2u64, 3] {
        let c = ctx(p, 3);
        let params: Vec<_> = (1..=10).map(|j| sequence_param(j, c).unwrap()).collect();
        for s in &params {
            assert!(s.is_exact());
            assert_eq!(is_star_param(s, 1e-9), Some(longest_element(3)));
        }
        for (i, a) in params.iter().enumerate() {
            for b in &params[i + 1..] {
                assert!(!params_equivalent(a, b, 1e-9).unwrap());
            }
        }
    }
}

#[test]
fn period_shift_and_permutation_are_equivalent() {
    let c = ctx(3, 3);
    let lab = Lab::new(c);
    let s = sequence_param(3, c).unwrap();
    let shifted = s.shifted_by_period(&[rat(1, 1), rat(-2, 1), rat(0, 1)]).unwrap().permuted(&[2, 0, 1]);
    assert!(params_equivalent(&s, &shifted, 1e-9).unwrap());
    assert!(equivalence_witness(&s, &shifted, 1e-9).is_some());
    for m in grid(3, 2) {
        assert!(close(omega_at(&lab, &s, &m).unwrap(), omega_at(&lab, &shifted, &m).unwrap(), 1e-12));
    }
}

#[test]
fn star_parameter_conjugation_identity() {
    let c = ctx(2, 3);
    let lab = Lab::new(c);
    let s = sequence_param(5, c).unwrap();
    for m in grid(3, 3) {
        let g = random_element(&c, 7, 0).mul(&GroupElement::pi_power(c, m.as_slice()).unwrap());
        let a = omega_eval(&lab, &s, &g.inverse()).unwrap();
        let b = omega_eval(&lab, &s, &g).unwrap().conj();
        assert!(close(a, b, 1e-9));
    }
}

#[test]
fn spherical_function_memoizes() {
    let c = ctx(2, 2);
    let lab = Lab::new(c);
    let sph = SphericalFunction::new(&lab, generic_param(c, 1)).unwrap();
    let g = GroupElement::pi_power(c, &[2, -2]).unwrap();
    assert_eq!(sph.eval(&g).unwrap(), sph.at(&cartan_label(&g)).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weyl_invariance_and_inversion(seed in 0u64..1000, w_idx in 0usize..6, elem_seed in any::<u64>()) {
        let c = ctx(2, 3);
        let lab = Lab::new(c);
        let s = generic_param(c, seed);
        let w = &permutations(3)[w_idx];
        let g = random_element(&c, elem_seed, 2);
        let v = omega_eval(&lab, &s, &g).unwrap();
        prop_assert!(close(omega_eval(&lab, &s.permuted(w), &g).unwrap(), v, 1e-12));
        prop_assert!(close(omega_eval(&lab, &s.neg(), &g).unwrap(), omega_eval(&lab, &s, &g.inverse()).unwrap(), 1e-12));
    }
}
