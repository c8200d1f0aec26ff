mod common;

use common::{ctx, cw, grid, rat};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::Value;
use sphlab::json::{gram_certificate_from_json, unboundedness_inputs};
use sphlab::positivity::{
    find_nonpd_witness, gram_matrix, psd_verdict, reverify, reverify_unboundedness, sl2_profile, two_point_form, unboundedness_certificate, SearchConfig,
    SearchOutcome, Verdict, DEFAULT_PSD_TOL,
};
use sphlab::spherical::{omega_eval, sequence_param};
use sphlab::{GroupElement, Lab, SatakeParameter};

const WITNESS: &str = include_str!("fixtures/nonpd_witness_p2_n3.json");
const UNBOUNDED: &str = include_str!("fixtures/unbounded_p2_sigma1.json");

fn nalgebra_min_eigenvalue(gram: &[Vec<Complex64>]) -> f64 {
    let n = gram.len();
    let m = DMatrix::from_fn(n, n, |r, c| gram[r][c]);
    m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

#[test]
fn frozen_witness_reverifies() {
    let doc: Value = serde_json::from_str(WITNESS).unwrap();
    let cert = gram_certificate_from_json(&doc).unwrap();
    assert_eq!(doc["verdict"], "NOT_PSD");
    assert!(cert.elements.len() <= 8);
    let r = reverify(&cert, 1 << 20, DEFAULT_PSD_TOL).unwrap();
    assert!(r.passed, "{r:?}");
    assert!(r.max_entry_error < 1e-12);
    let frozen = doc["min_eigenvalue"].as_f64().unwrap();
    assert!(frozen < -DEFAULT_PSD_TOL);
    assert!((nalgebra_min_eigenvalue(&cert.gram) - frozen).abs() < 1e-10);
}

#[test]
fn search_reproduces_frozen_witness() {
    let doc: Value = serde_json::from_str(WITNESS).unwrap();
    let frozen = gram_certificate_from_json(&doc).unwrap();
    let lab = Lab::new(ctx(2, 3));
    let cfg = SearchConfig { j_max: 1, ..SearchConfig::default() };
    let SearchOutcome::Found(found) = find_nonpd_witness(&lab, &cfg).unwrap() else { panic!("no witness") };
    assert_eq!(found.j, doc["j"].as_u64().unwrap());
    assert_eq!(found.certificate.elements, frozen.elements);
    assert!((found.verdict.min_eigenvalue() - doc["min_eigenvalue"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn eigen_solver_agrees_with_nalgebra() {
    let c = ctx(2, 3);
    let lab = Lab::new(c);
    let elements: Vec<GroupElement> = grid(3, 3).iter().map(|m| GroupElement::pi_power(c, m.as_slice()).unwrap()).collect();
    for j in [1, 2, 5] {
        let cert = gram_matrix(&lab, &sequence_param(j, c).unwrap(), &elements).unwrap();
        let v = psd_verdict(&cert, DEFAULT_PSD_TOL).unwrap();
        assert!((v.min_eigenvalue() - nalgebra_min_eigenvalue(&cert.gram)).abs() < 1e-10);
    }
}

#[test]
fn unitary_parameters_are_positive_definite() {
    // Purely imaginary parameters give unitary principal series, whose
    // spherical functions are positive definite.
    let c = ctx(2, 3);
    let lab = Lab::new(c);
    let s = SatakeParameter::from_f64(c, &[0.0; 3], &[0.7, -0.2, 0.4]).unwrap();
    let frozen = gram_certificate_from_json(&serde_json::from_str(WITNESS).unwrap()).unwrap();
    let cert = gram_matrix(&lab, &s, &frozen.elements).unwrap();
    assert!(matches!(psd_verdict(&cert, DEFAULT_PSD_TOL).unwrap(), Verdict::Psd { .. }));
}

#[test]
fn trivial_gram_is_rank_one() {
    let c = ctx(3, 3);
    let lab = Lab::new(c);
    let elements: Vec<GroupElement> = grid(3, 2).iter().map(|m| GroupElement::pi_power(c, m.as_slice()).unwrap()).collect();
    let cert = gram_matrix(&lab, &sphlab::spherical::trivial_param(c), &elements).unwrap();
    assert!(cert.gram.iter().flatten().all(|z| (z - 1.0).norm() < 1e-12));
    assert!(matches!(psd_verdict(&cert, DEFAULT_PSD_TOL).unwrap(), Verdict::Psd { .. }));
}

#[test]
fn frozen_unboundedness_reverifies() {
    let doc: Value = serde_json::from_str(UNBOUNDED).unwrap();
    let (c, sigma, m, value) = unboundedness_inputs(&doc).unwrap();
    let lab = Lab::new(c);
    let cert = unboundedness_certificate(&lab, &sigma, 10).unwrap();
    assert_eq!(cert.m, m);
    assert!((cert.value - value).abs() < 1e-14);
    assert!((reverify_unboundedness(&cert, 1 << 20).unwrap() - 19.0 / 12.0).abs() < 1e-14);
    let g = GroupElement::pi_power(c, &[m, -m]).unwrap();
    let form = two_point_form(&lab, &cert.s, &g).unwrap();
    assert!((form.re - (2.0 - 2.0 * value)).abs() < 1e-12 && form.im.abs() < 1e-12);
}

#[test]
fn trivial_sl2_profile_is_flat() {
    let lab = Lab::new(ctx(3, 2));
    assert!(sl2_profile(&lab, &rat(1, 2), 5).unwrap().iter().all(|v| (v - 1.0).abs() < 1e-12));
    assert!(unboundedness_certificate(&lab, &rat(1, 2), 5).is_err());
}

#[test]
fn sequence_values_bounded_by_one() {
    let c = ctx(2, 3);
    let lab = Lab::new(c);
    for j in [1, 3, 16] {
        let s = sequence_param(j, c).unwrap();
        for m in grid(3, 3) {
            let v = omega_eval(&lab, &s, &GroupElement::pi_power(c, m.as_slice()).unwrap()).unwrap();
            assert!(v.norm() <= 1.0 + 1e-12, "j={j} m={m:?}");
        }
    }
    let _ = cw(&[0, 0, 0]);
}
