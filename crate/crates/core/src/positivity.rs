//! Positive-definiteness tests for spherical functions via Gram matrices
//! `[omega_s(g_j^{-1} g_k)]`, with recomputable certificates.

use num_bigint::BigInt;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cosets::left_coset_reps;
use crate::coweight::DominantCoweight;
use crate::eigen::{hermitian_defect, hermitian_eigen, quadratic_form, CMatrix};
use crate::error::{Result, SphError};
use crate::lab::Lab;
use crate::matrix::ExactScalar;
use crate::padic::{cartan_label, GroupElement, PrimeContext};
use crate::spherical::{is_star_param, omega_at, sequence_param, SatakeParameter, SphericalFunction, DEFAULT_TOL};

/// Threshold separating genuine negativity from round-off.
pub const DEFAULT_PSD_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct GramCertificate {
    pub s: SatakeParameter,
    pub elements: Vec<GroupElement>,
    pub gram: CMatrix,
    /// Defect of the raw matrix before any symmetrization.
    pub hermitian_defect: f64,
    pub min_eigenvalue: Option<f64>,
    pub witness: Option<Vec<Complex64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Psd { min_eigenvalue: f64 },
    NotPsd { min_eigenvalue: f64, witness: Vec<Complex64> },
    Inconclusive { min_eigenvalue: f64 },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Psd { .. } => "PSD",
            Verdict::NotPsd { .. } => "NOT_PSD",
            Verdict::Inconclusive { .. } => "INCONCLUSIVE",
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match self {
            Verdict::Psd { min_eigenvalue } | Verdict::Inconclusive { min_eigenvalue } => *min_eigenvalue,
            Verdict::NotPsd { min_eigenvalue, .. } => *min_eigenvalue,
        }
    }
}

fn raw_gram(sph: &SphericalFunction<'_>, elements: &[GroupElement]) -> Result<CMatrix> {
    let inverses: Vec<GroupElement> = elements.iter().map(|g| g.inverse()).collect();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); elements.len()]; elements.len()];
    for (j, gj_inv) in inverses.iter().enumerate() {
        for (k, gk) in elements.iter().enumerate() {
            out[j][k] = sph.eval(&gj_inv.mul(gk))?;
        }
    }
    Ok(out)
}

/// `[omega_s(g_j^{-1} g_k)]`; stored Hermitian-symmetrized when `s` passes
/// the star test.
pub fn gram_matrix(lab: &Lab, s: &SatakeParameter, elements: &[GroupElement]) -> Result<GramCertificate> {
    if elements.is_empty() {
        return Err(SphError::DimensionMismatch { expected: 1, got: 0 });
    }
    let sph = SphericalFunction::new(lab, s.clone())?;
    let mut gram = raw_gram(&sph, elements)?;
    let defect = hermitian_defect(&gram);
    if is_star_param(s, DEFAULT_TOL).is_some() {
        let n = gram.len();
        for j in 0..n {
            for k in j..n {
                let z = (gram[j][k] + gram[k][j].conj()) * 0.5;
                gram[j][k] = z;
                gram[k][j] = z.conj();
            }
        }
    }
    Ok(GramCertificate {
        s: s.clone(),
        elements: elements.to_vec(),
        gram,
        hermitian_defect: defect,
        min_eigenvalue: None,
        witness: None,
    })
}

/// `NotPsd` iff the least eigenvalue is below `-tol`; `Psd` iff it is at
/// least `-tol * 1e-3` (evaluation noise); anything in between is
/// `Inconclusive`.
pub fn psd_verdict(cert: &GramCertificate, tol: f64) -> Result<Verdict> {
    let defect = hermitian_defect(&cert.gram).max(cert.hermitian_defect);
    if defect > tol {
        return Err(SphError::NonHermitian(defect));
    }
    let eig = hermitian_eigen(&cert.gram).ok_or_else(|| SphError::NotFound("eigenvalue iteration did not converge".into()))?;
    let min = eig.values[0];
    Ok(if min < -tol {
        Verdict::NotPsd { min_eigenvalue: min, witness: eig.vectors[0].clone() }
    } else if min >= -tol * 1e-3 {
        Verdict::Psd { min_eigenvalue: min }
    } else {
        Verdict::Inconclusive { min_eigenvalue: min }
    })
}

impl GramCertificate {
    /// Records the verdict's eigenvalue and witness in the certificate.
    pub fn with_verdict(mut self, v: &Verdict) -> Self {
        self.min_eigenvalue = Some(v.min_eigenvalue());
        self.witness = match v {
            Verdict::NotPsd { witness, .. } => Some(witness.clone()),
            _ => None,
        };
        self
    }

    pub fn rayleigh(&self) -> Option<f64> {
        let w = self.witness.as_ref()?;
        let norm: f64 = w.iter().map(|z| z.norm_sqr()).sum();
        Some(quadratic_form(&self.gram, w).re / norm)
    }
}

/// `sum_{j,k} omega_s(g_j^{-1} g_k) conj(z_j) z_k`.
pub fn inner_form(lab: &Lab, s: &SatakeParameter, elements: &[GroupElement], z: &[Complex64]) -> Result<Complex64> {
    if elements.len() != z.len() {
        return Err(SphError::DimensionMismatch { expected: elements.len(), got: z.len() });
    }
    let sph = SphericalFunction::new(lab, s.clone())?;
    let gram = raw_gram(&sph, elements)?;
    Ok(quadratic_form(&gram, z))
}

/// Outcome of re-verifying a certificate in a fresh context.
#[derive(Clone, Debug)]
pub struct Reverification {
    pub max_entry_error: f64,
    pub rayleigh: f64,
    pub passed: bool,
}

/// Recomputes every Gram entry from scratch (fresh caches) and the Rayleigh
/// quotient of the stored witness; passes iff entries agree within `tol`
/// and the quotient is below `-tol / 2`.
pub fn reverify(cert: &GramCertificate, coset_cap: u128, tol: f64) -> Result<Reverification> {
    let witness = cert.witness.as_ref().ok_or_else(|| SphError::NotFound("certificate carries no witness".into()))?;
    if witness.len() != cert.elements.len() {
        return Err(SphError::DimensionMismatch { expected: cert.elements.len(), got: witness.len() });
    }
    let fresh = Lab::with_cap(*cert.s.ctx(), coset_cap);
    let sph = SphericalFunction::new(&fresh, cert.s.clone())?;
    let gram = raw_gram(&sph, &cert.elements)?;
    let mut err: f64 = 0.0;
    for (r1, r2) in gram.iter().zip(&cert.gram) {
        for (a, b) in r1.iter().zip(r2) {
            err = err.max((a - b).norm());
        }
    }
    let norm: f64 = witness.iter().map(|z| z.norm_sqr()).sum();
    let rayleigh = quadratic_form(&gram, witness).re / norm;
    Ok(Reverification { max_entry_error: err, rayleigh, passed: err <= tol.max(1e-9) && rayleigh < -tol / 2.0 })
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub j_min: u64,
    pub j_max: u64,
    pub max_set_size: usize,
    /// Largest `m_1 - m_n` among the coweights whose `pi^m` seed the pool.
    pub pool_spread: i64,
    /// Coset-representative twists drawn per pool coweight.
    pub twists_per_coweight: usize,
    pub random_sets: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            j_min: 1,
            j_max: 16,
            max_set_size: 8,
            pool_spread: 2,
            twists_per_coweight: 64,
            random_sets: 256,
            seed: 1,
            tol: DEFAULT_PSD_TOL,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FoundWitness {
    pub j: u64,
    pub certificate: GramCertificate,
    pub verdict: Verdict,
}

#[derive(Clone, Debug)]
pub struct NotFoundReport {
    /// `(j, least eigenvalue seen)` for every scanned `j`.
    pub min_eigenvalue_by_j: Vec<(u64, f64)>,
}

#[derive(Clone, Debug)]
pub enum SearchOutcome {
    Found(Box<FoundWitness>),
    NotFound(NotFoundReport),
}

/// `{pi^m}` for dominant `m` with spread at most `spread`, together with a
/// seeded selection of left-coset-representative twists of each, deduplicated
/// by left coset.
pub fn witness_pool(lab: &Lab, spread: i64, twists: usize, seed: u64) -> Result<Vec<GroupElement>> {
    let ctx = *lab.ctx();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<GroupElement> = Vec::new();
    let push = |g: GroupElement, pool: &mut Vec<GroupElement>| {
        let dup = pool.iter().any(|h| h.inverse().mul(&g).is_integral());
        if !dup {
            pool.push(g);
        }
    };
    for m in DominantCoweight::all_up_to_spread(ctx.n(), spread) {
        push(GroupElement::pi_power(ctx, m.as_slice())?, &mut pool);
        let reps = left_coset_reps(lab, &m)?;
        let mut picks: Vec<&GroupElement> = reps.reps.iter().collect();
        picks.shuffle(&mut rng);
        for g in picks.into_iter().take(twists) {
            push(g.clone(), &mut pool);
        }
    }
    Ok(pool)
}

fn min_eig(gram: &CMatrix) -> f64 {
    hermitian_eigen(gram).map(|e| e.values[0]).unwrap_or(f64::INFINITY)
}

fn sub_gram(full: &CMatrix, idx: &[usize]) -> CMatrix {
    idx.iter().map(|&j| idx.iter().map(|&k| full[j][k]).collect()).collect()
}

/// Greedy growth from the identity, then seeded random subsets; returns the
/// index set with the least smallest eigenvalue.
fn search_subsets(full: &CMatrix, max_size: usize, random_sets: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64) {
    let n = full.len();
    let mut best: (Vec<usize>, f64) = (vec![0], min_eig(&sub_gram(full, &[0])));
    let mut cur = vec![0usize];
    while cur.len() < max_size.min(n) {
        let step = (0..n)
            .filter(|k| !cur.contains(k))
            .map(|k| {
                let mut idx = cur.clone();
                idx.push(k);
                let v = min_eig(&sub_gram(full, &idx));
                (k, v)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let Some((k, v)) = step else { break };
        cur.push(k);
        if v < best.1 {
            best = (cur.clone(), v);
        }
    }
    let all: Vec<usize> = (0..n).collect();
    for _ in 0..random_sets {
        let size = 2 + (rand::Rng::gen_range(rng, 0..max_size.min(n).saturating_sub(1).max(1)));
        let mut idx: Vec<usize> = all.choose_multiple(rng, size.min(n)).copied().collect();
        idx.sort_unstable();
        let v = min_eig(&sub_gram(full, &idx));
        if v < best.1 {
            best = (idx, v);
        }
    }
    best
}

/// Seeded search over `s(j)` and element sets for a Gram matrix with a
/// negative eigenvalue below `-tol`.
pub fn find_nonpd_witness(lab: &Lab, cfg: &SearchConfig) -> Result<SearchOutcome> {
    let ctx = *lab.ctx();
    if ctx.n() < 3 {
        return Err(SphError::RankTooSmall { required: 3, got: ctx.n() });
    }
    let pool = witness_pool(lab, cfg.pool_spread, cfg.twists_per_coweight, cfg.seed)?;
    // Labels of g_j^{-1} g_k do not depend on j.
    let inverses: Vec<GroupElement> = pool.iter().map(|g| g.inverse()).collect();
    let labels: Vec<Vec<DominantCoweight>> = inverses
        .par_iter()
        .map(|gi| pool.iter().map(|gk| cartan_label(&gi.mul(gk))).collect())
        .collect();

    let mut report = Vec::new();
    for j in cfg.j_min..=cfg.j_max {
        let s = sequence_param(j, ctx)?;
        let sph = SphericalFunction::new(lab, s.clone())?;
        let mut full: CMatrix = Vec::with_capacity(pool.len());
        for row in &labels {
            full.push(row.iter().map(|m| sph.at(m)).collect::<Result<Vec<_>>>()?);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ j.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let (idx, v) = search_subsets(&full, cfg.max_set_size, cfg.random_sets, &mut rng);
        report.push((j, v));
        if v < -cfg.tol {
            let elements: Vec<GroupElement> = idx.iter().map(|&k| pool[k].clone()).collect();
            let cert = gram_matrix(lab, &s, &elements)?;
            let verdict = psd_verdict(&cert, cfg.tol)?;
            if matches!(verdict, Verdict::NotPsd { .. }) {
                let certificate = cert.with_verdict(&verdict);
                return Ok(SearchOutcome::Found(Box::new(FoundWitness { j, certificate, verdict })));
            }
        }
    }
    Ok(SearchOutcome::NotFound(NotFoundReport { min_eigenvalue_by_j: report }))
}

#[derive(Clone, Debug)]
pub struct UnboundednessCertificate {
    pub s: SatakeParameter,
    pub sigma: ExactScalar,
    pub m: i64,
    pub value: f64,
    /// `|omega_s(pi^{(k,-k)})|` for `k = 1..=m`.
    pub profile: Vec<f64>,
    pub monotone: bool,
}

fn sl2_real_param(ctx: PrimeContext, sigma: &ExactScalar) -> Result<SatakeParameter> {
    if ctx.n() != 2 {
        return Err(SphError::DimensionMismatch { expected: 2, got: ctx.n() });
    }
    SatakeParameter::real(ctx, vec![sigma.clone(), -sigma.clone()])
}

/// `|omega_s(pi^{(k,-k)})|` for `k = 1..=m_max`, `s = (sigma, -sigma)`.
pub fn sl2_profile(lab: &Lab, sigma: &ExactScalar, m_max: i64) -> Result<Vec<f64>> {
    let s = sl2_real_param(*lab.ctx(), sigma)?;
    (1..=m_max)
        .map(|k| {
            let m = DominantCoweight::new(vec![k, -k])?;
            Ok(omega_at(lab, &s, &m)?.norm())
        })
        .collect()
}

/// First `m <= m_max` with `|omega_s(pi^{(m,-m)})| > 1`, `s = (sigma, -sigma)`.
pub fn unboundedness_certificate(lab: &Lab, sigma: &ExactScalar, m_max: i64) -> Result<UnboundednessCertificate> {
    let s = sl2_real_param(*lab.ctx(), sigma)?;
    let mut profile = Vec::new();
    for k in 1..=m_max {
        let m = DominantCoweight::new(vec![k, -k])?;
        let v = omega_at(lab, &s, &m)?.norm();
        profile.push(v);
        if v > 1.0 {
            let monotone = profile.windows(2).all(|w| w[1] >= w[0]);
            return Ok(UnboundednessCertificate { s, sigma: sigma.clone(), m: k, value: v, profile, monotone });
        }
    }
    Err(SphError::NotFound(format!("no value above 1 up to m = {m_max}; profile {profile:?}")))
}

/// Recomputes `|omega_s(pi^{(m,-m)})|` in a fresh context.
pub fn reverify_unboundedness(cert: &UnboundednessCertificate, coset_cap: u128) -> Result<f64> {
    let fresh = Lab::with_cap(*cert.s.ctx(), coset_cap);
    let m = DominantCoweight::new(vec![cert.m, -cert.m])?;
    Ok(omega_at(&fresh, &cert.s, &m)?.norm())
}

/// Quadratic form of the Gram matrix on `{g, e}` at `z = (1, -a/|a|)`,
/// `a = omega(g)`. Equals `2 - 2|a|` for star-spherical `omega`, hence is
/// negative whenever `|omega(g)| > 1`.
pub fn two_point_form(lab: &Lab, s: &SatakeParameter, g: &GroupElement) -> Result<Complex64> {
    let elements = vec![g.clone(), GroupElement::identity(*lab.ctx())];
    let sph = SphericalFunction::new(lab, s.clone())?;
    let a = sph.eval(g)?;
    let u = if a.norm() > 0.0 { a / a.norm() } else { Complex64::new(1.0, 0.0) };
    inner_form(lab, s, &elements, &[Complex64::new(1.0, 0.0), -u])
}

pub fn sigma_from_ratio(num: i64, den: i64) -> ExactScalar {
    ExactScalar::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spherical::trivial_param;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn synthetic(gram: CMatrix, ctx: PrimeContext) -> GramCertificate {
        GramCertificate {
            s: trivial_param(ctx),
            elements: vec![],
            hermitian_defect: hermitian_defect(&gram),
            gram,
            min_eigenvalue: None,
            witness: None,
        }
    }

    #[test]
    fn verdicts_on_synthetic_inputs() {
        let ctx = PrimeContext::new(2, 2).unwrap();
        let ones = synthetic(vec![vec![c(1.0); 3]; 3], ctx);
        assert!(matches!(psd_verdict(&ones, DEFAULT_PSD_TOL).unwrap(), Verdict::Psd { .. }));

        let diag = synthetic(vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(-1.0)]], ctx);
        match psd_verdict(&diag, DEFAULT_PSD_TOL).unwrap() {
            Verdict::NotPsd { min_eigenvalue, witness } => {
                assert!((min_eigenvalue + 1.0).abs() < 1e-12);
                assert!(witness[0].norm() < 1e-12 && (witness[1].norm() - 1.0).abs() < 1e-12);
            }
            v => panic!("unexpected {v:?}"),
        }

        let edge = synthetic(vec![vec![c(-1e-7)]], ctx);
        assert!(matches!(psd_verdict(&edge, DEFAULT_PSD_TOL).unwrap(), Verdict::Inconclusive { .. }));

        let skew = synthetic(vec![vec![c(1.0), c(0.5)], vec![c(-0.5), c(1.0)]], ctx);
        assert!(matches!(psd_verdict(&skew, DEFAULT_PSD_TOL), Err(SphError::NonHermitian(_))));
    }

    #[test]
    fn trivial_gram_is_all_ones() {
        let ctx = PrimeContext::new(2, 3).unwrap();
        let lab = Lab::new(ctx);
        let t = trivial_param(ctx);
        let els = witness_pool(&lab, 2, 4, 1).unwrap();
        let cert = gram_matrix(&lab, &t, &els).unwrap();
        for row in &cert.gram {
            for z in row {
                assert!((z - c(1.0)).norm() < 1e-12);
            }
        }
        let single = gram_matrix(&lab, &t, &[GroupElement::identity(ctx)]).unwrap();
        assert_eq!(single.gram, vec![vec![c(1.0)]]);
        assert!(gram_matrix(&lab, &t, &[]).is_err());
    }

    #[test]
    fn inner_form_dimension_check() {
        let ctx = PrimeContext::new(2, 2).unwrap();
        let lab = Lab::new(ctx);
        let r = inner_form(&lab, &trivial_param(ctx), &[GroupElement::identity(ctx)], &[]);
        assert!(matches!(r, Err(SphError::DimensionMismatch { .. })));
        let one = inner_form(&lab, &trivial_param(ctx), &[GroupElement::identity(ctx)], &[c(1.0)]).unwrap();
        assert_eq!(one, c(1.0));
    }

    #[test]
    fn rank_checks() {
        let ctx = PrimeContext::new(2, 2).unwrap();
        let lab = Lab::new(ctx);
        assert!(matches!(find_nonpd_witness(&lab, &SearchConfig::default()), Err(SphError::RankTooSmall { .. })));
        let ctx3 = PrimeContext::new(2, 3).unwrap();
        let lab3 = Lab::new(ctx3);
        assert!(unboundedness_certificate(&lab3, &sigma_from_ratio(1, 1), 3).is_err());
    }
}
