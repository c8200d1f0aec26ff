//! Batch front end: every library operation as a subcommand with JSON output.
//!
//! Each output document carries an `"input"` object (the run configuration
//! and the fully resolved command); `verify` replays it in a fresh context
//! and compares.

use std::io::Read;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cosets::{left_coset_reps, quotient_oracle_count};
use crate::coweight::DominantCoweight;
use crate::error::{Result, SphError};
use crate::hecke::{convolve, l1_norm, structure_constants, structure_terms, HeckeElement, HeckeTerm};
use crate::json::{
    complex_json, coset_list_json, element_from_json, elements_from_json, gram_certificate_from_json,
    gram_certificate_json, matrix_to_json, param_from_json, parse_rational, unboundedness_inputs,
    unboundedness_json, SatakeJson,
};
use crate::lab::{Lab, DEFAULT_COSET_CAP};
use crate::padic::{cartan_decompose, cartan_label, iwasawa_decompose, random_unimodular, GroupElement, PrimeContext};
use crate::positivity::{
    find_nonpd_witness, gram_matrix, psd_verdict, reverify, reverify_unboundedness, two_point_form,
    unboundedness_certificate, SearchConfig, SearchOutcome, DEFAULT_PSD_TOL,
};
use crate::spherical::{
    alpha_eval, convergence_majorant, equivalence_witness, functional_equation_sides, is_star_param, omega_at,
    permutations, rational_string, satake_transform, sequence_param, tau_eval, trivial_param, SatakeParameter,
    SphericalFunction, DEFAULT_TOL,
};

#[derive(Parser, Debug)]
#[command(name = "sphlab", version, about = "Spherical Hecke algebra computations for SL_n(Q_p)")]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by all subcommands. A flag given on the command line wins
/// over its `SPHLAB_*` variable, which wins over the default.
#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    #[arg(long, global = true, env = "SPHLAB_P")]
    pub p: Option<u64>,
    #[arg(long, global = true, env = "SPHLAB_N")]
    pub n: Option<usize>,
    #[arg(long, global = true, env = "SPHLAB_TOL", default_value_t = DEFAULT_PSD_TOL)]
    pub tol: f64,
    #[arg(long = "coset-cap", global = true, env = "SPHLAB_COSET_CAP", default_value_t = DEFAULT_COSET_CAP as u64)]
    pub coset_cap: u64,
    #[arg(long, global = true, env = "SPHLAB_SEED", default_value_t = 1)]
    pub seed: u64,
    #[arg(long = "j-min", global = true, env = "SPHLAB_J_MIN", default_value_t = 1)]
    pub j_min: u64,
    #[arg(long = "j-max", global = true, env = "SPHLAB_J_MAX", default_value_t = 16)]
    pub j_max: u64,
    #[arg(long, global = true, env = "SPHLAB_THREADS")]
    #[serde(skip)]
    pub threads: Option<usize>,
    #[arg(long, global = true, env = "SPHLAB_OUT")]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            p: None,
            n: None,
            tol: DEFAULT_PSD_TOL,
            coset_cap: DEFAULT_COSET_CAP as u64,
            seed: 1,
            j_min: 1,
            j_max: 16,
            threads: None,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn ctx(&self) -> Result<PrimeContext> {
        match (self.p, self.n) {
            (Some(p), Some(n)) => PrimeContext::new(p, n),
            _ => Err(SphError::Parse("--p and --n are required".into())),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(SphError::Parse(format!("--tol must be positive, got {}", self.tol)));
        }
        if self.coset_cap == 0 {
            return Err(SphError::Parse("--coset-cap must be positive".into()));
        }
        if self.j_min == 0 || self.j_min > self.j_max {
            return Err(SphError::Parse(format!("bad j range {}..={}", self.j_min, self.j_max)));
        }
        Ok(())
    }

    fn lab(&self) -> Result<Lab> {
        Ok(Lab::with_cap(self.ctx()?, self.coset_cap as u128))
    }
}

/// Payload arguments accept inline text, `@path` for a file or `-` for stdin.
/// Parameters also accept `trivial`, `seq:J` (the sequence `s(J)`) and
/// `sigma:X` (the real parameter `(X, -X)`).
#[derive(Subcommand, Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Cartan decomposition g = u1 pi^m u2.
    Cartan(MatrixArgs),
    /// Iwasawa decomposition g = u a n.
    Iwasawa(MatrixArgs),
    /// Left cosets in U pi^m U.
    Cosets(CosetArgs),
    /// Convolution of two Hecke elements.
    Convolve(ConvolveArgs),
    /// Structure constants of chi_m1 * chi_m2.
    StructureConstants(StructureArgs),
    /// L1 norm of a Hecke element.
    L1Norm(HeckeArgs),
    /// Quasi-character alpha_s(pi^m).
    Alpha(AlphaArgs),
    /// Spherical function omega_s at pi^m or at a matrix.
    Omega(OmegaArgs),
    /// Character tau_s(f).
    Tau(TauArgs),
    /// Satake transform of a Hecke element with real coefficients.
    Satake(HeckeArgs),
    /// Equivalence of two Satake parameters.
    ParamEquiv(ParamPairArgs),
    /// Whether s = -w conj(s) for some permutation w.
    StarTest(ParamArgs),
    /// Gram matrix of omega_s on a set of elements.
    Gram(GramArgs),
    /// Positive-semidefiniteness verdict for a Gram matrix.
    Psd(PsdArgs),
    /// Seeded search for a non-positive-definite Gram matrix along s(j).
    FindWitness(SearchArgs),
    /// Unboundedness certificate for s = (sigma, -sigma), n = 2.
    Unbounded(UnboundedArgs),
    /// Numerical checks of the spherical function axioms.
    VerifyAxioms(AxiomArgs),
    /// |omega_{s(j)} - 1| and its majorant along j.
    ConvergenceProfile(GridArgs),
    /// Replays the input recorded in an output document and compares.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixArgs {
    /// Matrix as a JSON array of rows of "num/den" strings.
    #[arg(long)]
    pub matrix: String,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CosetArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub coweight: String,
    /// Include the representatives.
    #[arg(long)]
    #[serde(default)]
    pub reps: bool,
    /// Also count through the finite-quotient orbit.
    #[arg(long)]
    #[serde(default)]
    pub oracle: bool,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConvolveArgs {
    #[arg(long)]
    pub f1: String,
    #[arg(long)]
    pub f2: String,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StructureArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub m1: String,
    #[arg(long, allow_hyphen_values = true)]
    pub m2: String,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HeckeArgs {
    /// Hecke element as a JSON list of {"m", "re", "im"}.
    #[arg(long)]
    pub f: String,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AlphaArgs {
    #[arg(long)]
    pub param: String,
    #[arg(long, allow_hyphen_values = true)]
    pub coweight: String,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OmegaArgs {
    #[arg(long)]
    pub param: String,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "matrix")]
    pub coweight: Option<String>,
    #[arg(long, conflicts_with = "coweight")]
    pub matrix: Option<String>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TauArgs {
    #[arg(long)]
    pub param: String,
    #[arg(long)]
    pub f: String,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ParamArgs {
    #[arg(long)]
    pub param: String,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ParamPairArgs {
    #[arg(long)]
    pub param: String,
    #[arg(long)]
    pub param2: String,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GramArgs {
    #[arg(long)]
    pub param: String,
    /// JSON array of matrices.
    #[arg(long)]
    pub elements: String,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PsdArgs {
    #[arg(long, required_unless_present = "certificate")]
    pub param: Option<String>,
    #[arg(long, required_unless_present = "certificate")]
    pub elements: Option<String>,
    /// A certificate document produced by `gram`.
    #[arg(long, conflicts_with_all = ["param", "elements"])]
    pub certificate: Option<String>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SearchArgs {
    #[arg(long = "max-set-size", default_value_t = 8)]
    pub max_set_size: usize,
    #[arg(long = "pool-spread", default_value_t = 2)]
    pub pool_spread: i64,
    #[arg(long, default_value_t = 64)]
    pub twists: usize,
    #[arg(long = "random-sets", default_value_t = 256)]
    pub random_sets: usize,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct UnboundedArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: String,
    #[arg(long = "m-max", default_value_t = 10)]
    pub m_max: i64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AxiomArgs {
    #[arg(long)]
    pub param: String,
    #[arg(long = "max-spread", default_value_t = 2)]
    pub max_spread: i64,
    /// Random unimodular twists per coweight in the bi-invariance check.
    #[arg(long, default_value_t = 4)]
    pub samples: usize,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridArgs {
    #[arg(long = "max-spread", default_value_t = 2)]
    pub max_spread: i64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VerifyArgs {
    /// An output document of another subcommand.
    #[arg(long)]
    pub input: String,
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub document: Value,
    pub code: i32,
}

fn load_text(arg: &str) -> Result<String> {
    if arg == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| SphError::Parse(format!("stdin: {e}")))?;
        Ok(s)
    } else if let Some(path) = arg.strip_prefix('@') {
        std::fs::read_to_string(path).map_err(|e| SphError::Parse(format!("{path}: {e}")))
    } else {
        Ok(arg.to_string())
    }
}

fn parse_json(text: &str, what: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| SphError::Parse(format!("{what}: {e}")))
}

pub fn parse_int_vector(text: &str) -> Result<Vec<i64>> {
    let t = text.trim();
    if t.starts_with('[') {
        return serde_json::from_str(t).map_err(|e| SphError::Parse(format!("coweight: {e}")));
    }
    t.split(',')
        .map(|x| x.trim().parse::<i64>().map_err(|_| SphError::Parse(format!("coweight entry {x:?} is not an integer"))))
        .collect()
}

fn parse_coweight(ctx: &PrimeContext, text: &str) -> Result<DominantCoweight> {
    let v = parse_int_vector(text)?;
    if v.len() != ctx.n() {
        return Err(SphError::DimensionMismatch { expected: ctx.n(), got: v.len() });
    }
    DominantCoweight::new(v)
}

pub fn parse_param(ctx: PrimeContext, text: &str) -> Result<SatakeParameter> {
    let t = text.trim();
    if t == "trivial" {
        return Ok(trivial_param(ctx));
    }
    if let Some(j) = t.strip_prefix("seq:") {
        let j = j.trim().parse::<u64>().map_err(|_| SphError::Parse(format!("bad sequence index in {t:?}")))?;
        return sequence_param(j, ctx);
    }
    if let Some(x) = t.strip_prefix("sigma:") {
        let sigma = parse_rational(x)?;
        let mut re = vec![num_traits::Zero::zero(); ctx.n()];
        re[0] = sigma.clone();
        re[ctx.n() - 1] = -sigma;
        return SatakeParameter::real(ctx, re);
    }
    let j: SatakeJson = serde_json::from_str(t).map_err(|e| SphError::Parse(format!("Satake parameter: {e}")))?;
    param_from_json(ctx, &j)
}

fn parse_hecke(ctx: PrimeContext, text: &str) -> Result<HeckeElement> {
    let terms: Vec<HeckeTerm> = serde_json::from_str(text).map_err(|e| SphError::Parse(format!("Hecke element: {e}")))?;
    HeckeElement::from_json_terms(ctx, &terms)
}

fn resolve_opt(x: &mut Option<String>) -> Result<()> {
    if let Some(s) = x {
        *s = load_text(s)?;
    }
    Ok(())
}

/// Replaces `@file` and `-` payloads by their contents so the echoed
/// command is self-contained.
fn resolve(cmd: &mut Command) -> Result<()> {
    let r = |s: &mut String| -> Result<()> {
        *s = load_text(s)?;
        Ok(())
    };
    match cmd {
        Command::Cartan(a) | Command::Iwasawa(a) => r(&mut a.matrix),
        Command::Cosets(a) => r(&mut a.coweight),
        Command::Convolve(a) => {
            r(&mut a.f1)?;
            r(&mut a.f2)
        }
        Command::StructureConstants(a) => {
            r(&mut a.m1)?;
            r(&mut a.m2)
        }
        Command::L1Norm(a) | Command::Satake(a) => r(&mut a.f),
        Command::Alpha(a) => {
            r(&mut a.param)?;
            r(&mut a.coweight)
        }
        Command::Omega(a) => {
            r(&mut a.param)?;
            resolve_opt(&mut a.coweight)?;
            resolve_opt(&mut a.matrix)
        }
        Command::Tau(a) => {
            r(&mut a.param)?;
            r(&mut a.f)
        }
        Command::StarTest(a) => r(&mut a.param),
        Command::ParamEquiv(a) => {
            r(&mut a.param)?;
            r(&mut a.param2)
        }
        Command::Gram(a) => {
            r(&mut a.param)?;
            r(&mut a.elements)
        }
        Command::Psd(a) => {
            resolve_opt(&mut a.param)?;
            resolve_opt(&mut a.elements)?;
            resolve_opt(&mut a.certificate)
        }
        Command::Unbounded(a) => r(&mut a.sigma),
        Command::VerifyAxioms(a) => r(&mut a.param),
        Command::Verify(a) => r(&mut a.input),
        Command::FindWitness(_) | Command::ConvergenceProfile(_) => Ok(()),
    }
}

fn z(v: Complex64) -> Value {
    complex_json(v)
}

/// `NotFound` carrying a report document (exit code 2).
struct Report(Value);

enum Failure {
    Error(SphError),
    NotFound(Value),
}

impl From<SphError> for Failure {
    fn from(e: SphError) -> Self {
        Failure::Error(e)
    }
}

impl From<Report> for Failure {
    fn from(r: Report) -> Self {
        Failure::NotFound(r.0)
    }
}

type Step = std::result::Result<Value, Failure>;

fn exec(cfg: &RunConfig, cmd: &Command) -> Step {
    cfg.validate()?;
    if let Command::Verify(a) = cmd {
        return verify_document(cfg, &parse_json(&a.input, "input document")?);
    }
    let ctx = cfg.ctx()?;
    let lab = cfg.lab()?;
    let out = match cmd {
        Command::Cartan(a) => {
            let g = element_from_json(ctx, &parse_json(&a.matrix, "matrix")?)?;
            let c = cartan_decompose(&g)?;
            json!({ "m": c.m.as_slice(), "u1": matrix_to_json(c.u1.matrix()), "u2": matrix_to_json(c.u2.matrix()) })
        }
        Command::Iwasawa(a) => {
            let g = element_from_json(ctx, &parse_json(&a.matrix, "matrix")?)?;
            let f = iwasawa_decompose(&g)?;
            json!({
                "hval": f.hval,
                "hunit": f.hunit.iter().map(rational_string).collect::<Vec<_>>(),
                "u": matrix_to_json(f.u.matrix()),
                "n": matrix_to_json(f.nmat.matrix()),
            })
        }
        Command::Cosets(a) => {
            let m = parse_coweight(&ctx, &a.coweight)?;
            let list = left_coset_reps(&lab, &m)?;
            let mut doc = if a.reps { coset_list_json(&list) } else { json!({ "m": m.as_slice(), "count": list.len() }) };
            if a.oracle {
                doc["oracle_count"] = json!(quotient_oracle_count(&m, &ctx, lab.coset_cap())? as u64);
            }
            doc
        }
        Command::Convolve(a) => {
            let f1 = parse_hecke(ctx, &a.f1)?;
            let f2 = parse_hecke(ctx, &a.f2)?;
            json!({ "terms": convolve(&lab, &f1, &f2)?.to_json_terms() })
        }
        Command::StructureConstants(a) => {
            let m1 = parse_coweight(&ctx, &a.m1)?;
            let m2 = parse_coweight(&ctx, &a.m2)?;
            let sc = structure_constants(&lab, &m1, &m2)?;
            json!({ "terms": structure_terms(&sc) })
        }
        Command::L1Norm(a) => json!({ "l1": l1_norm(&lab, &parse_hecke(ctx, &a.f)?)? }),
        Command::Alpha(a) => {
            let s = parse_param(ctx, &a.param)?;
            z(alpha_eval(&s, &parse_int_vector(&a.coweight)?)?)
        }
        Command::Omega(a) => {
            let s = parse_param(ctx, &a.param)?;
            let m = match (&a.coweight, &a.matrix) {
                (Some(c), _) => parse_coweight(&ctx, c)?,
                (None, Some(mtx)) => cartan_label(&element_from_json(ctx, &parse_json(mtx, "matrix")?)?),
                (None, None) => return Err(SphError::Parse("omega needs --coweight or --matrix".into()).into()),
            };
            z(omega_at(&lab, &s, &m)?)
        }
        Command::Tau(a) => {
            let s = parse_param(ctx, &a.param)?;
            z(tau_eval(&lab, &s, &parse_hecke(ctx, &a.f)?)?)
        }
        Command::Satake(a) => {
            let poly = satake_transform(&lab, &parse_hecke(ctx, &a.f)?)?;
            json!({ "terms": poly.to_terms(), "weyl_invariant": poly.is_weyl_invariant() })
        }
        Command::ParamEquiv(a) => {
            let s = parse_param(ctx, &a.param)?;
            let s2 = parse_param(ctx, &a.param2)?;
            let w = equivalence_witness(&s, &s2, DEFAULT_TOL);
            json!({ "equivalent": w.is_some(), "w": w })
        }
        Command::StarTest(a) => {
            let s = parse_param(ctx, &a.param)?;
            let w = is_star_param(&s, DEFAULT_TOL);
            json!({ "star": w.is_some(), "w": w })
        }
        Command::Gram(a) => {
            let s = parse_param(ctx, &a.param)?;
            let els = elements_from_json(ctx, &parse_json(&a.elements, "elements")?)?;
            gram_certificate_json(&gram_matrix(&lab, &s, &els)?, None, None, None)
        }
        Command::Psd(a) => {
            let cert = match (&a.certificate, &a.param, &a.elements) {
                (Some(c), _, _) => gram_certificate_from_json(&parse_json(c, "certificate")?)?,
                (None, Some(p), Some(e)) => {
                    let s = parse_param(ctx, p)?;
                    gram_matrix(&lab, &s, &elements_from_json(ctx, &parse_json(e, "elements")?)?)?
                }
                _ => return Err(SphError::Parse("psd needs --certificate or --param with --elements".into()).into()),
            };
            let v = psd_verdict(&cert, cfg.tol)?;
            let cert = cert.with_verdict(&v);
            gram_certificate_json(&cert, None, None, Some(v.label()))
        }
        Command::FindWitness(a) => {
            let sc = SearchConfig {
                j_min: cfg.j_min,
                j_max: cfg.j_max,
                max_set_size: a.max_set_size,
                pool_spread: a.pool_spread,
                twists_per_coweight: a.twists,
                random_sets: a.random_sets,
                seed: cfg.seed,
                tol: cfg.tol,
            };
            match find_nonpd_witness(&lab, &sc)? {
                SearchOutcome::Found(f) => gram_certificate_json(&f.certificate, Some(cfg.seed), Some(f.j), Some(f.verdict.label())),
                SearchOutcome::NotFound(r) => {
                    let rows: Vec<Value> = r.min_eigenvalue_by_j.iter().map(|(j, v)| json!({ "j": j, "min_eigenvalue": v })).collect();
                    return Err(Report(json!({ "found": false, "seed": cfg.seed, "min_eigenvalue_by_j": rows })).into());
                }
            }
        }
        Command::Unbounded(a) => {
            let sigma = parse_rational(&a.sigma)?;
            match unboundedness_certificate(&lab, &sigma, a.m_max) {
                Ok(cert) => {
                    let g = GroupElement::pi_power(ctx, &[cert.m, -cert.m])?;
                    let form = two_point_form(&lab, &cert.s, &g)?;
                    let mut doc = unboundedness_json(&cert);
                    doc["two_point_form"] = z(form);
                    doc
                }
                Err(SphError::NotFound(msg)) => {
                    return Err(Report(json!({ "found": false, "sigma": a.sigma, "message": msg })).into());
                }
                Err(e) => return Err(e.into()),
            }
        }
        Command::VerifyAxioms(a) => {
            let s = parse_param(ctx, &a.param)?;
            let doc = axiom_report(&lab, &s, a.max_spread, a.samples, cfg.seed)?;
            if doc["all_passed"] != json!(true) {
                return Err(Failure::Error(SphError::NotFound(format!("axiom checks failed: {doc}"))));
            }
            doc
        }
        Command::ConvergenceProfile(a) => convergence_report(&lab, cfg.j_min, cfg.j_max, a.max_spread)?,
        Command::Verify(_) => unreachable!("handled above"),
    };
    Ok(out)
}

fn rel_close(a: Complex64, b: Complex64, tol: f64) -> (bool, f64) {
    let err = (a - b).norm();
    (err <= tol * a.norm().max(b.norm()).max(1.0), err)
}

fn check(name: &str, passed: bool, max_error: f64, detail: Value) -> Value {
    json!({ "name": name, "passed": passed, "max_error": max_error, "detail": detail })
}

/// Identity value, bi-invariance, Weyl invariance, the inversion identity and
/// the functional equation on the coweights of spread at most `max_spread`.
pub fn axiom_report(lab: &Lab, s: &SatakeParameter, max_spread: i64, samples: usize, seed: u64) -> Result<Value> {
    let ctx = *lab.ctx();
    let sph = SphericalFunction::new(lab, s.clone())?;
    let grid = DominantCoweight::all_up_to_spread(ctx.n(), max_spread);
    let mut checks = Vec::new();

    let e = sph.eval(&GroupElement::identity(ctx))?;
    checks.push(check("omega_identity", e == Complex64::new(1.0, 0.0), (e - 1.0).norm(), json!(null)));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ok = true;
    for m in &grid {
        let pm = GroupElement::pi_power(ctx, m.as_slice())?;
        let base = sph.at(m)?;
        for _ in 0..samples {
            let u1 = random_unimodular(ctx, &mut rng, 6);
            let u2 = random_unimodular(ctx, &mut rng, 6);
            let g = u1.mul(&pm).mul(&u2);
            ok &= cartan_label(&g) == *m && sph.eval(&g)? == base;
        }
    }
    checks.push(check("bi_invariance", ok, 0.0, json!({ "samples_per_coweight": samples })));

    let mut worst: f64 = 0.0;
    let mut ok = true;
    for w in permutations(ctx.n()) {
        let ws = s.permuted(&w);
        for m in &grid {
            let (good, err) = rel_close(omega_at(lab, &ws, m)?, sph.at(m)?, 1e-12);
            ok &= good;
            worst = worst.max(err);
        }
    }
    checks.push(check("weyl_invariance", ok, worst, json!(null)));

    let neg = s.neg();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for m in &grid {
        let (good, err) = rel_close(omega_at(lab, &neg, m)?, sph.at(&m.dual())?, 1e-12);
        ok &= good;
        worst = worst.max(err);
    }
    checks.push(check("inversion", ok, worst, json!(null)));

    if let Some(m) = grid.iter().find(|m| !m.is_zero()) {
        let g = GroupElement::pi_power(ctx, m.as_slice())?;
        match functional_equation_sides(&sph, &g, &g, lab.coset_cap()) {
            Ok((lhs, rhs)) => {
                let (good, err) = rel_close(lhs, rhs, 1e-9);
                checks.push(check("functional_equation", good, err, json!({ "m": m.as_slice(), "lhs": z(lhs), "rhs": z(rhs) })));
            }
            Err(SphError::ResourceLimit { what, count, cap }) => {
                checks.push(json!({ "name": "functional_equation", "passed": null, "skipped": format!("{what}: {count} > {cap}") }));
            }
            Err(e) => return Err(e),
        }
    }
    let all = checks.iter().all(|c| c["passed"] != json!(false));
    Ok(json!({ "checks": checks, "all_passed": all }))
}

/// `max_m |omega_{s(j)}(pi^m) - 1|` next to `max_m sum_l |alpha - 1|` for
/// `j = j_min, 2 j_min, 4 j_min, ...` up to `j_max`.
pub fn convergence_report(lab: &Lab, j_min: u64, j_max: u64, max_spread: i64) -> Result<Value> {
    let ctx = *lab.ctx();
    let grid = DominantCoweight::all_up_to_spread(ctx.n(), max_spread);
    let mut rows = Vec::new();
    let mut j = j_min;
    while j <= j_max {
        let s = sequence_param(j, ctx)?;
        let (mut dev, mut maj, mut top): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for m in &grid {
            let w = omega_at(lab, &s, m)?;
            dev = dev.max((w - 1.0).norm());
            top = top.max(w.norm());
            maj = maj.max(convergence_majorant(lab, &s, m)?);
        }
        rows.push(json!({ "j": j, "max_deviation": dev, "max_majorant": maj, "max_abs": top }));
        j = j.checked_mul(2).unwrap_or(u64::MAX);
    }
    Ok(json!({ "grid": grid.iter().map(|m| m.as_slice().to_vec()).collect::<Vec<_>>(), "rows": rows }))
}

fn compare(a: &Value, b: &Value, tol: f64, path: &str, bad: &mut Vec<String>, worst: &mut f64) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            if x.is_f64() || y.is_f64() {
                let (fx, fy) = (x.as_f64().unwrap_or(f64::NAN), y.as_f64().unwrap_or(f64::NAN));
                let d = (fx - fy).abs();
                *worst = worst.max(d);
                if !(d <= tol * fx.abs().max(fy.abs()).max(1.0)) {
                    bad.push(path.to_string());
                }
            } else if x != y {
                bad.push(path.to_string());
            }
        }
        (Value::Array(xs), Value::Array(ys)) => {
            if xs.len() != ys.len() {
                bad.push(format!("{path} (length)"));
                return;
            }
            for (k, (x, y)) in xs.iter().zip(ys).enumerate() {
                compare(x, y, tol, &format!("{path}[{k}]"), bad, worst);
            }
        }
        (Value::Object(xs), Value::Object(ys)) => {
            for key in xs.keys().chain(ys.keys().filter(|k| !xs.contains_key(*k))) {
                if key == "input" {
                    continue;
                }
                match (xs.get(key), ys.get(key)) {
                    (Some(x), Some(y)) => compare(x, y, tol, &format!("{path}.{key}"), bad, worst),
                    _ => bad.push(format!("{path}.{key} (missing)")),
                }
            }
        }
        _ => {
            if a != b {
                bad.push(path.to_string());
            }
        }
    }
}

/// Independent re-check of certificate documents in a fresh context.
fn recheck_certificate(doc: &Value, cfg: &RunConfig) -> Result<Option<Value>> {
    match doc.get("kind").and_then(Value::as_str) {
        Some("gram") if doc.get("witness").is_some_and(|w| !w.is_null()) => {
            let cert = gram_certificate_from_json(doc)?;
            let r = reverify(&cert, cfg.coset_cap as u128, cfg.tol)?;
            Ok(Some(json!({ "rayleigh": r.rayleigh, "max_entry_error": r.max_entry_error, "passed": r.passed })))
        }
        Some("unbounded") => {
            let (ctx, sigma, m, value) = unboundedness_inputs(doc)?;
            let lab = Lab::with_cap(ctx, cfg.coset_cap as u128);
            let cert = unboundedness_certificate(&lab, &sigma, m)?;
            let fresh = reverify_unboundedness(&cert, cfg.coset_cap as u128)?;
            let passed = cert.m == m && fresh > 1.0 && (fresh - value).abs() <= cfg.tol;
            Ok(Some(json!({ "value": fresh, "passed": passed })))
        }
        _ => Ok(None),
    }
}

fn verify_document(outer: &RunConfig, doc: &Value) -> Step {
    let input = doc.get("input").ok_or_else(|| SphError::Parse("document has no \"input\"".into()))?;
    let mut cfg: RunConfig = serde_json::from_value(input.get("config").cloned().unwrap_or(Value::Null))
        .map_err(|e| SphError::Parse(format!("input.config: {e}")))?;
    cfg.threads = outer.threads;
    let cmd: Command = serde_json::from_value(input.get("command").cloned().unwrap_or(Value::Null))
        .map_err(|e| SphError::Parse(format!("input.command: {e}")))?;
    if matches!(cmd, Command::Verify(_)) {
        return Err(SphError::Parse("refusing to verify a verify document".into()).into());
    }
    let replay = match exec(&cfg, &cmd) {
        Ok(v) | Err(Failure::NotFound(v)) => v,
        Err(Failure::Error(e)) => return Err(e.into()),
    };
    let mut bad = Vec::new();
    let mut worst = 0.0;
    compare(doc, &replay, outer.tol.min(cfg.tol), "$", &mut bad, &mut worst);
    let recheck = recheck_certificate(doc, &cfg)?;
    let recheck_ok = recheck.as_ref().map_or(true, |r| r["passed"] == json!(true));
    let verified = bad.is_empty() && recheck_ok;
    let out = json!({ "verified": verified, "max_float_diff": worst, "mismatches": bad, "certificate_recheck": recheck });
    if !verified {
        return Err(Failure::Error(SphError::NotFound(format!("verification failed: {out}"))));
    }
    Ok(out)
}

/// Runs one resolved command; the document gains the `"input"` echo.
pub fn dispatch(cfg: &RunConfig, cmd: &Command) -> Outcome {
    let mut cmd = cmd.clone();
    let echo = |cmd: &Command| json!({ "config": cfg, "command": cmd });
    if let Err(e) = resolve(&mut cmd) {
        return error_outcome(&e);
    }
    let run = || exec(cfg, &cmd);
    let step = match cfg.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build() {
            Ok(pool) => pool.install(run),
            Err(e) => return error_outcome(&SphError::Parse(format!("thread pool: {e}"))),
        },
        None => run(),
    };
    let with_input = |mut v: Value| {
        if let Value::Object(map) = &mut v {
            if !matches!(cmd, Command::Verify(_)) {
                map.insert("input".into(), echo(&cmd));
            }
        }
        v
    };
    match step {
        Ok(v) => Outcome { document: with_input(v), code: 0 },
        Err(Failure::NotFound(v)) => Outcome { document: with_input(v), code: 2 },
        Err(Failure::Error(e)) => error_outcome(&e),
    }
}

fn error_kind(e: &SphError) -> &'static str {
    match e {
        SphError::NotPrime(_) => "NotPrime",
        SphError::RankTooSmall { .. } => "RankTooSmall",
        SphError::NonUnimodular(_) => "NonUnimodular",
        SphError::Shape { .. } => "Shape",
        SphError::InvalidCoweight(_) => "InvalidCoweight",
        SphError::BadCoweightSum(_) => "BadCoweightSum",
        SphError::ResourceLimit { .. } => "ResourceLimit",
        SphError::ContextMismatch(..) => "ContextMismatch",
        SphError::InexactCoefficient(_) => "InexactCoefficient",
        SphError::NonHermitian(_) => "NonHermitian",
        SphError::DimensionMismatch { .. } => "DimensionMismatch",
        SphError::NotFound(_) => "NotFound",
        SphError::Parse(_) => "Parse",
    }
}

fn error_outcome(e: &SphError) -> Outcome {
    Outcome { document: json!({ "error": error_kind(e), "message": e.to_string() }), code: 1 }
}

/// Parses `argv` (including the program name) and runs it. Usage errors
/// exit 1; `--help` and `--version` exit 0 with their text as a JSON string.
pub fn run_args<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => dispatch(&cli.config, &cli.command),
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let document = if code == 0 { Value::String(text) } else { json!({ "error": "Usage", "message": text }) };
            Outcome { document, code }
        }
    }
}

/// Entry point of the binary: prints or writes the document and returns the
/// exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let out_path = Cli::try_parse_from(&argv).ok().and_then(|c| c.config.out);
    let outcome = run_args(&argv);
    let text = match &outcome.document {
        Value::String(s) if outcome.code == 0 => s.clone(),
        v => serde_json::to_string_pretty(v).expect("JSON values serialize"),
    };
    if outcome.code == 1 {
        eprintln!("{text}");
    } else if let Some(path) = out_path {
        if let Err(e) = std::fs::write(&path, format!("{text}\n")) {
            eprintln!("{}", json!({ "error": "Io", "message": format!("{}: {e}", path.display()) }));
            return 1;
        }
    } else {
        use std::io::Write;
        // A closed pipe on the reading side is not an error of ours.
        let _ = writeln!(std::io::stdout().lock(), "{text}");
    }
    outcome.code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> Outcome {
        run_args(std::iter::once("sphlab").chain(args.iter().copied()))
    }

    #[test]
    fn omega_trivial() {
        let o = run(&["omega", "--p", "2", "--n", "3", "--param", "trivial", "--coweight", "1,0,-1"]);
        assert_eq!(o.code, 0);
        assert_eq!(o.document["re"], json!(1.0));
        assert_eq!(o.document["im"], json!(0.0));
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(&["omega", "--p", "2"]).code, 1);
        assert_eq!(run(&["cosets", "--p", "4", "--n", "2", "--coweight", "1,-1"]).code, 1);
        assert_eq!(run(&["nonsense"]).code, 1);
        assert_eq!(run(&["--help"]).code, 0);
    }

    #[test]
    fn parse_helpers() {
        assert_eq!(parse_int_vector("1, 0,-1").unwrap(), vec![1, 0, -1]);
        assert_eq!(parse_int_vector("[2,-2]").unwrap(), vec![2, -2]);
        assert!(parse_int_vector("1,a").is_err());
        let ctx = PrimeContext::new(2, 2).unwrap();
        assert_eq!(parse_param(ctx, "sigma:1/2").unwrap(), trivial_param(ctx));
        assert!(parse_param(ctx, "seq:1").is_err());
    }
}
