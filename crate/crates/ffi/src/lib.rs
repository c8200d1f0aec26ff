//! C ABI over `sphlab`.
//!
//! Every function returns an [`SphStatus`]; outputs go through pointer
//! arguments. On failure the message is kept per thread and can be fetched
//! with [`sphlab_last_error`]. Strings returned by this library must be
//! released with [`sphlab_string_free`], labs with [`sphlab_lab_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use sphlab::cli::{parse_param, run_args};
use sphlab::cosets::coset_count_of;
use sphlab::hecke::structure_constants;
use sphlab::spherical::omega_at;
use sphlab::{DominantCoweight, Lab, PrimeContext, SphError};

/// Status codes. `Ok` and `NotFound` match the CLI exit codes 0 and 2.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphStatus {
    Ok = 0,
    Error = 1,
    NotFound = 2,
    NotPrime = 3,
    RankTooSmall = 4,
    NonUnimodular = 5,
    InvalidCoweight = 6,
    ResourceLimit = 7,
    ContextMismatch = 8,
    InexactCoefficient = 9,
    NonHermitian = 10,
    DimensionMismatch = 11,
    Parse = 12,
    NullPointer = 13,
    Panic = 14,
}

/// Opaque evaluation context: a prime, a rank and the memo tables.
pub struct SphLab {
    inner: Lab,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &SphError) -> SphStatus {
    match e {
        SphError::NotPrime(_) => SphStatus::NotPrime,
        SphError::RankTooSmall { .. } => SphStatus::RankTooSmall,
        SphError::NonUnimodular(_) => SphStatus::NonUnimodular,
        SphError::InvalidCoweight(_) | SphError::BadCoweightSum(_) => SphStatus::InvalidCoweight,
        SphError::ResourceLimit { .. } => SphStatus::ResourceLimit,
        SphError::ContextMismatch(..) => SphStatus::ContextMismatch,
        SphError::InexactCoefficient(_) => SphStatus::InexactCoefficient,
        SphError::NonHermitian(_) => SphStatus::NonHermitian,
        SphError::DimensionMismatch { .. } | SphError::Shape { .. } => SphStatus::DimensionMismatch,
        SphError::NotFound(_) => SphStatus::NotFound,
        SphError::Parse(_) => SphStatus::Parse,
    }
}

/// Runs `f`, recording errors and turning panics into `SphStatus::Panic`.
fn guard(f: impl FnOnce() -> Result<(), SphError>) -> SphStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SphStatus::Ok,
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            SphStatus::Panic
        }
    }
}

fn null_error(what: &str) -> SphStatus {
    set_error(format!("{what} is NULL"));
    SphStatus::NullPointer
}

/// # Safety
/// `ptr` must be NULL or point to `len` readable `i64` values.
unsafe fn coweight_arg(ptr: *const i64, len: usize) -> Result<DominantCoweight, SphError> {
    if ptr.is_null() {
        return Err(SphError::Parse("coweight pointer is NULL".into()));
    }
    // SAFETY: the caller guarantees `len` readable values behind `ptr`.
    let v = unsafe { std::slice::from_raw_parts(ptr, len) }.to_vec();
    DominantCoweight::new(v)
}

/// # Safety
/// `ptr` must be NULL or a valid NUL-terminated string.
unsafe fn str_arg<'a>(ptr: *const c_char) -> Result<&'a str, SphError> {
    if ptr.is_null() {
        return Err(SphError::Parse("string pointer is NULL".into()));
    }
    // SAFETY: the caller guarantees a NUL-terminated string.
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|e| SphError::Parse(format!("invalid UTF-8: {e}")))
}

/// Creates a lab for `SL_n(Q_p)` with at most `coset_cap` cosets per double
/// coset (0 selects the default).
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn sphlab_lab_new(p: u64, n: usize, coset_cap: u64, out: *mut *mut SphLab) -> SphStatus {
    if out.is_null() {
        return null_error("out");
    }
    guard(|| {
        let ctx = PrimeContext::new(p, n)?;
        let lab = if coset_cap == 0 { Lab::new(ctx) } else { Lab::with_cap(ctx, coset_cap as u128) };
        let handle = Box::into_raw(Box::new(SphLab { inner: lab }));
        // SAFETY: checked non-NULL above.
        unsafe { *out = handle };
        Ok(())
    })
}

/// # Safety
/// `lab` must be NULL or a pointer from [`sphlab_lab_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sphlab_lab_free(lab: *mut SphLab) {
    if lab.is_null() {
        return;
    }
    // SAFETY: the caller hands back ownership of a box we allocated.
    drop(unsafe { Box::from_raw(lab) });
}

/// Number of left cosets `L(pi^m)` in `U pi^m U`.
///
/// # Safety
/// `lab` must be a live lab, `m` must point to `n` readable values and
/// `out` to one writable `u64`.
#[no_mangle]
pub unsafe extern "C" fn sphlab_coset_count(lab: *const SphLab, m: *const i64, len: usize, out: *mut u64) -> SphStatus {
    if lab.is_null() {
        return null_error("lab");
    }
    if out.is_null() {
        return null_error("out");
    }
    guard(|| {
        // SAFETY: pointer validity is the caller's contract.
        let lab = unsafe { &(*lab).inner };
        let m = unsafe { coweight_arg(m, len) }?;
        let c = coset_count_of(lab, &m)? as u64;
        unsafe { *out = c };
        Ok(())
    })
}

/// Structure constant `c^{m3}` of `chi_{m1} * chi_{m2}`; all three
/// coweights have length `len`.
///
/// # Safety
/// `lab` must be a live lab, `m1`, `m2`, `m3` must each point to `len`
/// readable values and `out` to one writable `u64`.
#[no_mangle]
pub unsafe extern "C" fn sphlab_structure_constant(
    lab: *const SphLab,
    m1: *const i64,
    m2: *const i64,
    m3: *const i64,
    len: usize,
    out: *mut u64,
) -> SphStatus {
    if lab.is_null() {
        return null_error("lab");
    }
    if out.is_null() {
        return null_error("out");
    }
    guard(|| {
        // SAFETY: pointer validity is the caller's contract.
        let lab = unsafe { &(*lab).inner };
        let (a, b, c) = unsafe { (coweight_arg(m1, len)?, coweight_arg(m2, len)?, coweight_arg(m3, len)?) };
        let sc = structure_constants(lab, &a, &b)?;
        unsafe { *out = sc.get(&c).copied().unwrap_or(0) };
        Ok(())
    })
}

/// `omega_s(pi^m)`. `param` uses the CLI syntax: `trivial`, `seq:J`,
/// `sigma:X` or a JSON object `{"re": [..], "im": [..]}`.
///
/// # Safety
/// `lab` must be a live lab, `param` a NUL-terminated string, `m` must point
/// to `len` readable values, `re` and `im` to one writable `f64` each.
#[no_mangle]
pub unsafe extern "C" fn sphlab_omega(
    lab: *const SphLab,
    param: *const c_char,
    m: *const i64,
    len: usize,
    re: *mut f64,
    im: *mut f64,
) -> SphStatus {
    if lab.is_null() {
        return null_error("lab");
    }
    if re.is_null() || im.is_null() {
        return null_error("re/im");
    }
    guard(|| {
        // SAFETY: pointer validity is the caller's contract.
        let lab = unsafe { &(*lab).inner };
        let s = parse_param(*lab.ctx(), unsafe { str_arg(param) }?)?;
        let m = unsafe { coweight_arg(m, len) }?;
        let v = omega_at(lab, &s, &m)?;
        unsafe {
            *re = v.re;
            *im = v.im;
        }
        Ok(())
    })
}

/// Runs a CLI invocation. `argv_json` is a JSON array of arguments without
/// the program name, e.g. `["cosets", "--p", "2", "--n", "2", "--coweight",
/// "1,-1"]`. The output document is stored in `*out` (free it with
/// [`sphlab_string_free`]) and `*exit_code` receives the CLI exit code.
///
/// # Safety
/// `argv_json` must be a NUL-terminated string, `out` must point to storage
/// for one pointer and `exit_code` to one writable `i32`.
#[no_mangle]
pub unsafe extern "C" fn sphlab_dispatch(argv_json: *const c_char, out: *mut *mut c_char, exit_code: *mut i32) -> SphStatus {
    if out.is_null() || exit_code.is_null() {
        return null_error("out/exit_code");
    }
    guard(|| {
        // SAFETY: pointer validity is the caller's contract.
        let text = unsafe { str_arg(argv_json) }?;
        let args: Vec<String> = serde_json::from_str(text).map_err(|e| SphError::Parse(format!("argv: {e}")))?;
        let outcome = run_args(std::iter::once("sphlab".to_string()).chain(args));
        let doc = serde_json::to_string(&outcome.document).expect("JSON values serialize");
        let c = CString::new(doc).map_err(|e| SphError::Parse(e.to_string()))?;
        unsafe {
            *out = c.into_raw();
            *exit_code = outcome.code;
        }
        Ok(())
    })
}

/// Message of the last failure on this thread, or NULL. Free the result with
/// [`sphlab_string_free`].
#[no_mangle]
pub extern "C" fn sphlab_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null_mut(), |c| c.clone().into_raw()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sphlab_string_free(s: *mut c_char) {
    if s.is_null() {
        return;
    }
    // SAFETY: the string was produced by `CString::into_raw` here.
    drop(unsafe { CString::from_raw(s) });
}
