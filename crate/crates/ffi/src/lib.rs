//! C interface to `privregion`.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free`. Every call returns a [`PrStatus`];
//! on failure the message is kept per thread and read back with
//! [`pr_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use privregion::closed_form::hamming_waterfill;
use privregion::dp::Mechanism;
use privregion::prob::{DistortionSpec, Pmf};
use privregion::rd::{rd_at_distortion, BaConfig};
use privregion::region::{self, PrivacyProblem, ProblemJson, RegionPoint, SolverConfig};
use privregion::Error;

/// Status codes. Values 1 to 3 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrStatus {
    Ok = 0,
    InvalidArgument = 1,
    Infeasible = 2,
    NotConverged = 3,
    NullPointer = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// A privacy problem.
pub struct PrProblem(PrivacyProblem);

/// One solved region point.
pub struct PrPoint(RegionPoint);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PrStatus {
    match e {
        Error::Infeasible { .. } => PrStatus::Infeasible,
        Error::NotConverged { .. } => PrStatus::NotConverged,
        _ => PrStatus::InvalidArgument,
    }
}

fn fail(status: PrStatus, msg: impl Into<String>) -> PrStatus {
    set_error(msg.into());
    status
}

/// Run `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), PrStatus>) -> PrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PrStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(PrStatus::Panic, msg)
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, PrStatus>;
}

impl<T> OrStatus<T> for privregion::Result<T> {
    fn or_status(self) -> Result<T, PrStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), PrStatus> {
    if p.is_null() {
        Err(fail(PrStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], PrStatus> {
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn source(probs: *const f64, n: usize) -> Result<Pmf, PrStatus> {
    Pmf::from_probs(slice(probs, n, "probs")?.to_vec()).or_status()
}

fn solver_cfg(seed: u64) -> SolverConfig {
    SolverConfig {
        rng_seed: seed,
        ..SolverConfig::default()
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Bytes needed for the last error message including the NUL; 0 if none.
#[no_mangle]
pub extern "C" fn pr_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |s| s.as_bytes().len() + 1))
}

/// Copy the last error message of this thread into `buf`.
///
/// # Safety
/// `buf` must be valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pr_last_error_message(buf: *mut c_char, len: usize) -> PrStatus {
    if buf.is_null() {
        return PrStatus::NullPointer;
    }
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map_or(&[0u8][..], |s| s.as_bytes_with_nul());
        if bytes.len() > len {
            return PrStatus::BufferTooSmall;
        }
        ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, bytes.len());
        PrStatus::Ok
    })
}

/// Census problem over one attribute with Hamming distortion.
/// `u_card = 0` picks the default cardinality.
///
/// # Safety
/// `probs` must be valid for `n` reads and `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn pr_problem_census(
    probs: *const f64,
    n: usize,
    u_card: usize,
    out: *mut *mut PrProblem,
) -> PrStatus {
    guard(|| {
        non_null(out, "out")?;
        let p = source(probs, n)?;
        let u = (u_card > 0).then_some(u_card);
        let prob = PrivacyProblem::census(&p, DistortionSpec::hamming(n), u).or_status()?;
        *out = Box::into_raw(Box::new(PrProblem(prob)));
        Ok(())
    })
}

/// Problem from its JSON description.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pr_problem_from_json(
    json: *const c_char,
    out: *mut *mut PrProblem,
) -> PrStatus {
    guard(|| {
        non_null(json, "json")?;
        non_null(out, "out")?;
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| fail(PrStatus::InvalidArgument, e.to_string()))?;
        let pj: ProblemJson = serde_json::from_str(text)
            .map_err(|e| fail(PrStatus::InvalidArgument, e.to_string()))?;
        let prob = pj.into_problem().or_status()?;
        *out = Box::into_raw(Box::new(PrProblem(prob)));
        Ok(())
    })
}

/// # Safety
/// `p` must come from a `pr_problem_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pr_problem_free(p: *mut PrProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Frontier point at distortion `d`.
///
/// # Safety
/// `prob` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pr_gamma(
    prob: *const PrProblem,
    d: f64,
    seed: u64,
    out: *mut *mut PrPoint,
) -> PrStatus {
    guard(|| {
        non_null(prob, "problem")?;
        non_null(out, "out")?;
        let pt = region::gamma_of_d(&(*prob).0, d, &solver_cfg(seed)).or_status()?;
        *out = Box::into_raw(Box::new(PrPoint(pt)));
        Ok(())
    })
}

/// Minimum-rate point at distortion `d` and equivocation `e`.
///
/// # Safety
/// `prob` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pr_rate(
    prob: *const PrProblem,
    d: f64,
    e: f64,
    seed: u64,
    out: *mut *mut PrPoint,
) -> PrStatus {
    guard(|| {
        non_null(prob, "problem")?;
        non_null(out, "out")?;
        let pt = region::r_of_de(&(*prob).0, d, e, &solver_cfg(seed)).or_status()?;
        *out = Box::into_raw(Box::new(PrPoint(pt)));
        Ok(())
    })
}

/// Rate, distortion and equivocation of a point. Any output may be null.
///
/// # Safety
/// `p` must be a live handle; non-null outputs valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pr_point_metrics(
    p: *const PrPoint,
    rate: *mut f64,
    distortion: *mut f64,
    equivocation: *mut f64,
) -> PrStatus {
    guard(|| {
        non_null(p, "point")?;
        let pt = &(*p).0;
        for (dst, v) in [
            (rate, pt.rate),
            (distortion, pt.distortion),
            (equivocation, pt.equivocation),
        ] {
            if !dst.is_null() {
                *dst = v;
            }
        }
        Ok(())
    })
}

/// Copy the row-major channel matrix into `buf`. `n_in`/`n_out` receive the
/// shape (either may be null); with `buf` null only the shape is reported.
///
/// # Safety
/// `p` must be a live handle; `buf` valid for `len` writes when non-null.
#[no_mangle]
pub unsafe extern "C" fn pr_point_channel(
    p: *const PrPoint,
    buf: *mut f64,
    len: usize,
    n_in: *mut usize,
    n_out: *mut usize,
) -> PrStatus {
    guard(|| {
        non_null(p, "point")?;
        let c = &(*p).0.channel;
        if !n_in.is_null() {
            *n_in = c.n_in();
        }
        if !n_out.is_null() {
            *n_out = c.n_out();
        }
        if buf.is_null() {
            return Ok(());
        }
        let m = c.matrix();
        if len < m.len() {
            return Err(fail(
                PrStatus::BufferTooSmall,
                format!("channel has {} entries, buffer {len}", m.len()),
            ));
        }
        ptr::copy_nonoverlapping(m.as_ptr(), buf, m.len());
        Ok(())
    })
}

/// # Safety
/// `p` must come from `pr_gamma`/`pr_rate` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pr_point_free(p: *mut PrPoint) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Hamming rate-distortion function of `probs` at distortion `d`.
///
/// # Safety
/// `probs` valid for `n` reads, `rate` for one write.
#[no_mangle]
pub unsafe extern "C" fn pr_rd_hamming(
    probs: *const f64,
    n: usize,
    d: f64,
    rate: *mut f64,
) -> PrStatus {
    guard(|| {
        non_null(rate, "rate")?;
        let p = source(probs, n)?;
        let pt = rd_at_distortion(&p, &DistortionSpec::hamming(n), d, &BaConfig::default())
            .or_status()?;
        *rate = pt.rate;
        Ok(())
    })
}

/// Closed-form Hamming solution: water level, exact frontier value and rate.
/// Any output may be null.
///
/// # Safety
/// `probs` valid for `n` reads; non-null outputs valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pr_waterfill(
    probs: *const f64,
    n: usize,
    d: f64,
    lambda: *mut f64,
    gamma: *mut f64,
    rate: *mut f64,
) -> PrStatus {
    guard(|| {
        let p = source(probs, n)?;
        let s = hamming_waterfill(&p, d).or_status()?;
        for (dst, v) in [(lambda, s.lambda), (gamma, s.gamma_exact), (rate, s.rate)] {
            if !dst.is_null() {
                *dst = v;
            }
        }
        Ok(())
    })
}

/// Add Laplace noise with scale `sensitivity / epsilon` to `n` values.
/// `out` may alias `values`.
///
/// # Safety
/// `values` valid for `n` reads and `out` for `n` writes.
#[no_mangle]
pub unsafe extern "C" fn pr_laplace(
    values: *const f64,
    n: usize,
    epsilon: f64,
    sensitivity: f64,
    seed: u64,
    out: *mut f64,
) -> PrStatus {
    guard(|| {
        non_null(out, "out")?;
        let v = slice(values, n, "values")?.to_vec();
        let m = Mechanism::new(epsilon, sensitivity).or_status()?;
        let noisy = m.apply(&v, seed);
        ptr::copy_nonoverlapping(noisy.as_ptr(), out, n);
        Ok(())
    })
}
