//! C ABI over `compop`.
//!
//! Every fallible function returns a [`CompopStatus`] and writes its result
//! through an out-pointer. On failure the message is kept per thread and can
//! be read with [`compop_last_error`]. Handles are opaque and must be
//! released with their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use compop::certificates::truncation_tail_upper;
use compop::galerkin::{approx_numbers, hs_norm_sq, unboundedness_witness, AssembleOptions};
use compop::{count_upto, gamma_estimate, DomainSpec, Error, SelfMap, SpecDocument, Window};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompopStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    Spec = 3,
    Unbounded = 4,
    MemoryGuard = 5,
    Unsupported = 6,
    Numeric = 7,
    Soundness = 8,
    Io = 9,
    Panic = 10,
}

impl From<&Error> for CompopStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_)
            | Error::SeriesMismatch(_)
            | Error::IndexOutOfRange { .. }
            | Error::NotMonotone(_)
            | Error::BoundaryPoint(_)
            | Error::FixedPointRequired(_)
            | Error::NonzeroInnerConstant(_) => CompopStatus::InvalidArgument,
            Error::Spec(_) | Error::Json(_) => CompopStatus::Spec,
            Error::UnboundedSymbol(_) => CompopStatus::Unbounded,
            Error::MemoryGuard { .. } => CompopStatus::MemoryGuard,
            Error::UnsupportedDomain(_) | Error::TailInapplicable(_) | Error::ZeroEigenvalue => CompopStatus::Unsupported,
            Error::Overflow(_)
            | Error::SingularDivision(_)
            | Error::NonConvergence(_)
            | Error::Numeric(_)
            | Error::IllConditioned(_) => CompopStatus::Numeric,
            Error::Soundness(_) => CompopStatus::Soundness,
            Error::Io(_) | Error::Csv(_) => CompopStatus::Io,
        }
    }
}

/// A validated self-map of a product of balls.
pub struct CompopSymbol {
    map: SelfMap,
}

/// Compressed approximation numbers, descending.
pub struct CompopSpectrum {
    values: Vec<f64>,
}

/// Decay fit summary. Absent values are NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct CompopDecayFit {
    pub window_lo: usize,
    pub window_hi: usize,
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub stretch_exponent: f64,
    pub stretch_exponent_offset: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: CompopStatus, msg: impl Into<String>) -> CompopStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), CompopStatus>>(f: F) -> CompopStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CompopStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            fail(CompopStatus::Panic, msg)
        }
    }
}

fn lift<T>(r: compop::Result<T>) -> Result<T, CompopStatus> {
    r.map_err(|e| fail(CompopStatus::from(&e), e.to_string()))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), CompopStatus> {
    if p.is_null() {
        Err(fail(CompopStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

fn options(max_basis: u64) -> AssembleOptions {
    if max_basis == 0 {
        AssembleOptions::default()
    } else {
        AssembleOptions { max_basis }
    }
}

/// Message of the last failure on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn compop_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn compop_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a symbol document (the CLI's JSON format) and validates it.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn compop_symbol_from_json(json: *const c_char, seed: u64, out: *mut *mut CompopSymbol) -> CompopStatus {
    guard(|| {
        non_null(json, "json")?;
        non_null(out, "out")?;
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| fail(CompopStatus::Spec, format!("symbol document is not UTF-8: {e}")))?;
        let map = lift(SpecDocument::parse(text).and_then(|d| d.build(seed)))?;
        *out = Box::into_raw(Box::new(CompopSymbol { map }));
        Ok(())
    })
}

/// # Safety
/// `sym` must come from [`compop_symbol_from_json`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn compop_symbol_free(sym: *mut CompopSymbol) {
    if !sym.is_null() {
        drop(Box::from_raw(sym));
    }
}

/// Ambient dimension of the symbol's domain; 0 for a null handle.
///
/// # Safety
/// `sym` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn compop_symbol_dim(sym: *const CompopSymbol) -> usize {
    sym.as_ref().map_or(0, |s| s.map.dim())
}

/// Compressed approximation numbers at degree `p`. `max_basis = 0` uses the
/// default guard.
///
/// # Safety
/// `sym` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn compop_approx_numbers(
    sym: *const CompopSymbol,
    p: u32,
    max_basis: u64,
    out: *mut *mut CompopSpectrum,
) -> CompopStatus {
    guard(|| {
        non_null(sym, "symbol")?;
        non_null(out, "out")?;
        let approx = lift(approx_numbers(&(*sym).map, p, options(max_basis)))?;
        *out = Box::into_raw(Box::new(CompopSpectrum { values: approx.values }));
        Ok(())
    })
}

/// # Safety
/// `spec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn compop_spectrum_len(spec: *const CompopSpectrum) -> usize {
    spec.as_ref().map_or(0, |s| s.values.len())
}

/// Borrowed pointer to the values; valid until the handle is freed.
///
/// # Safety
/// `spec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn compop_spectrum_data(spec: *const CompopSpectrum) -> *const f64 {
    spec.as_ref().map_or(ptr::null(), |s| s.values.as_ptr())
}

/// # Safety
/// `spec` must come from [`compop_approx_numbers`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn compop_spectrum_free(spec: *mut CompopSpectrum) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Squared Hilbert-Schmidt norm of the degree-`p` compression.
///
/// # Safety
/// `sym` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn compop_hs_norm_sq(sym: *const CompopSymbol, p: u32, max_basis: u64, out: *mut f64) -> CompopStatus {
    guard(|| {
        non_null(sym, "symbol")?;
        non_null(out, "out")?;
        *out = lift(hs_norm_sq(&(*sym).map, p, options(max_basis)))?;
        Ok(())
    })
}

/// Number of multi-indices in `d` variables of degree at most `p`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn compop_count_upto(d: usize, p: u64, out: *mut u64) -> CompopStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = lift(count_upto(d, p))?;
        Ok(())
    })
}

/// Norm ratio of the duplicate map on `(z₁ + z₂)^n`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn compop_witness(n: u32, out: *mut f64) -> CompopStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = lift(unboundedness_witness(n))?;
        Ok(())
    })
}

/// Truncation tail bound for a symbol with sup-norm `r` on the domain with
/// the given block sizes. A negative `n` gives the untruncated sum.
///
/// # Safety
/// `blocks` must point to `n_blocks` readable values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn compop_tail_upper(
    blocks: *const usize,
    n_blocks: usize,
    r: f64,
    n: i64,
    out: *mut f64,
) -> CompopStatus {
    guard(|| {
        non_null(blocks, "blocks")?;
        non_null(out, "out")?;
        let dom = lift(DomainSpec::new(std::slice::from_raw_parts(blocks, n_blocks).to_vec()))?;
        let n = if n < 0 {
            None
        } else {
            Some(u32::try_from(n).map_err(|_| fail(CompopStatus::InvalidArgument, format!("n = {n} too large")))?)
        };
        *out = lift(truncation_tail_upper(&dom, r, n))?;
        Ok(())
    })
}

/// Decay fit of a non-increasing sample. `lo = hi = 0` selects the default
/// window.
///
/// # Safety
/// `a` must point to `len` readable values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn compop_gamma_estimate(
    a: *const f64,
    len: usize,
    d: usize,
    lo: usize,
    hi: usize,
    out: *mut CompopDecayFit,
) -> CompopStatus {
    guard(|| {
        non_null(a, "a")?;
        non_null(out, "out")?;
        let window = if lo == 0 && hi == 0 { None } else { Some(lift(Window::new(lo, hi))?) };
        let fit = lift(gamma_estimate(std::slice::from_raw_parts(a, len), d, window))?;
        *out = CompopDecayFit {
            window_lo: fit.window.lo,
            window_hi: fit.window.hi,
            gamma_minus: fit.gamma_minus,
            gamma_plus: fit.gamma_plus,
            slope: fit.slope,
            intercept: fit.intercept,
            residual: fit.residual,
            stretch_exponent: fit.stretch_exponent.unwrap_or(f64::NAN),
            stretch_exponent_offset: fit.stretch_exponent_offset.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}
