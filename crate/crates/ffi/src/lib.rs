//! C ABI over `mediator-core`.
//!
//! Every fallible function returns an `int32_t` status (`MM_OK` on success) and
//! writes results through out-pointers. On failure a message is kept per thread
//! and can be read with [`mm_last_error`]. Handles are opaque and must be released
//! with the matching `*_free` function; strings returned by the library are
//! released with [`mm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use mediator_core::mechanism::{solve, DirectMechanism, ThresholdMechanism};
use mediator_core::verify::audit;
use mediator_core::{Error, ProblemInstance};

pub const MM_OK: i32 = 0;
/// A required pointer argument was null.
pub const MM_NULL_POINTER: i32 = 1;
/// A string argument was not valid UTF-8.
pub const MM_INVALID_UTF8: i32 = 2;
/// Bad input: malformed config, invalid instance or argument.
pub const MM_CONFIG: i32 = 3;
/// A numerical routine failed.
pub const MM_NUMERIC: i32 = 4;
/// A type lies outside its support.
pub const MM_DOMAIN: i32 = 5;
/// A Rust panic was caught at the boundary.
pub const MM_PANIC: i32 = 6;

/// Opaque problem instance.
pub struct MmInstance(ProblemInstance);

/// Opaque solved mechanism.
pub struct MmMechanism(ThresholdMechanism);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn code_for(e: &Error) -> i32 {
    match e {
        Error::Domain(_) => MM_DOMAIN,
        e if e.is_input_error() => MM_CONFIG,
        _ => MM_NUMERIC,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (i32, String)>>(f: F) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MM_OK,
        Ok(Err((code, msg))) => {
            set_error(&msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            MM_PANIC
        }
    }
}

fn lib_err(e: Error) -> (i32, String) {
    (code_for(&e), e.to_string())
}

fn null(what: &str) -> (i32, String) {
    (MM_NULL_POINTER, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (i32, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), (i32, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn in_support(m: &ThresholdMechanism, t: Option<f64>, q: Option<f64>) -> Result<(), (i32, String)> {
    let inst = m.instance();
    if let Some(t) = t {
        let s = inst.buyer.support();
        if !s.contains(t) {
            return Err((MM_DOMAIN, format!("t = {t} outside [{}, {}]", s.lo, s.hi)));
        }
    }
    if let Some(q) = q {
        let s = inst.seller.support();
        if !s.contains(q) {
            return Err((MM_DOMAIN, format!("q = {q} outside [{}, {}]", s.lo, s.hi)));
        }
    }
    Ok(())
}

/// Message for the last failed call on this thread (empty if none). The pointer is
/// owned by the library and stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn mm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a JSON instance config.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_instance_from_json(json: *const c_char, out: *mut *mut MmInstance) -> i32 {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (MM_INVALID_UTF8, e.to_string()))?;
        let inst = ProblemInstance::from_json(text).map_err(lib_err)?;
        write(out, Box::into_raw(Box::new(MmInstance(inst))), "out")
    })
}

/// The built-in uniform example with `v = q t` and `r = 1.5 q` on `[1, 2]^2`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_instance_example1(out: *mut *mut MmInstance) -> i32 {
    guard(|| write(out, Box::into_raw(Box::new(MmInstance(ProblemInstance::example1()))), "out"))
}

/// # Safety
/// `inst` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn mm_instance_free(inst: *mut MmInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Solves the instance. The mechanism keeps its own copy of the instance.
///
/// # Safety
/// `inst` must be a live instance handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_solve(inst: *const MmInstance, out: *mut *mut MmMechanism) -> i32 {
    guard(|| {
        let inst = deref(inst, "inst")?;
        let m = solve(&inst.0).map_err(lib_err)?;
        write(out, Box::into_raw(Box::new(MmMechanism(m))), "out")
    })
}

/// # Safety
/// `m` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn mm_mechanism_free(m: *mut MmMechanism) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Trade recommendation (0 or 1) for the reported pair.
///
/// # Safety
/// `m` must be a live mechanism handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_allocation(m: *const MmMechanism, t: f64, q: f64, out: *mut u8) -> i32 {
    guard(|| {
        let m = deref(m, "mechanism")?;
        let a = m.0.allocation(t, q).map_err(lib_err)?;
        write(out, a, "out")
    })
}

/// Buyer payment at report `t` and seller payment at report `q` (conditional on trade).
///
/// # Safety
/// `m` must be a live mechanism handle; `buyer` and `seller` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_payments(
    m: *const MmMechanism,
    t: f64,
    q: f64,
    buyer: *mut f64,
    seller: *mut f64,
) -> i32 {
    guard(|| {
        let m = deref(m, "mechanism")?;
        in_support(&m.0, Some(t), Some(q))?;
        if buyer.is_null() || seller.is_null() {
            return Err(null("payment out-pointer"));
        }
        write(buyer, m.0.buyer_payment(t), "buyer")?;
        write(seller, m.0.seller_payment(q), "seller")
    })
}

/// Interim buyer rate `R_b(t)`.
///
/// # Safety
/// `m` must be a live mechanism handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_rb(m: *const MmMechanism, t: f64, out: *mut f64) -> i32 {
    guard(|| {
        let m = deref(m, "mechanism")?;
        in_support(&m.0, Some(t), None)?;
        write(out, m.0.rb(t), "out")
    })
}

/// Interim seller rate `R_s(q)`.
///
/// # Safety
/// `m` must be a live mechanism handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_rs(m: *const MmMechanism, q: f64, out: *mut f64) -> i32 {
    guard(|| {
        let m = deref(m, "mechanism")?;
        in_support(&m.0, None, Some(q))?;
        write(out, m.0.rs(q), "out")
    })
}

/// Expected revenue from payments and from the virtual-surplus integral.
///
/// # Safety
/// `m` must be a live mechanism handle; both out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_revenues(m: *const MmMechanism, direct: *mut f64, virtual_surplus: *mut f64) -> i32 {
    guard(|| {
        let m = deref(m, "mechanism")?;
        if direct.is_null() || virtual_surplus.is_null() {
            return Err(null("revenue out-pointer"));
        }
        write(direct, m.0.revenue_direct(), "direct")?;
        write(virtual_surplus, m.0.revenue_virtual(), "virtual_surplus")
    })
}

/// Audit on a `grid_n x grid_n` lattice, as a JSON object. Free the string with
/// [`mm_string_free`].
///
/// # Safety
/// `m` must be a live mechanism handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_audit_json(m: *const MmMechanism, grid_n: usize, out: *mut *mut c_char) -> i32 {
    guard(|| {
        let m = deref(m, "mechanism")?;
        if grid_n < 2 {
            return Err((MM_CONFIG, "grid_n must be at least 2".into()));
        }
        let json = serde_json::to_string(&audit(&m.0, grid_n)).map_err(|e| (MM_NUMERIC, e.to_string()))?;
        let c = CString::new(json).map_err(|e| (MM_NUMERIC, e.to_string()))?;
        write(out, c.into_raw(), "out")
    })
}

/// # Safety
/// `s` must be null or a string returned by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn mm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
