//! C ABI for the multdioph core: opaque handles, integer status codes, and
//! caller-owned output buffers. The header is generated into
//! include/multdioph.h at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use multdioph::cartan::CartanVector;
use multdioph::dani::{self, PsiSpec};
use multdioph::lattice::{self, MatrixY};
use multdioph::probe;
use multdioph::{Dims, Error};

pub const MD_OK: i32 = 0;
pub const MD_ERR_DOMAIN: i32 = 1;
pub const MD_ERR_RESOURCE: i32 = 2;
pub const MD_ERR_INTERNAL: i32 = 3;
pub const MD_ERR_NULL: i32 = 4;

/// Opaque handle around a parsed approximation function.
pub struct MdPsi {
    inner: PsiSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> i32 {
    match err {
        Error::Domain(_) | Error::DimensionMismatch { .. } => MD_ERR_DOMAIN,
        Error::Resource(_) => MD_ERR_RESOURCE,
        _ => MD_ERR_INTERNAL,
    }
}

fn fail(err: Error) -> i32 {
    let code = status_of(&err);
    set_error(err.to_string());
    code
}

fn guard<F: FnOnce() -> i32>(f: F) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => {
            set_error("panic across the FFI boundary".to_string());
            MD_ERR_INTERNAL
        }
    }
}

fn dims_of(m: u32, n: u32) -> Result<Dims, Error> {
    Dims::new(m as usize, n as usize)
}

/// Row-major m x n buffer into a matrix.
unsafe fn matrix_from(m: u32, n: u32, y: *const f64) -> Result<MatrixY, Error> {
    let dims = dims_of(m, n)?;
    let flat = std::slice::from_raw_parts(y, dims.m * dims.n);
    let rows = flat.chunks(dims.n).map(|r| r.to_vec()).collect();
    MatrixY::new(dims, rows)
}

/// Library version string; static storage, do not free.
#[no_mangle]
pub extern "C" fn md_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Message of the last error on this thread, or NULL. Valid until the next
/// failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn md_last_error() -> *const c_char {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(c) => c.as_ptr(),
        None => std::ptr::null(),
    })
}

/// Parses a JSON PsiSpec, e.g. {"kind":"hard","c":0.5}. On success stores a
/// heap handle in *out; release it with md_psi_free.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn md_psi_parse(json: *const c_char, out: *mut *mut MdPsi) -> i32 {
    if json.is_null() || out.is_null() {
        return MD_ERR_NULL;
    }
    guard(|| {
        let text = match CStr::from_ptr(json).to_str() {
            Ok(t) => t,
            Err(_) => {
                set_error("psi JSON is not valid UTF-8".to_string());
                return MD_ERR_NULL;
            }
        };
        let psi: PsiSpec = match serde_json::from_str(text) {
            Ok(p) => p,
            Err(e) => return fail(Error::domain(format!("bad psi JSON: {e}"))),
        };
        if let Err(e) = psi.validate() {
            return fail(e);
        }
        *out = Box::into_raw(Box::new(MdPsi { inner: psi }));
        MD_OK
    })
}

/// Releases a handle from md_psi_parse. NULL is a no-op.
///
/// # Safety
/// `psi` must be NULL or a pointer returned by md_psi_parse, freed once.
#[no_mangle]
pub unsafe extern "C" fn md_psi_free(psi: *mut MdPsi) {
    if !psi.is_null() {
        drop(Box::from_raw(psi));
    }
}

/// Evaluates psi at x.
///
/// # Safety
/// `psi` must come from md_psi_parse; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn md_psi_eval(psi: *const MdPsi, x: f64, out: *mut f64) -> i32 {
    if psi.is_null() || out.is_null() {
        return MD_ERR_NULL;
    }
    guard(|| {
        *out = (*psi).inner.eval(x);
        MD_OK
    })
}

/// Closed-form cusp radius of the hard Dirichlet function: log(1/c)/(m+n).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn md_r_hard(m: u32, n: u32, c: f64, out: *mut f64) -> i32 {
    if out.is_null() {
        return MD_ERR_NULL;
    }
    guard(|| match dims_of(m, n).and_then(|d| dani::r_hard(d, c)) {
        Ok(r) => {
            *out = r;
            MD_OK
        }
        Err(e) => fail(e),
    })
}

/// Solves the correspondence equation for R(t) to tolerance `tol`.
///
/// # Safety
/// `psi` must come from md_psi_parse; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn md_solve_r(
    psi: *const MdPsi,
    m: u32,
    n: u32,
    t: f64,
    tol: f64,
    out: *mut f64,
) -> i32 {
    if psi.is_null() || out.is_null() {
        return MD_ERR_NULL;
    }
    guard(|| {
        match dims_of(m, n).and_then(|d| dani::solve_r(&(*psi).inner, d, t, tol)) {
            Ok(r) => {
                *out = r;
                MD_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// Smallest valid flow time of the log-power family: e + n*lambda/(m+n).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn md_t_lambda(m: u32, n: u32, lambda: f64, out: *mut f64) -> i32 {
    if out.is_null() {
        return MD_ERR_NULL;
    }
    guard(|| match dims_of(m, n).and_then(|d| dani::t_lambda(d, lambda)) {
        Ok(t) => {
            *out = t;
            MD_OK
        }
        Err(e) => fail(e),
    })
}

/// Shortest sup-norm vector of the flowed lattice a.x_Y. `y` is row-major
/// m x n, `a` has m+n entries summing to zero. `cutoff <= 0` disables the
/// early exit. Witness buffers may be NULL; otherwise `p` holds m entries
/// and `q` holds n.
///
/// # Safety
/// Buffers must match the advertised lengths; `out_delta` must be valid.
#[no_mangle]
pub unsafe extern "C" fn md_delta_flowed(
    m: u32,
    n: u32,
    y: *const f64,
    a: *const f64,
    cutoff: f64,
    out_delta: *mut f64,
    out_p: *mut i64,
    out_q: *mut i64,
) -> i32 {
    if y.is_null() || a.is_null() || out_delta.is_null() {
        return MD_ERR_NULL;
    }
    guard(|| {
        let result = matrix_from(m, n, y).and_then(|mat| {
            let av = std::slice::from_raw_parts(a, mat.dims().d());
            let cart = CartanVector::new(av.to_vec())?;
            let cut = if cutoff > 0.0 { Some(cutoff) } else { None };
            lattice::delta_flowed(&mat, &cart, cut)
        });
        match result {
            Ok(r) => {
                *out_delta = r.delta;
                if !out_p.is_null() {
                    std::slice::from_raw_parts_mut(out_p, r.p.len()).copy_from_slice(&r.p);
                }
                if !out_q.is_null() {
                    std::slice::from_raw_parts_mut(out_q, r.q.len()).copy_from_slice(&r.q);
                }
                MD_OK
            }
            Err(e) => fail(e),
        }
    })
}

unsafe fn probe_common(
    m: u32,
    n: u32,
    y: *const f64,
    psi_t: f64,
    t_height: f64,
    mult: bool,
    out_found: *mut i32,
) -> i32 {
    if y.is_null() || out_found.is_null() {
        return MD_ERR_NULL;
    }
    guard(|| {
        let result = matrix_from(m, n, y).and_then(|mat| {
            if mult {
                probe::in_s_mult(&mat, psi_t, t_height)
            } else {
                probe::in_s_additive(&mat, psi_t, t_height)
            }
        });
        match result {
            Ok(cert) => {
                *out_found = cert.is_some() as i32;
                MD_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// Tests the additive Dirichlet system at height T against psi(T) = psi_t;
/// *out_found is 1 when a solution exists.
///
/// # Safety
/// `y` must hold m*n doubles; `out_found` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn md_in_s_additive(
    m: u32,
    n: u32,
    y: *const f64,
    psi_t: f64,
    t_height: f64,
    out_found: *mut i32,
) -> i32 {
    probe_common(m, n, y, psi_t, t_height, false, out_found)
}

/// Multiplicative counterpart of md_in_s_additive.
///
/// # Safety
/// `y` must hold m*n doubles; `out_found` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn md_in_s_mult(
    m: u32,
    n: u32,
    y: *const f64,
    psi_t: f64,
    t_height: f64,
    out_found: *mut i32,
) -> i32 {
    probe_common(m, n, y, psi_t, t_height, true, out_found)
}

/// Integer point of the convex body at height T and constant c; writes the
/// witness into `out_p` (m entries) and `out_q` (n entries).
///
/// # Safety
/// Buffers must match the advertised lengths.
#[no_mangle]
pub unsafe extern "C" fn md_minkowski_point(
    m: u32,
    n: u32,
    y: *const f64,
    t_height: f64,
    c: f64,
    out_p: *mut i64,
    out_q: *mut i64,
) -> i32 {
    if y.is_null() || out_p.is_null() || out_q.is_null() {
        return MD_ERR_NULL;
    }
    guard(|| {
        match matrix_from(m, n, y).and_then(|mat| lattice::minkowski_point(&mat, t_height, c)) {
            Ok(cert) => {
                std::slice::from_raw_parts_mut(out_p, cert.p.len()).copy_from_slice(&cert.p);
                std::slice::from_raw_parts_mut(out_q, cert.q.len()).copy_from_slice(&cert.q);
                MD_OK
            }
            Err(e) => fail(e),
        }
    })
}
