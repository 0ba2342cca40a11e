//! C ABI over the ladnas predictor, codec and cost models.
//!
//! Every fallible function returns a [`LadnasStatus`]. On failure the message is kept
//! in thread-local storage and can be read with [`ladnas_last_error`] until the next
//! failing call on the same thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ladnas_core::lpm::Lpm;
use ladnas_core::numeric::Rng;
use ladnas_core::oracle::{flops, synthetic_latency, table_latency, CostTable, SyntheticHardwareModel};
use ladnas_core::space::{decode, space_size, CellConfig, DiscreteArch, Encoding};
use ladnas_core::Error;

/// Result codes shared by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadnasStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidEncoding = 3,
    Io = 4,
    Model = 5,
    Internal = 6,
}

/// Opaque handle to a loaded latency predictor.
pub struct LadnasLpm {
    inner: Lpm,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    let c = CString::new(msg).expect("interior NULs were replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> LadnasStatus {
    match e {
        Error::Encoding(_) | Error::InvalidArch(_) => LadnasStatus::InvalidEncoding,
        Error::Io { .. } => LadnasStatus::Io,
        Error::Model(_) | Error::Json(_) => LadnasStatus::Model,
        Error::DimensionMismatch { .. } => LadnasStatus::InvalidArgument,
        _ => LadnasStatus::Internal,
    }
}

struct Failure(LadnasStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LadnasStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LadnasStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            LadnasStatus::Internal
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(LadnasStatus::NullPointer, format!("{what} is null"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(LadnasStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn parse_arch(bits: *const c_char) -> Result<(DiscreteArch, Encoding), Failure> {
    let text = c_str(bits, "bits")?;
    let cell = CellConfig::default();
    let enc = Encoding::parse(text, &cell).map_err(Error::from)?;
    let arch = decode(&enc, &cell).map_err(Error::from)?;
    Ok((arch, enc))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the most recent failure on this thread, or NULL if none occurred.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ladnas_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Number of bits in an architecture encoding.
#[no_mangle]
pub extern "C" fn ladnas_encoding_len() -> usize {
    CellConfig::default().encoding_len()
}

/// Number of distinct normal cells in the default space.
///
/// # Safety
/// `out` must be NULL or point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn ladnas_space_size(out: *mut u64) -> LadnasStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let n = space_size(&CellConfig::default(), 7)?;
        *out = u64::try_from(n).map_err(|_| Failure(LadnasStatus::Internal, "space size exceeds u64".into()))?;
        Ok(())
    })
}

/// Checks that `bits` (a NUL-terminated string of '0'/'1') encodes a valid cell.
///
/// # Safety
/// `bits` must be NULL or a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ladnas_encoding_validate(bits: *const c_char) -> LadnasStatus {
    guard(|| parse_arch(bits).map(|_| ()))
}

/// Noise-free latency of `bits` under the default synthetic hardware model.
///
/// # Safety
/// `bits` must be a valid NUL-terminated string and `out_ms` writable.
#[no_mangle]
pub unsafe extern "C" fn ladnas_synthetic_latency(bits: *const c_char, out_ms: *mut f64) -> LadnasStatus {
    guard(|| {
        let (arch, _) = parse_arch(bits)?;
        let out = out_ref(out_ms, "out_ms")?;
        let model = SyntheticHardwareModel::default().noise_free();
        *out = synthetic_latency(&arch, &CellConfig::default(), &model, 1, &mut Rng::new(0))?;
        Ok(())
    })
}

/// Latency of `bits` under the default per-operation lookup table.
///
/// # Safety
/// `bits` must be a valid NUL-terminated string and `out_ms` writable.
#[no_mangle]
pub unsafe extern "C" fn ladnas_table_latency(bits: *const c_char, out_ms: *mut f64) -> LadnasStatus {
    guard(|| {
        let (arch, _) = parse_arch(bits)?;
        let out = out_ref(out_ms, "out_ms")?;
        *out = table_latency(&arch, &CellConfig::default(), &CostTable::default())?;
        Ok(())
    })
}

/// FLOPs (millions) of `bits` under the default cost table.
///
/// # Safety
/// `bits` must be a valid NUL-terminated string and `out_mflops` writable.
#[no_mangle]
pub unsafe extern "C" fn ladnas_flops(bits: *const c_char, out_mflops: *mut f64) -> LadnasStatus {
    guard(|| {
        let (arch, _) = parse_arch(bits)?;
        *out_ref(out_mflops, "out_mflops")? = flops(&arch, &CostTable::default());
        Ok(())
    })
}

/// Loads a predictor saved by `ladnas train-lpm`. Free it with [`ladnas_lpm_free`].
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ladnas_lpm_load(path: *const c_char, out: *mut *mut LadnasLpm) -> LadnasStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        let out = out_ref(out, "out")?;
        let inner = Lpm::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(LadnasLpm { inner }));
        Ok(())
    })
}

/// Releases a handle from [`ladnas_lpm_load`]. NULL is ignored.
///
/// # Safety
/// `lpm` must be NULL or a live handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ladnas_lpm_free(lpm: *mut LadnasLpm) {
    if !lpm.is_null() {
        drop(Box::from_raw(lpm));
    }
}

/// Input width of the predictor, or 0 for a NULL handle.
///
/// # Safety
/// `lpm` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ladnas_lpm_input_dim(lpm: *const LadnasLpm) -> usize {
    lpm.as_ref().map_or(0, |h| h.inner.input_dim())
}

/// Predicted latency (ms) for an encoding given as a bit string.
///
/// # Safety
/// `lpm` must be a live handle, `bits` a valid NUL-terminated string, `out_ms` writable.
#[no_mangle]
pub unsafe extern "C" fn ladnas_lpm_predict_bits(
    lpm: *const LadnasLpm,
    bits: *const c_char,
    out_ms: *mut f64,
) -> LadnasStatus {
    guard(|| {
        let h = lpm.as_ref().ok_or_else(|| null("lpm"))?;
        let (_, enc) = parse_arch(bits)?;
        let out = out_ref(out_ms, "out_ms")?;
        *out = h.inner.predict(&enc)?;
        Ok(())
    })
}

/// Predicted latency (ms) and its gradient with respect to a real-valued input of
/// length `len`. `grad` must hold `len` doubles, or be NULL to skip the gradient.
///
/// # Safety
/// `x` must point to `len` doubles; `grad` must be NULL or point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ladnas_lpm_predict_with_grad(
    lpm: *const LadnasLpm,
    x: *const f64,
    len: usize,
    out_ms: *mut f64,
    grad: *mut f64,
) -> LadnasStatus {
    guard(|| {
        let h = lpm.as_ref().ok_or_else(|| null("lpm"))?;
        if x.is_null() {
            return Err(null("x"));
        }
        let input = std::slice::from_raw_parts(x, len);
        let out = out_ref(out_ms, "out_ms")?;
        let (y, g) = h.inner.predict_with_grad(input)?;
        *out = y;
        if !grad.is_null() {
            std::slice::from_raw_parts_mut(grad, len).copy_from_slice(&g);
        }
        Ok(())
    })
}
