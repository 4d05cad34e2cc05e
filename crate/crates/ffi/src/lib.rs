//! C ABI over `qig-kit`.
//!
//! Every entry point returns a [`QigStatus`]. On failure a message is kept in
//! thread-local storage and can be fetched with [`qig_last_error_message`].
//! Strings returned by the library must be released with [`qig_string_free`],
//! field handles with [`qig_field_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qig_kit::curvature::{kskd, scalar_curvature, CurvatureConfig};
use qig_kit::geometry::{PetzField, ReducedModel};
use qig_kit::hea::{CircuitSpec, Entangler};
use qig_kit::petz::OperatorMonotoneSpec;
use qig_kit::pipeline::point_report;
use qig_kit::vqe::{metrics, run, RunConfig};
use qig_kit::QigError;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QigStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Input outside the mathematical domain (pure or boundary reductions included).
    Domain = 3,
    /// A regularity guard rejected the point (gap, rank, Brioschi, chart).
    Guard = 4,
    /// No stable finite-difference step, or a singular metric.
    Numerical = 5,
    Config = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Opaque Petz tensor field over a circuit.
pub struct QigField {
    inner: PetzField,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(s));
}

fn status_of(e: &QigError) -> QigStatus {
    use QigError::*;
    match e {
        Domain(_) | PureReduction { .. } | BoundaryStratum { .. } | BlochBoundary(_) | KskdPole(_) | NotNormalized(_) => {
            QigStatus::Domain
        }
        GapGuard { .. } | IrregularSplit | Brioschi { .. } | NoTwoPlane(_) | GaugeUndefined | ChartDegenerate(_) => {
            QigStatus::Guard
        }
        NoStableStep | RankDeficient(_) | NonpositiveActive(_) => QigStatus::Numerical,
        ParamCount { .. } => QigStatus::InvalidArgument,
        Config(_) => QigStatus::Config,
        Io(_) => QigStatus::Io,
    }
}

fn fail(e: QigError) -> QigStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn guarded<F: FnOnce() -> QigStatus>(f: F) -> QigStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            QigStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, QigStatus> {
    if p.is_null() {
        set_error("null string argument");
        return Err(QigStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string argument is not UTF-8");
        QigStatus::InvalidArgument
    })
}

unsafe fn slice_arg<'a>(p: *const f64, n: usize) -> Result<&'a [f64], QigStatus> {
    if p.is_null() {
        set_error("null array argument");
        return Err(QigStatus::NullPointer);
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn field_arg<'a>(p: *const QigField) -> Result<&'a QigField, QigStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null field handle");
        QigStatus::NullPointer
    })
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> QigStatus {
    if out.is_null() {
        set_error("null output pointer");
        return QigStatus::NullPointer;
    }
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            QigStatus::Ok
        }
        Err(_) => {
            set_error("output contains an interior NUL");
            QigStatus::Panic
        }
    }
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qig_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy of the last error on this thread, or NULL if none. Free with `qig_string_free`.
#[no_mangle]
pub extern "C" fn qig_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |s| s.clone().into_raw()))
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn qig_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Field on the four-parameter ansatz with metric `"sld"`, `"wy"` or `"bkm"`.
///
/// # Safety
/// `metric` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qig_field_new(metric: *const c_char, out: *mut *mut QigField) -> QigStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return QigStatus::NullPointer;
        }
        let name = tri!(str_arg(metric));
        let spec = match OperatorMonotoneSpec::from_name(name) {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        *out = Box::into_raw(Box::new(QigField {
            inner: PetzField::new(spec, ReducedModel::hea()),
        }));
        QigStatus::Ok
    })
}

/// Field on a layered circuit of `depth` blocks; `entanglers` is a bit set
/// (1 = ZZ, 2 = XX) applied in every block.
///
/// # Safety
/// As for [`qig_field_new`].
#[no_mangle]
pub unsafe extern "C" fn qig_field_new_circuit(
    metric: *const c_char,
    depth: u32,
    entanglers: u32,
    out: *mut *mut QigField,
) -> QigStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return QigStatus::NullPointer;
        }
        if entanglers > 3 {
            set_error("entangler bit set must be in 0..=3");
            return QigStatus::InvalidArgument;
        }
        let name = tri!(str_arg(metric));
        let mut ent = Vec::new();
        if entanglers & 1 != 0 {
            ent.push(Entangler::Zz);
        }
        if entanglers & 2 != 0 {
            ent.push(Entangler::Xx);
        }
        let built = OperatorMonotoneSpec::from_name(name).and_then(|s| {
            let spec = CircuitSpec::new(depth as usize, ent)?;
            Ok(PetzField::new(s, ReducedModel::circuit(spec)?))
        });
        match built {
            Ok(f) => {
                *out = Box::into_raw(Box::new(QigField { inner: f }));
                QigStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Release a field. NULL is ignored.
///
/// # Safety
/// `field` must come from a `qig_field_new*` call and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn qig_field_free(field: *mut QigField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of circuit parameters, or 0 for a NULL handle.
///
/// # Safety
/// `field` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qig_field_n_params(field: *const QigField) -> usize {
    field.as_ref().map_or(0, |f| f.inner.n_params())
}

/// `F(theta)` written row-major into `out` (capacity `out_len`, needs `m * m`).
///
/// # Safety
/// `theta` must hold `n_theta` doubles and `out` `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qig_fisher(
    field: *const QigField,
    theta: *const f64,
    n_theta: usize,
    out: *mut f64,
    out_len: usize,
) -> QigStatus {
    guarded(|| {
        let f = tri!(field_arg(field));
        let t = tri!(slice_arg(theta, n_theta));
        let m = f.inner.n_params();
        if n_theta != m {
            return fail(QigError::ParamCount { expected: m, got: n_theta });
        }
        if out.is_null() {
            set_error("null output pointer");
            return QigStatus::NullPointer;
        }
        if out_len < m * m {
            set_error(format!("output buffer needs {} doubles", m * m));
            return QigStatus::BufferTooSmall;
        }
        match f.inner.fisher(t) {
            Ok(mat) => {
                let dst = std::slice::from_raw_parts_mut(out, m * m);
                for i in 0..m {
                    for j in 0..m {
                        dst[i * m + j] = mat[(i, j)];
                    }
                }
                QigStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Scalar curvature of the support-projected metric with the default
/// configuration and the given metric scale; the chosen step goes to `out_h`
/// when it is not NULL.
///
/// # Safety
/// `theta` must hold `n_theta` doubles; `out_r` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qig_scalar_curvature(
    field: *const QigField,
    theta: *const f64,
    n_theta: usize,
    metric_scale: f64,
    out_r: *mut f64,
    out_h: *mut f64,
) -> QigStatus {
    guarded(|| {
        let f = tri!(field_arg(field));
        let t = tri!(slice_arg(theta, n_theta));
        if out_r.is_null() {
            set_error("null output pointer");
            return QigStatus::NullPointer;
        }
        if n_theta != f.inner.n_params() {
            return fail(QigError::ParamCount {
                expected: f.inner.n_params(),
                got: n_theta,
            });
        }
        let cfg = CurvatureConfig {
            metric_scale,
            ..CurvatureConfig::default()
        };
        if let Err(e) = cfg.validate() {
            return fail(e);
        }
        match scalar_curvature(&f.inner, t, &cfg) {
            Ok((r, h, _)) => {
                *out_r = r;
                if !out_h.is_null() {
                    *out_h = h;
                }
                QigStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// `2 (6 c^2 - 5) / (c^2 - 1)` for `0 <= c < 1`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qig_kskd(c: f64, out: *mut f64) -> QigStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return QigStatus::NullPointer;
        }
        match kskd(c) {
            Ok(v) => {
                *out = v;
                QigStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// JSON point report on the four-parameter ansatz. Free the result with
/// `qig_string_free`.
///
/// # Safety
/// `theta` must hold `n_theta` doubles; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qig_point_report_json(
    field: *const QigField,
    theta: *const f64,
    n_theta: usize,
    out_json: *mut *mut c_char,
) -> QigStatus {
    guarded(|| {
        let f = tri!(field_arg(field));
        let t = tri!(slice_arg(theta, n_theta));
        match point_report(t, &f.inner, &CurvatureConfig::default()) {
            Ok(rep) => match serde_json::to_string(&rep) {
                Ok(s) => write_string(out_json, s),
                Err(e) => fail(QigError::from(e)),
            },
            Err(e) => fail(e),
        }
    })
}

/// Run a VQE experiment described by `config_json`; the result is a JSON
/// object with the trace and summary metrics.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qig_vqe_run_json(config_json: *const c_char, out_json: *mut *mut c_char) -> QigStatus {
    guarded(|| {
        let text = tri!(str_arg(config_json));
        let rc: RunConfig = match serde_json::from_str(text) {
            Ok(r) => r,
            Err(e) => return fail(QigError::from(e)),
        };
        let result = run(&rc).and_then(|t| {
            let m = metrics(&t.energies(), t.e_star)?;
            Ok(serde_json::json!({
                "auc": m.auc,
                "hit95": m.hit95,
                "final_error": t.final_error(),
                "trace": t,
            }))
        });
        match result {
            Ok(v) => write_string(out_json, v.to_string()),
            Err(e) => fail(e),
        }
    })
}
