//! C ABI over `lipmm`.
//!
//! Objects cross the boundary as opaque handles (`LipmmSpace`, `LipmmRep`) that
//! the caller releases with the matching `*_free`. Every fallible call returns a
//! `LipmmStatus`; on failure `lipmm_last_error` gives a message valid until the
//! next call on the same thread. Panics are caught and reported as
//! `LIPMM_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lipmm::alberti::{derivation_apply, effective_speed, grid_line_rep, validate_rep, AlbertiError, AlbertiRep};
use lipmm::field::VectorField;
use lipmm::io::{RepFile, SpaceFile};
use lipmm::lipscape::{biglip_at, liplip_check};
use lipmm::space::{cantor, grid, segment, FiniteMetricSpace, Metric, DEFAULT_TOL};
use lipmm::zahorski::{self, CantorFlatFamily, Schedule, ZahorskiError};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LipmmStatus {
    Ok = 0,
    /// A certificate or validation check did not pass; outputs are still written.
    ValidationFailed = 1,
    BadInput = 2,
    Invariant = 3,
    NullPointer = 4,
    Panic = 5,
}

/// Finite metric measure space.
pub struct LipmmSpace(FiniteMetricSpace);

/// Fragment representation of a measure on a space.
pub struct LipmmRep(AlbertiRep);

/// Outcome of the independent-function construction.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct LipmmIndependence {
    pub sample_points: usize,
    pub kept_points: usize,
    pub max_lipschitz: f64,
    pub lipschitz_bound: f64,
    pub min_variation: f64,
    pub variation_bound: f64,
    pub min_window_ratio: f64,
    pub certified: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(LipmmStatus, String);

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(LipmmStatus::BadInput, e.to_string())
    }
}

fn invariant_alberti(e: AlbertiError) -> Failure {
    let status = if matches!(e, AlbertiError::Overlap { .. }) { LipmmStatus::Invariant } else { LipmmStatus::BadInput };
    Failure(status, e.to_string())
}

fn invariant_zahorski(e: ZahorskiError) -> Failure {
    let status = match e {
        ZahorskiError::Violation { .. } | ZahorskiError::FamilyCertificate { .. } | ZahorskiError::MissingWitness { .. } => {
            LipmmStatus::Invariant
        }
        _ => LipmmStatus::BadInput,
    };
    Failure(status, e.to_string())
}

fn null() -> Failure {
    Failure(LipmmStatus::NullPointer, "null pointer argument".into())
}

fn guard(f: impl FnOnce() -> Result<LipmmStatus, Failure>) -> LipmmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside lipmm".into());
            LipmmStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s).to_str().map_err(|e| Failure(LipmmStatus::BadInput, e.to_string()))
}

unsafe fn ref_arg<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

unsafe fn slice_arg<'a>(p: *const f64, n: usize) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn out_arg<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(null)
}

fn check_len(got: usize, want: usize, what: &str) -> Result<(), Failure> {
    if got != want {
        return Err(Failure(LipmmStatus::BadInput, format!("{what}: {got} values for {want} points")));
    }
    Ok(())
}

/// Message for the last failed call on this thread, or null.
#[no_mangle]
pub extern "C" fn lipmm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn lipmm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn boxed_space(out: *mut *mut LipmmSpace, space: FiniteMetricSpace) -> Result<LipmmStatus, Failure> {
    let out = unsafe { out_arg(out)? };
    *out = Box::into_raw(Box::new(LipmmSpace(space)));
    Ok(LipmmStatus::Ok)
}

/// Space from the JSON point-cloud format `{points:[{id,coords,weight}], metric, matrix?}`.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lipmm_space_from_json(json: *const c_char, tol: f64, out: *mut *mut LipmmSpace) -> LipmmStatus {
    guard(|| {
        let file: SpaceFile = serde_json::from_str(str_arg(json)?)?;
        boxed_space(out, file.into_space(tol)?)
    })
}

/// Uniform `side^dim` grid on the unit cube (`max_norm` selects the max metric).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lipmm_space_grid(dim: usize, side: usize, max_norm: bool, out: *mut *mut LipmmSpace) -> LipmmStatus {
    guard(|| boxed_space(out, grid(dim, side, if max_norm { Metric::Max } else { Metric::Euclidean })?))
}

/// `n` equispaced points on `[0, 1]`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lipmm_space_segment(n: usize, out: *mut *mut LipmmSpace) -> LipmmStatus {
    guard(|| boxed_space(out, segment(n)?))
}

/// Endpoints of the level-`level` middle-thirds intervals.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lipmm_space_cantor(level: u32, out: *mut *mut LipmmSpace) -> LipmmStatus {
    guard(|| boxed_space(out, cantor(level)?))
}

/// # Safety
/// `space` must come from a `lipmm_space_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lipmm_space_free(space: *mut LipmmSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Number of points (0 for a null handle).
///
/// # Safety
/// `space` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lipmm_space_len(space: *const LipmmSpace) -> usize {
    space.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `space` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lipmm_space_dist(space: *const LipmmSpace, i: usize, j: usize, out: *mut f64) -> LipmmStatus {
    guard(|| {
        let s = &ref_arg(space)?.0;
        if i >= s.len() || j >= s.len() {
            return Err(Failure(LipmmStatus::BadInput, format!("index out of range for {} points", s.len())));
        }
        *out_arg(out)? = s.dist(i, j);
        Ok(LipmmStatus::Ok)
    })
}

fn boxed_rep(out: *mut *mut LipmmRep, rep: AlbertiRep) -> Result<LipmmStatus, Failure> {
    let out = unsafe { out_arg(out)? };
    *out = Box::into_raw(Box::new(LipmmRep(rep)));
    Ok(LipmmStatus::Ok)
}

/// Lines of a `side x side` grid along coordinate `axis`.
///
/// # Safety
/// `space` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lipmm_rep_grid_lines(space: *const LipmmSpace, side: usize, axis: usize, out: *mut *mut LipmmRep) -> LipmmStatus {
    guard(|| boxed_rep(out, grid_line_rep(&ref_arg(space)?.0, side, axis).map_err(invariant_alberti)?))
}

/// Representation from JSON `{fragments:[{domain, trace:[ids]}], probs, densities}`.
///
/// # Safety
/// `space` must be a live handle, `json` a NUL-terminated string, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lipmm_rep_from_json(space: *const LipmmSpace, json: *const c_char, out: *mut *mut LipmmRep) -> LipmmStatus {
    guard(|| {
        let s = &ref_arg(space)?.0;
        let file: RepFile = serde_json::from_str(str_arg(json)?)?;
        let rep = file.to_rep(s)?;
        rep.check(s).map_err(invariant_alberti)?;
        boxed_rep(out, rep)
    })
}

/// # Safety
/// `rep` must come from a `lipmm_rep_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lipmm_rep_free(rep: *mut LipmmRep) {
    if !rep.is_null() {
        drop(Box::from_raw(rep));
    }
}

/// Largest pointwise gap between the measure and the one the representation
/// induces; `LIPMM_STATUS_VALIDATION_FAILED` when it exceeds `tol`.
///
/// # Safety
/// Handles must be live and `max_residual` valid.
#[no_mangle]
pub unsafe extern "C" fn lipmm_rep_validate(space: *const LipmmSpace, rep: *const LipmmRep, tol: f64, max_residual: *mut f64) -> LipmmStatus {
    guard(|| {
        let r = validate_rep(&ref_arg(space)?.0, &ref_arg(rep)?.0, tol).map_err(invariant_alberti)?;
        *out_arg(max_residual)? = r.max;
        Ok(if r.pass { LipmmStatus::Ok } else { LipmmStatus::ValidationFailed })
    })
}

/// Derivation of a scalar function (`n` values, one per point) and the effective
/// speed; both outputs hold `n` values, NaN where the measure vanishes.
///
/// # Safety
/// Handles must be live; `f`, `df` and `sigma` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn lipmm_derivation(
    space: *const LipmmSpace,
    rep: *const LipmmRep,
    f: *const f64,
    n: usize,
    df: *mut f64,
    sigma: *mut f64,
) -> LipmmStatus {
    guard(|| {
        let s = &ref_arg(space)?.0;
        let r = &ref_arg(rep)?.0;
        check_len(n, s.len(), "f")?;
        let field = VectorField::scalar(slice_arg(f, n)?)?;
        let d = derivation_apply(s, r, &field, None).map_err(invariant_alberti)?;
        let sp = effective_speed(s, r).map_err(invariant_alberti)?;
        if df.is_null() || sigma.is_null() {
            return Err(null());
        }
        let df = std::slice::from_raw_parts_mut(df, n);
        let sigma = std::slice::from_raw_parts_mut(sigma, n);
        for i in 0..n {
            df[i] = d.scalar(i).unwrap_or(f64::NAN);
            sigma[i] = sp[i].unwrap_or(f64::NAN);
        }
        Ok(LipmmStatus::Ok)
    })
}

/// `max |f(x) - f(y)| / d(x, y)` over `0 < d(x, y) <= r`.
///
/// # Safety
/// `space` must be live, `f` must hold `n` doubles, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lipmm_biglip_at(space: *const LipmmSpace, f: *const f64, n: usize, x: usize, r: f64, out: *mut f64) -> LipmmStatus {
    guard(|| {
        let s = &ref_arg(space)?.0;
        check_len(n, s.len(), "f")?;
        if x >= n {
            return Err(Failure(LipmmStatus::BadInput, format!("point {x} out of range")));
        }
        *out_arg(out)? = biglip_at(s, slice_arg(f, n)?, x, r);
        Ok(LipmmStatus::Ok)
    })
}

/// Ratio of the upper and lower pointwise Lipschitz constants at `window`
/// (`window <= 0` uses the common finest window); `ratios` holds `n` values.
///
/// # Safety
/// `space` must be live; `f` and `ratios` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn lipmm_liplip_ratios(space: *const LipmmSpace, f: *const f64, n: usize, window: f64, ratios: *mut f64) -> LipmmStatus {
    guard(|| {
        let s = &ref_arg(space)?.0;
        check_len(n, s.len(), "f")?;
        let w = (window > 0.0).then_some(window);
        let rep = liplip_check(s, slice_arg(f, n)?, w, None, DEFAULT_TOL)?;
        if ratios.is_null() {
            return Err(null());
        }
        let out = std::slice::from_raw_parts_mut(ratios, n);
        for p in &rep.points {
            out[p.point] = p.ratio;
        }
        Ok(LipmmStatus::Ok)
    })
}

/// Builds `m` independent functions on the Cantor probe sample in exact
/// arithmetic. Parameters are exact rationals as strings (`"1/2"`, `"0.05"`).
///
/// # Safety
/// String arguments must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lipmm_zahorski_build(
    delta0: *const c_char,
    lip: *const c_char,
    alpha: *const c_char,
    m: usize,
    depth: usize,
    tol: f64,
    out: *mut LipmmIndependence,
) -> LipmmStatus {
    guard(|| {
        let delta0 = zahorski::parse_ratio(str_arg(delta0)?).map_err(invariant_zahorski)?;
        let l = zahorski::parse_ratio(str_arg(lip)?).map_err(invariant_zahorski)?;
        let alpha = zahorski::parse_ratio(str_arg(alpha)?).map_err(invariant_zahorski)?;
        let out = out_arg(out)?;
        let family = CantorFlatFamily::new(600, delta0, l).map_err(invariant_zahorski)?;
        let schedule = Schedule::build(&family, &alpha, depth).map_err(invariant_zahorski)?;
        let (points, set) = zahorski::cantor_probe_sample(&schedule, 3, 4).map_err(invariant_zahorski)?;
        let mut weights = vec![0.0; points.len()];
        set.iter().for_each(|&s| weights[s] = 1.0);
        let built = zahorski::build_independent(&points, &set, &weights, &family, m, &alpha, depth, tol).map_err(invariant_zahorski)?;
        let report = zahorski::liplip_violation_report(&points, &built.kept, &built.phi(), &built.schedule, tol).map_err(invariant_zahorski)?;
        let c = &built.certificate;
        *out = LipmmIndependence {
            sample_points: points.len(),
            kept_points: built.kept.len(),
            max_lipschitz: c.psi_lipschitz.iter().copied().fold(0.0, f64::max),
            lipschitz_bound: c.lip_bound,
            min_variation: c.min_variation,
            variation_bound: c.lower_bound - c.tail,
            min_window_ratio: report.rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min),
            certified: c.lip_ok && c.lower_ok && report.all_ok,
        };
        Ok(if out.certified { LipmmStatus::Ok } else { LipmmStatus::ValidationFailed })
    })
}
