//! C interface to `convexseg`.
//!
//! Fields and segmentation results are opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible function
//! returns a [`CsStatus`]; on failure the message is available from
//! [`cs_last_error_message`] on the same thread. Panics never cross the
//! boundary and are reported as [`CsStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use convexseg::{
    enforce_convex_prior, is_convex_region, laplacian, project_convex, reinitialize, segment_from, Error, InitSpec,
    Model, PriorConfig, ProjectionConfig, RegionMask, ScalarField, SegmentationConfig, SegmentationResult, SweepOrder,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsStatus {
    Ok = 0,
    InvalidInput = 1,
    InvalidParameter = 2,
    RegionCollapse = 3,
    ConvexityViolation = 4,
    Io = 5,
    Parse = 6,
    NullPointer = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsModel {
    ChanVese = 0,
    EdgeOnly = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsInitKind {
    /// `init = {cx, cy, r, unused}`
    Circle = 0,
    /// `init = {x0, y0, x1, y1}`
    Rectangle = 1,
}

/// Opaque 2-D scalar field, row-major.
pub struct CsField(ScalarField);

/// Opaque segmentation result.
pub struct CsSegmentation(SegmentationResult);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsSegmentConfig {
    pub model: CsModel,
    pub convex_prior: bool,
    pub mu: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub heaviside_eps: f64,
    pub edge_scale: f64,
    pub dt: f64,
    pub outer_max: usize,
    pub stop_tol: f64,
    pub stop_patience: usize,
    pub prior_eps: f64,
    pub prior_n_max: usize,
    pub m_max: usize,
    pub active_tol: f64,
    pub init_kind: CsInitKind,
    pub init: [f64; 4],
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidInput(_) => CsStatus::InvalidInput,
            Error::InvalidParameter(_) => CsStatus::InvalidParameter,
            Error::NoInterface | Error::RegionCollapse { .. } => CsStatus::RegionCollapse,
            Error::ConvexityViolation { .. } => CsStatus::ConvexityViolation,
            Error::UnsupportedDepth { .. } | Error::Io { .. } | Error::Image { .. } => CsStatus::Io,
            Error::Parse(_) => CsStatus::Parse,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn run(f: impl FnOnce() -> Result<(), Failure>) -> CsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            CsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn field_ref<'a>(p: *const CsField, what: &str) -> Result<&'a ScalarField, Failure> {
    p.as_ref().map(|f| &f.0).ok_or_else(|| null(what))
}

unsafe fn put_field(out: *mut *mut CsField, field: ScalarField) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(CsField(field)));
    Ok(())
}

fn non_negative(value: f64, name: &str) -> Result<f64, Failure> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Failure(
            CsStatus::InvalidParameter,
            format!("{name} must be finite and >= 0"),
        ))
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cs_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version contains NUL"),
    };
    VERSION.as_ptr()
}

/// Message of the last failure on this thread, or NULL if none. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copy `width * height` row-major values into a new field.
///
/// # Safety
/// `values` must point to `width * height` readable doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn cs_field_new(
    width: usize,
    height: usize,
    values: *const f64,
    out: *mut *mut CsField,
) -> CsStatus {
    run(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        let n = width
            .checked_mul(height)
            .ok_or_else(|| Failure(CsStatus::InvalidInput, "dimensions overflow".into()))?;
        let data = std::slice::from_raw_parts(values, n).to_vec();
        put_field(out, ScalarField::new(width, height, data)?)
    })
}

/// # Safety
/// `field` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cs_field_free(field: *mut CsField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Width of the field, 0 for NULL.
///
/// # Safety
/// `field` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cs_field_width(field: *const CsField) -> usize {
    field.as_ref().map_or(0, |f| f.0.width())
}

/// Height of the field, 0 for NULL.
///
/// # Safety
/// `field` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cs_field_height(field: *const CsField) -> usize {
    field.as_ref().map_or(0, |f| f.0.height())
}

/// Copy the row-major values into `out`, which holds `len` doubles; `len`
/// must equal `width * height`.
///
/// # Safety
/// `field` must be a live handle and `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cs_field_copy_values(field: *const CsField, out: *mut f64, len: usize) -> CsStatus {
    run(|| {
        let f = field_ref(field, "field")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if len != f.len() {
            return Err(Failure(
                CsStatus::InvalidInput,
                format!("buffer holds {len} values, field has {}", f.len()),
            ));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(f.values());
        Ok(())
    })
}

/// Five-point Laplacian with replicated borders.
///
/// # Safety
/// `field` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_laplacian(field: *const CsField, out: *mut *mut CsField) -> CsStatus {
    run(|| put_field(out, laplacian(field_ref(field, "field")?)))
}

/// Signed distance function with the same zero level set.
///
/// # Safety
/// `field` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_reinitialize(field: *const CsField, out: *mut *mut CsField) -> CsStatus {
    run(|| put_field(out, reinitialize(field_ref(field, "field")?)?))
}

/// Project onto fields with a non-negative interior Laplacian.
/// `iterations` may be NULL.
///
/// # Safety
/// `field` must be a live handle; `out` must be writable; `iterations` must
/// be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn cs_project_convex(
    field: *const CsField,
    m_max: usize,
    active_tol: f64,
    out: *mut *mut CsField,
    iterations: *mut usize,
) -> CsStatus {
    run(|| {
        let cfg = ProjectionConfig {
            m_max,
            active_tol: non_negative(active_tol, "active_tol")?,
            sweep: SweepOrder::Jacobi,
        };
        let p = project_convex(field_ref(field, "field")?, &cfg)?;
        if let Some(it) = iterations.as_mut() {
            *it = p.iterations;
        }
        put_field(out, p.field)
    })
}

/// Alternate reinitialization and projection until the field is a convex
/// signed distance function. `outer_iterations` may be NULL.
///
/// # Safety
/// `field` must be a live handle; `out` must be writable;
/// `outer_iterations` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn cs_enforce_convex_prior(
    field: *const CsField,
    eps: f64,
    n_max: usize,
    m_max: usize,
    out: *mut *mut CsField,
    outer_iterations: *mut usize,
) -> CsStatus {
    run(|| {
        let cfg = PriorConfig {
            eps,
            n_max,
            projection: ProjectionConfig {
                m_max,
                ..ProjectionConfig::default()
            },
        };
        let (phi, diag) = enforce_convex_prior(field_ref(field, "field")?, &cfg)?;
        if let Some(n) = outer_iterations.as_mut() {
            *n = diag.outer_iterations;
        }
        put_field(out, phi)
    })
}

/// Whether `{phi < 0}` is convex up to `slack` pixels.
///
/// # Safety
/// `phi` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_is_convex_region(phi: *const CsField, slack: f64, out: *mut bool) -> CsStatus {
    run(|| {
        let region = RegionMask::from_sublevel(field_ref(phi, "phi")?);
        let convex = is_convex_region(&region, slack)?;
        *out.as_mut().ok_or_else(|| null("out"))? = convex;
        Ok(())
    })
}

/// Library defaults for `model`, with a zero-radius circle as the initial
/// curve; set `init_kind` and `init` before use.
#[no_mangle]
pub extern "C" fn cs_segment_config_default(model: CsModel) -> CsSegmentConfig {
    let m = match model {
        CsModel::ChanVese => Model::ChanVese,
        CsModel::EdgeOnly => Model::EdgeOnly,
    };
    let c = SegmentationConfig::new(
        m,
        InitSpec::Circle {
            cx: 0.0,
            cy: 0.0,
            r: 0.0,
        },
    );
    CsSegmentConfig {
        model,
        convex_prior: c.convex_prior,
        mu: c.energy.mu,
        lambda1: c.energy.lambda1,
        lambda2: c.energy.lambda2,
        heaviside_eps: c.energy.heaviside_eps,
        edge_scale: c.energy.edge_scale,
        dt: c.dt,
        outer_max: c.outer_max,
        stop_tol: c.stop_tol,
        stop_patience: c.stop_patience,
        prior_eps: c.prior.eps,
        prior_n_max: c.prior.n_max,
        m_max: c.prior.projection.m_max,
        active_tol: c.prior.projection.active_tol,
        init_kind: CsInitKind::Circle,
        init: [0.0; 4],
    }
}

fn to_config(c: &CsSegmentConfig) -> SegmentationConfig {
    let init = match c.init_kind {
        CsInitKind::Circle => InitSpec::Circle {
            cx: c.init[0],
            cy: c.init[1],
            r: c.init[2],
        },
        CsInitKind::Rectangle => InitSpec::Rectangle {
            x0: c.init[0],
            y0: c.init[1],
            x1: c.init[2],
            y1: c.init[3],
        },
    };
    let model = match c.model {
        CsModel::ChanVese => Model::ChanVese,
        CsModel::EdgeOnly => Model::EdgeOnly,
    };
    let mut cfg = SegmentationConfig::new(model, init).with_prior(c.convex_prior);
    cfg.energy.mu = c.mu;
    cfg.energy.lambda1 = c.lambda1;
    cfg.energy.lambda2 = c.lambda2;
    cfg.energy.heaviside_eps = c.heaviside_eps;
    cfg.energy.edge_scale = c.edge_scale;
    cfg.dt = c.dt;
    cfg.outer_max = c.outer_max;
    cfg.stop_tol = c.stop_tol;
    cfg.stop_patience = c.stop_patience;
    cfg.prior.eps = c.prior_eps;
    cfg.prior.n_max = c.prior_n_max;
    cfg.prior.projection.m_max = c.m_max;
    cfg.prior.projection.active_tol = c.active_tol;
    cfg
}

/// Segment `image` (values in [0, 1]). When `initial_phi` is non-NULL it is
/// used as the starting level set and the config's initial curve is ignored.
///
/// # Safety
/// `image` must be a live handle, `config` readable, `initial_phi` NULL or a
/// live handle, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cs_segment(
    image: *const CsField,
    config: *const CsSegmentConfig,
    initial_phi: *const CsField,
    out: *mut *mut CsSegmentation,
) -> CsStatus {
    run(|| {
        let image = field_ref(image, "image")?;
        let cfg = to_config(config.as_ref().ok_or_else(|| null("config"))?);
        if out.is_null() {
            return Err(null("out"));
        }
        let phi0 = match initial_phi.as_ref() {
            Some(f) => f.0.clone(),
            None => convexseg::init_levelset(&cfg.init, image.width(), image.height())?,
        };
        let result = segment_from(image, phi0, &cfg)?;
        *out = Box::into_raw(Box::new(CsSegmentation(result)));
        Ok(())
    })
}

/// # Safety
/// `seg` must be NULL or a handle from [`cs_segment`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cs_segmentation_free(seg: *mut CsSegmentation) {
    if !seg.is_null() {
        drop(Box::from_raw(seg));
    }
}

/// Copy of the final level-set function.
///
/// # Safety
/// `seg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_segmentation_phi(seg: *const CsSegmentation, out: *mut *mut CsField) -> CsStatus {
    run(|| {
        let s = seg.as_ref().ok_or_else(|| null("seg"))?;
        put_field(out, s.0.phi_final.clone())
    })
}

/// Write the region `{phi < 0}` as 0/1 bytes, row-major; `len` must equal
/// `width * height`.
///
/// # Safety
/// `seg` must be a live handle; `out` must have room for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn cs_segmentation_region(seg: *const CsSegmentation, out: *mut u8, len: usize) -> CsStatus {
    run(|| {
        let s = seg.as_ref().ok_or_else(|| null("seg"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mask = s.0.region.as_slice();
        if len != mask.len() {
            return Err(Failure(
                CsStatus::InvalidInput,
                format!("buffer holds {len} bytes, region has {}", mask.len()),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(out, len);
        for (d, &m) in dst.iter_mut().zip(mask) {
            *d = m as u8;
        }
        Ok(())
    })
}

/// Outer iterations performed, 0 for NULL.
///
/// # Safety
/// `seg` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cs_segmentation_outer_iterations(seg: *const CsSegmentation) -> usize {
    seg.as_ref().map_or(0, |s| s.0.outer_iterations)
}

/// Whether the stopping rule fired before the iteration cap.
///
/// # Safety
/// `seg` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cs_segmentation_converged(seg: *const CsSegmentation) -> bool {
    seg.as_ref().is_some_and(|s| s.0.converged)
}

/// Background (`c1`) and object (`c2`) means. Fails with
/// `CS_STATUS_INVALID_INPUT` for the edge model, which has none.
///
/// # Safety
/// `seg` must be a live handle; `c1` and `c2` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_segmentation_means(seg: *const CsSegmentation, c1: *mut f64, c2: *mut f64) -> CsStatus {
    run(|| {
        let s = seg.as_ref().ok_or_else(|| null("seg"))?;
        let (a, b) =
            s.0.means
                .ok_or_else(|| Failure(CsStatus::InvalidInput, "edge model has no region means".into()))?;
        *c1.as_mut().ok_or_else(|| null("c1"))? = a;
        *c2.as_mut().ok_or_else(|| null("c2"))? = b;
        Ok(())
    })
}

/// Length of the energy trace (one value per outer iteration).
///
/// # Safety
/// `seg` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cs_segmentation_trace_len(seg: *const CsSegmentation) -> usize {
    seg.as_ref().map_or(0, |s| s.0.trace.len())
}

/// Copy the energy trace; `len` must equal [`cs_segmentation_trace_len`].
///
/// # Safety
/// `seg` must be a live handle; `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cs_segmentation_energy(seg: *const CsSegmentation, out: *mut f64, len: usize) -> CsStatus {
    run(|| {
        let s = seg.as_ref().ok_or_else(|| null("seg"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let e = s.0.energy_trace();
        if len != e.len() {
            return Err(Failure(
                CsStatus::InvalidInput,
                format!("buffer holds {len} values, trace has {}", e.len()),
            ));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&e);
        Ok(())
    })
}
