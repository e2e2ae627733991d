//! C ABI over the diffusion engine: opaque dataset handles, status codes,
//! and a thread-local last-error message. The generated header lands in
//! `include/rfhnd.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::sync::Arc;

use rfhnd::curvature::{curvature, CurvatureConfig, CurvatureKind};
use rfhnd::diffusion::{diffuse, DiffusionConfig, KprimeProvider};
use rfhnd::flow::{attribute_weight, dirichlet_energy_raw, WeightRuleConfig};
use rfhnd::hypergraph::{Dataset, EdgeWeights};
use rfhnd::synthgen::{generate_sbm, SbmConfig};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum RfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    IoError = 3,
    NumericError = 4,
}

/// Opaque dataset handle: hypergraph plus optional features/labels/weights.
pub struct RfDataset {
    inner: Dataset,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl std::fmt::Display) {
    let text = CString::new(message.to_string()).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
}

fn fail(status: RfStatus, message: impl std::fmt::Display) -> RfStatus {
    set_error(message);
    status
}

fn classify(err: &rfhnd::Error) -> RfStatus {
    match err {
        rfhnd::Error::Io { .. } | rfhnd::Error::Parse { .. } => RfStatus::IoError,
        rfhnd::Error::NonFinite { .. } | rfhnd::Error::Diverged { .. } => RfStatus::NumericError,
        _ => RfStatus::InvalidArgument,
    }
}

/// Copy the last error message into `buf` (truncated to `cap - 1` bytes,
/// always NUL-terminated when cap > 0). Returns the full message length.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be null with cap = 0.
#[no_mangle]
pub unsafe extern "C" fn rf_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Load a dataset document (the JSON format written by the CLI).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_dataset_load(
    path: *const c_char,
    out: *mut *mut RfDataset,
) -> RfStatus {
    if path.is_null() || out.is_null() {
        return fail(RfStatus::NullPointer, "null pointer argument");
    }
    let path = match CStr::from_ptr(path).to_str() {
        Ok(p) => p,
        Err(_) => return fail(RfStatus::InvalidArgument, "path is not valid UTF-8"),
    };
    match Dataset::load(path) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(RfDataset { inner }));
            RfStatus::Ok
        }
        Err(e) => fail(classify(&e), e),
    }
}

/// Generate a two-class contextual SBM dataset.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_dataset_generate_sbm(
    nodes_per_class: usize,
    num_edges: usize,
    edge_size: usize,
    alpha: usize,
    feature_dim: usize,
    feature_std: f64,
    mean_separation: f64,
    seed: u64,
    out: *mut *mut RfDataset,
) -> RfStatus {
    if out.is_null() {
        return fail(RfStatus::NullPointer, "null pointer argument");
    }
    let cfg = SbmConfig {
        nodes_per_class,
        classes: 2,
        num_edges,
        edge_size,
        alpha,
        feature_std,
        feature_dim,
        mean_separation,
        seed,
    };
    match generate_sbm(&cfg) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(RfDataset { inner }));
            RfStatus::Ok
        }
        Err(e) => fail(classify(&e), e),
    }
}

/// Save the dataset to `path` (features go to a sidecar CSV).
///
/// # Safety
/// `ds` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn rf_dataset_save(ds: *const RfDataset, path: *const c_char) -> RfStatus {
    if ds.is_null() || path.is_null() {
        return fail(RfStatus::NullPointer, "null pointer argument");
    }
    let path = match CStr::from_ptr(path).to_str() {
        Ok(p) => p,
        Err(_) => return fail(RfStatus::InvalidArgument, "path is not valid UTF-8"),
    };
    match (*ds).inner.save(path) {
        Ok(()) => RfStatus::Ok,
        Err(e) => fail(classify(&e), e),
    }
}

/// Node count, hyperedge count, and feature dimension (0 when absent).
///
/// # Safety
/// All out-pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn rf_dataset_counts(
    ds: *const RfDataset,
    n: *mut usize,
    m: *mut usize,
    d: *mut usize,
) -> RfStatus {
    if ds.is_null() {
        return fail(RfStatus::NullPointer, "null dataset");
    }
    let inner = &(*ds).inner;
    if !n.is_null() {
        *n = inner.hypergraph.num_nodes();
    }
    if !m.is_null() {
        *m = inner.hypergraph.num_edges();
    }
    if !d.is_null() {
        *d = inner.features.as_ref().map_or(0, |f| f.d);
    }
    RfStatus::Ok
}

/// Destroy a dataset handle.
///
/// # Safety
/// `ds` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rf_dataset_free(ds: *mut RfDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

fn weights_for(ds: &Dataset, use_attribute: bool, epsilon: f64) -> Result<EdgeWeights, rfhnd::Error> {
    if use_attribute {
        let features = ds.features.clone().ok_or(rfhnd::Error::InvalidConfig {
            message: "dataset carries no features".to_string(),
        })?;
        let x = features.into_unit()?;
        attribute_weight(&ds.hypergraph, &x, &WeightRuleConfig::with_epsilon(epsilon))
    } else {
        Ok(ds
            .weights
            .clone()
            .unwrap_or_else(|| EdgeWeights::uniform(ds.hypergraph.num_edges())))
    }
}

/// Per-edge curvature. `kind`: 0 = Forman, 1 = Ollivier. `out_kappa` must
/// hold one f64 per hyperedge.
///
/// # Safety
/// `out_kappa` must point to at least m writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rf_curvature(
    ds: *const RfDataset,
    kind: u32,
    use_attribute_weights: bool,
    epsilon: f64,
    out_kappa: *mut f64,
) -> RfStatus {
    if ds.is_null() || out_kappa.is_null() {
        return fail(RfStatus::NullPointer, "null pointer argument");
    }
    let inner = &(*ds).inner;
    let kind = match kind {
        0 => CurvatureKind::Forman,
        1 => CurvatureKind::Ollivier,
        other => return fail(RfStatus::InvalidArgument, format!("unknown curvature kind {other}")),
    };
    let w = match weights_for(inner, use_attribute_weights, epsilon) {
        Ok(w) => w,
        Err(e) => return fail(classify(&e), e),
    };
    match curvature(&inner.hypergraph, &w, kind, &CurvatureConfig::default()) {
        Ok(k) => {
            std::ptr::copy_nonoverlapping(k.kappa.as_ptr(), out_kappa, k.kappa.len());
            RfStatus::Ok
        }
        Err(e) => fail(classify(&e), e),
    }
}

/// Attribute weights of the dataset features. `out_w` must hold one f64 per
/// hyperedge.
///
/// # Safety
/// `out_w` must point to at least m writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rf_attribute_weights(
    ds: *const RfDataset,
    epsilon: f64,
    out_w: *mut f64,
) -> RfStatus {
    if ds.is_null() || out_w.is_null() {
        return fail(RfStatus::NullPointer, "null pointer argument");
    }
    match weights_for(&(*ds).inner, true, epsilon) {
        Ok(w) => {
            std::ptr::copy_nonoverlapping(w.as_slice().as_ptr(), out_w, w.len());
            RfStatus::Ok
        }
        Err(e) => fail(classify(&e), e),
    }
}

/// Dirichlet energy of the dataset's raw features.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_dirichlet_energy(ds: *const RfDataset, out: *mut f64) -> RfStatus {
    if ds.is_null() || out.is_null() {
        return fail(RfStatus::NullPointer, "null pointer argument");
    }
    let inner = &(*ds).inner;
    let Some(features) = inner.features.as_ref() else {
        return fail(RfStatus::InvalidArgument, "dataset carries no features");
    };
    *out = dirichlet_energy_raw(&inner.hypergraph, &features.data, features.n, features.d);
    RfStatus::Ok
}

/// Run the analytic curvature-guided diffusion for `steps` steps and write
/// the Dirichlet-energy trajectory (steps + 1 values, initial state first).
///
/// # Safety
/// `out_energies` must point to at least steps + 1 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rf_diffuse_analytic(
    ds: *const RfDataset,
    kind: u32,
    tau: f64,
    steps: usize,
    use_cosine: bool,
    epsilon: f64,
    out_energies: *mut f64,
) -> RfStatus {
    if ds.is_null() || out_energies.is_null() {
        return fail(RfStatus::NullPointer, "null pointer argument");
    }
    if tau <= 0.0 {
        return fail(RfStatus::InvalidArgument, "tau must be positive");
    }
    let inner = &(*ds).inner;
    let kind = match kind {
        0 => CurvatureKind::Forman,
        1 => CurvatureKind::Ollivier,
        other => return fail(RfStatus::InvalidArgument, format!("unknown curvature kind {other}")),
    };
    let Some(features) = inner.features.clone() else {
        return fail(RfStatus::InvalidArgument, "dataset carries no features");
    };
    let x0 = match features.into_unit() {
        Ok(x) => x,
        Err(e) => return fail(classify(&e), e),
    };
    let cfg = DiffusionConfig { tau, steps, use_cosine, force: true, ..Default::default() };
    let provider = KprimeProvider::Analytic {
        kind,
        curv: CurvatureConfig::default(),
        weight: WeightRuleConfig::with_epsilon(epsilon),
    };
    match diffuse(&inner.hypergraph, &x0, &cfg, provider, &[]) {
        Ok(trace) => {
            std::ptr::copy_nonoverlapping(
                trace.energies.as_ptr(),
                out_energies,
                trace.energies.len(),
            );
            RfStatus::Ok
        }
        Err(e) => fail(classify(&e), e),
    }
}

/// Hyperedge members of edge `e` copied into `out` (must hold the edge
/// size); writes the size through `size_out` when non-null.
///
/// # Safety
/// `out` must point to enough writable u32 slots for the edge.
#[no_mangle]
pub unsafe extern "C" fn rf_edge_members(
    ds: *const RfDataset,
    e: usize,
    out: *mut u32,
    size_out: *mut usize,
) -> RfStatus {
    if ds.is_null() {
        return fail(RfStatus::NullPointer, "null dataset");
    }
    let h = &(*ds).inner.hypergraph;
    if e >= h.num_edges() {
        return fail(RfStatus::InvalidArgument, format!("edge {e} out of range"));
    }
    let members = h.edge(e);
    if !size_out.is_null() {
        *size_out = members.len();
    }
    if !out.is_null() {
        std::ptr::copy_nonoverlapping(members.as_ptr(), out, members.len());
    }
    RfStatus::Ok
}

// Keep the Arc import alive for the handle internals without exposing it in
// the header.
#[allow(dead_code)]
fn hold(h: &Arc<rfhnd::hypergraph::Hypergraph>) -> usize {
    h.num_nodes()
}
