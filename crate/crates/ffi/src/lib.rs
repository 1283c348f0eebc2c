//! C interface to `thdkit`.
//!
//! Every fallible function returns a [`ThdkitStatus`]; on failure the
//! message is available from [`thdkit_last_error`] on the same thread.
//! Handles are opaque and must be released with their `_free` function.
//! Strings returned through `char **` are owned by the caller and released
//! with [`thdkit_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use thdkit::hierarchy::{linkage_thd, LinkageMode};
use thdkit::mapper::{interval_cover, mapper_graph_intervals, FilterAssignment, MapperGraph};
use thdkit::metric::{offset_components, TriangleCheck};
use thdkit::multiscale::{multiscale_thd, Refinement, TowerConfig};
use thdkit::thd::ThdPoset;
use thdkit::{Error, PointCloud};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThdkitStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidInput = 3,
    Io = 4,
    Verification = 5,
    Panic = 6,
}

/// Linkage criterion for [`thdkit_linkage`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThdkitLinkage {
    Single = 0,
    Complete = 1,
}

/// A finite metric sample.
pub struct ThdkitCloud(PointCloud);

/// A topological hierarchical decomposition.
pub struct ThdkitThd(ThdPoset);

/// A mapper graph.
pub struct ThdkitMapper(MapperGraph);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ThdkitStatus {
    match e {
        Error::Io(_) => ThdkitStatus::Io,
        Error::Parse(_) | Error::InvalidMetric(_) | Error::EmptyCloud => ThdkitStatus::InvalidInput,
        _ => ThdkitStatus::InvalidArgument,
    }
}

fn guard<F: FnOnce() -> Result<(), (ThdkitStatus, String)>>(f: F) -> ThdkitStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ThdkitStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            ThdkitStatus::Panic
        }
    }
}

fn lib<T>(r: thdkit::Result<T>) -> Result<T, (ThdkitStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (ThdkitStatus, String) {
    (ThdkitStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (ThdkitStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (ThdkitStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (ThdkitStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (ThdkitStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), (ThdkitStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, text: String) -> Result<(), (ThdkitStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    let c = CString::new(text).map_err(|_| (ThdkitStatus::Panic, "string with nul byte".to_string()))?;
    *out = c.into_raw();
    Ok(())
}

fn json_text(value: &serde_json::Value) -> Result<String, (ThdkitStatus, String)> {
    lib(thdkit::io::to_json_string(value))
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn thdkit_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn thdkit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn thdkit_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `n` points of dimension `dim`, row-major.
#[no_mangle]
pub unsafe extern "C" fn thdkit_cloud_from_points(
    coords: *const f64,
    n: usize,
    dim: usize,
    out: *mut *mut ThdkitCloud,
) -> ThdkitStatus {
    guard(|| {
        let flat = slice(coords, n.checked_mul(dim).ok_or_else(|| null("coords"))?, "coords")?;
        let points = if dim == 0 {
            vec![Vec::new(); n]
        } else {
            flat.chunks(dim).map(<[f64]>::to_vec).collect()
        };
        let cloud = lib(PointCloud::from_points(points))?;
        put(out, ThdkitCloud(cloud))
    })
}

/// An `n` by `n` row-major distance matrix. `check_triangle` nonzero
/// validates the triangle inequality.
#[no_mangle]
pub unsafe extern "C" fn thdkit_cloud_from_distances(
    matrix: *const f64,
    n: usize,
    check_triangle: c_int,
    out: *mut *mut ThdkitCloud,
) -> ThdkitStatus {
    guard(|| {
        let flat = slice(matrix, n.checked_mul(n).ok_or_else(|| null("matrix"))?, "matrix")?;
        let rows = if n == 0 { Vec::new() } else { flat.chunks(n).map(<[f64]>::to_vec).collect() };
        let check = if check_triangle != 0 { TriangleCheck::Always } else { TriangleCheck::Never };
        let cloud = lib(PointCloud::from_distances(rows, check))?;
        put(out, ThdkitCloud(cloud))
    })
}

/// Points from a CSV file.
#[no_mangle]
pub unsafe extern "C" fn thdkit_cloud_from_csv(path: *const c_char, out: *mut *mut ThdkitCloud) -> ThdkitStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        let cloud = lib(thdkit::io::read_points_csv(Path::new(path)))?;
        put(out, ThdkitCloud(cloud))
    })
}

#[no_mangle]
pub unsafe extern "C" fn thdkit_cloud_len(cloud: *const ThdkitCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn thdkit_cloud_free(cloud: *mut ThdkitCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

/// Components of the `eps`-offset as a JSON array of index arrays.
#[no_mangle]
pub unsafe extern "C" fn thdkit_offset_components_json(
    cloud: *const ThdkitCloud,
    eps: f64,
    out_json: *mut *mut c_char,
) -> ThdkitStatus {
    guard(|| {
        let cloud = &as_ref(cloud, "cloud")?.0;
        let partition = lib(offset_components(cloud, &cloud.all(), eps))?;
        let value = serde_json::to_value(partition).map_err(|e| (ThdkitStatus::Panic, e.to_string()))?;
        put_string(out_json, json_text(&value)?)
    })
}

#[no_mangle]
pub unsafe extern "C" fn thdkit_linkage(
    cloud: *const ThdkitCloud,
    mode: ThdkitLinkage,
    out: *mut *mut ThdkitThd,
) -> ThdkitStatus {
    guard(|| {
        let cloud = &as_ref(cloud, "cloud")?.0;
        let mode = match mode {
            ThdkitLinkage::Single => LinkageMode::Single,
            ThdkitLinkage::Complete => LinkageMode::Complete,
        };
        let tree = lib(linkage_thd(cloud, mode))?;
        put(out, ThdkitThd(tree.thd))
    })
}

/// Multiscale mapper THD for per-point filter values and a tower
/// configuration in JSON.
#[no_mangle]
pub unsafe extern "C" fn thdkit_multiscale(
    cloud: *const ThdkitCloud,
    filter: *const f64,
    n: usize,
    tower_json: *const c_char,
    eps: f64,
    out: *mut *mut ThdkitThd,
) -> ThdkitStatus {
    guard(|| {
        let cloud = &as_ref(cloud, "cloud")?.0;
        let filter = lib(FilterAssignment::new(slice(filter, n, "filter")?.to_vec()))?;
        lib(filter.check_total(cloud))?;
        let config: TowerConfig = serde_json::from_str(c_str(tower_json, "tower_json")?)
            .map_err(|e| (ThdkitStatus::InvalidInput, format!("tower config: {e}")))?;
        let tower = lib(Refinement::from_interval_tower(&filter, &config))?;
        let thd = lib(multiscale_thd(cloud, &tower, eps))?;
        put(out, ThdkitThd(thd))
    })
}

#[no_mangle]
pub unsafe extern "C" fn thdkit_thd_node_count(thd: *const ThdkitThd) -> usize {
    thd.as_ref().map_or(0, |t| t.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn thdkit_thd_edge_count(thd: *const ThdkitThd) -> usize {
    thd.as_ref().map_or(0, |t| t.0.edges.len())
}

#[no_mangle]
pub unsafe extern "C" fn thdkit_thd_to_json(thd: *const ThdkitThd, out_json: *mut *mut c_char) -> ThdkitStatus {
    guard(|| {
        let thd = &as_ref(thd, "thd")?.0;
        put_string(out_json, json_text(&thd.to_json_value())?)
    })
}

/// Newick text with point indices as leaf names; dendrograms only.
#[no_mangle]
pub unsafe extern "C" fn thdkit_thd_to_newick(thd: *const ThdkitThd, out: *mut *mut c_char) -> ThdkitStatus {
    guard(|| {
        let thd = &as_ref(thd, "thd")?.0;
        put_string(out, lib(thd.to_newick(|i| i.to_string()))?)
    })
}

#[no_mangle]
pub unsafe extern "C" fn thdkit_thd_free(thd: *mut ThdkitThd) {
    if !thd.is_null() {
        drop(Box::from_raw(thd));
    }
}

/// Mapper graph of per-point filter values over `intervals` overlapping
/// intervals spanning the filter range.
#[no_mangle]
pub unsafe extern "C" fn thdkit_mapper(
    cloud: *const ThdkitCloud,
    filter: *const f64,
    n: usize,
    intervals: usize,
    overlap: f64,
    eps: f64,
    out: *mut *mut ThdkitMapper,
) -> ThdkitStatus {
    guard(|| {
        let cloud = &as_ref(cloud, "cloud")?.0;
        let filter = lib(FilterAssignment::new(slice(filter, n, "filter")?.to_vec()))?;
        lib(filter.check_total(cloud))?;
        let (lo, hi) = filter
            .range()
            .ok_or_else(|| (ThdkitStatus::InvalidArgument, "empty filter".to_string()))?;
        let cover = lib(interval_cover(lo, hi, intervals, overlap))?;
        let graph = lib(mapper_graph_intervals(cloud, &filter, &cover, eps, 1))?;
        put(out, ThdkitMapper(graph))
    })
}

#[no_mangle]
pub unsafe extern "C" fn thdkit_mapper_vertex_count(graph: *const ThdkitMapper) -> usize {
    graph.as_ref().map_or(0, |g| g.0.vertices.len())
}

#[no_mangle]
pub unsafe extern "C" fn thdkit_mapper_edge_count(graph: *const ThdkitMapper) -> usize {
    graph.as_ref().map_or(0, |g| g.0.edges.len())
}

#[no_mangle]
pub unsafe extern "C" fn thdkit_mapper_to_json(graph: *const ThdkitMapper, out_json: *mut *mut c_char) -> ThdkitStatus {
    guard(|| {
        let graph = &as_ref(graph, "graph")?.0;
        put_string(out_json, json_text(&graph.to_json_value())?)
    })
}

#[no_mangle]
pub unsafe extern "C" fn thdkit_mapper_free(graph: *mut ThdkitMapper) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Runs the verification suite. The report is written to `out_json` when
/// it is not null; the status is `Verification` when a check failed.
#[no_mangle]
pub unsafe extern "C" fn thdkit_verify(seed: u64, trials: usize, out_json: *mut *mut c_char) -> ThdkitStatus {
    guard(|| {
        let report = lib(thdkit::suite::run_suite(seed, trials))?;
        if !out_json.is_null() {
            let value = serde_json::to_value(&report).map_err(|e| (ThdkitStatus::Panic, e.to_string()))?;
            put_string(out_json, json_text(&value)?)?;
        }
        if report.passed {
            Ok(())
        } else {
            Err((ThdkitStatus::Verification, "verification failed".into()))
        }
    })
}
