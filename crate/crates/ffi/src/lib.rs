//! C ABI over `graphnotice`.
//!
//! Graphs and traces cross the boundary as opaque handles owned by the
//! caller and released with the matching `*_free`. Every fallible function
//! returns a [`GnStatus`]; on failure [`gn_last_error_message`] describes the
//! most recent error on the calling thread. Panics are caught and reported as
//! [`GnStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use graphnotice::attacks::{apply_trace, dice_attack, random_attack, structack, AttackBudget, AttackTrace, OpKind};
use graphnotice::measures::{ks_two_sample, MeasureKind, NoticeabilityReport};
use graphnotice::noticeability::{auroc, hidenseek, MeasureHandle, DEFAULT_AUROC_THRESHOLD};
use graphnotice::scorers::{LeoConfig, ScorerSpec};
use graphnotice::stats;
use graphnotice::tensor::Matrix;
use graphnotice::{AttackPair, DeterministicRng, Error, Graph};

/// Result codes. `Ok` is zero; the others mirror the library's error kinds.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidGraph = 2,
    Shape = 3,
    EmptySample = 4,
    Degenerate = 5,
    Infeasible = 6,
    NotApplicable = 7,
    Numerical = 8,
    Divergence = 9,
    OutOfRange = 10,
    Parse = 11,
    Config = 12,
    Usage = 13,
    Io = 14,
    InvalidUtf8 = 15,
    Panic = 16,
}

/// Kind of a single trace operation.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GnOpKind {
    Insert = 0,
    Delete = 1,
}

/// Noticeability report. `has_statistic`/`has_p_value` are 0 when the
/// corresponding value is undefined; `noticeable` is -1 when undefined.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnReport {
    pub has_statistic: i32,
    pub statistic: f64,
    pub has_p_value: i32,
    pub p_value: f64,
    pub threshold: f64,
    pub noticeable: i32,
}

/// Opaque graph handle.
pub struct GnGraph {
    inner: Graph,
}

/// Opaque attack trace handle.
pub struct GnTrace {
    inner: AttackTrace,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> GnStatus {
    match e {
        Error::InvalidGraph(_) => GnStatus::InvalidGraph,
        Error::Shape(_) => GnStatus::Shape,
        Error::EmptySample(_) => GnStatus::EmptySample,
        Error::Degenerate(_) => GnStatus::Degenerate,
        Error::Infeasible(_) => GnStatus::Infeasible,
        Error::NotApplicable(_) => GnStatus::NotApplicable,
        Error::Numerical(_) => GnStatus::Numerical,
        Error::Divergence(_) => GnStatus::Divergence,
        Error::OutOfRange(_) => GnStatus::OutOfRange,
        Error::Parse { .. } => GnStatus::Parse,
        Error::Config(_) => GnStatus::Config,
        Error::Usage(_) => GnStatus::Usage,
        Error::Io(_) => GnStatus::Io,
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
    Utf8,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> GnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            GnStatus::Ok
        }
        Ok(Err(Fail::Lib(e))) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_last_error(&format!("null pointer: {what}"));
            GnStatus::NullPointer
        }
        Ok(Err(Fail::Utf8)) => {
            set_last_error("string argument is not valid UTF-8");
            GnStatus::InvalidUtf8
        }
        Err(_) => {
            set_last_error("internal panic");
            GnStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn string<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Utf8)
}

fn report(r: &NoticeabilityReport) -> GnReport {
    GnReport {
        has_statistic: r.statistic.is_some() as i32,
        statistic: r.statistic.unwrap_or(f64::NAN),
        has_p_value: r.p_value.is_some() as i32,
        p_value: r.p_value.unwrap_or(f64::NAN),
        threshold: r.threshold,
        noticeable: r.noticeable.map_or(-1, i32::from),
    }
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn gn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a graph on `n` nodes from `num_edges` pairs stored as
/// `edges[2k], edges[2k+1]`.
///
/// # Safety
/// `edges` must point to `2 * num_edges` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gn_graph_new(n: usize, edges: *const usize, num_edges: usize, out: *mut *mut GnGraph) -> GnStatus {
    guard(|| {
        let out = self::out(out, "out")?;
        let flat = slice(edges, 2 * num_edges, "edges")?;
        let pairs: Vec<(usize, usize)> = flat.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        *out = boxed(GnGraph {
            inner: Graph::from_edges(n, &pairs)?,
        });
        Ok(())
    })
}

/// Loads a dataset directory (`edges.txt`, optional `features.csv` and `labels.txt`).
///
/// # Safety
/// `dir` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gn_graph_load_dir(dir: *const c_char, out: *mut *mut GnGraph) -> GnStatus {
    guard(|| {
        let out = self::out(out, "out")?;
        let dir = string(dir, "dir")?;
        let g = graphnotice::io::DatasetBundle::from_dir(std::path::Path::new(dir)).load()?;
        *out = boxed(GnGraph { inner: g });
        Ok(())
    })
}

/// Releases a graph. Null is ignored.
///
/// # Safety
/// `g` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gn_graph_free(g: *mut GnGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Attaches a row-major `n × dim` feature matrix.
///
/// # Safety
/// `g` must be a live handle; `data` must hold `n * dim` values.
#[no_mangle]
pub unsafe extern "C" fn gn_graph_set_features(g: *mut GnGraph, data: *const f64, dim: usize) -> GnStatus {
    guard(|| {
        let g = out(g, "graph")?;
        let n = g.inner.n();
        let x = Matrix::from_vec(n, dim, slice(data, n * dim, "data")?.to_vec())?;
        g.inner = g.inner.clone().with_features(x)?;
        Ok(())
    })
}

/// Attaches one class label per node.
///
/// # Safety
/// `g` must be a live handle; `labels` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn gn_graph_set_labels(g: *mut GnGraph, labels: *const usize) -> GnStatus {
    guard(|| {
        let g = out(g, "graph")?;
        let labels = slice(labels, g.inner.n(), "labels")?.to_vec();
        g.inner = g.inner.clone().with_labels(labels)?;
        Ok(())
    })
}

/// # Safety
/// `g` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn gn_graph_num_nodes(g: *const GnGraph) -> usize {
    g.as_ref().map_or(0, |g| g.inner.n())
}

/// # Safety
/// `g` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn gn_graph_num_edges(g: *const GnGraph) -> usize {
    g.as_ref().map_or(0, |g| g.inner.num_edges())
}

/// Copies the edges into `edges` as `2 * gn_graph_num_edges` values, sorted.
///
/// # Safety
/// `edges` must have room for `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn gn_graph_edges(g: *const GnGraph, edges: *mut usize, capacity: usize) -> GnStatus {
    guard(|| {
        let g = as_ref(g, "graph")?;
        let list = g.inner.edges();
        if capacity < 2 * list.len() {
            return Err(Error::OutOfRange(format!("need room for {} values", 2 * list.len())).into());
        }
        let dst = slice_mut(edges, 2 * list.len(), "edges")?;
        for (k, (u, v)) in list.into_iter().enumerate() {
            dst[2 * k] = u;
            dst[2 * k + 1] = v;
        }
        Ok(())
    })
}

/// Per-node degrees, written to `out[0..n]`.
///
/// # Safety
/// `g` must be a live handle; `out` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn gn_graph_degrees(g: *const GnGraph, out: *mut f64) -> GnStatus {
    guard(|| {
        let g = as_ref(g, "graph")?;
        let dst = slice_mut(out, g.inner.n(), "out")?;
        for (d, s) in dst.iter_mut().zip(stats::degrees(&g.inner)) {
            *d = s as f64;
        }
        Ok(())
    })
}

/// Local clustering coefficients, written to `out[0..n]`.
///
/// # Safety
/// `g` must be a live handle; `out` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn gn_graph_clustering(g: *const GnGraph, out: *mut f64) -> GnStatus {
    guard(|| {
        let g = as_ref(g, "graph")?;
        slice_mut(out, g.inner.n(), "out")?.copy_from_slice(&stats::clustering_coefficients(&g.inner));
        Ok(())
    })
}

/// Node feature homophily, written to `out[0..n]`. Needs features.
///
/// # Safety
/// `g` must be a live handle; `out` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn gn_graph_homophily(g: *const GnGraph, out: *mut f64) -> GnStatus {
    guard(|| {
        let g = as_ref(g, "graph")?;
        if !g.inner.has_features() {
            return Err(Error::NotApplicable("graph has no features".into()).into());
        }
        slice_mut(out, g.inner.n(), "out")?.copy_from_slice(&stats::node_homophily(&g.inner));
        Ok(())
    })
}

/// Area under the ROC curve of `scores` against binary `labels` (non-zero = positive).
///
/// # Safety
/// `labels` and `scores` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gn_auroc(labels: *const u8, scores: *const f64, len: usize, out: *mut f64) -> GnStatus {
    guard(|| {
        let out = self::out(out, "out")?;
        let labels: Vec<bool> = slice(labels, len, "labels")?.iter().map(|&b| b != 0).collect();
        *out = auroc(&labels, slice(scores, len, "scores")?)?;
        Ok(())
    })
}

/// Two-sample Kolmogorov-Smirnov test.
///
/// # Safety
/// `x`/`y` must hold `nx`/`ny` values; `d` and `p_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gn_ks_two_sample(
    x: *const f64,
    nx: usize,
    y: *const f64,
    ny: usize,
    d: *mut f64,
    p_value: *mut f64,
) -> GnStatus {
    guard(|| {
        let d = out(d, "d")?;
        let p_value = out(p_value, "p_value")?;
        let r = ks_two_sample(slice(x, nx, "x")?, slice(y, ny, "y")?)?;
        *d = r.statistic;
        *p_value = r.p_value;
        Ok(())
    })
}

/// Statistical noticeability of `attacked` against `original`. `measure` is
/// one of `degree_ks`, `clscoef_ks`, `degree_lr`, `homophily_ks`.
///
/// # Safety
/// Handles must be live; `measure` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gn_measure(
    measure: *const c_char,
    original: *const GnGraph,
    attacked: *const GnGraph,
    out: *mut GnReport,
) -> GnStatus {
    guard(|| {
        let out = self::out(out, "out")?;
        let kind: MeasureKind = string(measure, "measure")?.parse()?;
        if !kind.is_statistical() {
            return Err(Error::Usage("use gn_hidenseek for the learned measure".into()).into());
        }
        let g = as_ref(original, "original")?;
        let h = as_ref(attacked, "attacked")?;
        let r = MeasureHandle::new(kind).evaluate(&g.inner, &h.inner, &DeterministicRng::new(0))?;
        *out = report(&r);
        Ok(())
    })
}

/// Learned noticeability: AUROC of `scorer` (`leo`, `gcn`, `svd`, `cosine`,
/// `degree`, `clscoef`, `homophily`) separating original from inserted edges.
/// `svd_rank` is used by the `svd` scorer only.
///
/// # Safety
/// Handles must be live; `scorer` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gn_hidenseek(
    scorer: *const c_char,
    original: *const GnGraph,
    attacked: *const GnGraph,
    svd_rank: usize,
    seed: u64,
    out: *mut GnReport,
) -> GnStatus {
    guard(|| {
        let out = self::out(out, "out")?;
        let mut spec = ScorerSpec::parse(string(scorer, "scorer")?, LeoConfig::default(), svd_rank)?;
        let pair = AttackPair::new(as_ref(original, "original")?.inner.clone(), as_ref(attacked, "attacked")?.inner.clone())?;
        let r = hidenseek(&pair, &mut spec, DEFAULT_AUROC_THRESHOLD, &DeterministicRng::new(seed))?;
        *out = report(&r);
        Ok(())
    })
}

unsafe fn attack(
    g: *const GnGraph,
    delta: usize,
    out: *mut *mut GnTrace,
    run: impl FnOnce(&Graph, &AttackBudget) -> graphnotice::Result<AttackTrace>,
) -> GnStatus {
    guard(|| {
        let out = self::out(out, "out")?;
        let g = as_ref(g, "graph")?;
        *out = boxed(GnTrace {
            inner: run(&g.inner, &AttackBudget::exact(delta))?,
        });
        Ok(())
    })
}

/// `delta` uniformly random edge insertions.
///
/// # Safety
/// `g` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gn_attack_random(g: *const GnGraph, delta: usize, seed: u64, out: *mut *mut GnTrace) -> GnStatus {
    attack(g, delta, out, |g, b| random_attack(g, b, &mut DeterministicRng::new(seed)))
}

/// DICE: delete within-class edges, insert cross-class edges. Needs labels.
///
/// # Safety
/// `g` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gn_attack_dice(g: *const GnGraph, delta: usize, seed: u64, out: *mut *mut GnTrace) -> GnStatus {
    attack(g, delta, out, |g, b| {
        let labels = g
            .labels()
            .ok_or_else(|| Error::NotApplicable("DICE needs node labels".into()))?;
        dice_attack(g, labels, b, &mut DeterministicRng::new(seed))
    })
}

/// Structack: links low-centrality nodes across communities.
///
/// # Safety
/// `g` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gn_attack_structack(g: *const GnGraph, delta: usize, out: *mut *mut GnTrace) -> GnStatus {
    attack(g, delta, out, structack)
}

/// Releases a trace. Null is ignored.
///
/// # Safety
/// `t` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gn_trace_free(t: *mut GnTrace) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// # Safety
/// `t` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn gn_trace_len(t: *const GnTrace) -> usize {
    t.as_ref().map_or(0, |t| t.inner.len())
}

/// Operation `index` of the trace.
///
/// # Safety
/// `t` must be live; the out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn gn_trace_op(
    t: *const GnTrace,
    index: usize,
    u: *mut usize,
    v: *mut usize,
    kind: *mut GnOpKind,
) -> GnStatus {
    guard(|| {
        let t = as_ref(t, "trace")?;
        let op = t
            .inner
            .ops
            .get(index)
            .ok_or_else(|| Error::OutOfRange(format!("op {index} of {}", t.inner.len())))?;
        *out(u, "u")? = op.u;
        *out(v, "v")? = op.v;
        *out(kind, "kind")? = match op.kind {
            OpKind::Insert => GnOpKind::Insert,
            OpKind::Delete => GnOpKind::Delete,
        };
        Ok(())
    })
}

/// New graph with the first `prefix` operations of `t` applied to `g`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gn_trace_apply(
    g: *const GnGraph,
    t: *const GnTrace,
    prefix: usize,
    out: *mut *mut GnGraph,
) -> GnStatus {
    guard(|| {
        let out = self::out(out, "out")?;
        let h = apply_trace(&as_ref(g, "graph")?.inner, &as_ref(t, "trace")?.inner, prefix)?;
        *out = boxed(GnGraph { inner: h });
        Ok(())
    })
}
