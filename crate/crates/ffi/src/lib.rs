//! C interface to the `prefattach` simulator.
//!
//! Every function returns a [`PaStatus`]; on anything but `PA_STATUS_OK` a
//! message is available from [`pa_last_error`] on the same thread. Handles are
//! opaque and must be released with their `_free` function. Panics never
//! cross the boundary; they are reported as `PA_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use prefattach::theory::{self, RegimeConstants};
use prefattach::{tracker, Error, GraphState, ModelParams, PairTracker, Regime, Snapshot};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaStatus {
    Ok = 0,
    NullPointer = 1,
    ParameterDomain = 2,
    InvalidArgument = 3,
    Resource = 4,
    Io = 5,
    Format = 6,
    Panic = 7,
}

/// Growth regime selected by the sign of delta.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaRegime {
    Static = 0,
    Logarithmic = 1,
    Power = 2,
}

impl From<Regime> for PaRegime {
    fn from(r: Regime) -> Self {
        match r {
            Regime::Static => PaRegime::Static,
            Regime::Logarithmic => PaRegime::Logarithmic,
            Regime::Power => PaRegime::Power,
        }
    }
}

/// Exponents and rates for one `(c, delta)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaConstants {
    pub gamma: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub regime: PaRegime,
    /// `2 gamma - 1`.
    pub power_exponent: f64,
    /// `c (c - 1) / (2c + delta)^2`.
    pub pair_rate: f64,
}

/// A growing graph.
pub struct PaGraph {
    state: GraphState,
}

/// Incremental common-friend counter for one pair.
pub struct PaTracker {
    inner: PairTracker,
    rc: RegimeConstants,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PaStatus {
    match e {
        Error::ParameterDomain(_) => PaStatus::ParameterDomain,
        Error::InvalidArgument(_) => PaStatus::InvalidArgument,
        Error::Resource(_) => PaStatus::Resource,
        Error::Io(_) => PaStatus::Io,
        Error::Format(_) => PaStatus::Format,
    }
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<(), Failure>;

fn guard(f: impl FnOnce() -> Outcome) -> PaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PaStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            PaStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| (*s).to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            PaStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn get_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &'static str) -> Outcome {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn c_path<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Core(Error::InvalidArgument("path is not valid UTF-8".into())))
}

fn node(i: usize, n: usize) -> Result<usize, Failure> {
    if i == 0 || i > n {
        return Err(Failure::Core(Error::InvalidArgument(format!(
            "node {i} outside 1..={n}"
        ))));
    }
    Ok(i)
}

/// Message for the last failed call on this thread; empty if none. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New graph with one node carrying `c` self-loops.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn pa_graph_new(
    c: u32,
    delta: f64,
    seed: u64,
    out: *mut *mut PaGraph,
) -> PaStatus {
    guard(|| {
        let params = ModelParams::new(c, delta)?;
        let graph = Box::new(PaGraph {
            state: GraphState::new(params, seed),
        });
        put(out, Box::into_raw(graph), "out")
    })
}

/// Releases a graph; null is ignored.
///
/// # Safety
/// `graph` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pa_graph_free(graph: *mut PaGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Current number of nodes.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pa_graph_n(graph: *const PaGraph, out: *mut usize) -> PaStatus {
    guard(|| put(out, get(graph, "graph")?.state.n(), "out"))
}

/// Degree of node `i` (1-based), counting multiplicity.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pa_graph_degree(
    graph: *const PaGraph,
    i: usize,
    out: *mut u32,
) -> PaStatus {
    guard(|| {
        let state = &get(graph, "graph")?.state;
        put(out, state.degree(node(i, state.n())?), "out")
    })
}

/// Common-friend count of `(i, j)` recomputed from the adjacency lists.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pa_graph_common_friends(
    graph: *const PaGraph,
    i: usize,
    j: usize,
    out: *mut u64,
) -> PaStatus {
    guard(|| {
        let state = &get(graph, "graph")?.state;
        put(
            out,
            prefattach::common_friends_bruteforce(state, i, j)?,
            "out",
        )
    })
}

/// Grows the graph to `target_n` nodes, updating `count` trackers on the way.
/// Every tracker must be at the graph's current size.
///
/// # Safety
/// `trackers` must point to `count` valid tracker pointers (or be null when
/// `count` is 0), none of them aliasing each other.
#[no_mangle]
pub unsafe extern "C" fn pa_graph_grow(
    graph: *mut PaGraph,
    target_n: usize,
    trackers: *const *mut PaTracker,
    count: usize,
) -> PaStatus {
    guard(|| {
        let state = &mut get_mut(graph, "graph")?.state;
        let handles: &[*mut PaTracker] = if count == 0 {
            &[]
        } else {
            if trackers.is_null() {
                return Err(Failure::Null("trackers"));
            }
            std::slice::from_raw_parts(trackers, count)
        };
        let mut list = Vec::with_capacity(count);
        for &h in handles {
            let t = get_mut(h, "tracker")?;
            if t.inner.n() != state.n() as u64 {
                return Err(Failure::Core(Error::InvalidArgument(format!(
                    "tracker is at n = {} but the graph is at n = {}",
                    t.inner.n(),
                    state.n()
                ))));
            }
            list.push(t);
        }
        if target_n < state.n() {
            return Err(Failure::Core(Error::InvalidArgument(format!(
                "target n {target_n} is below the current n {}",
                state.n()
            ))));
        }
        state.reserve(target_n - state.n());
        while state.n() < target_n {
            let outcome = state.step();
            for t in list.iter_mut() {
                t.inner.on_step(&outcome);
            }
        }
        Ok(())
    })
}

/// Writes a snapshot of the graph to `path`.
///
/// # Safety
/// `graph` must be valid and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pa_graph_save(graph: *const PaGraph, path: *const c_char) -> PaStatus {
    guard(|| {
        let state = &get(graph, "graph")?.state;
        state.snapshot().write_to(c_path(path)?)?;
        Ok(())
    })
}

/// Restores a graph saved with [`pa_graph_save`]; evolution continues with
/// the same random stream.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn pa_graph_load(path: *const c_char, out: *mut *mut PaGraph) -> PaStatus {
    guard(|| {
        let state = GraphState::restore(Snapshot::read_from(c_path(path)?)?)?;
        put(out, Box::into_raw(Box::new(PaGraph { state })), "out")
    })
}

/// Starts tracking `(i, j)` on the graph as it is now; needs `1 <= i < j <= n`.
///
/// # Safety
/// `graph` must be valid and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn pa_tracker_new(
    graph: *const PaGraph,
    i: usize,
    j: usize,
    out: *mut *mut PaTracker,
) -> PaStatus {
    guard(|| {
        let state = &get(graph, "graph")?.state;
        let inner = PairTracker::init_pair(state, i, j)?;
        let rc = RegimeConstants::new(state.params());
        put(out, Box::into_raw(Box::new(PaTracker { inner, rc })), "out")
    })
}

/// Releases a tracker; null is ignored.
///
/// # Safety
/// `tracker` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pa_tracker_free(tracker: *mut PaTracker) {
    if !tracker.is_null() {
        drop(Box::from_raw(tracker));
    }
}

/// Current common-friend count.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pa_tracker_common_friends(
    tracker: *const PaTracker,
    out: *mut u64,
) -> PaStatus {
    guard(|| put(out, get(tracker, "tracker")?.inner.n_ij(), "out"))
}

/// Graph size the tracker has seen.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pa_tracker_n(tracker: *const PaTracker, out: *mut u64) -> PaStatus {
    guard(|| put(out, get(tracker, "tracker")?.inner.n(), "out"))
}

/// Product of the shifted degrees of the pair.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pa_tracker_degree_product(
    tracker: *const PaTracker,
    out: *mut f64,
) -> PaStatus {
    guard(|| put(out, get(tracker, "tracker")?.inner.y_ij(), "out"))
}

/// Common-friend count divided by its regime normaliser.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pa_tracker_scaled(tracker: *const PaTracker, out: *mut f64) -> PaStatus {
    guard(|| {
        let t = get(tracker, "tracker")?;
        put(out, t.inner.scaled(&t.rc).value, "out")
    })
}

/// Exponents, regime and pair rate for `(c, delta)`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn pa_constants(c: u32, delta: f64, out: *mut PaConstants) -> PaStatus {
    guard(|| {
        let rc = RegimeConstants::from_raw(c, delta)?;
        let value = PaConstants {
            gamma: rc.gamma,
            gamma1: rc.gamma1,
            gamma2: rc.gamma2,
            regime: rc.regime.into(),
            power_exponent: rc.power_exponent(),
            pair_rate: rc.pair_rate(),
        };
        put(out, value, "out")
    })
}

/// Mean of the limiting scaled degree product of `(i, j)`, `2 <= i < j`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn pa_c_ij(c: u32, delta: f64, i: u64, j: u64, out: *mut f64) -> PaStatus {
    guard(|| {
        let rc = RegimeConstants::from_raw(c, delta)?;
        put(out, theory::c_ij(&rc, i, j)?, "out")
    })
}

/// Exact mean shifted degree of node `i` at size `n`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn pa_expected_shifted_degree(
    c: u32,
    delta: f64,
    i: u64,
    n: u64,
    out: *mut f64,
) -> PaStatus {
    guard(|| {
        let rc = RegimeConstants::from_raw(c, delta)?;
        put(out, theory::exact_expected_x(&rc, i, n)?, "out")
    })
}

/// Exact mean product of shifted degrees of `(i, j)` at size `n`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn pa_expected_degree_product(
    c: u32,
    delta: f64,
    i: u64,
    j: u64,
    n: u64,
    out: *mut f64,
) -> PaStatus {
    guard(|| {
        let rc = RegimeConstants::from_raw(c, delta)?;
        put(out, theory::exact_expected_y(&rc, i, j, n)?, "out")
    })
}

/// Estimate of the common-friend count at size `n` from the count observed
/// at `floor(n / k)`, `k > 1`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn pa_estimate(
    c: u32,
    delta: f64,
    subsample_count: u64,
    k: f64,
    out: *mut f64,
) -> PaStatus {
    guard(|| {
        let rc = RegimeConstants::from_raw(c, delta)?;
        put(out, tracker::estimate(subsample_count, k, &rc)?, "out")
    })
}

/// Size at which the subsample is read for size `n` and factor `k`.
#[no_mangle]
pub extern "C" fn pa_subsample_time(n: u64, k: f64) -> u64 {
    tracker::subsample_time(n, k)
}
