//! C ABI over the p2pgnn library.
//!
//! Every fallible call returns one of the `P2PGNN_*` status codes and leaves
//! a description retrievable with [`p2pgnn_last_error_message`] on the same
//! thread. Handles are opaque and must be released with their `_free`
//! function. Prediction buffers are row-major `num_nodes × num_classes`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use p2pgnn::graph::{load_dataset, Dataset};
use p2pgnn::oracle::{accuracy, fdiff_scale, DiffusionParams, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use p2pgnn::p2p::{decode_message, encode_message, message_len, DeviceHyper, Message};
use p2pgnn::sim::{build_schedule, Simulation};
use p2pgnn::{Error, PredictionTable};

pub const P2PGNN_OK: i32 = 0;
pub const P2PGNN_NULL_POINTER: i32 = 1;
pub const P2PGNN_INVALID_ARGUMENT: i32 = 2;
pub const P2PGNN_IO: i32 = 3;
pub const P2PGNN_PARSE: i32 = 4;
pub const P2PGNN_VALIDATION: i32 = 5;
pub const P2PGNN_NON_CONVERGENCE: i32 = 6;
pub const P2PGNN_PROTOCOL: i32 = 7;
pub const P2PGNN_CODEC: i32 = 8;
pub const P2PGNN_PANIC: i32 = 9;

/// A loaded graph with node features, labels and splits.
pub struct P2pgnnDataset {
    inner: Arc<Dataset>,
}

/// A running peer-to-peer simulation over a dataset.
pub struct P2pgnnSimulation {
    dataset: Arc<Dataset>,
    sim: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => P2PGNN_IO,
        Error::Parse { .. } => P2PGNN_PARSE,
        Error::NonConvergence { .. } => P2PGNN_NON_CONVERGENCE,
        Error::Protocol(_) => P2PGNN_PROTOCOL,
        Error::Codec(_) => P2PGNN_CODEC,
        Error::Parameter(_) | Error::Config(_) | Error::Dimension { .. } => P2PGNN_INVALID_ARGUMENT,
        Error::Validation(_) => P2PGNN_VALIDATION,
    }
}

/// Failure inside a call: a status code plus its message.
struct Fail(i32, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(P2PGNN_NULL_POINTER, format!("{what} is null"))
}

fn invalid(message: String) -> Fail {
    Fail(P2PGNN_INVALID_ARGUMENT, message)
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            P2PGNN_OK
        }
        Ok(Err(Fail(code, message))) => {
            set_error(message);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            P2PGNN_PANIC
        }
    }
}

unsafe fn path_arg<'a>(p: *const c_char, what: &str) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))?;
    Ok(Path::new(s))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut_arg<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn table_arg(ds: &Dataset, values: &[f64], what: &str) -> Result<PredictionTable, Fail> {
    let (n, c) = (ds.data.n_nodes(), ds.data.n_classes());
    if values.len() != n * c {
        return Err(invalid(format!("{what} has {} values, expected {n}×{c}", values.len())));
    }
    Ok(PredictionTable::from_vec(n, c, values.to_vec())?)
}

/// Message of the most recent failed call on this thread, or null. The
/// pointer stays valid until the next p2pgnn call on the same thread.
#[no_mangle]
pub extern "C" fn p2pgnn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Loads a dataset from its nodes, edges and splits files.
///
/// # Safety
/// Paths must be null or NUL-terminated strings; `out` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn p2pgnn_dataset_load(
    nodes: *const c_char,
    edges: *const c_char,
    splits: *const c_char,
    out: *mut *mut P2pgnnDataset,
) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ds = load_dataset(
            path_arg(nodes, "nodes")?,
            path_arg(edges, "edges")?,
            path_arg(splits, "splits")?,
        )?;
        *out = Box::into_raw(Box::new(P2pgnnDataset {
            inner: Arc::new(ds),
        }));
        Ok(())
    })
}

/// # Safety
/// `ds` must be null or a handle from `p2pgnn_dataset_load` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn p2pgnn_dataset_free(ds: *mut P2pgnnDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of nodes; 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn p2pgnn_dataset_num_nodes(ds: *const P2pgnnDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.data.n_nodes())
}

/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn p2pgnn_dataset_num_classes(ds: *const P2pgnnDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.data.n_classes())
}

/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn p2pgnn_dataset_num_features(ds: *const P2pgnnDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.data.n_features())
}

/// Writes the label rows of the known (train and validation) nodes, zeros
/// elsewhere; usable directly as label-propagation base predictions.
///
/// # Safety
/// `out` must point to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn p2pgnn_dataset_known_labels(
    ds: *const P2pgnnDataset,
    out: *mut f64,
    out_len: usize,
) -> i32 {
    guard(|| {
        let ds = &ds.as_ref().ok_or_else(|| null("dataset"))?.inner;
        let table = ds.data.label_table(Some(&ds.splits.known()));
        let out = slice_mut_arg(out, out_len, "out")?;
        if out.len() != table.as_slice().len() {
            return Err(invalid(format!(
                "output buffer has {} values, expected {}",
                out.len(),
                table.as_slice().len()
            )));
        }
        out.copy_from_slice(table.as_slice());
        Ok(())
    })
}

/// Centralized FDiff-scale of `base`, with train and validation labels
/// known. Writes the smoothed predictions to `out` and, if
/// `test_accuracy` is non-null, their test accuracy.
///
/// # Safety
/// `base` and `out` must point to `len` readable / writable doubles.
#[no_mangle]
pub unsafe extern "C" fn p2pgnn_oracle_fdiff(
    ds: *const P2pgnnDataset,
    base: *const f64,
    out: *mut f64,
    len: usize,
    beta: f64,
    s: f64,
    test_accuracy: *mut f64,
) -> i32 {
    guard(|| {
        let ds = &ds.as_ref().ok_or_else(|| null("dataset"))?.inner;
        let base = table_arg(ds, slice_arg(base, len, "base")?, "base")?;
        let out = slice_mut_arg(out, len, "out")?;
        let known = ds.splits.known();
        let targets = ds.data.label_table(Some(&known));
        let result = fdiff_scale(
            &ds.graph,
            &base,
            &targets,
            &known,
            &DiffusionParams { beta, s },
            DEFAULT_TOL,
            DEFAULT_MAX_ITERS,
        )?;
        out.copy_from_slice(result.predictions.as_slice());
        if let Some(acc) = test_accuracy.as_mut() {
            *acc = accuracy(&result.predictions, &ds.data.label_table(None), &ds.splits.test)?;
        }
        Ok(())
    })
}

/// Starts a simulation whose devices hold the `base` rows, with edge
/// probabilities drawn uniformly from `[0, sigma_max]`.
///
/// # Safety
/// `base` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn p2pgnn_simulation_new(
    ds: *const P2pgnnDataset,
    base: *const f64,
    len: usize,
    beta: f64,
    s: f64,
    sigma_max: f64,
    seed: u64,
    out: *mut *mut P2pgnnSimulation,
) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ds = &ds.as_ref().ok_or_else(|| null("dataset"))?.inner;
        let base = table_arg(ds, slice_arg(base, len, "base")?, "base")?;
        let params = DiffusionParams { beta, s };
        params.validate()?;
        let graph = Arc::new(ds.graph.clone());
        let schedule = build_schedule(&graph, sigma_max, seed)?;
        let targets = ds.data.label_table(Some(&ds.splits.known()));
        let sim = Simulation::new(
            graph,
            &base,
            &targets,
            DeviceHyper::for_diffusion(&params),
            schedule,
            seed,
        )?;
        *out = Box::into_raw(Box::new(P2pgnnSimulation {
            dataset: ds.clone(),
            sim,
        }));
        Ok(())
    })
}

/// # Safety
/// `sim` must be null or a handle from `p2pgnn_simulation_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn p2pgnn_simulation_free(sim: *mut P2pgnnSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances the simulation by `steps` time steps.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn p2pgnn_simulation_step(sim: *mut P2pgnnSimulation, steps: u64) -> i32 {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(|| null("simulation"))?;
        for _ in 0..steps {
            sim.sim.step()?;
        }
        Ok(())
    })
}

/// Current time step; 0 for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn p2pgnn_simulation_time(sim: *const P2pgnnSimulation) -> u64 {
    sim.as_ref().map_or(0, |s| s.sim.time())
}

/// # Safety
/// `out` must point to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn p2pgnn_simulation_predictions(
    sim: *const P2pgnnSimulation,
    out: *mut f64,
    out_len: usize,
) -> i32 {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("simulation"))?;
        let pred = sim.sim.predictions();
        let out = slice_mut_arg(out, out_len, "out")?;
        if out.len() != pred.as_slice().len() {
            return Err(invalid(format!(
                "output buffer has {} values, expected {}",
                out.len(),
                pred.as_slice().len()
            )));
        }
        out.copy_from_slice(pred.as_slice());
        Ok(())
    })
}

/// Test accuracy of the devices' current predictions.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn p2pgnn_simulation_test_accuracy(
    sim: *const P2pgnnSimulation,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("simulation"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let ds = &sim.dataset;
        *out = accuracy(&sim.sim.predictions(), &ds.data.label_table(None), &ds.splits.test)?;
        Ok(())
    })
}

/// Cumulative bytes sent by the diffusion protocol.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn p2pgnn_simulation_bytes(sim: *const P2pgnnSimulation) -> u64 {
    sim.as_ref().map_or(0, |s| s.sim.bytes_diffusion())
}

/// Encoded size of a message carrying `n_classes` values per share.
#[no_mangle]
pub extern "C" fn p2pgnn_message_len(n_classes: usize) -> usize {
    message_len(n_classes)
}

/// Encodes one protocol message into `out`, which must hold exactly
/// `p2pgnn_message_len(n_classes)` bytes.
///
/// # Safety
/// `pred_share` and `err_share` must point to `n_classes` doubles and `out`
/// to `out_len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn p2pgnn_message_encode(
    sender: u32,
    pred_share: *const f64,
    err_share: *const f64,
    n_classes: usize,
    out: *mut u8,
    out_len: usize,
) -> i32 {
    guard(|| {
        let msg = Message {
            sender: sender as usize,
            pred_share: slice_arg(pred_share, n_classes, "pred_share")?.to_vec(),
            err_share: slice_arg(err_share, n_classes, "err_share")?.to_vec(),
        };
        let bytes = encode_message(&msg)?;
        let out = slice_mut_arg(out, out_len, "out")?;
        if out.len() != bytes.len() {
            return Err(invalid(format!(
                "output buffer has {} bytes, message needs {}",
                out.len(),
                bytes.len()
            )));
        }
        out.copy_from_slice(&bytes);
        Ok(())
    })
}

/// Decodes a message whose shares have `n_classes` entries.
///
/// # Safety
/// `bytes` must point to `len` readable bytes; `sender` must be writable and
/// `pred_share`, `err_share` must point to `n_classes` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn p2pgnn_message_decode(
    bytes: *const u8,
    len: usize,
    n_classes: usize,
    sender: *mut u32,
    pred_share: *mut f64,
    err_share: *mut f64,
) -> i32 {
    guard(|| {
        let msg = decode_message(slice_arg(bytes, len, "bytes")?)?;
        if msg.pred_share.len() != n_classes {
            return Err(Fail(
                P2PGNN_CODEC,
                format!("message has {} classes, caller expects {n_classes}", msg.pred_share.len()),
            ));
        }
        *sender.as_mut().ok_or_else(|| null("sender"))? = msg.sender as u32;
        slice_mut_arg(pred_share, n_classes, "pred_share")?.copy_from_slice(&msg.pred_share);
        slice_mut_arg(err_share, n_classes, "err_share")?.copy_from_slice(&msg.err_share);
        Ok(())
    })
}
