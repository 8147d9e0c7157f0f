//! C ABI over the `cellprobe` simulator.
//!
//! Handles are opaque pointers created by `*_new` and released by `*_free`.
//! Every fallible call returns a [`CpStatus`]; on failure the message is
//! available from [`cp_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cellprobe::analysis::{encoding_lengths, resolution_probability, Branch, EncodingParams, SamplingParams};
use cellprobe::ann::{hamming, AnnParams, Point};
use cellprobe::machine::{Machine, SessionTrace};
use cellprobe::structures::{Dynamized, LinearScan, Op, OpOutcome};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Machine = 3,
    Structure = 4,
    Analysis = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpBranch {
    Extract = 0,
    Weak = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CpEncodingParams {
    pub n_i: u64,
    pub d_prime: u32,
    pub word_bits: u32,
    pub client_bits: u64,
    pub sample_cells: u64,
    pub newer_cells: u64,
    pub f: u64,
    pub gamma_size: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CpEncodingLengths {
    pub case0_bits: f64,
    pub case1_bits: f64,
    pub entropy_floor: f64,
}

/// A bare probe machine.
pub struct CpMachine {
    inner: Machine,
}

/// A linear-scan dynamization together with the machine it runs on. Every
/// insert and query is one oblivious operation.
pub struct CpSession {
    dynz: Dynamized<LinearScan>,
    machine: Machine,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: CpStatus, msg: impl std::fmt::Display) -> CpStatus {
    set_error(msg.to_string());
    status
}

fn guard(f: impl FnOnce() -> CpStatus) -> CpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(CpStatus::Panic, "internal panic"),
    }
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn cp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cp_machine_new(
    cells: u64,
    word_bits: u32,
    client_bits: u64,
    seed: u64,
    out: *mut *mut CpMachine,
) -> CpStatus {
    guard(|| {
        if out.is_null() {
            return fail(CpStatus::NullPointer, "out is null");
        }
        match Machine::new(cells, word_bits, client_bits, seed) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(CpMachine { inner }));
                CpStatus::Ok
            }
            Err(e) => fail(CpStatus::Machine, e),
        }
    })
}

/// # Safety
/// `machine` must come from [`cp_machine_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cp_machine_free(machine: *mut CpMachine) {
    if !machine.is_null() {
        drop(Box::from_raw(machine));
    }
}

unsafe fn machine_mut<'a>(m: *mut CpMachine) -> Result<&'a mut Machine, CpStatus> {
    m.as_mut().map(|m| &mut m.inner).ok_or_else(|| fail(CpStatus::NullPointer, "machine is null"))
}

/// # Safety
/// `machine` must be a live handle; `label` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cp_machine_begin(machine: *mut CpMachine, label: *const c_char) -> CpStatus {
    guard(|| {
        let m = match machine_mut(machine) {
            Ok(m) => m,
            Err(s) => return s,
        };
        if label.is_null() {
            return fail(CpStatus::NullPointer, "label is null");
        }
        let label = CStr::from_ptr(label).to_string_lossy();
        m.begin_operation(&label).map_or_else(|e| fail(CpStatus::Machine, e), |_| CpStatus::Ok)
    })
}

/// # Safety
/// `machine` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cp_machine_end(machine: *mut CpMachine) -> CpStatus {
    guard(|| match machine_mut(machine) {
        Ok(m) => m.end_operation().map_or_else(|e| fail(CpStatus::Machine, e), |_| CpStatus::Ok),
        Err(s) => s,
    })
}

/// # Safety
/// `machine` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cp_machine_read(machine: *mut CpMachine, address: u64, out: *mut u64) -> CpStatus {
    guard(|| {
        let m = match machine_mut(machine) {
            Ok(m) => m,
            Err(s) => return s,
        };
        if out.is_null() {
            return fail(CpStatus::NullPointer, "out is null");
        }
        match m.read(address) {
            Ok(w) => {
                *out = w;
                CpStatus::Ok
            }
            Err(e) => fail(CpStatus::Machine, e),
        }
    })
}

/// # Safety
/// `machine` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cp_machine_write(machine: *mut CpMachine, address: u64, word: u64) -> CpStatus {
    guard(|| match machine_mut(machine) {
        Ok(m) => m.write(address, word).map_or_else(|e| fail(CpStatus::Machine, e), |_| CpStatus::Ok),
        Err(s) => s,
    })
}

/// Completed operations recorded so far; 0 for a NULL handle.
///
/// # Safety
/// `machine` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cp_machine_operation_count(machine: *const CpMachine) -> usize {
    machine.as_ref().map_or(0, |m| m.inner.adversary_view().operations.len())
}

unsafe fn copy_dump(trace: &SessionTrace, buf: *mut c_char, cap: usize, out_len: *mut usize) -> CpStatus {
    let dump = trace.to_dump();
    if !out_len.is_null() {
        *out_len = dump.len();
    }
    if cap < dump.len() + 1 || buf.is_null() {
        return fail(CpStatus::BufferTooSmall, format!("dump needs {} bytes plus NUL", dump.len()));
    }
    ptr::copy_nonoverlapping(dump.as_ptr(), buf.cast::<u8>(), dump.len());
    *buf.add(dump.len()) = 0;
    CpStatus::Ok
}

/// Writes the trace dump, NUL-terminated, into `buf`. `out_len` receives the
/// dump length without the NUL, also when the buffer is too small, so a
/// first call with `cap = 0` sizes the buffer.
///
/// # Safety
/// `machine` must be a live handle, `buf` valid for `cap` bytes, `out_len`
/// NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cp_machine_trace_dump(
    machine: *const CpMachine,
    buf: *mut c_char,
    cap: usize,
    out_len: *mut usize,
) -> CpStatus {
    guard(|| match machine.as_ref() {
        Some(m) => copy_dump(m.inner.adversary_view(), buf, cap, out_len),
        None => fail(CpStatus::NullPointer, "machine is null"),
    })
}

/// New session for at most `n_max - 1` operations on `d`-bit points held in
/// `word_bits`-bit cells (`d + 1 <= word_bits`).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cp_session_new(
    d: u32,
    r: u32,
    c: f64,
    n_max: u64,
    word_bits: u32,
    out: *mut *mut CpSession,
) -> CpStatus {
    guard(|| {
        if out.is_null() {
            return fail(CpStatus::NullPointer, "out is null");
        }
        if d > 63 {
            return fail(CpStatus::InvalidArgument, "points must fit in 63 bits");
        }
        let params = match AnnParams::new(d, r, c) {
            Ok(p) => p,
            Err(e) => return fail(CpStatus::InvalidArgument, e),
        };
        let dynz = match Dynamized::new(LinearScan::new(params), d, n_max, 0) {
            Ok(x) => x,
            Err(e) => return fail(CpStatus::Structure, e),
        };
        let machine = match Machine::new(dynz.required_cells().max(1), word_bits, 0, 0) {
            Ok(m) => m,
            Err(e) => return fail(CpStatus::Machine, e),
        };
        *out = Box::into_raw(Box::new(CpSession { dynz, machine }));
        CpStatus::Ok
    })
}

/// # Safety
/// `session` must come from [`cp_session_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cp_session_free(session: *mut CpSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

unsafe fn session_op(session: *mut CpSession, op: impl FnOnce(u32) -> Result<Op, String>) -> Result<OpOutcome, CpStatus> {
    let s = session.as_mut().ok_or_else(|| fail(CpStatus::NullPointer, "session is null"))?;
    let op = op(s.dynz.dim()).map_err(|e| fail(CpStatus::InvalidArgument, e))?;
    s.dynz.operate(&mut s.machine, op).map_err(|e| fail(CpStatus::Structure, e))
}

fn point(value: u64, d: u32) -> Result<Point, String> {
    Point::from_u64(value, d).map_err(|e| e.to_string())
}

/// Inserts the `d`-bit point `value` (coordinate 0 is the high bit).
///
/// # Safety
/// `session` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cp_session_insert(session: *mut CpSession, value: u64) -> CpStatus {
    guard(|| match session_op(session, |d| point(value, d).map(Op::Insert)) {
        Ok(_) => CpStatus::Ok,
        Err(s) => s,
    })
}

/// Queries `value`. `*out_found` is false for no answer; otherwise the answer
/// is stored in `*out_point`.
///
/// # Safety
/// `session` must be a live handle; both out pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cp_session_query(
    session: *mut CpSession,
    value: u64,
    out_found: *mut bool,
    out_point: *mut u64,
) -> CpStatus {
    guard(|| {
        if out_found.is_null() || out_point.is_null() {
            return fail(CpStatus::NullPointer, "out pointer is null");
        }
        match session_op(session, |d| point(value, d).map(Op::Query)) {
            Ok(OpOutcome::Answer(a)) => {
                *out_found = a.is_some();
                *out_point = a.and_then(|p| p.as_u64()).unwrap_or(0);
                CpStatus::Ok
            }
            Ok(OpOutcome::Inserted) => fail(CpStatus::Structure, "query produced no answer"),
            Err(s) => s,
        }
    })
}

/// Total probes so far; 0 for a NULL handle.
///
/// # Safety
/// `session` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cp_session_total_probes(session: *const CpSession) -> u64 {
    session.as_ref().map_or(0, |s| s.machine.adversary_view().total_probes() as u64)
}

/// Same contract as [`cp_machine_trace_dump`].
///
/// # Safety
/// See [`cp_machine_trace_dump`].
#[no_mangle]
pub unsafe extern "C" fn cp_session_trace_dump(
    session: *const CpSession,
    buf: *mut c_char,
    cap: usize,
    out_len: *mut usize,
) -> CpStatus {
    guard(|| match session.as_ref() {
        Some(s) => copy_dump(s.machine.adversary_view(), buf, cap, out_len),
        None => fail(CpStatus::NullPointer, "session is null"),
    })
}

/// Hamming distance between two `d`-bit points.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cp_hamming(a: u64, b: u64, d: u32, out: *mut u32) -> CpStatus {
    guard(|| {
        if out.is_null() {
            return fail(CpStatus::NullPointer, "out is null");
        }
        let dist = point(a, d).and_then(|p| point(b, d).and_then(|q| hamming(&p, &q).map_err(|e| e.to_string())));
        match dist {
            Ok(x) => {
                *out = x;
                CpStatus::Ok
            }
            Err(e) => fail(CpStatus::InvalidArgument, e),
        }
    })
}

/// Exact probability that a uniform `sample_size`-subset of `population`
/// cells covers `2 * probes` fixed cells, and the closed-form lower bound.
///
/// # Safety
/// Both out pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cp_resolution_probability(
    population: u64,
    sample_size: u64,
    probes: u64,
    out_exact: *mut f64,
    out_bound: *mut f64,
) -> CpStatus {
    guard(|| {
        if out_exact.is_null() || out_bound.is_null() {
            return fail(CpStatus::NullPointer, "out pointer is null");
        }
        match resolution_probability(&SamplingParams { population, sample_size, probes }) {
            Ok(r) => {
                *out_exact = r.exact;
                *out_bound = r.bound;
                CpStatus::Ok
            }
            Err(e) => fail(CpStatus::Analysis, e),
        }
    })
}

/// # Safety
/// `params` must be valid for reads and `out` for writes.
#[no_mangle]
pub unsafe extern "C" fn cp_encoding_lengths(
    params: *const CpEncodingParams,
    branch: CpBranch,
    out: *mut CpEncodingLengths,
) -> CpStatus {
    guard(|| {
        let (Some(p), false) = (params.as_ref(), out.is_null()) else {
            return fail(CpStatus::NullPointer, "params or out is null");
        };
        let params = EncodingParams {
            n_i: p.n_i,
            d_prime: p.d_prime,
            word_bits: p.word_bits,
            client_bits: p.client_bits,
            sample_cells: p.sample_cells,
            newer_cells: p.newer_cells,
            f: p.f,
            gamma_size: p.gamma_size,
        };
        let branch = match branch {
            CpBranch::Extract => Branch::Extract,
            CpBranch::Weak => Branch::Weak,
        };
        match encoding_lengths(&params, branch) {
            Ok(e) => {
                *out = CpEncodingLengths { case0_bits: e.case0_bits, case1_bits: e.case1_bits, entropy_floor: e.entropy_floor };
                CpStatus::Ok
            }
            Err(e) => fail(CpStatus::Analysis, e),
        }
    })
}
