//! C interface to `jncc-core`.
//!
//! Every fallible call returns a [`JnccStatus`]; on failure the message is
//! kept per thread and can be read with [`jncc_last_error`]. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use jncc_core::bounds::bpsk_mi;
use jncc_core::codes::{assemble, build_p2p_code, DegreeDistributions, JnccCode as Code, Variant};
use jncc_core::diversity::{d_m, d_max, min_n_for_full_diversity, t_min, verify_bec_diversity, ErasureDecoder};
use jncc_core::topology::{algorithm1_transmission_sets, coding_matrix, random_transmission_sets, NetworkTopology};
use jncc_core::JnccError;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JnccStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Construction = 3,
    Panic = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JnccVariant {
    Smarc = 0,
    Identity = 1,
    IdentityIrregular = 2,
    GlncOnly = 3,
    GlncOnlyIdentity = 4,
}

fn variant_from(raw: i32) -> Option<Variant> {
    Some(match raw {
        0 => Variant::Smarc,
        1 => Variant::Identity,
        2 => Variant::IdentityIrregular,
        3 => Variant::GlncOnly,
        4 => Variant::GlncOnlyIdentity,
        _ => return None,
    })
}

/// Relay transmission sets.
pub struct JnccTopology(NetworkTopology);

/// An assembled network code.
pub struct JnccCode(Code);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn status_of(e: &JnccError) -> JnccStatus {
    match e.exit_code() {
        3 => JnccStatus::Construction,
        _ => JnccStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (JnccStatus, String)>) -> JnccStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => JnccStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            JnccStatus::Panic
        }
    }
}

fn lib_err(e: JnccError) -> (JnccStatus, String) {
    (status_of(&e), e.to_string())
}

fn invalid(msg: &str) -> (JnccStatus, String) {
    (JnccStatus::InvalidArgument, msg.to_string())
}

macro_rules! non_null {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            return Err((JnccStatus::NullPointer, format!("`{}` is null", stringify!($p))));
        })+
    };
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn jncc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Largest achievable diversity order. Requires `1 <= m_s <= m_r`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jncc_d_max(m_s: usize, m_r: usize, out: *mut usize) -> JnccStatus {
    guard(|| {
        non_null!(out);
        if m_s == 0 || m_r < m_s {
            return Err(invalid("need 1 <= m_s <= m_r"));
        }
        *out = d_max(m_s, m_r);
        Ok(())
    })
}

/// Smallest constant transmission set size that keeps full diversity
/// reachable. Requires `1 <= m_s <= m_r`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jncc_min_set_size(m_s: usize, m_r: usize, out: *mut usize) -> JnccStatus {
    guard(|| {
        non_null!(out);
        if m_s == 0 || m_r < m_s {
            return Err(invalid("need 1 <= m_s <= m_r"));
        }
        *out = min_n_for_full_diversity(m_s, m_r);
        Ok(())
    })
}

/// Mutual information of BPSK over a real Gaussian link with `alpha^2
/// gamma = s`. Returns NaN for negative or non-finite `s`.
#[no_mangle]
pub extern "C" fn jncc_bpsk_mi(s: f64) -> f64 {
    if !(s >= 0.0) || !s.is_finite() {
        return f64::NAN;
    }
    bpsk_mi(s)
}

/// Cyclic transmission sets of size two.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jncc_topology_cyclic(m_s: usize, m_r: usize, out: *mut *mut JnccTopology) -> JnccStatus {
    guard(|| {
        non_null!(out);
        let t = algorithm1_transmission_sets(m_s, m_r).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(JnccTopology(t)));
        Ok(())
    })
}

/// Random transmission sets of size `n`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jncc_topology_random(
    m_s: usize,
    m_r: usize,
    n: usize,
    seed: u64,
    out: *mut *mut JnccTopology,
) -> JnccStatus {
    guard(|| {
        non_null!(out);
        let t = random_transmission_sets(m_s, m_r, n, seed).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(JnccTopology(t)));
        Ok(())
    })
}

/// # Safety
/// `topology` must come from a `jncc_topology_*` constructor (or be null)
/// and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn jncc_topology_free(topology: *mut JnccTopology) {
    if !topology.is_null() {
        drop(Box::from_raw(topology));
    }
}

/// Minimum number of relays carrying any one source.
///
/// # Safety
/// `topology` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jncc_topology_min_inclusions(topology: *const JnccTopology, out: *mut usize) -> JnccStatus {
    guard(|| {
        non_null!(topology, out);
        *out = t_min(&(*topology).0);
        Ok(())
    })
}

/// Erasure diversity metric of the coding matrix.
///
/// # Safety
/// `topology` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jncc_topology_coding_matrix_order(
    topology: *const JnccTopology,
    out: *mut usize,
) -> JnccStatus {
    guard(|| {
        non_null!(topology, out);
        *out = d_m(&coding_matrix(&(*topology).0));
        Ok(())
    })
}

/// Builds a network code; `variant` is a [`JnccVariant`] value. Slot codes come from a `(var_degree,
/// check_degree)`-regular ensemble and are ignored by network-only variants,
/// which need `k == l`.
///
/// # Safety
/// `topology` must be a live handle; `out` valid for writes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn jncc_code_build(
    topology: *const JnccTopology,
    variant: i32,
    l: usize,
    k: usize,
    var_degree: usize,
    check_degree: usize,
    seed: u64,
    out: *mut *mut JnccCode,
) -> JnccStatus {
    guard(|| {
        non_null!(topology, out);
        let t = &(*topology).0;
        let v = variant_from(variant).ok_or_else(|| invalid("unknown variant"))?;
        let code = if v.is_glnc_only() {
            if k != l {
                return Err(invalid("network-only variants need k == l"));
            }
            assemble(v, t, None, k, seed)
        } else {
            if var_degree < 2 || check_degree <= var_degree {
                return Err(invalid("need 2 <= var_degree < check_degree"));
            }
            let dd = DegreeDistributions::regular(var_degree, check_degree);
            build_p2p_code(&dd, l, k, seed).and_then(|p| assemble(v, t, Some(&p), k, seed))
        }
        .map_err(lib_err)?;
        *out = Box::into_raw(Box::new(JnccCode(code)));
        Ok(())
    })
}

/// # Safety
/// `code` must come from [`jncc_code_build`] (or be null) and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn jncc_code_free(code: *mut JnccCode) {
    if !code.is_null() {
        drop(Box::from_raw(code));
    }
}

/// Parity-check rows and columns, information bits per source and number
/// of sources. Any output pointer may be null.
///
/// # Safety
/// `code` must be a live handle; non-null outputs valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jncc_code_dims(
    code: *const JnccCode,
    rows: *mut usize,
    cols: *mut usize,
    info_bits: *mut usize,
    sources: *mut usize,
) -> JnccStatus {
    guard(|| {
        non_null!(code);
        let c = &(*code).0;
        for (p, v) in [(rows, c.h.rows()), (cols, c.h.cols()), (info_bits, c.k), (sources, c.m_s())] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Encodes `sources * info_bits` bytes (0 or 1, source-major) into a
/// codeword of `cols` bytes. All relays transmit.
///
/// # Safety
/// `code` must be a live handle; `info` readable for `info_len` bytes;
/// `out` writable for `out_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn jncc_code_encode(
    code: *const JnccCode,
    info: *const u8,
    info_len: usize,
    out: *mut u8,
    out_len: usize,
) -> JnccStatus {
    guard(|| {
        non_null!(code, info, out);
        let c = &(*code).0;
        if info_len != c.m_s() * c.k || out_len != c.len() {
            return Err(invalid("buffer length does not match the code"));
        }
        let info = std::slice::from_raw_parts(info, info_len);
        if info.iter().any(|&b| b > 1) {
            return Err(invalid("information bytes must be 0 or 1"));
        }
        let blocks: Vec<Vec<u8>> = info.chunks(c.k).map(<[u8]>::to_vec).collect();
        let cw = c.encode(&blocks, &[]).map_err(lib_err)?;
        std::slice::from_raw_parts_mut(out, out_len).copy_from_slice(&cw.bits);
        Ok(())
    })
}

/// Sets `*ok` to 1 when `bits` satisfies every parity check, else 0.
///
/// # Safety
/// `code` must be a live handle; `bits` readable for `len` bytes; `ok`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn jncc_code_check(
    code: *const JnccCode,
    bits: *const u8,
    len: usize,
    ok: *mut i32,
) -> JnccStatus {
    guard(|| {
        non_null!(code, bits, ok);
        let c = &(*code).0;
        if len != c.len() {
            return Err(invalid("codeword length does not match the code"));
        }
        *ok = c.h.syndrome_is_zero(std::slice::from_raw_parts(bits, len)) as i32;
        Ok(())
    })
}

/// Smallest number of erased nodes that loses information under peeling,
/// searching up to `max_erasures`; `max_erasures + 1` if none does.
///
/// # Safety
/// `code` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn jncc_code_erasure_order(
    code: *const JnccCode,
    max_erasures: usize,
    out: *mut usize,
) -> JnccStatus {
    guard(|| {
        non_null!(code, out);
        *out = verify_bec_diversity(&(*code).0, max_erasures, ErasureDecoder::Peeling);
        Ok(())
    })
}
