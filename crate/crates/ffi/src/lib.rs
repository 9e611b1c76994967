//! C ABI over `snn-iir`.
//!
//! Networks live behind an opaque `SnnNetwork` handle. Every function returns an
//! `SnnStatus`; on failure `snn_last_error()` describes the most recent error on the
//! calling thread. Spike arrays are row-major `u8` buffers of `horizon * channels`
//! entries, each 0 or 1. No Rust panic crosses the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use snn_iir::cli::commands::build_network;
use snn_iir::data::{load_checkpoint, save_checkpoint, Checkpoint};
use snn_iir::training::{van_rossum_distance, AdamState};
use snn_iir::{network_forward, Error, FilterCoeffs, NeuronParams, SpikeTensor};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    Io = 4,
    Parse = 5,
    UnsupportedVersion = 6,
    UnstableFilter = 7,
    Config = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Opaque network handle.
pub struct SnnNetwork {
    ckpt: Checkpoint,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(SnnStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parameter { .. } | Error::DegenerateKernel(_) | Error::OutOfRange { .. } | Error::EmptyDataset => {
                SnnStatus::InvalidArgument
            }
            Error::UnstableFilter { .. } => SnnStatus::UnstableFilter,
            Error::Shape { .. } => SnnStatus::ShapeMismatch,
            Error::Io { .. } => SnnStatus::Io,
            Error::Parse { .. } | Error::Csv { .. } => SnnStatus::Parse,
            Error::UnsupportedVersion { .. } => SnnStatus::UnsupportedVersion,
            Error::Config { .. } => SnnStatus::Config,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SnnStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SnnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SnnStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SnnStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SnnStatus::InvalidArgument, format!("`{what}` is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn net_ref<'a>(net: *const SnnNetwork) -> Result<&'a SnnNetwork, Failure> {
    net.as_ref().ok_or_else(|| null("net"))
}

unsafe fn spikes_arg(data: *const u8, horizon: usize, channels: usize, what: &str) -> Result<SpikeTensor, Failure> {
    let len = horizon
        .checked_mul(channels)
        .ok_or_else(|| Failure(SnnStatus::InvalidArgument, "horizon * channels overflows".into()))?;
    if data.is_null() && len > 0 {
        return Err(null(what));
    }
    let slice = if len == 0 {
        &[][..]
    } else {
        std::slice::from_raw_parts(data, len)
    };
    Ok(SpikeTensor::from_vec(horizon, channels, slice.to_vec())?)
}

fn store<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    unsafe { out.write(value) };
    Ok(())
}

fn boxed(ckpt: Checkpoint, out: *mut *mut SnnNetwork) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    unsafe { out.write(Box::into_raw(Box::new(SnnNetwork { ckpt }))) };
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn snn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn snn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a checkpoint. On success `*out` owns a handle to release with `snn_network_free`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn snn_network_load(path: *const c_char, out: *mut *mut SnnNetwork) -> SnnStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        boxed(load_checkpoint(path)?, out)
    })
}

/// Builds a freshly initialized network from a TOML run config.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn snn_network_from_config(path: *const c_char, out: *mut *mut SnnNetwork) -> SnnStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        let cfg = snn_iir::cli::RunConfig::load(path)?;
        let network = build_network(&cfg)?;
        let optimizer = AdamState::for_network(cfg.optimizer.build(), &network);
        boxed(
            Checkpoint {
                network,
                optimizer,
                seed: cfg.seed,
                epoch: 0,
            },
            out,
        )
    })
}

/// # Safety
/// `net` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn snn_network_save(net: *const SnnNetwork, path: *const c_char) -> SnnStatus {
    guard(|| {
        let net = net_ref(net)?;
        let path = path_arg(path, "path")?;
        Ok(save_checkpoint(&net.ckpt, path)?)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `net` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn snn_network_free(net: *mut SnnNetwork) {
    if !net.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(net))));
    }
}

/// Number of layers, input layer excluded.
///
/// # Safety
/// `net` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn snn_network_num_layers(net: *const SnnNetwork, out: *mut usize) -> SnnStatus {
    guard(|| store(out, net_ref(net)?.ckpt.network.layers().len(), "out"))
}

/// Width of layer `index`, where 0 is the input and `num_layers` the output.
///
/// # Safety
/// `net` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn snn_network_width(net: *const SnnNetwork, index: usize, out: *mut usize) -> SnnStatus {
    guard(|| {
        let sizes = net_ref(net)?.ckpt.network.sizes();
        let w = *sizes.get(index).ok_or_else(|| {
            Failure(
                SnnStatus::InvalidArgument,
                format!("width index {index} out of range for {} entries", sizes.len()),
            )
        })?;
        store(out, w, "out")
    })
}

/// Length of the flat parameter vector.
///
/// # Safety
/// `net` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn snn_network_num_params(net: *const SnnNetwork, out: *mut usize) -> SnnStatus {
    guard(|| store(out, net_ref(net)?.ckpt.network.num_params(), "out"))
}

/// Copies the flat parameter vector into `buf`, which must hold `num_params` values.
///
/// # Safety
/// `net` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn snn_network_params(net: *const SnnNetwork, buf: *mut f64, len: usize) -> SnnStatus {
    guard(|| {
        let params = net_ref(net)?.ckpt.network.params();
        if len < params.len() {
            return Err(Failure(
                SnnStatus::BufferTooSmall,
                format!("buffer holds {len} values, {} needed", params.len()),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        std::slice::from_raw_parts_mut(buf, params.len()).copy_from_slice(&params);
        Ok(())
    })
}

/// Runs the network on `input` (`horizon` x input width) and writes the output spikes
/// (`horizon` x output width) to `output`, whose capacity is `output_len`.
///
/// # Safety
/// `net` must be a live handle, `input` valid for `horizon * channels` reads and
/// `output` valid for `output_len` writes.
#[no_mangle]
pub unsafe extern "C" fn snn_network_forward(
    net: *const SnnNetwork,
    input: *const u8,
    horizon: usize,
    channels: usize,
    output: *mut u8,
    output_len: usize,
) -> SnnStatus {
    guard(|| {
        let net = &net_ref(net)?.ckpt.network;
        let input = spikes_arg(input, horizon, channels, "input")?;
        let result = network_forward(net, &input, false)?;
        let spikes = result.output.as_slice();
        if output_len < spikes.len() {
            return Err(Failure(
                SnnStatus::BufferTooSmall,
                format!("output holds {output_len} values, {} needed", spikes.len()),
            ));
        }
        if output.is_null() && !spikes.is_empty() {
            return Err(null("output"));
        }
        if !spikes.is_empty() {
            std::slice::from_raw_parts_mut(output, spikes.len()).copy_from_slice(spikes);
        }
        Ok(())
    })
}

/// Difference-equation coefficients of the dual-exponential kernel: `feedback[2]` gets
/// the two recursive taps and `feedforward[2]` the input taps at delays 0 and 1.
///
/// # Safety
/// `feedback` and `feedforward` must each be valid for 2 writes.
#[no_mangle]
pub unsafe extern "C" fn snn_dual_exp_coeffs(
    tau_m: f64,
    tau_s: f64,
    feedback: *mut f64,
    feedforward: *mut f64,
) -> SnnStatus {
    guard(|| {
        if feedback.is_null() {
            return Err(null("feedback"));
        }
        if feedforward.is_null() {
            return Err(null("feedforward"));
        }
        let f = FilterCoeffs::dual_exp(tau_m, tau_s)?;
        std::slice::from_raw_parts_mut(feedback, 2).copy_from_slice(f.feedback());
        std::slice::from_raw_parts_mut(feedforward, 2).copy_from_slice(f.feedforward());
        Ok(())
    })
}

/// Van Rossum distance between two spike trains of equal shape under a dual-exp kernel.
///
/// # Safety
/// `a` and `b` must each be valid for `horizon * channels` reads and `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn snn_van_rossum_distance(
    a: *const u8,
    b: *const u8,
    horizon: usize,
    channels: usize,
    tau_m: f64,
    tau_s: f64,
    out: *mut f64,
) -> SnnStatus {
    guard(|| {
        let a = spikes_arg(a, horizon, channels, "a")?;
        let b = spikes_arg(b, horizon, channels, "b")?;
        let kernel = FilterCoeffs::dual_exp(tau_m, tau_s)?;
        store(out, van_rossum_distance(&a, &b, &kernel)?, "out")
    })
}

/// Surrogate spike derivative at membrane potential `v`, or NaN for invalid parameters
/// (see `snn_last_error`).
#[no_mangle]
pub extern "C" fn snn_surrogate_grad(v: f64, v_th: f64, sigma: f64) -> f64 {
    let mut value = f64::NAN;
    guard(|| {
        let params = NeuronParams::new(0.0, 0.0, v_th, sigma)?;
        value = snn_iir::surrogate_grad(v, &params);
        Ok(())
    });
    value
}

/// Soft spike probability at membrane potential `v`, or NaN for invalid parameters.
#[no_mangle]
pub extern "C" fn snn_spike_probability(v: f64, v_th: f64, sigma: f64) -> f64 {
    let mut value = f64::NAN;
    guard(|| {
        let params = NeuronParams::new(0.0, 0.0, v_th, sigma)?;
        value = snn_iir::spike_probability(v, &params);
        Ok(())
    });
    value
}
