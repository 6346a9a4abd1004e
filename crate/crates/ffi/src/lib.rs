//! C ABI for the contagion-loss library.
//!
//! Every function here is callable from C through the generated
//! `include/treestars.h` header. Conventions:
//!
//! * Functions return a [`TsStatus`] code; out parameters are written only
//!   on [`TsStatus::Ok`].
//! * [`ts_config_parse`] allocates an opaque handle released by
//!   [`ts_config_free`]; strings returned through `char **` out parameters
//!   are released by [`ts_string_free`].
//! * After any failure, [`ts_last_error_message`] returns a thread-local
//!   description of the cause; the pointer stays valid until the next
//!   library call on the same thread.
//! * No call unwinds across the boundary: internal panics are caught and
//!   reported as [`TsStatus::Internal`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use treestars::analytic::{self, MomentPair, PremiumPrinciple};
use treestars::config::{parse_config, serialize_config, ExperimentConfig};
use treestars::montecarlo::{self, Estimate};
use treestars::report::{self, TableId};
use treestars::scenarios::ScenarioId;

/// Outcome of a library call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsStatus {
    /// Success; out parameters are filled in.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The configuration document failed to parse or validate.
    ParseError = 3,
    /// An argument was out of range for the operation.
    InvalidParams = 4,
    /// The model has no closed form for the request; use the simulation
    /// entry points instead.
    Unsupported = 5,
    /// An internal error; the library caught a panic instead of unwinding.
    Internal = 6,
}

/// Opaque handle to a parsed and validated experiment configuration.
pub struct TsConfig {
    inner: ExperimentConfig,
}

/// Exact mean and variance of a loss quantity.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsMoments {
    pub mean: f64,
    pub variance: f64,
}

/// Monte Carlo estimate of a loss quantity.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsEstimate {
    /// Sample mean of the per-replication loss.
    pub mean: f64,
    /// Sample standard deviation (unbiased variance's square root).
    pub sd: f64,
    /// Standard error of `mean`.
    pub se_mean: f64,
    /// Standard error of `sd`.
    pub se_sd: f64,
    /// Fraction of replications whose contagion event was degenerate
    /// (empty origin set, zero loss).
    pub degenerate_fraction: f64,
    /// Number of replications behind the estimate.
    pub replications: u64,
}

/// Premium loading rule applied on top of the aggregate moments.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsPremiumPrinciple {
    /// `(1 + delta) * mean`.
    Expectation = 0,
    /// `mean + delta * standard deviation`.
    StdDev = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl std::fmt::Display) {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).unwrap_or_default();
    });
}

fn fail(status: TsStatus, message: impl std::fmt::Display) -> TsStatus {
    set_error(message);
    status
}

fn null_pointer(name: &str) -> TsStatus {
    fail(TsStatus::NullPointer, format!("argument `{name}` is null"))
}

/// Runs a call body, translating panics into [`TsStatus::Internal`] so no
/// unwind ever crosses the C boundary.
fn guarded(body: impl FnOnce() -> TsStatus) -> TsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let message = payload
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| payload.downcast_ref::<&str>().copied())
                .unwrap_or("unknown panic");
            fail(TsStatus::Internal, format!("internal panic: {message}"))
        }
    }
}

fn scenario_from_number(number: u32) -> Option<ScenarioId> {
    ScenarioId::ALL
        .into_iter()
        .find(|s| u32::from(s.number()) == number)
}

fn estimate_out(est: &Estimate) -> TsEstimate {
    TsEstimate {
        mean: est.mean,
        sd: est.sd,
        se_mean: est.se_mean,
        se_sd: est.se_sd,
        degenerate_fraction: est.degenerate_fraction,
        replications: est.replications,
    }
}

fn string_out(text: String, out: *mut *mut c_char) -> TsStatus {
    match CString::new(text) {
        Ok(cstring) => {
            unsafe { *out = cstring.into_raw() };
            TsStatus::Ok
        }
        Err(_) => fail(
            TsStatus::Internal,
            "rendered text contains an interior NUL byte",
        ),
    }
}

/// Returns the library version as a static NUL-terminated string; do not
/// free it.
#[no_mangle]
pub extern "C" fn ts_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Returns a description of the most recent failure on the calling thread,
/// or an empty string if there was none. The pointer is owned by the
/// library and stays valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn ts_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parses a JSON experiment configuration into a new handle.
///
/// On success writes a handle to `*out`; release it with
/// [`ts_config_free`].
///
/// # Safety
///
/// `json` must point to a NUL-terminated string and `out` to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_config_parse(json: *const c_char, out: *mut *mut TsConfig) -> TsStatus {
    guarded(|| {
        if json.is_null() {
            return null_pointer("json");
        }
        if out.is_null() {
            return null_pointer("out");
        }
        let document = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(document) => document,
            Err(err) => return fail(TsStatus::InvalidUtf8, err),
        };
        match parse_config(document) {
            Ok(inner) => {
                let handle = Box::new(TsConfig { inner });
                unsafe { *out = Box::into_raw(handle) };
                TsStatus::Ok
            }
            Err(err) => fail(TsStatus::ParseError, err),
        }
    })
}

/// Serializes the configuration back to its canonical JSON document.
///
/// Release the returned string with [`ts_string_free`]. Parsing the output
/// again yields a configuration identical to `cfg`.
///
/// # Safety
///
/// `cfg` must be a live handle from [`ts_config_parse`] and `out` writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_config_to_json(
    cfg: *const TsConfig,
    out: *mut *mut c_char,
) -> TsStatus {
    guarded(|| {
        let Some(cfg) = (unsafe { cfg.as_ref() }) else {
            return null_pointer("cfg");
        };
        if out.is_null() {
            return null_pointer("out");
        }
        string_out(serialize_config(&cfg.inner), out)
    })
}

/// Releases a configuration handle. Passing null is a no-op.
///
/// # Safety
///
/// `cfg` must be null or a handle from [`ts_config_parse`] that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn ts_config_free(cfg: *mut TsConfig) {
    if !cfg.is_null() {
        drop(unsafe { Box::from_raw(cfg) });
    }
}

/// Releases a string returned by this library. Passing null is a no-op.
///
/// # Safety
///
/// `s` must be null or a string obtained from a `char **` out parameter of
/// this library that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn ts_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Computes the closed-form mean and variance of one contagion event of
/// the given scenario (1 = root contract, 2 = root user, 3 = external
/// contract, 4 = external user).
///
/// Returns [`TsStatus::Unsupported`] when the scenario has no closed form
/// under the configured model (external-origin scenarios require
/// deterministic degree pmfs and a non-empty origin set).
///
/// # Safety
///
/// `cfg` must be a live handle and `out` writable storage for one
/// [`TsMoments`].
#[no_mangle]
pub unsafe extern "C" fn ts_analytic_scenario(
    cfg: *const TsConfig,
    scenario: u32,
    out: *mut TsMoments,
) -> TsStatus {
    guarded(|| {
        let Some(cfg) = (unsafe { cfg.as_ref() }) else {
            return null_pointer("cfg");
        };
        if out.is_null() {
            return null_pointer("out");
        }
        let Some(s) = scenario_from_number(scenario) else {
            return fail(
                TsStatus::InvalidParams,
                format!("scenario must be 1..=4, got {scenario}"),
            );
        };
        match analytic::scenario_moments(&cfg.inner.params, s) {
            Ok(moments) => {
                unsafe {
                    *out = TsMoments {
                        mean: moments.mean,
                        variance: moments.variance,
                    };
                }
                TsStatus::Ok
            }
            Err(err) => fail(TsStatus::Unsupported, err),
        }
    })
}

/// Computes the closed-form mean and variance of the aggregate loss over
/// the configured horizon (event rate λ, length t, scenario weights).
///
/// Returns [`TsStatus::Unsupported`] when any positively weighted scenario
/// lacks a closed form.
///
/// # Safety
///
/// `cfg` must be a live handle and `out` writable storage for one
/// [`TsMoments`].
#[no_mangle]
pub unsafe extern "C" fn ts_analytic_aggregate(
    cfg: *const TsConfig,
    out: *mut TsMoments,
) -> TsStatus {
    guarded(|| {
        let Some(cfg) = (unsafe { cfg.as_ref() }) else {
            return null_pointer("cfg");
        };
        if out.is_null() {
            return null_pointer("out");
        }
        let params = &cfg.inner.params;
        let mut per_scenario = [MomentPair::new(0.0, 0.0); 4];
        for s in ScenarioId::ALL {
            if params.weights.get(s) == 0.0 {
                continue;
            }
            match analytic::scenario_moments(params, s) {
                Ok(moments) => per_scenario[s.index()] = moments,
                Err(err) => return fail(TsStatus::Unsupported, err),
            }
        }
        let combined =
            analytic::aggregate_moments(params.lambda, params.t, &params.weights, &per_scenario);
        unsafe {
            *out = TsMoments {
                mean: combined.mean,
                variance: combined.variance,
            };
        }
        TsStatus::Ok
    })
}

/// Applies a premium principle to aggregate loss moments with loading
/// `delta >= 0`.
///
/// # Safety
///
/// `moments` must point to a valid [`TsMoments`] and `out` to writable
/// storage for one double.
#[no_mangle]
pub unsafe extern "C" fn ts_premium(
    moments: *const TsMoments,
    delta: f64,
    principle: TsPremiumPrinciple,
    out: *mut f64,
) -> TsStatus {
    guarded(|| {
        let Some(moments) = (unsafe { moments.as_ref() }) else {
            return null_pointer("moments");
        };
        if out.is_null() {
            return null_pointer("out");
        }
        if !delta.is_finite() || delta < 0.0 {
            return fail(
                TsStatus::InvalidParams,
                format!("loading delta must be finite and >= 0, got {delta}"),
            );
        }
        if moments.variance < 0.0 {
            return fail(
                TsStatus::InvalidParams,
                format!("variance must be >= 0, got {}", moments.variance),
            );
        }
        let pair = MomentPair::new(moments.mean, moments.variance);
        let rule = match principle {
            TsPremiumPrinciple::Expectation => PremiumPrinciple::Expectation,
            TsPremiumPrinciple::StdDev => PremiumPrinciple::StdDev,
        };
        unsafe { *out = analytic::premium(&pair, delta, rule) };
        TsStatus::Ok
    })
}

/// Monte Carlo estimate of one scenario's per-event loss, using the
/// configuration's run block (`replications`, `seed`, `workers`) verbatim.
///
/// # Safety
///
/// `cfg` must be a live handle and `out` writable storage for one
/// [`TsEstimate`].
#[no_mangle]
pub unsafe extern "C" fn ts_simulate_scenario(
    cfg: *const TsConfig,
    scenario: u32,
    out: *mut TsEstimate,
) -> TsStatus {
    guarded(|| {
        let Some(cfg) = (unsafe { cfg.as_ref() }) else {
            return null_pointer("cfg");
        };
        if out.is_null() {
            return null_pointer("out");
        }
        let Some(s) = scenario_from_number(scenario) else {
            return fail(
                TsStatus::InvalidParams,
                format!("scenario must be 1..=4, got {scenario}"),
            );
        };
        if cfg.inner.run.replications == 0 {
            return fail(TsStatus::InvalidParams, "replications must be positive");
        }
        match montecarlo::estimate_scenario(&cfg.inner.params, s, &cfg.inner.run) {
            Ok(est) => {
                unsafe { *out = estimate_out(&est) };
                TsStatus::Ok
            }
            Err(err) => fail(TsStatus::InvalidParams, err),
        }
    })
}

/// Monte Carlo estimate of the aggregate loss over the configured horizon,
/// in the run mode the configuration selects (per-scenario combination or
/// direct horizon simulation).
///
/// # Safety
///
/// `cfg` must be a live handle and `out` writable storage for one
/// [`TsEstimate`].
#[no_mangle]
pub unsafe extern "C" fn ts_simulate_aggregate(
    cfg: *const TsConfig,
    out: *mut TsEstimate,
) -> TsStatus {
    guarded(|| {
        let Some(cfg) = (unsafe { cfg.as_ref() }) else {
            return null_pointer("cfg");
        };
        if out.is_null() {
            return null_pointer("out");
        }
        if cfg.inner.run.replications == 0 {
            return fail(TsStatus::InvalidParams, "replications must be positive");
        }
        match montecarlo::estimate_aggregate(&cfg.inner.params, &cfg.inner.run) {
            Ok(agg) => {
                unsafe { *out = estimate_out(&agg.aggregate) };
                TsStatus::Ok
            }
            Err(err) => fail(TsStatus::InvalidParams, err),
        }
    })
}

/// Runs the full experiment the configuration describes (analytic columns,
/// simulation columns, aggregate row with premiums, as enabled) and
/// returns the CSV report. The configuration's `output` path is ignored;
/// the text is returned instead. Release it with [`ts_string_free`].
///
/// # Safety
///
/// `cfg` must be a live handle and `out` writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_experiment_csv(
    cfg: *const TsConfig,
    out: *mut *mut c_char,
) -> TsStatus {
    guarded(|| {
        let Some(cfg) = (unsafe { cfg.as_ref() }) else {
            return null_pointer("cfg");
        };
        if out.is_null() {
            return null_pointer("out");
        }
        match report::run_experiment(&cfg.inner) {
            Ok(rows) => string_out(report::render_csv(&rows), out),
            Err(err) => fail(TsStatus::InvalidParams, err),
        }
    })
}

/// Reproduces one of the two preset benchmark grids (`table` is 2 or 3) as
/// a CSV report and returns it; release the string with
/// [`ts_string_free`]. `replications == 0` emits the analytic columns
/// only; otherwise every row simulates with `replications` events, row `i`
/// seeded with `seed + i`, on `workers` threads.
///
/// # Safety
///
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_tables_csv(
    table: u32,
    replications: u64,
    seed: u64,
    workers: u32,
    out: *mut *mut c_char,
) -> TsStatus {
    guarded(|| {
        if out.is_null() {
            return null_pointer("out");
        }
        let table = match table {
            2 => TableId::Table2,
            3 => TableId::Table3,
            other => {
                return fail(
                    TsStatus::InvalidParams,
                    format!("table must be 2 or 3, got {other}"),
                )
            }
        };
        match report::reproduce_tables(table, replications, seed, workers as usize) {
            Ok(rows) => string_out(report::render_csv(&rows), out),
            Err(err) => fail(TsStatus::InvalidParams, err),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    fn sample_config_json() -> CString {
        CString::new(
            r#"{
                "offspring_pmf": [0.0, 0.0, 1.0],
                "user_pmf": [0.0, 0.0, 0.0, 0.0, 1.0],
                "radius": 2,
                "p": 0.8,
                "q": 0.8,
                "cost_contract": {"family": "point", "mean": 10000.0, "sd": 0.0},
                "cost_user": {"family": "point", "mean": 1000.0, "sd": 0.0},
                "scenario_weights": [1.0, 0.0, 0.0, 0.0],
                "lambda": 1.0,
                "t": 1.0,
                "loading_delta": 0.1,
                "replications": 20000,
                "seed": 42,
                "workers": 1,
                "mode": "per-scenario"
            }"#,
        )
        .unwrap()
    }

    fn parse_sample() -> *mut TsConfig {
        let json = sample_config_json();
        let mut handle: *mut TsConfig = ptr::null_mut();
        let status = unsafe { ts_config_parse(json.as_ptr(), &mut handle) };
        assert_eq!(status, TsStatus::Ok);
        assert!(!handle.is_null());
        handle
    }

    fn last_error() -> String {
        unsafe { CStr::from_ptr(ts_last_error_message()) }
            .to_str()
            .unwrap()
            .to_string()
    }

    #[test]
    fn version_is_a_static_string() {
        let version = unsafe { CStr::from_ptr(ts_version()) }.to_str().unwrap();
        assert_eq!(version, env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn parse_rejects_null_and_bad_documents() {
        let mut handle: *mut TsConfig = ptr::null_mut();
        assert_eq!(
            unsafe { ts_config_parse(ptr::null(), &mut handle) },
            TsStatus::NullPointer
        );
        assert!(last_error().contains("json"));

        let bad = CString::new("{\"radius\": 2}").unwrap();
        assert_eq!(
            unsafe { ts_config_parse(bad.as_ptr(), &mut handle) },
            TsStatus::ParseError
        );
        assert!(!last_error().is_empty());
        assert!(handle.is_null(), "failed parse must not write the handle");
    }

    #[test]
    fn analytic_scenario_matches_the_core_library() {
        let handle = parse_sample();
        let mut out = TsMoments {
            mean: 0.0,
            variance: 0.0,
        };
        let status = unsafe { ts_analytic_scenario(handle, 1, &mut out) };
        assert_eq!(status, TsStatus::Ok);
        assert!((out.mean - 68_112.0).abs() < 1e-6);
        assert!(out.variance > 0.0);

        assert_eq!(
            unsafe { ts_analytic_scenario(handle, 5, &mut out) },
            TsStatus::InvalidParams
        );
        unsafe { ts_config_free(handle) };
    }

    #[test]
    fn analytic_aggregate_and_premium_round_through() {
        let handle = parse_sample();
        let mut moments = TsMoments {
            mean: 0.0,
            variance: 0.0,
        };
        assert_eq!(
            unsafe { ts_analytic_aggregate(handle, &mut moments) },
            TsStatus::Ok
        );
        // Only scenario 1 carries weight, so the aggregate over λt = 1
        // equals the per-event mean.
        assert!((moments.mean - 68_112.0).abs() < 1e-6);

        let mut loaded = 0.0;
        assert_eq!(
            unsafe { ts_premium(&moments, 0.1, TsPremiumPrinciple::Expectation, &mut loaded) },
            TsStatus::Ok
        );
        assert!((loaded - 1.1 * moments.mean).abs() < 1e-6);
        assert_eq!(
            unsafe { ts_premium(&moments, -1.0, TsPremiumPrinciple::StdDev, &mut loaded) },
            TsStatus::InvalidParams
        );
        unsafe { ts_config_free(handle) };
    }

    #[test]
    fn stochastic_degrees_make_external_scenarios_unsupported() {
        let json = sample_config_json()
            .into_string()
            .unwrap()
            .replace("[0.0, 0.0, 1.0]", "[0.0, 0.4, 0.6]");
        let json = CString::new(json).unwrap();
        let mut handle: *mut TsConfig = ptr::null_mut();
        assert_eq!(
            unsafe { ts_config_parse(json.as_ptr(), &mut handle) },
            TsStatus::Ok
        );
        let mut out = TsMoments {
            mean: 0.0,
            variance: 0.0,
        };
        assert_eq!(
            unsafe { ts_analytic_scenario(handle, 3, &mut out) },
            TsStatus::Unsupported
        );
        assert!(last_error().contains("closed form"));
        unsafe { ts_config_free(handle) };
    }

    #[test]
    fn simulation_entry_points_agree_with_the_core_library() {
        let handle = parse_sample();
        let mut est = TsEstimate {
            mean: 0.0,
            sd: 0.0,
            se_mean: 0.0,
            se_sd: 0.0,
            degenerate_fraction: 0.0,
            replications: 0,
        };
        assert_eq!(
            unsafe { ts_simulate_scenario(handle, 1, &mut est) },
            TsStatus::Ok
        );
        assert_eq!(est.replications, 20_000);

        let cfg = unsafe { &*handle };
        let reference =
            montecarlo::estimate_scenario(&cfg.inner.params, ScenarioId::RootContract, &cfg.inner.run)
                .unwrap();
        assert_eq!(est.mean.to_bits(), reference.mean.to_bits());
        assert_eq!(est.sd.to_bits(), reference.sd.to_bits());

        let mut agg = est;
        assert_eq!(unsafe { ts_simulate_aggregate(handle, &mut agg) }, TsStatus::Ok);
        assert!(agg.mean > 0.0);
        unsafe { ts_config_free(handle) };
    }

    #[test]
    fn config_json_round_trips_to_an_identical_document() {
        let handle = parse_sample();
        let mut first: *mut c_char = ptr::null_mut();
        assert_eq!(unsafe { ts_config_to_json(handle, &mut first) }, TsStatus::Ok);
        let text = unsafe { CStr::from_ptr(first) }.to_str().unwrap().to_string();

        let mut reparsed: *mut TsConfig = ptr::null_mut();
        let as_c = CString::new(text.clone()).unwrap();
        assert_eq!(
            unsafe { ts_config_parse(as_c.as_ptr(), &mut reparsed) },
            TsStatus::Ok
        );
        let mut second: *mut c_char = ptr::null_mut();
        assert_eq!(
            unsafe { ts_config_to_json(reparsed, &mut second) },
            TsStatus::Ok
        );
        let text2 = unsafe { CStr::from_ptr(second) }.to_str().unwrap();
        assert_eq!(text, text2);

        unsafe {
            ts_string_free(first);
            ts_string_free(second);
            ts_config_free(handle);
            ts_config_free(reparsed);
        }
    }

    #[test]
    fn experiment_csv_contains_scenario_and_aggregate_rows() {
        let handle = parse_sample();
        let mut csv: *mut c_char = ptr::null_mut();
        assert_eq!(unsafe { ts_experiment_csv(handle, &mut csv) }, TsStatus::Ok);
        let text = unsafe { CStr::from_ptr(csv) }.to_str().unwrap();
        assert!(text.starts_with("scenario,"));
        assert!(text.contains("\naggregate,"));
        unsafe {
            ts_string_free(csv);
            ts_config_free(handle);
        }
    }

    #[test]
    fn tables_csv_emits_the_preset_grids() {
        let mut csv: *mut c_char = ptr::null_mut();
        assert_eq!(
            unsafe { ts_tables_csv(2, 0, 42, 1, &mut csv) },
            TsStatus::Ok
        );
        let text = unsafe { CStr::from_ptr(csv) }.to_str().unwrap();
        // Header plus 48 grid rows.
        assert_eq!(text.lines().count(), 49);
        unsafe { ts_string_free(csv) };

        assert_eq!(
            unsafe { ts_tables_csv(7, 0, 42, 1, &mut csv) },
            TsStatus::InvalidParams
        );
        assert!(last_error().contains("table"));
    }
}
