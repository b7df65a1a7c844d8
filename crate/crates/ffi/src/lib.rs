//! C ABI over the determination-depth library.
//!
//! Conventions: every function returns a `DdStatus`; results travel through
//! out-pointers; heap objects are opaque handles released by their paired
//! `_free` function. String inputs are NUL-terminated UTF-8. After any
//! non-OK status, `dd_last_error_message` returns a thread-local description
//! valid until the next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use detdepth::depth::{online_minmax_depth, DepthValue};
use detdepth::games::{parse_tree_json, spe_annotate, strategic_depth, GameTree};
use detdepth::genchain::{
    estimate_resolution_probability, LayerAssignment, Policy, StrategyRun,
};
use detdepth::matching::{
    build_rotation_poset, count_downsets, matching_depth_oracle, parse_instance_json,
    poset_height, MatchError, MatchingInstance,
};
use detdepth::metacomplexity::{
    depth_game_decide, min_decision_tree_depth, parse_qbf_json, qbf_to_depth_instance,
    ScheduleMode, TruthTable,
};
use detdepth::spec::CompiledSpec;

/// Status code for every FFI entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DdStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Input text failed to parse or validate.
    Parse = 3,
    /// The operation failed on a valid input (caps, domain errors).
    Domain = 4,
    /// The spec admits no resolving strategy; no depth exists.
    Unresolvable = 5,
    /// A panic was caught at the boundary; state is unchanged.
    Internal = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(sanitized).unwrap());
}

fn fail(status: DdStatus, msg: &str) -> DdStatus {
    set_error(msg);
    status
}

/// Message for the most recent failure on this thread. Never NULL; empty
/// before any failure. The pointer is invalidated by the next failing call.
#[no_mangle]
pub extern "C" fn dd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Result<&'a str, DdStatus> {
    if ptr.is_null() {
        return Err(fail(DdStatus::NullArgument, "string argument is NULL"));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| fail(DdStatus::InvalidUtf8, "string argument is not UTF-8"))
}

fn guarded(body: impl FnOnce() -> DdStatus) -> DdStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(DdStatus::Internal, "internal panic"),
    }
}

// ---------------------------------------------------------------------------
// Specs

/// Opaque compiled specification handle.
pub struct DdSpec {
    inner: CompiledSpec,
}

/// Parses an explicit spec document (JSON) into a compiled handle.
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` must be a valid
/// pointer. On success `*out` owns the handle and must be released with
/// `dd_spec_free`.
#[no_mangle]
pub unsafe extern "C" fn dd_spec_parse(json: *const c_char, out: *mut *mut DdSpec) -> DdStatus {
    guarded(|| {
        if out.is_null() {
            return fail(DdStatus::NullArgument, "out pointer is NULL");
        }
        let text = match utf8_arg(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let parsed: detdepth::spec::ExplicitSpec = match serde_json::from_str(text) {
            Ok(p) => p,
            Err(e) => return fail(DdStatus::Parse, &format!("spec document: {e}")),
        };
        match parsed.compile() {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(DdSpec { inner }));
                DdStatus::Ok
            }
            Err(e) => fail(DdStatus::Parse, &format!("spec compile: {e}")),
        }
    })
}

/// Releases a spec handle. NULL is a no-op.
///
/// # Safety
/// `spec` must be NULL or a pointer from `dd_spec_parse` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dd_spec_free(spec: *mut DdSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Adaptive worst-case depth of the spec. Fails with `Unresolvable` when no
/// strategy resolves every environment line.
///
/// # Safety
/// `spec` must be a live handle; `out_depth` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dd_spec_online_depth(spec: *const DdSpec, out_depth: *mut u64) -> DdStatus {
    guarded(|| {
        let (Some(spec), false) = (spec.as_ref(), out_depth.is_null()) else {
            return fail(DdStatus::NullArgument, "spec or out pointer is NULL");
        };
        match online_minmax_depth(&spec.inner) {
            Ok(DepthValue::Finite(d)) => {
                *out_depth = d;
                DdStatus::Ok
            }
            Ok(DepthValue::Unresolvable) => fail(DdStatus::Unresolvable, "spec cannot be resolved"),
            Err(e) => fail(DdStatus::Domain, &e.to_string()),
        }
    })
}

/// Checks the shrinkage invariant on every history up to the horizon.
/// `*out_ok` is 1 when no violation exists.
///
/// # Safety
/// `spec` must be a live handle; `out_ok` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dd_spec_validate_shrinkage(spec: *const DdSpec, out_ok: *mut i32) -> DdStatus {
    guarded(|| {
        let (Some(spec), false) = (spec.as_ref(), out_ok.is_null()) else {
            return fail(DdStatus::NullArgument, "spec or out pointer is NULL");
        };
        match spec.inner.validate_shrinkage() {
            Ok(report) => {
                *out_ok = i32::from(report.violations.is_empty());
                DdStatus::Ok
            }
            Err(e) => fail(DdStatus::Domain, &e.to_string()),
        }
    })
}

// ---------------------------------------------------------------------------
// Constraint chains

/// Monte Carlo estimate of parallel-strategy success on random constraint
/// chains. `policy` is 0 for uniform guessing, 1 for validity-filtered
/// guessing. Writes mean and standard error.
///
/// # Safety
/// `out_mean` and `out_stderr` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dd_chain_separation(
    k: u32,
    m: u32,
    s: u32,
    d_prime: u32,
    width: u32,
    policy: u32,
    trials: u32,
    seed: u64,
    out_mean: *mut f64,
    out_stderr: *mut f64,
) -> DdStatus {
    guarded(|| {
        if out_mean.is_null() || out_stderr.is_null() {
            return fail(DdStatus::NullArgument, "out pointer is NULL");
        }
        let policy = match policy {
            0 => Policy::UniformGuess,
            1 => Policy::ValidGreedy,
            other => return fail(DdStatus::Domain, &format!("unknown policy {other}")),
        };
        let assignment = match LayerAssignment::contiguous(k as usize, d_prime as usize) {
            Ok(a) => a,
            Err(e) => return fail(DdStatus::Domain, &e.to_string()),
        };
        let run = StrategyRun { assignment, width: width as usize, policy };
        match estimate_resolution_probability(k as usize, m as usize, s as usize, &run, trials as usize, seed) {
            Ok(est) => {
                *out_mean = est.strategy_mean;
                *out_stderr = est.strategy_stderr;
                DdStatus::Ok
            }
            Err(e) => fail(DdStatus::Domain, &e.to_string()),
        }
    })
}

// ---------------------------------------------------------------------------
// Stable matching

/// Opaque stable-matching instance handle.
pub struct DdMatching {
    inner: MatchingInstance,
}

/// Parses an instance document (JSON: n, men_prefs, women_prefs).
///
/// # Safety
/// As for `dd_spec_parse`; release with `dd_matching_free`.
#[no_mangle]
pub unsafe extern "C" fn dd_matching_parse(json: *const c_char, out: *mut *mut DdMatching) -> DdStatus {
    guarded(|| {
        if out.is_null() {
            return fail(DdStatus::NullArgument, "out pointer is NULL");
        }
        let text = match utf8_arg(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_instance_json(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(DdMatching { inner }));
                DdStatus::Ok
            }
            Err(e) => fail(DdStatus::Parse, &e.to_string()),
        }
    })
}

/// Releases a matching handle. NULL is a no-op.
///
/// # Safety
/// `m` must be NULL or a pointer from `dd_matching_parse` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dd_matching_free(m: *mut DdMatching) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Rotation-poset height of the instance, the depth of layered resolution.
///
/// # Safety
/// `m` must be a live handle; `out_height` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dd_matching_height(m: *const DdMatching, out_height: *mut u64) -> DdStatus {
    guarded(|| {
        let (Some(m), false) = (m.as_ref(), out_height.is_null()) else {
            return fail(DdStatus::NullArgument, "matching or out pointer is NULL");
        };
        let poset = match build_rotation_poset(&m.inner) {
            Ok(p) => p,
            Err(e) => return fail(DdStatus::Domain, &e.to_string()),
        };
        match poset_height(&poset) {
            Ok(h) => {
                *out_height = h as u64;
                DdStatus::Ok
            }
            Err(e) => fail(DdStatus::Domain, &e.to_string()),
        }
    })
}

/// Number of stable matchings, counted as downsets of the rotation poset.
///
/// # Safety
/// `m` must be a live handle; `out_count` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dd_matching_stable_count(m: *const DdMatching, out_count: *mut u64) -> DdStatus {
    guarded(|| {
        let (Some(m), false) = (m.as_ref(), out_count.is_null()) else {
            return fail(DdStatus::NullArgument, "matching or out pointer is NULL");
        };
        let poset = match build_rotation_poset(&m.inner) {
            Ok(p) => p,
            Err(e) => return fail(DdStatus::Domain, &e.to_string()),
        };
        match count_downsets(&poset) {
            Ok(c) => {
                *out_count = c;
                DdStatus::Ok
            }
            Err(e) => fail(DdStatus::Domain, &e.to_string()),
        }
    })
}

/// Layer-minimization oracle over the instance's rotation commitments.
/// Fails with `Domain` when the instance has too many rotations for the
/// exhaustive oracle.
///
/// # Safety
/// `m` must be a live handle; `out_depth` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dd_matching_depth_oracle(m: *const DdMatching, out_depth: *mut u64) -> DdStatus {
    guarded(|| {
        let (Some(m), false) = (m.as_ref(), out_depth.is_null()) else {
            return fail(DdStatus::NullArgument, "matching or out pointer is NULL");
        };
        match matching_depth_oracle(&m.inner) {
            Ok(d) => {
                *out_depth = d as u64;
                DdStatus::Ok
            }
            Err(e @ MatchError::TooManyRotations { .. }) => fail(DdStatus::Domain, &e.to_string()),
            Err(e) => fail(DdStatus::Domain, &e.to_string()),
        }
    })
}

// ---------------------------------------------------------------------------
// Decision trees and QBF

/// Exact minimum decision-tree depth of a truth table given as little-endian
/// hex over `n` variables (f(0) is the least significant bit).
///
/// # Safety
/// `hex` must be a valid NUL-terminated string; `out_depth` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dd_dtree_min_depth(n: u32, hex: *const c_char, out_depth: *mut u64) -> DdStatus {
    guarded(|| {
        if out_depth.is_null() {
            return fail(DdStatus::NullArgument, "out pointer is NULL");
        }
        let text = match utf8_arg(hex) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let table = match TruthTable::from_hex(n as usize, text) {
            Ok(t) => t,
            Err(e) => return fail(DdStatus::Parse, &e.to_string()),
        };
        match min_decision_tree_depth(&table) {
            Ok(d) => {
                *out_depth = d as u64;
                DdStatus::Ok
            }
            Err(e) => fail(DdStatus::Domain, &e.to_string()),
        }
    })
}

/// Decides a QBF document (JSON: prefix blocks, matrix) through the
/// pinned-order determination game. `*out_truth` is 1 when true.
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out_truth` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dd_qbf_decide(json: *const c_char, out_truth: *mut i32) -> DdStatus {
    guarded(|| {
        if out_truth.is_null() {
            return fail(DdStatus::NullArgument, "out pointer is NULL");
        }
        let text = match utf8_arg(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let qbf = match parse_qbf_json(text) {
            Ok(q) => q,
            Err(e) => return fail(DdStatus::Parse, &e.to_string()),
        };
        let instance = match qbf_to_depth_instance(&qbf) {
            Ok(i) => i,
            Err(e) => return fail(DdStatus::Domain, &e.to_string()),
        };
        match depth_game_decide(&instance, ScheduleMode::Adaptive) {
            Ok(truth) => {
                *out_truth = i32::from(truth);
                DdStatus::Ok
            }
            Err(e) => fail(DdStatus::Domain, &e.to_string()),
        }
    })
}

// ---------------------------------------------------------------------------
// Games

/// Opaque game-tree handle.
pub struct DdGame {
    inner: GameTree,
}

/// Parses a game-tree document (nested JSON nodes).
///
/// # Safety
/// As for `dd_spec_parse`; release with `dd_game_free`.
#[no_mangle]
pub unsafe extern "C" fn dd_game_parse(json: *const c_char, out: *mut *mut DdGame) -> DdStatus {
    guarded(|| {
        if out.is_null() {
            return fail(DdStatus::NullArgument, "out pointer is NULL");
        }
        let text = match utf8_arg(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_tree_json(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(DdGame { inner }));
                DdStatus::Ok
            }
            Err(e) => fail(DdStatus::Parse, &e.to_string()),
        }
    })
}

/// Releases a game handle. NULL is a no-op.
///
/// # Safety
/// `g` must be NULL or a pointer from `dd_game_parse` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dd_game_free(g: *mut DdGame) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Strategic depth: maximum number of subgame-non-trivial determiner nodes
/// on any root-to-leaf path.
///
/// # Safety
/// `g` must be a live handle; `out_depth` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dd_game_strategic_depth(g: *const DdGame, out_depth: *mut u64) -> DdStatus {
    guarded(|| {
        let (Some(g), false) = (g.as_ref(), out_depth.is_null()) else {
            return fail(DdStatus::NullArgument, "game or out pointer is NULL");
        };
        match spe_annotate(&g.inner) {
            Ok(ann) => {
                *out_depth = strategic_depth(&g.inner, &ann) as u64;
                DdStatus::Ok
            }
            Err(e) => fail(DdStatus::Domain, &e.to_string()),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    fn cstring(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    fn last_error() -> String {
        unsafe { CStr::from_ptr(dd_last_error_message()) }.to_string_lossy().into_owned()
    }

    const FLAT_SPEC: &str = r#"{
        "outcomes": ["a", "b"],
        "horizon": 3,
        "env_moves": [],
        "basis": [
            {"name": "keep_a", "pointwise": {"retain": ["a"]}},
            {"name": "keep_b", "pointwise": {"retain": ["b"]}}
        ],
        "admissible_table": [{"env_history": [], "admissible": ["a", "b"]}]
    }"#;

    #[test]
    fn spec_parse_depth_and_shrinkage() {
        let json = cstring(FLAT_SPEC);
        let mut spec: *mut DdSpec = ptr::null_mut();
        assert_eq!(unsafe { dd_spec_parse(json.as_ptr(), &mut spec) }, DdStatus::Ok);
        assert!(!spec.is_null());

        let mut depth = u64::MAX;
        assert_eq!(unsafe { dd_spec_online_depth(spec, &mut depth) }, DdStatus::Ok);
        assert_eq!(depth, 1);

        let mut ok = 0;
        assert_eq!(unsafe { dd_spec_validate_shrinkage(spec, &mut ok) }, DdStatus::Ok);
        assert_eq!(ok, 1);

        unsafe { dd_spec_free(spec) };
    }

    #[test]
    fn parse_failures_set_the_message() {
        let json = cstring("{\"outcomes\": 3}");
        let mut spec: *mut DdSpec = ptr::null_mut();
        assert_eq!(unsafe { dd_spec_parse(json.as_ptr(), &mut spec) }, DdStatus::Parse);
        assert!(spec.is_null());
        assert!(last_error().contains("spec document"));

        assert_eq!(
            unsafe { dd_spec_parse(ptr::null(), &mut spec) },
            DdStatus::NullArgument
        );
    }

    #[test]
    fn chain_separation_matches_library_call() {
        let mut mean = -1.0;
        let mut stderr = -1.0;
        let status = unsafe {
            dd_chain_separation(4, 8, 2, 3, 1, 0, 5000, 42, &mut mean, &mut stderr)
        };
        assert_eq!(status, DdStatus::Ok);
        let run = StrategyRun {
            assignment: LayerAssignment::contiguous(4, 3).unwrap(),
            width: 1,
            policy: Policy::UniformGuess,
        };
        let direct = estimate_resolution_probability(4, 8, 2, &run, 5000, 42).unwrap();
        assert_eq!(mean, direct.strategy_mean);
        assert_eq!(stderr, direct.strategy_stderr);
    }

    #[test]
    fn matching_handle_reports_poset_facts() {
        let json = cstring(
            r#"{"n":3,
                "men_prefs":[[0,1,2],[1,2,0],[2,0,1]],
                "women_prefs":[[0,1,2],[1,2,0],[2,0,1]]}"#,
        );
        let mut m: *mut DdMatching = ptr::null_mut();
        assert_eq!(unsafe { dd_matching_parse(json.as_ptr(), &mut m) }, DdStatus::Ok);

        let mut height = u64::MAX;
        assert_eq!(unsafe { dd_matching_height(m, &mut height) }, DdStatus::Ok);
        assert_eq!(height, 0);

        let mut count = 0;
        assert_eq!(unsafe { dd_matching_stable_count(m, &mut count) }, DdStatus::Ok);
        assert_eq!(count, 1);

        let mut depth = u64::MAX;
        assert_eq!(unsafe { dd_matching_depth_oracle(m, &mut depth) }, DdStatus::Ok);
        assert_eq!(depth, 0);

        unsafe { dd_matching_free(m) };
    }

    #[test]
    fn dtree_depth_of_three_bit_parity() {
        let hex = cstring("96");
        let mut depth = 0;
        assert_eq!(unsafe { dd_dtree_min_depth(3, hex.as_ptr(), &mut depth) }, DdStatus::Ok);
        assert_eq!(depth, 3);

        let bad = cstring("zz");
        assert_eq!(
            unsafe { dd_dtree_min_depth(3, bad.as_ptr(), &mut depth) },
            DdStatus::Parse
        );
    }

    #[test]
    fn qbf_decide_respects_quantifier_order() {
        let json = cstring(
            r#"{"prefix":[{"quantifier":"exists","variables":[1]},
                          {"quantifier":"forall","variables":[2]}],
                "matrix":"(or x1 x2)"}"#,
        );
        let mut truth = -1;
        assert_eq!(unsafe { dd_qbf_decide(json.as_ptr(), &mut truth) }, DdStatus::Ok);
        assert_eq!(truth, 1);

        let json = cstring(
            r#"{"prefix":[{"quantifier":"exists","variables":[1]},
                          {"quantifier":"forall","variables":[2]}],
                "matrix":"x2"}"#,
        );
        assert_eq!(unsafe { dd_qbf_decide(json.as_ptr(), &mut truth) }, DdStatus::Ok);
        assert_eq!(truth, 0, "universal variable cannot be grabbed by the determiner");
    }

    #[test]
    fn game_strategic_depth_through_handles() {
        let tree = detdepth::games::tree_to_file(&detdepth::games::breakable_chain(3));
        let json = cstring(&serde_json::to_string(&tree).unwrap());
        let mut g: *mut DdGame = ptr::null_mut();
        assert_eq!(unsafe { dd_game_parse(json.as_ptr(), &mut g) }, DdStatus::Ok);
        let mut depth = 0;
        assert_eq!(unsafe { dd_game_strategic_depth(g, &mut depth) }, DdStatus::Ok);
        assert_eq!(depth, 3);
        unsafe { dd_game_free(g) };
    }

    #[test]
    fn unresolvable_spec_reports_distinct_status() {
        // One commitment that empties nothing but can never reach a singleton.
        let json = cstring(
            r#"{
            "outcomes": ["a", "b", "c"],
            "horizon": 2,
            "env_moves": [],
            "basis": [{"name": "noop", "transform": {"when": [], "then": "identity", "otherwise": "identity"}}],
            "admissible_table": [{"env_history": [], "admissible": ["a", "b", "c"]}]
        }"#,
        );
        let mut spec: *mut DdSpec = ptr::null_mut();
        assert_eq!(unsafe { dd_spec_parse(json.as_ptr(), &mut spec) }, DdStatus::Ok);
        let mut depth = 0;
        assert_eq!(unsafe { dd_spec_online_depth(spec, &mut depth) }, DdStatus::Unresolvable);
        assert!(last_error().contains("resolved"));
        unsafe { dd_spec_free(spec) };
    }

    #[test]
    fn generated_header_declares_the_surface() {
        let header = std::fs::read_to_string(
            std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/detdepth.h"),
        )
        .expect("header generated at build time");
        for symbol in [
            "dd_last_error_message",
            "dd_spec_parse",
            "dd_spec_free",
            "dd_spec_online_depth",
            "dd_spec_validate_shrinkage",
            "dd_chain_separation",
            "dd_matching_parse",
            "dd_matching_height",
            "dd_matching_stable_count",
            "dd_matching_depth_oracle",
            "dd_dtree_min_depth",
            "dd_qbf_decide",
            "dd_game_parse",
            "dd_game_strategic_depth",
            "DdStatus",
        ] {
            assert!(header.contains(symbol), "header is missing {symbol}");
        }
    }
}
