//! C ABI over `coopdyn`.
//!
//! Every function returns a [`CoopdynStatus`]; on failure the message is kept
//! per thread and can be copied out with [`coopdyn_last_error_message`].
//! Objects are opaque handles created by `*_new`/`*_solve` functions and
//! released with the matching `*_free`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use coopdyn::ipd::{self, PayoffMatrix, Regime};
use coopdyn::mfg::{self, EquilibriumResult, MfgParams, SolverOptions};
use coopdyn::roles::{self, RotatedRole, RotationLedger};
use coopdyn::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoopdynStatus {
    Ok = 0,
    InvalidArgument = 1,
    PayoffOrdering = 2,
    Config = 3,
    Numerical = 4,
    Io = 5,
    NullPointer = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoopdynRegime {
    Classic = 0,
    AlternationFavoring = 1,
    Boundary = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoopdynRole {
    Sacrifice = 0,
    MaxReward = 1,
}

/// Intersection game parameters.
pub struct CoopdynMfgParams(MfgParams);

/// A solved equilibrium.
pub struct CoopdynEquilibrium {
    result: EquilibriumResult,
    n: usize,
}

/// Role-rotation ledger.
pub struct CoopdynLedger(RotationLedger);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

enum Failure {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CoopdynStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CoopdynStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            CoopdynStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            match e {
                Error::InvalidArgument(_) => CoopdynStatus::InvalidArgument,
                Error::PayoffOrdering(_) => CoopdynStatus::PayoffOrdering,
                Error::Config { .. } => CoopdynStatus::Config,
                Error::Numerical(_) => CoopdynStatus::Numerical,
                Error::Io { .. } | Error::Csv(_) => CoopdynStatus::Io,
            }
        }
        Err(_) => {
            set_error("internal panic".into());
            CoopdynStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the buffer size needed for the whole message,
/// or 0 when the last call succeeded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn coopdyn_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let slot = slot.borrow();
        let Some(msg) = slot.as_ref() else { return 0 };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n - 1) = 0;
        }
        bytes.len()
    })
}

/// # Safety
/// `out_regime` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn coopdyn_classify(t: f64, r: f64, p: f64, s: f64, out_regime: *mut CoopdynRegime) -> CoopdynStatus {
    guard(|| {
        let slot = out(out_regime, "out_regime")?;
        *slot = match ipd::classify(&PayoffMatrix::new(t, r, p, s)?) {
            Regime::Classic => CoopdynRegime::Classic,
            Regime::AlternationFavoring => CoopdynRegime::AlternationFavoring,
            Regime::Boundary => CoopdynRegime::Boundary,
        };
        Ok(())
    })
}

/// Discounted value of the alternation started with a defection.
///
/// # Safety
/// `out_value` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn coopdyn_stick_payoff(t: f64, s: f64, delta: f64, out_value: *mut f64) -> CoopdynStatus {
    guard(|| {
        *out(out_value, "out_value")? = ipd::stick_payoff(t, s, delta)?;
        Ok(())
    })
}

/// Discounted value of a one-shot deviation followed by mutual defection.
///
/// # Safety
/// `out_value` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn coopdyn_deviate_payoff(t: f64, p: f64, delta: f64, out_value: *mut f64) -> CoopdynStatus {
    guard(|| {
        *out(out_value, "out_value")? = ipd::deviate_payoff(t, p, delta)?;
        Ok(())
    })
}

/// Solved discount threshold. `*out_has_root` is false when deviating pays
/// for every discount below one, in which case `*out_solved` is NaN.
///
/// # Safety
/// All out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn coopdyn_critical_discount(
    t: f64,
    r: f64,
    p: f64,
    s: f64,
    out_solved: *mut f64,
    out_has_root: *mut bool,
    out_reward_gap_ratio: *mut f64,
) -> CoopdynStatus {
    guard(|| {
        let solved = out(out_solved, "out_solved")?;
        let has_root = out(out_has_root, "out_has_root")?;
        let ratio = out(out_reward_gap_ratio, "out_reward_gap_ratio")?;
        let cd = ipd::critical_discount(&PayoffMatrix::new(t, r, p, s)?);
        *solved = cd.solved.unwrap_or(f64::NAN);
        *has_root = cd.solved.is_some();
        *ratio = cd.reward_gap_ratio;
        Ok(())
    })
}

/// Writes Pr[j' | j_prev, action] for j' = 0..=n into `out_probs`, which must
/// hold `n + 1` values.
///
/// # Safety
/// `out_probs` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn coopdyn_transition_distribution(
    j_prev: usize,
    action: usize,
    p_move: f64,
    n: usize,
    out_probs: *mut f64,
    len: usize,
) -> CoopdynStatus {
    guard(|| {
        if out_probs.is_null() {
            return Err(Failure::Null("out_probs"));
        }
        if len != n + 1 {
            return Err(Error::InvalidArgument(format!("buffer holds {len} values, need {}", n + 1)).into());
        }
        let dist = mfg::transition_distribution(j_prev, action, p_move, n)?;
        std::slice::from_raw_parts_mut(out_probs, len).copy_from_slice(dist.probs());
        Ok(())
    })
}

/// Default parameters with the population fields replaced.
///
/// # Safety
/// `out_params` must be a valid pointer; the handle is released with
/// [`coopdyn_mfg_params_free`].
#[no_mangle]
pub unsafe extern "C" fn coopdyn_mfg_params_new(
    n: usize,
    threshold: usize,
    discount: f64,
    temperature: f64,
    horizon: usize,
    out_params: *mut *mut CoopdynMfgParams,
) -> CoopdynStatus {
    guard(|| {
        let slot = out(out_params, "out_params")?;
        let params = MfgParams {
            n,
            threshold,
            discount,
            temperature,
            horizon,
            ..MfgParams::default()
        }
        .checked()?;
        *slot = Box::into_raw(Box::new(CoopdynMfgParams(params)));
        Ok(())
    })
}

/// Parameters from a TOML table with the same keys as the `[mfg]` config section.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out_params` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn coopdyn_mfg_params_from_toml(
    toml: *const c_char,
    out_params: *mut *mut CoopdynMfgParams,
) -> CoopdynStatus {
    guard(|| {
        let slot = out(out_params, "out_params")?;
        if toml.is_null() {
            return Err(Failure::Null("toml"));
        }
        let text = CStr::from_ptr(toml)
            .to_str()
            .map_err(|_| Error::InvalidArgument("toml is not UTF-8".into()))?;
        let cfg = coopdyn::harness::ExperimentConfig::from_toml_str(&format!("kind = \"mfg_solve\"\n[mfg]\n{text}"))?;
        let params = cfg.mfg.unwrap_or_default().checked()?;
        *slot = Box::into_raw(Box::new(CoopdynMfgParams(params)));
        Ok(())
    })
}

/// # Safety
/// `params` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn coopdyn_mfg_params_free(params: *mut CoopdynMfgParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Solves the game. A run that stops at `max_iter` still succeeds; check
/// [`coopdyn_equilibrium_converged`].
///
/// # Safety
/// `params` must be a live handle and `out_equilibrium` a valid pointer; the
/// result is released with [`coopdyn_equilibrium_free`].
#[no_mangle]
pub unsafe extern "C" fn coopdyn_mfg_solve(
    params: *const CoopdynMfgParams,
    tol: f64,
    max_iter: usize,
    damping: f64,
    out_equilibrium: *mut *mut CoopdynEquilibrium,
) -> CoopdynStatus {
    guard(|| {
        let p = &handle(params, "params")?.0;
        let slot = out(out_equilibrium, "out_equilibrium")?;
        let options = SolverOptions { tol, max_iter, damping };
        let result = mfg::solve_equilibrium(p, &options)?;
        *slot = Box::into_raw(Box::new(CoopdynEquilibrium { result, n: p.n }));
        Ok(())
    })
}

/// # Safety
/// `eq` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn coopdyn_equilibrium_free(eq: *mut CoopdynEquilibrium) {
    if !eq.is_null() {
        drop(Box::from_raw(eq));
    }
}

/// # Safety
/// `eq` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn coopdyn_equilibrium_converged(eq: *const CoopdynEquilibrium) -> bool {
    eq.as_ref().is_some_and(|e| e.result.converged())
}

/// Outer iterations performed; 0 for a null handle.
///
/// # Safety
/// `eq` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coopdyn_equilibrium_iterations(eq: *const CoopdynEquilibrium) -> usize {
    eq.as_ref().map_or(0, |e| e.result.iterations)
}

/// NaN for a null handle.
///
/// # Safety
/// `eq` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coopdyn_equilibrium_exploitability(eq: *const CoopdynEquilibrium) -> f64 {
    eq.as_ref().map_or(f64::NAN, |e| e.result.exploitability)
}

/// E[j] at the final step; NaN for a null handle.
///
/// # Safety
/// `eq` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coopdyn_equilibrium_final_mean(eq: *const CoopdynEquilibrium) -> f64 {
    eq.as_ref().map_or(f64::NAN, |e| e.result.final_mean_state())
}

/// π(move | j, t).
///
/// # Safety
/// `eq` must be a live handle and `out_prob` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn coopdyn_equilibrium_move_prob(
    eq: *const CoopdynEquilibrium,
    t: usize,
    j: usize,
    out_prob: *mut f64,
) -> CoopdynStatus {
    guard(|| {
        let e = handle(eq, "eq")?;
        let slot = out(out_prob, "out_prob")?;
        if t >= e.result.policy.horizon() || j > e.n {
            return Err(Error::InvalidArgument(format!("(t={t}, j={j}) outside the policy table")).into());
        }
        *slot = e.result.policy.move_prob(t, j);
        Ok(())
    })
}

/// Copies P(., t) into `out_probs`, which must hold N + 1 values.
///
/// # Safety
/// `eq` must be a live handle and `out_probs` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn coopdyn_equilibrium_flow(
    eq: *const CoopdynEquilibrium,
    t: usize,
    out_probs: *mut f64,
    len: usize,
) -> CoopdynStatus {
    guard(|| {
        let e = handle(eq, "eq")?;
        if out_probs.is_null() {
            return Err(Failure::Null("out_probs"));
        }
        let dist = e
            .result
            .distribution_flow
            .get(t)
            .ok_or_else(|| Error::InvalidArgument(format!("t = {t} beyond the horizon")))?;
        if len != dist.len() {
            return Err(Error::InvalidArgument(format!("buffer holds {len} values, need {}", dist.len())).into());
        }
        std::slice::from_raw_parts_mut(out_probs, len).copy_from_slice(dist.probs());
        Ok(())
    })
}

/// # Safety
/// `out_ledger` must be a valid pointer; release with [`coopdyn_ledger_free`].
#[no_mangle]
pub unsafe extern "C" fn coopdyn_ledger_new(
    n_agents: usize,
    window: usize,
    rotated: CoopdynRole,
    out_ledger: *mut *mut CoopdynLedger,
) -> CoopdynStatus {
    guard(|| {
        let slot = out(out_ledger, "out_ledger")?;
        let role = match rotated {
            CoopdynRole::Sacrifice => RotatedRole::Sacrifice,
            CoopdynRole::MaxReward => RotatedRole::MaxReward,
        };
        *slot = Box::into_raw(Box::new(CoopdynLedger(RotationLedger::new(n_agents, window, role)?)));
        Ok(())
    })
}

/// # Safety
/// `ledger` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn coopdyn_ledger_free(ledger: *mut CoopdynLedger) {
    if !ledger.is_null() {
        drop(Box::from_raw(ledger));
    }
}

/// Deterministic rotation of `k` agents into the rotated role. The chosen ids
/// are written in ascending order to `out_ids`, which must hold `k` values.
///
/// # Safety
/// `ledger` must be a live handle and `out_ids` point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn coopdyn_ledger_assign(
    ledger: *mut CoopdynLedger,
    k: usize,
    out_ids: *mut usize,
    len: usize,
) -> CoopdynStatus {
    guard(|| {
        let l = &mut out(ledger, "ledger")?.0;
        if out_ids.is_null() {
            return Err(Failure::Null("out_ids"));
        }
        if len != k {
            return Err(Error::InvalidArgument(format!("buffer holds {len} ids, need {k}")).into());
        }
        let a = roles::deterministic_assign(l, k)?;
        std::slice::from_raw_parts_mut(out_ids, len).copy_from_slice(&a.selected);
        Ok(())
    })
}

/// Rounds agent `id` has spent in the sacrifice role.
///
/// # Safety
/// `ledger` must be a live handle and `out_count` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn coopdyn_ledger_sacrifice_count(
    ledger: *const CoopdynLedger,
    id: usize,
    out_count: *mut usize,
) -> CoopdynStatus {
    guard(|| {
        let l = &handle(ledger, "ledger")?.0;
        let slot = out(out_count, "out_count")?;
        let agent = l
            .agents()
            .get(id)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown agent id {id}")))?;
        *slot = agent.times_in_sacrifice_role;
        Ok(())
    })
}
