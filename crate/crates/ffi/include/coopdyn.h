#ifndef COOPDYN_H
#define COOPDYN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  COOPDYN_REGIME_CLASSIC = 0,
  COOPDYN_REGIME_ALTERNATION_FAVORING = 1,
  COOPDYN_REGIME_BOUNDARY = 2,
} CoopdynRegime;

typedef enum {
  COOPDYN_ROLE_SACRIFICE = 0,
  COOPDYN_ROLE_MAX_REWARD = 1,
} CoopdynRole;

typedef enum {
  COOPDYN_STATUS_OK = 0,
  COOPDYN_STATUS_INVALID_ARGUMENT = 1,
  COOPDYN_STATUS_PAYOFF_ORDERING = 2,
  COOPDYN_STATUS_CONFIG = 3,
  COOPDYN_STATUS_NUMERICAL = 4,
  COOPDYN_STATUS_IO = 5,
  COOPDYN_STATUS_NULL_POINTER = 6,
  COOPDYN_STATUS_PANIC = 7,
} CoopdynStatus;

/**
 * A solved equilibrium.
 */
typedef struct CoopdynEquilibrium CoopdynEquilibrium;

/**
 * Role-rotation ledger.
 */
typedef struct CoopdynLedger CoopdynLedger;

/**
 * Intersection game parameters.
 */
typedef struct CoopdynMfgParams CoopdynMfgParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`). Returns the buffer size needed for the whole message,
 * or 0 when the last call succeeded.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t coopdyn_last_error_message(char *buf, size_t len);

/**
 * # Safety
 * `out_regime` must be a valid pointer.
 */
CoopdynStatus coopdyn_classify(double t, double r, double p, double s, CoopdynRegime *out_regime);

/**
 * Discounted value of the alternation started with a defection.
 *
 * # Safety
 * `out_value` must be a valid pointer.
 */
CoopdynStatus coopdyn_stick_payoff(double t, double s, double delta, double *out_value);

/**
 * Discounted value of a one-shot deviation followed by mutual defection.
 *
 * # Safety
 * `out_value` must be a valid pointer.
 */
CoopdynStatus coopdyn_deviate_payoff(double t, double p, double delta, double *out_value);

/**
 * Solved discount threshold. `*out_has_root` is false when deviating pays
 * for every discount below one, in which case `*out_solved` is NaN.
 *
 * # Safety
 * All out pointers must be valid.
 */
CoopdynStatus coopdyn_critical_discount(double t,
                                        double r,
                                        double p,
                                        double s,
                                        double *out_solved,
                                        bool *out_has_root,
                                        double *out_reward_gap_ratio);

/**
 * Writes Pr[j' | j_prev, action] for j' = 0..=n into `out_probs`, which must
 * hold `n + 1` values.
 *
 * # Safety
 * `out_probs` must point to `len` writable doubles.
 */
CoopdynStatus coopdyn_transition_distribution(size_t j_prev,
                                              size_t action,
                                              double p_move,
                                              size_t n,
                                              double *out_probs,
                                              size_t len);

/**
 * Default parameters with the population fields replaced.
 *
 * # Safety
 * `out_params` must be a valid pointer; the handle is released with
 * [`coopdyn_mfg_params_free`].
 */
CoopdynStatus coopdyn_mfg_params_new(size_t n,
                                     size_t threshold,
                                     double discount,
                                     double temperature,
                                     size_t horizon,
                                     CoopdynMfgParams **out_params);

/**
 * Parameters from a TOML table with the same keys as the `[mfg]` config section.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out_params` a valid pointer.
 */
CoopdynStatus coopdyn_mfg_params_from_toml(const char *toml, CoopdynMfgParams **out_params);

/**
 * # Safety
 * `params` must be null or a handle from this library, freed at most once.
 */
void coopdyn_mfg_params_free(CoopdynMfgParams *params);

/**
 * Solves the game. A run that stops at `max_iter` still succeeds; check
 * [`coopdyn_equilibrium_converged`].
 *
 * # Safety
 * `params` must be a live handle and `out_equilibrium` a valid pointer; the
 * result is released with [`coopdyn_equilibrium_free`].
 */
CoopdynStatus coopdyn_mfg_solve(const CoopdynMfgParams *params,
                                double tol,
                                size_t max_iter,
                                double damping,
                                CoopdynEquilibrium **out_equilibrium);

/**
 * # Safety
 * `eq` must be null or a handle from this library, freed at most once.
 */
void coopdyn_equilibrium_free(CoopdynEquilibrium *eq);

/**
 * # Safety
 * `eq` must be a live handle.
 */
bool coopdyn_equilibrium_converged(const CoopdynEquilibrium *eq);

/**
 * Outer iterations performed; 0 for a null handle.
 *
 * # Safety
 * `eq` must be null or a live handle.
 */
size_t coopdyn_equilibrium_iterations(const CoopdynEquilibrium *eq);

/**
 * NaN for a null handle.
 *
 * # Safety
 * `eq` must be null or a live handle.
 */
double coopdyn_equilibrium_exploitability(const CoopdynEquilibrium *eq);

/**
 * E[j] at the final step; NaN for a null handle.
 *
 * # Safety
 * `eq` must be null or a live handle.
 */
double coopdyn_equilibrium_final_mean(const CoopdynEquilibrium *eq);

/**
 * π(move | j, t).
 *
 * # Safety
 * `eq` must be a live handle and `out_prob` a valid pointer.
 */
CoopdynStatus coopdyn_equilibrium_move_prob(const CoopdynEquilibrium *eq,
                                            size_t t,
                                            size_t j,
                                            double *out_prob);

/**
 * Copies P(., t) into `out_probs`, which must hold N + 1 values.
 *
 * # Safety
 * `eq` must be a live handle and `out_probs` point to `len` writable doubles.
 */
CoopdynStatus coopdyn_equilibrium_flow(const CoopdynEquilibrium *eq,
                                       size_t t,
                                       double *out_probs,
                                       size_t len);

/**
 * # Safety
 * `out_ledger` must be a valid pointer; release with [`coopdyn_ledger_free`].
 */
CoopdynStatus coopdyn_ledger_new(size_t n_agents,
                                 size_t window,
                                 CoopdynRole rotated,
                                 CoopdynLedger **out_ledger);

/**
 * # Safety
 * `ledger` must be null or a handle from this library, freed at most once.
 */
void coopdyn_ledger_free(CoopdynLedger *ledger);

/**
 * Deterministic rotation of `k` agents into the rotated role. The chosen ids
 * are written in ascending order to `out_ids`, which must hold `k` values.
 *
 * # Safety
 * `ledger` must be a live handle and `out_ids` point to `len` writable values.
 */
CoopdynStatus coopdyn_ledger_assign(CoopdynLedger *ledger, size_t k, size_t *out_ids, size_t len);

/**
 * Rounds agent `id` has spent in the sacrifice role.
 *
 * # Safety
 * `ledger` must be a live handle and `out_count` a valid pointer.
 */
CoopdynStatus coopdyn_ledger_sacrifice_count(const CoopdynLedger *ledger,
                                             size_t id,
                                             size_t *out_count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COOPDYN_H */
