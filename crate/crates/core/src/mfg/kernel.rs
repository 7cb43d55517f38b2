//! Conditional-binomial transition closure.
//!
//! The next move count seen by a tagged agent is its own action plus the
//! number of movers among the other N - 1 agents, each of whom moves
//! independently with the population's move probability at the current state.

use std::f64::consts::PI;

use super::params::StateDistribution;
use crate::error::{Error, Result};

/// ln(n!) - ln(sqrt(2 pi n) (n/e)^n), the Stirling remainder.
fn stirling_error(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        // n! is exact in f64 up to 15 and the cancellation stays small
        let fact: f64 = (1..=n as u64).map(|k| k as f64).product();
        return fact.ln() - (n + 0.5) * n.ln() + n - 0.5 * (2.0 * PI).ln();
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term x ln(x / m) + m - x, evaluated without cancellation when x is near m.
fn deviance(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// P[Binomial(n, p) = k] by the saddle-point expansion, accurate to a few ulp.
fn binomial_point(k: usize, n: usize, p: f64) -> f64 {
    let q = 1.0 - p;
    let (kf, nf) = (k as f64, n as f64);
    if k == 0 {
        if n == 0 {
            return 1.0;
        }
        let lc = if p < 0.1 { -deviance(nf, nf * q) - nf * p } else { nf * q.ln() };
        return lc.exp();
    }
    if k == n {
        let lc = if q < 0.1 { -deviance(nf, nf * p) - nf * q } else { nf * p.ln() };
        return lc.exp();
    }
    let lc = stirling_error(nf) - stirling_error(kf) - stirling_error(nf - kf)
        - deviance(kf, nf * p)
        - deviance(nf - kf, nf * q);
    let lf = (2.0 * PI).ln() + kf.ln() + (-kf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// Tail cutoff, relative to the mode, used inside the solver loops. Terms this
/// small cannot change a sum of probabilities held in f64.
pub(crate) const TAIL_FLOOR: f64 = 1e-20;

/// Fills `out[k] = P[Binomial(trials, p) = k]` for k = 0..=trials and returns
/// the index range that was filled. Tails stop once a term drops below
/// `floor` times the mode value (0 keeps everything down to underflow).
/// `out` must have `trials + 1` slots.
pub(crate) fn fill_binomial(trials: usize, p: f64, floor: f64, out: &mut [f64]) -> std::ops::Range<usize> {
    debug_assert_eq!(out.len(), trials + 1);
    out.fill(0.0);
    if p <= 0.0 {
        out[0] = 1.0;
        return 0..1;
    }
    if p >= 1.0 {
        out[trials] = 1.0;
        return trials..trials + 1;
    }
    let mode = (((trials + 1) as f64 * p).floor() as usize).min(trials);
    out[mode] = binomial_point(mode, trials, p);
    let cutoff = (floor * out[mode]).max(f64::MIN_POSITIVE * f64::EPSILON);
    let odds = p / (1.0 - p);
    let mut lo = mode;
    let mut k = mode;
    while k > 0 {
        // P(k-1) = P(k) * k / ((n - k + 1) * odds)
        let next = out[k] * k as f64 / ((trials - k + 1) as f64 * odds);
        if next < cutoff {
            break;
        }
        out[k - 1] = next;
        k -= 1;
        lo = k;
    }
    let mut hi = mode;
    k = mode;
    while k < trials {
        let next = out[k] * (trials - k) as f64 * odds / (k + 1) as f64;
        if next < cutoff {
            break;
        }
        out[k + 1] = next;
        k += 1;
        hi = k;
    }
    lo..hi + 1
}

/// Distribution of the next move count given the previous count, the tagged
/// agent's action (0 wait, 1 move) and the peers' move probability. Under the
/// closure the previous count only matters through `p_move`.
pub fn transition_distribution(
    j_prev: usize,
    action: usize,
    p_move: f64,
    n: usize,
) -> Result<StateDistribution> {
    if n < 1 {
        return Err(Error::invalid("population must be at least 1"));
    }
    if j_prev > n {
        return Err(Error::invalid(format!("previous state {j_prev} outside 0..={n}")));
    }
    if action > 1 {
        return Err(Error::invalid(format!("action must be 0 or 1, got {action}")));
    }
    if !(p_move.is_finite() && (0.0..=1.0).contains(&p_move)) {
        return Err(Error::invalid(format!("move probability {p_move} outside [0, 1]")));
    }
    let mut peers = vec![0.0; n];
    fill_binomial(n - 1, p_move, 0.0, &mut peers);
    let mut probs = vec![0.0; n + 1];
    probs[action..action + n].copy_from_slice(&peers);
    StateDistribution::new(probs).map_err(|e| Error::numerical(format!("transition kernel: {e}")))
}
