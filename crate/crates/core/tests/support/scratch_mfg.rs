//! Independent desk-scale implementation of the intersection mean-field loop.
//!
//! Shares no code with the library. The peer kernel is built by enumerating
//! every one of the 2^(N-1) peer action tuples, the policy uses a naive
//! two-term softmax, and the value passes are plain nested loops. Only usable
//! for small N.

#![allow(dead_code)]

pub struct ScratchInstance {
    pub n: usize,
    pub threshold: usize,
    pub discount: f64,
    pub temperature: f64,
    pub damping: f64,
    pub horizon: usize,
    pub alpha: f64,
    pub baseline: f64,
    /// move|free, wait|free, wait|jammed, move|jammed
    pub table: [f64; 4],
    pub initial: Vec<f64>,
}

pub struct ScratchSolution {
    /// policy[t][j] = (wait, move)
    pub policy: Vec<Vec<(f64, f64)>>,
    pub flow: Vec<Vec<f64>>,
    pub iterations: usize,
    pub exploitability: f64,
}

impl ScratchInstance {
    fn reward(&self, a: usize, j: usize) -> f64 {
        let base = if j <= self.threshold {
            if a == 1 {
                self.table[0]
            } else {
                self.table[1]
            }
        } else if a == 1 {
            self.table[3]
        } else {
            self.table[2]
        };
        let gap = (j as f64 - self.threshold as f64).abs();
        base - self.alpha * gap + self.baseline
    }

    /// Distribution of the next count given own action and peer move probability,
    /// by walking every peer tuple.
    fn next_count(&self, a: usize, p: f64) -> Vec<f64> {
        let peers = self.n - 1;
        let mut out = vec![0.0; self.n + 1];
        for mask in 0u32..(1u32 << peers) {
            let mut prob = 1.0;
            let mut movers = 0;
            for k in 0..peers {
                if mask & (1 << k) != 0 {
                    prob *= p;
                    movers += 1;
                } else {
                    prob *= 1.0 - p;
                }
            }
            out[a + movers] += prob;
        }
        out
    }

    fn forward(&self, policy: &[Vec<(f64, f64)>]) -> Vec<Vec<f64>> {
        let mut flow = vec![self.initial.clone()];
        for t in 0..self.horizon {
            let mut next = vec![0.0; self.n + 1];
            for jp in 0..=self.n {
                let (w, m) = policy[t][jp];
                let k0 = self.next_count(0, m);
                let k1 = self.next_count(1, m);
                for j in 0..=self.n {
                    next[j] += flow[t][jp] * (w * k0[j] + m * k1[j]);
                }
            }
            let s: f64 = next.iter().sum();
            for x in next.iter_mut() {
                *x /= s;
            }
            flow.push(next);
        }
        flow
    }

    /// Returns q[t][j] = (q_wait, q_move) with greedy continuation, plus the
    /// continuation values used. When `follow` is set, continuation is the
    /// expectation under that policy instead of the max.
    fn backward(
        &self,
        peers: &[Vec<(f64, f64)>],
        follow: Option<&[Vec<(f64, f64)>]>,
    ) -> (Vec<Vec<(f64, f64)>>, Vec<Vec<f64>>) {
        let mut v = vec![vec![0.0; self.n + 1]; self.horizon + 1];
        let mut q = vec![vec![(0.0, 0.0); self.n + 1]; self.horizon];
        for t in (0..self.horizon).rev() {
            for j in 0..=self.n {
                let p = peers[t][j].1;
                let mut qa = [0.0; 2];
                for (a, slot) in qa.iter_mut().enumerate() {
                    let dist = self.next_count(a, p);
                    let cont: f64 = (0..=self.n).map(|x| dist[x] * v[t + 1][x]).sum();
                    *slot = self.reward(a, j) + self.discount * cont;
                }
                q[t][j] = (qa[0], qa[1]);
                v[t][j] = match follow {
                    None => {
                        if qa[1] > qa[0] {
                            qa[1]
                        } else {
                            qa[0]
                        }
                    }
                    Some(pol) => pol[t][j].0 * qa[0] + pol[t][j].1 * qa[1],
                };
            }
        }
        (q, v)
    }

    pub fn solve(&self, tol: f64, max_iter: usize) -> ScratchSolution {
        let mut policy = vec![vec![(0.5, 0.5); self.n + 1]; self.horizon];
        let mut flow = self.forward(&policy);
        let mut iterations = 0;
        for it in 1..=max_iter {
            iterations = it;
            let (q, _) = self.backward(&policy, None);
            let mut next = policy.clone();
            let mut pol_res: f64 = 0.0;
            for t in 0..self.horizon {
                for j in 0..=self.n {
                    let ew = (q[t][j].0 / self.temperature).exp();
                    let em = (q[t][j].1 / self.temperature).exp();
                    let target_move = em / (ew + em);
                    let m = (1.0 - self.damping) * policy[t][j].1 + self.damping * target_move;
                    let w = (1.0 - self.damping) * policy[t][j].0 + self.damping * (1.0 - target_move);
                    pol_res = pol_res
                        .max((m - policy[t][j].1).abs())
                        .max((w - policy[t][j].0).abs());
                    next[t][j] = (w, m);
                }
            }
            let next_flow = self.forward(&next);
            let mut dist_res: f64 = 0.0;
            for t in 0..=self.horizon {
                for j in 0..=self.n {
                    dist_res = dist_res.max((next_flow[t][j] - flow[t][j]).abs());
                }
            }
            policy = next;
            flow = next_flow;
            if pol_res < tol && dist_res < tol {
                break;
            }
        }
        let (_, v_best) = self.backward(&policy, None);
        let (_, v_pol) = self.backward(&policy, Some(&policy));
        let exploitability = (0..=self.n)
            .map(|j| self.initial[j] * (v_best[0][j] - v_pol[0][j]))
            .sum();
        ScratchSolution {
            policy,
            flow,
            iterations,
            exploitability,
        }
    }
}
