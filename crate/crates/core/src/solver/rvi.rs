use crate::error::Result;
use crate::kernel::{StateIndex, UniformizedMdp};
use crate::model::Action;
use crate::policies::ActionTable;
use crate::scalar::Scalar;

use super::thresholds::extract_thresholds;
use super::{Solution, SolverConfig};

/// Flattened uniformized kernel.
///
/// Q-values are evaluated as `h(s) + [R(s, a) + sum_{j != s} p_j (h_j - h_s)]`,
/// which equals `R + sum_j p_j h_j` for stochastic rows but keeps the
/// bracketed increment at the scale of the rewards rather than of `h`.
struct Sweep<T> {
    n: usize,
    reward: Vec<T>,
    /// `row sum - 1`; zero unless the literal self-loop rule is in use.
    deficit: Vec<T>,
    start: Vec<usize>,
    dest: Vec<usize>,
    prob: Vec<T>,
}

impl<T: Scalar> Sweep<T> {
    fn new(mdp: &UniformizedMdp<T>) -> Self {
        let n = mdp.num_states();
        let mut sw = Sweep {
            n,
            reward: Vec::with_capacity(2 * n),
            deficit: Vec::with_capacity(2 * n),
            start: Vec::with_capacity(2 * n + 1),
            dest: Vec::with_capacity(8 * n),
            prob: Vec::with_capacity(8 * n),
        };
        sw.start.push(0);
        for s in 0..n {
            for a in Action::ALL {
                let row = mdp.row(StateIndex(s), a);
                sw.reward.push(mdp.reward(StateIndex(s), a));
                sw.deficit.push(row.sum() - T::one());
                for &(j, p) in &row.entries {
                    if j.0 != s {
                        sw.dest.push(j.0);
                        sw.prob.push(p);
                    }
                }
                sw.start.push(sw.dest.len());
            }
        }
        sw
    }

    /// `Q(s, a) - h(s)`.
    #[inline]
    fn increment(&self, h: &[T], s: usize, a: Action) -> T {
        let r = 2 * s + a.index();
        let hs = h[s];
        let mut acc = self.reward[r] + self.deficit[r] * hs;
        for e in self.start[r]..self.start[r + 1] {
            acc += self.prob[e] * (h[self.dest[e]] - hs);
        }
        acc
    }
}

/// Ties resolve to transmit.
#[inline]
fn pick<T: Scalar>(skip: T, transmit: T) -> (Action, T) {
    if transmit <= skip {
        (Action::Transmit, transmit)
    } else {
        (Action::Skip, skip)
    }
}

struct Iterate<T> {
    h: Vec<T>,
    inc: Vec<T>,
    iters: usize,
    residual: T,
    converged: bool,
    minimizations_last_iter: usize,
    minimizations_total: u64,
}

/// Shared outer loop; `step` fills `inc` with `V_{k+1}(s) - h_k(s)` and
/// returns how many two-action minimizations it evaluated.
fn iterate<T: Scalar>(
    n: usize,
    ref_state: usize,
    cfg: &SolverConfig<T>,
    mut step: impl FnMut(&[T], &mut [T]) -> usize,
) -> Iterate<T> {
    let mut h = vec![T::zero(); n];
    let mut inc = vec![T::zero(); n];
    let mut out = Iterate {
        h: Vec::new(),
        inc: Vec::new(),
        iters: 0,
        residual: T::infinity(),
        converged: false,
        minimizations_last_iter: 0,
        minimizations_total: 0,
    };
    for k in 1..=cfg.max_iters {
        let evaluated = step(&h, &mut inc);
        out.minimizations_last_iter = evaluated;
        out.minimizations_total += evaluated as u64;
        let shift = inc[ref_state];
        let mut lambda = T::zero();
        for (hs, &d) in h.iter_mut().zip(&inc) {
            let change = d - shift;
            *hs += change;
            lambda = lambda.max(change.abs());
        }
        out.iters = k;
        out.residual = lambda;
        if lambda < cfg.tol {
            out.converged = true;
            break;
        }
    }
    out.h = h;
    out.inc = inc;
    out
}

fn finish<T: Scalar>(
    mdp: &UniformizedMdp<T>,
    sweep: &Sweep<T>,
    ref_state: usize,
    it: Iterate<T>,
    policy: Vec<Action>,
) -> Solution<T> {
    let h = it.h;
    let mut q_values = Vec::with_capacity(sweep.n);
    let mut best = Vec::with_capacity(sweep.n);
    for s in 0..sweep.n {
        let skip = sweep.increment(&h, s, Action::Skip);
        let transmit = sweep.increment(&h, s, Action::Transmit);
        q_values.push([h[s] + skip, h[s] + transmit]);
        best.push(skip.min(transmit));
    }
    let gain = best[ref_state];
    let bellman_residual = best.iter().map(|&b| (b - gain).abs()).fold(T::zero(), T::max);
    let policy = ActionTable::new(policy);
    let thresholds = extract_thresholds(&policy, mdp.space()).ok();
    Solution {
        params: *mdp.params(),
        gain,
        h,
        q_values,
        policy,
        thresholds,
        ref_state: StateIndex(ref_state),
        iters: it.iters,
        residual: it.residual,
        bellman_residual,
        converged: it.converged,
        minimizations_last_iter: it.minimizations_last_iter,
        minimizations_total: it.minimizations_total,
    }
}

/// Relative value iteration on the uniformized MDP.
///
/// `Q_{k+1}(s, a) = R(s, a) + sum p(s' | s, a) h_k(s')`,
/// `V_{k+1} = min_a Q_{k+1}`, `h_{k+1} = V_{k+1} - V_{k+1}(s_ref)`, until
/// `max_s |h_{k+1}(s) - h_k(s)| < tol`. A run that exhausts `max_iters` is
/// returned with `converged == false`.
pub fn rvi<T: Scalar>(mdp: &UniformizedMdp<T>, cfg: &SolverConfig<T>) -> Result<Solution<T>> {
    cfg.validate()?;
    let space = mdp.space();
    let ref_state = space.index(cfg.reference(mdp.params())?).0;
    let sweep = Sweep::new(mdp);
    let it = iterate(sweep.n, ref_state, cfg, |h, inc| {
        for (s, slot) in inc.iter_mut().enumerate() {
            let skip = sweep.increment(h, s, Action::Skip);
            let transmit = sweep.increment(h, s, Action::Transmit);
            *slot = pick(skip, transmit).1;
        }
        sweep.n
    });
    let policy = (0..sweep.n)
        .map(|s| {
            pick(
                sweep.increment(&it.h, s, Action::Skip),
                sweep.increment(&it.h, s, Action::Transmit),
            )
            .0
        })
        .collect();
    Ok(finish(mdp, &sweep, ref_state, it, policy))
}

/// One threshold-aware sweep. States are visited in index order, i.e.
/// ascending delta within each pre-identification group, and each group
/// keeps its own running threshold: once some delta selects transmit,
/// every larger delta in the group transmits without comparing actions.
fn threshold_sweep<T: Scalar>(
    sweep: &Sweep<T>,
    delta_max: usize,
    h: &[T],
    inc: &mut [T],
    policy: &mut [Action],
) -> usize {
    let mut evaluated = 0;
    for group in 0..2 {
        let mut omega = usize::MAX;
        for d in 1..=delta_max {
            let s = group * delta_max + d - 1;
            let (a, v) = if d >= omega {
                (Action::Transmit, sweep.increment(h, s, Action::Transmit))
            } else {
                evaluated += 1;
                let choice = pick(
                    sweep.increment(h, s, Action::Skip),
                    sweep.increment(h, s, Action::Transmit),
                );
                if choice.0 == Action::Transmit {
                    omega = d;
                }
                choice
            };
            inc[s] = v;
            policy[s] = a;
        }
    }
    evaluated
}

/// Relative value iteration exploiting the threshold structure of the
/// optimal policy. Updates are synchronous, as in [`rvi`]; the only
/// difference is the action-selection shortcut above the running threshold.
pub fn rvi_threshold<T: Scalar>(mdp: &UniformizedMdp<T>, cfg: &SolverConfig<T>) -> Result<Solution<T>> {
    cfg.validate()?;
    let space = mdp.space();
    let delta_max = space.delta_max();
    let ref_state = space.index(cfg.reference(mdp.params())?).0;
    let sweep = Sweep::new(mdp);
    let mut policy = vec![Action::Skip; sweep.n];
    let it = iterate(sweep.n, ref_state, cfg, |h, inc| {
        threshold_sweep(&sweep, delta_max, h, inc, &mut policy)
    });
    let mut scratch = vec![T::zero(); sweep.n];
    threshold_sweep(&sweep, delta_max, &it.h, &mut scratch, &mut policy);
    Ok(finish(mdp, &sweep, ref_state, it, policy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_transitions, uniformize};
    use crate::model::SystemParams;
    use crate::policies::{Threshold, Thresholds};

    fn mdp(q: f64, pa: f64, pb: f64, tu: usize, dmax: usize) -> UniformizedMdp<f64> {
        let p = SystemParams::new(q, pa, pb, tu, dmax).unwrap();
        uniformize(&build_transitions(&p).unwrap(), 0.9).unwrap()
    }

    #[test]
    fn t_u_one_always_transmits() {
        let m = mdp(0.5, 0.0, 0.0, 1, 12);
        let cfg = SolverConfig::default();
        for sol in [rvi(&m, &cfg).unwrap(), rvi_threshold(&m, &cfg).unwrap()] {
            assert!(sol.converged);
            assert!(sol.policy.actions().iter().all(|a| a.is_transmit()));
            assert_eq!(
                sol.thresholds,
                Some(Thresholds::new(Threshold::At(1), Threshold::At(1)))
            );
        }
    }

    #[test]
    fn reference_value_is_zero() {
        let m = mdp(0.7, 0.2, 0.1, 3, 30);
        let sol = rvi(&m, &SolverConfig::default()).unwrap();
        assert_eq!(sol.h[sol.ref_state.0], 0.0);
        assert!(sol.bellman_residual < 1e-8);
    }

    #[test]
    fn non_convergence_reported() {
        let m = mdp(0.7, 0.2, 0.1, 3, 30);
        let sol = rvi(&m, &SolverConfig::default().with_max_iters(3)).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iters, 3);
        assert!(sol.residual >= 1e-9);
    }

    #[test]
    fn f32_solver_agrees_with_f64() {
        let p64 = SystemParams::new(0.7, 0.2, 0.1, 3, 30).unwrap();
        let p32 = SystemParams::<f32>::new(0.7, 0.2, 0.1, 3, 30).unwrap();
        let m64 = uniformize(&build_transitions(&p64).unwrap(), 0.9).unwrap();
        let m32 = uniformize(&build_transitions(&p32).unwrap(), 0.9f32).unwrap();
        let s64 = rvi(&m64, &SolverConfig::default()).unwrap();
        let s32 = rvi(&m32, &SolverConfig::default().with_tol(1e-4f32)).unwrap();
        assert!(s32.converged);
        assert!((s32.gain as f64 - s64.gain).abs() < 1e-3 * s64.gain);
    }
}
