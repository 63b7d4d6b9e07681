//! State enumeration, the embedded SMDP transition kernel and its
//! uniformization into a discrete-time MDP.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{derive_probs, Action, DerivedProbs, State, SystemParams};
use crate::scalar::Scalar;

/// Dense index over `{1..=delta_max} x {0, 1}`.
///
/// States with `F = 0` come first, then `F = 1`; within each group the index
/// is ascending in delta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct StateIndex(pub usize);

/// Bijection between [`State`] and [`StateIndex`] for a fixed cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpace {
    delta_max: usize,
}

impl StateSpace {
    pub fn new(delta_max: usize) -> Self {
        Self { delta_max }
    }

    pub fn delta_max(&self) -> usize {
        self.delta_max
    }

    pub fn len(&self) -> usize {
        2 * self.delta_max
    }

    pub fn is_empty(&self) -> bool {
        self.delta_max == 0
    }

    pub fn contains(&self, s: State) -> bool {
        (1..=self.delta_max).contains(&s.delta)
    }

    #[inline]
    pub fn index(&self, s: State) -> StateIndex {
        debug_assert!(self.contains(s));
        StateIndex(usize::from(s.pre_id) * self.delta_max + s.delta - 1)
    }

    #[inline]
    pub fn state(&self, i: StateIndex) -> State {
        State {
            delta: i.0 % self.delta_max + 1,
            pre_id: i.0 >= self.delta_max,
        }
    }

    pub fn states(&self) -> impl Iterator<Item = State> + '_ {
        (0..self.len()).map(|i| self.state(StateIndex(i)))
    }
}

/// All decision states of an instance, in index order.
pub fn enumerate_states<T: Scalar>(params: &SystemParams<T>) -> Vec<State> {
    StateSpace::new(params.delta_max()).states().collect()
}

/// Sparse stochastic row; destinations are unique and sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRow<T> {
    pub entries: Vec<(StateIndex, T)>,
}

impl<T: Scalar> TransitionRow<T> {
    fn from_unmerged(mut raw: Vec<(StateIndex, T)>) -> Self {
        raw.sort_by_key(|e| e.0);
        let mut entries: Vec<(StateIndex, T)> = Vec::with_capacity(raw.len());
        for (j, p) in raw {
            match entries.last_mut() {
                Some(last) if last.0 == j => last.1 += p,
                _ => entries.push((j, p)),
            }
        }
        Self { entries }
    }

    pub fn sum(&self) -> T {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn prob_to(&self, j: StateIndex) -> T {
        self.entries.iter().find(|e| e.0 == j).map_or(T::zero(), |e| e.1)
    }
}

#[inline]
fn row_slot(s: StateIndex, a: Action) -> usize {
    2 * s.0 + a.index()
}

/// The SMDP observed at decision epochs.
#[derive(Debug, Clone)]
pub struct EmbeddedSmdp<T> {
    params: SystemParams<T>,
    probs: DerivedProbs<T>,
    space: StateSpace,
    rows: Vec<TransitionRow<T>>,
    rewards: Vec<T>,
}

impl<T: Scalar> EmbeddedSmdp<T> {
    pub fn params(&self) -> &SystemParams<T> {
        &self.params
    }

    pub fn probs(&self) -> &DerivedProbs<T> {
        &self.probs
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn num_states(&self) -> usize {
        self.space.len()
    }

    pub fn row(&self, s: StateIndex, a: Action) -> &TransitionRow<T> {
        &self.rows[row_slot(s, a)]
    }

    /// Accumulated TAoI over the step.
    pub fn reward(&self, s: StateIndex, a: Action) -> T {
        self.rewards[row_slot(s, a)]
    }

    pub fn sojourn(&self, a: Action) -> usize {
        self.params.sojourn(a)
    }
}

/// Transition kernel of the SMDP at decision epochs.
///
/// The next pre-identification bit is independent of everything else and is
/// 1 with probability `g`; the TAoI component follows the reset/increment
/// dynamics with the success probability conditioned on the current bit.
pub fn build_transitions<T: Scalar>(params: &SystemParams<T>) -> Result<EmbeddedSmdp<T>> {
    let probs = derive_probs(params)?;
    let space = StateSpace::new(params.delta_max());
    let g = probs.g;
    let one = T::one();
    let mut rows = Vec::with_capacity(2 * space.len());
    let mut rewards = Vec::with_capacity(2 * space.len());

    for s in space.states() {
        for a in Action::ALL {
            let raw = match a {
                Action::Skip => {
                    let next = params.next_delta(s.delta, a, false);
                    vec![
                        (space.index(State::new(next, true)), g),
                        (space.index(State::new(next, false)), one - g),
                    ]
                }
                Action::Transmit => {
                    let ok = probs.success_prob(s.pre_id);
                    let fail = probs.failure_prob(s.pre_id);
                    let reset = params.next_delta(s.delta, a, true);
                    let grown = params.next_delta(s.delta, a, false);
                    let ok_pos = ok * g;
                    let fail_pos = fail * g;
                    vec![
                        (space.index(State::new(reset, true)), ok_pos),
                        (space.index(State::new(reset, false)), ok - ok_pos),
                        (space.index(State::new(grown, true)), fail_pos),
                        (space.index(State::new(grown, false)), fail - fail_pos),
                    ]
                }
            };
            rows.push(TransitionRow::from_unmerged(raw));
            rewards.push(params.smdp_reward(s, a));
        }
    }

    Ok(EmbeddedSmdp {
        params: *params,
        probs,
        space,
        rows,
        rewards,
    })
}

/// How uniformization treats mass that the embedded chain already places on
/// the originating state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfLoop {
    /// Self-loop mass `1 - (eps / L) (1 - p(s | s, a))`; rows stay stochastic.
    #[default]
    Fold,
    /// Self-loop mass `1 - eps / L` regardless of native self-transitions.
    /// Rows of capped states become substochastic; kept for comparison only.
    Literal,
}

/// Discrete-time MDP equivalent to the SMDP under uniformization.
#[derive(Debug, Clone)]
pub struct UniformizedMdp<T> {
    params: SystemParams<T>,
    probs: DerivedProbs<T>,
    space: StateSpace,
    epsilon: T,
    self_loop: SelfLoop,
    rows: Vec<TransitionRow<T>>,
    rewards: Vec<T>,
}

impl<T: Scalar> UniformizedMdp<T> {
    pub fn params(&self) -> &SystemParams<T> {
        &self.params
    }

    pub fn probs(&self) -> &DerivedProbs<T> {
        &self.probs
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn num_states(&self) -> usize {
        self.space.len()
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn self_loop_mode(&self) -> SelfLoop {
        self.self_loop
    }

    pub fn row(&self, s: StateIndex, a: Action) -> &TransitionRow<T> {
        &self.rows[row_slot(s, a)]
    }

    /// Per-step reward `delta + (L(a) - 1) / 2`.
    pub fn reward(&self, s: StateIndex, a: Action) -> T {
        self.rewards[row_slot(s, a)]
    }

    /// JSON dump of the kernel for debugging and cross-implementation diffs.
    pub fn to_json(&self) -> serde_json::Value
    where
        T: Serialize,
    {
        kernel_json(&self.params, Some(self.epsilon), &self.rows, &self.rewards)
    }
}

impl<T: Scalar> EmbeddedSmdp<T> {
    pub fn to_json(&self) -> serde_json::Value
    where
        T: Serialize,
    {
        kernel_json(&self.params, None, &self.rows, &self.rewards)
    }
}

#[derive(Serialize)]
struct RowDump<'a, T> {
    s: usize,
    a: Action,
    to: Vec<(usize, &'a T)>,
    r: &'a T,
}

fn kernel_json<T: Scalar + Serialize>(
    params: &SystemParams<T>,
    epsilon: Option<T>,
    rows: &[TransitionRow<T>],
    rewards: &[T],
) -> serde_json::Value {
    let dumped: Vec<RowDump<'_, T>> = rows
        .iter()
        .zip(rewards)
        .enumerate()
        .map(|(slot, (row, r))| RowDump {
            s: slot / 2,
            a: Action::ALL[slot % 2],
            to: row.entries.iter().map(|(j, p)| (j.0, p)).collect(),
            r,
        })
        .collect();
    serde_json::json!({
        "params": params,
        "epsilon": epsilon,
        "rows": dumped,
    })
}

/// Uniformize with the folding self-loop rule.
pub fn uniformize<T: Scalar>(smdp: &EmbeddedSmdp<T>, epsilon: T) -> Result<UniformizedMdp<T>> {
    uniformize_with(smdp, epsilon, SelfLoop::Fold)
}

pub fn uniformize_with<T: Scalar>(smdp: &EmbeddedSmdp<T>, epsilon: T, mode: SelfLoop) -> Result<UniformizedMdp<T>> {
    if !(epsilon > T::zero() && epsilon <= T::one()) {
        return Err(Error::InvalidEpsilon(epsilon.as_f64()));
    }
    let space = smdp.space;
    let params = smdp.params;
    let mut rows = Vec::with_capacity(smdp.rows.len());
    let mut rewards = Vec::with_capacity(smdp.rows.len());
    for s_idx in 0..space.len() {
        let s = StateIndex(s_idx);
        let state = space.state(s);
        for a in Action::ALL {
            let factor = epsilon / T::from_count(params.sojourn(a));
            let row = smdp.row(s, a);
            let native_self = row.prob_to(s);
            let self_mass = match mode {
                SelfLoop::Fold => T::one() - factor * (T::one() - native_self),
                SelfLoop::Literal => T::one() - factor,
            };
            let mut entries: Vec<(StateIndex, T)> = Vec::with_capacity(row.entries.len() + 1);
            let mut placed_self = false;
            for &(j, p) in &row.entries {
                if j == s {
                    continue;
                }
                if !placed_self && j > s {
                    if self_mass > T::zero() {
                        entries.push((s, self_mass));
                    }
                    placed_self = true;
                }
                entries.push((j, factor * p));
            }
            if !placed_self && self_mass > T::zero() {
                entries.push((s, self_mass));
            }
            rows.push(TransitionRow { entries });
            rewards.push(params.uniformized_reward(state, a));
        }
    }
    Ok(UniformizedMdp {
        params,
        probs: smdp.probs,
        space,
        epsilon,
        self_loop: mode,
        rows,
        rewards,
    })
}
