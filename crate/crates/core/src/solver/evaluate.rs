use serde::Serialize;

use crate::error::Result;
use crate::kernel::{EmbeddedSmdp, StateIndex, UniformizedMdp};
use crate::policies::ActionTable;
use crate::scalar::Scalar;
use crate::stationary::stationary_ordered;

/// Long-run behaviour of a fixed policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyValue<T> {
    /// Average TAoI per slot.
    pub avg_taoi: T,
    /// Stationary distribution of the embedded chain over decision epochs.
    pub stationary: Vec<T>,
}

/// Exact average TAoI of a deterministic stationary policy.
///
/// Computes the stationary distribution `mu` of the embedded chain and
/// returns `sum mu(s) R(s, pi(s)) / sum mu(s) L(pi(s))`. Fails if the
/// induced chain has more than one recurrent class.
pub fn evaluate_policy_exact<T: Scalar>(smdp: &EmbeddedSmdp<T>, policy: &ActionTable) -> Result<PolicyValue<T>> {
    let space = smdp.space();
    policy.check_size(space)?;
    let n = space.len();
    let rows: Vec<_> = (0..n)
        .map(|s| smdp.row(StateIndex(s), policy.get(StateIndex(s))).entries.as_slice())
        .collect();
    let key: Vec<usize> = space.states().map(|s| s.delta).collect();
    let mu = stationary_ordered(&rows, &key)?;

    let mut reward = T::zero();
    let mut slots = T::zero();
    for (s, &m) in mu.iter().enumerate() {
        let a = policy.get(StateIndex(s));
        reward += m * smdp.reward(StateIndex(s), a);
        slots += m * T::from_count(smdp.sojourn(a));
    }
    Ok(PolicyValue {
        avg_taoi: reward / slots,
        stationary: mu,
    })
}

/// Average per-step reward of a policy on the uniformized chain.
///
/// Equals [`evaluate_policy_exact`]'s `avg_taoi` when uniformization is
/// exact, which makes it an independent consistency check on the kernel.
pub fn evaluate_policy_uniformized<T: Scalar>(mdp: &UniformizedMdp<T>, policy: &ActionTable) -> Result<T> {
    let space = mdp.space();
    policy.check_size(space)?;
    let n = space.len();
    let rows: Vec<_> = (0..n)
        .map(|s| mdp.row(StateIndex(s), policy.get(StateIndex(s))).entries.as_slice())
        .collect();
    let key: Vec<usize> = space.states().map(|s| s.delta).collect();
    let nu = stationary_ordered(&rows, &key)?;
    Ok(nu
        .iter()
        .enumerate()
        .map(|(s, &m)| m * mdp.reward(StateIndex(s), policy.get(StateIndex(s))))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_transitions, StateSpace};
    use crate::model::{Action, SystemParams};
    use crate::policies::PolicyKind;

    #[test]
    fn always_transmit_closed_form() {
        let p = SystemParams::allowing_null_outcome(1.0, 0.0, 0.0, 3, 12).unwrap();
        let smdp = build_transitions(&p).unwrap();
        let t = PolicyKind::AlwaysTransmit.to_table(smdp.space()).unwrap();
        let v = evaluate_policy_exact(&smdp, &t).unwrap();
        assert_eq!(v.avg_taoi, 4.0);
        let reset = smdp.space().index(crate::model::State::new(3, true));
        assert_eq!(v.stationary[reset.0], 1.0);
    }

    #[test]
    fn never_transmit_sits_at_cap() {
        let p = SystemParams::<f64>::new(0.6, 0.2, 0.3, 4, 25).unwrap();
        let smdp = build_transitions(&p).unwrap();
        let t = PolicyKind::never_transmit().to_table(smdp.space()).unwrap();
        let v = evaluate_policy_exact(&smdp, &t).unwrap();
        assert!((v.avg_taoi - 25.0).abs() < 1e-12);
        let total: f64 = v.stationary.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn size_mismatch() {
        let p = SystemParams::<f64>::new(0.6, 0.2, 0.3, 4, 25).unwrap();
        let smdp = build_transitions(&p).unwrap();
        let t = ActionTable::from_fn(StateSpace::new(3), |_| Action::Skip);
        assert!(evaluate_policy_exact(&smdp, &t).is_err());
    }
}
