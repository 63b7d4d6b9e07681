use crate::error::{Error, Result};
use crate::kernel::EmbeddedSmdp;
use crate::model::Action;
use crate::policies::ActionTable;
use crate::scalar::Scalar;

use super::evaluate::evaluate_policy_exact;

/// Largest state space the exhaustive search accepts (2^20 policies).
pub const ORACLE_STATE_GUARD: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T> {
    pub policy: ActionTable,
    pub value: T,
    /// Policies with a unique stationary distribution that were evaluated.
    pub evaluated: usize,
    /// Policies whose induced chain has several recurrent classes; their
    /// average cost depends on the initial state, so they are not ranked.
    pub skipped_multichain: usize,
}

/// Exhaustive minimization of the exact average TAoI over all deterministic
/// stationary policies.
///
/// Tables are enumerated in lexicographic order of the action vector, and a
/// later table replaces the incumbent only if it is better by more than
/// rounding noise, so ties go to the lexicographically smaller table.
pub fn brute_force_optimal<T: Scalar>(smdp: &EmbeddedSmdp<T>) -> Result<OracleResult<T>> {
    let n = smdp.num_states();
    if n > ORACLE_STATE_GUARD {
        return Err(Error::OracleGuard {
            states: n,
            guard: ORACLE_STATE_GUARD,
        });
    }
    let noise = T::lit(64.0) * T::epsilon();
    let mut best: Option<(u64, T)> = None;
    let mut evaluated = 0;
    let mut skipped = 0;
    let table_of = |mask: u64| ActionTable::new((0..n).map(|i| Action::from(mask >> (n - 1 - i) & 1 == 1)).collect());
    for mask in 0..(1u64 << n) {
        let table = table_of(mask);
        let value = match evaluate_policy_exact(smdp, &table) {
            Ok(v) => v.avg_taoi,
            Err(Error::SingularChain(_)) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        evaluated += 1;
        match best {
            Some((_, b)) if value >= b - noise * b.abs() => {}
            _ => best = Some((mask, value)),
        }
    }
    let (mask, value) = best.ok_or_else(|| Error::SingularChain("no policy induces a unichain".into()))?;
    Ok(OracleResult {
        policy: table_of(mask),
        value,
        evaluated,
        skipped_multichain: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::build_transitions;
    use crate::model::SystemParams;

    #[test]
    fn guard_refuses_large_spaces() {
        let p = SystemParams::new(0.5, 0.2, 0.2, 2, 11).unwrap();
        let smdp = build_transitions(&p).unwrap();
        assert_eq!(
            brute_force_optimal(&smdp).unwrap_err(),
            Error::OracleGuard { states: 22, guard: 20 }
        );
    }

    #[test]
    fn single_delta_space() {
        let p = SystemParams::new(0.5, 0.2, 0.2, 1, 1).unwrap();
        let smdp = build_transitions(&p).unwrap();
        let r = brute_force_optimal(&smdp).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.evaluated, 4);
    }
}
