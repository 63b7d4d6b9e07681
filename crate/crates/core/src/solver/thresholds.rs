use crate::error::{Error, Result};
use crate::kernel::StateSpace;
use crate::model::State;
use crate::policies::{ActionTable, Threshold, Thresholds};

/// Per-group thresholds of a tabular policy.
///
/// For each pre-identification value the threshold is the smallest delta
/// that transmits; every larger delta must transmit too, otherwise the first
/// offending skip is reported.
pub fn extract_thresholds(policy: &ActionTable, space: StateSpace) -> Result<Thresholds> {
    policy.check_size(space)?;
    let group = |pre_id: bool| -> Result<Threshold> {
        let mut omega = None;
        for delta in 1..=space.delta_max() {
            let a = policy.get(space.index(State::new(delta, pre_id)));
            match (omega, a.is_transmit()) {
                (None, true) => omega = Some(delta),
                (Some(start), false) => {
                    return Err(Error::NonThresholdPolicy {
                        pre_id: pre_id.into(),
                        transmit_at: start,
                        skip_at: delta,
                    })
                }
                _ => {}
            }
        }
        Ok(omega.map_or(Threshold::Never, Threshold::At))
    };
    Ok(Thresholds::new(group(false)?, group(true)?))
}
