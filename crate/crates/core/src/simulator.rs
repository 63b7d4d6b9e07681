//! Slot-level Monte Carlo simulation of the monitoring loop.
//!
//! Each step draws a fresh label `Y ~ Bernoulli(q)` and a pre-identification
//! bit from the confusion model, asks the policy for an action, and advances
//! the TAoI. The receiver-side classifier is perfect, so a transmission
//! succeeds exactly when `Y = 1`. Replications use independent ChaCha8
//! streams seeded with `seed ^ r`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::StateSpace;
use crate::model::{Action, State, SystemParams};
use crate::policies::{ActionTable, PolicyKind};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Horizon; the step that crosses it is completed.
    pub total_slots: u64,
    /// Steps starting before this slot are excluded from the average.
    /// `None` means `10 * delta_max`.
    pub warmup_slots: Option<u64>,
    pub seed: u64,
    pub initial_delta: usize,
    pub replications: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            total_slots: 1_000_000,
            warmup_slots: None,
            seed: 0,
            initial_delta: 1,
            replications: 20,
        }
    }
}

impl SimConfig {
    pub fn warmup_for<T: Scalar>(&self, params: &SystemParams<T>) -> u64 {
        self.warmup_slots.unwrap_or(10 * params.delta_max() as u64)
    }

    pub fn validate<T: Scalar>(&self, params: &SystemParams<T>) -> Result<()> {
        let warmup = self.warmup_for(params);
        if self.total_slots <= warmup {
            return Err(Error::InvalidParameter {
                name: "total_slots",
                reason: format!("horizon {} must exceed warmup {warmup}", self.total_slots),
            });
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter {
                name: "replications",
                reason: "at least one replication is required".into(),
            });
        }
        if self.initial_delta == 0 || self.initial_delta > params.delta_max() {
            return Err(Error::InvalidParameter {
                name: "initial_delta",
                reason: format!("{} outside [1, {}]", self.initial_delta, params.delta_max()),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    /// Mean over replications of the post-warmup per-slot average TAoI.
    pub avg_taoi: f64,
    /// Standard error of `avg_taoi` across replications (0 for a single one).
    pub stderr: f64,
    pub per_replication: Vec<f64>,
    pub steps_taken: u64,
    pub transmissions: u64,
    pub skips: u64,
    pub successes: u64,
    pub slots_simulated: u64,
    /// Transmissions and successes split by the pre-identification bit.
    pub transmissions_by_pre_id: [u64; 2],
    pub successes_by_pre_id: [u64; 2],
}

/// One decision step, enough to redraw a TAoI staircase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: u64,
    pub slot: u64,
    pub delta: usize,
    pub pre_id: u8,
    pub action: u8,
    /// Task indicator, present only for transmissions.
    pub d: Option<u8>,
    pub delta_next: usize,
}

struct Loop<'a> {
    q: f64,
    p_a: f64,
    p_b: f64,
    t_u: usize,
    delta_max: usize,
    space: StateSpace,
    table: &'a ActionTable,
    rng: ChaCha8Rng,
    delta: usize,
    slot: u64,
    step: u64,
}

impl Loop<'_> {
    fn advance(&mut self) -> TraceRecord {
        let target = self.rng.gen::<f64>() < self.q;
        let u = self.rng.gen::<f64>();
        let pre_id = if target { u >= self.p_b } else { u < self.p_a };
        let a = self.table.get(self.space.index(State::new(self.delta, pre_id)));
        let (d, next) = match a {
            Action::Transmit => {
                let next = if target {
                    self.t_u
                } else {
                    (self.delta + self.t_u).min(self.delta_max)
                };
                (Some(u8::from(target)), next)
            }
            Action::Skip => (None, (self.delta + 1).min(self.delta_max)),
        };
        let rec = TraceRecord {
            step: self.step,
            slot: self.slot,
            delta: self.delta,
            pre_id: pre_id.into(),
            action: a.into(),
            d,
            delta_next: next,
        };
        self.slot += if a.is_transmit() { self.t_u as u64 } else { 1 };
        self.step += 1;
        self.delta = next;
        rec
    }
}

fn make_loop<'a, T: Scalar>(params: &SystemParams<T>, table: &'a ActionTable, cfg: &SimConfig, seed: u64) -> Loop<'a> {
    Loop {
        q: params.q().as_f64(),
        p_a: params.p_a().as_f64(),
        p_b: params.p_b().as_f64(),
        t_u: params.t_u(),
        delta_max: params.delta_max(),
        space: StateSpace::new(params.delta_max()),
        table,
        rng: ChaCha8Rng::seed_from_u64(seed),
        delta: cfg.initial_delta,
        slot: 0,
        step: 0,
    }
}

#[derive(Default)]
struct Tally {
    reward: u64,
    slots: u64,
    steps: u64,
    transmissions: u64,
    skips: u64,
    successes: u64,
    tx_by_f: [u64; 2],
    ok_by_f: [u64; 2],
    slots_simulated: u64,
}

fn replicate<T: Scalar>(params: &SystemParams<T>, table: &ActionTable, cfg: &SimConfig, r: usize) -> Tally {
    let warmup = cfg.warmup_for(params);
    let mut lp = make_loop(params, table, cfg, cfg.seed ^ r as u64);
    let mut t = Tally::default();
    while lp.slot < cfg.total_slots {
        let rec = lp.advance();
        let l = if rec.action == 1 { params.t_u() as u64 } else { 1 };
        t.steps += 1;
        if rec.action == 1 {
            t.transmissions += 1;
            t.tx_by_f[rec.pre_id as usize] += 1;
            if rec.d == Some(1) {
                t.successes += 1;
                t.ok_by_f[rec.pre_id as usize] += 1;
            }
        } else {
            t.skips += 1;
        }
        if rec.slot >= warmup {
            t.reward += l * rec.delta as u64 + l * (l - 1) / 2;
            t.slots += l;
        }
    }
    t.slots_simulated = lp.slot;
    t
}

/// Empirical long-run average TAoI of `policy` over `cfg.replications`
/// independent runs.
pub fn run<T: Scalar>(params: &SystemParams<T>, policy: &PolicyKind, cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate(params)?;
    let table = policy.to_table(StateSpace::new(params.delta_max()))?;
    let tallies: Vec<Tally> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| replicate(params, &table, cfg, r))
        .collect();

    let per_replication: Vec<f64> = tallies.iter().map(|t| t.reward as f64 / t.slots as f64).collect();
    let reps = per_replication.len() as f64;
    let mean = per_replication.iter().sum::<f64>() / reps;
    let stderr = if per_replication.len() > 1 {
        let var = per_replication.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1.0);
        (var / reps).sqrt()
    } else {
        0.0
    };
    let sum = |f: fn(&Tally) -> u64| tallies.iter().map(f).sum::<u64>();
    Ok(SimResult {
        avg_taoi: mean,
        stderr,
        per_replication,
        steps_taken: sum(|t| t.steps),
        transmissions: sum(|t| t.transmissions),
        skips: sum(|t| t.skips),
        successes: sum(|t| t.successes),
        slots_simulated: sum(|t| t.slots_simulated),
        transmissions_by_pre_id: [sum(|t| t.tx_by_f[0]), sum(|t| t.tx_by_f[1])],
        successes_by_pre_id: [sum(|t| t.ok_by_f[0]), sum(|t| t.ok_by_f[1])],
    })
}

/// First `n_steps` steps of replication 0.
pub fn trace<T: Scalar>(
    params: &SystemParams<T>,
    policy: &PolicyKind,
    cfg: &SimConfig,
    n_steps: usize,
) -> Result<Vec<TraceRecord>> {
    if n_steps == 0 {
        return Err(Error::InvalidParameter {
            name: "n_steps",
            reason: "a trace needs at least one step".into(),
        });
    }
    cfg.validate(params)?;
    let table = policy.to_table(StateSpace::new(params.delta_max()))?;
    let mut lp = make_loop(params, &table, cfg, cfg.seed);
    Ok((0..n_steps).map(|_| lp.advance()).collect())
}

/// Writes `step,slot,delta,pre_id,action,d,delta_next`; `d` is empty for skips.
pub fn write_trace_csv<W: Write>(records: &[TraceRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
