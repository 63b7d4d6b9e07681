//! Numerical checks of the structural properties of the converged solution:
//! monotone and concave relative values, a lower bound on their slope, the
//! Q/V difference inequality behind the threshold argument, and the
//! threshold form of the optimal policy itself.
//!
//! Every check reports a margin with the convention "margin >= -tol means
//! the property holds"; negative margins measure the size of a violation.

use serde::Serialize;

use crate::kernel::{StateSpace, UniformizedMdp};
use crate::model::{Action, State};
use crate::policies::Thresholds;
use crate::scalar::Scalar;

use super::thresholds::extract_thresholds;
use super::{Solution, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome<T> {
    pub pass: bool,
    pub worst_margin: T,
    /// `(delta, pre_id)` where the worst margin occurs.
    pub worst_at: Option<(usize, u8)>,
}

impl<T: Scalar> CheckOutcome<T> {
    fn fold(items: impl IntoIterator<Item = (T, (usize, u8))>, tol: T) -> Self {
        let mut worst = T::max_value();
        let mut at = None;
        for (m, s) in items {
            if m < worst {
                worst = m;
                at = Some(s);
            }
        }
        CheckOutcome {
            pass: worst >= -tol,
            worst_margin: worst,
            worst_at: at,
        }
    }
}

/// Slope lower bound `L(a) / (eps (1 - p1))` for one `(F, a)` pair, where
/// `p1` is the transmission failure probability given `F`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeBound<T> {
    pub pre_id: u8,
    pub action: Action,
    pub bound: T,
    pub min_slope: T,
    pub margin: T,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport<T> {
    pub tolerance: T,
    pub converged: bool,
    /// Relative values non-decreasing in delta per group.
    pub lemma1_pass: bool,
    pub lemma1: CheckOutcome<T>,
    /// Relative values concave in delta per group.
    pub lemma2_pass: bool,
    pub lemma2: CheckOutcome<T>,
    /// Slope lower bound, for both actions and both groups.
    pub lemma3_pass: bool,
    pub lemma3: Vec<SlopeBound<T>>,
    pub lemma3_worst_margin: T,
    /// Optimal policy is threshold-type per group.
    pub theorem1_threshold_pass: bool,
    pub thresholds: Option<Thresholds>,
    pub theorem1_error: Option<String>,
    /// `Q(s2, a) - Q(s1, a) <= V(s2) - V(s1)` for `delta1 <= delta2`.
    pub appendix_inequality_pass: bool,
    /// Indexed by action: `[skip, transmit]`.
    pub appendix: [CheckOutcome<T>; 2],
}

impl<T: Scalar> LemmaReport<T> {
    /// The checks treated as hard failures.
    pub fn hard_pass(&self) -> bool {
        self.theorem1_threshold_pass && self.lemma1_pass
    }
}

fn group_values<T: Scalar>(space: StateSpace, pre_id: bool, f: impl Fn(usize) -> T) -> Vec<T> {
    (1..=space.delta_max())
        .map(|d| f(space.index(State::new(d, pre_id)).0))
        .collect()
}

pub fn verify_structure<T: Scalar>(
    solution: &Solution<T>,
    mdp: &UniformizedMdp<T>,
    cfg: &SolverConfig<T>,
) -> LemmaReport<T> {
    let tol = cfg.tol;
    let space = mdp.space();
    let params = mdp.params();
    let eps = mdp.epsilon();
    let groups = [false, true];

    let mut mono = Vec::new();
    let mut concave = Vec::new();
    let mut min_slope = [T::max_value(); 2];
    for &f in &groups {
        let h = group_values(space, f, |i| solution.h[i]);
        for d in 1..h.len() {
            let slope = h[d] - h[d - 1];
            mono.push((slope, (d + 1, u8::from(f))));
            min_slope[usize::from(f)] = min_slope[usize::from(f)].min(slope);
        }
        for d in 1..h.len().saturating_sub(1) {
            let second = h[d + 1] - T::lit(2.0) * h[d] + h[d - 1];
            concave.push((-second, (d + 1, u8::from(f))));
        }
    }
    let lemma1 = CheckOutcome::fold(mono, tol);
    let lemma2 = CheckOutcome::fold(concave, tol);

    let mut lemma3 = Vec::new();
    for &f in &groups {
        let success = mdp.probs().success_prob(f);
        for a in Action::ALL {
            let l = T::from_count(params.sojourn(a));
            let bound = if success > T::zero() {
                l / (eps * success)
            } else {
                T::max_value()
            };
            let slope = min_slope[usize::from(f)];
            let margin = if space.delta_max() < 2 {
                T::zero()
            } else if bound == T::max_value() {
                -T::max_value()
            } else {
                slope - bound
            };
            lemma3.push(SlopeBound {
                pre_id: f.into(),
                action: a,
                bound,
                min_slope: slope,
                margin,
                pass: margin >= -tol,
            });
        }
    }
    let lemma3_worst_margin = lemma3.iter().map(|b| b.margin).fold(T::max_value(), T::min);
    let lemma3_pass = lemma3.iter().all(|b| b.pass);

    let (theorem1_threshold_pass, thresholds, theorem1_error) = match extract_thresholds(&solution.policy, space) {
        Ok(t) => (true, Some(t), None),
        Err(e) => (false, None, Some(e.to_string())),
    };

    let appendix = Action::ALL.map(|a| {
        let mut items = Vec::new();
        for &f in &groups {
            let gap = group_values(space, f, |i| {
                let q = solution.q_values[i];
                q[a.index()] - q[0].min(q[1])
            });
            let mut running_min = T::max_value();
            for (d, &g) in gap.iter().enumerate() {
                running_min = running_min.min(g);
                items.push((running_min - g, (d + 1, u8::from(f))));
            }
        }
        CheckOutcome::fold(items, tol)
    });
    let appendix_inequality_pass = appendix.iter().all(|c| c.pass);

    LemmaReport {
        tolerance: tol,
        converged: solution.converged,
        lemma1_pass: lemma1.pass,
        lemma1,
        lemma2_pass: lemma2.pass,
        lemma2,
        lemma3_pass,
        lemma3,
        lemma3_worst_margin,
        theorem1_threshold_pass,
        thresholds,
        theorem1_error,
        appendix_inequality_pass,
        appendix,
    }
}
