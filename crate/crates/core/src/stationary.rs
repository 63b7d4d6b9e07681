//! Stationary distributions of chains whose transitions mostly move "up".
//!
//! States carry an ordering key (the TAoI level). A transition to a state
//! with a strictly larger key is a forward move; a transition to the state
//! itself is a self-loop; anything else is feedback. Feedback only ever
//! targets a handful of states (the reset level and the cap), so their
//! stationary masses are taken as unknowns, every other mass is expressed
//! as a linear combination of them by one ascending sweep, and a tiny dense
//! system closes the balance equations. Cost is O(|S| * k) for k feedback
//! targets.

use crate::error::{Error, Result};
use crate::kernel::StateIndex;
use crate::scalar::Scalar;

/// Solves `mu P = mu`, `sum(mu) = 1` for the chain given by `rows` and the
/// ordering `key`.
pub fn stationary_ordered<T: Scalar>(rows: &[&[(StateIndex, T)]], key: &[usize]) -> Result<Vec<T>> {
    let n = rows.len();
    assert_eq!(key.len(), n);
    let zero = T::zero();
    let one = T::one();

    let mut slot: Vec<Option<usize>> = vec![None; n];
    let mut targets: Vec<usize> = Vec::new();
    let mut mark = |j: usize, slot: &mut Vec<Option<usize>>| {
        if slot[j].is_none() {
            slot[j] = Some(targets.len());
            targets.push(j);
        }
    };
    for (s, row) in rows.iter().enumerate() {
        for &(j, p) in row.iter() {
            let j = j.0;
            if p <= zero {
                continue;
            }
            if j == s {
                if p >= one {
                    mark(s, &mut slot);
                }
            } else if key[j] <= key[s] {
                mark(j, &mut slot);
            }
        }
    }
    let k = targets.len();
    if k == 0 {
        return Err(Error::SingularChain("chain has no recurrent feedback".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&s| key[s]);

    // coef[s * k + b]: coefficient of unknown b in mu(s).
    let mut coef = vec![zero; n * k];
    let mut inflow = vec![zero; n * k];
    // balance[b * k + c]: inflow into target b from unknown c.
    let mut balance = vec![zero; k * k];

    for &s in &order {
        match slot[s] {
            Some(b) => coef[s * k + b] = one,
            None => {
                let stay = rows[s].iter().find(|e| e.0 .0 == s).map_or(zero, |e| e.1);
                let scale = one / (one - stay);
                for c in 0..k {
                    coef[s * k + c] = inflow[s * k + c] * scale;
                }
            }
        }
        for &(j, p) in rows[s].iter() {
            let j = j.0;
            if p <= zero {
                continue;
            }
            if let Some(b) = slot[j] {
                for c in 0..k {
                    balance[b * k + c] += p * coef[s * k + c];
                }
            } else if j != s {
                debug_assert!(key[j] > key[s]);
                for c in 0..k {
                    inflow[j * k + c] += p * coef[s * k + c];
                }
            }
        }
    }

    // (balance - I) x = 0 for each target, plus the normalization row.
    let width = k + 1;
    let mut sys = vec![zero; (k + 1) * width];
    for b in 0..k {
        for c in 0..k {
            let diag = if b == c { one } else { zero };
            sys[b * width + c] = balance[b * k + c] - diag;
        }
    }
    for s in 0..n {
        for c in 0..k {
            sys[k * width + c] += coef[s * k + c];
        }
    }
    sys[k * width + k] = one;

    let x = solve_overdetermined(&mut sys, k + 1, k)?;

    let mut mu = vec![zero; n];
    for s in 0..n {
        let mut m = zero;
        for c in 0..k {
            m += coef[s * k + c] * x[c];
        }
        mu[s] = m;
    }
    let floor = -T::lit(1e3) * T::epsilon();
    if mu.iter().any(|&m| !m.is_finite() || m < floor) {
        return Err(Error::SingularChain("negative or non-finite stationary mass".into()));
    }
    for m in &mut mu {
        if *m < zero {
            *m = zero;
        }
    }
    Ok(mu)
}

/// Row-pivoted elimination on an `m x (k + 1)` augmented system with
/// `m >= k`. Rows left over after `k` pivots must be consistent.
fn solve_overdetermined<T: Scalar>(sys: &mut [T], m: usize, k: usize) -> Result<Vec<T>> {
    let width = k + 1;
    for r in 0..m {
        let scale = (0..width).map(|c| sys[r * width + c].abs()).fold(T::zero(), T::max);
        if scale > T::zero() {
            for c in 0..width {
                sys[r * width + c] /= scale;
            }
        }
    }
    let pivot_floor = T::lit(1e4) * T::epsilon() * T::from_count(k.max(1));
    let mut row_of = Vec::with_capacity(k);
    let mut used = vec![false; m];
    for col in 0..k {
        let (best, mag) = (0..m)
            .filter(|&r| !used[r])
            .map(|r| (r, sys[r * width + col].abs()))
            .fold((usize::MAX, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best == usize::MAX || mag <= pivot_floor {
            return Err(Error::SingularChain(format!(
                "balance system is rank deficient at column {col}"
            )));
        }
        used[best] = true;
        row_of.push(best);
        let piv = sys[best * width + col];
        for r in 0..m {
            if r == best {
                continue;
            }
            let f = sys[r * width + col] / piv;
            if f == T::zero() {
                continue;
            }
            for c in col..width {
                let v = sys[best * width + c];
                sys[r * width + c] -= f * v;
            }
        }
    }
    for r in (0..m).filter(|&r| !used[r]) {
        if sys[r * width + k].abs() > T::lit(1e-6) {
            return Err(Error::SingularChain("balance equations are inconsistent".into()));
        }
    }
    Ok((0..k)
        .map(|col| {
            let r = row_of[col];
            sys[r * width + k] / sys[r * width + col]
        })
        .collect())
}
