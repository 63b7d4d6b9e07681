#![allow(dead_code, clippy::needless_range_loop)]

use taoi::{ActionTable, EmbeddedSmdp, StateIndex, SystemParams};

pub fn params(q: f64, p: f64, t_u: usize, delta_max: usize) -> SystemParams {
    SystemParams::new(q, p, p, t_u, delta_max).unwrap()
}

/// Stationary distribution of a dense row-stochastic matrix by Gaussian
/// elimination on `pi (P - I) = 0`, with the last balance equation
/// replaced by normalization.
pub fn dense_stationary(p: &[Vec<f64>]) -> Vec<f64> {
    let n = p.len();
    let mut a = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            a[j][i] = p[i][j] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for i in 0..n {
        a[n - 1][i] = 1.0;
    }
    a[n - 1][n] = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        let d = a[col][col];
        assert!(d.abs() > 1e-14, "singular chain");
        for k in col..=n {
            a[col][k] /= d;
        }
        for r in 0..n {
            if r != col && a[r][col] != 0.0 {
                let f = a[r][col];
                for k in col..=n {
                    a[r][k] -= f * a[col][k];
                }
            }
        }
    }
    (0..n).map(|i| a[i][n]).collect()
}

pub fn dense_matrix(smdp: &EmbeddedSmdp, policy: &ActionTable) -> Vec<Vec<f64>> {
    let n = smdp.num_states();
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        let s = StateIndex(i);
        for &(j, pr) in &smdp.row(s, policy.get(s)).entries {
            row[j.0] += pr;
        }
    }
    m
}

/// Ratio of expected reward to expected sojourn under the embedded chain.
pub fn dense_avg_taoi(smdp: &EmbeddedSmdp, policy: &ActionTable) -> f64 {
    let mu = dense_stationary(&dense_matrix(smdp, policy));
    let (mut num, mut den) = (0.0, 0.0);
    for (i, m) in mu.iter().enumerate() {
        let s = StateIndex(i);
        let a = policy.get(s);
        num += m * smdp.reward(s, a);
        den += m * smdp.sojourn(a) as f64;
    }
    num / den
}

/// Slot-by-slot TAoI sum over one sojourn of length `l` starting at `delta`.
pub fn staircase_sum(delta: usize, l: usize) -> f64 {
    (0..l).map(|k| (delta + k) as f64).sum()
}
