//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tinopt::ChannelMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rows(ch: &ChannelMatrix) -> Vec<Vec<f64>> {
    ch.rows()
}

/// Uniform entries in `[0, 1]`.
pub fn random_channel(rng: &mut ChaCha8Rng, k: usize) -> ChannelMatrix {
    ChannelMatrix::from_fn(k, |_, _| rng.random::<f64>()).unwrap()
}

fn condition_holds(a: &[Vec<f64>]) -> bool {
    let k = a.len();
    (0..k).all(|i| {
        let out = (0..k).filter(|&j| j != i).map(|j| a[j][i]).fold(0.0, f64::max);
        let inc = (0..k).filter(|&j| j != i).map(|j| a[i][j]).fold(0.0, f64::max);
        a[i][i] >= out + inc
    })
}

/// Direct gains in `[0.5, 1]`, cross gains in `[0, 0.5]`, resampled until the
/// optimality condition holds.
pub fn random_condition_channel(rng: &mut ChaCha8Rng, k: usize) -> ChannelMatrix {
    loop {
        let a: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        if i == j {
                            rng.random_range(0.5..=1.0)
                        } else {
                            rng.random_range(0.0..=0.5)
                        }
                    })
                    .collect()
            })
            .collect();
        if condition_holds(&a) {
            return ChannelMatrix::new(a).unwrap();
        }
    }
}

/// All directed cycles over subsets of `users` of size >= 2, each listed once
/// (the smallest user first).
pub fn all_cycles(users: &[usize]) -> Vec<Vec<usize>> {
    fn extend(path: &mut Vec<usize>, rest: &[usize], out: &mut Vec<Vec<usize>>) {
        if path.len() >= 2 {
            out.push(path.clone());
        }
        for (idx, &u) in rest.iter().enumerate() {
            path.push(u);
            let mut next = rest.to_vec();
            next.remove(idx);
            extend(path, &next, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    for (idx, &first) in users.iter().enumerate() {
        let rest: Vec<usize> = users
            .iter()
            .enumerate()
            .filter(|&(j, &u)| j != idx && u > first)
            .map(|(_, &u)| u)
            .collect();
        extend(&mut vec![first], &rest, &mut out);
    }
    out
}

pub fn cycle_rhs(a: &[Vec<f64>], cycle: &[usize]) -> f64 {
    let m = cycle.len();
    (0..m)
        .map(|j| {
            let cur = cycle[j];
            let prev = cycle[(j + m - 1) % m];
            a[cur][cur] - a[prev][cur]
        })
        .sum()
}

/// `(sorted users, rhs)` for every inequality of `P_S`, boxes included.
pub fn inequalities(a: &[Vec<f64>], silent: &[usize]) -> Vec<(Vec<usize>, f64)> {
    let active: Vec<usize> = (0..a.len()).filter(|i| !silent.contains(i)).collect();
    let mut out: Vec<(Vec<usize>, f64)> = active.iter().map(|&i| (vec![i], a[i][i])).collect();
    for c in all_cycles(&active) {
        let mut support = c.clone();
        support.sort_unstable();
        out.push((support, cycle_rhs(a, &c)));
    }
    out
}

/// Smallest slack of `d` in `P_S`, counting `d >= 0` and `d_S = 0`.
pub fn min_margin(a: &[Vec<f64>], silent: &[usize], d: &[f64]) -> f64 {
    let mut m = d.iter().copied().fold(f64::INFINITY, f64::min);
    for &s in silent {
        m = m.min(-d[s].abs());
    }
    for (users, rhs) in inequalities(a, silent) {
        m = m.min(rhs - users.iter().map(|&u| d[u]).sum::<f64>());
    }
    m
}

/// Membership in the union of all `P_S`.
pub fn in_union(a: &[Vec<f64>], d: &[f64], tol: f64) -> bool {
    let k = a.len();
    (0u32..1 << k).any(|mask| {
        let silent: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
        min_margin(a, &silent, d) >= -tol
    })
}

/// TIN GDoF; `None` marks a silent user.
pub fn tin_gdof(a: &[Vec<f64>], r: &[Option<f64>]) -> Vec<f64> {
    let k = a.len();
    (0..k)
        .map(|i| match r[i] {
            None => 0.0,
            Some(ri) => {
                let mut interference: f64 = 0.0;
                for j in 0..k {
                    if j != i {
                        if let Some(rj) = r[j] {
                            interference = interference.max(a[i][j] + rj);
                        }
                    }
                }
                (a[i][i] + ri - interference).max(0.0)
            }
        })
        .collect()
}

/// `d` scaled onto the boundary of `P_∅` along the ray through `u`.
pub fn boundary_point(a: &[Vec<f64>], u: &[f64]) -> Vec<f64> {
    let scale = inequalities(a, &[])
        .iter()
        .map(|(users, rhs)| {
            let s: f64 = users.iter().map(|&i| u[i]).sum();
            if s > 0.0 {
                rhs / s
            } else {
                f64::INFINITY
            }
        })
        .fold(f64::INFINITY, f64::min);
    u.iter().map(|x| x * scale).collect()
}
