//! Explicit TIN regions.
//!
//! `P_S` is the polyhedral TIN region of the users outside the silent set `S`:
//! boxes `0 <= d_i <= alpha_ii` for active users, `d_i = 0` on `S`, and one
//! bound per cyclic sequence `(i_1, ..., i_m)` of active users,
//! `sum_j d_{i_j} <= sum_j (alpha_{i_j i_j} - alpha_{i_{j-1} i_j})`.
//! The general TIN region is the union of all `P_S`.

use std::collections::HashMap;
use std::fmt;

use crate::channel::{check_tin_condition, ChannelMatrix, GdofTuple, Power, PowerExponents};
use crate::error::{Result, TinError};
use crate::lp::{Constraint, LinearProgram, LpSolution};
use crate::potential::{build_graph, decide_membership, BoundKind, MembershipCertificate, Node, EPS_LEN};

/// Largest K for which the full union of `2^K` polyhedra is enumerated.
pub const K_MAX_UNION: usize = 12;

/// Largest K for which vertices are enumerated.
pub const K_MAX_VERTICES: usize = 4;

const RHS_TOL: f64 = 1e-12;

/// A directed cycle over distinct users, rotated so the smallest user is first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CyclicSequence(Vec<usize>);

impl CyclicSequence {
    pub fn new(users: Vec<usize>) -> Result<Self> {
        let mut sorted = users.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if users.len() < 2 || sorted.len() != users.len() {
            return Err(TinError::InvalidCycle(users));
        }
        let start = users
            .iter()
            .enumerate()
            .min_by_key(|(_, &u)| u)
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut users = users;
        users.rotate_left(start);
        Ok(Self(users))
    }

    pub fn users(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sorted support of the cycle.
    pub fn support(&self) -> Vec<usize> {
        let mut s = self.0.clone();
        s.sort_unstable();
        s
    }

    /// The same users traversed in the opposite direction.
    pub fn reversed(&self) -> Self {
        let mut users = self.0.clone();
        users.reverse();
        Self::new(users).expect("reversal keeps users distinct")
    }

    /// `sum_j (alpha_{i_j i_j} - alpha_{i_{j-1} i_j})` with `i_0 = i_m`.
    pub fn bound_rhs(&self, alpha: &ChannelMatrix) -> f64 {
        let m = self.0.len();
        (0..m)
            .map(|j| {
                let cur = self.0[j];
                let prev = self.0[(j + m - 1) % m];
                alpha.direct(cur) - alpha.get(prev, cur)
            })
            .sum()
    }

    pub(crate) fn map_users(&self, labels: &[usize]) -> Self {
        Self::new(self.0.iter().map(|&i| labels[i]).collect()).expect("labels are distinct")
    }
}

impl fmt::Display for CyclicSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.0.iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "({})", labels.join(","))
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let Some(i) = (0..v.len() - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..v.len()).rev().find(|&j| v[j] > v[i]).unwrap();
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// All cyclic sequences over subsets (of size >= 2) of `users`, ordered by
/// length and then lexicographically.
pub fn enumerate_cycles(users: &[usize]) -> Vec<CyclicSequence> {
    let mut pool = users.to_vec();
    pool.sort_unstable();
    pool.dedup();
    let n = pool.len();
    let mut out = Vec::new();
    for m in 2..=n {
        let mut idx: Vec<usize> = (0..m).collect();
        loop {
            let first = pool[idx[0]];
            let mut rest: Vec<usize> = idx[1..].iter().map(|&i| pool[i]).collect();
            loop {
                let mut seq = Vec::with_capacity(m);
                seq.push(first);
                seq.extend_from_slice(&rest);
                out.push(CyclicSequence(seq));
                if !next_permutation(&mut rest) {
                    break;
                }
            }
            // next m-combination of 0..n
            let Some(pos) = (0..m).rev().find(|&p| idx[p] != p + n - m) else {
                break;
            };
            idx[pos] += 1;
            for q in pos + 1..m {
                idx[q] = idx[q - 1] + 1;
            }
        }
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.0.cmp(&b.0)));
    out
}

/// Number of cyclic sequences over a K-set: `sum_{m=2..K} C(K, m) (m-1)!`.
pub fn cycle_count(k: usize) -> u128 {
    let mut total = 0u128;
    for m in 2..=k as u128 {
        let mut binom = 1u128;
        for i in 0..m {
            binom = binom * (k as u128 - i) / (i + 1);
        }
        let fact: u128 = (1..m).product();
        total += binom * fact;
    }
    total
}

/// `sum_{i in users} d_i <= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearInequality {
    /// Sorted users with coefficient 1; all others have coefficient 0.
    pub users: Vec<usize>,
    pub rhs: f64,
}

impl LinearInequality {
    pub fn coefficients(&self, k: usize) -> Vec<f64> {
        let mut c = vec![0.0; k];
        for &i in &self.users {
            c[i] = 1.0;
        }
        c
    }

    pub fn lhs(&self, d: &[f64]) -> f64 {
        self.users.iter().map(|&i| d[i]).sum()
    }

    pub fn margin(&self, d: &[f64]) -> f64 {
        self.rhs - self.lhs(d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleBound {
    pub seq: CyclicSequence,
    pub rhs: f64,
}

/// H-representation of `P_S`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    k: usize,
    silent: Vec<usize>,
    boxes: Vec<(usize, f64)>,
    cycles: Vec<CycleBound>,
}

impl Polyhedron {
    /// Assembles a polyhedron from parts; cycles are put in canonical order.
    pub fn from_parts(
        k: usize,
        silent: Vec<usize>,
        boxes: Vec<(usize, f64)>,
        mut cycles: Vec<CycleBound>,
    ) -> Result<Self> {
        let check = |u: usize| {
            if u < k {
                Ok(())
            } else {
                Err(TinError::UserOutOfRange { user: u, k })
            }
        };
        for &u in &silent {
            check(u)?;
        }
        for &(u, ub) in &boxes {
            check(u)?;
            if !ub.is_finite() {
                return Err(TinError::InvalidConfig(format!("box bound {ub} is not finite")));
            }
        }
        for c in &cycles {
            for &u in c.seq.users() {
                check(u)?;
                if silent.contains(&u) {
                    return Err(TinError::InvalidConfig(format!(
                        "cycle {} uses silent user {}",
                        c.seq,
                        u + 1
                    )));
                }
            }
            if !c.rhs.is_finite() {
                return Err(TinError::InvalidConfig(format!("cycle bound {} is not finite", c.rhs)));
            }
        }
        let mut silent = silent;
        silent.sort_unstable();
        silent.dedup();
        let mut boxes = boxes;
        boxes.sort_by_key(|b| b.0);
        cycles.sort_by(|a, b| a.seq.len().cmp(&b.seq.len()).then_with(|| a.seq.cmp(&b.seq)));
        Ok(Self {
            k,
            silent,
            boxes,
            cycles,
        })
    }

    pub fn users(&self) -> usize {
        self.k
    }

    pub fn silent(&self) -> &[usize] {
        &self.silent
    }

    pub fn active(&self) -> Vec<usize> {
        (0..self.k).filter(|i| !self.silent.contains(i)).collect()
    }

    /// `(user, upper bound)` for each boxed user.
    pub fn boxes(&self) -> &[(usize, f64)] {
        &self.boxes
    }

    pub fn cycles(&self) -> &[CycleBound] {
        &self.cycles
    }

    /// Upper-bound inequalities: boxes first, then cycle bounds.
    pub fn inequalities(&self) -> Vec<LinearInequality> {
        self.boxes
            .iter()
            .map(|&(u, ub)| LinearInequality {
                users: vec![u],
                rhs: ub,
            })
            .chain(self.cycles.iter().map(|c| LinearInequality {
                users: c.seq.support(),
                rhs: c.rhs,
            }))
            .collect()
    }

    /// Smallest slack over all constraints, including `d >= 0` and `d_S = 0`.
    pub fn min_margin(&self, d: &[f64]) -> f64 {
        let lower = d.iter().copied().fold(f64::INFINITY, f64::min);
        let silent = self
            .silent
            .iter()
            .map(|&i| -d[i].abs())
            .fold(f64::INFINITY, f64::min);
        self.inequalities()
            .iter()
            .map(|q| q.margin(d))
            .fold(lower.min(silent), f64::min)
    }

    pub fn contains(&self, d: &[f64], tol: f64) -> bool {
        d.len() == self.k && self.min_margin(d) >= -tol
    }

    /// The first violated inequality in canonical order, if any.
    pub fn first_violation(&self, d: &[f64], tol: f64) -> Option<LinearInequality> {
        self.inequalities().into_iter().find(|q| q.margin(d) < -tol)
    }

    /// True when some cycle bound is negative, which excludes even `d = 0`.
    pub fn is_empty(&self) -> bool {
        self.cycles.iter().any(|c| c.rhs < -RHS_TOL)
    }

    /// Drops inequalities implied by a single other inequality (together with
    /// the boxes and `d >= 0`).
    ///
    /// `sum_U d <= b` is implied by `sum_V d <= c` when `U ⊆ V` and `c <= b`,
    /// or when `V ⊆ U` and `c + sum_{U \ V} alpha_ii <= b` (with `V` empty this
    /// is the sum of the boxes).
    pub fn minimized(&self) -> Polyhedron {
        let ub: HashMap<usize, f64> = self.boxes.iter().copied().collect();
        let all = self.inequalities();
        let n_boxes = self.boxes.len();
        let implied = |idx: usize| -> bool {
            let q = &all[idx];
            if idx >= n_boxes {
                let box_sum: f64 = q.users.iter().map(|u| ub.get(u).copied().unwrap_or(0.0)).sum();
                if box_sum <= q.rhs + RHS_TOL {
                    return true;
                }
            }
            all.iter().enumerate().any(|(j, p)| {
                if j == idx {
                    return false;
                }
                let p_in_q = p.users.iter().all(|u| q.users.contains(u));
                let q_in_p = q.users.iter().all(|u| p.users.contains(u));
                if p_in_q && q_in_p {
                    return p.rhs < q.rhs - RHS_TOL || (p.rhs <= q.rhs + RHS_TOL && j < idx);
                }
                if q_in_p {
                    return p.rhs <= q.rhs + RHS_TOL;
                }
                if p_in_q && j >= n_boxes {
                    let extra: f64 = q
                        .users
                        .iter()
                        .filter(|u| !p.users.contains(u))
                        .map(|u| ub.get(u).copied().unwrap_or(0.0))
                        .sum();
                    return p.rhs + extra <= q.rhs + RHS_TOL;
                }
                false
            })
        };
        let keep: Vec<bool> = (0..all.len()).map(|i| !implied(i)).collect();
        let boxes = self
            .boxes
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(b, _)| *b)
            .collect();
        let cycles = self
            .cycles
            .iter()
            .zip(&keep[n_boxes..])
            .filter(|(_, &k)| k)
            .map(|(c, _)| c.clone())
            .collect();
        Polyhedron {
            k: self.k,
            silent: self.silent.clone(),
            boxes,
            cycles,
        }
    }

    fn linear_program(&self, objective: Vec<f64>) -> LinearProgram {
        let mut lp = LinearProgram::new(objective);
        let n = lp.objective.len();
        let mut row = |users: &[usize], rhs: f64| {
            let mut c = vec![0.0; n];
            for &u in users {
                c[u] = 1.0;
            }
            lp.push(Constraint::le(c, rhs));
        };
        for &s in &self.silent {
            row(&[s], 0.0);
        }
        for q in self.inequalities() {
            row(&q.users, q.rhs);
        }
        lp
    }

    /// Maximum of `sum_{i in users} d_i` over the polyhedron.
    pub fn max_sum(&self, users: &[usize]) -> Result<f64> {
        let mut w = vec![0.0; self.k];
        for &u in users {
            w[u] = 1.0;
        }
        Ok(self.linear_program(w).maximize()?.value)
    }

    /// Whether `self ⊆ other`, decided exactly by one LP per constraint of `other`.
    pub fn is_subset_of(&self, other: &Polyhedron) -> Result<bool> {
        if self.is_empty() {
            return Ok(true);
        }
        if other.is_empty() || self.k != other.k {
            return Ok(false);
        }
        let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
        let mut max_sum = |users: Vec<usize>| -> Result<f64> {
            if let Some(&v) = cache.get(&users) {
                return Ok(v);
            }
            let v = self.max_sum(&users)?;
            cache.insert(users, v);
            Ok(v)
        };
        for &s in &other.silent {
            if !self.silent.contains(&s) && max_sum(vec![s])? > EPS_LEN {
                return Ok(false);
            }
        }
        for q in other.inequalities() {
            if max_sum(q.users.clone())? > q.rhs + EPS_LEN {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Vertices of the polyhedron in lexicographic order (K <= 4).
    pub fn vertices(&self) -> Result<Vec<Vec<f64>>> {
        let k = self.k;
        if k > K_MAX_VERTICES {
            return Err(TinError::TooManyUsers {
                k,
                max: K_MAX_VERTICES,
            });
        }
        if self.is_empty() {
            return Ok(Vec::new());
        }
        // rows a.d <= b; -d_i <= 0 makes the lower bounds explicit
        let mut rows: Vec<(Vec<f64>, f64)> = (0..k)
            .map(|i| {
                let mut c = vec![0.0; k];
                c[i] = -1.0;
                (c, 0.0)
            })
            .collect();
        for &s in &self.silent {
            let mut c = vec![0.0; k];
            c[s] = 1.0;
            rows.push((c, 0.0));
        }
        rows.extend(self.inequalities().iter().map(|q| (q.coefficients(k), q.rhs)));

        let mut found: Vec<Vec<f64>> = Vec::new();
        let mut choice: Vec<usize> = (0..k).collect();
        let n = rows.len();
        loop {
            let a: Vec<Vec<f64>> = choice.iter().map(|&i| rows[i].0.clone()).collect();
            let b: Vec<f64> = choice.iter().map(|&i| rows[i].1).collect();
            if let Some(x) = solve_square(a, b) {
                let feasible = rows.iter().all(|(c, rhs)| {
                    c.iter().zip(&x).map(|(a, v)| a * v).sum::<f64>() <= rhs + 1e-9
                });
                if feasible {
                    let x: Vec<f64> = x.iter().map(|v| if v.abs() < 1e-12 { 0.0 } else { *v }).collect();
                    if !found
                        .iter()
                        .any(|y| y.iter().zip(&x).all(|(p, q)| (p - q).abs() < 1e-9))
                    {
                        found.push(x);
                    }
                }
            }
            let Some(pos) = (0..k).rev().find(|&p| choice[p] != p + n - k) else {
                break;
            };
            choice[pos] += 1;
            for q in pos + 1..k {
                choice[q] = choice[q - 1] + 1;
            }
        }
        found.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Ok(found)
    }
}

/// Gaussian elimination with partial pivoting; `None` for singular systems.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[row][c] -= f * a[col][c];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn normalize_users(alpha: &ChannelMatrix, users: &[usize]) -> Result<Vec<usize>> {
    for &u in users {
        alpha.check_user(u)?;
    }
    let mut v = users.to_vec();
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

/// `P_S` for the silent set `silent`.
pub fn polyhedral_region(alpha: &ChannelMatrix, silent: &[usize]) -> Result<Polyhedron> {
    let silent = normalize_users(alpha, silent)?;
    let active: Vec<usize> = (0..alpha.users()).filter(|i| !silent.contains(i)).collect();
    let boxes = active.iter().map(|&i| (i, alpha.direct(i))).collect();
    let cycles = enumerate_cycles(&active)
        .into_iter()
        .map(|seq| CycleBound {
            rhs: seq.bound_rhs(alpha),
            seq,
        })
        .collect();
    Ok(Polyhedron {
        k: alpha.users(),
        silent,
        boxes,
        cycles,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionMember {
    pub silent: Vec<usize>,
    pub polyhedron: Polyhedron,
    /// Index of a member containing this one, if any.
    pub subsumed_by: Option<usize>,
}

/// The general TIN region as a union of `P_S` over all silent sets.
#[derive(Debug, Clone, PartialEq)]
pub struct TinRegion {
    pub k: usize,
    /// Ordered by silent-set size, then lexicographically.
    pub members: Vec<RegionMember>,
    /// Two points of the union whose midpoint lies outside it.
    pub nonconvex_witness: Option<(Vec<f64>, Vec<f64>)>,
}

impl TinRegion {
    pub fn maximal(&self) -> impl Iterator<Item = &RegionMember> {
        self.members.iter().filter(|m| m.subsumed_by.is_none())
    }

    /// Membership by checking every member polyhedron.
    pub fn contains(&self, d: &[f64], tol: f64) -> bool {
        self.members.iter().any(|m| m.polyhedron.contains(d, tol))
    }
}

fn silent_sets(k: usize) -> Vec<Vec<usize>> {
    let mut sets: Vec<Vec<usize>> = (0u32..1 << k)
        .map(|mask| (0..k).filter(|&i| mask >> i & 1 == 1).collect())
        .collect();
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    sets
}

/// Enumerates all `2^K` polyhedra `P_S` and flags the ones contained in another member.
pub fn general_tin_region(alpha: &ChannelMatrix) -> Result<TinRegion> {
    let k = alpha.users();
    if k > K_MAX_UNION {
        return Err(TinError::TooManyUsers { k, max: K_MAX_UNION });
    }
    let sets = silent_sets(k);
    let polys: Vec<Polyhedron> = map_maybe_parallel(&sets, |s| polyhedral_region(alpha, s))
        .into_iter()
        .collect::<Result<_>>()?;

    let n = polys.len();
    let subsumed: Vec<Option<usize>> = map_maybe_parallel(&(0..n).collect::<Vec<_>>(), |&i| {
        for j in 0..n {
            if i == j || !polys[i].is_subset_of(&polys[j])? {
                continue;
            }
            // equal sets: keep the earlier member
            if j > i && polys[j].is_subset_of(&polys[i])? {
                continue;
            }
            return Ok(Some(j));
        }
        Ok(None)
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let members: Vec<RegionMember> = sets
        .into_iter()
        .zip(polys)
        .zip(subsumed)
        .map(|((silent, polyhedron), subsumed_by)| RegionMember {
            silent,
            polyhedron,
            subsumed_by,
        })
        .collect();
    let mut region = TinRegion {
        k,
        members,
        nonconvex_witness: None,
    };
    region.nonconvex_witness = find_nonconvex_witness(&region)?;
    Ok(region)
}

/// Looks for maximizers of two maximal members whose midpoint leaves the union.
fn find_nonconvex_witness(region: &TinRegion) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    let maximal: Vec<&RegionMember> = region.maximal().collect();
    if maximal.len() < 2 {
        return Ok(None);
    }
    let k = region.k;
    let mut directions: Vec<Vec<f64>> = vec![vec![1.0; k]];
    directions.extend((0..k).map(|i| {
        let mut w = vec![0.0; k];
        w[i] = 1.0;
        w
    }));
    let candidates = |m: &RegionMember| -> Result<Vec<Vec<f64>>> {
        directions
            .iter()
            .map(|w| max_weighted_gdof(&m.polyhedron, w).map(|o| o.point))
            .collect()
    };
    for a in 0..maximal.len() {
        for b in a + 1..maximal.len() {
            for x in candidates(maximal[a])? {
                for y in candidates(maximal[b])? {
                    let mid: Vec<f64> = x.iter().zip(&y).map(|(p, q)| 0.5 * (p + q)).collect();
                    if !region.contains(&mid, EPS_LEN) {
                        return Ok(Some((x, y)));
                    }
                }
            }
        }
    }
    Ok(None)
}

#[cfg(feature = "parallel")]
fn map_maybe_parallel<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_maybe_parallel<T, R>(items: &[T], f: impl Fn(&T) -> R) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Outcome of a TIN-region membership query.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMembership {
    /// Users with zero GDoF (within `EPS_LEN`); the query is decided in `P_silent`.
    pub silent: Vec<usize>,
    /// Certificate in original user labels; feasible exponents mark silent users.
    pub certificate: MembershipCertificate,
}

impl RegionMembership {
    pub fn is_member(&self) -> bool {
        self.certificate.is_feasible()
    }
}

/// Decides `d ∈ P*`. Only `P_Z` with `Z = {i : d_i = 0}` has to be checked,
/// since every `P_S` with `S ⊆ Z` restricted to `d_Z = 0` lies inside `P_Z`.
pub fn point_in_tin_region(alpha: &ChannelMatrix, d: &GdofTuple) -> Result<RegionMembership> {
    alpha.check_len(d.len())?;
    let d = d.as_slice();
    let silent: Vec<usize> = (0..d.len()).filter(|&i| d[i] <= EPS_LEN).collect();
    let active: Vec<usize> = (0..d.len()).filter(|&i| d[i] > EPS_LEN).collect();
    if active.is_empty() {
        let r = PowerExponents::new(vec![Power::Silent; d.len()])?;
        return Ok(RegionMembership {
            silent,
            certificate: MembershipCertificate::Feasible { r },
        });
    }
    let sub = alpha.restrict(&active)?;
    let sub_d: Vec<f64> = active.iter().map(|&i| d[i]).collect();
    let certificate = match decide_membership(&build_graph(&sub, &sub_d)?) {
        MembershipCertificate::Feasible { r } => {
            let mut full = vec![Power::Silent; d.len()];
            for (pos, &user) in active.iter().enumerate() {
                full[user] = r.get(pos);
            }
            MembershipCertificate::Feasible {
                r: PowerExponents::new(full)?,
            }
        }
        MembershipCertificate::Infeasible {
            detected,
            cycle,
            mut bound,
        } => {
            let relabel = |nodes: Vec<Node>| -> Vec<Node> {
                nodes
                    .into_iter()
                    .map(|v| match v {
                        Node::User(i) => Node::User(active[i]),
                        Node::Ground => Node::Ground,
                    })
                    .collect()
            };
            bound.users = bound.users.iter().map(|&i| active[i]).collect();
            bound.kind = match bound.kind {
                BoundKind::Box { user } => BoundKind::Box {
                    user: active[user],
                },
                BoundKind::Cycle(seq) => BoundKind::Cycle(seq.map_users(&active)),
            };
            MembershipCertificate::Infeasible {
                detected: relabel(detected),
                cycle: relabel(cycle),
                bound,
            }
        }
    };
    Ok(RegionMembership {
        silent,
        certificate,
    })
}

/// Maximizer of a nonnegative weighted sum over a polyhedron.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedOptimum {
    pub value: f64,
    /// Among all maximizers, one maximizing the smallest GDoF of the positively weighted users.
    pub point: Vec<f64>,
    /// Solution of the first-stage LP (optimal vertex and dual multipliers).
    pub vertex: LpSolution,
    /// Whether the first-stage LP passed its primal/dual certificate check.
    pub certified: bool,
}

/// Maximizes `sum_i w_i d_i` over `poly`.
pub fn max_weighted_gdof(poly: &Polyhedron, weights: &[f64]) -> Result<WeightedOptimum> {
    let k = poly.users();
    if weights.len() != k {
        return Err(TinError::DimensionMismatch {
            expected: k,
            found: weights.len(),
        });
    }
    if let Some((user, &value)) = weights
        .iter()
        .enumerate()
        .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
    {
        return Err(TinError::NegativeWeight { user, value });
    }
    let lp = poly.linear_program(weights.to_vec());
    let vertex = lp.maximize()?;
    let certified = lp.certify(&vertex, 1e-9);
    let value = vertex.value;

    let weighted: Vec<usize> = (0..k).filter(|&i| weights[i] > 0.0).collect();
    let point = if weighted.is_empty() {
        vertex.x.clone()
    } else {
        // second stage over (d, t): max t with w.d >= value, d_i >= t on weighted users
        let mut objective = vec![0.0; k + 1];
        objective[k] = 1.0;
        let mut fair = LinearProgram::new(objective);
        for c in &lp.constraints {
            let mut coeffs = c.coeffs.clone();
            coeffs.push(0.0);
            fair.push(Constraint::le(coeffs, c.rhs));
        }
        let mut wrow = weights.to_vec();
        wrow.push(0.0);
        fair.push(Constraint::ge(wrow, value - 1e-12 * value.abs().max(1.0)));
        for &i in &weighted {
            let mut coeffs = vec![0.0; k + 1];
            coeffs[i] = -1.0;
            coeffs[k] = 1.0;
            fair.push(Constraint::le(coeffs, 0.0));
        }
        match fair.maximize() {
            Ok(sol) => sol.x[..k].to_vec(),
            Err(_) => vertex.x.clone(),
        }
    };
    Ok(WeightedOptimum {
        value,
        point,
        vertex,
        certified,
    })
}

/// Whether every `P_S` is contained in `P_∅`, as guaranteed when the optimality condition holds.
pub fn collapses_to_polyhedral(alpha: &ChannelMatrix) -> Result<bool> {
    let full = polyhedral_region(alpha, &[])?;
    for s in silent_sets(alpha.users()).into_iter().skip(1) {
        if !polyhedral_region(alpha, &s)?.is_subset_of(&full)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Convenience: the condition verdict alongside the collapse check.
pub fn condition_and_collapse(alpha: &ChannelMatrix) -> Result<(bool, bool)> {
    Ok((check_tin_condition(alpha).holds, collapses_to_polyhedral(alpha)?))
}
