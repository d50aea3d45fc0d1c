//! Finite-SNR quantities: cyclic outer bounds, TIN rates and constant-gap certificates.
//!
//! All logarithms are base 2. Powers `P^a` are never formed explicitly; every
//! quantity is evaluated from exponents in bits, `a * log2 P`.

use crate::channel::{check_tin_condition, ChannelMatrix, GdofTuple, Power, PowerExponents};
use crate::error::{Result, TinError};
use crate::potential::{recover_power_allocation, MembershipCertificate};
use crate::region::{enumerate_cycles, CyclicSequence};

/// Slack allowed between consecutive errors when checking monotone convergence.
pub const MONOTONE_SLACK: f64 = 1e-3;

/// `log2(sum_i 2^{x_i})`.
pub fn log2_sum_exp2(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp2()).sum::<f64>().log2()
}

/// `log2(1 + 2^x)` without overflow.
pub fn log2_one_plus_exp2(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    x.max(0.0) + (-x.abs()).exp2().ln_1p() / std::f64::consts::LN_2
}

/// A channel at a fixed nominal power `P`: `SNR_i = P^{alpha_ii}`, `INR_ki = P^{alpha_ki}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSnrChannel {
    alpha: ChannelMatrix,
    p: f64,
    log2_p: f64,
}

impl FiniteSnrChannel {
    pub fn new(alpha: ChannelMatrix, p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(TinError::InvalidNominalPower(p));
        }
        Ok(Self {
            alpha,
            p,
            log2_p: p.log2(),
        })
    }

    pub fn alpha(&self) -> &ChannelMatrix {
        &self.alpha
    }

    pub fn nominal_power(&self) -> f64 {
        self.p
    }

    pub fn log2_p(&self) -> f64 {
        self.log2_p
    }

    /// `log2 SNR_i`.
    pub fn snr_bits(&self, user: usize) -> f64 {
        self.alpha.direct(user) * self.log2_p
    }

    /// `log2 INR_{rx,tx}`.
    pub fn inr_bits(&self, rx: usize, tx: usize) -> f64 {
        self.alpha.get(rx, tx) * self.log2_p
    }

    /// Linear-scale SNR (may overflow to infinity for huge exponents).
    pub fn snr(&self, user: usize) -> f64 {
        self.snr_bits(user).exp2()
    }

    pub fn inr(&self, rx: usize, tx: usize) -> f64 {
        self.inr_bits(rx, tx).exp2()
    }
}

/// Cyclic outer-bound quantities, indexed by position in the cycle.
///
/// For position `j` with user `i_j`: `SNR = P^{alpha_{i_j i_j}}`, the user's own
/// interference `INR_j = P^{alpha_{i_{j-1} i_j}}` (its transmitter at the previous
/// receiver) and `INR_{j+1} = P^{alpha_{i_j i_{j+1}}}` (the next transmitter at its receiver).
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicBoundQuantities {
    pub seq: CyclicSequence,
    pub kappa: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub rho: Vec<f64>,
}

impl CyclicBoundQuantities {
    pub fn kappa_sum(&self) -> f64 {
        self.kappa.iter().sum()
    }

    /// `min{sum kappa, rho_1, ..., rho_m}`, the sum-rate bound over the whole cycle.
    pub fn sum_rate_bound(&self) -> f64 {
        self.rho.iter().copied().fold(self.kappa_sum(), f64::min)
    }

    /// Bound on `R_{j} + ... + R_{j+l-1}` for a window of `l` consecutive positions
    /// (`2 <= l <= m - 1`).
    pub fn window_bound(&self, start: usize, len: usize) -> Option<f64> {
        let m = self.kappa.len();
        if len < 2 || len >= m || start >= m {
            return None;
        }
        let at = |o: usize| (start + o) % m;
        let inner: f64 = (1..len - 1).map(|o| self.kappa[at(o)]).sum();
        let last = self.beta[at(len - 1)];
        let a = self.gamma[at(0)] + inner + last;
        let b = self.mu[at(0)] + self.kappa[at(0)] + inner + last;
        Some(a.min(b))
    }

    /// Bound on the cycle sum rate plus `R` of position `pos`.
    pub fn sum_plus_one_bound(&self, pos: usize) -> f64 {
        let others: f64 = (0..self.kappa.len())
            .filter(|&j| j != pos)
            .map(|j| self.kappa[j])
            .sum();
        self.beta[pos] + self.gamma[pos] + others
    }
}

/// Evaluates the six cyclic quantities along `cycle`.
pub fn cyclic_quantities(ch: &FiniteSnrChannel, cycle: &CyclicSequence) -> Result<CyclicBoundQuantities> {
    let users = cycle.users();
    for &u in users {
        ch.alpha.check_user(u)?;
    }
    let m = users.len();
    let mut q = CyclicBoundQuantities {
        seq: cycle.clone(),
        kappa: Vec::with_capacity(m),
        beta: Vec::with_capacity(m),
        gamma: Vec::with_capacity(m),
        lambda: Vec::with_capacity(m),
        mu: Vec::with_capacity(m),
        rho: Vec::with_capacity(m),
    };
    for j in 0..m {
        let cur = users[j];
        let prev = users[(j + m - 1) % m];
        let next = users[(j + 1) % m];
        let snr = ch.snr_bits(cur);
        let inr_own = ch.inr_bits(prev, cur);
        let inr_next = ch.inr_bits(cur, next);
        let one_plus_own = log2_one_plus_exp2(inr_own);
        q.kappa.push(log2_sum_exp2(&[0.0, inr_next, snr - one_plus_own]));
        q.beta.push(log2_one_plus_exp2(snr) - one_plus_own);
        q.gamma.push(log2_sum_exp2(&[0.0, inr_next, snr]));
        q.lambda.push(log2_one_plus_exp2(snr));
        q.mu.push(one_plus_own);
    }
    let kappa_sum: f64 = q.kappa.iter().sum();
    for k in 0..m {
        let prev = (k + m - 1) % m;
        q.rho.push(q.beta[prev] + q.gamma[k] + kappa_sum - q.kappa[k] - q.kappa[prev]);
    }
    Ok(q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitPoint {
    pub p: f64,
    /// `sum kappa / log2 P`.
    pub kappa_ratio: f64,
    /// `rho_k / log2 P` for each position.
    pub rho_ratios: Vec<f64>,
    pub kappa_error: f64,
    pub rho_errors: Vec<f64>,
}

impl LimitPoint {
    pub fn max_error(&self) -> f64 {
        self.rho_errors.iter().copied().fold(self.kappa_error, f64::max)
    }
}

/// Convergence of the normalized cyclic quantities to their GDoF limits.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    pub seq: CyclicSequence,
    /// `sum_j (alpha_{i_j i_j} - alpha_{i_{j-1} i_j})`.
    pub kappa_limit: f64,
    /// `alpha_{i_k i_k} + sum_{j != k} (alpha_{i_j i_j} - alpha_{i_{j-1} i_j})`.
    pub rho_limits: Vec<f64>,
    pub points: Vec<LimitPoint>,
}

impl LimitReport {
    /// Every error sequence is nonincreasing in `P`, up to [`MONOTONE_SLACK`].
    pub fn monotone(&self) -> bool {
        self.points.windows(2).all(|w| {
            w[1].kappa_error <= w[0].kappa_error + MONOTONE_SLACK
                && w[1]
                    .rho_errors
                    .iter()
                    .zip(&w[0].rho_errors)
                    .all(|(b, a)| *b <= a + MONOTONE_SLACK)
        })
    }

    pub fn final_error(&self) -> f64 {
        self.points.last().map_or(f64::INFINITY, LimitPoint::max_error)
    }

    pub fn converged(&self, tol: f64) -> bool {
        self.monotone() && self.final_error() < tol
    }
}

/// Evaluates `sum kappa / log2 P` and `rho_k / log2 P` at each `P` and compares
/// them with their limits. The optimality condition must hold on the users of
/// the cycle.
pub fn gdof_limit_checks(alpha: &ChannelMatrix, cycle: &CyclicSequence, p_list: &[f64]) -> Result<LimitReport> {
    let users = cycle.users();
    for &u in users {
        alpha.check_user(u)?;
    }
    let sub = alpha.restrict(&cycle.support())?;
    let report = check_tin_condition(&sub);
    if !report.holds {
        let support = cycle.support();
        return Err(TinError::ConditionViolated(
            report.failing_users().into_iter().map(|i| support[i]).collect(),
        ));
    }
    if p_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(TinError::InvalidConfig("P values must be strictly increasing".into()));
    }
    let kappa_limit = cycle.bound_rhs(alpha);
    let m = users.len();
    let rho_limits: Vec<f64> = (0..m)
        .map(|k| {
            let cur = users[k];
            let prev = users[(k + m - 1) % m];
            kappa_limit - (alpha.direct(cur) - alpha.get(prev, cur)) + alpha.direct(cur)
        })
        .collect();
    let mut points = Vec::with_capacity(p_list.len());
    for &p in p_list {
        let ch = FiniteSnrChannel::new(alpha.clone(), p)?;
        let q = cyclic_quantities(&ch, cycle)?;
        let l = ch.log2_p();
        let kappa_ratio = q.kappa_sum() / l;
        let rho_ratios: Vec<f64> = q.rho.iter().map(|r| r / l).collect();
        points.push(LimitPoint {
            p,
            kappa_ratio,
            kappa_error: (kappa_ratio - kappa_limit).abs(),
            rho_errors: rho_ratios
                .iter()
                .zip(&rho_limits)
                .map(|(a, b)| (a - b).abs())
                .collect(),
            rho_ratios,
        });
    }
    Ok(LimitReport {
        seq: cycle.clone(),
        kappa_limit,
        rho_limits,
        points,
    })
}

/// Shannon rates of power control with TIN:
/// `R_i = log2(1 + P^{r_i + alpha_ii} / (1 + sum_{j != i} P^{r_j + alpha_ij}))`.
/// Silent users have zero rate and cause no interference.
pub fn tin_rates(ch: &FiniteSnrChannel, r: &PowerExponents) -> Result<Vec<f64>> {
    let alpha = &ch.alpha;
    alpha.check_len(r.len())?;
    let l = ch.log2_p;
    Ok((0..alpha.users())
        .map(|i| match r.get(i) {
            Power::Silent => 0.0,
            Power::Level(ri) => {
                let mut terms = vec![0.0];
                terms.extend((0..alpha.users()).filter(|&j| j != i).filter_map(|j| {
                    r.get(j).level().map(|rj| (rj + alpha.get(i, j)) * l)
                }));
                log2_one_plus_exp2((ri + alpha.direct(i)) * l - log2_sum_exp2(&terms))
            }
        })
        .collect())
}

/// A rate outer bound in its exact form and the linearized form `a log2 P + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateBound {
    /// A single user or a cyclic sequence.
    pub constraint: GapConstraint,
    pub exact: f64,
    pub linearized: f64,
    /// GDoF coefficient `a` of the linearized form.
    pub gdof_rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GapConstraint {
    User(usize),
    Cycle(CyclicSequence),
}

impl GapConstraint {
    pub fn users(&self) -> Vec<usize> {
        match self {
            GapConstraint::User(u) => vec![*u],
            GapConstraint::Cycle(seq) => seq.users().to_vec(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            GapConstraint::User(_) => "user",
            GapConstraint::Cycle(_) => "cycle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterBounds {
    /// The bounds are valid outer bounds only when the optimality condition holds.
    pub condition_holds: bool,
    pub bounds: Vec<RateBound>,
}

fn user_bound(ch: &FiniteSnrChannel, i: usize) -> RateBound {
    let a = ch.alpha.direct(i);
    RateBound {
        constraint: GapConstraint::User(i),
        exact: log2_one_plus_exp2(a * ch.log2_p),
        linearized: a * ch.log2_p + 1.0,
        gdof_rhs: a,
    }
}

fn cycle_bound(ch: &FiniteSnrChannel, seq: &CyclicSequence) -> Result<RateBound> {
    let q = cyclic_quantities(ch, seq)?;
    let rhs = seq.bound_rhs(&ch.alpha);
    Ok(RateBound {
        constraint: GapConstraint::Cycle(seq.clone()),
        exact: q.kappa_sum(),
        linearized: rhs * ch.log2_p + seq.len() as f64 * 3f64.log2(),
        gdof_rhs: rhs,
    })
}

/// Per-user bounds `log2(1 + P^{alpha_ii})` and per-cycle bounds `sum_j kappa_j`.
pub fn rate_outer_bounds(ch: &FiniteSnrChannel) -> Result<OuterBounds> {
    let k = ch.alpha.users();
    let mut bounds: Vec<RateBound> = (0..k).map(|i| user_bound(ch, i)).collect();
    let users: Vec<usize> = (0..k).collect();
    for seq in enumerate_cycles(&users) {
        bounds.push(cycle_bound(ch, &seq)?);
    }
    Ok(OuterBounds {
        condition_holds: check_tin_condition(&ch.alpha).holds,
        bounds,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapEntry {
    pub constraint: GapConstraint,
    /// Linearized outer bound minus linearized inner bound.
    pub analytic_sigma: f64,
    /// Exact outer bound minus exact TIN rate, less the GDoF slack `(rhs - sum d) log2 P`.
    pub empirical_sigma: f64,
    /// Exact outer bound in bits.
    pub bound_bits: f64,
    /// Exact TIN (sum) rate in bits.
    pub achieved_bits: f64,
    pub linearized_outer: f64,
    /// `sum (rhs coefficient) log2 P - |users| log2 K`.
    pub linearized_inner: f64,
}

/// Constant-gap certificate of one GDoF point at one nominal power.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub k: usize,
    pub p: f64,
    pub d: Vec<f64>,
    pub r: PowerExponents,
    pub rates: Vec<f64>,
    pub entries: Vec<GapEntry>,
}

impl GapReport {
    /// `log2(3K)`, the gap of the theorem.
    pub fn gap_bits(&self) -> f64 {
        (3.0 * self.k as f64).log2()
    }

    /// Analytic per-user gaps are below `log2(3K)`, cycle gaps are at most
    /// `m log2(3K)`, and no empirical gap exceeds its analytic value by more than `slack`.
    pub fn holds(&self, slack: f64) -> bool {
        let g = self.gap_bits();
        self.entries.iter().all(|e| {
            let cap = match &e.constraint {
                GapConstraint::User(_) => e.analytic_sigma < g,
                GapConstraint::Cycle(seq) => e.analytic_sigma <= seq.len() as f64 * g + slack,
            };
            cap && e.empirical_sigma <= e.analytic_sigma + slack
        })
    }

    /// Achieved rate minus the linearized lower bound `d_i log2 P - log2 K`, per user.
    pub fn inner_margins(&self) -> Vec<f64> {
        let l = self.p.log2();
        let lk = (self.k as f64).log2();
        self.rates
            .iter()
            .zip(&self.d)
            .map(|(rate, d)| rate - (d * l - lk))
            .collect()
    }
}

/// Certifies the `log2(3K)` gap at `d`, a point of the polyhedral TIN region.
pub fn gap_certificate(ch: &FiniteSnrChannel, d: &GdofTuple) -> Result<GapReport> {
    let alpha = &ch.alpha;
    alpha.check_len(d.len())?;
    let condition = check_tin_condition(alpha);
    if !condition.holds {
        return Err(TinError::ConditionViolated(condition.failing_users()));
    }
    let r = match recover_power_allocation(alpha, d)? {
        MembershipCertificate::Feasible { r } => r,
        MembershipCertificate::Infeasible { .. } => return Err(TinError::InfeasiblePoint),
    };
    let rates = tin_rates(ch, &r)?;
    let k = alpha.users();
    let l = ch.log2_p;
    let lk = (k as f64).log2();
    let dv = d.as_slice();
    let outer = rate_outer_bounds(ch)?;
    let entries = outer
        .bounds
        .into_iter()
        .map(|b| {
            let users = b.constraint.users();
            let m = users.len() as f64;
            let d_sum: f64 = users.iter().map(|&u| dv[u]).sum();
            let achieved: f64 = users.iter().map(|&u| rates[u]).sum();
            let linearized_inner = b.gdof_rhs * l - m * lk;
            GapEntry {
                analytic_sigma: b.linearized - linearized_inner,
                empirical_sigma: b.exact - achieved - (b.gdof_rhs - d_sum) * l,
                bound_bits: b.exact,
                achieved_bits: achieved,
                linearized_outer: b.linearized,
                linearized_inner,
                constraint: b.constraint,
            }
        })
        .collect();
    Ok(GapReport {
        k,
        p: ch.p,
        d: dv.to_vec(),
        r,
        rates,
        entries,
    })
}

pub const GAP_CSV_HEADER: &str =
    "instance_id,constraint_type,users,P,analytic_sigma,empirical_sigma,bound_bits,achieved_bits";

impl GapReport {
    /// CSV rows (without header); users are 1-based and joined with `-` in cycle order.
    pub fn csv_rows(&self, instance_id: &str) -> Vec<String> {
        use crate::format::num;
        self.entries
            .iter()
            .map(|e| {
                let users: Vec<String> = e
                    .constraint
                    .users()
                    .iter()
                    .map(|u| (u + 1).to_string())
                    .collect();
                format!(
                    "{},{},{},{},{},{},{},{}",
                    instance_id,
                    e.constraint.kind(),
                    users.join("-"),
                    num(self.p),
                    num(e.analytic_sigma),
                    num(e.empirical_sigma),
                    num(e.bound_bits),
                    num(e.achieved_bits)
                )
            })
            .collect()
    }
}
