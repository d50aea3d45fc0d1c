//! Channel strength levels, TIN GDoF formulas and the TIN optimality condition.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TinError};

/// Absolute tolerance of the `>=` comparison in the optimality condition.
pub const EPS_COND: f64 = 1e-9;

/// Channel strength levels of a K-user interference channel.
///
/// Entry `(rx, tx)` is the exponent `alpha_{rx,tx}` of the link from
/// transmitter `tx` to receiver `rx`, so the received power of that link at
/// nominal power `P` is `P^alpha`. Diagonal entries are the direct links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct ChannelMatrix {
    k: usize,
    alpha: Vec<f64>,
}

impl ChannelMatrix {
    /// Builds a channel from receiver-major rows.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(TinError::EmptyChannel);
        }
        let mut alpha = Vec::with_capacity(k * k);
        for (row, values) in rows.into_iter().enumerate() {
            if values.len() != k {
                return Err(TinError::DimensionMismatch {
                    expected: k,
                    found: values.len(),
                });
            }
            for (col, value) in values.into_iter().enumerate() {
                if !value.is_finite() {
                    return Err(TinError::NonFinite { row, col, value });
                }
                if value < 0.0 {
                    return Err(TinError::NegativeStrength { row, col, value });
                }
                alpha.push(value);
            }
        }
        Ok(Self { k, alpha })
    }

    pub fn from_fn(k: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::new(
            (0..k)
                .map(|rx| (0..k).map(|tx| f(rx, tx)).collect())
                .collect(),
        )
    }

    /// Derives strength levels from linear-scale SNRs and INRs.
    ///
    /// `inr[rx][tx]` is the INR of transmitter `tx` at receiver `rx`; the
    /// diagonal of `inr` is ignored. Ratios below 1 are clipped to 1, so the
    /// resulting exponents are all nonnegative.
    pub fn from_link_budget(snr: &[f64], inr: &[Vec<f64>], nominal_p: f64) -> Result<Self> {
        if !(nominal_p.is_finite() && nominal_p > 1.0) {
            return Err(TinError::InvalidNominalPower(nominal_p));
        }
        let k = snr.len();
        if inr.len() != k {
            return Err(TinError::DimensionMismatch {
                expected: k,
                found: inr.len(),
            });
        }
        let log_p = nominal_p.ln();
        let exponent = |row: usize, col: usize, value: f64| -> Result<f64> {
            if !(value.is_finite() && value > 0.0) {
                return Err(TinError::NonPositiveRatio { row, col, value });
            }
            Ok(value.max(1.0).ln() / log_p)
        };
        let mut rows = Vec::with_capacity(k);
        for rx in 0..k {
            if inr[rx].len() != k {
                return Err(TinError::DimensionMismatch {
                    expected: k,
                    found: inr[rx].len(),
                });
            }
            let mut row = Vec::with_capacity(k);
            for tx in 0..k {
                let value = if rx == tx { snr[rx] } else { inr[rx][tx] };
                row.push(exponent(rx, tx, value)?);
            }
            rows.push(row);
        }
        Self::new(rows)
    }

    /// Number of users K.
    pub fn users(&self) -> usize {
        self.k
    }

    /// Strength of the link from transmitter `tx` to receiver `rx`.
    #[inline]
    pub fn get(&self, rx: usize, tx: usize) -> f64 {
        self.alpha[rx * self.k + tx]
    }

    #[inline]
    pub fn direct(&self, user: usize) -> f64 {
        self.get(user, user)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.alpha.chunks(self.k).map(<[f64]>::to_vec).collect()
    }

    /// Strongest interference received at receiver `user` (0 when K = 1).
    pub fn max_incoming(&self, user: usize) -> f64 {
        (0..self.k)
            .filter(|&tx| tx != user)
            .map(|tx| self.get(user, tx))
            .fold(0.0, f64::max)
    }

    /// Strongest interference caused by transmitter `user` (0 when K = 1).
    pub fn max_outgoing(&self, user: usize) -> f64 {
        (0..self.k)
            .filter(|&rx| rx != user)
            .map(|rx| self.get(rx, user))
            .fold(0.0, f64::max)
    }

    /// Reciprocal network: transmitters and receivers swap roles.
    pub fn transpose(&self) -> Self {
        let k = self.k;
        let mut alpha = vec![0.0; k * k];
        for rx in 0..k {
            for tx in 0..k {
                alpha[tx * k + rx] = self.get(rx, tx);
            }
        }
        Self { k, alpha }
    }

    /// Sub-channel formed by `users` (in the given order).
    pub fn restrict(&self, users: &[usize]) -> Result<Self> {
        for &u in users {
            self.check_user(u)?;
        }
        Self::from_fn(users.len(), |rx, tx| self.get(users[rx], users[tx]))
    }

    /// Multiplies every exponent by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(TinError::InvalidConfig(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        Ok(Self {
            k: self.k,
            alpha: self.alpha.iter().map(|a| a * factor).collect(),
        })
    }

    pub fn max_entry(&self) -> f64 {
        self.alpha.iter().copied().fold(0.0, f64::max)
    }

    pub(crate) fn check_user(&self, user: usize) -> Result<()> {
        if user < self.k {
            Ok(())
        } else {
            Err(TinError::UserOutOfRange { user, k: self.k })
        }
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len == self.k {
            Ok(())
        } else {
            Err(TinError::DimensionMismatch {
                expected: self.k,
                found: len,
            })
        }
    }
}

impl TryFrom<Vec<Vec<f64>>> for ChannelMatrix {
    type Error = TinError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<ChannelMatrix> for Vec<Vec<f64>> {
    fn from(ch: ChannelMatrix) -> Self {
        ch.rows()
    }
}

/// Transmit power exponent of one user: power `P^r` with `r <= 0`, or silent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Power {
    Level(f64),
    Silent,
}

impl Power {
    pub fn level(self) -> Option<f64> {
        match self {
            Power::Level(r) => Some(r),
            Power::Silent => None,
        }
    }

    pub fn is_silent(self) -> bool {
        matches!(self, Power::Silent)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerExponents(Vec<Power>);

impl PowerExponents {
    pub fn new(levels: Vec<Power>) -> Result<Self> {
        for (user, p) in levels.iter().enumerate() {
            if let Power::Level(value) = *p {
                if !(value.is_finite() && value <= 0.0) {
                    return Err(TinError::InvalidPowerExponent { user, value });
                }
            }
        }
        Ok(Self(levels))
    }

    /// All users active with the given finite exponents.
    pub fn from_levels(levels: &[f64]) -> Result<Self> {
        Self::new(levels.iter().map(|&r| Power::Level(r)).collect())
    }

    /// Full power for every user.
    pub fn full(k: usize) -> Self {
        Self(vec![Power::Level(0.0); k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Power] {
        &self.0
    }

    pub fn get(&self, user: usize) -> Power {
        self.0[user]
    }

    /// Finite exponents, or `None` if any user is silent.
    pub fn levels(&self) -> Option<Vec<f64>> {
        self.0.iter().map(|p| p.level()).collect()
    }
}

/// A GDoF point, one entry per user.
#[derive(Debug, Clone, PartialEq)]
pub struct GdofTuple(Vec<f64>);

impl GdofTuple {
    /// Validated tuple: every entry finite and nonnegative.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (user, &value) in values.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(TinError::InvalidGdof { user, value });
            }
        }
        Ok(Self(values))
    }

    pub fn zeros(k: usize) -> Self {
        Self(vec![0.0; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Interference exponent `max{0, max_{j != i, j active} alpha_ij + r_j}` seen at receiver `i`.
fn interference_exponent(alpha: &ChannelMatrix, r: &PowerExponents, i: usize) -> f64 {
    (0..alpha.users())
        .filter(|&j| j != i)
        .filter_map(|j| r.get(j).level().map(|rj| alpha.get(i, j) + rj))
        .fold(0.0, f64::max)
}

/// GDoF achieved by power control and TIN:
/// `d_i = max{0, alpha_ii + r_i - max{0, max_{j != i}(alpha_ij + r_j)}}`.
pub fn tin_gdof(alpha: &ChannelMatrix, r: &PowerExponents) -> Result<GdofTuple> {
    alpha.check_len(r.len())?;
    let d = (0..alpha.users())
        .map(|i| match r.get(i) {
            Power::Silent => 0.0,
            Power::Level(ri) => {
                (alpha.direct(i) + ri - interference_exponent(alpha, r, i)).max(0.0)
            }
        })
        .collect();
    Ok(GdofTuple(d))
}

/// Polyhedral relaxation of [`tin_gdof`]: the outer clamp at zero is dropped,
/// so entries may be negative. Silent users are not allowed.
pub fn polyhedral_tin_gdof(alpha: &ChannelMatrix, r: &PowerExponents) -> Result<Vec<f64>> {
    alpha.check_len(r.len())?;
    if let Some(user) = r.as_slice().iter().position(|p| p.is_silent()) {
        return Err(TinError::SilentInRelaxation { user });
    }
    Ok((0..alpha.users())
        .map(|i| {
            let ri = r.get(i).level().unwrap_or_default();
            alpha.direct(i) + ri - interference_exponent(alpha, r, i)
        })
        .collect())
}

/// Per-user outcome of the TIN optimality condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserCondition {
    pub user: usize,
    pub direct: f64,
    /// Strongest interference caused by this user's transmitter.
    pub max_outgoing: f64,
    /// Strongest interference at this user's receiver.
    pub max_incoming: f64,
    /// `direct - max_outgoing - max_incoming`.
    pub margin: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub users: Vec<UserCondition>,
    pub holds: bool,
}

impl ConditionReport {
    pub fn failing_users(&self) -> Vec<usize> {
        self.users
            .iter()
            .filter(|u| !u.passes)
            .map(|u| u.user)
            .collect()
    }
}

/// Checks `alpha_ii >= max_{j != i} alpha_ji + max_{k != i} alpha_ik` for every user.
pub fn check_tin_condition(alpha: &ChannelMatrix) -> ConditionReport {
    let users: Vec<UserCondition> = (0..alpha.users())
        .map(|i| {
            let direct = alpha.direct(i);
            let max_outgoing = alpha.max_outgoing(i);
            let max_incoming = alpha.max_incoming(i);
            let margin = direct - max_outgoing - max_incoming;
            UserCondition {
                user: i,
                direct,
                max_outgoing,
                max_incoming,
                margin,
                passes: margin >= -EPS_COND,
            }
        })
        .collect();
    let holds = users.iter().all(|u| u.passes);
    ConditionReport { users, holds }
}
