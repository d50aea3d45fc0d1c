//! Monte-Carlo layouts: how often does the TIN optimality condition hold in a cell?
//!
//! K base stations are dropped uniformly in a disk-shaped cell; receiver `i` is
//! dropped uniformly in the coverage disk of base station `i`. Link gains follow
//! the Erceg suburban path-loss model and the transmit power is chosen so that the
//! median SNR at the coverage boundary equals a target.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{check_tin_condition, ChannelMatrix};
use crate::error::{Result, TinError};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Erceg terrain categories: A is hilly with moderate-to-heavy tree density,
/// B is hilly with light tree density (or flat with moderate-to-heavy), C is flat
/// with light tree density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Terrain {
    A,
    B,
    C,
}

impl FromStr for Terrain {
    type Err = TinError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(Terrain::A),
            "B" => Ok(Terrain::B),
            "C" => Ok(Terrain::C),
            _ => Err(TinError::InvalidConfig(format!("unknown terrain category {s:?}"))),
        }
    }
}

/// Constants of the Erceg model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErcegParams {
    pub a: f64,
    /// Per metre of base-station height.
    pub b: f64,
    /// Metres.
    pub c: f64,
    /// Standard deviation of the path-loss exponent across links.
    pub sigma_gamma: f64,
    /// Mean and standard deviation of the per-link shadowing spread (dB).
    pub mu_sigma: f64,
    pub sigma_sigma: f64,
    /// Coefficient of the receive-height correction `-h * log10(h_r / 2)`.
    pub height_coeff: f64,
}

impl ErcegParams {
    pub fn category(t: Terrain) -> Self {
        match t {
            Terrain::A => Self {
                a: 4.6,
                b: 0.0075,
                c: 12.6,
                sigma_gamma: 0.57,
                mu_sigma: 10.6,
                sigma_sigma: 2.3,
                height_coeff: 10.8,
            },
            Terrain::B => Self {
                a: 4.0,
                b: 0.0065,
                c: 17.1,
                sigma_gamma: 0.75,
                mu_sigma: 9.6,
                sigma_sigma: 3.0,
                height_coeff: 10.8,
            },
            Terrain::C => Self {
                a: 3.6,
                b: 0.005,
                c: 20.0,
                sigma_gamma: 0.59,
                mu_sigma: 8.2,
                sigma_sigma: 1.6,
                height_coeff: 20.0,
            },
        }
    }
}

/// Random variation of the path loss around its median.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shadowing {
    Off,
    /// Independent Gaussian (in dB) shadowing per link.
    LogNormal { sigma_db: f64 },
    /// Erceg's statistical model: per-link path-loss exponent and shadowing
    /// spread, both truncated Gaussians.
    Erceg,
}

impl FromStr for Shadowing {
    type Err = TinError;

    /// `off`, `erceg`, or `lognormal:<sigma_db>`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "off" | "none" => Ok(Shadowing::Off),
            "erceg" => Ok(Shadowing::Erceg),
            _ => {
                let sigma = lower
                    .strip_prefix("lognormal:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|v| v.is_finite() && *v >= 0.0)
                    .ok_or_else(|| TinError::InvalidConfig(format!("unknown shadowing {s:?}")))?;
                Ok(Shadowing::LogNormal { sigma_db: sigma })
            }
        }
    }
}

impl fmt::Display for Shadowing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shadowing::Off => write!(f, "off"),
            Shadowing::LogNormal { sigma_db } => write!(f, "lognormal:{sigma_db}"),
            Shadowing::Erceg => write!(f, "erceg"),
        }
    }
}

/// How the nominal power `P` of an instance is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NominalPolicy {
    /// Largest clipped SNR/INR of the instance, at least 2.
    MaxClipped,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub cell_radius_m: f64,
    pub coverage_radius_m: f64,
    pub k: usize,
    pub carrier_freq_mhz: f64,
    pub noise_floor_dbm: f64,
    pub boundary_snr_db: f64,
    pub trials: u64,
    pub master_seed: u64,
    pub shadowing: Shadowing,
    pub terrain: Terrain,
    pub erceg: ErcegParams,
    pub bs_height_m: f64,
    pub rx_height_m: f64,
    pub d0_m: f64,
    /// Sum of transmit and receive antenna gains.
    pub antenna_gain_db: f64,
    /// Apply Erceg's frequency and receive-height corrections.
    pub corrections: bool,
    pub nominal: NominalPolicy,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            cell_radius_m: 1000.0,
            coverage_radius_m: 100.0,
            k: 10,
            carrier_freq_mhz: 2000.0,
            noise_floor_dbm: -110.0,
            boundary_snr_db: 0.0,
            trials: 2000,
            master_seed: 0,
            shadowing: Shadowing::Erceg,
            terrain: Terrain::B,
            erceg: ErcegParams::category(Terrain::B),
            bs_height_m: 30.0,
            rx_height_m: 2.0,
            d0_m: 100.0,
            antenna_gain_db: 0.0,
            corrections: true,
            nominal: NominalPolicy::MaxClipped,
        }
    }
}

impl SimConfig {
    pub fn with_terrain(mut self, t: Terrain) -> Self {
        self.terrain = t;
        self.erceg = ErcegParams::category(t);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(TinError::InvalidConfig(m.to_string()));
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if self.k == 0 {
            return bad("K must be at least 1");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if !(pos(self.coverage_radius_m) && pos(self.cell_radius_m)) {
            return bad("radii must be positive");
        }
        if self.coverage_radius_m > self.cell_radius_m {
            return bad("coverage radius exceeds the cell radius");
        }
        if !(pos(self.carrier_freq_mhz) && pos(self.d0_m) && pos(self.bs_height_m) && pos(self.rx_height_m)) {
            return bad("frequency, reference distance and heights must be positive");
        }
        if let Shadowing::LogNormal { sigma_db } = self.shadowing {
            if !(sigma_db.is_finite() && sigma_db >= 0.0) {
                return bad("shadowing sigma must be nonnegative");
            }
        }
        if let NominalPolicy::Fixed(p) = self.nominal {
            if !(p.is_finite() && p > 1.0) {
                return Err(TinError::InvalidNominalPower(p));
            }
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / (self.carrier_freq_mhz * 1e6)
    }

    /// Median path-loss exponent `a - b h_b + c / h_b`.
    pub fn gamma(&self) -> f64 {
        self.erceg.a - self.erceg.b * self.bs_height_m + self.erceg.c / self.bs_height_m
    }

    fn free_space_db(&self, d: f64) -> f64 {
        20.0 * (4.0 * std::f64::consts::PI * d / self.wavelength_m()).log10()
    }

    fn correction_db(&self) -> f64 {
        if !self.corrections {
            return 0.0;
        }
        6.0 * (self.carrier_freq_mhz / 2000.0).log10()
            - self.erceg.height_coeff * (self.rx_height_m / 2.0).log10()
    }

    fn pathloss_with_gamma(&self, d: f64, gamma: f64) -> f64 {
        if d < self.d0_m {
            self.free_space_db(d)
        } else {
            self.free_space_db(self.d0_m) + 10.0 * gamma * (d / self.d0_m).log10() + self.correction_db()
        }
    }
}

/// Median Erceg path loss in dB; free-space loss below the reference distance.
pub fn erceg_pathloss(distance_m: f64, cfg: &SimConfig) -> Result<f64> {
    if !(distance_m.is_finite() && distance_m > 0.0) {
        return Err(TinError::InvalidConfig(format!(
            "distance must be positive, got {distance_m}"
        )));
    }
    Ok(cfg.pathloss_with_gamma(distance_m, cfg.gamma()))
}

/// One random layout and its channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkInstance {
    pub tx_positions: Vec<[f64; 2]>,
    pub rx_positions: Vec<[f64; 2]>,
    /// `pathloss_db[rx][tx]`, including shadowing.
    pub pathloss_db: Vec<Vec<f64>>,
    /// Linear SNR (diagonal) and INR (off-diagonal), before clipping.
    pub snr_inr_linear: Vec<Vec<f64>>,
    pub nominal_p: f64,
    pub alpha: ChannelMatrix,
}

impl NetworkInstance {
    pub fn users(&self) -> usize {
        self.tx_positions.len()
    }

    /// Receiver-to-own-transmitter distances.
    pub fn own_link_distances(&self) -> Vec<f64> {
        self.tx_positions
            .iter()
            .zip(&self.rx_positions)
            .map(|(t, r)| dist(*t, *r))
            .collect()
    }

    /// The channel recomputed at another nominal power.
    pub fn alpha_with_nominal(&self, p: f64) -> Result<ChannelMatrix> {
        let snr: Vec<f64> = (0..self.users()).map(|i| self.snr_inr_linear[i][i]).collect();
        ChannelMatrix::from_link_budget(&snr, &self.snr_inr_linear, p)
    }

    pub fn condition_holds(&self) -> bool {
        check_tin_condition(&self.alpha).holds
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn uniform_in_disk(rng: &mut ChaCha8Rng, center: [f64; 2], radius: f64) -> [f64; 2] {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    [center[0] + r * theta.cos(), center[1] + r * theta.sin()]
}

fn truncated_normal(rng: &mut ChaCha8Rng, limit: f64) -> f64 {
    loop {
        let x: f64 = rng.sample(StandardNormal);
        if x.abs() <= limit {
            return x;
        }
    }
}

/// The RNG of one trial: the master seed selects the key, the trial the stream.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// Draws the layout of trial `trial`; deterministic in `(cfg, trial)`.
pub fn sample_network(cfg: &SimConfig, trial: u64) -> Result<NetworkInstance> {
    cfg.validate()?;
    let mut rng = trial_rng(cfg.master_seed, trial);
    let k = cfg.k;
    let tx: Vec<[f64; 2]> = (0..k)
        .map(|_| uniform_in_disk(&mut rng, [0.0, 0.0], cfg.cell_radius_m))
        .collect();
    let rx: Vec<[f64; 2]> = tx
        .iter()
        .map(|&t| uniform_in_disk(&mut rng, t, cfg.coverage_radius_m))
        .collect();

    let boundary = cfg.pathloss_with_gamma(cfg.coverage_radius_m, cfg.gamma());
    let mut pathloss = vec![vec![0.0; k]; k];
    let mut linear = vec![vec![0.0; k]; k];
    let mut max_clipped: f64 = 1.0;
    for i in 0..k {
        for j in 0..k {
            // coincident points would give an infinite gain; a millimetre is close enough
            let d = dist(rx[i], tx[j]).max(1e-3);
            let pl = match cfg.shadowing {
                Shadowing::Off => cfg.pathloss_with_gamma(d, cfg.gamma()),
                Shadowing::LogNormal { sigma_db } => {
                    let y: f64 = rng.sample(StandardNormal);
                    cfg.pathloss_with_gamma(d, cfg.gamma()) + sigma_db * y
                }
                Shadowing::Erceg => {
                    let x = truncated_normal(&mut rng, 1.5);
                    let y = truncated_normal(&mut rng, 2.0);
                    let z = truncated_normal(&mut rng, 1.5);
                    let gamma = cfg.gamma() + x * cfg.erceg.sigma_gamma;
                    let sigma = cfg.erceg.mu_sigma + z * cfg.erceg.sigma_sigma;
                    cfg.pathloss_with_gamma(d, gamma) + y * sigma
                }
            };
            // transmit power puts the median boundary SNR at the target
            let snr_db = cfg.boundary_snr_db + boundary - pl;
            pathloss[i][j] = pl;
            linear[i][j] = 10f64.powf(snr_db / 10.0);
            max_clipped = max_clipped.max(10f64.powf(snr_db.max(0.0) / 10.0));
        }
    }
    let nominal_p = match cfg.nominal {
        NominalPolicy::MaxClipped => max_clipped.max(2.0),
        NominalPolicy::Fixed(p) => p,
    };
    let snr: Vec<f64> = (0..k).map(|i| linear[i][i].max(f64::MIN_POSITIVE)).collect();
    let safe: Vec<Vec<f64>> = linear
        .iter()
        .map(|row| row.iter().map(|v| v.max(f64::MIN_POSITIVE)).collect())
        .collect();
    let alpha = ChannelMatrix::from_link_budget(&snr, &safe, nominal_p)?;
    Ok(NetworkInstance {
        tx_positions: tx,
        rx_positions: rx,
        pathloss_db: pathloss,
        snr_inr_linear: safe,
        nominal_p,
        alpha,
    })
}

/// Fraction of layouts satisfying the condition, with a Wilson 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub k: usize,
    pub coverage_radius_m: f64,
    pub trials: u64,
    pub successes: u64,
    pub prob: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (low, high)
}

#[cfg(feature = "parallel")]
fn count_successes(cfg: &SimConfig) -> Result<u64> {
    use rayon::prelude::*;
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| sample_network(cfg, t).map(|inst| u64::from(inst.condition_holds())))
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

#[cfg(not(feature = "parallel"))]
fn count_successes(cfg: &SimConfig) -> Result<u64> {
    let mut n = 0;
    for t in 0..cfg.trials {
        n += u64::from(sample_network(cfg, t)?.condition_holds());
    }
    Ok(n)
}

pub fn condition_probability(cfg: &SimConfig) -> Result<Estimate> {
    cfg.validate()?;
    let successes = count_successes(cfg)?;
    let (ci_low, ci_high) = wilson_interval(successes, cfg.trials);
    Ok(Estimate {
        k: cfg.k,
        coverage_radius_m: cfg.coverage_radius_m,
        trials: cfg.trials,
        successes,
        prob: successes as f64 / cfg.trials as f64,
        ci_low,
        ci_high,
    })
}

/// Estimates over the grid `ks x radii`, K-major.
pub fn sweep(base: &SimConfig, ks: &[usize], radii: &[f64]) -> Result<Vec<Estimate>> {
    let mut out = Vec::with_capacity(ks.len() * radii.len());
    for &k in ks {
        for &r in radii {
            let cfg = SimConfig {
                k,
                coverage_radius_m: r,
                ..base.clone()
            };
            out.push(condition_probability(&cfg)?);
        }
    }
    Ok(out)
}

pub const SWEEP_CSV_HEADER: &str = "K,coverage_radius_m,trials,prob,ci_low,ci_high";

pub fn sweep_csv(estimates: &[Estimate]) -> String {
    use crate::format::num;
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for e in estimates {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.k,
            num(e.coverage_radius_m),
            e.trials,
            num(e.prob),
            num(e.ci_low),
            num(e.ci_high)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> SimConfig {
        SimConfig {
            shadowing: Shadowing::Off,
            ..SimConfig::default()
        }
    }

    #[test]
    fn category_b_slope() {
        let cfg = quiet();
        assert!((cfg.gamma() - (4.0 - 0.195 + 0.57)).abs() < 1e-12);
    }

    #[test]
    fn reference_distance_anchor() {
        let cfg = quiet();
        let a = 20.0 * (4.0 * std::f64::consts::PI * 100.0 / cfg.wavelength_m()).log10();
        assert!((erceg_pathloss(100.0, &cfg).unwrap() - a).abs() < 1e-12);
        let twice = erceg_pathloss(200.0, &cfg).unwrap();
        assert!((twice - (a + 10.0 * cfg.gamma() * 2f64.log10())).abs() < 1e-12);
        assert!(erceg_pathloss(0.0, &cfg).is_err());
    }

    #[test]
    fn pathloss_is_monotone() {
        let cfg = quiet();
        let mut last = f64::NEG_INFINITY;
        for step in 1..3000 {
            let pl = erceg_pathloss(step as f64, &cfg).unwrap();
            assert!(pl >= last);
            last = pl;
        }
    }

    #[test]
    fn same_trial_same_instance() {
        let cfg = SimConfig::default();
        assert_eq!(sample_network(&cfg, 7).unwrap(), sample_network(&cfg, 7).unwrap());
        assert_ne!(sample_network(&cfg, 7).unwrap(), sample_network(&cfg, 8).unwrap());
    }

    #[test]
    fn receivers_stay_in_coverage() {
        let cfg = SimConfig::default();
        for t in 0..50 {
            let inst = sample_network(&cfg, t).unwrap();
            assert!(inst.own_link_distances().iter().all(|&d| d <= cfg.coverage_radius_m + 1e-9));
            assert!(inst.tx_positions.iter().all(|p| p[0].hypot(p[1]) <= cfg.cell_radius_m + 1e-9));
        }
    }

    #[test]
    fn single_user_always_satisfies() {
        let cfg = SimConfig {
            k: 1,
            trials: 200,
            ..SimConfig::default()
        };
        let e = condition_probability(&cfg).unwrap();
        assert_eq!(e.prob, 1.0);
    }

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson_interval(50, 100);
        assert!(lo < 0.5 && hi > 0.5);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
        let (lo, hi) = wilson_interval(0, 10);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0);
    }

    #[test]
    fn shadowing_parse() {
        assert_eq!("off".parse::<Shadowing>().unwrap(), Shadowing::Off);
        assert_eq!("erceg".parse::<Shadowing>().unwrap(), Shadowing::Erceg);
        assert_eq!(
            "lognormal:8".parse::<Shadowing>().unwrap(),
            Shadowing::LogNormal { sigma_db: 8.0 }
        );
        assert!("lognormal:x".parse::<Shadowing>().is_err());
    }

    #[test]
    fn config_validation() {
        let bad = SimConfig {
            coverage_radius_m: 2000.0,
            ..SimConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(SimConfig { k: 0, ..SimConfig::default() }.validate().is_err());
    }
}
