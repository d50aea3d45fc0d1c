//! JSON and CSV documents.
//!
//! Users are labelled 1..K in every document. Real numbers are written with
//! 12 significant digits so that files are byte-stable across platforms.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::channel::{ChannelMatrix, ConditionReport, Power, PowerExponents};
use crate::error::{Result, TinError};
use crate::gap::{GapReport, LimitReport};
use crate::netsim::{Estimate, NetworkInstance};
use crate::potential::{MembershipCertificate, Node};
use crate::region::{CycleBound, CyclicSequence, Polyhedron, RegionMembership, TinRegion};

/// Rounds to 12 significant digits; `-0` becomes `0`.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let y: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    if y == 0.0 {
        0.0
    } else {
        y
    }
}

/// A number as written in every document.
pub fn num(x: f64) -> String {
    serde_json::to_string(&round_sig(x)).unwrap_or_else(|_| x.to_string())
}

fn labels(users: &[usize]) -> Vec<usize> {
    users.iter().map(|u| u + 1).collect()
}

fn unlabel(users: &[usize], k: usize) -> Result<Vec<usize>> {
    users
        .iter()
        .map(|&u| {
            if u == 0 || u > k {
                Err(TinError::UserOutOfRange { user: u, k })
            } else {
                Ok(u - 1)
            }
        })
        .collect()
}

/// `{"K": n, "alpha": [[...]], "nominal_P": x}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    #[serde(rename = "K")]
    pub k: usize,
    pub alpha: Vec<Vec<f64>>,
    #[serde(rename = "nominal_P", default, skip_serializing_if = "Option::is_none")]
    pub nominal_p: Option<f64>,
}

impl ChannelFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn channel(&self) -> Result<ChannelMatrix> {
        if self.alpha.len() != self.k {
            return Err(TinError::DimensionMismatch {
                expected: self.k,
                found: self.alpha.len(),
            });
        }
        if let Some(p) = self.nominal_p {
            if !(p.is_finite() && p > 1.0) {
                return Err(TinError::InvalidNominalPower(p));
            }
        }
        ChannelMatrix::new(self.alpha.clone())
    }

    pub fn from_channel(alpha: &ChannelMatrix, nominal_p: Option<f64>) -> Self {
        Self {
            k: alpha.users(),
            alpha: alpha
                .rows()
                .into_iter()
                .map(|row| row.into_iter().map(round_sig).collect())
                .collect(),
            nominal_p: nominal_p.map(round_sig),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDoc {
    pub user: usize,
    pub ub: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleDoc {
    pub seq: Vec<usize>,
    pub rhs: f64,
}

/// `{"K": n, "silent": [...], "boxes": [{"user", "ub"}], "cycles": [{"seq", "rhs"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionDoc {
    #[serde(rename = "K")]
    pub k: usize,
    pub silent: Vec<usize>,
    pub boxes: Vec<BoxDoc>,
    pub cycles: Vec<CycleDoc>,
}

impl RegionDoc {
    pub fn from_polyhedron(p: &Polyhedron) -> Self {
        Self {
            k: p.users(),
            silent: labels(p.silent()),
            boxes: p
                .boxes()
                .iter()
                .map(|&(u, ub)| BoxDoc {
                    user: u + 1,
                    ub: round_sig(ub),
                })
                .collect(),
            cycles: p
                .cycles()
                .iter()
                .map(|c| CycleDoc {
                    seq: labels(c.seq.users()),
                    rhs: round_sig(c.rhs),
                })
                .collect(),
        }
    }

    pub fn to_polyhedron(&self) -> Result<Polyhedron> {
        let k = self.k;
        let silent = unlabel(&self.silent, k)?;
        let boxes = self
            .boxes
            .iter()
            .map(|b| Ok((unlabel(&[b.user], k)?[0], b.ub)))
            .collect::<Result<Vec<_>>>()?;
        let cycles = self
            .cycles
            .iter()
            .map(|c| {
                Ok(CycleBound {
                    seq: CyclicSequence::new(unlabel(&c.seq, k)?)?,
                    rhs: c.rhs,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Polyhedron::from_parts(k, silent, boxes, cycles)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("region documents serialize")
    }
}

/// Re-emits a region document in canonical form.
pub fn canonical_region_json(text: &str) -> Result<String> {
    let p = RegionDoc::parse(text)?.to_polyhedron()?;
    Ok(RegionDoc::from_polyhedron(&p).to_json())
}

fn point_value(d: &[f64]) -> Value {
    Value::from(d.iter().map(|&x| round_sig(x)).collect::<Vec<f64>>())
}

/// The union of all `P_S` with subsumption flags and the convexity verdict.
pub fn union_json(region: &TinRegion) -> Value {
    let members: Vec<Value> = region
        .members
        .iter()
        .map(|m| {
            let by = m
                .subsumed_by
                .map(|j| json!(labels(&region.members[j].silent)))
                .unwrap_or(Value::Null);
            json!({
                "silent": labels(&m.silent),
                "subsumed_by": by,
                "region": RegionDoc::from_polyhedron(&m.polyhedron),
            })
        })
        .collect();
    let maximal: Vec<Vec<usize>> = region.maximal().map(|m| labels(&m.silent)).collect();
    let witness = region
        .nonconvex_witness
        .as_ref()
        .map(|(a, b)| json!([point_value(a), point_value(b)]))
        .unwrap_or(Value::Null);
    json!({
        "K": region.k,
        "maximal": maximal,
        "convex": region.nonconvex_witness.is_none(),
        "nonconvex_witness": witness,
        "members": members,
    })
}

/// Power exponents with `null` for silent users.
pub fn power_value(r: &PowerExponents) -> Value {
    Value::from(
        r.as_slice()
            .iter()
            .map(|p| match p {
                Power::Level(x) => Value::from(round_sig(*x)),
                Power::Silent => Value::Null,
            })
            .collect::<Vec<Value>>(),
    )
}

pub fn parse_power(values: &[Option<f64>]) -> Result<PowerExponents> {
    PowerExponents::new(
        values
            .iter()
            .map(|v| v.map_or(Power::Silent, Power::Level))
            .collect(),
    )
}

fn node_value(n: &Node) -> Value {
    match n {
        Node::User(i) => Value::from(i + 1),
        Node::Ground => Value::from("u"),
    }
}

/// `{"feasible", "r", "violated_cycle", "violated_bound"}`.
pub fn certificate_json(cert: &MembershipCertificate) -> Value {
    match cert {
        MembershipCertificate::Feasible { r } => json!({
            "feasible": true,
            "r": power_value(r),
            "violated_cycle": Value::Null,
            "violated_bound": Value::Null,
        }),
        MembershipCertificate::Infeasible { cycle, bound, .. } => json!({
            "feasible": false,
            "r": Value::Null,
            "violated_cycle": cycle.iter().map(node_value).collect::<Vec<_>>(),
            "violated_bound": {
                "users": labels(&bound.users),
                "rhs": round_sig(bound.rhs),
                "lhs": round_sig(bound.lhs),
            },
        }),
    }
}

/// Certificate plus the silent set the query was decided in.
pub fn membership_json(m: &RegionMembership) -> Value {
    let mut v = certificate_json(&m.certificate);
    v["silent_set"] = json!(labels(&m.silent));
    v
}

pub fn condition_json(report: &ConditionReport) -> Value {
    let users: Vec<Value> = report
        .users
        .iter()
        .map(|u| {
            json!({
                "user": u.user + 1,
                "direct": round_sig(u.direct),
                "max_outgoing": round_sig(u.max_outgoing),
                "max_incoming": round_sig(u.max_incoming),
                "margin": round_sig(u.margin),
                "passes": u.passes,
            })
        })
        .collect();
    json!({ "holds": report.holds, "users": users })
}

fn reals(xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&x| round_sig(x)).collect()
}

/// Normalized cyclic quantities at each `P` next to their limits.
pub fn limit_report_json(report: &LimitReport, tol: f64) -> Value {
    let points: Vec<Value> = report
        .points
        .iter()
        .map(|p| {
            json!({
                "P": round_sig(p.p),
                "kappa_ratio": round_sig(p.kappa_ratio),
                "kappa_error": round_sig(p.kappa_error),
                "rho_ratios": reals(&p.rho_ratios),
                "rho_errors": reals(&p.rho_errors),
            })
        })
        .collect();
    json!({
        "seq": labels(report.seq.users()),
        "kappa_limit": round_sig(report.kappa_limit),
        "rho_limits": reals(&report.rho_limits),
        "points": points,
        "monotone": report.monotone(),
        "final_error": round_sig(report.final_error()),
        "tolerance": round_sig(tol),
        "converged": report.converged(tol),
    })
}

pub fn gap_report_json(report: &GapReport, slack: f64) -> Value {
    let entries: Vec<Value> = report
        .entries
        .iter()
        .map(|e| {
            json!({
                "constraint_type": e.constraint.kind(),
                "users": labels(&e.constraint.users()),
                "analytic_sigma": round_sig(e.analytic_sigma),
                "empirical_sigma": round_sig(e.empirical_sigma),
                "bound_bits": round_sig(e.bound_bits),
                "achieved_bits": round_sig(e.achieved_bits),
            })
        })
        .collect();
    json!({
        "K": report.k,
        "P": round_sig(report.p),
        "d": reals(&report.d),
        "r": power_value(&report.r),
        "rates": reals(&report.rates),
        "gap_bits": round_sig(report.gap_bits()),
        "holds": report.holds(slack),
        "entries": entries,
    })
}

/// Positions and channel of one simulated layout.
pub fn instance_json(inst: &NetworkInstance) -> Value {
    let points = |ps: &[[f64; 2]]| -> Vec<Vec<f64>> { ps.iter().map(|p| reals(p)).collect() };
    json!({
        "K": inst.users(),
        "tx_positions": points(&inst.tx_positions),
        "rx_positions": points(&inst.rx_positions),
        "nominal_P": round_sig(inst.nominal_p),
        "alpha": inst.alpha.rows().iter().map(|r| reals(r)).collect::<Vec<_>>(),
        "condition_holds": inst.condition_holds(),
    })
}

pub fn estimate_json(e: &Estimate) -> Value {
    json!({
        "K": e.k,
        "coverage_radius_m": round_sig(e.coverage_radius_m),
        "trials": e.trials,
        "successes": e.successes,
        "prob": round_sig(e.prob),
        "ci_low": round_sig(e.ci_low),
        "ci_high": round_sig(e.ci_high),
    })
}

/// One row per vertex, columns `d1..dK`.
pub fn vertices_csv(k: usize, vertices: &[Vec<f64>]) -> String {
    let header: Vec<String> = (1..=k).map(|i| format!("d{i}")).collect();
    let mut out = header.join(",");
    out.push('\n');
    for v in vertices {
        let row: Vec<String> = v.iter().map(|&x| num(x)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("documents serialize");
    s.push('\n');
    s
}
