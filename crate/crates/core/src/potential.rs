//! Potential-function characterization of the polyhedral TIN region.
//!
//! For a channel `alpha` and a target GDoF tuple `d`, the graph has one node
//! per user plus a ground node `u`, with arc lengths
//!
//! * `l(v_i, v_j) = alpha_ii - d_i - alpha_ij` for `i != j`,
//! * `l(v_i, u)   = alpha_ii - d_i`,
//! * `l(u, v_i)   = 0`.
//!
//! `d` is achievable by polyhedral TIN iff the graph admits a potential, i.e.
//! iff no directed circuit has negative length. Shortest-path distances from
//! `u` are such a potential and double as power exponents `r_i = p(v_i)`.

use std::fmt;

use crate::channel::{ChannelMatrix, GdofTuple, Power, PowerExponents};
use crate::error::{Result, TinError};
use crate::region::CyclicSequence;

/// Tolerance on circuit lengths: circuits no shorter than `-EPS_LEN` count as nonnegative.
pub const EPS_LEN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    User(usize),
    Ground,
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::User(i) => write!(f, "v{}", i + 1),
            Node::Ground => f.write_str("u"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcClass {
    /// `(v_i, v_j)`, one per ordered user pair.
    UserToUser,
    /// `(v_i, u)`.
    UserToGround,
    /// `(u, v_i)`.
    GroundToUser,
}

impl ArcClass {
    /// Slack added to the arc length during shortest-path search. Every circuit
    /// picks up at least `EPS_LEN` in total, so circuits of length in
    /// `[-EPS_LEN, 0)` are treated as nonnegative, while ground-to-user arcs stay
    /// at exactly zero and keep the recovered exponents `<= 0`.
    fn slack(self) -> f64 {
        match self {
            ArcClass::UserToUser => 0.5 * EPS_LEN,
            ArcClass::UserToGround => EPS_LEN,
            ArcClass::GroundToUser => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub from: Node,
    pub to: Node,
    pub class: ArcClass,
    pub length: f64,
}

/// The K+1 node graph for a fixed `(alpha, d)`.
#[derive(Debug, Clone)]
pub struct PotentialGraph {
    alpha: ChannelMatrix,
    d: Vec<f64>,
    arcs: Vec<Arc>,
}

impl PotentialGraph {
    pub fn users(&self) -> usize {
        self.alpha.users()
    }

    pub fn alpha(&self) -> &ChannelMatrix {
        &self.alpha
    }

    pub fn target(&self) -> &[f64] {
        &self.d
    }

    /// Arcs in fixed order: user-to-user (row-major), user-to-ground, ground-to-user.
    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn length(&self, from: Node, to: Node) -> Option<f64> {
        let k = self.users();
        let index = match (from, to) {
            (Node::User(i), Node::User(j)) if i != j && i < k && j < k => {
                i * (k - 1) + if j < i { j } else { j - 1 }
            }
            (Node::User(i), Node::Ground) if i < k => k * (k - 1) + i,
            (Node::Ground, Node::User(i)) if i < k => k * (k - 1) + k + i,
            _ => return None,
        };
        Some(self.arcs[index].length)
    }

    /// Total length of the closed walk visiting `nodes` in order.
    pub fn cycle_length(&self, nodes: &[Node]) -> Option<f64> {
        let m = nodes.len();
        if m < 2 {
            return None;
        }
        (0..m).try_fold(0.0, |acc, j| {
            self.length(nodes[j], nodes[(j + 1) % m]).map(|l| acc + l)
        })
    }

    fn node_index(&self, node: Node) -> usize {
        match node {
            Node::User(i) => i,
            Node::Ground => self.users(),
        }
    }

    fn node_at(&self, index: usize) -> Node {
        if index == self.users() {
            Node::Ground
        } else {
            Node::User(index)
        }
    }
}

/// Builds the potential graph; `d` may contain negative entries here.
pub fn build_graph(alpha: &ChannelMatrix, d: &[f64]) -> Result<PotentialGraph> {
    alpha.check_len(d.len())?;
    if let Some((user, &value)) = d.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(TinError::InvalidGdof { user, value });
    }
    let k = alpha.users();
    let mut arcs = Vec::with_capacity(k * k + k);
    for i in 0..k {
        for j in (0..k).filter(|&j| j != i) {
            arcs.push(Arc {
                from: Node::User(i),
                to: Node::User(j),
                class: ArcClass::UserToUser,
                length: alpha.direct(i) - d[i] - alpha.get(i, j),
            });
        }
    }
    for i in 0..k {
        arcs.push(Arc {
            from: Node::User(i),
            to: Node::Ground,
            class: ArcClass::UserToGround,
            length: alpha.direct(i) - d[i],
        });
    }
    for i in 0..k {
        arcs.push(Arc {
            from: Node::Ground,
            to: Node::User(i),
            class: ArcClass::GroundToUser,
            length: 0.0,
        });
    }
    Ok(PotentialGraph {
        alpha: alpha.clone(),
        d: d.to_vec(),
        arcs,
    })
}

/// Which region inequality a negative circuit violates.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundKind {
    /// `d_i <= alpha_ii`, from the circuit `(u, v_i, u)`.
    Box { user: usize },
    /// Cycle bound `sum_j d_{i_j} <= sum_j (alpha_{i_j i_j} - alpha_{i_{j-1} i_j})`.
    Cycle(CyclicSequence),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolatedBound {
    pub kind: BoundKind,
    /// Sorted users in the support of the inequality.
    pub users: Vec<usize>,
    pub rhs: f64,
    /// `sum_{i in users} d_i` at the tested point.
    pub lhs: f64,
}

impl ViolatedBound {
    /// `rhs - lhs`; negative for a violated bound.
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MembershipCertificate {
    /// Power exponents achieving at least the requested GDoF.
    Feasible { r: PowerExponents },
    Infeasible {
        /// Negative circuit as found by the search, in arc order.
        detected: Vec<Node>,
        /// Circuit after folding ground-node detours into a direct arc.
        cycle: Vec<Node>,
        bound: ViolatedBound,
    },
}

impl MembershipCertificate {
    pub fn is_feasible(&self) -> bool {
        matches!(self, MembershipCertificate::Feasible { .. })
    }

    pub fn power(&self) -> Option<&PowerExponents> {
        match self {
            MembershipCertificate::Feasible { r } => Some(r),
            MembershipCertificate::Infeasible { .. } => None,
        }
    }

    pub fn violated_bound(&self) -> Option<&ViolatedBound> {
        match self {
            MembershipCertificate::Feasible { .. } => None,
            MembershipCertificate::Infeasible { bound, .. } => Some(bound),
        }
    }
}

type Edge = (usize, usize, f64);

/// Shortest distances from `source` plus the first arc still relaxable after
/// `n - 1` rounds, which exists iff a negative circuit is reachable.
fn bellman_ford(
    n: usize,
    source: usize,
    edges: &[Edge],
) -> (Vec<f64>, Vec<usize>, Option<Edge>) {
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![usize::MAX; n];
    dist[source] = 0.0;
    for _ in 0..n - 1 {
        let mut changed = false;
        for &(a, b, w) in edges {
            if dist[a] + w < dist[b] {
                dist[b] = dist[a] + w;
                pred[b] = a;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let relaxed = edges.iter().copied().find(|&(a, b, w)| dist[a] + w < dist[b]);
    (dist, pred, relaxed)
}

fn to_power(dist: &[f64]) -> PowerExponents {
    let r = dist.iter().map(|&x| Power::Level(x + 0.0)).collect();
    PowerExponents::new(r).expect("shortest distances from ground are <= 0")
}

/// Bellman-Ford from the ground node with negative-circuit detection.
///
/// Feasibility is decided on slightly lengthened arcs, so circuits of length
/// within `EPS_LEN` of zero count as nonnegative. The returned exponents are
/// shortest distances for the exact lengths when rounding permits, and
/// otherwise for lengths within a tiny fraction of `EPS_LEN` (or, failing
/// that, the lengthened ones, accurate to `EPS_LEN`).
pub fn decide_membership(graph: &PotentialGraph) -> MembershipCertificate {
    let n = graph.users() + 1;
    let ground = n - 1;
    let lengthened = |scale: f64| -> Vec<(usize, usize, f64)> {
        graph
            .arcs()
            .iter()
            .map(|a| {
                (
                    graph.node_index(a.from),
                    graph.node_index(a.to),
                    a.length + scale * a.class.slack(),
                )
            })
            .collect()
    };

    let (mut dist, mut pred, relaxed) = bellman_ford(n, ground, &lengthened(1.0));
    let Some((a, b, w)) = relaxed else {
        // tighter potentials when rounding allows: zero-length circuits need a hair of slack
        for scale in [0.0, 1e-5] {
            let (tight, _, relaxed) = bellman_ford(n, ground, &lengthened(scale));
            if relaxed.is_none() {
                dist = tight;
                break;
            }
        }
        return MembershipCertificate::Feasible {
            r: to_power(&dist[..n - 1]),
        };
    };
    dist[b] = dist[a] + w;
    pred[b] = a;

    // n predecessor steps are guaranteed to land on the circuit.
    let mut start = b;
    for _ in 0..n {
        start = pred[start];
    }
    let mut back = vec![start];
    let mut cursor = pred[start];
    while cursor != start {
        back.push(cursor);
        cursor = pred[cursor];
    }
    back.reverse();
    let detected: Vec<Node> = back.iter().map(|&i| graph.node_at(i)).collect();
    let (cycle, bound) = normalize_circuit(graph, &detected);
    MembershipCertificate::Infeasible {
        detected,
        cycle,
        bound,
    }
}

/// Reduces a negative circuit to a box or cycle bound. A detour
/// `v_m -> u -> v_1` is replaced by the direct arc `v_m -> v_1`, which is no
/// longer since `alpha_{m,1} >= 0`.
fn normalize_circuit(graph: &PotentialGraph, detected: &[Node]) -> (Vec<Node>, ViolatedBound) {
    let alpha = graph.alpha();
    let d = graph.target();
    let users: Vec<usize> = match detected.iter().position(|&v| v == Node::Ground) {
        None => detected
            .iter()
            .filter_map(|v| match v {
                Node::User(i) => Some(*i),
                Node::Ground => None,
            })
            .collect(),
        Some(g) => {
            let m = detected.len();
            (1..m)
                .filter_map(|step| match detected[(g + step) % m] {
                    Node::User(i) => Some(i),
                    Node::Ground => None,
                })
                .collect()
        }
    };

    if users.len() == 1 {
        let user = users[0];
        let bound = ViolatedBound {
            kind: BoundKind::Box { user },
            users: vec![user],
            rhs: alpha.direct(user),
            lhs: d[user],
        };
        return (vec![Node::Ground, Node::User(user)], bound);
    }

    let seq = CyclicSequence::new(users).expect("circuit users are distinct");
    let rhs = seq.bound_rhs(alpha);
    let mut support = seq.users().to_vec();
    support.sort_unstable();
    let lhs = support.iter().map(|&i| d[i]).sum();
    let cycle = seq.users().iter().map(|&i| Node::User(i)).collect();
    let bound = ViolatedBound {
        kind: BoundKind::Cycle(seq),
        users: support,
        rhs,
        lhs,
    };
    (cycle, bound)
}

/// Builds the graph for `d >= 0` and decides membership in the polyhedral TIN region.
pub fn recover_power_allocation(
    alpha: &ChannelMatrix,
    d: &GdofTuple,
) -> Result<MembershipCertificate> {
    let graph = build_graph(alpha, d.as_slice())?;
    Ok(decide_membership(&graph))
}
